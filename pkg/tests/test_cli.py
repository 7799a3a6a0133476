"""Command line tests: exit codes, artifacts and reproducibility."""

import json

import pytest

from sylva_forge.core.exceptions import EXIT_IO, EXIT_OK, EXIT_VALIDATION
from sylva_forge.main import run

MAX_SEED = "18446744073709551615"


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("forge ")


def test_unknown_flag_is_validation_error(tmp_path):
    assert run(["terrain", "--bogus", "--out", str(tmp_path / "hm.bin")]) == EXIT_VALIDATION


def test_missing_command():
    assert run([]) == EXIT_VALIDATION


@pytest.mark.parametrize("seed", ["18446744073709551616", "12.5", "0x10"])
def test_seed_must_be_decimal_64_bit(tmp_path, seed):
    assert run(["terrain", "--seed", seed, "--out", str(tmp_path / "hm.bin")]) == EXIT_VALIDATION


def test_missing_config_is_io_error(tmp_path):
    code = run(["terrain", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "hm.bin")])
    assert code == EXIT_IO


def test_invalid_config_is_validation_error(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text('{"terrain": {"width": -1}}')
    assert run(["terrain", "--config", str(config), "--out", str(tmp_path / "hm.bin")]) == EXIT_VALIDATION
    assert not (tmp_path / "hm.bin").exists()


def test_terrain_writes_manifest(tmp_path, scene_document):
    out = tmp_path / "hm.bin"
    assert run(["terrain", "--config", str(scene_document), "--seed", MAX_SEED, "--out", str(out)]) == EXIT_OK
    assert out.read_bytes()[:8] == b"SYLVHM01"
    manifest = json.loads((tmp_path / "hm.bin.manifest.json").read_text())
    assert manifest["seed"] == int(MAX_SEED)
    assert manifest["command"] == ["terrain"]
    assert manifest["artifacts"] == ["hm.bin"]
    assert "out" not in manifest["config"]["flags"]
    assert "threads" not in manifest["config"]["flags"]


def test_texture_noise_then_apply(tmp_path):
    noise = tmp_path / "noise.pgm"
    inverted = tmp_path / "inverted.pgm"
    assert run(["texture", "noise", "--width", "16", "--height", "8", "--seed", "5", "--out", str(noise)]) == EXIT_OK
    assert run(["texture", "apply", "--op", "invert", "--a", str(noise), "--out", str(inverted)]) == EXIT_OK
    assert inverted.read_bytes().startswith(b"P5")


def test_texture_apply_binary_needs_second_input(tmp_path):
    noise = tmp_path / "noise.pgm"
    run(["texture", "noise", "--width", "8", "--height", "8", "--out", str(noise)])
    code = run(["texture", "apply", "--op", "multiply", "--a", str(noise), "--out", str(tmp_path / "x.pgm")])
    assert code == EXIT_VALIDATION


def test_pipeline_validate_ok(presets_dir, capsys):
    assert run(["pipeline", "validate", "--pipeline", str(presets_dir / "forest_pipeline.json")]) == EXIT_OK
    assert "ok (6 nodes)" in capsys.readouterr().out


def test_pipeline_validate_reports_cycle(tmp_path, capsys):
    document = tmp_path / "cycle.json"
    document.write_text(
        json.dumps({
            "nodes": [
                {"id": "a", "kind": "logic", "params": {"op": "invert"}, "inputs": ["b"]},
                {"id": "b", "kind": "logic", "params": {"op": "invert"}, "inputs": ["a"]},
            ]
        })
    )
    assert run(["pipeline", "validate", "--pipeline", str(document)]) == EXIT_VALIDATION
    assert "[cycle]" in capsys.readouterr().out


def test_pipeline_run_on_preset(tmp_path, presets_dir):
    terrain = tmp_path / "hm.bin"
    placements = tmp_path / "placements.csv"
    assert run(["terrain", "--seed", "7", "--out", str(terrain)]) == EXIT_OK
    code = run([
        "pipeline", "run", "--terrain", str(terrain),
        "--pipeline", str(presets_dir / "forest_pipeline.json"),
        "--seed", "7", "--out", str(placements),
    ])
    assert code == EXIT_OK
    header = placements.read_text().splitlines()[0]
    assert "prefab" in header
    manifest = json.loads((tmp_path / "placements.csv.manifest.json").read_text())
    assert set(manifest["counts"]) >= {"broadleaf_trees", "shrubs"}


def test_pipeline_run_writes_samples(tmp_path, presets_dir):
    terrain = tmp_path / "hm.bin"
    assert run(["terrain", "--seed", "7", "--out", str(terrain)]) == EXIT_OK
    code = run([
        "pipeline", "run", "--terrain", str(terrain),
        "--pipeline", str(presets_dir / "forest_pipeline.json"),
        "--seed", "7", "--samples", "--out", str(tmp_path / "placements.csv"),
    ])
    assert code == EXIT_OK
    for node_id in ("tree_samples", "shrub_samples"):
        header = (tmp_path / f"placements.{node_id}.samples.csv").read_text().splitlines()[0]
        assert header == "x,y,parent_index"
    trees = (tmp_path / "placements.tree_samples.samples.csv").read_text().splitlines()
    assert len(trees) > 1
    manifest = json.loads((tmp_path / "placements.csv.manifest.json").read_text())
    assert "placements.tree_samples.samples.csv" in manifest["artifacts"]


def test_scene_build_is_independent_of_threads(tmp_path, scene_document):
    outputs = []
    for threads in ("1", "4"):
        out = tmp_path / f"run{threads}"
        code = run(["scene", "build", "--config", str(scene_document), "--threads", threads, "--out", str(out)])
        assert code == EXIT_OK
        outputs.append(out)
    first, second = outputs
    for name in ("scene.csv", "placements.csv", "heightmap.bin", "manifest.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_scene_build_exports(tmp_path, scene_document):
    out = tmp_path / "scene"
    code = run(["scene", "build", "--config", str(scene_document), "--ply", "--parquet", "--out", str(out)])
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert {"scene.csv", "scene.ply", "scene.parquet", "grass_density.pgm"} <= set(manifest["artifacts"])
    assert manifest["config"]["scene"]["seed"] == 3
    assert manifest["counts"]["points"] > 0


def test_eval_reference(capsys):
    assert run(["eval", "--reference", "lidar-pointnext", "--collapse", "tree"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "overall accuracy:   0.7696" in out
    assert "mean IoU:           0.4560" in out
    assert "overall accuracy:   0.9051" in out


def test_eval_unknown_reference():
    assert run(["eval", "--reference", "nope"]) == EXIT_VALIDATION


def test_eval_files_and_json(tmp_path, capsys):
    truth_a = tmp_path / "a.csv"
    truth_b = tmp_path / "b.csv"
    pred_a = tmp_path / "a.txt"
    pred_b = tmp_path / "b.txt"
    truth_a.write_text("category\nterrain\ncanopy\n")
    truth_b.write_text("category\ntrunk\nunderstorey\n")
    pred_a.write_text("terrain\ncanopy\n")
    pred_b.write_text("trunk\ncanopy\n")
    report = tmp_path / "report.json"
    code = run([
        "eval", "--truth", str(truth_a), str(truth_b),
        "--pred", str(pred_a), str(pred_b), "--json", str(report),
    ])
    assert code == EXIT_OK
    assert "mean IoU (chunked)" in capsys.readouterr().out
    document = json.loads(report.read_text())
    assert document["total"] == 4
    assert document["overall_accuracy"] == pytest.approx(0.75)


def test_eval_mismatched_lengths(tmp_path):
    truth = tmp_path / "t.csv"
    pred = tmp_path / "p.txt"
    truth.write_text("category\nterrain\ncanopy\n")
    pred.write_text("terrain\n")
    assert run(["eval", "--truth", str(truth), "--pred", str(pred)]) == EXIT_VALIDATION


def test_eval_mismatched_file_counts(tmp_path):
    truth = tmp_path / "t.csv"
    truth.write_text("category\nterrain\n")
    assert run(["eval", "--truth", str(truth), str(truth), "--pred", str(truth)]) == EXIT_VALIDATION


def test_demo_is_reproducible(tmp_path):
    """Two demo runs with one seed and different worker counts give byte-identical trees."""
    first, second = tmp_path / "a", tmp_path / "b"
    assert run(["demo", "--seed", "42", "--threads", "1", "--out", str(first)]) == EXIT_OK
    assert run(["demo", "--seed", "42", "--threads", "8", "--out", str(second)]) == EXIT_OK
    files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(second) for p in second.rglob("*") if p.is_file())
    assert any(str(p).startswith("dataset/camera/") for p in files)
    for relative in files:
        assert (first / relative).read_bytes() == (second / relative).read_bytes()
