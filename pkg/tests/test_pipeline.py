"""Pipeline parsing, validation and evaluation tests."""

import json

import numpy as np
import pandas as pd
import pytest

from sylva_forge.core.exceptions import ArtifactIOError, PipelineError
from sylva_forge.models.enums import NodeKind
from sylva_forge.schema.prefabs import builtin_prefab_names
from sylva_forge.services.pipeline import (
    PLACEMENT_COLUMNS,
    evaluate,
    load_pipeline,
    parse_pipeline,
    validate,
    write_placements_csv,
)
from sylva_forge.services.terrain import heights_at

REGISTRY = {"tree", "bush"}


def document(*nodes: dict) -> str:
    return json.dumps({"nodes": list(nodes)})


def node(node_id: str, kind: str, params: dict | None = None, inputs: list[str] | None = None) -> dict:
    return {"id": node_id, "kind": kind, "params": params or {}, "inputs": inputs or []}


DENSITY = node("density", "source", {"type": "noise", "width": 16, "height": 16, "base_frequency": 0.1})
SAMPLES = node("samples", "sampling", {"r": 3.0}, ["density"])
TREES = node("trees", "placement", {"prefab": "tree"}, ["samples"])


def test_parse_two_node_graph():
    g = parse_pipeline(document(
        node("disk", "sampling", {"r": 2.0}, ["const"]),
        node("const", "source", {"type": "constant", "value": 1.0}),
    ))
    assert len(g.nodes) == 2
    assert g.edges() == [("const", "disk")]
    assert g.by_id["disk"].kind is NodeKind.SAMPLING


def test_parse_duplicate_id():
    with pytest.raises(PipelineError) as excinfo:
        parse_pipeline(document(node("a", "source", {"type": "constant", "value": 0.5}),
                                node("a", "source", {"type": "constant", "value": 0.5})))
    assert excinfo.value.node_id == "a"
    assert "'a'" in str(excinfo.value)


def test_parse_unknown_kind():
    with pytest.raises(PipelineError, match="blur"):
        parse_pipeline(document(node("x", "blur")))


def test_parse_syntax_error_reports_position():
    with pytest.raises(PipelineError, match="line 1"):
        parse_pipeline('{"nodes": [')


def test_parse_invalid_params_names_node():
    with pytest.raises(PipelineError) as excinfo:
        parse_pipeline(document(node("noise", "source", {"type": "noise", "octaves": 0})))
    assert excinfo.value.node_id == "noise"


def test_parse_rejects_unknown_keys():
    with pytest.raises(PipelineError):
        parse_pipeline(json.dumps({"nodes": [], "extra": 1}))


def test_validate_cycle():
    g = parse_pipeline(document(
        node("a", "logic", {"op": "invert"}, ["b"]),
        node("b", "logic", {"op": "invert"}, ["a"]),
    ))
    cycles = [issue for issue in validate(g) if issue.kind == "cycle"]
    assert len(cycles) == 1
    assert cycles[0].nodes == ["a", "b"]


def test_validate_cycle_through_long_chain():
    n = 5000
    g = parse_pipeline(document(*(
        node(f"n{i}", "logic", {"op": "invert"}, [f"n{(i - 1) % n}"]) for i in range(n)
    )))
    [cycle] = [issue for issue in validate(g) if issue.kind == "cycle"]
    assert cycle.nodes[:2] == ["n0", f"n{n - 1}"]
    assert len(cycle.nodes) == n


def test_validate_arity():
    g = parse_pipeline(document(
        node("s1", "source", {"type": "constant", "value": 0.2}),
        node("s2", "source", {"type": "constant", "value": 0.4}),
        node("s3", "source", {"type": "constant", "value": 0.6}),
        node("mix", "logic", {"op": "max"}, ["s1", "s2", "s3"]),
    ))
    issues = validate(g)
    assert [i.kind for i in issues] == ["arity"]
    assert issues[0].node_id == "mix"


def test_validate_unary_op_with_two_inputs():
    g = parse_pipeline(document(
        node("s1", "source", {"type": "constant", "value": 0.2}),
        node("s2", "source", {"type": "constant", "value": 0.4}),
        node("inv", "logic", {"op": "invert"}, ["s1", "s2"]),
    ))
    assert [i.kind for i in validate(g)] == ["arity"]


def test_validate_dangling_and_payload():
    g = parse_pipeline(document(
        DENSITY,
        node("bad", "placement", {"prefab": "tree"}, ["density"]),
        node("lost", "sampling", {"r": 1.0}, ["nowhere"]),
    ))
    kinds = sorted(i.kind for i in validate(g))
    assert kinds == ["dangling", "payload"]


def test_validate_shipped_pipelines(presets_dir):
    for name in ("forest_pipeline.json", "understorey_pipeline.json"):
        assert validate(load_pipeline(presets_dir / name)) == []


def test_load_missing_pipeline(tmp_path):
    with pytest.raises(ArtifactIOError):
        load_pipeline(tmp_path / "missing.json")


def test_evaluate_positions_on_terrain(small_terrain):
    g = parse_pipeline(document(DENSITY, SAMPLES, TREES))
    [placements] = evaluate(g, small_terrain, seed=1, registry=REGISTRY)
    assert placements.node_id == "trees"
    assert len(placements) > 0
    xyz = np.array([inst.position for inst in placements.instances])
    assert small_terrain.extent.contains(xyz[:, :2]).all()
    assert np.allclose(xyz[:, 2], heights_at(small_terrain, xyz[:, 0], xyz[:, 1]), atol=1e-9)
    for inst in placements.instances:
        assert 0.8 <= inst.scale <= 1.25
        assert 0.0 <= inst.twist_angle <= 0.15
        assert inst.twist_axis[0] ** 2 + inst.twist_axis[1] ** 2 == pytest.approx(1.0)


def test_evaluate_clearing(small_terrain):
    """An all-zero spawn texture empties the placement set."""
    g = parse_pipeline(document(
        DENSITY,
        SAMPLES,
        node("clearing", "source", {"type": "constant", "value": 0.0}),
        node("trees", "placement", {"prefab": "tree"}, ["samples", "clearing"]),
    ))
    [placements] = evaluate(g, small_terrain, seed=1, registry=REGISTRY)
    assert len(placements) == 0


def test_evaluate_independent_of_declaration_order_and_workers(small_terrain):
    bushes = node("bushes", "placement", {"prefab": "bush"}, ["fine"])
    fine = node("fine", "sampling", {"r_min": 1.0, "r_max": 3.0}, ["density", "inverse"])
    inverse = node("inverse", "logic", {"op": "invert"}, ["density"])
    forward = parse_pipeline(document(DENSITY, SAMPLES, TREES, inverse, fine, bushes))
    backward = parse_pipeline(document(bushes, fine, inverse, TREES, SAMPLES, DENSITY))
    a = evaluate(forward, small_terrain, seed=9, registry=REGISTRY, workers=1)
    b = evaluate(backward, small_terrain, seed=9, registry=REGISTRY, workers=8)
    assert [s.node_id for s in a] == ["bushes", "trees"]
    assert a == b


def test_evaluate_namespace_changes_streams(small_terrain):
    g = parse_pipeline(document(DENSITY, SAMPLES, TREES))
    plain = evaluate(g, small_terrain, seed=2, registry=REGISTRY)
    spaced = evaluate(g, small_terrain, seed=2, registry=REGISTRY, namespace="pipeline-0")
    assert plain != spaced


def test_evaluate_unknown_prefab(small_terrain):
    g = parse_pipeline(document(DENSITY, SAMPLES, node("trees", "placement", {"prefab": "oak"}, ["samples"])))
    with pytest.raises(PipelineError) as excinfo:
        evaluate(g, small_terrain, seed=1, registry=REGISTRY)
    assert excinfo.value.node_id == "trees"


def test_evaluate_invalid_graph(small_terrain):
    g = parse_pipeline(document(node("a", "logic", {"op": "invert"}, ["a"])))
    with pytest.raises(PipelineError):
        evaluate(g, small_terrain, seed=1, registry=REGISTRY)


def test_evaluate_region_outside_terrain(small_terrain):
    g = parse_pipeline(document(
        DENSITY,
        node("samples", "sampling", {"r": 3.0, "region": [100.0, 100.0, 120.0, 120.0]}, ["density"]),
        TREES,
    ))
    with pytest.raises(PipelineError) as excinfo:
        evaluate(g, small_terrain, seed=1, registry=REGISTRY)
    assert excinfo.value.node_id == "samples"


def test_evaluate_shipped_pipeline(presets_dir, small_terrain):
    g = load_pipeline(presets_dir / "forest_pipeline.json")
    sets = evaluate(g, small_terrain, seed=42, registry=set(builtin_prefab_names()))
    assert [s.prefab for s in sets] == ["broadleaf", "shrub"]
    assert sum(len(s) for s in sets) > 0


def test_write_placements_csv(tmp_path, small_terrain):
    g = parse_pipeline(document(DENSITY, SAMPLES, TREES))
    sets = evaluate(g, small_terrain, seed=1, registry=REGISTRY)
    path = tmp_path / "placements.csv"
    write_placements_csv(sets, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == PLACEMENT_COLUMNS
    assert len(frame) == len(sets[0])
    assert frame["index"].tolist() == list(range(len(frame)))
