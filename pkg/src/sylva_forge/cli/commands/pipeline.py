"""`forge pipeline`: validate a pipeline document or evaluate it on a heightmap."""

import argparse
import logging
import sys
from pathlib import Path

from sylva_forge.cli.deps import (
    add_config,
    add_out,
    add_seed,
    add_threads,
    file_store,
    load_config,
    manifest_name_for,
    resolve_seed,
    run_manifest,
)
from sylva_forge.core.exceptions import PipelineError
from sylva_forge.schema.prefabs import builtin_prefab_names
from sylva_forge.services.pipeline import evaluate, load_pipeline, validate, write_placements_csv
from sylva_forge.services.sampling import SampleSet, write_samples_csv
from sylva_forge.services.scene import pipeline_namespace
from sylva_forge.services.terrain import read_heightmap

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("pipeline", help="Placement pipelines")
    actions = parser.add_subparsers(dest="pipeline_action", required=True)

    run_parser = actions.add_parser("run", help="Evaluate a pipeline into placements")
    run_parser.add_argument("--terrain", type=Path, required=True, help="Heightmap file")
    run_parser.add_argument("--pipeline", type=Path, required=True, help="Pipeline document")
    add_config(run_parser)
    add_seed(run_parser)
    add_threads(run_parser)
    add_out(run_parser, "Placements CSV to write")
    run_parser.add_argument(
        "--samples",
        action="store_true",
        help="Also write each sampling node's points as <out stem>.<node id>.samples.csv",
    )
    run_parser.set_defaults(handler=run, command_path=("pipeline", "run"))

    check = actions.add_parser("validate", help="Report structural problems of a pipeline")
    check.add_argument("--pipeline", type=Path, required=True, help="Pipeline document")
    check.set_defaults(handler=run_validate, command_path=("pipeline", "validate"))


def run(args: argparse.Namespace) -> int:
    config, _ = load_config(args)
    seed = resolve_seed(args, config)
    hm = read_heightmap(args.terrain)
    graph = load_pipeline(args.pipeline)
    registry = set(builtin_prefab_names()) | set(config.prefabs)
    samples: dict[str, SampleSet] | None = {} if args.samples else None
    placements = evaluate(
        graph, hm, seed, registry, args.threads, pipeline_namespace(args.pipeline), samples
    )

    store, name = file_store(args.out)
    with store:
        write_placements_csv(placements, store.path(name))
        for node_id, node_samples in (samples or {}).items():
            write_samples_csv(node_samples, store.path(f"{Path(name).stem}.{node_id}.samples.csv"))
        counts = {s.node_id: len(s) for s in placements}
        store.write_manifest(run_manifest(args, seed, store, counts=counts), manifest_name_for(name))
    return 0


def run_validate(args: argparse.Namespace) -> int:
    graph = load_pipeline(args.pipeline)
    issues = validate(graph)
    for issue in issues:
        sys.stdout.write(f"{issue}\n")
    if issues:
        raise PipelineError(
            f"{args.pipeline}: {len(issues)} problem(s), first: {issues[0]}", issues[0].node_id
        )
    sys.stdout.write(f"{args.pipeline}: ok ({len(graph.nodes)} nodes)\n")
    return 0
