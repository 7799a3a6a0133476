"""`forge eval`: segmentation metrics of predictions against ground truth."""

import argparse
import logging
import sys
from pathlib import Path

from sylva_forge.cli.deps import file_store, positive_int
from sylva_forge.core.exceptions import ConfigError
from sylva_forge.models.reports import EvalReport
from sylva_forge.schema.benchmarks import get_all_benchmarks, get_benchmark
from sylva_forge.schema.categories import COLLAPSES
from sylva_forge.services.metrics import ConfusionMatrix, evaluate_matrix, mean_iou_chunked
from sylva_forge.services.query import get_query_service

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="Score predictions (OA, class-average accuracy, mIoU)")
    parser.add_argument("--truth", type=Path, nargs="+", default=None, help="Ground-truth CSV files")
    parser.add_argument(
        "--pred", type=Path, nargs="+", default=None,
        help="Prediction files, one category per line, paired with --truth in order",
    )
    parser.add_argument(
        "--reference", default=None,
        help="Score a published matrix instead: "
        + ", ".join(m.name for m in get_all_benchmarks()),
    )
    parser.add_argument("--classes", type=positive_int, default=4)
    parser.add_argument("--collapse", choices=sorted(COLLAPSES), default=None)
    parser.add_argument("--json", type=Path, default=None, help="Also write the report as JSON")
    parser.set_defaults(handler=run, command_path=("eval",))


def reference_matrix(name: str) -> ConfusionMatrix:
    benchmark = get_benchmark(name)
    if benchmark is None:
        known = ", ".join(m.name for m in get_all_benchmarks())
        raise ConfigError(f"Unknown reference '{name}'. Known: {known}")
    return ConfusionMatrix.of(benchmark.counts, benchmark.classes)


def file_pairs(args: argparse.Namespace) -> list[tuple[Path, Path]]:
    if not args.truth or not args.pred:
        raise ConfigError("Pass --truth and --pred together, or --reference")
    if len(args.truth) != len(args.pred):
        raise ConfigError(
            f"{len(args.truth)} truth files but {len(args.pred)} prediction files"
        )
    return list(zip(args.truth, args.pred))


def score(args: argparse.Namespace) -> EvalReport:
    if args.reference is not None:
        if args.truth or args.pred:
            raise ConfigError("--reference cannot be combined with --truth/--pred")
        m = reference_matrix(args.reference)
        return evaluate_matrix(m, args.reference, args.collapse)

    pairs = file_pairs(args)
    matrices = get_query_service().confusion_from_pairs(pairs, args.classes)
    total = matrices[0]
    for m in matrices[1:]:
        total = total + m
    source = ", ".join(f"{t.name}:{p.name}" for t, p in pairs)
    report = evaluate_matrix(total, source, args.collapse)
    if len(matrices) > 1:
        report.mean_iou_chunked = mean_iou_chunked(matrices)
    return report


def run(args: argparse.Namespace) -> int:
    report = score(args)
    if args.json is not None:
        store, name = file_store(args.json)
        with store:
            store.write_json(name, report)
    sys.stdout.write(report.to_text())
    return 0
