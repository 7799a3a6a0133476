"""Output documents: validation issues, evaluation reports and manifests."""

from typing import Any, Literal

from pydantic import BaseModel, Field


class ValidationIssue(BaseModel):
    """One problem found while validating a pipeline graph."""

    kind: Literal["cycle", "dangling", "arity", "payload"]
    node_id: str = Field(description="Node the issue is attached to")
    message: str
    nodes: list[str] = Field(
        default_factory=list,
        description="Offending node ids; for cycles, the cycle in traversal order",
    )

    def __str__(self) -> str:
        return f"[{self.kind}] {self.node_id}: {self.message}"


class ClassReport(BaseModel):
    """Per-class figures derived from a confusion matrix."""

    name: str
    support: int = Field(description="Ground-truth count (row sum)")
    predicted: int = Field(description="Prediction count (column sum)")
    recall: float | None = None
    precision: float | None = None
    iou: float | None = None


class EvalReport(BaseModel):
    """Metrics of one confusion matrix, optionally with its collapsed variant."""

    source: str = Field(description="What was evaluated (file pair or reference name)")
    classes: list[str]
    matrix: list[list[int]] = Field(description="Rows are ground truth, columns prediction")
    total: int
    overall_accuracy: float
    class_avg_accuracy: float
    mean_iou: float
    per_class: list[ClassReport]
    mean_iou_chunked: float | None = Field(
        default=None, description="Mean of per-file-pair mIoUs when several pairs were scored"
    )
    collapsed: "EvalReport | None" = None

    def to_text(self) -> str:
        width = max(len(c) for c in self.classes)
        lines = [
            f"source: {self.source}",
            f"points: {self.total}",
            f"overall accuracy:   {self.overall_accuracy:.4f}",
            f"class avg accuracy: {self.class_avg_accuracy:.4f}",
            f"mean IoU:           {self.mean_iou:.4f}",
            "",
            f"{'class':<{width}}  {'support':>10}  {'recall':>7}  {'precision':>9}  {'iou':>7}",
        ]
        if self.mean_iou_chunked is not None:
            lines.insert(5, f"mean IoU (chunked): {self.mean_iou_chunked:.4f}")
        for row in self.per_class:
            lines.append(
                f"{row.name:<{width}}  {row.support:>10}  {_fmt(row.recall):>7}  "
                f"{_fmt(row.precision):>9}  {_fmt(row.iou):>7}"
            )
        if self.collapsed is not None:
            lines += ["", "collapsed:"] + ["  " + line for line in self.collapsed.to_text().splitlines()]
        return "\n".join(lines) + "\n"


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


class NormalizationRecord(BaseModel):
    centroid: tuple[float, float, float]
    scale: float


class SubcloudRecord(BaseModel):
    """One written subcloud file."""

    file: str = Field(description="Path relative to the dataset root")
    split: str
    scene: str
    cluster: int
    count: int
    histogram: dict[str, int] = Field(description="Category slug -> point count")
    normalization: NormalizationRecord | None = None


class SceneRecord(BaseModel):
    name: str
    split: str
    input_points: int
    processed_points: int = Field(description="Points after occlusion (camera) or as read (lidar)")
    clusters: int
    kept: int
    discarded: int


class DatasetManifest(BaseModel):
    """Reproducibility record of a dataset directory."""

    tool_version: str
    seed: int
    mode: str
    config: dict[str, Any]
    category_map: dict[str, str]
    scenes: list[SceneRecord]
    subclouds: list[SubcloudRecord]
    total_points: int
    histogram: dict[str, int]


class RunManifest(BaseModel):
    """Written next to every artifact: enough to re-run the command that made it."""

    tool_version: str
    command: list[str] = Field(description="Subcommand and its arguments, output paths excluded")
    seed: int
    config: dict[str, Any] = Field(default_factory=dict)
    artifacts: list[str] = Field(default_factory=list)
    counts: dict[str, int] = Field(default_factory=dict)
