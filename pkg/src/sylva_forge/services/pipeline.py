"""
Vegetation placement pipelines.

A pipeline is a DAG declared in JSON:

    {"nodes": [{"id": "density", "kind": "source", "params": {...}, "inputs": []}, ...]}

Source and logic nodes produce textures stretched over the terrain extent,
sampling nodes produce Poisson-disk sample sets, placement nodes turn
samples into instancing parameters for one prefab. Every node draws from
its own stream derived from the scene stream by node id, so evaluation order
and worker count never change the result.
"""

import json
import logging
import math
import time
from collections.abc import Collection
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from graphlib import TopologicalSorter
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from sylva_forge.core.exceptions import ArtifactIOError, PipelineError
from sylva_forge.core.geometry import Rect
from sylva_forge.core.parallel import resolve_workers
from sylva_forge.core.rng import RngStream
from sylva_forge.models.config import resolve_relative
from sylva_forge.models.enums import NodeKind, TextureOp
from sylva_forge.models.params import (
    ConstantSourceParams,
    DiskParams,
    FileSourceParams,
    LogicParams,
    NoiseSourceParams,
    PlacementParams,
    VoronoiSourceParams,
)
from sylva_forge.models.reports import ValidationIssue
from sylva_forge.schema.node_kinds import NODE_KINDS, get_node_kind
from sylva_forge.services.sampling import SampleSet, bridson, modulated_bridson, spawn_filter
from sylva_forge.services.terrain import Heightmap, heights_at
from sylva_forge.services.texture import (
    Texture,
    constant_texture,
    read_pgm,
    sample_texture,
    texture_from_noise,
    texture_from_voronoi,
    texture_logic,
)

logger = logging.getLogger(__name__)

PLACEMENT_COLUMNS = [
    "node_id",
    "prefab",
    "index",
    "x",
    "y",
    "z",
    "spin",
    "twist_axis_x",
    "twist_axis_y",
    "twist_angle",
    "scale",
]


# === Document schema ===


class NodeDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    kind: str
    params: dict[str, Any] = Field(default_factory=dict)
    inputs: list[str] = Field(default_factory=list)


class PipelineDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nodes: list[NodeDocument]


# === Graph types ===


@dataclass(frozen=True)
class NodeSpec:
    id: str
    kind: NodeKind
    params: Any
    inputs: tuple[str, ...] = ()


@dataclass(frozen=True)
class PipelineGraph:
    """Parsed pipeline; `base_dir` resolves file sources."""

    nodes: tuple[NodeSpec, ...]
    base_dir: Path | None = None
    by_id: dict[str, NodeSpec] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "by_id", {n.id: n for n in self.nodes})

    @property
    def prefab_bindings(self) -> dict[str, str]:
        """Placement node id -> bound prefab name."""
        return {n.id: n.params.prefab for n in self.nodes if n.kind is NodeKind.PLACEMENT}

    def edges(self) -> list[tuple[str, str]]:
        return [(src, n.id) for n in self.nodes for src in n.inputs]


@dataclass(frozen=True)
class InstanceParams:
    prefab: str
    position: tuple[float, float, float]
    spin: float
    twist_axis: tuple[float, float]
    twist_angle: float
    scale: float


@dataclass(frozen=True)
class PlacementSet:
    node_id: str
    prefab: str
    instances: tuple[InstanceParams, ...]
    lineage: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.instances)


# === Parsing ===


def _format_errors(e: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
    )


def parse_pipeline(document: str, base_dir: Path | None = None) -> PipelineGraph:
    """Parse a JSON pipeline document into a graph with validated node params."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as e:
        raise PipelineError(
            f"Syntax error at line {e.lineno} column {e.colno} (char {e.pos}): {e.msg}"
        ) from e
    try:
        doc = PipelineDocument.model_validate(raw)
    except ValidationError as e:
        raise PipelineError(f"Invalid pipeline document: {_format_errors(e)}") from e

    nodes: list[NodeSpec] = []
    seen: set[str] = set()
    for node in doc.nodes:
        if node.id in seen:
            raise PipelineError(f"Duplicate node id '{node.id}'", node.id)
        seen.add(node.id)
        spec = get_node_kind(node.kind)
        if spec is None:
            known = ", ".join(k.value for k in NODE_KINDS)
            raise PipelineError(f"Unknown node kind '{node.kind}' (expected one of {known})", node.id)
        try:
            params = spec.validate_params(node.params)
        except ValidationError as e:
            raise PipelineError(f"Node '{node.id}': invalid params: {_format_errors(e)}", node.id) from e
        nodes.append(NodeSpec(node.id, spec.kind, params, tuple(node.inputs)))

    return PipelineGraph(tuple(nodes), base_dir)


def load_pipeline(path: Path) -> PipelineGraph:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"Cannot read pipeline {path}: {e}") from e
    try:
        return parse_pipeline(text, base_dir=path.parent)
    except PipelineError as e:
        raise PipelineError(f"{path}: {e}", e.node_id) from e


# === Validation ===


def _find_cycle(g: PipelineGraph) -> list[str] | None:
    """One dependency cycle in traversal order, or None."""
    white, grey, black = 0, 1, 2
    color = {n.id: white for n in g.nodes}
    for root in g.nodes:
        if color[root.id] != white:
            continue
        color[root.id] = grey
        path = [root.id]
        stack = [iter(g.by_id[root.id].inputs)]
        while stack:
            src = next(stack[-1], None)
            if src is None:
                color[path.pop()] = black
                stack.pop()
            elif color.get(src) == grey:
                return path[path.index(src):]
            elif color.get(src) == white:
                color[src] = grey
                path.append(src)
                stack.append(iter(g.by_id[src].inputs))
    return None


def validate(g: PipelineGraph) -> list[ValidationIssue]:
    """All structural problems of a graph; an empty list means valid."""
    issues: list[ValidationIssue] = []

    for node in g.nodes:
        spec = NODE_KINDS[node.kind]
        n_inputs = len(node.inputs)

        if not spec.min_inputs <= n_inputs <= spec.max_inputs:
            issues.append(ValidationIssue(
                kind="arity",
                node_id=node.id,
                message=(
                    f"{node.kind.value} node takes {spec.min_inputs}-{spec.max_inputs} inputs, "
                    f"got {n_inputs}"
                ),
                nodes=list(node.inputs),
            ))
        elif node.kind is NodeKind.LOGIC:
            expected = 1 if node.params.op.is_unary else 2
            if n_inputs != expected:
                issues.append(ValidationIssue(
                    kind="arity",
                    node_id=node.id,
                    message=f"'{node.params.op.value}' takes {expected} inputs, got {n_inputs}",
                    nodes=list(node.inputs),
                ))

        for position, src in enumerate(node.inputs):
            producer = g.by_id.get(src)
            if producer is None:
                issues.append(ValidationIssue(
                    kind="dangling",
                    node_id=node.id,
                    message=f"input '{src}' does not exist",
                    nodes=[src],
                ))
                continue
            if position >= len(spec.input_payloads):
                continue
            expected_payload = spec.input_payloads[position]
            produced = NODE_KINDS[producer.kind].output
            if produced is not expected_payload:
                issues.append(ValidationIssue(
                    kind="payload",
                    node_id=node.id,
                    message=(
                        f"input {position} '{src}' carries {produced.value}, "
                        f"expected {expected_payload.value}"
                    ),
                    nodes=[src],
                ))

    cycle = _find_cycle(g)
    if cycle:
        issues.append(ValidationIssue(
            kind="cycle",
            node_id=cycle[0],
            message="dependency cycle " + " -> ".join(cycle + [cycle[0]]),
            nodes=cycle,
        ))
    return issues


# === Evaluation ===


def _match_resolution(t: Texture, like: Texture) -> Texture:
    """Resample `t` onto the pixel grid of `like` (both cover the same world extent)."""
    if t.shape == like.shape:
        return t
    gx, gy = like.pixel_centers()
    return Texture(sample_texture(t, gx.ravel(), gy.ravel()).reshape(like.shape), like.extent)


def source_texture(params: Any, stream: RngStream, extent: Rect, base_dir: Path | None) -> Texture:
    """Texture of a source node, stretched over `extent`."""
    match params:
        case NoiseSourceParams():
            return texture_from_noise(params.width, params.height, params, stream.key, extent)
        case VoronoiSourceParams():
            return texture_from_voronoi(
                params.width, params.height, params.sites, stream.key, params.mode, extent
            )
        case ConstantSourceParams():
            return constant_texture(params.value, params.width, params.height, extent)
        case FileSourceParams():
            return read_pgm(resolve_relative(params.path, base_dir or Path(".")), extent)
    raise PipelineError(f"Unsupported source params {type(params).__name__}")


def _logic_texture(params: LogicParams, inputs: list[Texture]) -> Texture:
    if params.op.is_unary:
        return texture_logic(params.op, inputs[0], t=params.t)
    return texture_logic(params.op, inputs[0], _match_resolution(inputs[1], inputs[0]), t=params.t)


def _clip_region(p: DiskParams, extent: Rect, node_id: str) -> Rect:
    region = p.region_rect(extent)
    x0, y0 = max(region.x0, extent.x0), max(region.y0, extent.y0)
    x1, y1 = min(region.x1, extent.x1), min(region.y1, extent.y1)
    if x0 > x1 or y0 > y1:
        raise PipelineError(f"Sampling region {p.region} does not overlap the terrain", node_id)
    return Rect(x0, y0, x1, y1)


def _sample(node: NodeSpec, inputs: list[Texture], stream: RngStream, extent: Rect) -> SampleSet:
    p: DiskParams = node.params
    region = _clip_region(p, extent, node.id)
    density = inputs[0]
    if not p.modulated:
        samples = bridson(p, stream.derive("disk"), region)
        return spawn_filter(samples, density, stream.derive("density"))
    if len(inputs) > 1:
        samples = modulated_bridson(p, inputs[1], stream.derive("disk"), region)
        return spawn_filter(samples, density, stream.derive("density"))
    # Without a modulation input, dense areas get r_min and sparse areas r_max
    modulation = texture_logic(TextureOp.INVERT, density)
    return modulated_bridson(p, modulation, stream.derive("disk"), region)


def _place(
    node: NodeSpec,
    samples: SampleSet,
    spawn: Texture | None,
    stream: RngStream,
    terrain: Heightmap,
) -> PlacementSet:
    p: PlacementParams = node.params
    if spawn is not None:
        samples = spawn_filter(samples, spawn, stream.derive("spawn"))
    n = len(samples)
    draws = stream.derive("instances").generator.random((n, 4))
    spin = draws[:, 0] * (2.0 * math.pi)
    axis_angle = draws[:, 1] * (2.0 * math.pi)
    twist = draws[:, 2] * p.max_twist
    s_min, s_max = p.scale_range
    scale = s_min + draws[:, 3] * (s_max - s_min)
    xy = samples.points
    z = heights_at(terrain, xy[:, 0], xy[:, 1]) if n else np.empty(0)

    instances = tuple(
        InstanceParams(
            prefab=p.prefab,
            position=(float(xy[i, 0]), float(xy[i, 1]), float(z[i])),
            spin=float(spin[i]),
            twist_axis=(math.cos(axis_angle[i]), math.sin(axis_angle[i])),
            twist_angle=float(twist[i]),
            scale=float(scale[i]),
        )
        for i in range(n)
    )
    return PlacementSet(node.id, p.prefab, instances, stream.lineage)


def evaluate(
    g: PipelineGraph,
    terrain: Heightmap,
    seed: int,
    registry: Collection[str],
    workers: int | None = None,
    namespace: str | None = None,
    samples: dict[str, SampleSet] | None = None,
) -> list[PlacementSet]:
    """
    Evaluate every node in dependency order.

    Args:
        g: Parsed pipeline graph.
        terrain: Heightmap whose extent bounds every texture and sampling region.
        seed: Root seed of the scene.
        registry: Prefab names placement nodes may bind.
        workers: Thread count for independent nodes.
        namespace: Separates the streams of several pipelines in one scene.
        samples: When given, filled with the sample set of every sampling node.

    Returns:
        Placement sets of all placement nodes, sorted by node id.

    Raises:
        PipelineError: The graph is invalid or binds an unknown prefab.
    """
    issues = validate(g)
    if issues:
        raise PipelineError(f"Pipeline is invalid: {issues[0]}", issues[0].node_id)
    for node_id, prefab in g.prefab_bindings.items():
        if prefab not in registry:
            raise PipelineError(
                f"Placement node '{node_id}' binds unknown prefab '{prefab}'", node_id
            )

    scene_stream = RngStream.root(seed)
    if namespace:
        scene_stream = scene_stream.derive(namespace)
    extent = terrain.extent
    results: dict[str, Any] = {}

    def run(node_id: str) -> Any:
        node = g.by_id[node_id]
        stream = scene_stream.derive(node_id)
        inputs = [results[src] for src in node.inputs]
        started = time.perf_counter()
        match node.kind:
            case NodeKind.SOURCE:
                out = source_texture(node.params, stream, extent, g.base_dir)
            case NodeKind.LOGIC:
                out = _logic_texture(node.params, inputs)
            case NodeKind.SAMPLING:
                out = _sample(node, inputs, stream, extent)
            case NodeKind.PLACEMENT:
                spawn = inputs[1] if len(inputs) > 1 else None
                out = _place(node, inputs[0], spawn, stream, terrain)
        logger.debug(
            f"Node done: id={node_id} kind={node.kind.value} "
            f"duration={time.perf_counter() - started:.3f}s"
        )
        return out

    sorter = TopologicalSorter({n.id: list(n.inputs) for n in g.nodes})
    sorter.prepare()
    with ThreadPoolExecutor(max_workers=resolve_workers(workers)) as pool:
        pending = {}
        while sorter.is_active():
            for node_id in sorter.get_ready():
                pending[pool.submit(run, node_id)] = node_id
            done, _ = wait(pending, return_when=FIRST_COMPLETED)
            for future in done:
                node_id = pending.pop(future)
                results[node_id] = future.result()
                sorter.done(node_id)

    if samples is not None:
        samples.update((n.id, results[n.id]) for n in g.nodes if n.kind is NodeKind.SAMPLING)
    placements = sorted(
        (results[n.id] for n in g.nodes if n.kind is NodeKind.PLACEMENT),
        key=lambda s: s.node_id,
    )
    logger.info(
        f"Pipeline evaluated: nodes={len(g.nodes)} placement_sets={len(placements)} "
        f"instances={sum(len(s) for s in placements)}"
    )
    return placements


def placements_frame(sets: list[PlacementSet]) -> pd.DataFrame:
    rows = [
        (
            s.node_id,
            inst.prefab,
            i,
            *inst.position,
            inst.spin,
            *inst.twist_axis,
            inst.twist_angle,
            inst.scale,
        )
        for s in sets
        for i, inst in enumerate(s.instances)
    ]
    return pd.DataFrame(rows, columns=PLACEMENT_COLUMNS)


def write_placements_csv(sets: list[PlacementSet], path: Path) -> None:
    try:
        placements_frame(sets).to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    except OSError as e:
        raise ArtifactIOError(f"Cannot write placements {path}: {e}") from e
