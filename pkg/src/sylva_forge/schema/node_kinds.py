"""
Pipeline node kind registry.

Arity and payload typing of every node kind live here, so the validator and
the evaluator agree on what each kind consumes and produces. Adding a node
kind means adding an entry here and an evaluator branch in
`services.pipeline`.
"""

from dataclasses import dataclass
from typing import Any

from pydantic import TypeAdapter

from sylva_forge.models.enums import NodeKind, Payload
from sylva_forge.models.params import DiskParams, LogicParams, PlacementParams, SourceParams


@dataclass(frozen=True)
class NodeKindSpec:
    """Static contract of a node kind."""

    kind: NodeKind
    min_inputs: int
    max_inputs: int
    input_payloads: tuple[Payload, ...]  # expected payload per input position
    output: Payload
    params: TypeAdapter
    description: str

    def validate_params(self, raw: dict[str, Any]) -> Any:
        return self.params.validate_python(raw)


# === Node Kind Registry ===

NODE_KINDS: dict[NodeKind, NodeKindSpec] = {
    NodeKind.SOURCE: NodeKindSpec(
        kind=NodeKind.SOURCE,
        min_inputs=0,
        max_inputs=0,
        input_payloads=(),
        output=Payload.TEXTURE,
        params=TypeAdapter(SourceParams),
        description="Texture from noise, a Voronoi diagram, a constant or a PGM file",
    ),
    NodeKind.LOGIC: NodeKindSpec(
        kind=NodeKind.LOGIC,
        min_inputs=1,
        max_inputs=2,
        input_payloads=(Payload.TEXTURE, Payload.TEXTURE),
        output=Payload.TEXTURE,
        params=TypeAdapter(LogicParams),
        description="Pixelwise operation over one or two textures",
    ),
    NodeKind.SAMPLING: NodeKindSpec(
        kind=NodeKind.SAMPLING,
        min_inputs=1,
        max_inputs=2,
        input_payloads=(Payload.TEXTURE, Payload.TEXTURE),
        output=Payload.SAMPLES,
        params=TypeAdapter(DiskParams),
        description="Poisson-disk samples over [density, optional radius modulation]",
    ),
    NodeKind.PLACEMENT: NodeKindSpec(
        kind=NodeKind.PLACEMENT,
        min_inputs=1,
        max_inputs=2,
        input_payloads=(Payload.SAMPLES, Payload.TEXTURE),
        output=Payload.PLACEMENTS,
        params=TypeAdapter(PlacementParams),
        description="Instancing parameters for one prefab over [samples, optional spawn texture]",
    ),
}


def get_node_kind(name: str) -> NodeKindSpec | None:
    """Get node kind spec by name."""
    try:
        return NODE_KINDS[NodeKind(name)]
    except ValueError:
        return None
