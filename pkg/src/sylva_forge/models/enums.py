"""Enumerations shared across the toolkit."""

from enum import Enum, IntEnum


class Label(IntEnum):
    """Scene point labels; the integer codes are stable and serialized."""

    TERRAIN = 0
    TRUNK = 1
    CANOPY = 2
    BRANCHES = 3
    BUSHES = 4
    UNDERSTOREY = 5
    GRASS = 6
    CACTUS = 7
    DEADWOOD = 8

    @property
    def slug(self) -> str:
        return self.name.lower()

    @classmethod
    def from_slug(cls, name: str) -> "Label":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"Unknown label '{name}'") from None


class Category(IntEnum):
    """Training categories a scene label collapses into."""

    TERRAIN = 0
    TRUNK = 1
    CANOPY = 2
    UNDERSTOREY = 3

    @property
    def slug(self) -> str:
        return self.name.lower()

    @classmethod
    def from_slug(cls, name: str) -> "Category":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"Unknown category '{name}'") from None


class NodeKind(str, Enum):
    """Pipeline node kinds."""

    SOURCE = "source"
    LOGIC = "logic"
    SAMPLING = "sampling"
    PLACEMENT = "placement"


class Payload(str, Enum):
    """What travels along a pipeline edge."""

    TEXTURE = "texture"
    SAMPLES = "samples"
    PLACEMENTS = "placements"


class SourceType(str, Enum):
    """Ways a source node produces its texture."""

    NOISE = "noise"
    VORONOI = "voronoi"
    CONSTANT = "constant"
    FILE = "file"


class TextureOp(str, Enum):
    """Pixelwise texture operations."""

    INVERT = "invert"
    MULTIPLY = "multiply"
    MIN = "min"
    MAX = "max"
    THRESHOLD = "threshold"
    ADD_CLAMPED = "add_clamped"

    @property
    def is_unary(self) -> bool:
        return self in (TextureOp.INVERT, TextureOp.THRESHOLD)


class VoronoiMode(str, Enum):
    """Scalar field extracted from a Voronoi diagram."""

    DISTANCE = "distance"
    CELLULAR = "cellular"


class DatasetMode(str, Enum):
    """Dataset variants."""

    LIDAR = "lidar"
    CAMERA = "camera"


class Split(str, Enum):
    """Dataset split a scene is assigned to."""

    TRAIN = "train"
    VAL = "val"
