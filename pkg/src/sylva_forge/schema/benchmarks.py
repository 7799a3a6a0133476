"""
Published segmentation confusion matrices.

Matrices from evaluating four point networks on a real annotated forest
scan, after training on the LiDAR-like and Camera-like synthetic datasets.
Rows are ground truth, columns prediction, in category order
terrain, trunk, canopy, understorey. Used as regression fixtures for the
metric arithmetic and as `forge eval --reference NAME` inputs.
"""

from dataclasses import dataclass

from sylva_forge.models.enums import Category

CATEGORY_NAMES = [c.slug for c in Category]


@dataclass(frozen=True)
class BenchmarkMatrix:
    """A published confusion matrix."""

    name: str  # Registry key (e.g. 'lidar-pointnext')
    variant: str  # 'lidar' or 'camera'
    network: str
    counts: tuple[tuple[int, ...], ...]

    @property
    def classes(self) -> list[str]:
        return list(CATEGORY_NAMES)


def _entry(variant: str, network: str, counts: list[list[int]]) -> BenchmarkMatrix:
    return BenchmarkMatrix(
        name=f"{variant}-{network.lower()}",
        variant=variant,
        network=network,
        counts=tuple(tuple(row) for row in counts),
    )


# === Benchmark Registry ===

BENCHMARKS: dict[str, BenchmarkMatrix] = {
    m.name: m
    for m in [
        _entry("lidar", "PointNeXt", [
            [1055469, 4234, 423, 386498],
            [468, 191869, 135275, 59160],
            [10201, 254302, 8310787, 1220544],
            [1105198, 21323, 1067, 1128622],
        ]),
        _entry("lidar", "PointBERT", [
            [756515, 16905, 6451, 1314363],
            [3386, 401490, 184272, 67868],
            [11031, 1088940, 6703359, 765463],
            [373703, 38963, 22493, 2129238],
        ]),
        _entry("lidar", "PointMAE", [
            [315040, 2506, 18805, 1756467],
            [193, 340098, 187716, 129111],
            [6316, 779671, 6986603, 796919],
            [49187, 13302, 38252, 2465254],
        ]),
        _entry("lidar", "PointGPT", [
            [363932, 8427, 13425, 1709711],
            [593, 219103, 206613, 229875],
            [11898, 1049754, 5682647, 1824946],
            [112227, 23866, 31023, 2387380],
        ]),
        _entry("camera", "PointNeXt", [
            [6566, 0, 0, 6229],
            [68, 0, 24, 299],
            [100, 0, 6990, 909],
            [2391, 0, 0, 3048],
        ]),
        _entry("camera", "PointBERT", [
            [8923, 0, 0, 5388],
            [102, 23, 40, 484],
            [140, 2, 6226, 639],
            [2392, 0, 0, 2265],
        ]),
        _entry("camera", "PointMAE", [
            [9508, 0, 0, 4653],
            [71, 75, 38, 445],
            [108, 18, 6028, 951],
            [2176, 0, 0, 2553],
        ]),
        _entry("camera", "PointGPT", [
            [7283, 3, 0, 7069],
            [80, 219, 25, 308],
            [137, 415, 5278, 1126],
            [2018, 17, 0, 2646],
        ]),
    ]
}


def get_benchmark(name: str) -> BenchmarkMatrix | None:
    return BENCHMARKS.get(name.strip().lower())


def get_all_benchmarks() -> list[BenchmarkMatrix]:
    return list(BENCHMARKS.values())
