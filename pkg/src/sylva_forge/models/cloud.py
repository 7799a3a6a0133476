"""The labeled point cloud exchanged between every stage."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from sylva_forge.core.exceptions import ForgeValidationError
from sylva_forge.models.enums import Label

# Reserved instance ids; prefab instances are numbered from FIRST_INSTANCE_ID
TERRAIN_INSTANCE_ID = 0
GRASS_INSTANCE_ID = 1
FIRST_INSTANCE_ID = 2


@dataclass(frozen=True)
class LabeledPointCloud:
    """Columnar (x, y, z, label, instance_id) records."""

    xyz: np.ndarray
    labels: np.ndarray
    instance_ids: np.ndarray

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        ids = np.asarray(self.instance_ids, dtype=np.int64).reshape(-1)
        if not (len(xyz) == len(labels) == len(ids)):
            raise ForgeValidationError(
                f"Column lengths differ: xyz={len(xyz)} labels={len(labels)} ids={len(ids)}"
            )
        if not np.isfinite(xyz).all():
            raise ForgeValidationError("Point cloud contains non-finite coordinates")
        if len(labels) and (labels.min() < 0 or labels.max() > max(Label)):
            raise ForgeValidationError("Point cloud contains labels outside the label set")
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "instance_ids", ids)

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def empty(cls) -> LabeledPointCloud:
        return cls(np.empty((0, 3)), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))

    @classmethod
    def uniform(cls, xyz: np.ndarray, label: Label, instance_id: int) -> LabeledPointCloud:
        """Cloud whose points all share one label and one instance id."""
        n = len(xyz)
        return cls(xyz, np.full(n, int(label)), np.full(n, instance_id))

    @classmethod
    def concat(cls, clouds: Sequence[LabeledPointCloud]) -> LabeledPointCloud:
        if not clouds:
            return cls.empty()
        return cls(
            np.concatenate([c.xyz for c in clouds]),
            np.concatenate([c.labels for c in clouds]),
            np.concatenate([c.instance_ids for c in clouds]),
        )

    def subset(self, indices: np.ndarray) -> LabeledPointCloud:
        """Records at `indices`, in the order given."""
        return LabeledPointCloud(
            self.xyz[indices], self.labels[indices], self.instance_ids[indices]
        )

    def with_xyz(self, xyz: np.ndarray) -> LabeledPointCloud:
        return LabeledPointCloud(xyz, self.labels, self.instance_ids)

    def label_counts(self) -> dict[str, int]:
        counts = np.bincount(self.labels, minlength=len(Label))
        return {label.slug: int(counts[label]) for label in Label}
