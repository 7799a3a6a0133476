"""
Label to category mapping and category collapses.

Scenes carry nine labels; datasets carry four categories. Evaluation can
further collapse categories (e.g. Tree / Non-Tree).
"""

from collections.abc import Mapping

import numpy as np

from sylva_forge.core.exceptions import ConfigError
from sylva_forge.models.enums import Category, Label

# === Default Category Map ===
# understorey absorbs grass, bushes and every other non-tree vegetation

DEFAULT_CATEGORY_MAP: dict[Label, Category] = {
    Label.TERRAIN: Category.TERRAIN,
    Label.TRUNK: Category.TRUNK,
    Label.CANOPY: Category.CANOPY,
    Label.BRANCHES: Category.CANOPY,
    Label.BUSHES: Category.UNDERSTOREY,
    Label.UNDERSTOREY: Category.UNDERSTOREY,
    Label.GRASS: Category.UNDERSTOREY,
    Label.CACTUS: Category.UNDERSTOREY,
    Label.DEADWOOD: Category.UNDERSTOREY,
}


def build_category_map(overrides: Mapping[str, str] | None = None) -> dict[Label, Category]:
    """Default map with slug overrides applied; always total over Label."""
    mapping = dict(DEFAULT_CATEGORY_MAP)
    for label_name, category_name in (overrides or {}).items():
        try:
            mapping[Label.from_slug(label_name)] = Category.from_slug(category_name)
        except ValueError as e:
            raise ConfigError(str(e)) from e
    return mapping


def category_lookup(mapping: Mapping[Label, Category]) -> np.ndarray:
    """Array indexed by label code giving the category code."""
    missing = [label.slug for label in Label if label not in mapping]
    if missing:
        raise ConfigError(f"Category map is not total, missing: {missing}")
    return np.array([int(mapping[label]) for label in Label], dtype=np.int64)


def map_labels(labels: np.ndarray, mapping: Mapping[Label, Category]) -> np.ndarray:
    return category_lookup(mapping)[np.asarray(labels, dtype=np.int64)]


def slug_map(mapping: Mapping[Label, Category]) -> dict[str, str]:
    """JSON-friendly form used in manifests."""
    return {label.slug: mapping[label].slug for label in Label}


# === Category Collapses ===
# Superclass order follows first appearance in the category order.

COLLAPSES: dict[str, dict[str, str]] = {
    "tree": {
        "terrain": "non-tree",
        "trunk": "tree",
        "canopy": "tree",
        "understorey": "non-tree",
    },
}


def get_collapse(name: str) -> dict[str, str] | None:
    """Get a named collapse mapping."""
    return COLLAPSES.get(name)
