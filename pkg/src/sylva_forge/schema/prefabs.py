"""
Built-in procedural prefabs.

Always present in a scene's prefab registry; scene documents may add more
or override these by name.
"""

from sylva_forge.models.config import BushPrefabSpec, TreePrefabSpec

# === Built-in Prefab Registry ===

BUILTIN_PREFABS: dict[str, TreePrefabSpec | BushPrefabSpec] = {
    "broadleaf": TreePrefabSpec(
        trunk_height=6.0,
        trunk_radius=0.25,
        canopy_radii=(3.0, 3.0, 3.5),
    ),
    "conifer": TreePrefabSpec(
        trunk_height=9.0,
        trunk_radius=0.2,
        canopy_radii=(1.8, 1.8, 5.0),
    ),
    "shrub": BushPrefabSpec(
        radii=(0.9, 0.9, 0.7),
        point_budget=512,
    ),
}


def builtin_prefab_names() -> list[str]:
    return sorted(BUILTIN_PREFABS)
