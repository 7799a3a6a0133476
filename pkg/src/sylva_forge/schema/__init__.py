"""Static registries: node kinds, category maps, built-in prefabs, benchmark matrices."""
