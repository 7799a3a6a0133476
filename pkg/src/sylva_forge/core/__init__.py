"""Core configuration, seeded streams and shared utilities."""
