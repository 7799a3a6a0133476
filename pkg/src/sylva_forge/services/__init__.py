"""Generators, sensors, dataset assembly, metrics and artifact storage."""
