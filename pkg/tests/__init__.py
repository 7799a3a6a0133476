"""Test suite for sylva-forge."""
