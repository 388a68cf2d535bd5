"""Coupled chaotic-map keystream generators."""
