"""Preset run configurations for anyon-gas experiments."""
