"""Heatmap metrics and solver diagnostics."""
