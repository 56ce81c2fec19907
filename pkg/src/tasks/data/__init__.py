"""Annotation math, synthetic scenes, splits and dataset files."""
