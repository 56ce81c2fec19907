"""Prediction export."""
