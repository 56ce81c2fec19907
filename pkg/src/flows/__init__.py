"""Prefect flows composing the data, training, evaluation and inference tasks."""
