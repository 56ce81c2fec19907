"""Training step and batching."""
