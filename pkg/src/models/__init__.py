"""Domain records shared across tasks and flows."""
