"""Fixed vocabularies and numeric defaults."""
