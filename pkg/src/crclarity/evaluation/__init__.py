"""Cross-validation, metrics, and report rendering."""
