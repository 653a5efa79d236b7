"""Command-line interface for bplab."""
