"""Tests for bplab."""
