"""Shared utilities (logging setup, parallel helpers)."""
