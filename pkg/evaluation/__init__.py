"""Fairness metrics, diagnostics and the energy model."""
