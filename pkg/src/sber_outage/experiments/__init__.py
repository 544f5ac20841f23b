"""Sweeps, presets and reports for sber-outage."""
