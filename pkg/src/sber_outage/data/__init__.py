"""Data package for sber-outage."""
