"""Core package for sber-outage."""
