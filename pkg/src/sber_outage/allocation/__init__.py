"""Antenna allocation for sber-outage."""
