"""Outage evaluators for sber-outage."""
