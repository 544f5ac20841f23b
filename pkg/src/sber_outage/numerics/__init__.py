"""Special functions and quadrature for sber-outage."""
