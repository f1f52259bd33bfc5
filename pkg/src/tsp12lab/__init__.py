"""Exact LP laboratory for (1,2)-TSP: relaxations, 2-matching improvement, gap instances."""

__version__ = "0.1.0"
