"""Graded Gauss-Legendre rules on the angle variable.

Integrands over the cut are written in theta = arccos(lambda).  Their
singularities sit at theta = 0 and theta = pi (logarithms, fractional
powers), so panels are refined geometrically towards both ends.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=16)
def graded_rule(
    lo: float = 0.0,
    hi: float = np.pi,
    order: int = 20,
    panels: int = 16,
    min_width: float = 1e-8,
    grade_lo: bool = True,
    grade_hi: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on (lo, hi), graded with ratio 1/2 down to ``min_width``."""
    base = np.linspace(lo, hi, panels + 1)
    width = base[1] - base[0]
    cuts = set(base.tolist())
    w = width / 2
    while w >= min_width:
        if grade_lo:
            cuts.add(lo + w)
        if grade_hi:
            cuts.add(hi - w)
        w /= 2
    edges = np.array(sorted(cuts))
    x, wt = np.polynomial.legendre.leggauss(order)
    left, right = edges[:-1, None], edges[1:, None]
    half = (right - left) / 2
    nodes = (left + half * (1 + x[None, :])).ravel()
    weights = (half * wt[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def theta_rule(order: int = 20, panels: int = 16, min_width: float = 1e-8):
    """Graded rule on (0, pi)."""
    return graded_rule(0.0, float(np.pi), order, panels, min_width)


def circle_rule(order: int = 20, panels: int = 16, min_width: float = 1e-8):
    """Graded rule on (-pi, pi), refined at 0 and +-pi."""
    t, w = theta_rule(order, panels, min_width)
    return np.concatenate([-t[::-1], t]), np.concatenate([w[::-1], w])
