"""Small derivative-free minimizers used by the solvers.

The objectives here are cheap, smooth on the open unit interval, and can
have more than one dip, so the strategy everywhere is the blunt one: a
dense scan to find the right neighborhood, then golden-section search on
the bracket around the best grid point.
"""

from __future__ import annotations

import math
from typing import Callable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
) -> tuple[float, float]:
    """Minimize f on [lo, hi], assuming a single minimum inside.

    Shrinks the bracket until it is narrower than tol and returns the best
    point evaluated along the way, so a flat-bottomed f still comes back
    with a trustworthy value.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        x, fx = (c, fc) if fc <= fd else (d, fd)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def scan_then_golden(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    points: int,
    tol: float = 1e-12,
) -> tuple[float, float]:
    """Evaluate f on an inclusive uniform grid, then refine the minimum by
    golden-section search on the bracket around the best grid point."""
    if points < 2:
        raise ValueError("need at least two grid points")
    step = (hi - lo) / (points - 1)
    xs = [lo + i * step for i in range(points)]
    values = [f(x) for x in xs]
    i = min(range(points), key=values.__getitem__)
    a = xs[i - 1] if i > 0 else xs[i]
    b = xs[i + 1] if i < points - 1 else xs[i]
    if a == b:
        return xs[i], values[i]
    x, fx = golden_section(f, a, b, tol)
    if values[i] < fx:
        return xs[i], values[i]
    return x, fx
