"""Deterministic point generation for numeric sweeps.

All numeric PASS/FAIL sweeps in this package draw their sample points from an
unscrambled Halton sequence, so two runs of the same configuration evaluate
exactly the same points in exactly the same order.
"""

from __future__ import annotations

import math

from scipy.stats import qmc


def polydisc_points(n: int, radius: float, count: int, skip: int = 0) -> list:
    """``count`` points of the closed polydisc of the given radius in C^n.

    Each complex coordinate is drawn area-uniformly from its disc.  ``skip``
    discards a prefix of the underlying sequence, which is how independent
    batches (for example an x grid and a z grid) are produced.
    """
    sampler = qmc.Halton(d=2 * n, scramble=False)
    if skip:
        sampler.fast_forward(skip)
    raw = sampler.random(count)
    points = []
    for row in raw:
        pt = []
        for i in range(n):
            rho = radius * math.sqrt(row[2 * i])
            ang = 2.0 * math.pi * row[2 * i + 1]
            pt.append(complex(rho * math.cos(ang), rho * math.sin(ang)))
        points.append(tuple(pt))
    return points
