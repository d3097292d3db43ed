"""Shared test oracles, independent of the library's solution paths."""

from __future__ import annotations

import itertools

import numpy as np


def enumerate_minimizer(field, L, h0, h1, delta, half_width, mu=1.0, pins=None):
    """Brute-force ground state over every interior grid assignment.

    Bands are centered on the affine interpolation like the DP's, and cost
    ties resolve lexicographically from the left by (|height|, height) --
    the documented tie-break.  Returns (cost, heights).
    """
    pins = pins or {}
    xs = np.arange(1, L)
    affine = h0 + (h1 - h0) * xs / L
    centers = np.rint(affine / delta).astype(int)
    K = round(half_width / delta)
    ranges = []
    for x, c in zip(xs, centers):
        if x in pins:
            ranges.append([round(pins[x] / delta)])
        else:
            ranges.append(range(c - K, c + K + 1))
    best = None
    for combo in itertools.product(*ranges):
        heights = np.concatenate([[h0], np.array(combo, dtype=float) * delta, [h1]])
        cost = mu * 0.5 * float(np.sum(np.diff(heights) ** 2))
        cost -= sum(field.value(int(x), float(heights[x])) for x in xs)
        key = tuple(v for q in combo for v in (abs(q), q))
        if best is None or cost < best[0] or (cost == best[0] and key < best[1]):
            best = (cost, key, heights)
    return best[0], best[2]


def random_zero_boundary(rng, L, scale=1.0):
    """Gaussian bridge heights on [0, L]."""
    w = np.concatenate([[0.0], np.cumsum(rng.standard_normal(L))])
    w -= np.linspace(0.0, w[-1], L + 1)
    return scale * w
