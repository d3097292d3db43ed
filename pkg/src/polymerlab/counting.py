"""Exact lattice-point counts behind the entropy (union-bound) estimates.

Z(N, D) counts integer vectors y with mean square (1/N) sum y_k^2 strictly
below D.  The counter builds the exact distribution of sum-of-squares
values by convolution, so Z is exact integer arithmetic; it doubles as the
oracle for the (C0 (D+1))^(N/2) bound and for counting coarse bin profiles
under per-scale energy caps, where the per-scale product bound is computed
from the same Z.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .energy import HeightConfig, dirichlet
from .multiscale import component

__all__ = [
    "BallCount",
    "BinCount",
    "count_ball",
    "bound_check",
    "minimal_c0",
    "count_bins",
]

_WORK_CAP = 5e8


@dataclass
class BallCount:
    N: int
    D: float
    Z: int


@dataclass
class BinCount:
    L: int
    l: int
    D_hat: float
    count: int
    product_bound: float
    box_half_width: int


def _sum_square_counts(N: int, limit: int) -> np.ndarray:
    """counts[s] = #{y in Z^N : sum y_k^2 = s} for s = 0..limit-1."""
    if limit <= 0:
        return np.zeros(0, dtype=np.int64)
    if N * limit * math.isqrt(limit) > _WORK_CAP:
        raise ValueError("count too large to enumerate exactly")
    counts = np.zeros(limit, dtype=np.int64)
    counts[0] = 1
    for _ in range(N):
        nxt = counts.copy()  # r = 0 term
        r = 1
        while r * r < limit:
            nxt[r * r :] += 2 * counts[: limit - r * r]
            r += 1
        counts = nxt
    return counts


def _ball_count(N: int, threshold: float) -> int:
    """#{y in Z^N : sum y_k^2 < threshold}, exact."""
    limit = math.ceil(threshold)
    return int(_sum_square_counts(N, limit).sum())


def count_ball(N: int, D: float) -> BallCount:
    """Exact Z(N, D) for N <= 8, D <= 64 (enumeration caps)."""
    if not 1 <= N <= 8:
        raise ValueError("N must be between 1 and 8")
    if not 0 <= D <= 64:
        raise ValueError("D must be between 0 and 64")
    return BallCount(N=N, D=float(D), Z=_ball_count(N, N * D))


def bound_check(N: int, D: float, C0: float) -> bool:
    """Does Z(N, D) <= (C0 (D+1))**(N/2) hold?"""
    return count_ball(N, D).Z <= (C0 * (D + 1.0)) ** (N / 2)


def minimal_c0(n_max: int = 6, d_max: int = 16) -> float:
    """Smallest C0 making the ball bound hold on the grid N <= n_max,
    integer D <= d_max."""
    best = 1.0
    for n in range(1, n_max + 1):
        for d in range(0, d_max + 1):
            z = count_ball(n, d).Z
            if z:
                best = max(best, z ** (2.0 / n) / (d + 1.0))
    # nudge above the defining grid point so the bound closes there in floats
    return best * (1.0 + 1e-12)


def _bin_scales(L: int, l: int) -> list[int]:
    rho, out = 2 * l, []
    while rho <= L // 2:
        out.append(rho)
        rho *= 2
    return out


def count_bins(L: int, l: int, D_hat: float) -> BinCount:
    """Count coarse profiles on the 2l-sublattice of [0, L], with values in
    2l*Z, zero boundary, and every per-scale energy below the cap:
    max over dyadic rho in [2l, L/2] of (l/rho)^2 D(profile_rho)/L < D_hat.

    Also returns the per-scale product upper bound built from Z: relaxing
    each scale's midpoint coordinates to independent integers can only
    enlarge the count.
    """
    if L > 16 or L < 2 or L & (L - 1) or l & (l - 1) or l < 1:
        raise ValueError("need dyadic l < L <= 16")
    if L % (2 * l) or L // l > 8:
        raise ValueError("need L/l <= 8 with 2l dividing L")
    scales = _bin_scales(L, l)
    n_interior = L // (2 * l) - 1

    # product-form bound: scale rho contributes Z(L/(2 rho), 2 (rho/l)^4 D_hat)
    bound = 1.0
    for rho in scales:
        n = L // (2 * rho)
        bound *= float(_ball_count(n, n * 2.0 * (rho / l) ** 4 * D_hat))

    if n_interior == 0:
        count = 1 if D_hat > 0 else 0
        return BinCount(L, l, float(D_hat), count, max(bound, float(count)), 0)

    # rigorous box: the cap bounds the total Dirichlet energy, hence sup|h|
    s_sum = sum((rho / l) ** 2 for rho in scales)
    v_cap = math.floor(L * math.sqrt(D_hat * s_sum / 2.0) / (2 * l))
    if (2 * v_cap + 1) ** n_interior > 2e6:
        raise ValueError("bin enumeration too large")

    anchors = 2 * l * np.arange(L // (2 * l) + 1)
    xs = np.arange(L + 1)
    count = 0
    for combo in itertools.product(range(-v_cap, v_cap + 1), repeat=n_interior):
        node_vals = np.array([0, *combo, 0], dtype=np.float64) * (2 * l)
        cfg = HeightConfig(0, np.interp(xs, anchors, node_vals))
        ok = True
        for rho in scales:
            if (l / rho) ** 2 * dirichlet(component(cfg, rho)) / L >= D_hat:
                ok = False
                break
        if ok:
            count += 1
    return BinCount(L, l, float(D_hat), count, bound, v_cap)
