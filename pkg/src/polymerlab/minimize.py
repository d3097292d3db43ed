"""Exact ground states of the penalized energy mu*D - W on a height grid.

The minimizer runs a trellis DP over lattice sites.  Interior heights live
on a grid of spacing delta inside a band centered on the affine
interpolation of the boundary data; the quadratic transition cost lets each
site-to-site step be collapsed from O(K^2) to O(K) with the
lower-envelope-of-parabolas transform, which is the hot kernel (numba).

The backward value function is computed first; the argmin is then
reconstructed site by site from the left, breaking exact cost ties by
smaller |height|, then smaller height.  With that rule the returned argmin
is the lexicographically canonical one, which makes order-preservation
tests well defined and matches the brute-force oracle.

Bands double adaptively (up to a cap) whenever the argmin comes within two
grid steps of an edge; exhaustion raises BandExhaustedError, never a
silent truncation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .energy import EnergyBreakdown, HeightConfig, dirichlet, mass

__all__ = [
    "MinimizeOptions",
    "GroundState",
    "FrontierEstimate",
    "BandExhaustedError",
    "minimize",
    "minimize_pair",
    "lagrangian_frontier",
    "envelope_minimizers",
]


class BandExhaustedError(RuntimeError):
    """The adaptive band hit its doubling cap while the argmin still
    touched the band edge."""


@dataclass
class MinimizeOptions:
    grid_spacing: float = 2.0**-3
    band_half_width: float | None = None  # None: band_rule*sqrt(span length)
    band_rule: float = 4.0  # default half-width multiplier on sqrt(span length)
    adaptive_band: bool = True
    penalty: float = 1.0
    pins: dict[int, float] = field(default_factory=dict)
    band_cap: int = 6
    tie_break: str = "min_abs_then_value"

    def validated_stride(self, delta_min: float) -> int:
        delta = self.grid_spacing
        if not 0 < delta <= 1.0:
            raise ValueError("grid spacing must lie in (0, 1]")
        stride = round(delta / delta_min)
        if stride < 1 or abs(stride * delta_min - delta) > 1e-12 * delta:
            raise ValueError(
                f"grid spacing {delta} is not an integer multiple of the "
                f"field resolution {delta_min}"
            )
        return stride


@dataclass
class GroundState:
    config: HeightConfig
    breakdown: EnergyBreakdown
    objective: float  # optimal value of mu*D - W
    mu: float
    delta: float
    band_hits: int
    band_half_width: float

    def to_json(self, path, extra: dict | None = None) -> None:
        doc = {
            "mu": self.mu,
            "delta": self.delta,
            "band_hits": self.band_hits,
            "band_half_width": self.band_half_width,
            "objective": self.objective,
            "breakdown": self.breakdown.as_dict(),
        }
        if extra:
            doc.update(extra)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class FrontierEstimate:
    """Penalty sweep of one noise realization: (mu, D/L, W/L, E/L) points and
    the interpolated sup of W/L on the unit mean-Dirichlet ball."""

    points: list[tuple[float, float, float, float]]
    unit_ball_sup: float
    extrapolated: bool


@njit(cache=True)
def _quad_envelope(values, p0, acoef, q0, out):  # pragma: no cover - numba
    """out[j] = min_i values[i] + acoef*((q0+j) - (p0+i))**2.

    Lower envelope of parabolas rooted at consecutive integer positions,
    evaluated at consecutive integer query positions.
    """
    n = values.shape[0]
    nq = out.shape[0]
    shifted = np.empty(n, np.float64)
    for i in range(n):
        x = p0 + i
        shifted[i] = values[i] + acoef * x * x
    v = np.empty(n, np.int64)
    z = np.empty(n + 1, np.float64)
    k = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    inv = 0.5 / acoef
    for i in range(1, n):
        xi = p0 + i
        while True:
            j = v[k]
            s = (shifted[i] - shifted[j]) * inv / (xi - (p0 + j))
            if s > z[k]:
                break
            k -= 1
        k += 1
        v[k] = i
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for jq in range(nq):
        xq = q0 + jq
        while z[k + 1] < xq:
            k += 1
        d = xq - (p0 + v[k])
        out[jq] = values[v[k]] + acoef * d * d


def _as_span(span, L: int) -> tuple[int, int]:
    if isinstance(span, (int, np.integer)):
        a, b = 0, int(span)
    else:
        a, b = int(span[0]), int(span[1])
    if b - a < 2:
        raise ValueError("span must contain at least one interior site")
    if a < 0 or b > L:
        raise ValueError(f"span ({a}, {b}) not contained in [0, {L}]")
    return a, b


def _band_layout(a, b, h0, h1, delta, K, pins_q):
    """Per interior site: center index and half width (0 at pinned sites).

    Bands center on the piecewise-affine interpolation through the boundary
    values and any pins, so pinned problems keep their argmin in reach.
    """
    xs = np.arange(a + 1, b)
    anchors_x = np.array(sorted([a, b, *pins_q.keys()]), dtype=np.float64)
    anchor_vals = {a: h0, b: h1, **{x: q * delta for x, q in pins_q.items()}}
    anchors_y = np.array([anchor_vals[int(x)] for x in anchors_x])
    affine = np.interp(xs, anchors_x, anchors_y)
    centers = np.rint(affine / delta).astype(np.int64)
    halves = np.full(xs.size, K, dtype=np.int64)
    for x, q in pins_q.items():
        centers[x - (a + 1)] = q
        halves[x - (a + 1)] = 0
    return centers, halves


def minimize(field_obj, span, h0: float, h1: float, opts: MinimizeOptions | None = None) -> GroundState:
    """Exact grid minimizer of mu*D - W on the span with boundary (h0, h1)."""
    opts = opts or MinimizeOptions()
    a, b = _as_span(span, field_obj.L)
    n = b - a
    delta = opts.grid_spacing
    stride = opts.validated_stride(field_obj.delta_min)
    mu = opts.penalty
    if mu <= 0:
        raise ValueError("penalty must be positive")

    pins_q: dict[int, int] = {}
    for x, height in opts.pins.items():
        if not a < x < b:
            raise ValueError(f"pin at {x} not strictly inside span ({a}, {b})")
        q = round(height / delta)
        if abs(q * delta - height) > 1e-9 * max(1.0, abs(height)):
            raise ValueError(f"pin height {height} at {x} is off the delta grid")
        pins_q[x] = q

    if opts.band_half_width is None:
        K = math.ceil(opts.band_rule * math.sqrt(n) / delta)
    else:
        if opts.band_half_width < delta:
            raise ValueError("band half-width must be at least one grid step")
        K = math.ceil(opts.band_half_width / delta - 1e-12)

    hits = 0
    while True:
        # a fixed band accepts edge-touching argmins; adaptive bands retry wider
        result = _run_dp(
            field_obj, a, b, h0, h1, delta, stride, mu, K, pins_q,
            accept_edge=not opts.adaptive_band,
        )
        if result is not None:
            qs, objective, w_path = result
            break
        hits += 1
        if hits > opts.band_cap:
            raise BandExhaustedError(
                f"band cap reached at half-width {K * delta} on span ({a}, {b})"
            )
        K *= 2

    heights = np.empty(n + 1, dtype=np.float64)
    heights[0] = h0
    heights[-1] = h1
    heights[1:-1] = qs * delta
    config = HeightConfig(a, heights)
    d = dirichlet(config)
    w = math.fsum(w_path)
    check = mu * d - w
    if abs(check - objective) > 1e-9 * max(1.0, abs(objective)):
        raise RuntimeError(
            f"DP value {objective!r} disagrees with recomputed energy {check!r}"
        )
    breakdown = EnergyBreakdown(dirichlet=d, field=w, total=d - w, mass=mass(config))
    return GroundState(
        config=config,
        breakdown=breakdown,
        objective=objective,
        mu=mu,
        delta=delta,
        band_hits=hits,
        band_half_width=K * delta,
    )


def _run_dp(field_obj, a, b, h0, h1, delta, stride, mu, K, pins_q, accept_edge=False):
    """One DP pass at fixed half-width K.  Returns (argmin grid indices,
    optimal value, per-site W along the argmin) or None on a band-edge hit."""
    n = b - a
    centers, halves = _band_layout(a, b, h0, h1, delta, K, pins_q)
    acoef = 0.5 * mu * delta * delta
    n_int = n - 1

    w_arrays: list[np.ndarray] = []
    for i in range(n_int):
        c, k = int(centers[i]), int(halves[i])
        w_arrays.append(
            np.asarray(field_obj.values_on_grid(a + 1 + i, (c - k) * stride, (c + k) * stride, stride))
        )

    # backward value functions: g[i] = -W_i + cost-to-go after site i
    g_arrays: list[np.ndarray | None] = [None] * n_int
    i = n_int - 1
    c, k = int(centers[i]), int(halves[i])
    pos = (c + np.arange(-k, k + 1)).astype(np.float64)
    g_arrays[i] = acoef * (h1 / delta - pos) ** 2 - w_arrays[i]
    for i in range(n_int - 2, -1, -1):
        c, k = int(centers[i]), int(halves[i])
        out = np.empty(2 * k + 1, dtype=np.float64)
        _quad_envelope(
            g_arrays[i + 1],
            float(centers[i + 1] - halves[i + 1]),
            acoef,
            float(c - k),
            out,
        )
        g_arrays[i] = out - w_arrays[i]

    # forward reconstruction with the documented tie-break
    qs = np.empty(n_int, dtype=np.int64)
    w_path = np.empty(n_int, dtype=np.float64)
    prev = h0 / delta
    objective = math.nan
    for i in range(n_int):
        c, k = int(centers[i]), int(halves[i])
        positions = c + np.arange(-k, k + 1)
        cand = acoef * (positions - prev) ** 2 + g_arrays[i]
        m = cand.min()
        ties = np.flatnonzero(cand == m)
        if ties.size > 1:
            p = positions[ties]
            ties = ties[np.lexsort((p, np.abs(p)))[:1]]
        j = int(ties[0])
        if i == 0:
            objective = float(m)
        if halves[i] > 0 and min(j, 2 * k - j) < 2 and not accept_edge:
            return None
        qs[i] = positions[j]
        w_path[i] = w_arrays[i][j]
        prev = float(positions[j])
    return qs, objective, w_path


def minimize_pair(field_obj, span, bounds_low, bounds_high, opts: MinimizeOptions | None = None):
    """Minimize twice on one realization with a common band half-width.

    A shared feasible set is what makes the pointwise comparison of the two
    argmins (comparison principle / submodularity checks) exact on the grid,
    so both problems are re-run at the larger of the two adaptive bands.
    """
    opts = opts or MinimizeOptions()
    lo = minimize(field_obj, span, bounds_low[0], bounds_low[1], opts)
    hi = minimize(field_obj, span, bounds_high[0], bounds_high[1], opts)
    if lo.band_half_width != hi.band_half_width:
        width = max(lo.band_half_width, hi.band_half_width)
        fixed = replace(opts, band_half_width=width, adaptive_band=False)
        lo = minimize(field_obj, span, bounds_low[0], bounds_low[1], fixed)
        hi = minimize(field_obj, span, bounds_high[0], bounds_high[1], fixed)
    return lo, hi


def lagrangian_frontier(
    field_obj, L: int, mus, opts: MinimizeOptions | None = None
) -> FrontierEstimate:
    """Sweep the penalty weight and interpolate W/L where D/L crosses 1.

    All penalties run on one fixed band (discovered adaptively at the
    smallest penalty), so D/L is non-increasing in mu exactly, by the
    exchange argument on a common feasible set.
    """
    opts = opts or MinimizeOptions()
    mus = [float(m) for m in mus]
    if len(mus) < 2 or any(m2 <= m1 for m1, m2 in zip(mus, mus[1:])):
        raise ValueError("penalty values must be sorted ascending and distinct")

    # discover the band at the smallest penalty (wildest minimizer), then run
    # every penalty on that one fixed feasible set
    first = minimize(field_obj, L, 0.0, 0.0, replace(opts, penalty=mus[0]))
    fixed = replace(opts, band_half_width=first.band_half_width, adaptive_band=False)
    states = [first]
    for m in mus[1:]:
        states.append(minimize(field_obj, L, 0.0, 0.0, replace(fixed, penalty=m)))

    points = [
        (gs.mu, gs.breakdown.dirichlet / L, gs.breakdown.field / L, gs.breakdown.total / L)
        for gs in states
    ]
    d_over_l = np.array([p[1] for p in points])
    w_over_l = np.array([p[2] for p in points])
    if np.any(np.diff(d_over_l) > 1e-12):
        raise RuntimeError("D/L increased along the penalty sweep")

    order = np.argsort(d_over_l)
    ds = d_over_l[order]
    ws = np.maximum.accumulate(w_over_l[order])  # monotone rearrangement
    if ds[0] <= 1.0 <= ds[-1]:
        sup = float(np.interp(1.0, ds, ws))
        extrapolated = False
    else:
        # no bracketing pair: extrapolate from the nearest edge pair, flagged
        if 1.0 < ds[0]:
            x0, x1, y0, y1 = ds[0], ds[1], ws[0], ws[1]
        else:
            x0, x1, y0, y1 = ds[-2], ds[-1], ws[-2], ws[-1]
        slope = (y1 - y0) / (x1 - x0) if x1 > x0 else 0.0
        sup = float(max(0.0, y0 + slope * (1.0 - x0)))
        extrapolated = True
    return FrontierEstimate(points=points, unit_ball_sup=sup, extrapolated=extrapolated)


def envelope_minimizers(field_obj, span, bin_center, opts: MinimizeOptions | None = None):
    """Corner minimizers of a boundary bin of half-width l on a span of
    length 2l, and the normalized midpoint-deviation bound X.

    X upper-bounds the bin's worst normalized midpoint deviation by the
    comparison principle (corner boundary data dominate the whole bin).
    """
    a, b = span
    if (b - a) % 2:
        raise ValueError("span length must be even")
    l = (b - a) // 2
    hb0, hb1 = float(bin_center[0]), float(bin_center[1])
    for v in (hb0, hb1):
        if abs(v / l - round(v / l)) > 1e-9:
            raise ValueError(f"bin center {v} is not on the {l}-grid")
    lower, upper = minimize_pair(
        field_obj, span, (hb0 - l, hb1 - l), (hb0 + l, hb1 + l), opts
    )
    mid = a + l
    avg = 0.5 * (hb0 + hb1)
    dev_up = upper.config.value(mid) - (avg + l)
    dev_lo = lower.config.value(mid) - (avg - l)
    x_stat = (max(dev_up, -dev_lo) + 2 * l) / (2 * l)
    return lower, upper, x_stat
