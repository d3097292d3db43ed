"""Energy functionals on lattice height configurations.

A configuration is a real height profile on a lattice interval.  The
functionals: the Dirichlet energy D (half the sum of squared increments),
its p-increment generalization D_p, the disorder term W(h) summed over
interior columns, the total E = D - W, the mass M (sum of |h| over the
interior), the Dirichlet bilinear form, and the discrete Green function of
the interval Laplacian.

Sums use math.fsum, so the deterministic identities (Green-function mass
and energy, representation of point evaluation) hold to full precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HeightConfig",
    "EnergyBreakdown",
    "GreenFunction",
    "dirichlet",
    "dirichlet_p",
    "dirichlet_form",
    "field_term",
    "total_energy",
    "mass",
    "green_function",
]


@dataclass
class HeightConfig:
    """Heights on the lattice interval [x_offset, x_offset + len - 1]."""

    x_offset: int
    heights: np.ndarray

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=np.float64)
        if self.heights.ndim != 1 or self.heights.size < 2:
            raise ValueError("a configuration needs at least two lattice sites")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must be finite")

    @property
    def span(self) -> tuple[int, int]:
        return self.x_offset, self.x_offset + self.heights.size - 1

    @property
    def length(self) -> int:
        """Number of lattice bonds."""
        return self.heights.size - 1

    def value(self, x: int) -> float:
        return float(self.heights[x - self.x_offset])

    def zero_boundary(self) -> bool:
        return self.heights[0] == 0.0 and self.heights[-1] == 0.0

    def sites(self) -> np.ndarray:
        return self.x_offset + np.arange(self.heights.size)

    def to_csv(self, path, header_lines: tuple[str, ...] = ()) -> None:
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("x,height\n")
            for x, y in zip(self.sites(), self.heights):
                fh.write(f"{x},{y!r}\n")


@dataclass
class EnergyBreakdown:
    dirichlet: float
    field: float
    total: float
    mass: float
    p_dirichlet: dict[float, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "dirichlet": self.dirichlet,
            "field": self.field,
            "total": self.total,
            "mass": self.mass,
            "p_dirichlet": {str(p): v for p, v in self.p_dirichlet.items()},
        }


@dataclass
class GreenFunction:
    """Kernel phi_y of the interval Laplacian: D(h, phi_y) = h(y)."""

    L: int
    y: int
    values: HeightConfig


def _increments(h: HeightConfig) -> np.ndarray:
    return np.diff(h.heights)


def dirichlet(h: HeightConfig) -> float:
    """D(h) = (1/2) sum of squared increments."""
    d = _increments(h)
    return 0.5 * math.fsum(d * d)


def dirichlet_p(h: HeightConfig, p: float) -> float:
    """2**(-p/2) * sum |increment|**p; p = 2 recovers the Dirichlet energy."""
    if p < 1:
        raise ValueError("p must be >= 1")
    d = np.abs(_increments(h))
    return 2.0 ** (-p / 2) * math.fsum(d**p)


def dirichlet_form(h: HeightConfig, g: HeightConfig) -> float:
    """Bilinear form sum (h(x)-h(x-1))(g(x)-g(x-1)); equals 2 D on the diagonal."""
    if h.span != g.span:
        raise ValueError(f"span mismatch: {h.span} vs {g.span}")
    return math.fsum(_increments(h) * _increments(g))


def _check_span(field_obj, h: HeightConfig) -> None:
    lo, hi = h.span
    if lo < 0 or hi > field_obj.L:
        raise ValueError(f"span {h.span} not contained in [0, {field_obj.L}]")


def field_term(field_obj, h: HeightConfig) -> float:
    """W(h): the column potentials evaluated along h, interior sites only."""
    _check_span(field_obj, h)
    lo, hi = h.span
    return math.fsum(
        field_obj.value(x, h.heights[x - lo]) for x in range(lo + 1, hi)
    )


def mass(h: HeightConfig) -> float:
    """M(h) = sum of |h(x)| over interior sites."""
    return math.fsum(np.abs(h.heights[1:-1]))


def total_energy(field_obj, h: HeightConfig, ps: tuple[float, ...] = ()) -> EnergyBreakdown:
    """All functionals at once; total = dirichlet - field by construction."""
    d = dirichlet(h)
    w = field_term(field_obj, h)
    return EnergyBreakdown(
        dirichlet=d,
        field=w,
        total=d - w,
        mass=mass(h),
        p_dirichlet={p: dirichlet_p(h, p) for p in ps},
    )


def green_function(L: int, y: int) -> GreenFunction:
    """phi_y(x) = min((L-y)x, y(L-x)) / L on [0, L], for interior y."""
    if not 1 <= y <= L - 1:
        raise ValueError(f"site {y} not interior to [0, {L}]")
    x = np.arange(L + 1, dtype=np.float64)
    vals = np.minimum((L - y) * x, y * (L - x)) / L
    return GreenFunction(L=L, y=y, values=HeightConfig(0, vals))
