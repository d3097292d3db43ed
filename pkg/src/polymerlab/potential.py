"""Columnar Brownian disorder, sampled lazily and reproducibly.

Each interior lattice column x of a system of size L carries an independent
two-sided Brownian motion W(x, .) in the height variable, pinned to 0 at
height 0.  Heights are served on a fixed dyadic grid of spacing
``delta_min`` (default 2**-6): every query is rounded to that grid first.

The construction is a keyed hierarchy, so evaluation is a pure function of
(master_seed, x, rounded height) and never depends on query order:

* a backbone of values at heights +-1, +-2, +-4, ... built from keyed
  Gaussian increments (the increment from 2**(k-1) to 2**k has variance
  2**(k-1)), extended outward on demand;
* dyadic midpoint refinement inside each backbone segment [2**(k-1), 2**k]
  (and [0, 1]): midpoint = average of the endpoints plus a keyed Gaussian
  of variance (interval length)/4, down to ``delta_min``.

Every Gaussian is produced by hashing its node key (seed, column, side,
segment, depth, index) with a SplitMix64-style avalanche and mapping the
64-bit word through the inverse normal CDF.  Caches are append-only;
refinement never changes a value that has already been returned.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.special import ndtri

__all__ = ["PotentialField", "ZeroField", "mix_seed"]

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLD = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1DF4E5B9
_MIX2 = 0x94D049BB133111EB

# domain tags keeping unrelated key streams disjoint
_TAG_NODE = 0x706F6C79  # column noise nodes
_TAG_SEED = 0x73656564  # replicate seed derivation

_GOLD_U64 = np.uint64(_GOLD)
_MIX1_U64 = np.uint64(_MIX1)
_MIX2_U64 = np.uint64(_MIX2)


def _mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit word (pure Python ints)."""
    z &= _MASK
    z ^= z >> 30
    z = (z * _MIX1) & _MASK
    z ^= z >> 27
    z = (z * _MIX2) & _MASK
    z ^= z >> 31
    return z


def _combine(h: int, c: int) -> int:
    return _mix64((h + c + _GOLD) & _MASK)


def mix_seed(*components: int) -> int:
    """Deterministic 64-bit seed derived from integer components.

    Used for replicate seeds: mix_seed(master_seed, L, replicate) is stable
    under changes to the replicate count and across platforms.
    """
    h = _combine(_TAG_SEED, 0)
    for c in components:
        h = _combine(h, int(c) & _MASK)
    return h


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


def _gauss_from_words(z: np.ndarray) -> np.ndarray:
    """Map 64-bit words to standard normals via the inverse CDF.

    The top 53 bits give a uniform in (0, 1) bounded away from the
    endpoints, so ndtri is always finite.
    """
    u = ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def _gauss_scalar(word: int) -> float:
    u = (float(word >> 11) + 0.5) * 2.0**-53
    return float(ndtri(u))


def _bridge_sigma(length_exp: int) -> float:
    """Std dev of a midpoint correction for an interval of length 2**length_exp
    height units: sqrt(length/4)."""
    return math.sqrt(2.0**length_exp) * 0.5


_SIGMA_TABLES: dict[tuple[int, int], np.ndarray] = {}


def _sigma_table(seg_exp: int, depths: int) -> np.ndarray:
    """Midpoint sigmas for depths 1..depths of a segment of height length
    2**seg_exp; shared across columns and fields."""
    key = (seg_exp, depths)
    table = _SIGMA_TABLES.get(key)
    if table is None:
        table = np.array([_bridge_sigma(seg_exp - (d - 1)) for d in range(1, depths + 1)])
        _SIGMA_TABLES[key] = table
    return table


@njit(cache=True)
def _segment_words(a_seg, seg_len, lo_c, hi_c, stride, prefixes, out):  # pragma: no cover
    """Emit the mixed 64-bit node words for bridging one segment window down
    to `stride`, level by level, in the exact order _segment_values consumes
    them.  Returns the number of words written."""
    n = 0
    step = seg_len
    depth = 0
    while step > stride:
        depth += 1
        step >>= 1
        nj_lo = (lo_c - a_seg) // step
        nj_hi = -((a_seg - hi_c) // step)
        prefix = prefixes[depth - 1]
        for j in range(nj_lo, nj_hi + 1):
            if j & 1:
                z = prefix + np.uint64((j - 1) >> 1) + _GOLD_U64
                z ^= z >> np.uint64(30)
                z *= _MIX1_U64
                z ^= z >> np.uint64(27)
                z *= _MIX2_U64
                z ^= z >> np.uint64(31)
                out[n] = z
                n += 1
    return n


@njit(cache=True)
def _segment_values(va, vb, a_seg, seg_len, lo_c, hi_c, stride, sigmas, gauss, buf_a, buf_b, out):  # pragma: no cover
    """Resolve the bridge for one segment window given the node normals in
    emission order.  Writes the values at the stride grid into `out` and
    returns (count, first_position)."""
    cur = buf_a
    nxt = buf_b
    cur[0] = va
    cur[1] = vb
    pj_lo = 0
    n_cur = 2
    step = seg_len
    depth = 0
    g = 0
    while step > stride:
        depth += 1
        step >>= 1
        nj_lo = (lo_c - a_seg) // step
        nj_hi = -((a_seg - hi_c) // step)
        sigma = sigmas[depth - 1]
        for j in range(nj_lo, nj_hi + 1):
            if j & 1:
                left = cur[((j - 1) >> 1) - pj_lo]
                right = cur[((j + 1) >> 1) - pj_lo]
                nxt[j - nj_lo] = 0.5 * (left + right) + sigma * gauss[g]
                g += 1
            else:
                nxt[j - nj_lo] = cur[(j >> 1) - pj_lo]
        cur, nxt = nxt, cur
        pj_lo = nj_lo
        n_cur = nj_hi - nj_lo + 1
    first = a_seg + pj_lo * step
    if step == stride:
        for i in range(n_cur):
            out[i] = cur[i]
        return n_cur, first
    # window narrower than the stride: keep only grid-aligned points
    n_out = 0
    first_out = 0
    for i in range(n_cur):
        pos = first + i * step
        if pos % stride == 0:
            if n_out == 0:
                first_out = pos
            out[n_out] = cur[i]
            n_out += 1
    return n_out, first_out


class _Column:
    """Lazy node cache for one column's two-sided Brownian motion.

    Positions are signed integers in units of delta_min.  ``nodes`` maps a
    resolved position to its value; entries are never rewritten.
    """

    __slots__ = (
        "x", "f_exp", "seed", "nodes", "_side_prefix", "_backbone_top",
        "_grid_memo", "_plan_cache",
    )

    def __init__(self, x: int, f_exp: int, seed: int):
        self.x = x
        self.f_exp = f_exp
        self.seed = seed
        self.nodes: dict[int, float] = {0: 0.0}
        # per side: hash prefix and current outermost backbone exponent
        self._side_prefix = {
            1: _combine(_combine(_combine(_TAG_NODE, seed), x), 1),
            -1: _combine(_combine(_combine(_TAG_NODE, seed), x), 2),
        }
        self._backbone_top = {1: -1, -1: -1}
        self._grid_memo: tuple | None = None
        self._plan_cache: dict[tuple[int, int, int], tuple] = {}

    def _segment_tables(self, side: int, seg: int, depths: int):
        """Hash prefixes and midpoint sigmas per depth, cached per segment.

        prefixes[d-1] equals _node_prefix(side, seg, d) bit for bit; the
        whole depth range is mixed in one vectorized pass.
        """
        key = (side, seg, depths)
        hit = self._plan_cache.get(key)
        if hit is None:
            seg_prefix = _combine(self._side_prefix[side], seg + 1)
            prefixes = _mix64_array(
                np.uint64(seg_prefix)
                + np.arange(1, depths + 1, dtype=np.uint64)
                + _GOLD_U64
            )
            seg_exp = seg - 1 if seg else 0  # segment length exponent, height units
            sigmas = _sigma_table(seg_exp, depths)
            hit = (prefixes, sigmas)
            self._plan_cache[key] = hit
        return hit

    # -- key streams ------------------------------------------------------

    def _backbone_word(self, side: int, k: int) -> int:
        # segment code 0 is reserved for the backbone chain
        return _combine(_combine(self._side_prefix[side], 0), k)

    def _node_prefix(self, side: int, seg: int, depth: int) -> int:
        return _combine(_combine(self._side_prefix[side], seg + 1), depth)

    # -- backbone ----------------------------------------------------------

    def _ensure_backbone(self, side: int, k_top: int) -> None:
        """Materialize backbone values at side*2**(f_exp+k) for k <= k_top."""
        k = self._backbone_top[side]
        if k >= k_top:
            return
        pos = 1 << (self.f_exp + k) if k >= 0 else 0
        val = self.nodes[side * pos] if k >= 0 else 0.0
        while k < k_top:
            k += 1
            sigma = 1.0 if k == 0 else math.sqrt(2.0 ** (k - 1))
            val = val + sigma * _gauss_scalar(self._backbone_word(side, k))
            self.nodes[side * (1 << (self.f_exp + k))] = val
        self._backbone_top[side] = k_top

    @staticmethod
    def _segment_of(am: int, f_exp: int) -> int:
        """Segment index of position am > 0: seg 0 is (0, 2**f_exp],
        seg k >= 1 is (2**(f_exp+k-1), 2**(f_exp+k)]."""
        return max(0, (am - 1).bit_length() - f_exp)

    # -- scalar evaluation --------------------------------------------------

    def value_at(self, m: int) -> float:
        if m == 0:
            return 0.0
        cached = self.nodes.get(m)
        if cached is not None:
            return cached
        side = 1 if m > 0 else -1
        am = abs(m)
        seg = self._segment_of(am, self.f_exp)
        self._ensure_backbone(side, seg)
        lo = 0 if seg == 0 else 1 << (self.f_exp + seg - 1)
        hi = 1 << (self.f_exp + seg)
        if am == hi or am == lo:
            return self.nodes[m]
        seg_len = hi - lo
        seg_len_exp = seg_len.bit_length() - 1
        # walk down to the node, recording unresolved midpoints
        pending: list[tuple[int, int, int, int]] = []  # (pos, left, right, depth)
        a, b, depth = lo, hi, 0
        while True:
            depth += 1
            mid = (a + b) >> 1
            if side * mid not in self.nodes:
                pending.append((mid, a, b, depth))
            if mid == am:
                break
            if am < mid:
                b = mid
            else:
                a = mid
        # one vectorized hash/ndtri call for the whole missing chain
        words = np.empty(len(pending), dtype=np.uint64)
        for i, (pos, _a, _b, depth) in enumerate(pending):
            step = seg_len >> depth
            idx = ((pos - lo) // step - 1) >> 1
            words[i] = _combine(self._node_prefix(side, seg, depth), idx)
        gs = _gauss_from_words(words)
        for (pos, a, b, depth), g in zip(pending, gs):
            sigma = _bridge_sigma(seg_len_exp - self.f_exp - (depth - 1))
            va = self.nodes[side * a]
            vb = self.nodes[side * b]
            self.nodes[side * pos] = 0.5 * (va + vb) + sigma * float(g)
        return self.nodes[m]

    # -- dense banded evaluation ---------------------------------------------

    def _dense_side(self, side: int, p_lo: int, p_hi: int, stride: int) -> np.ndarray:
        """Values at side*(p_lo, p_lo+stride, ..., p_hi); stride a power of two,
        0 < p_lo <= p_hi, both multiples of stride.

        Plans the overlapping segments, emits every bridge node's hash word
        (numba), maps all words to normals in one vectorized inverse-CDF call,
        then resolves the bridge values (numba).  Bitwise identical to
        per-point value_at on the same grid.
        """
        out = np.empty((p_hi - p_lo) // stride + 1, dtype=np.float64)
        seg_lo = self._segment_of(p_lo, self.f_exp)
        seg_hi = self._segment_of(p_hi, self.f_exp)
        self._ensure_backbone(side, seg_hi)
        plans = []
        for seg in range(seg_lo, seg_hi + 1):
            a_seg = 0 if seg == 0 else 1 << (self.f_exp + seg - 1)
            b_seg = 1 << (self.f_exp + seg)
            lo_c = max(p_lo, a_seg)
            hi_c = min(p_hi, b_seg)
            if lo_c > hi_c:
                continue
            lo_c = (lo_c // stride) * stride  # multiples of stride by construction
            hi_c = -(-hi_c // stride) * stride
            seg_len = b_seg - a_seg
            depths = max(0, (seg_len // stride).bit_length() - 1) if stride < seg_len else 0
            prefixes, sigmas = self._segment_tables(side, seg, depths)
            cap = 2 * ((hi_c - lo_c) // stride) + 2 * depths + 4
            plans.append((seg, a_seg, seg_len, lo_c, hi_c, prefixes, sigmas, cap))

        words = np.empty(sum(p[-1] for p in plans), dtype=np.uint64)
        counts = []
        off = 0
        for seg, a_seg, seg_len, lo_c, hi_c, prefixes, sigmas, cap in plans:
            n = _segment_words(a_seg, seg_len, lo_c, hi_c, stride, prefixes, words[off:])
            counts.append(n)
            off += n
        gauss = _gauss_from_words(words[:off])

        buf = np.empty((p_hi - p_lo) // stride + 4, dtype=np.float64)
        buf_a = np.empty(buf.size + 4, dtype=np.float64)
        buf_b = np.empty(buf.size + 4, dtype=np.float64)
        off = 0
        for (seg, a_seg, seg_len, lo_c, hi_c, prefixes, sigmas, _cap), n in zip(plans, counts):
            va = 0.0 if a_seg == 0 else self.nodes[side * a_seg]
            vb = self.nodes[side * (a_seg + seg_len)]
            n_vals, first = _segment_values(
                va, vb, a_seg, seg_len, lo_c, hi_c, stride,
                sigmas, gauss[off : off + n], buf_a, buf_b, buf,
            )
            off += n
            if n_vals:
                dest = (first - p_lo) // stride
                out[dest : dest + n_vals] = buf[:n_vals]
        return out

    def values_on_grid(self, m_lo: int, m_hi: int, stride: int) -> np.ndarray:
        if self._grid_memo is not None:
            key, arr = self._grid_memo
            if key == (m_lo, m_hi, stride):
                return arr
        # serve non power-of-two strides by refining to the largest dyadic divisor
        s2 = stride & (-stride)
        if s2 != stride:
            sub = self.values_on_grid(m_lo, m_hi, s2)
            return sub[:: stride // s2]
        n = (m_hi - m_lo) // stride + 1
        out = np.zeros(n, dtype=np.float64)
        if m_hi > 0:
            p_lo = max(m_lo, stride)
            vals = self._dense_side(1, p_lo, m_hi, stride)
            out[(p_lo - m_lo) // stride :] = vals
        if m_lo < 0:
            p_hi = min(m_hi, -stride)
            vals = self._dense_side(-1, -p_hi, -m_lo, stride)
            out[: (p_hi - m_lo) // stride + 1] = vals[::-1]
        out.setflags(write=False)
        self._grid_memo = ((m_lo, m_hi, stride), out)
        return out


class ZeroField:
    """Noise-free stand-in with the PotentialField evaluation protocol."""

    def __init__(self, L: int, delta_min: float = 2.0**-6):
        self.L = int(L)
        self.delta_min = float(delta_min)

    def _check(self, x: int) -> None:
        if not 1 <= x <= self.L - 1:
            raise ValueError(f"column {x} outside interior 1..{self.L - 1}")

    def value(self, x: int, y: float) -> float:
        self._check(x)
        if not math.isfinite(y):
            raise ValueError("height must be finite")
        return 0.0

    def increment(self, x: int, y_lo: float, y_hi: float) -> float:
        return self.value(x, y_hi) - self.value(x, y_lo)

    def values_on_grid(self, x: int, m_lo: int, m_hi: int, stride: int) -> np.ndarray:
        self._check(x)
        return np.zeros((m_hi - m_lo) // stride + 1, dtype=np.float64)


class PotentialField:
    """Quenched disorder for a system of size L: one independent two-sided
    Brownian motion per interior column, evaluable at any height.

    Evaluation is pure: value(x, y) is a function of (master_seed, x, y
    rounded to delta_min) only.  Distinct columns use disjoint key streams.
    Caches are per-column and append-only, so concurrent readers in one
    process only ever race on inserting identical values; workers in other
    processes share nothing.
    """

    def __init__(self, master_seed: int, L: int, delta_min: float = 2.0**-6):
        if L < 2:
            raise ValueError("system size must be at least 2")
        f_exp = round(-math.log2(delta_min))
        if f_exp < 0 or 2.0**-f_exp != delta_min:
            raise ValueError("delta_min must be 2**-k for integer k >= 0")
        self.master_seed = int(master_seed) & _MASK
        self.L = int(L)
        self.delta_min = float(delta_min)
        self.f_exp = f_exp
        self._columns: dict[int, _Column] = {}

    def _column(self, x: int) -> _Column:
        if not 1 <= x <= self.L - 1:
            raise ValueError(f"column {x} outside interior 1..{self.L - 1}")
        col = self._columns.get(x)
        if col is None:
            col = _Column(x, self.f_exp, self.master_seed)
            self._columns[x] = col
        return col

    def index_of(self, y: float) -> int:
        """Nearest grid index of a height (ties to even, like round())."""
        if not math.isfinite(y):
            raise ValueError("height must be finite")
        return round(y / self.delta_min)

    def value(self, x: int, y: float) -> float:
        """W(x, y) after rounding y to the delta_min grid."""
        return self._column(x).value_at(self.index_of(y))

    def increment(self, x: int, y_lo: float, y_hi: float) -> float:
        """W(x, y_hi) - W(x, y_lo); disjoint intervals in one column are
        independent in law."""
        col = self._column(x)
        return col.value_at(self.index_of(y_hi)) - col.value_at(self.index_of(y_lo))

    def values_on_grid(self, x: int, m_lo: int, m_hi: int, stride: int = 1) -> np.ndarray:
        """W(x, m*delta_min) for m = m_lo, m_lo+stride, ..., m_hi.

        m_lo and m_hi must be multiples of stride.  Bitwise identical to
        per-point value() calls on the same grid.
        """
        if m_lo > m_hi:
            raise ValueError("empty grid range")
        if stride <= 0 or m_lo % stride or m_hi % stride:
            raise ValueError("grid bounds must be multiples of a positive stride")
        return self._column(x).values_on_grid(m_lo, m_hi, stride)
