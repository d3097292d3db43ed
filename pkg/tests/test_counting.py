"""Counting oracles: exact ball counts, the (C0(D+1))^(N/2) bound, bin counts."""

import itertools
import math

import numpy as np
import pytest

from polymerlab.counting import bound_check, count_ball, count_bins, minimal_c0


def brute_ball(N, D, permute=None, flip=None):
    r = math.isqrt(math.ceil(N * D)) + 1
    count = 0
    for y in itertools.product(range(-r, r + 1), repeat=N):
        if permute:
            y = tuple(y[i] for i in permute)
        if flip:
            y = tuple(s * v for s, v in zip(flip, y))
        if sum(v * v for v in y) < N * D:
            count += 1
    return count


def test_hand_values():
    assert count_ball(1, 2).Z == 3
    assert count_ball(2, 1).Z == 5
    for n in (1, 3, 8):
        assert count_ball(n, 0).Z == 0


def test_against_brute_force():
    for n, d in [(1, 2), (2, 1), (2, 3.5), (3, 2), (4, 1.25), (5, 2), (3, 0.1)]:
        assert count_ball(n, d).Z == brute_ball(n, d)


def test_symmetry_under_permutation_and_flips():
    for n, d in [(3, 2), (4, 1.5)]:
        base = count_ball(n, d).Z
        assert base == brute_ball(n, d, permute=list(reversed(range(n))))
        assert base == brute_ball(n, d, flip=[-1] * n)


def test_caps():
    with pytest.raises(ValueError):
        count_ball(9, 1)
    with pytest.raises(ValueError):
        count_ball(2, 65)
    with pytest.raises(ValueError):
        count_ball(0, 1)


def test_bound_holds_with_minimal_constant():
    c0 = minimal_c0()
    for n in range(1, 7):
        for d in range(0, 17):
            assert bound_check(n, d, c0)
    assert bound_check(1, 2, 3.0)  # 3 <= 3
    assert not bound_check(1, 2, 0.5)


def test_bound_monotone_in_constant():
    for n, d in [(2, 4), (5, 9)]:
        for c0 in (1.0, 2.0, 4.0, 8.0):
            if bound_check(n, d, c0):
                assert bound_check(n, d, 2 * c0)


def test_log_count_linear_in_log_d():
    # ln Z(N, D) <= C N ln D for D >= 2 with one fitted constant
    grid = [(n, d) for n in range(1, 7) for d in range(2, 17)]
    c_fit = max(math.log(count_ball(n, d).Z) / (n * math.log(d)) for n, d in grid)
    assert c_fit < 3.0
    for n, d in grid:
        assert math.log(count_ball(n, d).Z) <= c_fit * n * math.log(d) + 1e-9


def test_bins_strictness_and_bounds():
    assert count_bins(16, 2, 0.0).count == 0
    assert count_bins(8, 2, 0.0).count == 0
    for L, l, dh in [(8, 2, 0.5), (8, 2, 2.0), (16, 2, 0.5), (16, 2, 2.0),
                     (16, 4, 1.0), (16, 4, 4.0), (8, 4, 3.0)]:
        bc = count_bins(L, l, dh)
        assert bc.count <= bc.product_bound, (L, l, dh)


def test_bins_single_node_closed_form():
    # L=8, l=2: one interior node v in 4Z, one scale rho=4, energy v^2/4;
    # the cap reads v^2 < 128 * D_hat
    for dh in (0.3, 1.0, 2.5, 7.0):
        expected = len([v for v in range(-100, 101) if (4 * v) ** 2 < 128 * dh])
        assert count_bins(8, 2, dh).count == expected


def test_bins_inactive_constraint_fills_box():
    bc = count_bins(8, 2, 4.0)
    assert bc.count == 2 * bc.box_half_width + 1  # every box point is admissible


def test_bins_validation():
    with pytest.raises(ValueError):
        count_bins(32, 2, 1.0)
    with pytest.raises(ValueError):
        count_bins(16, 1, 1.0)  # L/l = 16 > 8
    with pytest.raises(ValueError):
        count_bins(16, 3, 1.0)
