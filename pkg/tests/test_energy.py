"""Energy functional oracles: hand values, Green-function identities,
variance identity for the disorder term."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_zero_boundary
from polymerlab.energy import (
    HeightConfig,
    dirichlet,
    dirichlet_form,
    dirichlet_p,
    field_term,
    green_function,
    mass,
    total_energy,
)
from polymerlab.potential import PotentialField, ZeroField


def test_dirichlet_p_hand_values():
    assert dirichlet_p(HeightConfig(0, [0, 1, 0]), 2) == 1.0
    assert dirichlet_p(HeightConfig(0, [0, 2, 0]), 2) == 4.0  # H=2 scaling of the unit tent
    v = dirichlet_p(HeightConfig(0, [0, 1, 2, 1, 0]), 3)
    assert math.isclose(v, math.sqrt(2), rel_tol=1e-12)
    assert dirichlet(HeightConfig(0, [0, 3, 1, -1, 0])) == 9.0


def test_dirichlet_p_rejects_small_p():
    with pytest.raises(ValueError):
        dirichlet_p(HeightConfig(0, [0, 1, 0]), 0.5)


def test_dirichlet_scaling():
    rng = np.random.default_rng(3)
    h = HeightConfig(0, random_zero_boundary(rng, 16))
    doubled = HeightConfig(0, 2.0 * h.heights)
    assert dirichlet_p(doubled, 2) == 4.0 * dirichlet_p(h, 2)  # exact for H = 2, p = 2
    for p in (2.5, 3.0):
        assert math.isclose(dirichlet_p(doubled, p), 2.0**p * dirichlet_p(h, p), rel_tol=1e-12)


def test_field_term_trivials():
    f = PotentialField(4, 8)
    zero = HeightConfig(0, np.zeros(9))
    assert field_term(f, zero) == 0.0
    one_site = HeightConfig(2, [0.5, 1.75, -0.25])  # single interior column x=3
    assert field_term(f, one_site) == f.value(3, 1.75)
    with pytest.raises(ValueError):
        field_term(f, HeightConfig(5, np.zeros(9)))  # span leaves [0, L]


def test_field_term_variance_identity():
    # Var(W(h)/L) = M(h)/L^2 for fixed h over independent fields
    L = 8
    h = HeightConfig(0, [0.0, 1.0, -2.0, 0.5, 3.0, -1.0, 0.25, 2.0, 0.0])
    target = mass(h) / L**2
    n = 10_000
    vals = np.fromiter(
        (field_term(PotentialField(s, L), h) / L for s in range(n)), dtype=float, count=n
    )
    se = target * math.sqrt(2.0 / (n - 1))
    assert abs(vals.var(ddof=1) - target) < 3 * se


def test_total_energy_consistency():
    f = PotentialField(11, 16)
    zero = HeightConfig(0, np.zeros(17))
    assert total_energy(f, zero).total == 0.0
    rng = np.random.default_rng(0)
    h = HeightConfig(0, random_zero_boundary(rng, 16))
    br = total_energy(f, h, ps=(2.0, 3.0))
    assert br.total == br.dirichlet - br.field
    assert abs(br.dirichlet - dirichlet(h)) == 0.0
    assert abs(br.field - field_term(f, h)) == 0.0
    assert abs(br.p_dirichlet[2.0] - br.dirichlet) < 1e-12
    assert br.mass == mass(h)


def test_mass_hand_values():
    assert mass(HeightConfig(0, np.zeros(5))) == 0.0
    assert mass(HeightConfig(0, [0, 1, 2, 1, 0])) == 4.0
    for L, y in ((4, 2), (16, 5), (64, 33)):
        assert mass(green_function(L, y).values) == (L - y) * y / 2


def test_green_function_hand_values():
    g = green_function(4, 2)
    assert list(g.values.heights) == [0, 0.5, 1, 0.5, 0]
    assert dirichlet(g.values) == (4 - 2) * 2 / (2 * 4)
    with pytest.raises(ValueError):
        green_function(8, 0)
    with pytest.raises(ValueError):
        green_function(8, 8)


def test_green_symmetry():
    L = 16
    for y in range(1, L):
        a = green_function(L, y).values
        b = green_function(L, L - y).values
        assert np.array_equal(a.heights, b.heights[::-1])


def test_representation_property():
    rng = np.random.default_rng(7)
    for L in (4, 16, 64):
        for _ in range(20):
            h = HeightConfig(0, random_zero_boundary(rng, L))
            for y in range(1, L):
                phi = green_function(L, y).values
                assert abs(dirichlet_form(h, phi) - h.value(y)) <= 1e-9


def test_dirichlet_form_identities():
    rng = np.random.default_rng(5)
    h = HeightConfig(0, random_zero_boundary(rng, 8))
    zero = HeightConfig(0, np.zeros(9))
    assert dirichlet_form(h, zero) == 0.0
    assert math.isclose(dirichlet_form(h, h), 2 * dirichlet_p(h, 2), rel_tol=1e-12)
    g = HeightConfig(0, random_zero_boundary(rng, 8))
    assert dirichlet_form(h, g) == dirichlet_form(g, h)
    with pytest.raises(ValueError):
        dirichlet_form(h, HeightConfig(0, np.zeros(5)))


def test_jensen_chain():
    rng = np.random.default_rng(11)
    for _ in range(10):
        L = 32
        h = HeightConfig(0, random_zero_boundary(rng, L))
        for p in (2.0, 2.5, 3.0):
            assert (dirichlet(h) / L) ** (p / 2) <= dirichlet_p(h, p) / L + 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        HeightConfig(0, [1.0])
    with pytest.raises(ValueError):
        HeightConfig(0, [0.0, math.inf, 0.0])


def test_zero_noise_energy_is_dirichlet():
    z = ZeroField(8)
    h = HeightConfig(0, [0, 1, 2, 1, 0, -1, 0, 1, 0])
    br = total_energy(z, h)
    assert br.total == br.dirichlet == dirichlet(h)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-8, 8), min_size=1, max_size=12))
def test_form_diagonal_matches_dirichlet(interior):
    h = HeightConfig(0, [0.0, *map(float, interior), 0.0])
    assert math.isclose(dirichlet_form(h, h), 2.0 * dirichlet(h), rel_tol=1e-12, abs_tol=1e-12)
