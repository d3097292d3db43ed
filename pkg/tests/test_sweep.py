"""Harness contracts: reproducibility, seed stability, failure accounting,
persistence, and aggregation."""

import dataclasses
import math

import numpy as np
import pytest

from polymerlab.config import ConfigError, ExperimentConfig, load_config
from polymerlab.potential import mix_seed
from polymerlab.sweep import (
    mc_sweep,
    modulus_table,
    read_sweep,
    run_replicate,
    scaling_report,
    write_sweep,
)

SMALL = ExperimentConfig(
    master_seed=5, sizes=(16, 32, 64), replicates=3, grid_spacing=0.25,
    enable_frontier=True,
)


@pytest.fixture(scope="module")
def small_sweep():
    return mc_sweep(SMALL)


def test_single_record_reproducible():
    cfg = ExperimentConfig(master_seed=1, sizes=(32,), replicates=1, grid_spacing=0.25)
    a = mc_sweep(cfg)
    b = mc_sweep(cfg)
    assert len(a.records) == 1
    ra, rb = a.records[0], b.records[0]
    for f in dataclasses.fields(ra):
        if f.name == "runtime":
            continue
        assert getattr(ra, f.name) == getattr(rb, f.name), f.name


def test_different_master_seeds_differ():
    a = mc_sweep(ExperimentConfig(master_seed=1, sizes=(32,), replicates=1, grid_spacing=0.25))
    b = mc_sweep(ExperimentConfig(master_seed=2, sizes=(32,), replicates=1, grid_spacing=0.25))
    assert a.records[0].min_energy != b.records[0].min_energy


def test_replicate_seeds_stable_under_count_change():
    assert mix_seed(7, 64, 3) == mix_seed(7, 64, 3)
    assert mix_seed(7, 64, 3) != mix_seed(7, 64, 4)
    assert mix_seed(7, 64, 3) != mix_seed(7, 32, 3)
    cfg4 = ExperimentConfig(master_seed=9, sizes=(32,), replicates=2, grid_spacing=0.25)
    cfg8 = dataclasses.replace(cfg4, replicates=4)
    a = mc_sweep(cfg4)
    b = mc_sweep(cfg8)
    assert [r.seed for r in a.records] == [r.seed for r in b.records[:2]]
    assert a.records[0].min_energy == b.records[0].min_energy


def test_parallel_equals_serial(small_sweep):
    par = mc_sweep(dataclasses.replace(SMALL, jobs=2))
    assert len(par.records) == len(small_sweep.records)
    for ra, rb in zip(small_sweep.records, par.records):
        assert ra.seed == rb.seed and ra.min_energy == rb.min_energy
        assert ra.per_scale == rb.per_scale


def test_band_failures_are_loud_not_silent():
    cfg = ExperimentConfig(
        master_seed=3, sizes=(32,), replicates=3, grid_spacing=0.25,
        band_half_width=0.25, band_cap=0,
    )
    res = mc_sweep(cfg)
    assert len(res.records) + len(res.failures) == 3
    assert res.failures, "expected band-cap failures to be recorded"
    for L, rep, reason in res.failures:
        assert L == 32 and "band cap" in reason


def test_sweep_roundtrip(tmp_path, small_sweep):
    write_sweep(small_sweep, tmp_path)
    back = read_sweep(tmp_path, SMALL)
    assert len(back.records) == len(small_sweep.records)
    for ra, rb in zip(small_sweep.records, back.records):
        assert ra.seed == rb.seed
        assert ra.min_energy == rb.min_energy
        assert ra.per_scale == rb.per_scale
        assert ra.aggregate == rb.aggregate
        assert ra.modulus == rb.modulus
        assert ra.unit_ball_sup == rb.unit_ball_sup


def test_scaling_report_fields(small_sweep):
    rep = scaling_report(small_sweep)
    assert rep.sizes == [16, 32, 64]
    for L in rep.sizes:
        entry = rep.per_size[L]
        assert entry["n"] == 3
        assert entry["rate"] > 0  # the flat competitor forces min E < 0
        assert entry["norm_mass_over_L2_3"]["n"] == 3
    assert rep.alpha_from_energy > 0
    assert rep.alpha_from_dirichlet > 0
    assert rep.alpha_from_sup is not None
    assert {"slope", "r2", "se_slope"} <= set(rep.dirichlet_regression)
    assert set(rep.trend_gates) >= {"mass_norm", "mid_norm", "modulus_max"}


def test_scaling_report_needs_three_sizes():
    cfg = ExperimentConfig(master_seed=1, sizes=(16, 32), replicates=2, grid_spacing=0.25)
    with pytest.raises(ValueError):
        scaling_report(mc_sweep(cfg))


def test_report_is_pure(small_sweep, tmp_path):
    a = scaling_report(small_sweep)
    b = scaling_report(small_sweep)
    a.to_json(tmp_path / "a.json")
    b.to_json(tmp_path / "b.json")
    assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()


def test_modulus_table_rows(small_sweep):
    table = modulus_table(small_sweep)
    for L, rows in table.items():
        gaps = [g for g, _v, _n in rows]
        assert gaps == sorted(gaps)
        for _g, v, n in rows:
            assert v >= 0 and n > 0


def test_aggregate_is_suffix_sum(small_sweep):
    r = small_sweep.records[0]
    scales = sorted(r.per_scale[2.0])
    for l in scales:
        expected = sum(v for s, v in r.per_scale[2.0].items() if s >= l)
        assert math.isclose(r.aggregate[l], expected, rel_tol=1e-12)


def test_run_replicate_zero_mid_for_tiny():
    cfg = ExperimentConfig(master_seed=1, sizes=(16,), replicates=1, grid_spacing=0.25)
    rec = run_replicate(cfg, 16, 0)
    assert rec.L == 16 and rec.replicate == 0
    assert rec.min_energy <= 0.0
    assert set(rec.per_scale) == {2.0, 2.5, 3.0}


@pytest.fixture(scope="module")
def frontier_sweep():
    cfg = ExperimentConfig(
        master_seed=31, sizes=(64, 256, 1024), replicates=24, grid_spacing=0.125,
        band_rule=8.0, enable_frontier=True, enable_modulus=False, jobs=2,
    )
    return mc_sweep(cfg)


def test_dirichlet_norm_tracks_unit_ball_sup(frontier_sweep):
    # ||D(h_*)/L||_1 tracks ||sup of W/L on the unit ball||_{4/3}^{4/3} up to
    # the optimizer's natural constant: D* = (sup/4)^{4/3}; a factor-4 band
    # around that is the tolerance
    from polymerlab.stats import orlicz_norm

    for L in frontier_sweep.sizes():
        recs = frontier_sweep.at_size(L)
        d_norm = orlicz_norm([r.dirichlet / L for r in recs], 1.0).nu_hat
        sups = [r.unit_ball_sup for r in recs if r.unit_ball_sup is not None]
        matched = (orlicz_norm(sups, 4.0 / 3.0).nu_hat / 4.0) ** (4.0 / 3.0)
        assert matched / 4.0 <= d_norm <= 4.0 * matched, (L, d_norm, matched)


def test_unit_ball_sup_grows_like_log_three_quarters(frontier_sweep):
    # mean sup / ln^(3/4) L stays positive and does not collapse across sizes
    import numpy as np

    ratios = []
    for L in frontier_sweep.sizes():
        sups = [r.unit_ball_sup for r in frontier_sweep.at_size(L)]
        ratios.append(float(np.mean(sups)) / math.log(L) ** 0.75)
    assert all(r > 0 for r in ratios)
    assert min(ratios) >= 0.5 * max(ratios), ratios


def test_jensen_chain_on_minimizer_ensembles(frontier_sweep):
    # ||D(h_{*,>=l})/L||_{p/2}^{p/2} <= ||D_p(h_{*,>=l})/L||_1 within tolerance
    from polymerlab.energy import HeightConfig, dirichlet, dirichlet_p
    from polymerlab.minimize import MinimizeOptions, minimize
    from polymerlab.multiscale import coarsen
    from polymerlab.potential import PotentialField
    from polymerlab.stats import orlicz_norm

    L = 256
    levels = (4, 16)
    samples = {(l, p): [] for l in levels for p in (2.0, 2.5, 3.0)}
    for rec in frontier_sweep.at_size(L):
        fld = PotentialField(rec.seed, L)
        h = minimize(fld, L, 0.0, 0.0, MinimizeOptions(grid_spacing=0.125, band_rule=8.0)).config
        for l in levels:
            tail = coarsen(h, l)
            for p in (2.0, 2.5, 3.0):
                samples[(l, p)].append(dirichlet_p(HeightConfig(0, tail.heights), p) / L)
    for l in levels:
        d2 = orlicz_norm(samples[(l, 2.0)], 1.0).nu_hat  # D = D_2
        for p in (2.5, 3.0):
            lhs = orlicz_norm(samples[(l, 2.0)], p / 2.0).nu_hat ** (p / 2.0)
            rhs = orlicz_norm(samples[(l, p)], 1.0).nu_hat
            assert lhs <= rhs * (1.0 + 0.05), (l, p, lhs, rhs)
        assert d2 > 0


def test_config_validation_messages():
    with pytest.raises(ConfigError, match="sizes"):
        ExperimentConfig(sizes=(12,)).validate()
    with pytest.raises(ConfigError, match="grid_spacing"):
        ExperimentConfig(grid_spacing=0.3).validate()
    with pytest.raises(ConfigError, match="mu_values"):
        ExperimentConfig(mu_values=(2.0, 1.0)).validate()


def test_config_file_formats(tmp_path):
    kv = tmp_path / "a.cfg"
    kv.write_text("master_seed = 4\nsizes = 16,32\nband_half_width = auto\n# comment\n")
    cfg = load_config(kv)
    assert cfg.master_seed == 4 and cfg.sizes == (16, 32) and cfg.band_half_width is None
    js = tmp_path / "b.json"
    js.write_text('{"master_seed": 4, "sizes": [16, 32], "band_half_width": null}')
    assert load_config(js) == cfg
    bad = tmp_path / "c.cfg"
    bad.write_text("unknown_key = 1\n")
    with pytest.raises(ConfigError, match="unknown_key"):
        load_config(bad)
