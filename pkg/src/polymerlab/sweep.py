"""Monte Carlo harness and aggregation.

mc_sweep runs the configured analyses once per (system size, replicate):
ground state, scale decomposition, modulus samples, and optionally the
penalty frontier and the greedy competitor.  Replicate seeds derive from
(master_seed, L, replicate) through a fixed mixing function, so adding
replicates never reseeds existing ones and results are identical at any
parallelism degree.  Band-cap failures are recorded and excluded loudly,
never silently.

scaling_report folds a sweep into the estimator table: the energy rate per
size, the three limit estimates tied to it, the Dirichlet-vs-log
regression, per-scale flatness, tail norms with bootstrap corrections, and
the no-growth trend gates.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, ExperimentConfig
from .minimize import BandExhaustedError, MinimizeOptions, lagrangian_frontier, minimize
from .multiscale import decompose, dyadic_scales, per_scale_energy
from .constructions import greedy_profile
from .potential import PotentialField, mix_seed
from .stats import OLSFit, RunningMoments, bootstrap_norm, ols, orlicz_norm, trend_not_positive

__all__ = [
    "SweepRecord",
    "SweepResult",
    "mc_sweep",
    "scaling_report",
    "modulus_table",
    "ScalingReport",
    "write_sweep",
    "read_sweep",
]


@dataclass
class SweepRecord:
    L: int
    replicate: int
    seed: int
    min_energy: float
    dirichlet: float
    field_energy: float
    mass: float
    mid_height: float
    band_hits: int
    per_scale: dict[float, dict[int, float]]  # p -> scale -> D_p(h_l)/L
    aggregate: dict[int, float]  # scale -> D(h_{>=l})/L
    modulus: dict[int, list[float]]  # gap -> |h(x+g)-h(x)| samples
    unit_ball_sup: float | None = None
    frontier_extrapolated: bool | None = None
    greedy_field_energy: float | None = None
    runtime: float = 0.0  # diagnostic only; excluded from reproducible artifacts


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: list[SweepRecord]
    failures: list[tuple[int, int, str]]

    def at_size(self, L: int) -> list[SweepRecord]:
        return [r for r in self.records if r.L == L]

    def sizes(self) -> list[int]:
        return sorted({r.L for r in self.records})


def _modulus_gaps(L: int) -> list[int]:
    return [g for g in dyadic_scales(L) if g >= 1]


def _opts_from(config: ExperimentConfig) -> MinimizeOptions:
    return MinimizeOptions(
        grid_spacing=config.grid_spacing,
        band_half_width=config.band_half_width,
        band_rule=config.band_rule,
        band_cap=config.band_cap,
    )


def run_replicate(config: ExperimentConfig, L: int, replicate: int) -> SweepRecord:
    """One replicate's full analysis; pure function of (config, L, replicate)."""
    seed = mix_seed(config.master_seed, L, replicate)
    fld = PotentialField(seed, L, config.delta_min)
    opts = _opts_from(config)
    t0 = time.perf_counter()
    gs = minimize(fld, L, 0.0, 0.0, opts)
    h = gs.config

    dec = decompose(h)
    per_scale = {p: per_scale_energy(dec, p) for p in config.p_values}
    d2 = per_scale.get(2.0) or per_scale_energy(dec, 2.0)
    aggregate: dict[int, float] = {}
    running = 0.0
    for l in sorted(d2, reverse=True):
        running += d2[l]
        aggregate[l] = running

    modulus: dict[int, list[float]] = {}
    if config.enable_modulus:
        for g in _modulus_gaps(L):
            xs = np.arange(0, L - g + 1, g)  # non-overlapping pairs
            if xs.size > config.modulus_cap:
                thin = -(-xs.size // config.modulus_cap)
                xs = xs[::thin][: config.modulus_cap]
            diffs = h.heights[xs + g] - h.heights[xs]
            modulus[g] = [float(v) for v in np.abs(diffs)]

    sup = None
    extrapolated = None
    if config.enable_frontier:
        fr = lagrangian_frontier(fld, L, config.mu_values, opts)
        sup = fr.unit_ball_sup
        extrapolated = fr.extrapolated

    greedy_energy = None
    if config.enable_greedy:
        greedy_energy = greedy_profile(fld, L).field_energy

    return SweepRecord(
        L=L,
        replicate=replicate,
        seed=seed,
        min_energy=gs.breakdown.total,
        dirichlet=gs.breakdown.dirichlet,
        field_energy=gs.breakdown.field,
        mass=gs.breakdown.mass,
        mid_height=h.value(L // 2),
        band_hits=gs.band_hits,
        per_scale=per_scale,
        aggregate=aggregate,
        modulus=modulus,
        unit_ball_sup=sup,
        frontier_extrapolated=extrapolated,
        greedy_field_energy=greedy_energy,
        runtime=time.perf_counter() - t0,
    )


def _task(args):
    config, L, replicate = args
    try:
        return run_replicate(config, L, replicate), None
    except BandExhaustedError as exc:
        return None, (L, replicate, str(exc))


def mc_sweep(config: ExperimentConfig) -> SweepResult:
    config.validate()
    tasks = [(config, L, rep) for L in config.sizes for rep in range(config.replicates)]
    records: list[SweepRecord] = []
    failures: list[tuple[int, int, str]] = []
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_task, tasks, chunksize=1))
    else:
        outcomes = [_task(t) for t in tasks]
    for record, failure in outcomes:
        if record is not None:
            records.append(record)
        else:
            failures.append(failure)
    records.sort(key=lambda r: (r.L, r.replicate))
    return SweepResult(config=config, records=records, failures=failures)


# -- persistence -------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_sweep(result: SweepResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = [f"# {line}\n" for line in result.config.header_lines()]

    with open(out / "records.csv", "w") as fh:
        fh.writelines(header)
        fh.write(
            "L,replicate,seed,min_energy,dirichlet,field_energy,mass,mid_height,"
            "band_hits,unit_ball_sup,frontier_extrapolated,greedy_field_energy\n"
        )
        for r in result.records:
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        r.L, r.replicate, r.seed, r.min_energy, r.dirichlet,
                        r.field_energy, r.mass, r.mid_height, r.band_hits,
                        r.unit_ball_sup, r.frontier_extrapolated, r.greedy_field_energy,
                    )
                )
                + "\n"
            )

    with open(out / "per_scale.csv", "w") as fh:
        fh.writelines(header)
        fh.write("L,replicate,p,l,value\n")
        for r in result.records:
            for p in sorted(r.per_scale):
                for l in sorted(r.per_scale[p]):
                    fh.write(f"{r.L},{r.replicate},{_fmt(p)},{l},{_fmt(r.per_scale[p][l])}\n")

    with open(out / "aggregate.csv", "w") as fh:
        fh.writelines(header)
        fh.write("L,replicate,l,value\n")
        for r in result.records:
            for l in sorted(r.aggregate):
                fh.write(f"{r.L},{r.replicate},{l},{_fmt(r.aggregate[l])}\n")

    with open(out / "modulus.csv", "w") as fh:
        fh.writelines(header)
        fh.write("L,replicate,gap,sample_index,value\n")
        for r in result.records:
            for g in sorted(r.modulus):
                for i, v in enumerate(r.modulus[g]):
                    fh.write(f"{r.L},{r.replicate},{g},{i},{_fmt(v)}\n")

    if result.failures:
        with open(out / "failures.csv", "w") as fh:
            fh.writelines(header)
            fh.write("L,replicate,reason\n")
            for L, rep, reason in result.failures:
                fh.write(f"{L},{rep},{reason.replace(',', ';')}\n")

    # wall-clock diagnostics; the one artifact exempt from byte reproducibility
    with open(out / "timings.csv", "w") as fh:
        fh.write("# non-normative diagnostics; excluded from reproducibility guarantees\n")
        fh.write("L,replicate,seconds\n")
        for r in result.records:
            fh.write(f"{r.L},{r.replicate},{r.runtime:.3f}\n")


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    rows = []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#") or not line:
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    return header or [], rows


def read_sweep(out_dir, config: ExperimentConfig) -> SweepResult:
    out = Path(out_dir)
    _, rows = _read_csv(out / "records.csv")
    records: dict[tuple[int, int], SweepRecord] = {}
    for row in rows:
        (L, rep, seed, mine, dir_, fe, ms, mid, hits, sup, extra, greedy) = row
        key = (int(L), int(rep))
        records[key] = SweepRecord(
            L=int(L), replicate=int(rep), seed=int(seed),
            min_energy=float(mine), dirichlet=float(dir_), field_energy=float(fe),
            mass=float(ms), mid_height=float(mid), band_hits=int(hits),
            per_scale={}, aggregate={}, modulus={},
            unit_ball_sup=float(sup) if sup else None,
            frontier_extrapolated=bool(int(extra)) if extra else None,
            greedy_field_energy=float(greedy) if greedy else None,
        )
    _, rows = _read_csv(out / "per_scale.csv")
    for L, rep, p, l, value in rows:
        rec = records[(int(L), int(rep))]
        rec.per_scale.setdefault(float(p), {})[int(l)] = float(value)
    _, rows = _read_csv(out / "aggregate.csv")
    for L, rep, l, value in rows:
        records[(int(L), int(rep))].aggregate[int(l)] = float(value)
    mod_path = out / "modulus.csv"
    if mod_path.exists():
        _, rows = _read_csv(mod_path)
        for L, rep, g, _i, value in rows:
            records[(int(L), int(rep))].modulus.setdefault(int(g), []).append(float(value))
    failures = []
    fail_path = out / "failures.csv"
    if fail_path.exists():
        _, rows = _read_csv(fail_path)
        failures = [(int(L), int(rep), reason) for L, rep, reason in rows]
    ordered = [records[k] for k in sorted(records)]
    return SweepResult(config=config, records=ordered, failures=failures)


# -- aggregation -------------------------------------------------------------


def modulus_table(result: SweepResult, s: float = 2.0) -> dict[int, list[tuple[int, float, int]]]:
    """Per size: (gap, tail norm of |h(x+g)-h(x)| / (g (1+ln^{4/3}(L/g))), n)."""
    out: dict[int, list[tuple[int, float, int]]] = {}
    for L in result.sizes():
        rows = []
        pooled: dict[int, list[float]] = {}
        for r in result.at_size(L):
            for g, vals in r.modulus.items():
                pooled.setdefault(g, []).extend(vals)
        for g in sorted(pooled):
            norm = g * (1.0 + math.log(L / g) ** (4.0 / 3.0))
            vals = np.array(pooled[g]) / norm
            rows.append((g, orlicz_norm(vals, s).nu_hat, vals.size))
        out[L] = rows
    return out


@dataclass
class ScalingReport:
    schema_version: int
    config_hash: str
    sizes: list[int]
    per_size: dict[int, dict]
    alpha_from_energy: float
    alpha_from_dirichlet: float
    alpha_from_sup: float | None
    dirichlet_regression: dict
    flatness: dict
    aggregate_regression: dict
    trend_gates: dict
    modulus: dict[int, list[tuple[int, float, int]]]
    superadditivity: dict | None = None
    failures: list = field(default_factory=list)

    def to_json(self, path) -> None:
        doc = {
            "schema_version": self.schema_version,
            "config_hash": self.config_hash,
            "sizes": self.sizes,
            "per_size": {str(k): v for k, v in self.per_size.items()},
            "alpha_from_energy": self.alpha_from_energy,
            "alpha_from_dirichlet": self.alpha_from_dirichlet,
            "alpha_from_sup": self.alpha_from_sup,
            "dirichlet_regression": self.dirichlet_regression,
            "flatness": self.flatness,
            "aggregate_regression": self.aggregate_regression,
            "trend_gates": self.trend_gates,
            "modulus": {str(k): v for k, v in self.modulus.items()},
            "superadditivity": self.superadditivity,
            "failures": self.failures,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _fit_dict(fit: OLSFit) -> dict:
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r2": fit.r2,
        "se_slope": fit.se_slope,
        "n": fit.n,
    }


def energy_rate(records: list[SweepRecord]) -> tuple[float, float]:
    """-(mean min energy)/(L ln L) with its standard error."""
    L = records[0].L
    acc = RunningMoments().extend(-r.min_energy / (L * math.log(L)) for r in records)
    return acc.mean, acc.se


def scaling_report(result: SweepResult, bootstrap_seed: int = 0) -> ScalingReport:
    sizes = result.sizes()
    if len(sizes) < 3:
        raise ValueError("need at least three system sizes to build a scaling report")

    per_size: dict[int, dict] = {}
    for L in sizes:
        recs = result.at_size(L)
        rate, rate_se = energy_rate(recs)
        d_over_l = RunningMoments().extend(r.dirichlet / L for r in recs)
        ratios = [r.field_energy / r.dirichlet for r in recs if r.dirichlet > 0]
        entry = {
            "n": len(recs),
            "rate": rate,
            "rate_se": rate_se,
            "mean_dirichlet_over_L": d_over_l.mean,
            "se_dirichlet_over_L": d_over_l.se if len(recs) > 1 else 0.0,
            "ratio_field_to_dirichlet": float(np.mean(ratios)) if ratios else math.nan,
            "ratio_se": float(np.std(ratios, ddof=1) / math.sqrt(len(ratios)))
            if len(ratios) > 1
            else math.nan,
        }
        for name, vals, s in (
            ("norm_dirichlet_over_L_3_2", [r.dirichlet / L for r in recs], 1.5),
            ("norm_mass_over_L2_3", [r.mass / L**2 for r in recs], 3.0),
            ("norm_mid_over_L_3", [r.mid_height / L for r in recs], 3.0),
        ):
            corrected, se, point = bootstrap_norm(vals, s, seed=bootstrap_seed)
            entry[name] = {"corrected": corrected, "se": se, "point": point, "n": len(vals)}
        sups = [r.unit_ball_sup for r in recs if r.unit_ball_sup is not None]
        if sups:
            corrected, se, point = bootstrap_norm(sups, 2.0, seed=bootstrap_seed)
            entry["norm_unit_ball_sup_2"] = {
                "corrected": corrected, "se": se, "point": point, "n": len(sups),
            }
            entry["mean_unit_ball_sup"] = float(np.mean(sups))
        greedy = [r.greedy_field_energy for r in recs if r.greedy_field_energy is not None]
        if greedy:
            acc = RunningMoments().extend(g / (L * math.log(L)) for g in greedy)
            entry["greedy_rate"] = acc.mean
            entry["greedy_rate_se"] = acc.se
        per_size[L] = entry

    lmax = sizes[-1]
    ln_sizes = [math.log(L) for L in sizes]
    alpha_energy = per_size[lmax]["rate"]
    alpha_dirichlet = 3.0 * per_size[lmax]["mean_dirichlet_over_L"] / math.log(lmax)
    alpha_sup = None
    if "mean_unit_ball_sup" in per_size[lmax]:
        alpha_sup = (
            (3.0**0.75 / 4.0)
            * per_size[lmax]["mean_unit_ball_sup"]
            / math.log(lmax) ** 0.75
        ) ** (4.0 / 3.0)

    d_fit = ols(ln_sizes, [per_size[L]["mean_dirichlet_over_L"] for L in sizes])

    # flatness of the per-scale energies at the largest size
    recs = result.at_size(lmax)
    scale_means: dict[int, float] = {}
    if recs and recs[0].per_scale:
        p2 = 2.0
        scales = sorted(recs[0].per_scale[p2])
        for l in scales:
            scale_means[l] = float(np.mean([r.per_scale[p2][l] for r in recs]))
        window = [l for l in scales if 2 <= l <= lmax // 4]
        vals = [scale_means[l] for l in window]
        flat_ratio = max(vals) / min(vals) if vals and min(vals) > 0 else math.nan
    else:
        flat_ratio = math.nan
    flatness = {
        "L": lmax,
        "per_scale_means": {str(l): v for l, v in scale_means.items()},
        "window_ratio": flat_ratio,
    }

    if recs and recs[0].aggregate:
        ls = sorted(recs[0].aggregate)
        xs = [math.log(lmax / l) for l in ls]
        ys = [float(np.mean([r.aggregate[l] for r in recs])) for l in ls]
        agg_fit = _fit_dict(ols(xs, ys))
    else:
        agg_fit = {}

    trend_gates: dict[str, dict] = {}
    for name, key in (
        ("mass_norm", "norm_mass_over_L2_3"),
        ("mid_norm", "norm_mid_over_L_3"),
    ):
        ys = [per_size[L][key]["corrected"] for L in sizes]
        ok, fit = trend_not_positive(ln_sizes, ys)
        trend_gates[name] = {"pass": ok, **_fit_dict(fit)}
    modulus = modulus_table(result)
    if all(modulus.get(L) for L in sizes):
        ys = [max(v for _g, v, _n in modulus[L]) for L in sizes]
        ok, fit = trend_not_positive(ln_sizes, ys)
        trend_gates["modulus_max"] = {"pass": ok, **_fit_dict(fit)}

    return ScalingReport(
        schema_version=SCHEMA_VERSION,
        config_hash=result.config.config_hash(),
        sizes=sizes,
        per_size=per_size,
        alpha_from_energy=alpha_energy,
        alpha_from_dirichlet=alpha_dirichlet,
        alpha_from_sup=alpha_sup,
        dirichlet_regression=_fit_dict(d_fit),
        flatness=flatness,
        aggregate_regression=agg_fit,
        trend_gates=trend_gates,
        modulus=modulus,
        failures=[list(f) for f in result.failures],
    )
