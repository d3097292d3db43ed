"""Configuration-driven experiment runner.

Subcommands: simulate (one ground state + its scale decomposition),
sweep (Monte Carlo records to CSV), report (aggregate a sweep into the
scaling report plus plot-ready data files), construct (competitor
ledgers), count (lattice counting tables).

Every artifact embeds schema version, tool version, config hash, and the
master seed in header comments; reruns with the same config byte-identical
(timings.csv, explicitly non-normative, is the one exception).
Exit codes: 0 success, 1 invalid configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .constructions import greedy_profile, two_scale_competitor
from .counting import count_ball, count_bins, minimal_c0
from .minimize import BandExhaustedError, MinimizeOptions, minimize
from .multiscale import decompose
from .potential import PotentialField, mix_seed
from .stats import comparison_suite
from .sweep import mc_sweep, read_sweep, scaling_report, write_sweep


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polymerlab",
        description="ground states and scaling statistics for an interface in columnar Brownian disorder",
    )
    parser.add_argument("--config", type=Path, help="experiment config file (key=value or JSON)")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--out", type=Path, help="override the output directory")
    parser.add_argument("--jobs", type=int, help="override the worker count")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument(
        "command",
        choices=["simulate", "sweep", "report", "construct", "count"],
    )
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=str(args.out))
    if args.jobs is not None:
        cfg = replace(cfg, jobs=args.jobs)
    cfg.validate()
    return cfg


def _opts(cfg: ExperimentConfig) -> MinimizeOptions:
    return MinimizeOptions(
        grid_spacing=cfg.grid_spacing,
        band_half_width=cfg.band_half_width,
        band_rule=cfg.band_rule,
        band_cap=cfg.band_cap,
    )


def _cmd_simulate(cfg: ExperimentConfig, out: Path, verbose: bool) -> int:
    L = cfg.sizes[0]
    seed = mix_seed(cfg.master_seed, L, 0)
    fld = PotentialField(seed, L, cfg.delta_min)
    gs = minimize(fld, L, 0.0, 0.0, _opts(cfg))
    header = (*cfg.header_lines(), f"L={L}", f"replicate_seed={seed}")
    gs.config.to_csv(out / "ground_state.csv", header)
    gs.to_json(out / "ground_state.json", {"L": L, "seed": seed, "config_hash": cfg.config_hash()})
    decompose(gs.config).to_csv(out / "decomposition.csv", header)
    if verbose:
        print(f"L={L} min energy {gs.breakdown.total:.6g} (D {gs.breakdown.dirichlet:.6g})")
    return 0


def _cmd_sweep(cfg: ExperimentConfig, out: Path, verbose: bool) -> int:
    result = mc_sweep(cfg)
    write_sweep(result, out)
    if result.failures:
        print(f"warning: {len(result.failures)} replicate(s) excluded "
              f"(band cap); see failures.csv", file=sys.stderr)
    if verbose:
        print(f"{len(result.records)} records -> {out}")
    return 0


def _cmd_report(cfg: ExperimentConfig, out: Path, verbose: bool) -> int:
    result = read_sweep(out, cfg)
    if len({r.L for r in result.records}) < 3:
        raise ConfigError("report: sweep must cover at least three system sizes")
    rep = scaling_report(result)
    rep.to_json(out / "scaling_report.json")
    header = "\n".join(f"# {line}" for line in cfg.header_lines())
    with open(out / "dirichlet_vs_logL.dat", "w") as fh:
        fh.write(header + "\n# ln(L)  mean D/L\n")
        for L in rep.sizes:
            fh.write(f"{np.log(L)!r} {rep.per_size[L]['mean_dirichlet_over_L']!r}\n")
    with open(out / "rate_vs_logL.dat", "w") as fh:
        fh.write(header + "\n# ln(L)  energy rate\n")
        for L in rep.sizes:
            fh.write(f"{np.log(L)!r} {rep.per_size[L]['rate']!r}\n")
    lmax = rep.sizes[-1]
    with open(out / "per_scale_flatness.dat", "w") as fh:
        fh.write(header + "\n# ln(l)  mean D(h_l)/L at largest size\n")
        for l, v in sorted((int(k), v) for k, v in rep.flatness["per_scale_means"].items()):
            fh.write(f"{np.log(l)!r} {v!r}\n")
    if verbose:
        print(f"report for sizes {rep.sizes} -> {out / 'scaling_report.json'}")
    return 0


def _cmd_construct(cfg: ExperimentConfig, out: Path, verbose: bool) -> int:
    header = cfg.header_lines()
    wrote = False
    for L in cfg.sizes:
        seed = mix_seed(cfg.master_seed, L, 0)
        fld = PotentialField(seed, L, cfg.delta_min)
        if cfg.enable_greedy:
            led = greedy_profile(fld, L)
            led.to_csv(out / f"greedy_choices_L{L}.csv", (*header, f"L={L}"))
            led.to_json(out / f"greedy_L{L}.json", {"seed": seed})
            wrote = True
        if cfg.enable_two_scale:
            block = cfg.two_scale_block or max(2, 1 << (L.bit_length() // 2))
            if block < L:
                led = two_scale_competitor(fld, L, block, _opts(cfg))
                led.to_json(out / f"two_scale_L{L}_l{block}.json", {"seed": seed})
                wrote = True
        if cfg.enable_comparison:
            rep = comparison_suite(cfg.master_seed, L, cfg.comparison_trials, _opts(cfg))
            with open(out / f"comparison_L{L}.txt", "w") as fh:
                for line in header:
                    fh.write(f"# {line}\n")
                fh.write(
                    f"trials={rep.trials}\n"
                    f"submodularity_violations={rep.submodularity_violations}\n"
                    f"order_violations={rep.order_violations}\n"
                )
            wrote = True
    if not wrote:
        raise ConfigError(
            "construct: enable at least one of enable_greedy, enable_two_scale, enable_comparison"
        )
    if verbose:
        print(f"construction ledgers -> {out}")
    return 0


def _cmd_count(cfg: ExperimentConfig, out: Path, verbose: bool) -> int:
    c0 = minimal_c0()
    lines = ["N,D,Z,bound,ok"]
    for n in range(1, 7):
        for d in (0, 1, 2, 4, 8, 16):
            z = count_ball(n, d).Z
            bound = (c0 * (d + 1)) ** (n / 2)
            lines.append(f"{n},{d},{z},{bound!r},{int(z <= bound)}")
    with open(out / "ball_counts.csv", "w") as fh:
        for line in cfg.header_lines():
            fh.write(f"# {line}\n")
        fh.write(f"# minimal C0 on grid = {c0!r}\n")
        fh.write("\n".join(lines) + "\n")

    bin_lines = ["L,l,D_hat,count,product_bound"]
    for L, l in ((8, 2), (16, 2), (16, 4)):
        for d_hat in (0.5, 1.0, 2.0):
            bc = count_bins(L, l, d_hat)
            bin_lines.append(f"{L},{l},{d_hat!r},{bc.count},{bc.product_bound!r}")
    with open(out / "bin_counts.csv", "w") as fh:
        for line in cfg.header_lines():
            fh.write(f"# {line}\n")
        fh.write("\n".join(bin_lines) + "\n")
    if verbose:
        print(f"counting tables -> {out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        handler = {
            "simulate": _cmd_simulate,
            "sweep": _cmd_sweep,
            "report": _cmd_report,
            "construct": _cmd_construct,
            "count": _cmd_count,
        }[args.command]
        return handler(cfg, out, args.verbose)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (BandExhaustedError, RuntimeError, OSError, ValueError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
