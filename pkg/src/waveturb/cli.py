"""Command line: one subcommand per experiment kind plus ``run`` and ``verify``.

Examples
--------
::

    waveturb run config.toml --out results/
    waveturb pbp-triad --config pbp.toml --seed 3
    waveturb verify --only 1 4 11
    waveturb defaults
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import KINDS, ConfigError, ExperimentConfig, defaults_table, load_config, validate_config
from .io import environment, file_digest, write_json, write_table

__all__ = ["main", "run_experiment", "build_parser"]


class BudgetError(RuntimeError):
    """Raised before a run that would exceed its resource budget."""


def _mc_cost(cfg: ExperimentConfig) -> float:
    # realizations x coupling terms; one CPU does roughly 1e5 (3-wave) or 2e4 (4-wave) units per second
    lat = cfg.sections["lattice"]
    N = lat["n_side"] ** lat["d"]
    terms = N**2 if cfg.kind == "mc-kinetic-3w" else N**3
    return cfg.get("ensemble", "R") * terms


def _dispatch(cfg: ExperimentConfig, workers: int) -> ex.Result:
    s = cfg.sections
    seed = cfg.seed
    if cfg.kind in ("mc-kinetic-3w", "mc-kinetic-4w"):
        sysd = s["system"]
        if cfg.kind == "mc-kinetic-4w" and s["lattice"]["n_side"] ** s["lattice"]["d"] > 400:
            raise BudgetError("mc-kinetic-4w is limited to 400 modes (quartet storage grows as N^3)")
        return ex.mc_kinetic(order=3 if cfg.kind.endswith("3w") else 4, d=s["lattice"]["d"],
                             n_side=s["lattice"]["n_side"], L=s["lattice"]["L"], system_kind=sysd["kind"],
                             epsilon=sysd["epsilon"], R=s["ensemble"]["R"], T=s["time"]["T"], seed=seed,
                             amplitude=s["spectrum"]["amplitude"], width=s["spectrum"]["width"],
                             law=s["ensemble"]["law"], antithetic=s["ensemble"]["antithetic"],
                             controls=s["ensemble"]["controls"], dt_fraction=s["time"]["dt_fraction"],
                             tolerance=s["kinetics"]["tolerance"], quantile=s["kinetics"]["quantile"],
                             workers=workers,
                             system_params={k: sysd[k] for k in ("sigma", "beta", "rho")})
    if cfg.kind == "perturbation-scaling":
        sysd, p = s["system"], s["perturbation"]
        return ex.perturbation_scaling(sysd["kind"], s["lattice"]["d"], s["lattice"]["n_side"], s["lattice"]["L"],
                                       p["epsilons"], p["T"], p["amplitude"], seed, p["dt_fraction"],
                                       system_params={k: sysd[k] for k in ("sigma", "beta", "rho")})
    if cfg.kind == "onemode-pdf":
        o = s["onemode"]
        return ex.onemode_pdf(o["n"], o["eta"], o["F"], o["s_cut"], o["cells"])
    p = s["pbp"]
    cells = max(p["cells"]) if cfg.kind == "pbp-triad" else s["scan"]["cells"]
    need = 8 * cells**3 * 14 / 1024**2
    if need > p["memory_mb"]:
        raise BudgetError(f"a {cells}^3 grid needs about {need:.0f} MiB, over pbp.memory_mb={p['memory_mb']:g}")
    if cfg.kind == "pbp-triad":
        return ex.pbp_triad(p["omega_q"], p["omega_r"], p["V"], p["epsilon"], p["delta_weight"], p["cells"],
                            p["domain"], p["marginal_domain"], form=p["form"])
    sc = s["scan"]
    return ex.kz_flux_scan(sc["strengths"], sc["cells"], sc["domain"], p["omega_q"], p["omega_r"], p["epsilon"],
                           p["form"])


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers=None, max_cost: float = 1e8) -> dict:
    """Run one configured experiment and write its bundle.

    The bundle holds one CSV (with schema sidecar) per table and
    ``summary.json`` with versions, the config hash, wall time, file digests
    and verdicts.  Returns the summary.
    """
    exp = cfg.sections["experiment"]
    out = Path(out_dir or exp["output"])
    workers = int(workers or exp["workers"])
    if cfg.kind.startswith("mc-kinetic") and _mc_cost(cfg) > max_cost:
        raise BudgetError(f"estimated work {_mc_cost(cfg):.2e} exceeds the budget {max_cost:.2e}; "
                          "reduce ensemble.R or the lattice size")
    t0 = time.perf_counter()
    result = _dispatch(cfg, workers)
    wall = time.perf_counter() - t0
    files = {}
    for name, table in result.tables.items():
        path = write_table(out, name, table)
        files[path.name] = file_digest(path)
    summary = {
        "kind": cfg.kind,
        "config": cfg.sections,
        "config_sha256": cfg.digest,
        "seed": cfg.seed,
        "versions": environment(),
        "wall_time_s": wall,
        "workers": workers,
        "files": files,
        "results": result.summary,
        "verdicts": [v.to_dict() for v in result.verdicts],
        "passed": result.passed,
    }
    write_json(out / "summary.json", summary)
    return summary


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="waveturb", description="Wave-turbulence statistics experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required):
        if config_required:
            sp.add_argument("config", help="TOML configuration file")
        else:
            sp.add_argument("--config", help="TOML configuration file (defaults used if omitted)")
        sp.add_argument("--seed", type=int, help="override experiment.seed")
        sp.add_argument("--workers", type=int, help="worker processes")
        sp.add_argument("--out", help="output directory")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--reproducible", dest="reproducible", action="store_true", default=None,
                       help="fixed seed and order-fixed merging (default)")
        g.add_argument("--no-reproducible", dest="reproducible", action="store_false",
                       help="draw a fresh seed when none is given")

    common(sub.add_parser("run", help="run the experiment named in a config file"), True)
    for kind in KINDS:
        common(sub.add_parser(kind, help=f"run a {kind} experiment"), False)
    v = sub.add_parser("verify", help="run the acceptance criteria")
    v.add_argument("--only", type=int, nargs="+", metavar="N", help="criterion numbers to run")
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--out", help="write verdicts.json here")
    sub.add_parser("defaults", help="print the configuration defaults table")
    return p


def _config_for(args) -> ExperimentConfig:
    if args.command == "run":
        cfg = load_config(args.config)
    elif args.config:
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"config file describes {cfg.kind}, not {args.command}", key="experiment.kind")
    else:
        cfg = validate_config(f'[experiment]\nkind = "{args.command}"\n')
    seed = args.seed
    reproducible = cfg.get("experiment", "reproducible") if args.reproducible is None else args.reproducible
    if seed is None and not reproducible:
        seed = int(np.random.SeedSequence().entropy % (2**63 - 1))
    return cfg.with_overrides(seed=seed, reproducible=reproducible, workers=args.workers, output=args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "defaults":
        print(defaults_table())
        return 0
    if args.command == "verify":
        from .acceptance import run_acceptance

        verdicts = run_acceptance(args.only, workers=args.workers)
        if args.out:
            write_json(Path(args.out) / "verdicts.json", {"versions": environment(),
                                                           "verdicts": [v.to_dict() for v in verdicts]})
        ok = all(v.passed for v in verdicts)
        print(f"{sum(v.passed for v in verdicts)}/{len(verdicts)} criteria passed")
        return 0 if ok else 1
    try:
        cfg = _config_for(args)
        summary = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BudgetError, MemoryError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 3
    for v in summary["verdicts"]:
        print(f"{'PASS' if v['passed'] else 'FAIL'}  {v['name']}: {v['detail']}")
    print(f"results in {os.path.abspath(cfg.get('experiment', 'output'))}")
    return 0 if summary["passed"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
