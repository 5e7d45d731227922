"""Command-line entry point: ``qgstorm {simulate,ensemble,verify,noise-check}``.

Exit codes: 0 success, 1 verification failure, 2 config error,
3 runtime error or blow-up, 4 I/O error.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

from . import __version__
from .battery import run_battery
from .config import KEYS, ConfigError, RunConfig, parse_config
from .dynamics import simulate
from .ensemble import EnsembleConfig, run_ensemble
from .io import write_ensemble_csv, write_snapshot, write_trajectory_csv
from .noise import check_summability, eigenfunction_bounds_check, kappa_estimate

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3, 4


def _metadata(cfg: RunConfig, verdict: str, extra: list[str] = ()) -> list[str]:
    lines = [f"qgstorm {__version__}", f"seed = {cfg.seed}", f"summability = {verdict}"]
    lines += [f"flag: {f}" for f in cfg.model_params().flags()]
    lines += list(extra)
    # workers and out do not affect results; leaving them out keeps reruns byte-identical
    lines += ["config:"] + [ln for ln in cfg.to_text().splitlines()
                            if not ln.startswith(("workers ", "out "))]
    return lines


def _verdict(cfg: RunConfig) -> str:
    return check_summability(cfg.noise_spec(), cfg.nu).verdict


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: RunConfig, args) -> int:
    verdict = _verdict(cfg)
    p = cfg.model_params()
    rec = simulate(p, cfg.noise_spec(), cfg.initial_field(), cfg.T, cfg.dt, scheme=cfg.scheme,
                   stride=cfg.stride, keep_fields=cfg.snapshots)
    out = _outdir(cfg)
    extra = [f"aborted: {rec.abort_reason}"] if rec.aborted else []
    path = out / "trajectory.csv"
    write_trajectory_csv(path, rec, _metadata(cfg, verdict, extra))
    if cfg.snapshots:
        snap = out / "snapshots"
        snap.mkdir(exist_ok=True)
        for i, (t, w) in enumerate(zip(rec.times, rec.fields["omega"])):
            write_snapshot(snap / f"omega_{i:05d}.qgsf", w, t)
    print(f"wrote {path} ({len(rec)} records)")
    if rec.aborted:
        print(f"error: {rec.abort_reason}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_ensemble(cfg: RunConfig, args) -> int:
    verdict = _verdict(cfg)
    ecfg = EnsembleConfig(cfg.model_params(), cfg.noise_spec(), cfg.initial_field(),
                          n_traj=cfg.n_traj, base_seed=cfg.seed, T=cfg.T, h=cfg.dt,
                          scheme=cfg.scheme, stride=cfg.stride, workers=cfg.workers)
    t0 = time.perf_counter()
    res = run_ensemble(ecfg)
    elapsed = time.perf_counter() - t0
    out = _outdir(cfg)
    path = out / "ensemble.csv"
    extra = [f"n_traj = {cfg.n_traj}", f"failures = {len(res.failures)}",
             f"blowups = {res.stats.blowups}"]
    write_ensemble_csv(path, res.stats, _metadata(cfg, verdict, extra))
    print(f"wrote {path}: {cfg.n_traj} trajectories in {elapsed:.1f}s, "
          f"{res.stats.blowups} blow-ups, {len(res.failures)} failures")
    for i, msg in sorted(res.failures.items()):
        print(f"trajectory {i}: {msg}", file=sys.stderr)
    return EXIT_RUNTIME if res.failures or res.stats.blowups else EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    results = run_battery(cfg.model_params(), cfg.noise_spec(), T=cfg.T, h=cfg.dt, seed=cfg.seed)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return EXIT_VERIFY
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_noise_check(cfg: RunConfig, args) -> int:
    rep = check_summability(cfg.noise_spec(), cfg.nu)
    bounds = eigenfunction_bounds_check(*cfg.modes, nu=cfg.nu)
    kappa = kappa_estimate(seed=cfg.seed)
    print(f"summability      {rep.verdict} ({rep.method}; partial sum at k={rep.k[-1]}: "
          f"{rep.partial_sums[-1]:.6g})")
    print(f"eigen sup        {bounds.c_sup:.17g}")
    print(f"gradient ratio   {bounds.grad_ratio:.6g} (bound 2/sqrt(nu) = {2 / math.sqrt(cfg.nu):.6g})")
    print(f"kappa(D)         {kappa:.6g}")
    if args.strict and rep.verdict != "converges":
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "ensemble": cmd_ensemble, "verify": cmd_verify,
            "noise-check": cmd_noise_check}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgstorm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qgstorm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--strict", action="store_true",
                        help="noise-check: fail unless the noise is summable")
        for key in KEYS:
            sp.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}", metavar="VALUE")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args)
    except OSError as exc:
        print(f"I/O error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
