"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -v -s tests/test_acceptance.py`` to see the summary lines.
"""
import math
import time

import numpy as np
import pytest

from oracles import kappa_quadrature
from qgstorm import spectral
from qgstorm.battery import SUMMABILITY_CASES, energy_identity_order
from qgstorm.cli import main
from qgstorm.config import RunConfig
from qgstorm.dynamics import ModelParams, simulate
from qgstorm.ensemble import EnsembleConfig, ou_variance_test, run_ensemble
from qgstorm.io import write_trajectory_csv
from qgstorm.noise import NoiseSpec, check_summability, eigenfunction_bounds_check, kappa_estimate
from qgstorm.spectral import PI
from qgstorm.verification import convergence_ladder, monitor_bound, poincare_check, rayleigh_quotient

QUIET = NoiseSpec(mu_rule="none")


@pytest.fixture
def report(capsys):
    """Print ``[AC n] PASS|FAIL  detail  (elapsed)`` and assert ``ok``."""
    start = time.perf_counter()

    def emit(n: int, ok: bool, detail: str, limit: float):
        elapsed = time.perf_counter() - start
        ok = bool(ok) and elapsed < limit
        with capsys.disabled():
            print(f"\n[AC {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}  "
                  f"({elapsed:.1f}s, limit {limit:g}s)")
        assert ok, detail

    return emit


def test_ac01_spectral_exactness(report):
    eig_err = abs(spectral.eigenvalue(1, 1, 1.0) + 2 * PI**2)
    rq = poincare_check(32, 32)
    rq_mode = rayleigh_quotient(spectral.mode_field(32, 32, 1, 1))
    rq_err = max(abs(rq - 2 * PI**2), abs(rq_mode - 2 * PI**2))
    report(1, eig_err <= 1e-12 and rq_err <= 1e-9,
           f"eigenvalue err={eig_err:.2e}, Rayleigh err={rq_err:.2e}", 1.0)


def test_ac02_jacobian_orthogonality(report):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        psi, om = rng.standard_normal((32, 32)), rng.standard_normal((32, 32))
        J = spectral.jacobian(psi, om)
        scale = np.linalg.norm(psi) * np.linalg.norm(om)
        worst = max(worst, abs(spectral.inner(J, om)) / scale, abs(spectral.inner(J, psi)) / scale)
    report(2, worst <= 1e-9, f"max relative pairing={worst:.2e}", 10.0)


def test_ac03_linear_oracle(report):
    p = ModelParams(beta=0.0, modes=(8, 8))
    worst = 0.0
    for h in (1e-2, 1e-3):
        rec = simulate(p, QUIET, spectral.mode_field(8, 8, 1, 1), 1.0, h)
        exact = np.exp((spectral.eigenvalue(1, 1, p.nu) - p.r) * rec.times)
        assert rec.times[-1] == pytest.approx(1.0)
        worst = max(worst, float(np.abs(rec.l2 - exact).max()))
    report(3, worst <= 1e-10, f"max |l2 - exact|={worst:.2e}", 1.0)


def test_ac04_energy_decay(report):
    p = ModelParams(beta=0.0, modes=(32, 32))
    w0 = spectral.random_field(32, 32, np.random.default_rng(4), l2=3.0)
    rec = simulate(p, QUIET, w0, 1.0, 1e-3, stride=1)
    env = np.linalg.norm(w0) * np.exp(-(2 * PI**2 * p.nu + p.r) * rec.times)
    worst = float((rec.l2 / env).max())
    report(4, worst <= 1.01 and len(rec) == 1001, f"max ||w||/envelope={worst:.6f}", 30.0)


def test_ac05_energy_identity_order(report):
    p = ModelParams(nu=0.05, modes=(16, 16))
    w0 = spectral.random_field(16, 16, np.random.default_rng(5), l2=5.0)
    order, res = energy_identity_order(p, w0)
    report(5, order >= 1.8 and res[0] > res[1] > res[2],
           f"order={order:.3f}, residuals={', '.join(f'{r:.2e}' for r in res)}", 60.0)


def test_ac06_ou_statistics(report):
    rep = ou_variance_test(NoiseSpec(), ModelParams(), 0.05, 10_000,
                           modes=[(1, 1), (1, 2), (2, 2)], seed=6)
    detail = ", ".join(f"{m}: {s:.4g} in [{lo:.4g}, {hi:.4g}]"
                       for m, s, lo, hi in zip(rep.modes, rep.sample, rep.lower, rep.upper))
    report(6, rep.pass_fraction == 1.0, detail, 30.0)


def test_ac07_summability(report):
    got = [check_summability(NoiseSpec(gamma=g, mu_exponent=s), 1.0).verdict
           for g, s, _ in SUMMABILITY_CASES]
    want = [w for _, _, w in SUMMABILITY_CASES]
    right = sum(a == b for a, b in zip(got, want))
    report(7, right == len(want), f"{right}/{len(want)} pairs classified", 1.0)


def test_ac08_global_existence_ensemble(report):
    p = ModelParams(nu=1e-2, r=0.1, beta=1.0, modes=(32, 32))
    noise = NoiseSpec(gamma=0.5, mu_rule="power", mu_exponent=1.0)
    cfg = EnsembleConfig(p, noise, RunConfig().initial_field(), n_traj=100, T=2.0, h=1e-3,
                         stride=10, workers=4)
    res = run_ensemble(cfg)
    reports = [monitor_bound(rec, p) for rec in res.records]
    violated = sum(not r.satisfied for r in reports)
    margin = min(r.min_margin for r in reports)
    ok = (not res.failures and res.stats.blowups == 0 and len(res.records) == 100
          and violated == 0 and all(rec.times[-1] == pytest.approx(2.0) for rec in res.records))
    report(8, ok, f"blow-ups={res.stats.blowups}, failures={len(res.failures)}, "
                  f"monitor violations={violated}, min margin={margin:.3g}", 600.0)


def test_ac09_strong_convergence(report):
    w0 = spectral.random_field(32, 32, np.random.default_rng(0))
    lad = convergence_ladder(ModelParams(), NoiseSpec(), w0, 0.5, 0.5 / 4096, rungs=4, ratio=4,
                             paths=64)
    ok = lad.slope is not None and 0.6 <= lad.slope <= 1.3
    errs = ", ".join(f"{e:.2e}" for e in lad.errors)
    report(9, ok, f"order={lad.slope:.3f} ({lad.status}), errors={errs}", 600.0)


def test_ac10_reproducibility(report, tmp_path):
    base = dict(params=ModelParams(modes=(16, 16)), noise=NoiseSpec(),
                omega0=spectral.random_field(16, 16, np.random.default_rng(10)),
                n_traj=8, base_seed=10, T=0.2, h=1e-3, stride=5)
    blobs = {}
    for workers in (1, 4):
        res = run_ensemble(EnsembleConfig(workers=workers, **base))
        out = []
        for i, rec in enumerate(res.records):
            path = tmp_path / f"w{workers}_{i}.csv"
            write_trajectory_csv(path, rec, ["seed = 10", f"trajectory = {i}"])
            out.append(path.read_bytes())
        blobs[workers] = out
    same = blobs[1] == blobs[4]
    cli = {}
    for workers in (1, 4):
        out = tmp_path / f"cli{workers}"
        code = main(["ensemble", "--modes", "8", "--n-traj", "4", "--T", "0.05", "--seed", "3",
                     "--workers", str(workers), "--out", str(out)])
        assert code == 0
        cli[workers] = (out / "ensemble.csv").read_bytes()
    same_cli = cli[1] == cli[4]
    report(10, same and same_cli,
           f"{len(blobs[1])} trajectory CSVs identical={same}, CLI ensemble CSV identical={same_cli}",
           60.0)


def test_ac11_hypothesis_constants(report):
    nu = 1.0
    b = eigenfunction_bounds_check(64, 64, nu=nu)
    k = kappa_estimate()
    ref = kappa_quadrature(64)
    rel = abs(k / ref - 1)
    ok = b.c_sup == 2.0 and b.grad_ratio <= math.sqrt(2) / math.sqrt(nu) and k > 0 and rel <= 0.05
    report(11, ok, f"c_sup={b.c_sup!r}, grad_ratio={b.grad_ratio:.6f} (bound {math.sqrt(2):.6f}), "
                   f"kappa={k:.5f}, oracle={ref:.5f}, rel={rel:.2%}", 60.0)
