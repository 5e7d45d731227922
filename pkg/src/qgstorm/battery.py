"""The invariant battery behind ``qgstorm verify``.

Each check is sized to finish in seconds; the acceptance suite runs the
full-size versions.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import spectral
from .dynamics import ModelParams, exact_linear_solution, simulate
from .ensemble import ou_variance_test
from .gronwall import gronwall_bound, gronwall_coefficients
from .noise import NoiseSpec, check_summability, eigenfunction_bounds_check, kappa_estimate
from .verification import (CheckResult, mixed_derivative_ratio, monitor_bound, poincare_check,
                           rayleigh_quotient, residual_series)

PI2 = math.pi**2
SUMMABILITY_CASES = ((0.5, 0.45, "diverges"), (0.5, 0.55, "converges"),
                     (0.3, 0.25, "diverges"), (0.3, 0.35, "converges"),
                     (0.8, 0.75, "diverges"), (0.8, 0.85, "converges"))


def corner_ratio(rho: float) -> float:
    """``meas(D ∩ B(corner, rho)) / rho^2`` in closed form, ``0 < rho <= sqrt 2``."""
    if rho <= 1:
        return math.pi / 4
    cap = 0.5 * (rho**2 * math.pi / 2 - math.sqrt(rho**2 - 1) - rho**2 * math.asin(1 / rho))
    return (math.pi * rho**2 / 4 - 2 * cap) / rho**2


def energy_identity_order(p: ModelParams, omega0: np.ndarray, dt: float = 1e-5,
                          base_stride: int = 100, center: int = 5) -> tuple[float, list[float]]:
    """Observed order of the energy residual across record strides ``4s, 2s, s``."""
    T = (center + 4) * base_stride * dt
    rec = simulate(p, NoiseSpec(mu_rule="none"), omega0, T, dt, stride=base_stride,
                   keep_fields=True)
    res = []
    for k in (4, 2, 1):
        t, r = residual_series(rec, p, every=k)
        res.append(float(r[np.searchsorted(t, rec.times[center] - 1e-15)]))
    order = min(math.log2(res[0] / res[1]), math.log2(res[1] / res[2]))
    return order, res


def run_battery(cfg_params: ModelParams, noise: NoiseSpec, T: float = 1.0, h: float = 1e-3,
                seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    M, N = cfg_params.modes
    out: list[CheckResult] = []

    def check(name: str, tol: str, fn: Callable[[], tuple[bool, float]]):
        try:
            ok, value = fn()
        except Exception as exc:  # a crashing check is a failing check
            out.append(CheckResult(f"{name} ({type(exc).__name__})", False, float("nan"), tol))
            return
        out.append(CheckResult(name, bool(ok), float(value), tol))

    def eig():
        err = abs(spectral.eigenvalue(1, 1, 1.0) + 2 * PI2)
        return err <= 1e-12, err
    check("eigenvalue(1,1,1)", "abs<=1e-12", eig)

    def poincare():
        err = abs(poincare_check(M, N) - 2 * PI2)
        q = min(rayleigh_quotient(rng.standard_normal((M, N))) for _ in range(10))
        return err <= 1e-9 and q >= 2 * PI2 - 1e-9, err
    check("poincare_quotient", "abs<=1e-9", poincare)

    def roundtrip():
        f = rng.standard_normal((M, N))
        grid = spectral.Grid(M, N)
        err = np.abs(spectral.to_spectral(spectral.to_physical(f, grid), (M, N)) - f).max()
        return err <= 1e-10, err
    check("transform_roundtrip", "max<=1e-10", roundtrip)

    def parseval():
        f = spectral.random_field(M, N, rng)
        grid = spectral.Grid(2 * M, 2 * N)
        vals = spectral.to_physical(f, grid)
        quad = math.sqrt((vals**2).sum() / ((grid.Kx + 1) * (grid.Ky + 1)))
        rel = abs(quad - np.linalg.norm(f)) / np.linalg.norm(f)
        return rel <= 1e-8, rel
    check("parseval", "rel<=1e-8", parseval)

    def orthogonality():
        worst = 0.0
        for _ in range(20):
            psi, om = rng.standard_normal((M, N)), rng.standard_normal((M, N))
            J = spectral.jacobian(psi, om)
            scale = np.linalg.norm(psi) * np.linalg.norm(om)
            worst = max(worst, abs(spectral.inner(J, om)) / (scale * np.linalg.norm(om)),
                        abs(spectral.inner(J, psi)) / (scale * np.linalg.norm(psi)))
        return worst <= 1e-9, worst
    check("jacobian_orthogonality", "rel<=1e-9", orthogonality)

    def mixed():
        worst = max(mixed_derivative_ratio(rng.standard_normal((M, N))) for _ in range(20))
        return worst <= 0.25 + 1e-12, worst
    check("mixed_derivative_const", "<=0.25+1e-12", mixed)

    def linear():
        p = ModelParams(nu=cfg_params.nu, r=cfg_params.r, beta=0.0, modes=(M, N))
        w0 = spectral.mode_field(M, N, 1, 1)
        rec = simulate(p, NoiseSpec(mu_rule="none"), w0, T, h)
        lam = spectral.eigenvalue(1, 1, p.nu)
        exact = np.exp((lam - p.r) * rec.times)
        err = np.abs(rec.l2 - exact).max()
        final = np.abs(rec.final_omega - exact_linear_solution((1, 1), p, T)).max()
        return max(err, final) <= 1e-10, max(err, final)
    check("linear_oracle", "abs<=1e-10", linear)

    def decay():
        p = ModelParams(nu=cfg_params.nu, r=cfg_params.r, beta=0.0, modes=(16, 16))
        w0 = spectral.random_field(16, 16, rng, l2=1.0)
        rec = simulate(p, NoiseSpec(mu_rule="none"), w0, 0.5, 1e-3)
        env = np.exp(-(2 * PI2 * p.nu + p.r) * rec.times)
        worst = float((rec.l2 / env).max())
        return worst <= 1.01, worst
    check("energy_decay", "ratio<=1.01", decay)

    def identity():
        p = ModelParams(nu=0.05, r=cfg_params.r, beta=cfg_params.beta, modes=(16, 16))
        w0 = spectral.random_field(16, 16, rng, l2=5.0)
        order, _ = energy_identity_order(p, w0)
        return order >= 1.8, order
    check("energy_identity_order", ">=1.8", identity)

    def ou():
        rep = ou_variance_test(noise, cfg_params, 0.05, 10_000, modes=[(1, 1), (1, 2), (2, 2)],
                               seed=seed)
        return rep.pass_fraction == 1.0, rep.pass_fraction
    check("ou_variance_99", "3/3 in band", ou)

    def summability():
        good = sum(check_summability(NoiseSpec(gamma=g, mu_exponent=s), 1.0, 1000).verdict == want
                   for g, s, want in SUMMABILITY_CASES)
        return good == len(SUMMABILITY_CASES), good
    check("summability_classes", "6/6", summability)

    def gronwall_closed():
        A, B, w0 = 1.7, 0.3, 1.2
        t = np.linspace(0, 1, 11)
        got = gronwall_bound(w0, t, np.full_like(t, A), np.full_like(t, B))
        ref = np.exp(A * t) * (w0**2 + B / A) - B / A
        rel = float(np.abs(got / ref - 1).max())
        a, b = gronwall_coefficients(1.0, 1.0, 1.0, 1.0, 1.0)
        return rel <= 1e-10 and (a, b) == (14.0, 14.0), rel
    check("gronwall_closed_form", "rel<=1e-10", gronwall_closed)

    def monitor():
        w0 = spectral.random_field(M, N, rng, l2=1.0)
        rec = simulate(cfg_params, noise, w0, min(T, 0.5), h, seed=seed)
        rep = monitor_bound(rec, cfg_params)
        return rep.satisfied and not rec.aborted, rep.min_margin
    check("gronwall_monitor", "margin>=0", monitor)

    def eigen():
        b = eigenfunction_bounds_check(M, N, nu=1.0)
        return b.c_sup == 2.0 and b.grad_ratio <= 2.0, b.grad_ratio
    check("eigenfunction_bounds", "sup==2, ratio<=2/sqrt(nu)", eigen)

    def kappa():
        k = kappa_estimate(samples=20_000, rho_grid=32, seed=seed)
        ref = corner_ratio(math.sqrt(2.0) * 32 / 33)
        return 0 < k <= math.pi / 4 and abs(k / ref - 1) <= 0.05, k
    check("kappa_estimate", "(0, pi/4], 5% of corner value", kappa)

    def reproducible():
        w0 = spectral.random_field(8, 8, np.random.default_rng(1))
        p = ModelParams(nu=cfg_params.nu, r=cfg_params.r, beta=cfg_params.beta, modes=(8, 8))
        a = simulate(p, noise, w0, 0.05, 1e-3, seed=seed, trajectory=3)
        b = simulate(p, noise, w0, 0.05, 1e-3, seed=seed, trajectory=3)
        same = all(np.array_equal(x, y) for x, y in zip(a.columns().values(), b.columns().values()))
        return same, float(same)
    check("reproducibility", "bit-identical", reproducible)
    return out
