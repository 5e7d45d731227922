"""Executable checks of the energy estimate and the discretization.

All functions are pure post-processing of fields or trajectory records, apart
from the convergence ladder, which drives :func:`~qgstorm.dynamics.simulate`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import spectral
from .dynamics import ModelParams, TrajectoryRecord, monitor_columns, operator, simulate
from .gronwall import ConstantSet
from .noise import NoiseSpec


def energy_rhs(U: np.ndarray, V: np.ndarray, p: ModelParams) -> float:
    """Right-hand side of the energy identity for ``1/2 d/dt ||U||^2``.

        -nu ||grad U||^2 - r int (U^2 + U V) - beta int (u_x + v_x) U
            + int (-u_x V_y U + u_y V_x U - v_x V_y U + v_y V_x U)

    with ``U = Lap u`` and ``V = Lap v``.  The ``J(u, U)`` and ``J(v, U)``
    pairings are omitted since they integrate to zero.  Every integral is a
    Galerkin inner product on the dealiased grid, which is exact for these
    quadratic and cubic terms.
    """
    op = operator(p)
    u = U * op.inv_lap
    v = V * op.inv_lap
    _, h1, _ = spectral.norms(U)
    out = -p.nu * h1**2 - p.r * (spectral.inner(U, U) + spectral.inner(U, V))
    if p.beta:
        out -= p.beta * spectral.inner(op.Dx @ (u + v), U)
    if p.nonlinear:
        out -= spectral.inner(op.tr.jacobian(u, V) + op.tr.jacobian(v, V), U)
    return float(out)


def energy_identity_residual(U_prev: np.ndarray, U_mid: np.ndarray, U_next: np.ndarray,
                             V_mid: np.ndarray, dt: float, p: ModelParams) -> float:
    """``|centered difference of 1/2 ||U||^2 - energy_rhs|`` at the middle record."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    e_prev = 0.5 * spectral.inner(U_prev, U_prev)
    e_next = 0.5 * spectral.inner(U_next, U_next)
    return abs((e_next - e_prev) / (2.0 * dt) - energy_rhs(U_mid, V_mid, p))


def residual_series(rec: TrajectoryRecord, p: ModelParams, every: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Energy residual at interior records, using records ``every`` apart as the stencil."""
    if rec.fields is None:
        raise ValueError("record has no stored fields (simulate with keep_fields=True)")
    U, V, t = rec.fields["u"], rec.fields["wa"], rec.times
    if len(U) < 2 * every + 1:
        raise ValueError("window too short for a centered difference")
    idx = range(every, len(U) - every)
    res = [energy_identity_residual(U[i - every], U[i], U[i + every], V[i],
                                    (t[i + every] - t[i - every]) / 2.0, p) for i in idx]
    return t[every:len(U) - every], np.array(res)


class MonitorReport(NamedTuple):
    satisfied: bool
    margin: np.ndarray  # log(bound) - log(||U||^2) per record
    min_margin: float
    first_violation: float | None


def monitor_bound(rec: TrajectoryRecord, p: ModelParams, constants: ConstantSet | None = None,
                  omega0_l2: float | None = None, rtol: float = 1e-9) -> MonitorReport:
    """Check ``||U(t)||^2 <= Gronwall bound`` at every record time."""
    if omega0_l2 is None:
        omega0_l2 = float(rec.u_l2[0])
    _, _, logb = monitor_columns(rec.times, rec.u_l2, rec.wa_sup, omega0_l2, p, constants)
    with np.errstate(divide="ignore"):
        log_u = 2.0 * np.log(rec.u_l2)
    margin = logb - log_u
    bad = np.nonzero(margin < -rtol)[0]
    first = float(rec.times[bad[0]]) if bad.size else None
    return MonitorReport(bad.size == 0, margin, float(np.min(margin)), first)


def poincare_check(M: int, N: int) -> float:
    """Minimal Rayleigh quotient ``||grad f||^2 / ||f||^2`` over the truncation."""
    return float(spectral.PI**2 * spectral.wavenumber_sq(M, N).min())


def rayleigh_quotient(f: np.ndarray) -> float:
    _, h1, _ = spectral.norms(f)
    return h1**2 / spectral.inner(f, f)


def mixed_derivative_ratio(f: np.ndarray) -> float:
    """``||f_xy||^2 / ||Lap f||^2`` computed in coefficients (``f_xy`` has cosine factors)."""
    M, N = f.shape
    mn = np.outer(np.arange(1, M + 1), np.arange(1, N + 1)) * spectral.PI**2
    lap = spectral.laplacian(f)
    return float(((mn * f) ** 2).sum() / (lap**2).sum())


@dataclass
class LadderReport:
    hs: np.ndarray
    errors: np.ndarray
    slope: float | None
    status: str  # "ok" | "exact" | "non-monotone"


def convergence_ladder(p: ModelParams, noise: NoiseSpec, omega0: np.ndarray, T: float,
                       h_finest: float, rungs: int = 4, ratio: int = 4, paths: int = 1,
                       scheme: str = "split", seed: int | None = None) -> LadderReport:
    """Empirical strong order from coupled runs at ``h_finest * ratio^k``.

    Rung ``k`` integrates the same Brownian path as the finest rung by summing
    ``ratio^k`` fine increments per step.  The error of a rung is the
    root-mean-square over paths of ``||omega_k(T) - omega_0(T)||``; the slope is
    a least-squares fit of log error against log step.
    """
    if rungs < 3:
        raise ValueError("rungs must be >= 3")
    hs = h_finest * ratio ** np.arange(rungs)
    sq = np.zeros(rungs - 1)
    for path in range(paths):
        finals = []
        for k in range(rungs):
            rec = simulate(p, noise, omega0, T, float(hs[k]), scheme=scheme, seed=seed,
                           trajectory=path, stride=10**9, substeps=ratio**k)
            if rec.aborted:
                raise RuntimeError(f"ladder run aborted: {rec.abort_reason}")
            finals.append(rec.final_omega)
        for k in range(1, rungs):
            d = finals[k] - finals[0]
            sq[k - 1] += float(np.vdot(d, d))
    errors = np.sqrt(sq / paths)
    scale = max(1.0, float(np.linalg.norm(omega0)))
    if np.all(errors < 1e-12 * scale):
        return LadderReport(hs, errors, None, "exact")
    slope = float(np.polyfit(np.log(hs[1:]), np.log(errors), 1)[0])
    status = "ok" if np.all(np.diff(errors) > 0) else "non-monotone"
    return LadderReport(hs, errors, slope, status)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    value: float
    tolerance: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name:<28s} {status}  value={self.value:.6g}  tol={self.tolerance}"
