"""Stochastic QG vorticity dynamics and its exponential integrators.

    d omega = (A omega + F(omega)) dt + dW,   A = nu Laplacian,
    F(omega) = -r omega - beta psi_x - J(psi, omega),   Laplacian psi = omega.

Both integrators treat ``A - r`` exactly per mode and freeze the remaining
nonlinear part ``N(omega) = -beta psi_x - J(psi, omega)`` over a step:

* ``mild_em`` steps omega directly; the noise enters as the exact OU
  increment of rate ``lambda - r``.
* ``split`` advances ``W_A`` (rate ``lambda``) exactly and steps
  ``U = omega - W_A`` through ``U' = A U + F(U + W_A)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import spectral
from .gronwall import LOG_TINY, ConstantSet, gronwall_log_bound, monitor_coefficients
from .noise import NoiseSpec, noise_stream, ou_coefficients
from .spectral import Grid

SCHEMES = ("mild_em", "split")


class BlowupError(RuntimeError):
    def __init__(self, t: float, value: float):
        super().__init__(f"blow-up at t={t:.6g}: l2 norm {value:.6g}")
        self.t = t
        self.value = value


@dataclass(frozen=True)
class ModelParams:
    """Physical constants and discretization.

    ``nonlinear=False`` drops the Jacobian; it only exists to expose the
    exactly solvable linear model to statistical tests.
    """

    nu: float = 1e-2
    r: float = 0.1
    beta: float = 1.0
    modes: tuple[int, int] = (32, 32)
    dealias: float = 1.5
    nonlinear: bool = True
    blowup_cap: float = 1e8

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.r >= 0:
            raise ValueError("r must be >= 0")
        if not self.beta >= 0:
            raise ValueError("beta must be >= 0")
        M, N = self.modes
        if M < 1 or N < 1:
            raise ValueError("modes must be >= 1")
        if self.dealias < 1:
            raise ValueError("dealias factor must be >= 1")
        object.__setattr__(self, "modes", (int(M), int(N)))

    @property
    def grid(self) -> Grid:
        return Grid.for_modes(*self.modes, self.dealias)

    def flags(self) -> list[str]:
        out = []
        if self.r == 0:
            out.append("r=0 is outside the model hypotheses (r>0)")
        if not self.nonlinear:
            out.append("jacobian disabled: non-physical linearized model")
        if not self.grid.is_dealiasing(*self.modes):
            out.append("grid does not dealias quadratic products")
        return out


class Operator:
    """Precomputed linear symbols and transforms for one ``ModelParams``."""

    def __init__(self, p: ModelParams):
        M, N = p.modes
        self.p = p
        self.lam = -p.nu * spectral.PI**2 * spectral.wavenumber_sq(M, N)
        self.inv_lap = 1.0 / spectral.laplacian_symbol(M, N)
        self.tr = spectral.transform(M, N, p.grid)
        self.Dx = spectral.x_derivative_matrix(M)

    def nonlinear(self, omega: np.ndarray) -> np.ndarray:
        """``-beta P psi_x - P J(psi, omega)``."""
        psi = omega * self.inv_lap
        out = np.zeros_like(omega)
        if self.p.beta:
            out -= self.p.beta * (self.Dx @ psi)
        if self.p.nonlinear:
            out -= self.tr.jacobian(psi, omega)
        return out

    def drift(self, omega: np.ndarray) -> np.ndarray:
        return self.nonlinear(omega) - self.p.r * omega


@lru_cache(maxsize=32)
def operator(p: ModelParams) -> Operator:
    return Operator(p)


def drift(omega: np.ndarray, p: ModelParams) -> np.ndarray:
    """``F(omega) = -r omega - beta psi_x - J(psi, omega)`` projected on the sine basis."""
    return operator(p).drift(omega)


def phi1(z: np.ndarray) -> np.ndarray:
    """``(e^z - 1) / z`` with the ``z -> 0`` limit 1."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


@dataclass
class SolverState:
    """State of one trajectory.

    ``wa`` is the stochastic convolution (zero without noise).  ``u`` is the
    split variable; for the split scheme it is the evolved quantity and
    ``omega = u + wa`` always holds.
    """

    omega: np.ndarray
    t: float = 0.0
    scheme: str = "split"
    wa: np.ndarray | None = None
    u: np.ndarray | None = None

    @classmethod
    def initial(cls, omega0: np.ndarray, scheme: str = "split") -> "SolverState":
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        omega0 = np.array(omega0, dtype=float)
        wa = np.zeros_like(omega0)
        return cls(omega0, 0.0, scheme, wa, omega0.copy() if scheme == "split" else None)

    @property
    def split_variable(self) -> np.ndarray:
        return self.u if self.u is not None else self.omega - self.wa


class Integrator:
    """Exponential Euler-Maruyama stepper with fixed step ``h``.

    Each step consumes ``substeps`` blocks of fine standard normals, so a run
    with ``(h, substeps)`` and one with ``(h / substeps, 1)`` see the same
    Brownian path.
    """

    def __init__(self, p: ModelParams, noise: NoiseSpec, h: float, scheme: str = "split",
                 substeps: int = 1):
        if not h > 0:
            raise ValueError("h must be positive")
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        self.p, self.noise, self.h, self.scheme, self.substeps = p, noise, h, scheme, substeps
        self.op = operator(p)
        lin = self.op.lam - p.r
        self.e_lin = np.exp(lin * h)
        self.h_phi = h * phi1(lin * h)
        M, N = p.modes
        self.noisy = not noise.is_zero
        mu = noise.mu(M, N)
        hf = h / substeps
        self.wa_decay, self.wa_sd = ou_coefficients(self.op.lam, mu, hf)
        self.om_decay, self.om_sd = ou_coefficients(lin, mu, hf)

    def draw(self, rng: np.random.Generator) -> np.ndarray | None:
        if not self.noisy:
            return None
        return rng.standard_normal((self.substeps, *self.p.modes))

    def step(self, s: SolverState, z: np.ndarray | None) -> SolverState:
        wa = s.wa
        if z is not None:
            xi = np.zeros_like(wa)
            for zi in z:
                wa = self.wa_decay * wa + self.wa_sd * zi
                if s.scheme == "mild_em":
                    xi = self.om_decay * xi + self.om_sd * zi
        t = s.t + self.h
        if s.scheme == "mild_em":
            omega = self.e_lin * s.omega + self.h_phi * self.op.nonlinear(s.omega)
            if z is not None:
                omega = omega + xi
            out = SolverState(omega, t, s.scheme, wa, None)
        else:
            w_old = s.wa
            forcing = self.op.nonlinear(s.u + w_old) - self.p.r * w_old
            u = self.e_lin * s.u + self.h_phi * forcing
            out = SolverState(u + wa, t, s.scheme, wa, u)
        l2 = math.sqrt(float(np.vdot(out.omega, out.omega)))
        if not (l2 <= self.p.blowup_cap):
            raise BlowupError(t, l2)
        return out


@lru_cache(maxsize=16)
def _integrator(p, noise, h, scheme, substeps):
    return Integrator(p, noise, h, scheme, substeps)


def step_mild_em(state: SolverState, h: float, p: ModelParams, spec: NoiseSpec,
                 rng: np.random.Generator | None = None) -> SolverState:
    """One exponential Euler-Maruyama step of the mild form."""
    if state.scheme != "mild_em":
        state = replace(state, scheme="mild_em", u=None)
    it = _integrator(p, spec, float(h), "mild_em", 1)
    return it.step(state, it.draw(rng) if rng is not None else None)


def step_split(state: SolverState, h: float, p: ModelParams, spec: NoiseSpec,
               rng: np.random.Generator | None = None) -> SolverState:
    """Advance ``W_A`` exactly, then ``U`` by exponential Euler with ``F(U + W_A)``."""
    if state.scheme != "split":
        state = replace(state, scheme="split", u=state.omega - state.wa)
    it = _integrator(p, spec, float(h), "split", 1)
    return it.step(state, it.draw(rng) if rng is not None else None)


def exact_linear_solution(mode: tuple[int, int], p: ModelParams, t: float,
                          amplitude: float = 1.0) -> np.ndarray:
    """``omega(t) = e^{(lambda - r) t} phi_mn`` for unforced single-mode data with ``beta = 0``."""
    if p.beta != 0:
        raise ValueError("exact linear solution requires beta = 0")
    m, n = mode
    lam = spectral.eigenvalue(m, n, p.nu)
    return spectral.mode_field(*p.modes, m, n, amplitude * math.exp((lam - p.r) * t))


@dataclass
class TrajectoryRecord:
    """Norm time series of one realization.

    ``bound`` holds the natural log of the Gronwall bound on ``||U||^2``
    (clamped below at ``log(tiny)``); ``A`` and ``B`` are the monitor's
    coefficients with the running max of ``sup_est(W_A)``.
    """

    times: np.ndarray
    l2: np.ndarray
    h1: np.ndarray
    sup_est: np.ndarray
    drift_l2: np.ndarray
    u_l2: np.ndarray
    wa_sup: np.ndarray
    A: np.ndarray
    B: np.ndarray
    bound: np.ndarray
    aborted: bool = False
    abort_reason: str = ""
    final_omega: np.ndarray | None = None
    final_wa: np.ndarray | None = None
    fields: dict[str, list[np.ndarray]] | None = None
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("t", "l2", "h1", "sup_est", "drift_l2", "bound", "A", "B")

    def columns(self) -> dict[str, np.ndarray]:
        return {"t": self.times, "l2": self.l2, "h1": self.h1, "sup_est": self.sup_est,
                "drift_l2": self.drift_l2, "bound": self.bound, "A": self.A, "B": self.B}

    def __len__(self):
        return len(self.times)


def monitor_columns(times, u_l2, wa_sup, omega0_l2: float, p: ModelParams,
                    constants: ConstantSet | None = None):
    """``A``, ``B`` and the log Gronwall bound along a record."""
    constants = constants or ConstantSet.unit_square(p.nu)
    v = np.maximum.accumulate(np.asarray(wa_sup, dtype=float)) if len(wa_sup) else np.asarray(wa_sup)
    A, B = monitor_coefficients(v, p.nu, p.r, p.beta, constants.c)
    A, B = np.atleast_1d(A), np.atleast_1d(B)
    logb = gronwall_log_bound(omega0_l2, times, A, B)
    return A, B, np.maximum(logb, LOG_TINY)


def simulate(p: ModelParams, noise: NoiseSpec, omega0: np.ndarray, T: float, h: float,
             scheme: str = "split", seed: int | None = None, trajectory: int = 0,
             stride: int = 10, keep_fields: bool = False, substeps: int = 1,
             constants: ConstantSet | None = None) -> TrajectoryRecord:
    """Integrate one trajectory on ``[0, T]`` and record norms every ``stride`` steps.

    The result depends only on the arguments: the noise path is drawn from
    ``noise_stream(seed, trajectory)`` (``seed`` defaults to ``noise.seed``).
    A blow-up ends the run early and returns the partial record flagged
    ``aborted``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if not 0 < h <= T * (1 + 1e-12):
        raise ValueError("need 0 < h <= T")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    nsteps = int(round(T / h))
    if abs(nsteps * h - T) > 1e-9 * T:
        raise ValueError(f"T={T} is not a multiple of h={h}")
    omega0 = np.asarray(omega0, dtype=float)
    if omega0.shape != p.modes:
        raise ValueError(f"initial field has shape {omega0.shape}, expected {p.modes}")
    if not np.all(np.isfinite(omega0)):
        raise ValueError("initial field is not finite")

    it = _integrator(p, noise, float(h), scheme, int(substeps))
    op = it.op
    rng = noise_stream(noise.seed if seed is None else seed, trajectory)
    state = SolverState.initial(omega0, scheme)

    rows: list[tuple[float, ...]] = []
    fields = {"omega": [], "u": [], "wa": []} if keep_fields else None

    def record(s: SolverState, t: float):
        l2, h1, sup = spectral.norms(s.omega)
        d = op.drift(s.omega)
        u = s.split_variable
        rows.append((t, l2, h1, sup, math.sqrt(float(np.vdot(d, d))),
                     math.sqrt(float(np.vdot(u, u))), spectral.sup_estimate(s.wa)))
        if fields is not None:
            fields["omega"].append(s.omega.copy())
            fields["u"].append(u.copy())
            fields["wa"].append(s.wa.copy())

    record(state, 0.0)
    aborted, reason = False, ""
    for i in range(1, nsteps + 1):
        try:
            state = it.step(state, it.draw(rng))
        except BlowupError as exc:
            aborted, reason = True, str(exc)
            break
        state.t = i * h
        if i % stride == 0 or i == nsteps:
            record(state, state.t)

    cols = np.array(rows, dtype=float).T
    times, l2, h1, sup, dl2, ul2, wsup = cols
    A, B, bound = monitor_columns(times, ul2, wsup, float(np.linalg.norm(omega0)), p, constants)
    meta = {"scheme": scheme, "h": h, "T": T, "stride": stride, "substeps": substeps,
            "seed": noise.seed if seed is None else seed, "trajectory": trajectory,
            "flags": p.flags()}
    return TrajectoryRecord(times, l2, h1, sup, dl2, ul2, wsup, A, B, bound,
                            aborted, reason, state.omega.copy(), state.wa.copy(), fields, meta)
