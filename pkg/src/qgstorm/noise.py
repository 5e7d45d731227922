"""Trace-class additive noise and its stochastic convolution.

The Wiener process is ``W(t) = sum_k sqrt(mu_k) beta_k(t) phi_k`` over the sine
eigenbasis.  Each coefficient of the stochastic convolution ``W_A`` is an
Ornstein-Uhlenbeck process with rate ``lambda_k``, advanced here by its exact
Gaussian transition.

Randomness comes from per-trajectory Philox streams keyed by
``(seed, trajectory)``.  A step of size ``k * h`` consumes ``k`` fine blocks of
standard normals, so runs at different step sizes share one Brownian path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from .spectral import PI, eigenvalue, wavenumber_sq

MU_RULES = ("power", "band", "constant", "none")


def canonical_modes(count: int) -> list[tuple[int, int]]:
    """First ``count`` modes ordered by ``m^2 + n^2``, ties broken by ``m``."""
    if count <= 0:
        return []
    # A box of side L holds every mode of radius <= L, and the disk of radius
    # L contains ~ pi L^2 / 4 modes.
    L = int(math.ceil(math.sqrt(4.0 * count / PI))) + 3
    while True:
        m, n = np.meshgrid(np.arange(1, L + 1), np.arange(1, L + 1), indexing="ij")
        m, n = m.ravel(), n.ravel()
        r2 = m * m + n * n
        order = np.lexsort((m, r2))
        chosen = order[:count]
        if r2[chosen[-1]] <= L * L:
            return list(zip(m[chosen].tolist(), n[chosen].tolist()))
        L *= 2


@dataclass(frozen=True)
class NoiseSpec:
    """Diagonal covariance of the Wiener process.

    mu_rule:
      ``power``     mu_mn = mu_scale * (m^2 + n^2)^(-mu_exponent)
      ``band``      the power law on the first ``mu_band`` canonical modes, zero beyond
      ``constant``  mu_scale on the first ``mu_band`` canonical modes, zero beyond
      ``none``      mu = 0 (deterministic dynamics)
    """

    gamma: float = 0.5
    mu_rule: str = "power"
    mu_exponent: float = 1.0
    mu_band: int = 10
    mu_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0,1)")
        if self.mu_rule not in MU_RULES:
            raise ValueError(f"mu_rule must be one of {', '.join(MU_RULES)}")
        if not self.mu_scale >= 0 or not math.isfinite(self.mu_scale):
            raise ValueError("mu_scale must be a finite value >= 0")
        if self.mu_band < 0:
            raise ValueError("mu_band must be >= 0")
        if not math.isfinite(self.mu_exponent):
            raise ValueError("mu_exponent must be finite")

    @property
    def is_zero(self) -> bool:
        return self.mu_rule == "none" or self.mu_scale == 0 or (
            self.mu_rule in ("band", "constant") and self.mu_band == 0)

    def mu(self, M: int, N: int) -> np.ndarray:
        """``mu_mn`` on the ``(M, N)`` truncation."""
        if self.is_zero:
            return np.zeros((M, N))
        if self.mu_rule == "power":
            return self.mu_scale * wavenumber_sq(M, N) ** (-self.mu_exponent)
        mask = np.zeros((M, N), dtype=bool)
        for m, n in canonical_modes(self.mu_band):
            if m <= M and n <= N:
                mask[m - 1, n - 1] = True
        if self.mu_rule == "band":
            base = self.mu_scale * wavenumber_sq(M, N) ** (-self.mu_exponent)
        else:
            base = np.full((M, N), self.mu_scale)
        return np.where(mask, base, 0.0)

    def mu_at(self, m: np.ndarray, n: np.ndarray) -> np.ndarray:
        """``mu`` for arbitrary mode arrays (used by the summability trace)."""
        m = np.asarray(m, dtype=float)
        n = np.asarray(n, dtype=float)
        if self.is_zero:
            return np.zeros(np.broadcast(m, n).shape)
        if self.mu_rule == "power":
            return self.mu_scale * (m * m + n * n) ** (-self.mu_exponent)
        inside = np.zeros(np.broadcast(m, n).shape, dtype=bool)
        band = set(canonical_modes(self.mu_band))
        for idx in np.ndindex(inside.shape):
            inside[idx] = (int(np.broadcast_to(m, inside.shape)[idx]),
                           int(np.broadcast_to(n, inside.shape)[idx])) in band
        if self.mu_rule == "band":
            return np.where(inside, self.mu_scale * (m * m + n * n) ** (-self.mu_exponent), 0.0)
        return np.where(inside, self.mu_scale, 0.0)

    def with_seed(self, seed: int) -> "NoiseSpec":
        return replace(self, seed=seed)


class SummabilityReport(NamedTuple):
    verdict: str  # "converges" | "diverges" | "inconclusive"
    method: str  # "analytic" | "finite" | "numeric"
    k: np.ndarray
    partial_sums: np.ndarray


def check_summability(spec: NoiseSpec, nu: float, kmax: int = 10_000,
                      mu: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
                      ) -> SummabilityReport:
    """Classify ``sum_k mu_k / |lambda_k|^(1 - gamma)``.

    Power laws are classified exactly: ``|lambda_k|`` grows linearly in ``k``
    (2D Weyl counting) so the terms behave like ``k^-(s + 1 - gamma)`` and the
    series converges iff ``s > gamma``.  Finite bands always converge.  A
    custom ``mu(m, n)`` falls back to a tail-slope heuristic on the partial sums.
    """
    if not 0.0 < spec.gamma < 1.0:
        raise ValueError("gamma must lie in (0,1)")
    if kmax < 100:
        raise ValueError("kmax must be >= 100")
    modes = np.array(canonical_modes(kmax))
    m, n = modes[:, 0], modes[:, 1]
    lam = np.abs(eigenvalue(m, n, nu))
    mu_k = mu(m, n) if mu is not None else spec.mu_at(m, n)
    mu_k = np.asarray(mu_k, dtype=float)
    if np.any(mu_k < 0):
        raise ValueError("mu_k must be >= 0")
    terms = mu_k / lam ** (1.0 - spec.gamma)
    sums = np.cumsum(terms)
    k = np.arange(1, kmax + 1)

    if mu is None:
        if spec.is_zero or spec.mu_rule in ("band", "constant"):
            return SummabilityReport("converges", "finite", k, sums)
        verdict = "converges" if spec.mu_exponent > spec.gamma else "diverges"
        return SummabilityReport(verdict, "analytic", k, sums)

    nz = np.nonzero(terms)[0]
    if nz.size == 0 or nz[-1] < kmax // 2:
        return SummabilityReport("converges", "finite", k, sums)
    tail = slice(kmax // 4, kmax)
    keep = terms[tail] > 0
    slope = np.polyfit(np.log(k[tail][keep]), np.log(terms[tail][keep]), 1)[0]
    if -slope > 1.1:
        verdict = "converges"
    elif -slope < 0.9:
        verdict = "diverges"
    else:
        verdict = "inconclusive"
    return SummabilityReport(verdict, "numeric", k, sums)


def noise_stream(seed: int, trajectory: int = 0) -> np.random.Generator:
    """Independent Philox stream for one trajectory, independent of scheduling."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trajectory),))
    return np.random.Generator(np.random.Philox(ss))


def ou_coefficients(rate: np.ndarray, mu: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact OU transition over ``h``: decay ``e^(rate h)`` and the increment std.

    Increment variance is ``mu (1 - e^(2 rate h)) / (2 |rate|)``.
    """
    decay = np.exp(rate * h)
    var = mu * (-np.expm1(2.0 * rate * h)) / (2.0 * np.abs(rate))
    return decay, np.sqrt(var)


@dataclass(frozen=True)
class ConvolutionState:
    coeffs: np.ndarray
    t: float = 0.0

    @classmethod
    def zero(cls, M: int, N: int) -> "ConvolutionState":
        return cls(np.zeros((M, N)), 0.0)


def ou_update(state: ConvolutionState, h: float, spec: NoiseSpec, nu: float,
              rng: np.random.Generator | None = None, z: np.ndarray | None = None
              ) -> ConvolutionState:
    """Advance ``W_A`` by ``h`` with the exact per-mode transition.

    ``z`` may carry ``k`` blocks of standard normals, shape ``(k, M, N)``; the
    step is then taken as ``k`` exact substeps of ``h / k``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    M, N = state.coeffs.shape
    lam = eigenvalue(*np.meshgrid(np.arange(1, M + 1), np.arange(1, N + 1), indexing="ij"), nu)
    mu = spec.mu(M, N)
    if z is None:
        if rng is None:
            raise ValueError("need rng or z")
        z = rng.standard_normal((1, M, N))
    z = np.asarray(z).reshape(-1, M, N)
    decay, sd = ou_coefficients(lam, mu, h / z.shape[0])
    a = state.coeffs
    for zi in z:
        a = decay * a + sd * zi
    return ConvolutionState(a, state.t + h)


def sample_wiener_increment(spec: NoiseSpec, h: float, rng: np.random.Generator,
                            modes: tuple[int, int] = (32, 32)) -> np.ndarray:
    """Wiener increment over ``h``: mode ``(m, n)`` is ``N(0, mu_mn h)``, independent."""
    if not h > 0:
        raise ValueError("h must be positive")
    M, N = modes
    return np.sqrt(spec.mu(M, N) * h) * rng.standard_normal((M, N))


def stationary_variance(spec: NoiseSpec, nu: float, modes: tuple[int, int]) -> np.ndarray:
    M, N = modes
    return spec.mu(M, N) / (2.0 * nu * PI**2 * wavenumber_sq(M, N))


def convolution_variance(spec: NoiseSpec, nu: float, modes: tuple[int, int], t: float) -> np.ndarray:
    """``Var W_A(t)`` per mode: ``mu (1 - e^(2 lambda t)) / (2 |lambda|)``."""
    M, N = modes
    lam = -nu * PI**2 * wavenumber_sq(M, N)
    return spec.mu(M, N) * (-np.expm1(2.0 * lam * t)) / (2.0 * np.abs(lam))


class EigenBounds(NamedTuple):
    c_sup: float
    grad_ratio: float


def eigenfunction_bounds_check(M: int, N: int, nu: float = 1.0, points: int = 4097) -> EigenBounds:
    """Observed ``sup |phi_k|`` and ``max(|d_x phi_k|, |d_y phi_k|) / sqrt|lambda_k|``.

    The factors are separable, so each 1D sup is taken over a uniform sweep of
    ``points`` nodes united with the analytic extremum locations.
    """
    xs = np.linspace(0.0, 1.0, points)

    def sup_sin(k):
        pts = np.concatenate([xs, (2 * np.arange(k) + 1) / (2.0 * k)])
        return np.abs(np.sin(k * PI * pts)).max()

    def sup_cos(k):
        pts = np.concatenate([xs, np.arange(k + 1) / k])
        return np.abs(np.cos(k * PI * pts)).max()

    ssx = np.array([sup_sin(m) for m in range(1, M + 1)])
    scx = np.array([sup_cos(m) for m in range(1, M + 1)])
    ssy = np.array([sup_sin(n) for n in range(1, N + 1)])
    scy = np.array([sup_cos(n) for n in range(1, N + 1)])
    sup_phi = 2.0 * np.outer(ssx, ssy)
    m = np.arange(1, M + 1)[:, None]
    n = np.arange(1, N + 1)[None, :]
    dx = 2.0 * PI * m * np.outer(scx, ssy)
    dy = 2.0 * PI * n * np.outer(ssx, scy)
    root = np.sqrt(nu * PI**2 * (m * m + n * n))
    ratio = np.maximum(dx, dy) / root
    return EigenBounds(float(sup_phi.max()), float(ratio.max()))


def kappa_estimate(samples: int = 100_000, rho_grid: int = 64, centers: int = 5,
                   seed: int = 0) -> float:
    """Monte Carlo estimate of ``inf meas(D ∩ B(p, rho)) / rho^2`` on the unit square.

    Radii are ``sqrt(2) i / (rho_grid + 1)``; centers form a ``centers x centers``
    lattice on the quadrant ``[0, 1/2]^2``, which covers the square by symmetry.
    One set of uniform disk samples is reused for every (rho, center).
    """
    if samples < 10_000:
        raise ValueError("samples must be >= 10^4")
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.random(samples))
    th = 2.0 * PI * rng.random(samples)
    ux, uy = r * np.cos(th), r * np.sin(th)
    rhos = math.sqrt(2.0) * np.arange(1, rho_grid + 1) / (rho_grid + 1)
    cs = np.linspace(0.0, 0.5, centers)
    best = math.inf
    for rho in rhos:
        px = cs[:, None] + rho * ux[None, :]
        py = cs[:, None] + rho * uy[None, :]
        inx = (px > 0) & (px < 1)
        iny = (py > 0) & (py < 1)
        # fraction inside for every (cx, cy) pair
        frac = (inx[:, None, :] & iny[None, :, :]).mean(axis=2)
        # meas / rho^2 = pi * fraction of the disk inside D
        best = min(best, float(PI * frac.min()))
    if not best > 0:
        raise ArithmeticError("kappa estimate is not positive")
    return best
