"""Sine eigenbasis on the unit square and the operators built on it.

A spectral field is a real ``(M, N)`` array ``c`` holding the coefficients of
the orthonormal Dirichlet eigenfunctions

    phi_mn(x, y) = 2 sin(m pi x) sin(n pi y),   m = 1..M, n = 1..N,

stored at ``c[m - 1, n - 1]``.  Physical fields live on the interior nodes
``x_j = j / (Kx + 1)``, ``y_l = l / (Ky + 1)`` of a uniform grid; the boundary
values are zero and never stored.

Transforms are type-I discrete sine transforms.  At the truncations used here
(up to a few hundred modes) dense precomputed DST-I/DCT-I matrices beat an FFT,
so that is what :class:`Transform` holds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PI = math.pi


def eigenvalue(m, n, nu: float):
    """Eigenvalue ``-nu (m^2 + n^2) pi^2`` of ``nu * Laplacian`` for mode ``(m, n)``."""
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    m = np.asarray(m)
    n = np.asarray(n)
    if np.any(m < 1) or np.any(n < 1):
        raise ValueError("mode indices must be >= 1")
    out = -nu * (m * m + n * n) * PI**2
    return float(out) if out.ndim == 0 else out


def basis_eval(m: int, n: int, x, y):
    """Evaluate ``phi_mn`` at points of the closed unit square."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any((x < 0) | (x > 1) | (y < 0) | (y > 1)):
        raise ValueError("point outside the unit square")
    out = 2.0 * np.sin(m * PI * x) * np.sin(n * PI * y)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def wavenumber_sq(M: int, N: int) -> np.ndarray:
    """``(m^2 + n^2)`` on the ``(M, N)`` mode lattice."""
    m = np.arange(1, M + 1, dtype=float)
    n = np.arange(1, N + 1, dtype=float)
    k2 = m[:, None] ** 2 + n[None, :] ** 2
    k2.flags.writeable = False
    return k2


def laplacian_symbol(M: int, N: int) -> np.ndarray:
    return -(PI**2) * wavenumber_sq(M, N)


def laplacian(f: np.ndarray) -> np.ndarray:
    return f * laplacian_symbol(*f.shape)


def invert_laplacian(w: np.ndarray) -> np.ndarray:
    # No zero eigenvalue in the Dirichlet sine basis.
    return w / laplacian_symbol(*w.shape)


def norms(f: np.ndarray) -> tuple[float, float, float]:
    """L2 norm, H1 seminorm and the coefficient-sum sup bound of a spectral field.

    The sup bound uses ``|phi_mn| <= 2`` and is never below the true sup norm.
    """
    sq = f * f
    l2 = math.sqrt(sq.sum())
    h1 = math.sqrt((PI**2) * (wavenumber_sq(*f.shape) * sq).sum())
    sup = 2.0 * np.abs(f).sum()
    return l2, h1, float(sup)


def sup_estimate(f: np.ndarray) -> float:
    return float(2.0 * np.abs(f).sum())


def inner(f: np.ndarray, g: np.ndarray) -> float:
    """L2 inner product; exact by Parseval for the orthonormal basis."""
    return float(np.vdot(f, g))


def mode_field(M: int, N: int, m: int, n: int, amplitude: float = 1.0) -> np.ndarray:
    if not (1 <= m <= M and 1 <= n <= N):
        raise ValueError(f"mode ({m}, {n}) outside truncation ({M}, {N})")
    f = np.zeros((M, N))
    f[m - 1, n - 1] = amplitude
    return f


def random_field(M: int, N: int, rng: np.random.Generator, decay: float = 1.0,
                 l2: float | None = None) -> np.ndarray:
    """Gaussian coefficients damped by ``(m^2 + n^2)^(-decay)``; optionally rescaled to a given L2 norm."""
    f = rng.standard_normal((M, N)) * wavenumber_sq(M, N) ** (-decay)
    if l2 is not None:
        f *= l2 / np.linalg.norm(f)
    return f


@dataclass(frozen=True)
class Grid:
    """Interior-node collocation grid.

    ``Kx`` and ``Ky`` count interior nodes; the spacing is ``1 / (K + 1)``.
    """

    Kx: int
    Ky: int

    @classmethod
    def for_modes(cls, M: int, N: int, dealias: float = 1.5) -> "Grid":
        if dealias < 1:
            raise ValueError("dealias factor must be >= 1")
        return cls(math.ceil(M * dealias), math.ceil(N * dealias))

    @property
    def x(self) -> np.ndarray:
        return np.arange(1, self.Kx + 1) / (self.Kx + 1)

    @property
    def y(self) -> np.ndarray:
        return np.arange(1, self.Ky + 1) / (self.Ky + 1)

    def is_dealiasing(self, M: int, N: int) -> bool:
        """Quadratic products of modes <= (M, N) project without aliasing iff K + 1 > 3M/2."""
        return 2 * (self.Kx + 1) > 3 * M and 2 * (self.Ky + 1) > 3 * N


class Transform:
    """DST-I synthesis/analysis between ``(M, N)`` coefficients and a :class:`Grid`."""

    def __init__(self, M: int, N: int, grid: Grid):
        if grid.Kx < M or grid.Ky < N:
            raise ValueError(f"grid {grid.Kx}x{grid.Ky} is coarser than truncation {M}x{N}")
        self.M, self.N, self.grid = M, N, grid
        mx = np.arange(1, M + 1)
        ny = np.arange(1, N + 1)
        ax = PI * np.outer(grid.x, mx)
        ay = PI * np.outer(grid.y, ny)
        self.Sx, self.Cx = np.sin(ax), np.cos(ax)
        self.Sy, self.Cy = np.sin(ay), np.cos(ay)
        # 2 * phi normalization folded into synthesis; analysis is the exact inverse.
        self._synth = 2.0
        self._anal = 2.0 / ((grid.Kx + 1) * (grid.Ky + 1))
        self._kx = PI * mx[:, None].astype(float)
        self._ky = PI * ny[None, :].astype(float)
        self.SxT = np.ascontiguousarray(self.Sx.T)

    def to_physical(self, f: np.ndarray) -> np.ndarray:
        return self._synth * (self.Sx @ f @ self.Sy.T)

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return self._anal * (self.SxT @ values @ self.Sy)

    def gradient(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        fx = self._synth * (self.Cx @ (self._kx * f) @ self.Sy.T)
        fy = self._synth * (self.Sx @ (self._ky * f) @ self.Cy.T)
        return fx, fy

    def jacobian(self, psi: np.ndarray, omega: np.ndarray) -> np.ndarray:
        """Galerkin projection of ``psi_x omega_y - psi_y omega_x``."""
        px, py = self.gradient(psi)
        ox, oy = self.gradient(omega)
        return self.to_spectral(px * oy - py * ox)


@lru_cache(maxsize=32)
def transform(M: int, N: int, grid: Grid) -> Transform:
    return Transform(M, N, grid)


def _grid_for(f: np.ndarray, grid: Grid | None, dealias: float = 1.5) -> Grid:
    return grid if grid is not None else Grid.for_modes(*f.shape, dealias)


def to_physical(f: np.ndarray, grid: Grid | None = None) -> np.ndarray:
    grid = _grid_for(f, grid, 1.0)
    return transform(*f.shape, grid).to_physical(f)


def to_spectral(values: np.ndarray, modes: tuple[int, int] | None = None) -> np.ndarray:
    """Analyse grid values back to coefficients; default truncation is the full grid."""
    grid = Grid(*values.shape)
    M, N = modes if modes is not None else values.shape
    return transform(M, N, grid).to_spectral(values)


def gradient(f: np.ndarray, grid: Grid | None = None) -> tuple[np.ndarray, np.ndarray]:
    return transform(*f.shape, _grid_for(f, grid, 1.0)).gradient(f)


def jacobian(psi: np.ndarray, omega: np.ndarray, grid: Grid | None = None) -> np.ndarray:
    if psi.shape != omega.shape:
        raise ValueError("psi and omega must share a truncation")
    grid = _grid_for(psi, grid)
    return transform(*psi.shape, grid).jacobian(psi, omega)


def evaluate(f: np.ndarray, x, y) -> np.ndarray:
    """Direct-summation synthesis at arbitrary points (slow reference path)."""
    M, N = f.shape
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    sx = np.sin(PI * np.outer(x, np.arange(1, M + 1)))
    sy = np.sin(PI * np.outer(y, np.arange(1, N + 1)))
    return 2.0 * np.einsum("pm,mn,pn->p", sx, f, sy)


def evaluate_gradient(f: np.ndarray, x, y) -> tuple[np.ndarray, np.ndarray]:
    M, N = f.shape
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    m = np.arange(1, M + 1)
    n = np.arange(1, N + 1)
    sx, cx = np.sin(PI * np.outer(x, m)), np.cos(PI * np.outer(x, m))
    sy, cy = np.sin(PI * np.outer(y, n)), np.cos(PI * np.outer(y, n))
    fx = 2.0 * np.einsum("pm,mn,pn->p", cx, PI * m[:, None] * f, sy)
    fy = 2.0 * np.einsum("pm,mn,pn->p", sx, PI * n[None, :] * f, cy)
    return fx, fy


@lru_cache(maxsize=16)
def x_derivative_matrix(M: int) -> np.ndarray:
    """Exact sine-basis projection of d/dx acting on the x-factor.

    ``D[p-1, m-1] = <sqrt2 m pi cos(m pi x), sqrt2 sin(p pi x)> = 4 m p / (p^2 - m^2)``
    for ``p + m`` odd, zero otherwise.
    """
    m = np.arange(1, M + 1)[None, :].astype(float)
    p = np.arange(1, M + 1)[:, None].astype(float)
    odd = ((p + m) % 2) == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        D = np.where(odd, 4.0 * m * p / (p * p - m * m), 0.0)
    D.flags.writeable = False
    return D


def project_dx(f: np.ndarray) -> np.ndarray:
    """Galerkin projection of ``f_x`` back onto the sine basis."""
    return x_derivative_matrix(f.shape[0]) @ f
