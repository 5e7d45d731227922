"""A priori L2 bound for the split variable ``U = omega - W_A``.

With ``V`` standing in for ``W_A`` and ``v_sup = ||V||_inf``, the energy
estimate gives ``d/dt ||U||^2 <= A(t) ||U||^2 + B(t)`` and hence

    ||U(t)||^2 <= ||omega_0||^2 e^{int_0^t A} + int_0^t B(s) e^{int_s^t A} ds.

Bounds are evaluated in log space: on stochastic runs the exponent reaches
1e5 and more.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG_TINY = math.log(np.finfo(float).tiny)


@dataclass(frozen=True)
class ConstantSet:
    """Explicit constants of the energy estimate on the unit square.

    c_poincare: ``||u_x|| <= c ||Laplacian u||``, sharp value ``1 / (pi sqrt 2)``
    c_mixed:    ``||u_xy||^2 <= c ||Laplacian u||^2``, from ``mn <= (m^2 + n^2) / 2``
    c_embed:    sup-norm constant; 1 because ``v_sup`` is measured directly
    epsilon:    Young parameter, ``nu / 2``
    """

    c_poincare: float
    c_mixed: float
    c_embed: float
    epsilon: float

    @classmethod
    def unit_square(cls, nu: float) -> "ConstantSet":
        return cls(1.0 / (math.pi * math.sqrt(2.0)), 0.25, 1.0, nu / 2.0)

    def __post_init__(self):
        if min(self.c_poincare, self.c_mixed, self.c_embed, self.epsilon) <= 0:
            raise ValueError("constants must be positive")

    @property
    def c(self) -> float:
        """Single constant valid in every step of the chain.

        The ``u_xy`` step needs ``(1 + c_mixed)/2 <= c/2``, which dominates the
        Poincare and embedding requirements.
        """
        return max(self.c_embed + self.c_mixed, self.c_poincare, self.c_embed)


def gronwall_coefficients(v_sup, nu: float, r: float, beta: float, c: float = 1.0):
    """``A`` and ``B`` of the differential inequality, as printed in the estimate."""
    v = np.asarray(v_sup, dtype=float)
    if np.any(v < 0):
        raise ValueError("v_sup must be >= 0")
    A = 2.0 * (r * (1.0 + c * v) + beta * c + c * v * (1.0 + (2.0 / nu) * v) + v)
    B = 2.0 * beta * c * v**2 + 4.0 * c * v**3 + (8.0 / nu) * c * v**4
    if A.ndim == 0:
        return float(A), float(B)
    return A, B


def monitor_coefficients(v_sup, nu: float, r: float, beta: float, c: float = 1.0,
                         area: float = 1.0):
    """Variant used by the monitor.

    The Ekman term is bounded by ``r int |UV| <= (r/2)(||U||^2 + v_sup^2 |D|)``
    instead of ``r (1 + c v_sup) ||U||^2``; the additive part moves into ``B``.
    """
    v = np.asarray(v_sup, dtype=float)
    if np.any(v < 0):
        raise ValueError("v_sup must be >= 0")
    A = 2.0 * (0.5 * r + beta * c + c * v * (1.0 + (2.0 / nu) * v) + v)
    B = r * area * v**2 + 2.0 * beta * c * v**2 + 4.0 * c * v**3 + (8.0 / nu) * c * v**4
    if A.ndim == 0:
        return float(A), float(B)
    return A, B


def _expint_weight(a: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """``int_0^dt e^{-a s} ds = -expm1(-a dt) / a`` with the ``a -> 0`` limit ``dt``."""
    out = np.array(dt, dtype=float, copy=True)
    nz = a != 0
    out[nz] = -np.expm1(-a[nz] * dt[nz]) / a[nz]
    return out


def gronwall_log_bound(omega0_l2: float, times, A, B) -> np.ndarray:
    """Log of the Gronwall bound on ``||U||^2`` at every node of ``times``.

    ``int A`` uses the trapezoidal rule.  On each interval ``A`` and ``B`` are
    replaced by their endpoint averages and the outer integral is taken exactly
    for those averages, so constant coefficients reproduce the closed form.
    Repeated nodes are allowed and encode jumps.
    """
    t = np.asarray(times, dtype=float)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if not (t.shape == A.shape == B.shape) or t.ndim != 1 or t.size == 0:
        raise ValueError("times, A and B must be 1-D arrays of equal length")
    if np.any(np.diff(t) < 0):
        raise ValueError("times must be nondecreasing")
    if np.any(B < 0):
        raise ValueError("B must be >= 0")
    dt = np.diff(t)
    a_bar = 0.5 * (A[1:] + A[:-1])
    b_bar = 0.5 * (B[1:] + B[:-1])
    I = np.concatenate([[0.0], np.cumsum(a_bar * dt)])
    # int_{t_j}^{t_j+1} b e^{-I(s)} ds = b e^{-I_j} * w_j
    w = _expint_weight(a_bar, dt)
    with np.errstate(divide="ignore"):
        log_terms = np.log(b_bar) + np.log(w) - I[:-1]
        log_w0 = 2.0 * math.log(omega0_l2) if omega0_l2 > 0 else -np.inf
    acc = np.logaddexp.accumulate(np.concatenate([[log_w0], log_terms]))
    return I + acc


def gronwall_bound(omega0_l2: float, times, A, B, t: float | None = None):
    """Gronwall bound on ``||U||^2``; at the node ``t`` if given, else at every node."""
    bound = np.exp(gronwall_log_bound(omega0_l2, times, A, B))
    if t is None:
        return bound
    times = np.asarray(times, dtype=float)
    idx = np.nonzero(np.isclose(times, t, rtol=0, atol=1e-12 * max(1.0, abs(t))))[0]
    if idx.size == 0:
        raise ValueError(f"t={t} is not a node of the time grid")
    return float(bound[idx[-1]])
