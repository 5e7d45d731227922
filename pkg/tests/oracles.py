"""Independent reference computations shared by several test modules."""
import math

import numpy as np
from scipy import integrate


def disk_square_area(cx: float, cy: float, rho: float) -> float:
    """Area of ``B((cx, cy), rho) ∩ [0,1]^2`` by adaptive quadrature over x."""
    lo, hi = max(0.0, cx - rho), min(1.0, cx + rho)
    if hi <= lo:
        return 0.0

    def chord(x):
        h = math.sqrt(max(rho * rho - (x - cx) ** 2, 0.0))
        return max(0.0, min(1.0, cy + h) - max(0.0, cy - h))

    # kinks where the circle crosses y = 0 or y = 1
    breaks = [cx + s * math.sqrt(rho * rho - d * d)
              for d in (cy, 1 - cy) if d < rho for s in (-1, 1)]
    breaks = sorted(b for b in breaks if lo < b < hi)
    val, _ = integrate.quad(chord, lo, hi, points=breaks or None, limit=200, epsabs=1e-13)
    return val


def kappa_quadrature(rho_grid: int = 64, centers: int = 5) -> float:
    """Minimum of ``area / rho^2`` over the same (rho, center) grid as the estimator."""
    rhos = math.sqrt(2.0) * np.arange(1, rho_grid + 1) / (rho_grid + 1)
    cs = np.linspace(0.0, 0.5, centers)
    return min(disk_square_area(cx, cy, rho) / rho**2 for rho in rhos for cx in cs for cy in cs)


def chi2_free_se(var: float, n: int) -> float:
    """Standard error of a known-mean Gaussian sample variance."""
    return var * math.sqrt(2.0 / n)
