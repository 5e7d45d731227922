"""Monte Carlo ensembles of independent trajectories."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .dynamics import ModelParams, TrajectoryRecord, simulate
from .noise import NoiseSpec, convolution_variance, noise_stream, ou_coefficients
from .spectral import PI, wavenumber_sq

Z95 = 1.959963984540054


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("QGSTORM_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class EnsembleConfig:
    params: ModelParams
    noise: NoiseSpec
    omega0: np.ndarray = field(compare=False, repr=False)
    n_traj: int = 100
    base_seed: int = 0
    T: float = 1.0
    h: float = 1e-3
    scheme: str = "split"
    stride: int = 10
    workers: int = 1

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class EnsembleStats:
    times: np.ndarray
    count: np.ndarray
    mean_l2: np.ndarray
    var_l2: np.ndarray
    ci_l2: np.ndarray
    min_l2: np.ndarray
    max_l2: np.ndarray
    mean_sup: np.ndarray
    var_sup: np.ndarray
    ci_sup: np.ndarray
    min_sup: np.ndarray
    max_sup: np.ndarray
    n_blowup: np.ndarray  # trajectories aborted at or before each record time

    @property
    def blowups(self) -> int:
        return int(self.n_blowup[-1]) if len(self.n_blowup) else 0


@dataclass
class EnsembleResult:
    stats: EnsembleStats
    records: list[TrajectoryRecord]
    failures: dict[int, str]


def _run_one(args) -> TrajectoryRecord:
    cfg, index = args
    return simulate(cfg.params, cfg.noise, cfg.omega0, cfg.T, cfg.h, scheme=cfg.scheme,
                    seed=cfg.base_seed, trajectory=index, stride=cfg.stride)


def _column_stats(columns: list[float]):
    n = len(columns)
    if n == 0:
        nan = float("nan")
        return nan, nan, nan, nan, nan
    lo, hi = min(columns), max(columns)
    if lo == hi:  # fsum(n x) / n can miss x by one ulp
        return lo, 0.0, 0.0, lo, hi
    # fsum keeps the mean and the centered sum of squares exact to rounding.
    mean = math.fsum(columns) / n
    var = math.fsum((x - mean) ** 2 for x in columns) / (n - 1) if n > 1 else 0.0
    ci = Z95 * math.sqrt(var / n)
    return mean, var, ci, lo, hi


def aggregate(records: list[TrajectoryRecord], times: np.ndarray) -> EnsembleStats:
    """Per-record-time statistics over the trajectories that reached that time."""
    nt = len(times)
    out = {k: np.full(nt, np.nan) for k in
           ("mean_l2", "var_l2", "ci_l2", "min_l2", "max_l2",
            "mean_sup", "var_sup", "ci_sup", "min_sup", "max_sup")}
    count = np.zeros(nt, dtype=int)
    n_blowup = np.zeros(nt, dtype=int)
    for i in range(nt):
        l2 = [float(r.l2[i]) for r in records if len(r) > i]
        sup = [float(r.sup_est[i]) for r in records if len(r) > i]
        count[i] = len(l2)
        n_blowup[i] = sum(1 for r in records if r.aborted and len(r) <= i)
        (out["mean_l2"][i], out["var_l2"][i], out["ci_l2"][i],
         out["min_l2"][i], out["max_l2"][i]) = _column_stats(l2)
        (out["mean_sup"][i], out["var_sup"][i], out["ci_sup"][i],
         out["min_sup"][i], out["max_sup"][i]) = _column_stats(sup)
    return EnsembleStats(times=times, count=count, n_blowup=n_blowup, **out)


def record_times(cfg: EnsembleConfig) -> np.ndarray:
    nsteps = int(round(cfg.T / cfg.h))
    steps = list(range(0, nsteps + 1, cfg.stride))
    if steps[-1] != nsteps:
        steps.append(nsteps)
    return np.array(steps) * cfg.h


def run_ensemble(cfg: EnsembleConfig) -> EnsembleResult:
    """Run ``cfg.n_traj`` trajectories; trajectory ``i`` uses stream ``(base_seed, i)``.

    Output does not depend on ``cfg.workers``.  A trajectory that raises is
    reported in ``failures`` and left out of the statistics; blow-ups are kept
    as partial records and counted.
    """
    jobs = [(cfg, i) for i in range(cfg.n_traj)]
    records: list[TrajectoryRecord | None] = [None] * cfg.n_traj
    failures: dict[int, str] = {}
    if cfg.workers == 1:
        for cfg_i, i in jobs:
            try:
                records[i] = _run_one((cfg_i, i))
            except Exception as exc:  # reported, batch continues
                failures[i] = f"{type(exc).__name__}: {exc}"
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_one, job) for job in jobs]
            for i, fut in enumerate(futures):
                try:
                    records[i] = fut.result()
                except Exception as exc:
                    failures[i] = f"{type(exc).__name__}: {exc}"
    done = [r for r in records if r is not None]
    return EnsembleResult(aggregate(done, record_times(cfg)), done, failures)


@dataclass
class OUTestReport:
    """Per-mode chi-square comparison of ``Var W_A(t)`` against its closed form."""

    modes: list[tuple[int, int]]
    expected: np.ndarray
    sample: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    passed: np.ndarray

    @property
    def pass_fraction(self) -> float:
        return float(np.mean(self.passed)) if len(self.passed) else 1.0

    def __repr__(self):
        return f"OUTestReport(modes={len(self.modes)}, pass_fraction={self.pass_fraction:.4f})"


def ou_variance_test(spec: NoiseSpec, p: ModelParams, t: float, n: int = 10_000,
                     modes: list[tuple[int, int]] | None = None, steps: int = 1,
                     seed: int | None = None, confidence: float = 0.99) -> OUTestReport:
    """Sample ``W_A(t)`` ``n`` times and test each mode's variance.

    The mean is known to be zero, so ``n s^2 / sigma^2`` with
    ``s^2 = mean(a^2)`` is ``chi^2_n`` under the null; the band is its two-sided
    ``confidence`` interval.
    """
    if n < 1000:
        raise ValueError("n must be >= 10^3")
    M, N = p.modes
    if modes is None:
        modes = [(m, k) for m in range(1, M + 1) for k in range(1, N + 1)]
    im, ik = (np.array(modes).T - 1)
    expected = convolution_variance(spec, p.nu, p.modes, t)[im, ik]
    if t == 0:
        samples = np.zeros((n, len(modes)))
    else:
        rng = noise_stream(spec.seed if seed is None else seed, 0)
        samples = _sample_convolution(spec, p, t, n, steps, rng)[:, im, ik]
    sample_var = (samples**2).mean(axis=0)
    alpha = 1.0 - confidence
    lo_q, hi_q = stats.chi2.ppf([alpha / 2, 1 - alpha / 2], n)
    lower = expected * lo_q / n
    upper = expected * hi_q / n
    passed = np.where(expected == 0, sample_var == 0,
                      (sample_var >= lower) & (sample_var <= upper))
    return OUTestReport(list(modes), expected, sample_var, lower, upper, passed)


def _sample_convolution(spec: NoiseSpec, p: ModelParams, t: float, n: int, steps: int,
                        rng: np.random.Generator) -> np.ndarray:
    """``n`` independent draws of ``W_A(t)`` by ``steps`` exact OU transitions."""
    M, N = p.modes
    lam = -p.nu * PI**2 * wavenumber_sq(M, N)
    decay, sd = ou_coefficients(lam, spec.mu(M, N), t / steps)
    a = np.zeros((n, M, N))
    for _ in range(steps):
        a = decay * a + sd * rng.standard_normal((n, M, N))
    return a
