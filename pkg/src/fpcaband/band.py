"""Confidence balls and bands for the slope function.

The proposed band has constant half-width
``sigma_hat * c_n(1 - tau1) / sqrt(n) * sqrt(1 / (tau2 * |I|))`` where
``c_n(1 - tau1)`` is the (1 - tau1)-quantile of ``sqrt(sum_j eta_j / kappa_j)``
for independent chi-square(1) variables ``eta_j``.  The plug-in ("ms")
band is provided as a pointwise-width baseline.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .grid import GridFunction
from .regression import FplrFit

DEFAULT_DRAWS = 100_000
MIN_DRAWS = 1000
CHUNK = 1 << 16


@dataclass(frozen=True)
class QuantileEstimate:
    value: float
    tau: float
    draws: int
    method: str
    seed: tuple | None = None


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _seed_record(ss: np.random.SeedSequence) -> tuple:
    return (ss.entropy, tuple(ss.spawn_key))


def _check_kappas(kappas) -> np.ndarray:
    k = np.asarray(kappas, dtype=float).reshape(-1)
    if k.size == 0:
        raise ValueError("need at least one eigenvalue")
    if not np.all(k > 0):
        raise ValueError("eigenvalues must be strictly positive")
    return k


def _check_tau(tau: float) -> float:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    return float(tau)


def _chunk_statistics(ss: np.random.SeedSequence, index: int, size: int, inv_kappa: np.ndarray):
    child = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (index,))
    z = np.random.default_rng(child).standard_normal((size, inv_kappa.shape[0]))
    return np.sqrt((z * z) @ inv_kappa)


def order_statistic_rank(prob: float, draws: int) -> int:
    """1-based rank ``ceil(prob * draws)`` with a guard against rounding up."""
    return max(1, min(draws, math.ceil(prob * draws - 1e-9)))


def simulate_quantile(
    kappas,
    tau: float,
    draws: int = DEFAULT_DRAWS,
    seed=0,
    workers: int = 1,
) -> QuantileEstimate:
    """Monte Carlo (1 - tau)-quantile of ``sqrt(sum_j eta_j / kappa_j)``.

    Draws are generated in fixed-size chunks, each from its own substream of
    ``seed``, so the result does not depend on ``workers``.
    """
    inv_kappa = 1.0 / _check_kappas(kappas)
    tau = _check_tau(tau)
    if draws < MIN_DRAWS:
        raise ValueError(f"need at least {MIN_DRAWS} draws, got {draws}")
    ss = _seed_sequence(seed)
    sizes = [min(CHUNK, draws - start) for start in range(0, draws, CHUNK)]
    jobs = [(ss, i, size, inv_kappa) for i, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _chunk_statistics(*a), jobs))
    else:
        parts = [_chunk_statistics(*a) for a in jobs]
    sample = np.concatenate(parts)
    k = order_statistic_rank(1.0 - tau, draws)
    value = float(np.partition(sample, k - 1)[k - 1])
    return QuantileEstimate(value, tau, draws, "simulated", _seed_record(ss))


def normal_approx_quantile(kappas, tau: float) -> QuantileEstimate:
    """Central-limit approximation to the same quantile.

    ``c^2 ~ sum_j 1/kappa_j + z_{1-tau} * sqrt(2 sum_j kappa_j^-2)``, clamped at 0.
    Less accurate than :func:`simulate_quantile` for the small ``m`` used in practice.
    """
    k = _check_kappas(kappas)
    tau = _check_tau(tau)
    inner = np.sum(1.0 / k) + stats.norm.ppf(1.0 - tau) * math.sqrt(2.0 * np.sum(k**-2.0))
    return QuantileEstimate(math.sqrt(max(inner, 0.0)), tau, 0, "normal_approx")


def ball_radius(fit: FplrFit, quantile: QuantileEstimate, n: int | None = None) -> float:
    """Radius ``sigma_hat * c / sqrt(n)`` of the L2 confidence ball around ``b_hat``."""
    n = fit.n if n is None else n
    return fit.sigma * quantile.value / math.sqrt(n)


@dataclass(frozen=True, eq=False)
class ConfidenceBand:
    """Band ``center(t) +/- half_width(t)``.

    ``half_width`` is a float for the constant-width proposed band and an
    array of node values for the MS band.
    """

    center: GridFunction
    half_width: float | np.ndarray = field(repr=False)
    tau1: float
    tau2: float | None
    kind: str
    critical_value: float

    def __post_init__(self):
        hw = self.half_width
        if np.ndim(hw) == 0:
            hw = float(hw)
            ok = math.isfinite(hw) and hw >= 0
        else:
            hw = np.array(hw, dtype=float)
            hw.flags.writeable = False
            ok = hw.shape == (self.center.domain.p,) and np.all(np.isfinite(hw)) and np.all(hw >= 0)
        if not ok:
            raise ValueError("half-width must be finite and nonnegative")
        object.__setattr__(self, "half_width", hw)

    @property
    def domain(self):
        return self.center.domain

    @property
    def half_widths(self) -> np.ndarray:
        return np.broadcast_to(self.half_width, (self.domain.p,))

    @property
    def lower(self) -> np.ndarray:
        return self.center.values - self.half_widths

    @property
    def upper(self) -> np.ndarray:
        return self.center.values + self.half_widths

    @property
    def max_width(self) -> float:
        return float(2.0 * np.max(self.half_widths))

    @property
    def mean_width(self) -> float:
        """Quadrature average of the width over the interval."""
        if np.ndim(self.half_width) == 0:
            return float(2.0 * self.half_width)
        return float(self.domain.integrate(2.0 * self.half_widths) / self.domain.length)

    def covered(self, truth) -> np.ndarray:
        """Boolean node mask of where ``truth`` lies inside the closed band."""
        values = truth.values if isinstance(truth, GridFunction) else np.asarray(truth, dtype=float)
        if isinstance(truth, GridFunction) and truth.domain != self.domain:
            raise ValueError("domain mismatch")
        return np.abs(values - self.center.values) <= self.half_widths


def build_band(fit: FplrFit, quantile: QuantileEstimate, tau2: float, n: int | None = None) -> ConfidenceBand:
    """Constant-width band covering ``b`` on most of the interval."""
    tau2 = _check_tau(tau2)
    length = fit.domain.length
    half = ball_radius(fit, quantile, n) * math.sqrt(1.0 / (tau2 * length))
    return ConfidenceBand(fit.slope, half, quantile.tau, tau2, "proposed", quantile.value)


def ms_critical_value(m: int, tau: float, method: str = "normal") -> float:
    """``m + sqrt(2m) z_{1-tau}``, or the chi-square(m) quantile with ``method='chi2'``."""
    if method == "normal":
        return m + math.sqrt(2.0 * m) * stats.norm.ppf(1.0 - tau)
    if method == "chi2":
        return float(stats.chi2.ppf(1.0 - tau, m))
    raise ValueError(f"unknown MS critical value method {method!r}")


def ms_band(fit: FplrFit, tau: float, method: str = "normal") -> ConfidenceBand:
    """Plug-in ("ms") band with node-varying half-width.

    ``sigma_hat * sqrt(c / n * sum_{j<=m} phi_hat_j(t)^2 / kappa_hat_j)``.
    """
    tau = _check_tau(tau)
    kappa = _check_kappas(fit.kappas)
    crit = ms_critical_value(fit.m, tau, method)
    if crit <= 0:
        raise ValueError(f"MS critical value is nonpositive ({crit:.3g}) for m={fit.m}, tau={tau}")
    phi = fit.eig.eigenfunctions[: fit.m]
    spread = (phi**2 / kappa[:, None]).sum(axis=0)
    half = fit.sigma * np.sqrt(crit / fit.n * spread)
    return ConfidenceBand(fit.slope, half, tau, None, "ms", crit)
