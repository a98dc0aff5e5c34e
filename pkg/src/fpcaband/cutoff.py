"""Risk-based choice of the PCA cut-off level."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fpca import EigenSystem
from .regression import RANK_TOL, FplrDataset, pca_design

DEFAULT_CANDIDATES = tuple(range(1, 11))
RULES = ("mhat_plus_one", "mhat_max_two")


@dataclass(frozen=True)
class RiskCurve:
    candidates: tuple[int, ...]
    values: np.ndarray

    @property
    def argmin(self) -> int:
        """Minimising candidate; the smallest one wins ties."""
        return self.candidates[int(np.argmin(self.values))]

    def as_dict(self) -> dict[int, float]:
        return {m: float(v) for m, v in zip(self.candidates, self.values)}


def _validate_candidates(candidates) -> tuple[int, ...]:
    cands = tuple(int(m) for m in candidates)
    if not cands:
        raise ValueError("candidate set is empty")
    if any(m < 1 for m in cands):
        raise ValueError("candidate cut-offs must be positive")
    if len(set(cands)) != len(cands):
        raise ValueError("candidate cut-offs must be distinct")
    return cands


def risk_terms(Y: np.ndarray, xi: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    """Per-component contributions to the risk estimate.

    Term ``j`` is ``-b_j^2 + 2/(n(n-1)) sum_i (xi_ij Y_i - c_j)^2 / kappa_j^2``
    with ``c_j = n^-1 sum_i xi_ij Y_i`` and ``b_j = c_j / kappa_j``; the risk
    at cut-off ``m`` is the sum of the first ``m`` terms.
    """
    n = Y.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    prod = xi * Y[:, None]
    c = prod.mean(axis=0)
    b = c / kappa
    spread = ((prod - c) ** 2).sum(axis=0)
    return -(b**2) + 2.0 / (n * (n - 1)) * spread / kappa**2


def _curve(terms: np.ndarray, cands: tuple[int, ...]) -> RiskCurve:
    cum = np.cumsum(terms)
    return RiskCurve(cands, cum[np.asarray(cands) - 1])


def risk_curve(
    data: FplrDataset,
    candidates=DEFAULT_CANDIDATES,
    design: tuple[EigenSystem, np.ndarray] | None = None,
) -> RiskCurve:
    """Estimated L2 risk (up to a constant) of the PCA estimator per candidate cut-off.

    ``design`` is an optional precomputed ``(eigensystem, scores)`` pair as
    returned by :func:`fpcaband.regression.pca_design`.
    """
    cands = _validate_candidates(candidates)
    eig, xi = design if design is not None else pca_design(data)
    top = max(cands)
    kappa = eig.eigenvalues
    if top > len(kappa) or not kappa[top - 1] > RANK_TOL * kappa[0]:
        raise ValueError(f"candidate cut-off {top} exceeds numerically identifiable rank")
    return _curve(risk_terms(data.responses, xi[:, :top], kappa[:top]), cands)


def oracle_risk_curve(
    data: FplrDataset,
    candidates,
    true_eigenvalues,
    true_eigenfunctions,
) -> RiskCurve:
    """Risk estimate with the population eigenpairs in place of the empirical ones.

    Scores are the uncentred inner products of each curve with the known
    eigenfunctions; the statistic is then unbiased for
    ``-sum_{j<=m} b_j^2 + n^-1 sum_{j<=m} Var(xi_j Y) / kappa_j^2``.
    """
    cands = _validate_candidates(candidates)
    top = max(cands)
    kappa = np.asarray(true_eigenvalues, dtype=float)[:top]
    phi = np.asarray(true_eigenfunctions, dtype=float)[:top]
    if kappa.shape[0] < top or phi.shape[0] < top:
        raise ValueError(f"need at least {top} population eigenpairs")
    if np.any(kappa <= 0):
        raise ValueError("population eigenvalues must be positive")
    xi = data.domain.weight * data.curves @ phi.T
    return _curve(risk_terms(data.responses, xi, kappa), cands)


def select_cutoff(curve: RiskCurve, rule: str = "mhat_plus_one") -> int:
    """Apply one of the practical rules to the risk minimiser.

    ``mhat_plus_one`` returns ``mhat + 1`` capped at the largest candidate;
    ``mhat_max_two`` returns ``max(mhat, 2)``.
    """
    mhat = curve.argmin
    top = max(curve.candidates)
    if rule == "mhat_plus_one":
        if mhat + 1 > top:
            warnings.warn(
                f"risk minimiser {mhat} sits at the largest candidate; returning {top}",
                RuntimeWarning,
                stacklevel=2,
            )
            return top
        return mhat + 1
    if rule == "mhat_max_two":
        return min(max(mhat, 2), top)
    raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
