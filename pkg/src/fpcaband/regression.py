"""PCA-based estimation of the slope function in a scalar-on-function model.

Model: ``Y = a + <b, X - EX> + eps``, optionally with a vector regressor
``Z`` (first column the constant) entering linearly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fpca import EigenSystem, eigendecompose, empirical_covariance, scores
from .grid import GridDomain, GridFunction, inner_product

RANK_TOL = 1e-10
COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class FplrDataset:
    """Responses, curves on a shared grid, and optional vector covariates.

    Parameters
    ----------
    domain : GridDomain
        Grid the curves are sampled on.
    responses : array of shape (n,)
    curves : array of shape (n, p)
        Node values of each predictor curve.
    covariates : array of shape (n, d), optional
        Vector regressors; the first column must be identically 1.
    """

    domain: GridDomain
    responses: np.ndarray = field(repr=False)
    curves: np.ndarray = field(repr=False)
    covariates: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        Y = np.array(self.responses, dtype=float).reshape(-1)
        X = np.array(self.curves, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.domain.p:
            raise ValueError(f"curves must have shape (n, {self.domain.p}), got {X.shape}")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"{Y.shape[0]} responses but {X.shape[0]} curves")
        if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(X))):
            raise ValueError("responses and curves must be finite")
        object.__setattr__(self, "responses", Y)
        object.__setattr__(self, "curves", X)
        if self.covariates is not None:
            Z = np.array(self.covariates, dtype=float)
            if Z.ndim == 1:
                Z = Z[:, None]
            if Z.shape[0] != Y.shape[0] or Z.shape[1] < 1:
                raise ValueError(f"covariates must have shape (n, d), got {Z.shape}")
            if not np.all(Z[:, 0] == 1.0):
                raise ValueError("first covariate column must be identically 1")
            if not np.all(np.isfinite(Z)):
                raise ValueError("covariates must be finite")
            object.__setattr__(self, "covariates", Z)

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    @property
    def has_covariates(self) -> bool:
        return self.covariates is not None


@dataclass(frozen=True, eq=False)
class FplrFit:
    """Fitted PCA estimator at cut-off ``m``.

    ``scores`` are the ``(n, m)`` training scores; ``gamma`` and ``upsilon``
    are only set for partial-linear fits.
    """

    m: int
    coefficients: np.ndarray
    slope: GridFunction
    intercept: float
    sigma2: float
    eig: EigenSystem = field(repr=False)
    scores: np.ndarray = field(repr=False)
    ybar: float
    n: int
    gamma: np.ndarray | None = None
    upsilon: np.ndarray | None = field(default=None, repr=False)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    @property
    def kappas(self) -> np.ndarray:
        return self.eig.eigenvalues[: self.m]

    @property
    def domain(self) -> GridDomain:
        return self.eig.domain

    def fitted_values(self) -> np.ndarray:
        if self.gamma is None:
            return self.ybar + self.scores @ self.coefficients
        raise NotImplementedError("use predict() with covariates for partial-linear fits")


def _check_cutoff(eig: EigenSystem, m: int) -> None:
    if int(m) != m or m < 1:
        raise ValueError(f"cut-off must be a positive integer, got {m}")
    if m > len(eig):
        raise ValueError(f"cut-off {m} exceeds the number of eigenpairs ({len(eig)})")
    kappa = eig.eigenvalues
    if not kappa[m - 1] > RANK_TOL * kappa[0]:
        raise ValueError(
            f"cut-off {m} exceeds numerically identifiable rank "
            f"(kappa_{m}={kappa[m - 1]:.3g}, kappa_1={kappa[0]:.3g})"
        )


def pca_design(data: FplrDataset) -> tuple[EigenSystem, np.ndarray]:
    """Eigensystem and full score matrix used by fits and risk curves."""
    if data.has_covariates:
        Xc, _ = partial_out(data)
        kernel = empirical_covariance(Xc, data.domain, center=False)
        eig = eigendecompose(kernel)
        return eig, scores(Xc, eig)
    if data.n < 2:
        raise ValueError(f"need at least 2 observations, got {data.n}")
    eig = eigendecompose(empirical_covariance(data.curves, data.domain))
    return eig, scores(data.curves, eig)


def _coefficients(Y: np.ndarray, xi: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    return (xi.T @ Y) / Y.shape[0] / kappa


def fit_pca(data: FplrDataset, m: int, eig: EigenSystem | None = None) -> FplrFit:
    """PCA estimator ``b_hat = sum_{j<=m} b_hat_j phi_hat_j``.

    ``eig`` may be supplied to reuse an eigensystem (for instance one with
    flipped signs); by default it is computed from ``data``.
    """
    if data.has_covariates:
        raise ValueError("dataset has covariates; use fit_partial")
    if data.n < 2:
        raise ValueError(f"need at least 2 observations, got {data.n}")
    if eig is None:
        eig = eigendecompose(empirical_covariance(data.curves, data.domain))
    _check_cutoff(eig, m)
    Y = data.responses
    xi = scores(data.curves, eig, m)
    coef = _coefficients(Y, xi, eig.eigenvalues[:m])
    ybar = float(Y.mean())
    sigma2 = sigma_hat(Y - ybar, xi, coef)
    slope = GridFunction(data.domain, coef @ eig.eigenfunctions[:m])
    return FplrFit(m, coef, slope, ybar, sigma2, eig, xi, ybar, data.n)


def sigma_hat(centred_response: np.ndarray, xi: np.ndarray, coef: np.ndarray) -> float:
    """Residual mean square ``n^-1 sum (Y_i - Ybar - sum_j b_j xi_ij)^2``."""
    resid = centred_response - xi @ coef
    return float(np.mean(resid**2))


def predict(fit: FplrFit, newcurve, newz=None) -> float:
    """Predicted response for a new curve (and covariate vector, for partial fits)."""
    if not isinstance(newcurve, GridFunction):
        newcurve = GridFunction(fit.domain, newcurve)
    if fit.gamma is None:
        if newz is not None:
            raise ValueError("fit has no covariates")
        centred = GridFunction(fit.domain, newcurve.values - fit.eig.mean_curve)
        return fit.intercept + inner_product(fit.slope, centred)
    if newz is None:
        raise ValueError("partial-linear fit needs the covariate vector z")
    z = np.asarray(newz, dtype=float).reshape(-1)
    if z.shape[0] != fit.gamma.shape[0]:
        raise ValueError(f"expected {fit.gamma.shape[0]} covariates, got {z.shape[0]}")
    centred = GridFunction(fit.domain, newcurve.values - z @ fit.upsilon)
    return float(z @ fit.gamma) + inner_product(fit.slope, centred)


def _gram(Z: np.ndarray) -> np.ndarray:
    n, d = Z.shape
    if n <= d:
        raise ValueError(f"need more observations than covariates (n={n}, d={d})")
    G = Z.T @ Z / n
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ValueError(f"covariate second-moment matrix is ill-conditioned (cond={cond:.3g})")
    return G


def partial_out(data: FplrDataset) -> tuple[np.ndarray, np.ndarray]:
    """Regress the curves nodewise on Z.

    Returns
    -------
    residual_curves : array (n, p)
        ``X_i(t) - Z_i' Upsilon(t)``.
    upsilon : array (d, p)
        Nodewise least-squares coefficients.
    """
    if not data.has_covariates:
        raise ValueError("dataset has no covariates")
    Z, X = data.covariates, data.curves
    G = _gram(Z)
    upsilon = np.linalg.solve(G, Z.T @ X / data.n)
    return X - Z @ upsilon, upsilon


def fit_partial(data: FplrDataset, m: int) -> FplrFit:
    """PCA estimator after partialling the vector regressor out of the curves."""
    Xc, upsilon = partial_out(data)
    Z, Y, n = data.covariates, data.responses, data.n
    eig = eigendecompose(empirical_covariance(Xc, data.domain, center=False))
    _check_cutoff(eig, m)
    xi = scores(Xc, eig, m)
    coef = _coefficients(Y, xi, eig.eigenvalues[:m])
    gamma = np.linalg.solve(_gram(Z), Z.T @ Y / n)
    sigma2 = sigma_hat(Y - Z @ gamma, xi, coef)
    slope = GridFunction(data.domain, coef @ eig.eigenfunctions[:m])
    ybar = float(Y.mean())
    return FplrFit(m, coef, slope, ybar, sigma2, eig, xi, ybar, n, gamma=gamma, upsilon=upsilon)


def fit(data: FplrDataset, m: int) -> FplrFit:
    """Dispatch to :func:`fit_partial` or :func:`fit_pca` depending on covariates."""
    return fit_partial(data, m) if data.has_covariates else fit_pca(data, m)
