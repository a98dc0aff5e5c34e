"""Empirical covariance operator, its spectral decomposition, and PC scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridDomain, GridFunction

SYMMETRY_TOL = 1e-10
NEGATIVE_EIGENVALUE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CovKernel:
    """Covariance kernel evaluated on the node grid.

    ``mean_curve`` is the curve subtracted before forming products; it is
    zero for kernels built from already-centred (partialled-out) curves.
    """

    domain: GridDomain
    matrix: np.ndarray = field(repr=False)
    mean_curve: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Leading eigenpairs of the covariance integral operator.

    ``eigenfunctions[j]`` holds the node values of the (j+1)-th eigenfunction;
    each row has unit quadrature norm.
    """

    domain: GridDomain
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray = field(repr=False)
    mean_curve: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.eigenvalues)

    def eigenfunction(self, j: int) -> GridFunction:
        """Eigenfunction ``j`` (1-based, matching the usual indexing)."""
        return GridFunction(self.domain, self.eigenfunctions[j - 1])

    def rank(self, rel_tol: float = 1e-10) -> int:
        """Number of eigenvalues above ``rel_tol`` times the largest one."""
        if len(self.eigenvalues) == 0 or self.eigenvalues[0] <= 0:
            return 0
        return int(np.sum(self.eigenvalues > rel_tol * self.eigenvalues[0]))

    def flip(self, j: int) -> "EigenSystem":
        """Copy with the sign of eigenfunction ``j`` (1-based) reversed."""
        phi = self.eigenfunctions.copy()
        phi[j - 1] *= -1.0
        return EigenSystem(self.domain, self.eigenvalues, phi, self.mean_curve)


def _as_curve_matrix(curves, domain: GridDomain) -> np.ndarray:
    if isinstance(curves, np.ndarray):
        X = np.asarray(curves, dtype=float)
    else:
        rows = []
        for c in curves:
            if isinstance(c, GridFunction):
                if c.domain != domain:
                    raise ValueError("curve domain does not match")
                rows.append(c.values)
            else:
                rows.append(np.asarray(c, dtype=float))
        X = np.vstack(rows) if rows else np.empty((0, domain.p))
    if X.ndim != 2 or X.shape[1] != domain.p:
        raise ValueError(f"curves must be an (n, {domain.p}) array, got {X.shape}")
    return X


def empirical_covariance(curves, domain: GridDomain, center: bool = True) -> CovKernel:
    """Empirical covariance ``n^-1 sum (X_i - Xbar)(s) (X_i - Xbar)(t)``.

    With ``center=False`` the curves are used as given (second-moment form),
    which is what the partial-linear model needs after regressing out Z.
    """
    X = _as_curve_matrix(curves, domain)
    n = X.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 curves, got {n}")
    mean = X.mean(axis=0) if center else np.zeros(domain.p)
    Xc = X - mean
    K = Xc.T @ Xc / n
    K = 0.5 * (K + K.T)
    return CovKernel(domain, K, mean)


def _orient(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive (first on ties)."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigendecompose(kernel: CovKernel, m_max: int | None = None) -> EigenSystem:
    """Top ``m_max`` eigenpairs of the integral operator with kernel ``kernel``.

    The symmetric node matrix is diagonalised directly; operator eigenvalues
    are the matrix eigenvalues times the quadrature weight and eigenvectors
    are rescaled to unit quadrature norm.
    """
    domain = kernel.domain
    p = domain.p
    if m_max is None:
        m_max = p
    if not 1 <= m_max <= p:
        raise ValueError(f"m_max must lie in [1, {p}], got {m_max}")
    K = np.asarray(kernel.matrix, dtype=float)
    scale = max(np.max(np.abs(K)), 1.0)
    if np.max(np.abs(K - K.T)) > SYMMETRY_TOL * scale:
        raise ValueError("covariance matrix is not symmetric")

    mu, V = np.linalg.eigh(K)
    order = np.argsort(mu, kind="stable")[::-1]
    mu = mu[order][:m_max]
    V = V[:, order][:, :m_max]

    w = domain.weight
    kappa = w * mu
    floor = NEGATIVE_EIGENVALUE_TOL * max(1.0, abs(kappa[0]))
    if np.any(kappa < -floor):
        raise ValueError(f"covariance has a negative eigenvalue {kappa.min():.3g}")
    kappa = np.where(kappa < 0, 0.0, kappa)

    phi = _orient(V).T / np.sqrt(w)
    return EigenSystem(domain, kappa, np.ascontiguousarray(phi), kernel.mean_curve)


def scores(curves, eig: EigenSystem, m: int | None = None) -> np.ndarray:
    """``(n, m)`` matrix of quadrature inner products of centred curves with eigenfunctions."""
    if m is None:
        m = len(eig)
    if not 1 <= m <= len(eig):
        raise ValueError(f"m must lie in [1, {len(eig)}], got {m}")
    X = _as_curve_matrix(curves, eig.domain)
    return eig.domain.weight * (X - eig.mean_curve) @ eig.eigenfunctions[:m].T
