"""Functions sampled on an equispaced midpoint grid over a compact interval.

Every integral in the package is the midpoint rule defined here: nodes sit at
cell centres and all quadrature weights equal ``(upper - lower) / p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class GridDomain:
    """Interval ``[lower, upper]`` discretised into ``p`` midpoint cells."""

    lower: float
    upper: float
    p: int

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("domain endpoints must be finite")
        if not self.upper > self.lower:
            raise ValueError(f"upper ({self.upper}) must exceed lower ({self.lower})")
        if int(self.p) != self.p or self.p < 2:
            raise ValueError(f"need at least 2 grid nodes, got p={self.p}")
        object.__setattr__(self, "p", int(self.p))

    @property
    def length(self) -> float:
        """Lebesgue measure of the interval."""
        return self.upper - self.lower

    @property
    def weight(self) -> float:
        return (self.upper - self.lower) / self.p

    @cached_property
    def nodes(self) -> np.ndarray:
        t = self.lower + (np.arange(self.p) + 0.5) * self.weight
        t.flags.writeable = False
        return t

    def integrate(self, values) -> np.ndarray:
        """Quadrature of ``values`` along the last axis."""
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.p:
            raise ValueError(f"expected {self.p} node values, got {values.shape[-1]}")
        return self.weight * values.sum(axis=-1)

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def evaluate(self, f) -> "GridFunction":
        """Sample a vectorised callable at the nodes."""
        return GridFunction(self, f(self.nodes))


def make_domain(lower: float, upper: float, p: int) -> GridDomain:
    return GridDomain(float(lower), float(upper), p)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Node values of a function on a :class:`GridDomain`."""

    domain: GridDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.domain.p:
            raise ValueError(f"expected {self.domain.p} node values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.domain.p

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def _lift(self, other):
        if isinstance(other, GridFunction):
            _check_same_domain(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.domain, self.values + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.domain, self.values - self._lift(other))

    def __rsub__(self, other):
        return GridFunction(self.domain, self._lift(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.domain, self.values * self._lift(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.domain, -self.values)


def _check_same_domain(f: GridFunction, g: GridFunction) -> None:
    if f.domain != g.domain:
        raise ValueError(f"domain mismatch: {f.domain} vs {g.domain}")


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Midpoint-rule approximation of the L2 inner product."""
    _check_same_domain(f, g)
    return float(f.domain.weight * np.dot(f.values, g.values))


def norm(f: GridFunction) -> float:
    return math.sqrt(max(inner_product(f, f), 0.0))


def cosine_basis(domain: GridDomain, count: int) -> np.ndarray:
    """First ``count`` members of the cosine system as a ``(count, p)`` array.

    ``phi_1 = 1`` and ``phi_{j+1}(t) = sqrt(2) cos(j pi u)`` with ``u`` the
    position rescaled to [0, 1], further scaled by ``1/sqrt(length)`` so the
    system is orthonormal on the actual interval.  On the midpoint grid the
    first ``p`` members are exactly orthonormal under the quadrature.
    """
    u = (domain.nodes - domain.lower) / domain.length
    j = np.arange(count)[:, None]
    basis = np.sqrt(2.0) * np.cos(j * np.pi * u[None, :])
    basis[0] = 1.0
    return basis / math.sqrt(domain.length)
