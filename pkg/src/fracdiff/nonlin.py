"""Very singular nonlinearities Phi_n(u) = -u^-n (n > 0), Phi_0 = log u, and their shifts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeArgument, NonpositiveArgument, OutOfRange
from .grid import FLOOR


@dataclass(frozen=True)
class Nonlinearity:
    n: float

    def __post_init__(self):
        if not self.n >= 0:
            raise OutOfRange("n must be nonnegative")

    @property
    def is_log(self) -> bool:
        return self.n == 0


@dataclass(frozen=True)
class RegularizedNonlinearity:
    base: Nonlinearity
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise OutOfRange("eps must be positive")

    @property
    def n(self) -> float:
        return self.base.n


def _raw_phi(n: float, u):
    return np.log(u) if n == 0 else -(u ** (-n))


def phi(nl: Nonlinearity, u):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise NonpositiveArgument("Phi needs u > 0")
    return _raw_phi(nl.n, u)


def phi_floored(nl: Nonlinearity, u):
    """Phi evaluated at max(u, FLOOR); used when probing limit solutions near zero."""
    return _raw_phi(nl.n, np.maximum(np.asarray(u, dtype=float), FLOOR))


def phi_prime(nl: Nonlinearity, u):
    u = np.asarray(u, dtype=float)
    return 1.0 / u if nl.n == 0 else nl.n * u ** (-nl.n - 1.0)


def _check_v(v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise NegativeArgument("Phi_eps needs v >= 0")
    return v


def phi_eps(rnl: RegularizedNonlinearity, v):
    """Phi(v + eps) - Phi(eps), written to avoid cancellation for small v."""
    v = _check_v(v)
    n, e = rnl.n, rnl.eps
    if n == 0:
        return np.log1p(v / e)
    # eps^-n (1 - (1 + v/eps)^-n)
    return -(e ** (-n)) * np.expm1(-n * np.log1p(v / e))


def phi_eps_prime(rnl: RegularizedNonlinearity, v):
    v = _check_v(v)
    n, e = rnl.n, rnl.eps
    return 1.0 / (v + e) if n == 0 else n * (v + e) ** (-n - 1.0)


def phi_eps_second(rnl: RegularizedNonlinearity, v):
    v = _check_v(v)
    n, e = rnl.n, rnl.eps
    return -1.0 / (v + e) ** 2 if n == 0 else -n * (n + 1.0) * (v + e) ** (-n - 2.0)


def phi_inverse(nl: Nonlinearity, w):
    w = np.asarray(w, dtype=float)
    if nl.n == 0:
        return np.exp(w)
    if np.any(w >= 0):
        raise OutOfRange("Phi_n takes only negative values")
    return (-w) ** (-1.0 / nl.n)


def phi_eps_inverse(rnl: RegularizedNonlinearity, w):
    """Inverse of Phi_eps on [0, sup Phi_eps)."""
    w = np.asarray(w, dtype=float)
    n, e = rnl.n, rnl.eps
    if n == 0:
        return e * np.expm1(w)
    if np.any(w >= e ** (-n)):
        raise OutOfRange("value outside the range of Phi_eps")
    return e * np.expm1(-np.log1p(-w * e ** n) / n)
