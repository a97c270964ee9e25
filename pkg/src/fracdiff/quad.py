"""Fixed composite Gauss-Legendre rules used for tail and cell integrals."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre_unit(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (t + 1.0), 0.5 * w


@lru_cache(maxsize=64)
def composite_rule(upper: float, panel: float = 0.5, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [0, upper] with equal panels."""
    n_panels = max(1, int(np.ceil(upper / panel)))
    width = upper / n_panels
    u, w = gauss_legendre_unit(order)
    starts = np.arange(n_panels) * width
    nodes = (starts[:, None] + width * u[None, :]).ravel()
    weights = np.tile(width * w, n_panels)
    return nodes, weights


def log_tail_rule(inner_ratio: float, decay_rate: float, digits: float = 38.0,
                  panel: float = 0.5, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Rule in the logarithmic variable tau for integrals of the form
    int_0^inf g(tau) exp(-rate*tau) dtau, where g is roughly flat up to
    tau = log(inner_ratio) and decays at ``decay_rate`` beyond."""
    upper = np.log1p(max(inner_ratio, 0.0)) + digits / max(decay_rate, 1e-3)
    # round up to a panel multiple so the lru cache gets reused
    upper = panel * np.ceil(upper / panel)
    return composite_rule(float(upper), panel, order)
