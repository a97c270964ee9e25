"""Quadrature discretization of the 1D fractional Laplacian and its closed-form constants.

The operator is

    (-Delta)^s f(x) = c(1,s) PV int (f(x) - f(y)) |x - y|^(-1-2s) dy.

Inside [-L, L] the field is replaced by its piecewise-linear interpolant except
on the two cells adjacent to the evaluation node, where a quadratic model gives
the h^(-2s) near-field term.  A per-row correction makes the rule exact for
quadratics.  Beyond |y| = L the integral uses the field's TailModel, evaluated
by a composite Gauss-Legendre rule in the variable tau = log(|y - x| / d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, OutOfRange, PoleError
from .grid import Field, Grid1D, TailModel
from .quad import gauss_legendre_unit, log_tail_rule


# ---------------------------------------------------------------------------
# special functions and constants


def signed_lgamma(x: float) -> tuple[float, float]:
    """Return (log|Gamma(x)|, sign Gamma(x)); reflection for negative arguments."""
    if x <= 0 and float(x).is_integer():
        raise PoleError(f"Gamma has a pole at {x}")
    if x > 0:
        return math.lgamma(x), 1.0
    # Gamma(x) Gamma(1 - x) = pi / sin(pi x), with 1 - x > 1
    sin_term = math.sin(math.pi * x)
    if sin_term == 0.0:
        raise PoleError(f"Gamma has a pole at {x}")
    log_abs = math.log(math.pi) - math.log(abs(sin_term)) - math.lgamma(1.0 - x)
    return log_abs, math.copysign(1.0, sin_term)


def check_order(s: float) -> float:
    s = float(s)
    if not 0.0 < s < 1.0:
        raise OutOfRange(f"fractional order must lie in (0, 1), got {s}")
    return s


def normalization(s: float) -> float:
    """c(1,s) = 4^s Gamma(1/2 + s) / (sqrt(pi) |Gamma(-s)|), symbol |xi|^(2s)."""
    s = check_order(s)
    lg_num = s * math.log(4.0) + math.lgamma(0.5 + s)
    lg_den, _ = signed_lgamma(-s)
    return math.exp(lg_num - 0.5 * math.log(math.pi) - lg_den)


def power_constant(alpha: float, s: float) -> float:
    """k(alpha, s) with (-Delta)^s |x|^alpha = k(alpha, s) |x|^(alpha - 2s)."""
    s = check_order(s)
    if not alpha > 0 or alpha == 2 * s:
        raise OutOfRange("power_constant needs alpha > 0 and alpha != 2s")
    args_num = ((1.0 + alpha) / 2.0, (2.0 * s - alpha) / 2.0)
    args_den = ((1.0 + alpha - 2.0 * s) / 2.0, -alpha / 2.0)
    log_val = 2.0 * s * math.log(2.0)
    sign = 1.0
    for a in args_num:
        lg, sg = signed_lgamma(a)
        log_val += lg
        sign *= sg
    for a in args_den:
        lg, sg = signed_lgamma(a)
        log_val -= lg
        sign *= sg
    return sign * math.exp(log_val)


def log_constant(s: float) -> float:
    """c(s) = lim k(alpha,s)/alpha = 2^(2s-2) (2s-1) sqrt(pi) Gamma(s) / Gamma((3-2s)/2)."""
    s = check_order(s)
    return (2.0 ** (2 * s - 2) * (2 * s - 1) * math.sqrt(math.pi)
            * math.gamma(s) / math.gamma((3.0 - 2.0 * s) / 2.0))


def in_existence_range(s: float, n: float) -> bool:
    return 0.5 < s < 1.0 and 0.0 <= n < 2.0 * s - 1.0


def vss_constant(s: float, n: float) -> tuple[float, float]:
    """(K, C) of the separate-variables solution C t^(1/(1+n)) |x|^(-2s/(1+n)).

    For n = 0 the profile is |x|^(-2s), so (-Delta)^s log F = -2s c(s) |x|^(-2s)
    and K = C = 2s c(s).
    """
    s = check_order(s)
    if not in_existence_range(s, n):
        raise OutOfRange(f"(s, n) = ({s}, {n}) is outside the existence range "
                         "s > 1/2, 0 <= n < 2s - 1")
    if n == 0:
        K = 2.0 * s * log_constant(s)
        return K, K
    K = power_constant(2.0 * s * n / (1.0 + n), s)
    C = ((1.0 + n) * K) ** (1.0 / (1.0 + n))
    return K, C


# ---------------------------------------------------------------------------
# operator


def _cell_moments(k: np.ndarray, s: float, order: int = 24):
    """Dimensionless a_k, b_k, e_k = int_0^1 {1-u, u, u(1-u)} (k+u)^(-1-2s) du."""
    u, w = gauss_legendre_unit(order)
    ker = (k[:, None] + u[None, :]) ** (-1.0 - 2.0 * s)
    a = ker @ (w * (1.0 - u))
    b = ker @ (w * u)
    e = ker @ (w * u * (1.0 - u))
    return a, b, e


@dataclass
class FrLapOperator:
    grid: Grid1D
    s: float
    weights: np.ndarray
    diag_correction: np.ndarray
    normalization: float
    hat_weights: np.ndarray = field(repr=False)   # pure kernel-hat weights by distance
    half_hat: np.ndarray = field(repr=False)      # b_k, weight of the far end of a cell
    kernel_out: np.ndarray = field(repr=False)    # (2, N): int over |y| > L, left/right

    @property
    def N(self) -> int:
        return self.grid.n_points

    @property
    def matrix(self) -> np.ndarray:
        """Dense matrix of the interior-row action with zero tail (for inspection)."""
        W = self.weights
        out = -W.copy()
        out[np.diag_indices_from(out)] = W.sum(axis=1) + self.kernel_out.sum(axis=0)
        return self.normalization * out


def build_operator(grid: Grid1D, s: float) -> FrLapOperator:
    s = check_order(s)
    N, h = grid.n_points, grid.h
    scale = h ** (-2.0 * s)
    k = np.arange(1, N + 1, dtype=float)
    a, b, e = _cell_moments(k, s)
    a, b = scale * a, scale * b
    # P[m] = e_1 + ... + e_m
    P = np.concatenate([[0.0], np.cumsum(e)])

    # hat weight at distance d (d = 1..N-1): cell d gives a_d, cell d-1 gives b_(d-1),
    # cell 0 is near field
    hat = np.zeros(N)
    hat[1:] = a[: N - 1]
    hat[2:] += b[: N - 2]
    half_hat = np.zeros(N)
    half_hat[2:] = b[: N - 2]          # half_hat[d] = b_(d-1)

    idx = np.arange(N)
    dist = np.abs(idx[:, None] - idx[None, :])
    W = hat[dist]
    boundary = np.zeros(N, dtype=bool)
    boundary[[0, N - 1]] = True
    one_boundary = boundary[:, None] ^ boundary[None, :]
    W[one_boundary] = half_hat[dist[one_boundary]]
    W[0, N - 1] = W[N - 1, 0] = half_hat[N - 1]
    np.fill_diagonal(W, 0.0)

    # near field: quadratic model on [x_i - h, x_i + h] plus quadratic-exactness term
    n_right = np.maximum(N - 2 - idx, 0)
    n_left = np.maximum(idx - 1, 0)
    E = P[n_right] + P[n_left]
    D = scale * (1.0 / (2.0 - 2.0 * s) - 0.5 * E)
    pair = 0.5 * (D[:-1] + D[1:])
    W[idx[:-1], idx[1:]] += pair
    W[idx[1:], idx[:-1]] += pair

    x = grid.x
    L = grid.L
    kernel_out = np.empty((2, N))
    with np.errstate(divide="ignore"):
        kernel_out[0] = (L + x) ** (-2.0 * s) / (2.0 * s)
        kernel_out[1] = (L - x) ** (-2.0 * s) / (2.0 * s)
    kernel_out[0, 0] = np.inf
    kernel_out[1, -1] = np.inf
    return FrLapOperator(grid, s, W, D, normalization(s), hat, half_hat, kernel_out)


def _tail_decay_rate(s: float, tail: TailModel | None) -> float:
    rate = 2.0 * s
    if tail is not None and (tail.left_amplitude or tail.right_amplitude):
        rate = min(rate, 2.0 * s + tail.decay_exponent)
    if rate <= 0:
        raise OutOfRange("tail grows too fast for the operator to be defined")
    return rate


def tail_kernel_integral(op: FrLapOperator, func, side: int, rows: np.ndarray,
                         start: np.ndarray | None = None, decay_rate: float | None = None,
                         chunk: int = 512) -> np.ndarray:
    """int over the half-line beyond ``start`` (default L) on ``side`` of
    func(|y|) |x_i - y|^(-1-2s) dy for each row i.

    ``func`` maps an array of radii |y| > L to tail values.
    """
    s, L = op.s, op.grid.L
    x = op.grid.x[rows]
    start = np.full(len(rows), L) if start is None else np.asarray(start, dtype=float)
    d = start - side * x            # distance from x_i to the start of the region
    rate = 2.0 * s if decay_rate is None else decay_rate
    tau, w = log_tail_rule(float(np.max(start) / np.min(d)) + 1.0, rate)
    growth = np.exp(tau)
    damp = w * np.exp(-2.0 * s * tau)
    out = np.empty(len(rows))
    for lo in range(0, len(rows), chunk):
        sl = slice(lo, lo + chunk)
        r = side * x[sl, None] + d[sl, None] * growth[None, :]
        out[sl] = d[sl] ** (-2.0 * s) * (func(r) @ damp)
    return out


def apply(op: FrLapOperator, f: Field) -> Field:
    """(-Delta)^s f at every node; boundary nodes use a tail ghost value."""
    if f.grid != op.grid:
        raise GridMismatch("field and operator grids differ")
    N, h, L, s = op.N, op.grid.h, op.grid.L, op.s
    v = f.values
    W = op.weights
    tail = f.tail
    interior = np.arange(1, N - 1)
    out = np.empty(N)

    Wi = W[interior]
    acc = Wi.sum(axis=1) * v[interior] - Wi @ v
    acc += v[interior] * (op.kernel_out[0, interior] + op.kernel_out[1, interior])
    if tail is not None:
        rate = _tail_decay_rate(s, tail)
        for side in (-1, 1):
            acc -= tail_kernel_integral(op, lambda r, sd=side: tail.side_value(r, sd),
                                        side, interior, decay_rate=rate)
    out[interior] = acc

    # boundary rows: ghost node at distance h beyond L taken from the tail
    hat, half_hat, D = op.hat_weights, op.half_hat, op.diag_correction
    d = np.arange(1, N - 1)
    for b, side in ((0, -1), (N - 1, 1)):
        others = b - side * d                    # nodes at distance d inward
        far = b - side * (N - 1)
        ghost = float(tail.side_value(L + h, side)) if tail is not None else 0.0
        val = np.sum(hat[d] * (v[b] - v[others]))
        val += half_hat[N - 1] * (v[b] - v[far])
        val += D[b] * ((v[b] - v[b - side]) + (v[b] - ghost))
        # region beyond the opposite boundary and beyond the ghost node
        val += v[b] * ((2 * L) ** (-2 * s) + h ** (-2 * s)) / (2 * s)
        if tail is not None:
            rate = _tail_decay_rate(s, tail)
            rows = np.array([b])
            val -= tail_kernel_integral(op, lambda r: tail.side_value(r, -side), -side, rows,
                                        decay_rate=rate)[0]
            val -= tail_kernel_integral(op, lambda r: tail.side_value(r, side), side, rows,
                                        start=np.array([L + h]), decay_rate=rate)[0]
        out[b] = val
    return Field(op.grid, op.normalization * out, None)


def apply_values(op: FrLapOperator, values: np.ndarray, tail: TailModel | None = None) -> np.ndarray:
    return apply(op, Field(op.grid, values, tail)).values
