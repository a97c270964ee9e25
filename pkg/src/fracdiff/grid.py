"""Uniform grids on [-L, L] and nonnegative fields with an analytic far-field tail."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import GridMismatch, TailNotIntegrable
from .quad import log_tail_rule

FLOOR = 1e-300


@dataclass(frozen=True)
class Grid1D:
    half_width: float
    n_points: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError("n_points must be odd and at least 3")

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        i = np.arange(self.n_points)
        x = -self.half_width + i * self.h
        x[(self.n_points - 1) // 2] = 0.0
        return x

    @property
    def center(self) -> int:
        return (self.n_points - 1) // 2

    def scaled(self, factor: float) -> "Grid1D":
        return Grid1D(self.half_width * factor, self.n_points)


@dataclass(frozen=True)
class TailModel:
    """Per-side far-field model used for |x| > activation_radius.

    On side sigma the field is
        offset + A |x|^-gamma / (1 + (|x|/cutoff)^(far_exponent - gamma)) + B log|x|.
    With the default cutoff (infinity) and zero offset/log terms this is the
    plain power tail A |x|^-gamma.  A negative gamma encodes growth.
    """

    left_amplitude: float
    right_amplitude: float
    decay_exponent: float
    activation_radius: float
    offset: tuple[float, float] = (0.0, 0.0)
    log_coefficient: tuple[float, float] = (0.0, 0.0)
    cutoff: tuple[float, float] = (np.inf, np.inf)
    far_exponent: float | None = None

    @property
    def gamma(self) -> float:
        return self.decay_exponent

    def amplitude(self, side: int) -> float:
        return self.left_amplitude if side < 0 else self.right_amplitude

    def _index(self, side: int) -> int:
        return 0 if side < 0 else 1

    def side_value(self, r, side: int):
        """Tail value at distance r = |x| on the given side (-1 left, +1 right)."""
        k = self._index(side)
        r = np.asarray(r, dtype=float)
        A = self.amplitude(side)
        out = self.offset[k] + self.log_coefficient[k] * np.log(r)
        if A != 0.0:
            power = A * r ** (-self.decay_exponent)
            rc = self.cutoff[k]
            if np.isfinite(rc):
                beta = self.far_exponent - self.decay_exponent
                power = power / (1.0 + (r / rc) ** beta)
            out = out + power
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, self.side_value(np.abs(x), -1), self.side_value(np.abs(x), 1))

    def is_integrable(self) -> bool:
        if any(self.offset) or any(self.log_coefficient):
            return False
        finite_cut = all(np.isfinite(c) for c in self.cutoff)
        if finite_cut and self.far_exponent is not None and self.far_exponent > 1:
            return True
        return self.decay_exponent > 1

    def side_mass(self, side: int, start: float) -> float:
        """Integral of the tail over |x| > start on one side."""
        if not self.is_integrable():
            raise TailNotIntegrable("tail must decay faster than |x|^-1")
        A = self.amplitude(side)
        if A == 0.0:
            return 0.0
        k = self._index(side)
        g = self.decay_exponent
        rc = self.cutoff[k]
        if not np.isfinite(rc):
            return A * start ** (1.0 - g) / (g - 1.0)
        return A * blended_tail_integral(start, g, self.far_exponent, rc)

    def mass(self, start: float | None = None) -> float:
        start = self.activation_radius if start is None else start
        return self.side_mass(-1, start) + self.side_mass(1, start)

    def scaled(self, factor: float) -> "TailModel":
        """Tail of factor * field."""
        return replace(self,
                       left_amplitude=factor * self.left_amplitude,
                       right_amplitude=factor * self.right_amplitude,
                       offset=tuple(factor * c for c in self.offset),
                       log_coefficient=tuple(factor * c for c in self.log_coefficient))

    def to_json(self) -> dict:
        return {
            "A_minus": self.left_amplitude,
            "A_plus": self.right_amplitude,
            "gamma": self.decay_exponent,
            "R_t": self.activation_radius,
            "offset": list(self.offset),
            "log_coefficient": list(self.log_coefficient),
            "cutoff": [None if not np.isfinite(c) else c for c in self.cutoff],
            "far_exponent": self.far_exponent,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TailModel":
        cut = d.get("cutoff") or [None, None]
        return cls(
            left_amplitude=float(d["A_minus"]),
            right_amplitude=float(d["A_plus"]),
            decay_exponent=float(d["gamma"]),
            activation_radius=float(d["R_t"]),
            offset=tuple(float(c) for c in d.get("offset", (0.0, 0.0))),
            log_coefficient=tuple(float(c) for c in d.get("log_coefficient", (0.0, 0.0))),
            cutoff=tuple(np.inf if c is None else float(c) for c in cut),
            far_exponent=None if d.get("far_exponent") is None else float(d["far_exponent"]),
        )


def blended_tail_integral(start: float, gamma: float, far_exponent: float, cutoff: float,
                          with_derivative: bool = False):
    """int_start^inf r^-gamma / (1 + (r/cutoff)^beta) dr with beta = far_exponent - gamma.

    With ``with_derivative`` also returns the derivative with respect to cutoff.
    """
    beta = far_exponent - gamma
    ratio = max(cutoff / start, 1.0)
    slow = min(abs(gamma - 1.0) if gamma > 1 else far_exponent - 1.0, far_exponent - 1.0)
    tau, w = log_tail_rule(ratio, max(slow, 0.05))
    r = start * np.exp(tau)
    with np.errstate(over="ignore"):
        q = (r / cutoff) ** beta
    damp = 1.0 / (1.0 + q)
    base = r ** (1.0 - gamma) * w
    val = float(np.sum(base * damp))
    if not with_derivative:
        return val
    # q / (1 + q)^2 written so that q = inf gives 0
    dval = float(np.sum(base * beta * damp * (1.0 - damp) / cutoff))
    return val, dval


@dataclass
class Field:
    grid: Grid1D
    values: np.ndarray
    tail: TailModel | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise GridMismatch("values do not match grid size")

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def validate(self, rel_tol: float = 0.1) -> None:
        """Check nonnegativity and consistency of the tail with the boundary values."""
        if np.any(self.values < 0):
            raise ValueError("field has negative values")
        if self.tail is None:
            return
        L = self.grid.L
        for side, v in ((-1, self.values[0]), (1, self.values[-1])):
            model = float(self.tail.side_value(L, side))
            scale = max(abs(model), abs(v))
            if scale > 0 and abs(v - model) > rel_tol * scale:
                raise ValueError(f"tail inconsistent with boundary value on side {side}: {v} vs {model}")

    def sample(self, x) -> np.ndarray:
        """Piecewise-linear inside the window, tail model (or zero) outside."""
        x = np.asarray(x, dtype=float)
        L = self.grid.L
        inside = np.interp(x, self.grid.x, self.values)
        if self.tail is None:
            outside = np.zeros_like(x)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                outside = self.tail(np.where(np.abs(x) > L, x, 2 * L))
        return np.where(np.abs(x) <= L * (1 + 1e-14), inside, outside)

    def resample(self, grid: Grid1D) -> "Field":
        tail = None
        if self.tail is not None:
            tail = replace(self.tail, activation_radius=grid.L)
        return Field(grid, self.sample(grid.x), tail)

    def with_values(self, values, tail="keep") -> "Field":
        return Field(self.grid, values, self.tail if tail == "keep" else tail)

    # persistence ---------------------------------------------------------
    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = np.column_stack([self.grid.x, self.values])
        np.savetxt(path, data, delimiter=",", header="x,value", comments="", fmt="%.17g")
        meta = {"L": self.grid.L, "n_points": self.grid.n_points,
                "tail": None if self.tail is None else self.tail.to_json()}
        path.with_suffix(".json").write_text(json.dumps(meta, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "Field":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        grid = Grid1D(float(meta["L"]), int(meta["n_points"]))
        tail = None if meta.get("tail") is None else TailModel.from_json(meta["tail"])
        return cls(grid, data[:, 1], tail)


def power_tail(left: float, right: float, gamma: float, L: float) -> TailModel:
    return TailModel(left, right, gamma, L)


def field_from_function(grid: Grid1D, func, tail: TailModel | None = None) -> Field:
    return Field(grid, func(grid.x), tail)


def _trapezoid_cumulative(values: np.ndarray, h: float) -> np.ndarray:
    inc = 0.5 * h * (values[1:] + values[:-1])
    return np.concatenate([[0.0], np.cumsum(inc)])


def total_mass(f: Field) -> float:
    core = float(np.trapezoid(f.values, dx=f.grid.h))
    if f.tail is None:
        return core
    return core + f.tail.mass(f.grid.L)


def cumulative_mass(f: Field) -> np.ndarray:
    V = _trapezoid_cumulative(f.values, f.grid.h)
    if f.tail is not None:
        V = V + f.tail.side_mass(-1, f.grid.L)
    return V


def is_rearranged(f: Field, tol: float = 1e-3) -> bool:
    v = f.values
    scale = tol * max(float(np.max(np.abs(v))), FLOOR)
    if np.any(np.abs(v - v[::-1]) > scale):
        return False
    right = v[f.grid.center:]
    return bool(np.all(np.diff(right) <= scale))
