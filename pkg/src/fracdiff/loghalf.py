"""The case s = 1/2, Phi = log u, where an explicit solution vanishes in finite time."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import OutOfRange
from .evolve import StepperConfig
from .frlap import apply, build_operator
from .grid import Field, Grid1D, TailModel
from .limits import DEFAULT_EPS, EpsLadder, build_ladder, extrapolate_limit
from .nonlin import Nonlinearity
from .selfsim import explicit_log_half_rate, explicit_log_half_solution

S_HALF = 0.5


@dataclass
class LogHalfReport:
    lam: float
    T_exact: float
    T_observed: float | None
    mass_decay_slope: float
    exact_slope: float = -2 * math.pi
    times: list = field(default_factory=list)
    masses: list = field(default_factory=list)          # window mass of the extrapolated limit
    sups: list = field(default_factory=list)
    l1_error_half: float | None = None                  # vs the explicit solution at T/2

    def __post_init__(self):
        if not self.T_exact > 0:
            raise OutOfRange("extinction time must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))


def explicit_pde_defect(lam: float, T: float, grid: Grid1D, t: float) -> float:
    """sup |U_t + (-Delta)^(1/2) log U| / sup |U_t| for the explicit solution."""
    U = explicit_log_half_solution(lam, T, grid, t)
    a = 2.0 * lam * (T - t)
    # log U = log a - log(lam^2 + x^2): a constant plus a log tail of slope -2
    log_tail = TailModel(0.0, 0.0, 2.0, grid.L, offset=(math.log(a), math.log(a)),
                         log_coefficient=(-2.0, -2.0))
    lap = apply(build_operator(grid, S_HALF), Field(grid, np.log(U.values), log_tail)).values
    # the tail drops log(1 + lam^2/r^2), which is O(lam^2 / L^2)
    rate = explicit_log_half_rate(lam, grid).values
    return float(np.max(np.abs(rate + lap)) / np.max(np.abs(rate)))


def run_loghalf(lam: float = 1.0, T: float = 1.0, grid: Grid1D | None = None,
                cfg: StepperConfig | None = None, eps_values=DEFAULT_EPS,
                output_times=None, threshold: float = 1e-2,
                progress=None) -> tuple[EpsLadder, LogHalfReport]:
    """Ladder from U(x, 0) = 2 lam T / (lam^2 + x^2) up to t = T.

    The mass of the extrapolated limit is measured inside the grid window;
    its slope is fitted on [0.1 T, 0.6 T].
    """
    if not lam > 0 or not T > 0:
        raise OutOfRange("lambda and T must be positive")
    grid = grid or Grid1D(50.0, 1025)
    if output_times is None:
        output_times = T * np.arange(1, 21) / 20.0
    output_times = sorted({round(float(t), 12) for t in output_times} | {0.5 * T})
    u0 = explicit_log_half_solution(lam, T, grid, 0.0)
    op = build_operator(grid, S_HALF)
    ladder = build_ladder(op, Nonlinearity(0.0), u0, eps_values, T, cfg, output_times,
                          progress=progress)
    sup0 = float(np.max(u0.values))
    times, masses, sups = [], [], []
    T_obs = None
    l1_half = None
    for t in ladder.times:
        if t <= 0:
            continue
        ubar = extrapolate_limit(ladder, t)
        m = float(np.trapezoid(ubar.values, dx=ubar.grid.h))
        times.append(t)
        masses.append(m)
        sups.append(float(np.max(ubar.values)))
        if T_obs is None and sups[-1] < threshold * sup0:
            T_obs = t
        if abs(t - 0.5 * T) < 1e-12 * T:
            exact = explicit_log_half_solution(lam, T, ubar.grid, t)
            l1_half = float(np.trapezoid(np.abs(ubar.values - exact.values), dx=ubar.grid.h)
                            / np.trapezoid(exact.values, dx=ubar.grid.h))
    tt, mm = np.array(times), np.array(masses)
    sel = (tt >= 0.1 * T - 1e-12) & (tt <= 0.6 * T + 1e-12)
    slope = float(np.polyfit(tt[sel], mm[sel], 1)[0]) if sel.sum() >= 2 else float("nan")
    M0 = 2 * math.pi * T                      # int 2 lam T / (lam^2 + x^2) dx
    report = LogHalfReport(lam, M0 / (2 * math.pi), T_obs, slope, times=times, masses=masses,
                           sups=sups, l1_error_half=l1_half)
    return ladder, report
