"""Continuation in eps towards the upper limit solution and the existence/extinction verdict."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import NonConvergent, OrderViolation, TailNotIntegrable
from .evolve import StepperConfig, Trajectory, run, step_times_of
from .frlap import FrLapOperator
from .grid import Field, Grid1D, TailModel, total_mass
from .nonlin import Nonlinearity, RegularizedNonlinearity

DEFAULT_EPS = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7)


class Verdict(str, enum.Enum):
    EXISTS = "EXISTS"
    EXTINCT = "EXTINCT"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class EpsLadder:
    eps_values: list
    trajectories: list
    s: float
    n: float
    u0: Field
    order_violation: float = 0.0
    verdicts: dict = field(default_factory=dict)

    @property
    def times(self) -> list:
        return list(self.trajectories[0].times)

    def common_grid(self, t: float) -> Grid1D:
        grids = [tr.states[tr.index_of(t)].grid for tr in self.trajectories]
        return max(grids, key=lambda g: g.half_width)

    def u_at(self, t: float, grid: Grid1D | None = None) -> list[Field]:
        """u_eps = v_eps + eps for every rung, on a common grid."""
        grid = grid or self.common_grid(t)
        out = []
        for tr in self.trajectories:
            u = tr.u(tr.index_of(t))
            out.append(u if u.grid == grid else u.resample(grid))
        return out

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = []
        for k, tr in enumerate(self.trajectories):
            p = d / f"rung_{k}"
            tr.save(p)
            paths.append(str(p.name))
        manifest = {"s": self.s, "n": self.n, "eps_values": list(self.eps_values),
                    "verdicts": {str(k): v for k, v in self.verdicts.items()},
                    "order_violation": self.order_violation, "trajectories": paths}
        (d / "ladder.json").write_text(json.dumps(manifest, indent=1))


def ordering_violation(ladder: EpsLadder) -> float:
    """Largest relative excess of u_{eps'} over u_eps for eps' < eps over shared times."""
    worst = 0.0
    for t in ladder.times:
        us = ladder.u_at(t)
        scale = max(float(np.max(u.values)) for u in us)
        for big, small in zip(us[:-1], us[1:]):
            worst = max(worst, float(np.max(small.values - big.values)) / scale)
    return worst


def build_ladder(op: FrLapOperator, nl: Nonlinearity, u0: Field, eps_values=DEFAULT_EPS,
                 t_end: float = 1.0, cfg: StepperConfig | None = None, output_times=None,
                 order_tol: float | None = None, progress=None) -> EpsLadder:
    """Run the regularized problems with v(0) = u0 for each eps on one time grid.

    The smallest eps is run first with adaptive steps; its accepted step times
    are replayed by the other rungs so the discrete comparison principle applies.
    """
    cfg = cfg or StepperConfig()
    eps_values = [float(e) for e in eps_values]
    if any(b >= a for a, b in zip(eps_values[:-1], eps_values[1:])):
        raise ValueError("eps values must be strictly decreasing")
    if output_times is None:
        output_times = np.geomspace(t_end / 100.0, t_end, 9)
    output_times = sorted(set(float(t) for t in output_times))
    trajs: dict[float, Trajectory] = {}
    first = eps_values[-1]
    trajs[first] = run(op, RegularizedNonlinearity(nl, first), u0, t_end, cfg, output_times)
    plan = step_times_of(trajs[first])
    for e in eps_values[:-1]:
        trajs[e] = run(op, RegularizedNonlinearity(nl, e), u0, t_end, cfg, output_times,
                       step_times=plan)
        if progress is not None:
            progress(e)
    ladder = EpsLadder(eps_values, [trajs[e] for e in eps_values], op.s, nl.n, u0)
    ladder.order_violation = ordering_violation(ladder)
    tol = 10.0 * cfg.newton_tol if order_tol is None else order_tol
    if ladder.order_violation > tol:
        raise OrderViolation(f"eps ordering broken by {ladder.order_violation:.3e} (tol {tol:.1e})")
    return ladder


def fit_exponent(eps3, norms_diff, p_min: float = 0.1, p_max: float = 2.0) -> float:
    """p with (e2^p - e3^p)/(e1^p - e2^p) = d23/d12, clamped to [p_min, p_max]."""
    e1, e2, e3 = eps3
    d12, d23 = norms_diff
    if d12 <= 0 or not d23 < d12:
        raise NonConvergent("successive rung differences do not decrease")
    r = d23 / d12
    ratio = lambda p: (e2 ** p - e3 ** p) / (e1 ** p - e2 ** p) - r
    lo, hi = 1e-6, 10.0
    if ratio(lo) * ratio(hi) > 0:
        p = p_min if abs(ratio(lo)) < abs(ratio(hi)) else p_max
    else:
        p = brentq(ratio, lo, hi, xtol=1e-12)
    return float(min(max(p, p_min), p_max))


@dataclass
class LimitEstimate:
    field: Field
    exponent: float
    raw_min: float           # most negative extrapolated value before clipping


def extrapolate_details(ladder: EpsLadder, t: float, p_min: float = 0.1,
                        p_max: float = 2.0) -> LimitEstimate:
    if len(ladder.eps_values) < 3:
        raise ValueError("need at least three rungs")
    grid = ladder.common_grid(t)
    us = ladder.u_at(t, grid)
    u1, u2, u3 = (u.values for u in us[-3:])
    e = ladder.eps_values[-3:]
    d12 = float(np.trapezoid(np.abs(u1 - u2), dx=grid.h))
    d23 = float(np.trapezoid(np.abs(u2 - u3), dx=grid.h))
    if d12 == 0 and d23 == 0:
        p = 1.0
        ubar = u3.copy()
    else:
        p = fit_exponent(e, (d12, d23), p_min, p_max)
        factor = e[2] ** p / (e[1] ** p - e[2] ** p)
        ubar = u3 - (u2 - u3) * factor
    raw_min = float(np.min(ubar))
    ubar = np.maximum(ubar, 0.0)
    tail = None
    t3 = us[-1].tail
    if t3 is not None:
        gamma = t3.decay_exponent
        L = grid.L
        amp = (max(ubar[0], 0.0) * L ** gamma, max(ubar[-1], 0.0) * L ** gamma)
        tail = TailModel(amp[0], amp[1], gamma, L)
    return LimitEstimate(Field(grid, ubar, tail), p, raw_min)


def extrapolate_limit(ladder: EpsLadder, t: float, p_min: float = 0.1, p_max: float = 2.0) -> Field:
    """Pointwise u_eps = ubar + a eps^p over the last three rungs, one p per time."""
    return extrapolate_details(ladder, t, p_min, p_max).field


def limit_mass(ubar: Field) -> float:
    """Mass of the extrapolated limit; infinite if its tail is not integrable."""
    try:
        return total_mass(ubar)
    except TailNotIntegrable:
        if ubar.tail.left_amplitude == 0 and ubar.tail.right_amplitude == 0:
            return float(np.trapezoid(ubar.values, dx=ubar.grid.h))
        return float("inf")


def extinction_verdict(ladder: EpsLadder, t: float, threshold: float = 1e-2,
                       mass_fraction: float = 0.95, window: float = 1.0) -> Verdict:
    """EXISTS: limit keeps mass and is positive near the origin.
    EXTINCT: sup of the limit below ``threshold`` times sup u0."""
    if t <= 0:
        raise ValueError("verdict needs t > 0")
    sup0 = float(np.max(ladder.u0.values))
    m0 = total_mass(ladder.u0) if ladder.u0.tail is None or ladder.u0.tail.is_integrable() \
        else float(np.trapezoid(ladder.u0.values, dx=ladder.u0.grid.h))
    try:
        est = extrapolate_details(ladder, t)
    except NonConvergent:
        verdict = Verdict.INCONCLUSIVE
        ladder.verdicts[t] = verdict.value
        return verdict
    ubar = est.field
    x = ubar.grid.x
    central = ubar.values[np.abs(x) <= window]
    mass = limit_mass(ubar)
    if np.isfinite(mass) and mass >= mass_fraction * m0 and central.min() > 0:
        verdict = Verdict.EXISTS
    elif float(np.max(ubar.values)) < threshold * sup0:
        verdict = Verdict.EXTINCT
    else:
        verdict = Verdict.INCONCLUSIVE
    ladder.verdicts[t] = verdict.value
    return verdict
