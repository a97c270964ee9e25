"""Scaling transforms, Barenblatt profiles, the very singular solution and the explicit s = 1/2 solution."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import GridMismatch, NonpositiveProfile, NotConverging, OutOfRange
from .evolve import Trajectory
from .frlap import FrLapOperator, apply, check_order, in_existence_range, vss_constant
from .grid import Field, Grid1D, TailModel, is_rearranged, total_mass
from .nonlin import Nonlinearity


@dataclass(frozen=True)
class ScalingExponents:
    s: float
    n: float

    def __post_init__(self):
        check_order(self.s)
        if self.n < 0:
            raise OutOfRange("n must be nonnegative")
        if abs(2 * self.s - 1 - self.n) < 1e-12:
            raise OutOfRange("alpha is infinite on the line n = 2s - 1")

    @property
    def alpha(self) -> float:
        return 1.0 / (2 * self.s - 1 - self.n)

    @property
    def delta(self) -> float:
        return 2 * self.s * self.alpha

    @property
    def gamma_tail(self) -> float:
        return 2 * self.s / (1 + self.n)

    def alpha_p(self, p: float) -> float:
        """(p - 1) / (p (2s - 1 - n)): the L^p rate consistent with the L^inf one."""
        if p < 1:
            raise OutOfRange("p must be at least 1")
        if math.isinf(p):
            return self.alpha
        return (p - 1) / (p * (2 * self.s - 1 - self.n))

    def alpha_p_alt(self, p: float) -> float:
        """Variant with 2s - 1 + n in the denominator, reported alongside alpha_p."""
        if p < 1:
            raise OutOfRange("p must be at least 1")
        if math.isinf(p):
            return 1.0 / (2 * self.s - 1 + self.n)
        return (p - 1) / (p * (2 * self.s - 1 + self.n))

    def to_json(self) -> dict:
        return {"s": self.s, "n": self.n, "alpha": self.alpha, "delta": self.delta,
                "gamma_tail": self.gamma_tail}


# ---------------------------------------------------------------------------
# scaling


def dilate_tail(tail: TailModel | None, factor: float, new_radius: float) -> TailModel | None:
    """Tail of x -> factor * f(factor * x) when ``tail`` describes f."""
    if tail is None:
        return None
    g = tail.decay_exponent
    A = factor ** (1.0 - g)
    logs = tuple(factor * b for b in tail.log_coefficient)
    offs = tuple(factor * (c + b * math.log(factor))
                 for c, b in zip(tail.offset, tail.log_coefficient))
    return replace(tail,
                   left_amplitude=A * tail.left_amplitude,
                   right_amplitude=A * tail.right_amplitude,
                   activation_radius=new_radius,
                   offset=offs, log_coefficient=logs,
                   cutoff=tuple(c / factor for c in tail.cutoff))


def rescale_T_L(f: Field, L_factor: float, nl: Nonlinearity, s: float) -> tuple[Field, float]:
    """u_L(x) = L u(L x) on the same grid, with the time dilation L^(2s - 1 - n)."""
    if not L_factor > 0:
        raise OutOfRange("L_factor must be positive")
    time_scale = L_factor ** (2 * s - 1 - nl.n)
    if L_factor == 1:
        return Field(f.grid, f.values.copy(), f.tail), time_scale
    values = L_factor * f.sample(L_factor * f.grid.x)
    return Field(f.grid, values, dilate_tail(f.tail, L_factor, f.grid.L)), time_scale


# ---------------------------------------------------------------------------
# profiles


@dataclass
class SelfSimilarProfile:
    xi: np.ndarray
    F: np.ndarray
    mass: float
    c_inf: float
    gamma_fit: float
    exps: ScalingExponents
    tail: TailModel | None = None
    times: list = field(default_factory=list)
    distances: list = field(default_factory=list)   # L1 between consecutive rescaled profiles

    @property
    def grid(self) -> Grid1D:
        return Grid1D(float(self.xi[-1]), len(self.xi))

    @property
    def field(self) -> Field:
        return Field(self.grid, self.F, self.tail)

    def fit_report(self) -> dict:
        s, n = self.exps.s, self.exps.n
        try:
            C = vss_constant(s, n)[1]
        except OutOfRange:
            C = float("nan")
        g = self.exps.gamma_tail
        return {"alpha": self.exps.alpha, "gamma_fit": self.gamma_fit, "gamma_theory": g,
                "c_inf_fit": self.c_inf, "C_theory": C, "mass": self.mass,
                "ratios": {"gamma": self.gamma_fit / g, "c_inf": self.c_inf / C},
                "times": list(self.times), "distances": list(self.distances)}

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        np.savetxt(d / "profile.csv", np.column_stack([self.xi, self.F]), delimiter=",",
                   header="xi,F", comments="", fmt="%.17g")
        report = self.fit_report()
        report["tail"] = None if self.tail is None else self.tail.to_json()
        report["s"], report["n"] = self.exps.s, self.exps.n
        (d / "fit.json").write_text(json.dumps(report, indent=1))

    @classmethod
    def load(cls, directory: str | Path) -> "SelfSimilarProfile":
        d = Path(directory)
        data = np.loadtxt(d / "profile.csv", delimiter=",", skiprows=1, ndmin=2)
        rep = json.loads((d / "fit.json").read_text())
        tail = None if rep.get("tail") is None else TailModel.from_json(rep["tail"])
        return cls(data[:, 0], data[:, 1], rep["mass"], rep["c_inf_fit"], rep["gamma_fit"],
                   ScalingExponents(rep["s"], rep["n"]), tail, rep["times"], rep["distances"])


def fit_power_tail(r: np.ndarray, F: np.ndarray, gamma_ref: float) -> tuple[float, float]:
    """Least squares of log F against log r.

    Returns (decay exponent, c_inf), where c_inf is the fitted line at the
    outer end of the window multiplied by r^gamma_ref.
    """
    ok = F > 0
    r, F = r[ok], F[ok]
    if len(r) < 3:
        raise OutOfRange("tail window has fewer than three positive samples")
    slope, icept = np.polyfit(np.log(r), np.log(F), 1)
    r_end = float(np.max(r))
    c_inf = math.exp(icept + slope * math.log(r_end)) * r_end ** gamma_ref
    return float(-slope), float(c_inf)


def extract_profile(traj: Trajectory, exps: ScalingExponents, times, xi_max: float = 20.0,
                    n_xi: int = 801) -> SelfSimilarProfile:
    """Rescale snapshots to F_t(xi) = t^alpha u(xi t^alpha, t) on one xi grid.

    Snapshots are the stored states v, whose tails stay integrable; the eps
    shift is negligible on the profile scale for the rungs used here.
    """
    times = sorted(float(t) for t in times)
    if len(times) < 2:
        raise ValueError("need at least two snapshot times")
    a = exps.alpha
    xi_grid = Grid1D(xi_max, n_xi)
    profiles = []
    for t in times:
        u = traj.states[traj.index_of(t)]
        profiles.append(t ** a * u.sample(xi_grid.x * t ** a))
    dist = [float(np.trapezoid(np.abs(p - q), dx=xi_grid.h))
            for p, q in zip(profiles[:-1], profiles[1:])]
    if len(dist) >= 2 and all(d2 > d1 for d1, d2 in zip(dist[:-1], dist[1:])):
        raise NotConverging("rescaled profiles drift apart at every step")

    # tail fit on the latest snapshot over the last decade of its window
    t = times[-1]
    snap = traj.states[traj.index_of(t)]
    xi_nodes = snap.grid.x / t ** a
    F_nodes = t ** a * snap.values
    r_end = snap.grid.L / t ** a
    sym = 0.5 * (F_nodes + F_nodes[::-1])
    win = (xi_nodes >= r_end / 10) & (xi_nodes <= r_end)
    gamma_fit, c_inf = fit_power_tail(xi_nodes[win], sym[win], exps.gamma_tail)

    F = 0.5 * (profiles[-1] + profiles[-1][::-1])
    g = exps.gamma_tail
    A = float(t ** a * snap.sample(np.array([xi_max * t ** a]))[0]) * xi_max ** g
    tail = TailModel(A, A, g, xi_max)
    return SelfSimilarProfile(xi_grid.x, F, total_mass(snap), c_inf, gamma_fit, exps, tail,
                              times, dist)


def profile_mass(P: SelfSimilarProfile) -> float:
    return total_mass(P.field)


def is_profile_rearranged(P: SelfSimilarProfile, tol: float = 1e-3) -> bool:
    return is_rearranged(P.field, tol)


def mass_rescale_profile(P: SelfSimilarProfile, M: float) -> SelfSimilarProfile:
    """F_M(xi) = mu^(2s alpha) F(mu^((1+n) alpha) xi) with mu = M / mass(F)."""
    if not M > 0:
        raise OutOfRange("mass must be positive")
    mu = M / P.mass
    e = P.exps
    amp = mu ** (2 * e.s * e.alpha)
    stretch = mu ** ((1 + e.n) * e.alpha)
    if mu == 1:
        return replace(P, F=P.F.copy())
    values = amp * P.field.sample(stretch * P.xi)
    tail = None
    if P.tail is not None:
        tail = dilate_tail(P.tail, stretch, P.tail.activation_radius).scaled(amp / stretch)
    return replace(P, F=values, mass=M, tail=tail)


def _phi_tail(tail: TailModel | None, n: float) -> TailModel | None:
    if tail is None:
        return None
    if tail.left_amplitude <= 0 or tail.right_amplitude <= 0 or np.isfinite(tail.cutoff).any():
        raise NonpositiveProfile("profile tail must be a positive pure power")
    g = tail.decay_exponent
    if n == 0:
        return TailModel(0.0, 0.0, g, tail.activation_radius,
                         offset=(math.log(tail.left_amplitude), math.log(tail.right_amplitude)),
                         log_coefficient=(-g, -g))
    return TailModel(-tail.left_amplitude ** (-n), -tail.right_amplitude ** (-n), -g * n,
                     tail.activation_radius)


def profile_equation_residual(P: SelfSimilarProfile, op: FrLapOperator, nl: Nonlinearity,
                              exps: ScalingExponents, lower: float = 0.0,
                              upper: float | None = None) -> float:
    """Sup of int_lower^x (-Delta)^s Phi(F) - alpha (x F(x) - lower F(lower)) over
    [lower, upper], relative to the sup of alpha x F."""
    f = P.field
    if op.grid != f.grid:
        raise GridMismatch("operator grid differs from the profile grid")
    if np.any(f.values <= 0):
        raise NonpositiveProfile("profile must be positive everywhere")
    n = nl.n
    phiF = np.log(f.values) if n == 0 else -(f.values ** (-n))
    lap = apply(op, Field(f.grid, phiF, _phi_tail(f.tail, n))).values
    x = f.grid.x
    upper = f.grid.L if upper is None else upper
    sel = (x >= lower - 1e-12) & (x <= upper + 1e-12)
    xs, gs, Fs = x[sel], lap[sel], f.values[sel]
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(xs) * (gs[1:] + gs[:-1]))])
    flux = exps.alpha * xs * Fs
    G = integral - (flux - flux[0])
    return float(np.max(np.abs(G)) / np.max(np.abs(flux)))


def vss_field(exps: ScalingExponents, t: float, grid: Grid1D) -> Field:
    """C t^(1/(1+n)) |x|^(-2s/(1+n)); the origin node takes its neighbours' value."""
    s, n = exps.s, exps.n
    if not in_existence_range(s, n):
        raise OutOfRange(f"(s, n) = ({s}, {n}) is outside the existence range")
    if not t > 0:
        raise OutOfRange("t must be positive")
    C = vss_constant(s, n)[1]
    g = exps.gamma_tail
    amp = C * t ** (1.0 / (1.0 + n))
    x = grid.x
    vals = np.empty_like(x)
    nz = x != 0
    vals[nz] = amp * np.abs(x[nz]) ** (-g)
    c = grid.center
    vals[c] = 0.5 * (vals[c - 1] + vals[c + 1])
    return Field(grid, vals, TailModel(amp, amp, g, grid.L))


def vss_profile(exps: ScalingExponents, grid: Grid1D) -> SelfSimilarProfile:
    """The VSS at t = 1 viewed as a (non-integrable) profile."""
    f = vss_field(exps, 1.0, grid)
    C = vss_constant(exps.s, exps.n)[1]
    return SelfSimilarProfile(grid.x, f.values, float("inf"), C, exps.gamma_tail, exps, f.tail)


def explicit_log_half_solution(lam: float, T: float, grid: Grid1D, t: float) -> Field:
    """2 lam (T - t) / (lam^2 + x^2), identically zero from t = T on."""
    if not lam > 0 or not T > 0:
        raise OutOfRange("lambda and T must be positive")
    if t < 0:
        raise OutOfRange("t must be nonnegative")
    a = 2.0 * lam * max(T - t, 0.0)
    vals = a / (lam ** 2 + grid.x ** 2)
    return Field(grid, vals, TailModel(a, a, 2.0, grid.L))


def explicit_log_half_rate(lam: float, grid: Grid1D) -> Field:
    """Time derivative of the explicit solution for t < T."""
    vals = -2.0 * lam / (lam ** 2 + grid.x ** 2)
    return Field(grid, vals, TailModel(-2.0 * lam, -2.0 * lam, 2.0, grid.L))


# ---------------------------------------------------------------------------
# long runs from concentrated data


def bump_values(x: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.maximum(1.0 - ((x - center) / width) ** 2, 0.0) ** 2


def dirac_like_data(mass: float = 1.0, width: float = 0.05, n_points: int = 1025,
                    center: float = 0.0, window: float = 16.0) -> Field:
    """Narrow bump of the given mass on a window of half width ``window * width``."""
    grid = Grid1D(window * width + abs(center), n_points)
    b = bump_values(grid.x, center, width)
    return Field(grid, mass * b / np.trapezoid(b, dx=grid.h))


def dirac_like_run(s: float, n: float, data: Field | None = None, t_end: float = 20.0,
                   eps: float = 1e-15, max_dt_fraction: float = 0.01,
                   expand_ratio: float = 1e-2, output_times=None, progress=None) -> Trajectory:
    """Run from concentrated data with window doubling, for self-similar asymptotics.

    A single rung with eps far below the boundary values stands in for the
    limit solution; the stepper keeps dt <= max_dt_fraction * t.
    """
    from .evolve import StepperConfig, cached_operator, run
    from .nonlin import RegularizedNonlinearity

    data = data or dirac_like_data()
    if output_times is None:
        output_times = np.geomspace(t_end / 400.0, t_end, 25)
    cfg = StepperConfig(max_dt_fraction=max_dt_fraction, expand_ratio=expand_ratio)
    op = cached_operator(data.grid, s)
    return run(op, RegularizedNonlinearity(Nonlinearity(n), eps), data, t_end, cfg,
               output_times=output_times, progress=progress)
