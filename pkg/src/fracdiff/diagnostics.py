"""Numerical checks of comparison principles, scaling laws and the very weak formulation."""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (MassMismatch, NotRearranged, PreconditionFailed, SupportViolation,
                     WindowTooShort)
from .evolve import Trajectory, benilan_crandall_defect, cached_operator
from .frlap import apply, normalization, vss_constant
from .grid import FLOOR, Field, Grid1D, cumulative_mass, is_rearranged, total_mass
from .nonlin import Nonlinearity
from .quad import gauss_legendre_unit, log_tail_rule
from .selfsim import ScalingExponents, SelfSimilarProfile, mass_rescale_profile

DEFAULT_TOL = 1e-3


class Relation(str, enum.Enum):
    CONCENTRATION = "CONCENTRATION"
    SHIFT = "SHIFT"
    POINTWISE = "POINTWISE"
    ALEKSANDROV = "ALEKSANDROV"
    CONTRACTION = "CONTRACTION"
    BENILAN_CRANDALL = "BENILAN_CRANDALL"
    TIME_CONTINUITY = "TIME_CONTINUITY"


@dataclass
class ComparisonReport:
    relation: Relation
    max_violation: float
    tolerance: float
    location: float | None = None     # x (or t) where the largest defect occurs
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_json(self) -> dict:
        return {"relation": self.relation.value, "max_violation": self.max_violation,
                "tolerance": self.tolerance, "verdict": self.verdict,
                "location": self.location, "details": self.details}


@dataclass
class ExponentFit:
    fitted_exponent: float
    fitted_prefactor: float
    r_squared: float
    window: tuple[float, float]

    def to_json(self) -> dict:
        return asdict(self)


def loglog_fit(t: np.ndarray, y: np.ndarray) -> ExponentFit:
    """Least-squares fit y = A t^p in log-log coordinates."""
    t, y = np.asarray(t, float), np.asarray(y, float)
    lt, ly = np.log(t), np.log(y)
    p, c = np.polyfit(lt, ly, 1)
    resid = ly - (p * lt + c)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(p), float(math.exp(c)), max(0.0, r2), (float(t[0]), float(t[-1])))


def _common(f: Field, g: Field) -> tuple[Field, Field]:
    if f.grid == g.grid:
        return f, g
    grid = f.grid if f.grid.L >= g.grid.L else g.grid
    return (f if f.grid == grid else f.resample(grid)), (g if g.grid == grid else g.resample(grid))


# ---------------------------------------------------------------------------
# comparison of fields


def centered_masses(f: Field) -> np.ndarray:
    """int_{-R}^{R} f for R = 0, h, 2h, ..., L."""
    V = cumulative_mass(Field(f.grid, f.values, None))
    c = f.grid.center
    k = np.arange(0, c + 1)
    return V[c + k] - V[c - k]


def concentration_compare(f: Field, g: Field, tol: float = DEFAULT_TOL) -> ComparisonReport:
    """f is less concentrated than g: int_{B_R} f <= int_{B_R} g for every grid radius."""
    if not (is_rearranged(f) and is_rearranged(g)):
        raise NotRearranged("concentration comparison needs rearranged fields")
    f, g = _common(f, g)
    mf, mg = centered_masses(f), centered_masses(g)
    scale = max(mf[-1], mg[-1], FLOOR)
    defect = (mf - mg) / scale
    k = int(np.argmax(defect))
    return ComparisonReport(Relation.CONCENTRATION, max(0.0, float(defect[k])), tol,
                            float(k * f.grid.h))


def shifting_compare(f: Field, g: Field, tol: float = DEFAULT_TOL) -> ComparisonReport:
    """int_{-inf}^x f <= int_{-inf}^x g at every node (equal masses required)."""
    f, g = _common(f, g)
    Mf, Mg = total_mass(f), total_mass(g)
    scale = max(Mf, Mg, FLOOR)
    if abs(Mf - Mg) > tol * scale:
        raise MassMismatch(f"masses differ: {Mf} vs {Mg}")
    defect = (cumulative_mass(f) - cumulative_mass(g)) / scale
    k = int(np.argmax(defect))
    return ComparisonReport(Relation.SHIFT, max(0.0, float(defect[k])), tol, float(f.grid.x[k]))


def pointwise_compare(f: Field, g: Field, tol: float = DEFAULT_TOL) -> ComparisonReport:
    """f <= g at every node, relative to sup g."""
    f, g = _common(f, g)
    defect = (f.values - g.values) / max(float(np.max(g.values)), FLOOR)
    k = int(np.argmax(defect))
    return ComparisonReport(Relation.POINTWISE, max(0.0, float(defect[k])), tol, float(f.grid.x[k]))


def _reflection_defect(f: Field, a: float) -> tuple[float, float]:
    x = f.grid.x
    right = x > a
    if not np.any(right):
        return 0.0, a
    d = f.values[right] - f.sample(2 * a - x[right])
    k = int(np.argmax(d))
    return float(d[k]), float(x[right][k])


def aleksandrov_check(traj: Trajectory, a: float, tol: float = DEFAULT_TOL) -> ComparisonReport:
    """u(x, t) <= u(2a - x, t) for x > a at every recorded time."""
    u0 = traj.states[0]
    d0, _ = _reflection_defect(u0, a)
    scale0 = max(float(np.max(u0.values)), FLOOR)
    if d0 > 1e-12 * scale0:
        raise PreconditionFailed("initial data is not dominated by its reflection about a")
    worst, where = 0.0, None
    for t, f in zip(traj.times, traj.states):
        d, x = _reflection_defect(f, a)
        d /= max(float(np.max(f.values)), FLOOR)
        if d > worst:
            worst, where = d, x
    return ComparisonReport(Relation.ALEKSANDROV, worst, tol, where, {"a": a})


def l1_contraction(traj1: Trajectory, traj2: Trajectory, tol: float = DEFAULT_TOL) -> ComparisonReport:
    """||u1(t) - u2(t)||_1 <= ||u1(0) - u2(0)||_1 at every shared time."""
    base = None
    worst, where = 0.0, None
    for t in traj1.times:
        f, g = _common(traj1.states[traj1.index_of(t)], traj2.states[traj2.index_of(t)])
        d = float(np.trapezoid(np.abs(f.values - g.values), dx=f.grid.h))
        if base is None:
            base = max(d, FLOOR)
            continue
        excess = (d - base) / base
        if excess > worst:
            worst, where = excess, t
    return ComparisonReport(Relation.CONTRACTION, worst, tol, where, {"initial_distance": base})


def benilan_crandall_check(traj: Trajectory, nl: Nonlinearity, t_min: float = 0.0,
                           tol: float = DEFAULT_TOL) -> ComparisonReport:
    """(n+1) t u_t <= u for t >= t_min, relative to the largest recorded sup."""
    defect = benilan_crandall_defect(traj, nl, t_min)
    scale = max(float(np.max(traj.sups())), FLOOR)
    return ComparisonReport(Relation.BENILAN_CRANDALL, max(0.0, defect / scale), tol,
                            details={"t_min": t_min})


def time_continuity_check(traj: Trajectory, nl: Nonlinearity, t_min: float,
                          tol: float = DEFAULT_TOL) -> ComparisonReport:
    """||u(t+h) - u(t)||_1 <= 2 h M / ((n+1) t), which follows from the
    Benilan-Crandall bound and conservation of mass."""
    worst, where = 0.0, None
    times = traj.times
    for k in range(len(times) - 1):
        t, t2 = times[k], times[k + 1]
        if t < t_min:
            continue
        f, g = _common(traj.states[k], traj.states[k + 1])
        d = float(np.trapezoid(np.abs(g.values - f.values), dx=f.grid.h))
        M = total_mass(traj.states[k])
        bound = 2.0 * (t2 - t) * M / ((nl.n + 1.0) * t)
        excess = (d - bound) / max(M, FLOOR)
        if excess > worst:
            worst, where = excess, t
    return ComparisonReport(Relation.TIME_CONTINUITY, worst, tol, where)


# ---------------------------------------------------------------------------
# scaling laws


def smoothing_fit(traj: Trajectory, exps: ScalingExponents, t_min: float | None = None,
                  t_max: float | None = None, min_decades: float = 1.5) -> ExponentFit:
    """Fit sup u(t) ~ A t^p over the recorded times in [t_min, t_max]."""
    t = np.asarray(traj.times)
    sups = traj.sups()
    sel = t > 0
    if t_min is not None:
        sel &= t >= t_min * (1 - 1e-12)
    if t_max is not None:
        sel &= t <= t_max * (1 + 1e-12)
    if sel.sum() < 3 or math.log10(t[sel][-1] / t[sel][0]) < min_decades:
        raise WindowTooShort(f"fit window must span {min_decades} decades with three samples")
    return loglog_fit(t[sel], sups[sel])


def self_similar_field(P: SelfSimilarProfile, t: float, grid: Grid1D) -> np.ndarray:
    """U(x, t) = t^-alpha F(x t^-alpha) sampled on the grid."""
    a = P.exps.alpha
    return t ** (-a) * P.field.sample(grid.x * t ** (-a))


def distance_series(traj: Trajectory, P: SelfSimilarProfile, times, p: float = 1.0) -> np.ndarray:
    """||u(t) - U_M(t)||_p with U_M the profile rescaled to the trajectory mass."""
    M = total_mass(traj.states[0])
    PM = mass_rescale_profile(P, M) if abs(M - P.mass) > 1e-12 * M else P
    out = []
    for t in times:
        f = traj.states[traj.index_of(t)]
        diff = np.abs(f.values - self_similar_field(PM, t, f.grid))
        if math.isinf(p):
            out.append(float(np.max(diff)))
        else:
            out.append(float(np.trapezoid(diff ** p, dx=f.grid.h) ** (1.0 / p)))
    return np.array(out)


@dataclass
class LpRate:
    p: float
    times: list
    norms: list
    fit: ExponentFit | None
    alpha_p: float
    alpha_p_alt: float

    def to_json(self) -> dict:
        return {"p": self.p, "times": self.times, "norms": self.norms,
                "fit": None if self.fit is None else self.fit.to_json(),
                "alpha_p": self.alpha_p, "alpha_p_alt": self.alpha_p_alt}


def lp_convergence_rates(traj: Trajectory, P: SelfSimilarProfile, p_values, times=None) -> list[LpRate]:
    """Decay of ||u(t) - U_M(t)||_p, fitted in log-log against t and reported
    next to both candidate rates alpha_p."""
    times = [t for t in (traj.times if times is None else times) if t > 0]
    out = []
    for p in p_values:
        norms = distance_series(traj, P, times, p)
        fit = None
        pos = norms > 0
        if pos.sum() >= 3:
            fit = loglog_fit(np.asarray(times)[pos], norms[pos])
        out.append(LpRate(float(p), list(times), norms.tolist(), fit,
                          P.exps.alpha_p(p), P.exps.alpha_p_alt(p)))
    return out


@dataclass
class LowerBound:
    holds: bool
    constant: float          # min of u |x|^(2s/(1+n)) on the probed range
    reference: float         # C(n,s) t^(1/(1+n))

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        return asdict(self)


def lower_bound_check(f: Field, t: float, exps: ScalingExponents, support_radius: float,
                      floor: float = 1e-8) -> LowerBound:
    """u(x, t) |x|^(2s/(1+n)) stays above a positive constant for |x| in [2R, L]."""
    x = np.abs(f.grid.x)
    sel = (x >= 2 * support_radius) & (x <= f.grid.L)
    if not np.any(sel):
        raise WindowTooShort("no nodes between 2R and L")
    ratio = f.values[sel] * x[sel] ** exps.gamma_tail
    c = float(np.min(ratio))
    ref = vss_constant(exps.s, exps.n)[1] * t ** (1.0 / (1.0 + exps.n))
    return LowerBound(c > floor * ref, c, ref)


# ---------------------------------------------------------------------------
# very weak formulation


def smooth_bump(z):
    """exp(1 - 1/(1 - z^2)) on |z| < 1, zero outside; equals 1 at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
    return out


def smooth_bump_prime(z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    zi = z[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - zi ** 2)) * (-2.0 * zi / (1.0 - zi ** 2) ** 2)
    return out


@dataclass(frozen=True)
class SpaceTimeBump:
    """zeta(x, t) = bump((x - center)/radius) * bump((t - t_mid)/t_half)."""

    center: float
    radius: float
    t_start: float
    t_end: float

    @property
    def t_mid(self) -> float:
        return 0.5 * (self.t_start + self.t_end)

    @property
    def t_half(self) -> float:
        return 0.5 * (self.t_end - self.t_start)

    def space(self, x):
        return smooth_bump((np.asarray(x) - self.center) / self.radius)

    def time(self, t):
        return float(smooth_bump((t - self.t_mid) / self.t_half))

    def time_prime(self, t):
        return float(smooth_bump_prime((t - self.t_mid) / self.t_half)) / self.t_half


def _outer_kernel(zeta: SpaceTimeBump, s: float, r: np.ndarray, side: int) -> np.ndarray:
    """(-Delta)^s of the space factor at points side*r outside its support."""
    u, w = gauss_legendre_unit(48)
    y = zeta.center - zeta.radius + 2 * zeta.radius * u
    wy = 2 * zeta.radius * w * zeta.space(y)
    dist = np.abs(side * r[..., None] - y)
    return -normalization(s) * (dist ** (-1.0 - 2.0 * s) @ wy)


def very_weak_residual(traj: Trajectory, nl: Nonlinearity, zeta: SpaceTimeBump) -> float:
    """|int int u zeta_t - int int Phi(u) (-Delta)^s zeta| / |int int Phi(u) (-Delta)^s zeta|.

    Time integrals use the trapezoid rule over the recorded times; the
    region beyond the window is handled with the trajectory's tail models.
    """
    times = np.asarray(traj.times)
    if zeta.t_start < times[0] or zeta.t_end > times[-1]:
        raise SupportViolation("test function must vanish outside the recorded time span")
    s, n = traj.s, nl.n
    lhs, rhs = [], []
    for k, t in enumerate(times):
        u = traj.u(k)
        g = u.grid
        if abs(zeta.center) + zeta.radius >= g.L:
            raise SupportViolation("test function support leaves the grid window")
        psi, dpsi = zeta.time(t), zeta.time_prime(t)
        if psi == 0.0 and dpsi == 0.0:
            lhs.append(0.0)
            rhs.append(0.0)
            continue
        space = zeta.space(g.x)
        lap = apply(cached_operator(g, s), Field(g, space, None)).values
        phi_u = np.log(np.maximum(u.values, FLOOR)) if n == 0 else -np.maximum(u.values, FLOOR) ** (-n)
        inner = float(np.trapezoid(phi_u * lap, dx=g.h))
        outer = 0.0
        if u.tail is not None:
            rate = max(2 * s - max(n * u.tail.decay_exponent, 0.0), 0.05) if n > 0 else 2 * s
            tau, w = log_tail_rule(1.0, rate)
            r = g.L * np.exp(tau)
            for side in (-1, 1):
                tail_u = np.maximum(u.tail.side_value(r, side), FLOOR)
                phi_t = np.log(tail_u) if n == 0 else -tail_u ** (-n)
                outer += float(np.sum(w * r * phi_t * _outer_kernel(zeta, s, r, side)))
        lhs.append(float(np.trapezoid(u.values * space, dx=g.h)) * dpsi)
        rhs.append((inner + outer) * psi)
    A = float(np.trapezoid(lhs, times))
    B = float(np.trapezoid(rhs, times))
    if A == 0.0 and B == 0.0:
        return 0.0
    return abs(A - B) / (abs(B) + FLOOR)


# ---------------------------------------------------------------------------
# report bundle


@dataclass
class ReportBundle:
    name: str
    checks: dict = field(default_factory=dict)      # name -> {"hard": bool, "passed": bool, ...}
    series: dict = field(default_factory=dict)      # name -> (header, rows)

    def add(self, name: str, passed: bool, hard: bool = True, **data) -> None:
        self.checks[name] = {"hard": hard, "passed": bool(passed), **data}

    def add_comparison(self, name: str, rep: ComparisonReport, hard: bool = True) -> None:
        self.add(name, rep.verdict, hard, **rep.to_json())

    def add_series(self, name: str, header: list[str], rows) -> None:
        self.series[name] = (list(header), [list(map(float, r)) for r in rows])

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values() if c["hard"])

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "checks": self.checks}

    def save(self, directory: str | Path) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"report_{self.name}.json"
        path.write_text(json.dumps(self.to_json(), indent=1, default=_json_default))
        for key, (header, rows) in self.series.items():
            with open(d / f"{key}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                for r in rows:
                    w.writerow([repr(v) for v in r])
        return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, enum.Enum):
        return obj.value
    raise TypeError(f"not serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# standard pair suite


def comparison_suite(s: float = 0.8, n: float = 0.2, eps: float = 1e-6, t_end: float = 2.0,
                     grid: Grid1D | None = None, tol: float = DEFAULT_TOL,
                     eps_values=None) -> ReportBundle:
    """Comparison principles on the standard bump pair.

    u1 = (1 - x^2)_+^2; u2 has the same mass spread over twice the radius
    (less concentrated); u3 is u1 moved right by eight cells (shifting pair);
    u4 is u1 moved left by eight cells (reflection about a = 0).
    """
    from .evolve import run, step_times_of
    from .limits import DEFAULT_EPS, build_ladder
    from .nonlin import RegularizedNonlinearity
    from .selfsim import bump_values

    grid = grid or Grid1D(20.0, 513)
    x, h = grid.x, grid.h
    nl = Nonlinearity(n)
    rnl = RegularizedNonlinearity(nl, eps)
    op = cached_operator(grid, s)
    u1 = Field(grid, bump_values(x, 0.0, 1.0))
    u2 = Field(grid, 0.5 * bump_values(x, 0.0, 2.0))
    u3 = Field(grid, bump_values(x, 8 * h, 1.0))
    u4 = Field(grid, bump_values(x, -8 * h, 1.0))
    outs = np.geomspace(t_end / 200.0, t_end, 40)
    tr1 = run(op, rnl, u1, t_end, output_times=outs)
    plan = step_times_of(tr1)
    tr2, tr3, tr4 = (run(op, rnl, u, t_end, output_times=outs, step_times=plan)
                     for u in (u2, u3, u4))

    bundle = ReportBundle("comparison")
    worst = max((concentration_compare(a, b, tol) for a, b in zip(tr2.states, tr1.states)),
                key=lambda r: r.max_violation)
    bundle.add_comparison("concentration", worst)
    worst = max((shifting_compare(a, b, tol) for a, b in zip(tr3.states, tr1.states)),
                key=lambda r: r.max_violation)
    bundle.add_comparison("shifting", worst)
    bundle.add_comparison("l1_contraction", l1_contraction(tr1, tr3, tol))
    bundle.add_comparison("aleksandrov", aleksandrov_check(tr4, 0.0, tol))
    t_min = 10 * outs[0]
    bundle.add_comparison("benilan_crandall", benilan_crandall_check(tr1, nl, t_min, tol))
    bundle.add_comparison("time_continuity", time_continuity_check(tr1, nl, t_min, tol))
    ladder = build_ladder(op, nl, u1, DEFAULT_EPS if eps_values is None else eps_values,
                          t_end, output_times=outs, order_tol=np.inf)
    bundle.add_comparison("eps_monotonicity",
                          ComparisonReport(Relation.POINTWISE, ladder.order_violation, tol))
    bundle.add_series("masses", ["t", "mass_u1", "mass_u2", "mass_u3"],
                      zip(tr1.times, tr1.masses(), tr2.masses(), tr3.masses()))
    return bundle
