"""Implicit Euler for dv/dt + (-Delta)^s Phi_eps(v) = 0 with damped Newton solves.

Semi-discrete form.  Interior node i carries mass h v_i.  Each boundary node b
carries the half cell plus the analytic tail beyond L, whose shape is tied to
v_b by the closure

    v(y) = v_b rho(|y|),  rho(r) = (L/r)^gamma / (1 + (r/R_c)^beta),
    R_c = L (1 + v_b/eps)^(1/gamma),  beta = 1 + 2s - gamma,

i.e. a gamma power law that turns into the linear far field |y|^(-1-2s) where
v drops below eps.  Interior rows hold the pointwise operator; boundary rows
collect exactly the fluxes leaving the interior through each side, so the
discrete mass is conserved to solver tolerance and the Jacobian is an
M-matrix (comparison and L1 contraction carry over to the scheme).
"""

from __future__ import annotations

import json
import math
import time as _time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
import scipy.linalg as sla

from .errors import NewtonDiverged
from .frlap import FrLapOperator, build_operator
from .grid import Field, Grid1D, TailModel, blended_tail_integral, total_mass
from .nonlin import Nonlinearity, RegularizedNonlinearity, phi_eps, phi_eps_prime
from .quad import log_tail_rule


@dataclass
class StepperConfig:
    dt: float | None = None              # None: h^(2s)/10
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    damping_min: float = 1e-4
    adaptive: bool = True
    dt_min: float = 1e-12
    dt_max: float = 1e3
    max_dt_fraction: float = 0.05        # dt <= fraction * t once t > 0
    tail_exponent: float | None = None   # closure exponent; None: from data or 2s/(1+n)
    eps_cutoff: bool = True              # blend the closure into the linear far field
    expand_ratio: float | None = None    # double L when v_b / max v exceeds this

    def __post_init__(self):
        if self.newton_tol <= 0 or self.damping_min <= 0 or self.dt_min <= 0:
            raise ValueError("tolerances must be positive")
        if self.dt is not None and not (self.dt_min <= self.dt <= self.dt_max):
            raise ValueError("need dt_min <= dt <= dt_max")


class EvolutionSystem:
    """Discrete operator, mass weights and tail closure for one grid."""

    def __init__(self, op: FrLapOperator, rnl: RegularizedNonlinearity, gamma: float,
                 eps_cutoff: bool = True):
        self.op, self.rnl, self.gamma = op, rnl, float(gamma)
        self.eps_cutoff = eps_cutoff
        g = op.grid
        self.grid = g
        N, h, s, L = g.n_points, g.h, op.s, g.L
        self.N, self.h, self.s, self.L = N, h, s, L
        self.far = 1.0 + 2.0 * s
        self.beta = self.far - self.gamma
        if eps_cutoff and self.beta <= 0:
            raise ValueError("closure exponent must be below 1 + 2s")
        c = op.normalization
        P = op.weights
        interior = np.arange(1, N - 1)
        self.interior = interior
        I_left = op.kernel_out[0].copy()
        I_right = op.kernel_out[1].copy()

        B = np.zeros((N, N))
        Pi = P[interior]
        B[interior] = -c * h * Pi
        B[interior, interior] = c * h * (Pi.sum(axis=1) + I_left[interior] + I_right[interior])
        for b, other, I in ((0, N - 1, I_left), (N - 1, 0, I_right)):
            B[b, interior] = -c * h * (P[interior, b] + I[interior])
            B[b, b] = c * h * (P[interior, b].sum() + P[b, other])
            B[b, other] = -c * h * P[b, other]
        self.B = B
        self.ch = c * h

        # tail quadrature: one graded rule r = L + h (e^tau - 1) shared by all
        # interior rows; the kernel singularity sits a distance pi off the real
        # tau axis for every row, so unit panels resolve it
        x = g.x[interior]
        tau, w = log_tail_rule(L / h, 2.0 * s, digits=34.0, panel=1.0)
        r = L + h * np.expm1(tau)
        jac = w * h * np.exp(tau)
        self._r = r
        self._Lg = (L / r) ** self.gamma
        self._rb = r ** self.beta
        self._kern = {side: jac[None, :] * (r[None, :] - side * x[:, None]) ** (-1.0 - 2.0 * s)
                      for side in (-1, 1)}

    # closure ------------------------------------------------------------
    def cutoff(self, vb: float) -> tuple[float, float]:
        """R_c and dR_c/dv_b."""
        if not self.eps_cutoff:
            return math.inf, 0.0
        e, g, L = self.rnl.eps, self.gamma, self.L
        Rc = L * (1.0 + vb / e) ** (1.0 / g)
        dRc = (L / g) * (1.0 + vb / e) ** (1.0 / g - 1.0) / e
        return Rc, dRc

    def tail_mass(self, vb: float) -> tuple[float, float]:
        """Mass beyond L on one side and its derivative in v_b."""
        g, L = self.gamma, self.L
        Rc, dRc = self.cutoff(vb)
        if math.isinf(Rc):
            J = L / (g - 1.0)
            return vb * J, J
        Jint, dJ = blended_tail_integral(L, g, self.far, Rc, with_derivative=True)
        Lg = L ** g
        return vb * Lg * Jint, Lg * Jint + vb * Lg * dJ * dRc

    def tail_model(self, v: np.ndarray) -> TailModel:
        L, g = self.L, self.gamma
        cut = (self.cutoff(v[0])[0], self.cutoff(v[-1])[0])
        return TailModel(v[0] * L ** g, v[-1] * L ** g, g, L, cutoff=cut, far_exponent=self.far)

    def field(self, v: np.ndarray) -> Field:
        return Field(self.grid, v.copy(), self.tail_model(v))

    def mass(self, v: np.ndarray) -> float:
        h = self.h
        core = h * (v[1:-1].sum() + 0.5 * (v[0] + v[-1]))
        return core + self.tail_mass(v[0])[0] + self.tail_mass(v[-1])[0]

    def _psi(self, side: int, vb: float, derivative: bool):
        """int over the tail of Phi_eps(v_tail) K for each interior row."""
        Rc, dRc = self.cutoff(vb)
        if math.isinf(Rc):
            rho = self._Lg
            q = None
        else:
            q = self._rb * Rc ** (-self.beta)
            rho = self._Lg / (1.0 + q)
        arg = vb * rho
        K = self._kern[side]
        psi = K @ phi_eps(self.rnl, arg)
        if not derivative:
            return psi, None
        drho = rho if q is None else rho + vb * rho * self.beta * q / (Rc * (1.0 + q)) * dRc
        dpsi = K @ (phi_eps_prime(self.rnl, arg) * drho)
        return psi, dpsi

    # residual and Jacobian ---------------------------------------------------
    def residual(self, v, v_old, mass_old_tails, dt, jacobian=False):
        N, h, ch = self.N, self.h, self.ch
        w = phi_eps(self.rnl, v)
        G = self.B @ w
        R = np.empty(N)
        R[1:-1] = h * (v[1:-1] - v_old[1:-1])
        dmass = np.full(N, h)
        tails = {}
        for b, side, k in ((0, -1, 0), (N - 1, 1, 1)):
            m, dm = self.tail_mass(v[b])
            R[b] = 0.5 * h * (v[b] - v_old[b]) + m - mass_old_tails[k]
            dmass[b] = 0.5 * h + dm
            psi, dpsi = self._psi(side, v[b], jacobian)
            G[1:-1] -= ch * psi
            G[b] += ch * psi.sum()
            tails[b] = dpsi
        R += dt * G
        if not jacobian:
            return R, dmass, None
        J = self.B * phi_eps_prime(self.rnl, v)[None, :]
        for b in (0, N - 1):
            J[1:-1, b] -= ch * tails[b]
            J[b, b] += ch * tails[b].sum()
        J *= dt
        J[np.diag_indices(N)] += dmass
        return R, dmass, J

    def step(self, v_old: np.ndarray, dt: float, cfg: StepperConfig) -> tuple[np.ndarray, int]:
        """One implicit Euler step; returns (v_new, Newton iterations)."""
        mass_old = (self.tail_mass(v_old[0])[0], self.tail_mass(v_old[-1])[0])
        scale = max(float(np.max(np.abs(v_old))), 1e-300)
        v = v_old.copy()
        R, dmass, J = self.residual(v, v_old, mass_old, dt, jacobian=True)
        norm = float(np.max(np.abs(R / dmass)))
        if norm <= cfg.newton_tol * scale:
            return v, 0
        for it in range(1, cfg.newton_max_iter + 1):
            try:
                delta = sla.lu_solve(sla.lu_factor(J, check_finite=False), -R, check_finite=False)
            except (ValueError, np.linalg.LinAlgError) as exc:
                raise NewtonDiverged(f"linear solve failed: {exc}") from exc
            lam = 1.0
            while True:
                cand = v + lam * delta
                if np.all(cand >= 0):
                    Rc, dm_c, _ = self.residual(cand, v_old, mass_old, dt)
                    norm_c = float(np.max(np.abs(Rc / dm_c)))
                    if norm_c < norm or norm_c <= cfg.newton_tol * scale:
                        break
                lam *= 0.5
                if lam < cfg.damping_min:
                    raise NewtonDiverged(f"line search failed at iteration {it}")
            v = cand
            step_size = lam * float(np.max(np.abs(delta)))
            if norm_c <= cfg.newton_tol * scale or step_size <= 1e-14 * max(scale, float(np.max(v))):
                return v, it
            R, dmass, J = self.residual(v, v_old, mass_old, dt, jacobian=True)
            norm = float(np.max(np.abs(R / dmass)))
        raise NewtonDiverged(f"no convergence in {cfg.newton_max_iter} iterations")


_SYSTEM_CACHE: dict = {}


def closure_exponent(s: float, n: float, v0: Field | None, cfg: StepperConfig) -> float:
    if cfg.tail_exponent is not None:
        return cfg.tail_exponent
    if v0 is not None and v0.tail is not None and 0 < v0.tail.gamma < 1 + 2 * s:
        return v0.tail.gamma
    return 2.0 * s / (1.0 + n)


def get_system(op: FrLapOperator, rnl: RegularizedNonlinearity, gamma: float,
               eps_cutoff: bool = True) -> EvolutionSystem:
    key = (id(op), rnl, gamma, eps_cutoff)
    sysm = _SYSTEM_CACHE.get(key)
    if sysm is None or sysm.op is not op:
        if len(_SYSTEM_CACHE) > 8:
            _SYSTEM_CACHE.clear()
        sysm = EvolutionSystem(op, rnl, gamma, eps_cutoff)
        _SYSTEM_CACHE[key] = sysm
    return sysm


def implicit_step(op: FrLapOperator, rnl: RegularizedNonlinearity, v_old: Field, dt: float,
                  cfg: StepperConfig | None = None) -> Field:
    cfg = cfg or StepperConfig()
    if v_old.grid != op.grid:
        from .errors import GridMismatch
        raise GridMismatch("field and operator grids differ")
    sysm = get_system(op, rnl, closure_exponent(op.s, rnl.n, v_old, cfg), cfg.eps_cutoff)
    v, _ = sysm.step(v_old.values, dt, cfg)
    return sysm.field(v)


@dataclass
class Trajectory:
    times: list
    states: list
    eps: float
    s: float
    n: float
    records: list = field(default_factory=list)   # per accepted step
    meta: dict = field(default_factory=dict)

    def u(self, k: int) -> Field:
        """u = v + eps at output k (tail of the shift is carried as an offset)."""
        f = self.states[k]
        tail = f.tail
        if tail is not None and self.eps:
            tail = replace(tail, offset=(tail.offset[0] + self.eps, tail.offset[1] + self.eps))
        return Field(f.grid, f.values + self.eps, tail)

    def masses(self) -> np.ndarray:
        return np.array([total_mass(f) for f in self.states])

    def sups(self) -> np.ndarray:
        return np.array([float(np.max(f.values)) for f in self.states])

    def index_of(self, t: float) -> int:
        k = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"time {t} not recorded")
        return k

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for k, f in enumerate(self.states):
            f.save(d / f"t_{k}.csv")
        manifest = {"eps": self.eps, "s": self.s, "n": self.n,
                    "times": [float(t) for t in self.times],
                    "records": self.records, "meta": self.meta}
        (d / "trajectory.json").write_text(json.dumps(manifest, indent=1))

    @classmethod
    def load(cls, directory: str | Path) -> "Trajectory":
        d = Path(directory)
        m = json.loads((d / "trajectory.json").read_text())
        states = [Field.load(d / f"t_{k}.csv") for k in range(len(m["times"]))]
        return cls(m["times"], states, m["eps"], m["s"], m["n"], m.get("records", []),
                   m.get("meta", {}))


_OPERATORS: dict = {}


def cached_operator(grid: Grid1D, s: float) -> FrLapOperator:
    key = (grid.half_width, grid.n_points, s)
    op = _OPERATORS.get(key)
    if op is None:
        if len(_OPERATORS) > 12:
            _OPERATORS.clear()
        op = _OPERATORS[key] = build_operator(grid, s)
    return op


def _expand(sysm: EvolutionSystem, v: np.ndarray) -> tuple[EvolutionSystem, np.ndarray]:
    """Double the window keeping n_points; old even nodes land on new nodes."""
    g = sysm.grid
    if (g.n_points - 1) % 4:
        raise ValueError("window expansion needs n_points = 4m + 1")
    new_grid = g.scaled(2.0)
    old = sysm.field(v)
    x = new_grid.x
    vals = old.sample(x)
    inner = np.abs(x) <= g.L * (1 + 1e-12)
    op = cached_operator(new_grid, sysm.s)
    new = get_system(op, sysm.rnl, sysm.gamma, sysm.eps_cutoff)
    vals = np.maximum(vals, 0.0)
    # keep the discrete mass exactly: adjust the outer (newly created) nodes
    # the tail mass follows the boundary value, so iterate the outer scaling
    target = sysm.mass(v)
    outer = ~inner
    base = vals[outer].copy()
    if not np.any(base > 0):
        return new, vals

    def excess(k):
        vals[outer] = k * base
        return new.mass(vals) - target

    lo, hi = 0.0, 1.0
    while excess(hi) < 0 and hi < 1e6:
        hi *= 2.0
    if excess(lo) <= 0 <= excess(hi):
        brentq(excess, lo, hi, xtol=1e-15, rtol=1e-14)
    else:
        vals[outer] = base
    return new, vals


def run(op: FrLapOperator, rnl: RegularizedNonlinearity, v0: Field, t_end: float,
        cfg: StepperConfig | None = None, output_times=None, step_times=None,
        progress=None) -> Trajectory:
    """Advance to t_end.

    States are stored at ``output_times`` (default: after every step).  With
    ``step_times`` the run steps exactly through those times (a failed step is
    split in halves), which lets several runs share one time grid.
    """
    cfg = cfg or StepperConfig()
    if v0.grid != op.grid:
        from .errors import GridMismatch
        raise GridMismatch("field and operator grids differ")
    if np.any(v0.values < 0):
        raise ValueError("initial data must be nonnegative")
    gamma = closure_exponent(op.s, rnl.n, v0, cfg)
    sysm = get_system(op, rnl, gamma, cfg.eps_cutoff)
    v = v0.values.copy()
    t = 0.0
    h = op.grid.h
    dt = cfg.dt if cfg.dt is not None else min(max(h ** (2 * op.s) / 10.0, cfg.dt_min), cfg.dt_max)
    outs = [] if output_times is None else sorted(float(x) for x in output_times if 0 < x <= t_end)
    if step_times is not None:
        plan = sorted(set(float(x) for x in step_times if 0 < x < t_end) | set(outs) | {float(t_end)})
    else:
        plan = None
    traj = Trajectory([0.0], [sysm.field(v)], rnl.eps, op.s, rnl.n,
                      meta={"closure_exponent": gamma})
    traj.records.append({"t": 0.0, "mass": sysm.mass(v), "sup": float(v.max()),
                         "min": float(v.min()), "dt": 0.0, "iters": 0, "L": sysm.L})
    k_out = 0
    k_plan = 0
    clock = _time.time()

    def split_step(v, t_from, t_to, depth=0):
        try:
            return sysm.step(v, t_to - t_from, cfg)
        except NewtonDiverged:
            if depth > 30 or t_to - t_from <= cfg.dt_min:
                raise
            mid = 0.5 * (t_from + t_to)
            v_mid, i1 = split_step(v, t_from, mid, depth + 1)
            v_end, i2 = split_step(v_mid, mid, t_to, depth + 1)
            return v_end, max(i1, i2)

    while t < t_end * (1 - 1e-12):
        if plan is not None:
            target = plan[k_plan]
            k_plan += 1
            v_new, iters = split_step(v, t, target)
            step_dt = target - t
        else:
            target = t_end if k_out >= len(outs) else min(outs[k_out], t_end)
            step_dt = dt
            if t > 0 and cfg.adaptive:
                step_dt = min(step_dt, cfg.max_dt_fraction * t + cfg.dt_min)
            step_dt = min(step_dt, target - t)
            if target - t - step_dt < 0.2 * step_dt:
                step_dt = target - t      # avoid a sliver step before an output time
            try:
                v_new, iters = sysm.step(v, step_dt, cfg)
            except NewtonDiverged:
                if not cfg.adaptive or step_dt <= cfg.dt_min:
                    raise
                dt = max(step_dt / 2.0, cfg.dt_min)
                continue
            if abs(t + step_dt - target) <= 1e-12 * max(1.0, target):
                step_dt = target - t
            if cfg.adaptive:
                if iters > 10:
                    dt = max(step_dt / 2.0, cfg.dt_min)
                elif iters < 3:
                    dt = min(max(dt, step_dt) * 2.0, cfg.dt_max)
        t = t + step_dt
        v = v_new
        rec = {"t": t, "mass": sysm.mass(v), "sup": float(v.max()), "min": float(v.min()),
               "dt": step_dt, "iters": iters, "L": sysm.L}
        traj.records.append(rec)
        if cfg.expand_ratio is not None:
            while max(v[0], v[-1]) > cfg.expand_ratio * v.max():
                sysm, v = _expand(sysm, v)
        hit = k_out < len(outs) and abs(t - outs[k_out]) <= 1e-12 * max(1.0, t)
        if output_times is None or hit:
            traj.times.append(t)
            traj.states.append(sysm.field(v))
            if hit:
                k_out += 1
        if progress is not None:
            progress(t, rec, _time.time() - clock)
    return traj


def step_times_of(traj: Trajectory) -> list:
    return [r["t"] for r in traj.records[1:]]


def benilan_crandall_defect(traj: Trajectory, nl: Nonlinearity, t_min: float = 0.0) -> float:
    """max over interior outputs of (n+1) t du/dt - u, centered differences.

    Outputs whose difference stencil reaches below ``t_min`` are skipped.
    """
    times = np.asarray(traj.times)
    if len(times) < 3:
        raise ValueError("need at least three recorded times")
    worst = -np.inf
    for k in range(1, len(times) - 1):
        if times[k] <= 0 or times[k - 1] < t_min:
            continue
        f = traj.u(k)
        prev = traj.u(k - 1).sample(f.grid.x)
        nxt = traj.u(k + 1).sample(f.grid.x)
        dudt = (nxt - prev) / (times[k + 1] - times[k - 1])
        worst = max(worst, float(np.max((nl.n + 1.0) * times[k] * dudt - f.values)))
    return worst
