"""Command-line front end: fracdiff {constants, evolve, barenblatt, verify, loghalf}.

Heavy numerical modules are imported lazily so that thread limits from
``--threads`` or FRACDIFF_THREADS are in place before numpy loads BLAS.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError, FracDiffError

EXIT_OK, EXIT_PARSE, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3

DATA_KINDS = ("bump", "cauchy_tail", "vss_like", "custom_csv")
CHECKS = ("mass", "ordering", "benilan_crandall", "smoothing", "lower_bound")

# section -> key -> converter
_SCHEMA = {
    "problem": {"s": float, "n": float},
    "grid": {"L": float, "n_points": int},
    "data": {"kind": str, "mass": float, "width": float, "center": float, "path": str},
    "ladder": {"eps": "floats", "start": float, "ratio": float, "count": int},
    "stepper": {"t_end": float, "dt": float, "newton_tol": float, "max_dt_fraction": float,
                "expand_ratio": float, "tail_exponent": float, "output_times": "floats"},
    "barenblatt": {"eps": float, "t_end": float, "profile_from": float, "xi_max": float,
                   "n_xi": int, "max_dt_fraction": float},
    "output": {"directory": str},
    "checks": {"names": "names"},
}


def _convert(kind, raw: str, where: str):
    try:
        if kind == "floats":
            return [float(v) for v in raw.replace(",", " ").split()]
        if kind == "names":
            return [v for v in raw.replace(",", " ").split()]
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from exc


@dataclass
class ExperimentConfig:
    s: float
    n: float
    L: float = 20.0
    n_points: int = 513
    data_kind: str = "bump"
    data_params: dict = field(default_factory=lambda: {"mass": None, "width": 1.0, "center": 0.0})
    eps_values: list = field(default_factory=list)
    stepper: dict = field(default_factory=dict)
    t_end: float = 1.0
    output_times: list | None = None
    barenblatt: dict = field(default_factory=dict)
    output_dir: str = "fracdiff_out"
    checks: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ConfigError("s must lie in (0, 1)")
        if self.n < 0:
            raise ConfigError("n must be nonnegative")
        if not self.L > 0:
            raise ConfigError("L must be positive")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ConfigError("n_points must be odd and at least 3")
        if self.data_kind not in DATA_KINDS:
            raise ConfigError(f"data kind must be one of {', '.join(DATA_KINDS)}")
        if self.data_kind == "custom_csv" and not self.data_params.get("path"):
            raise ConfigError("custom_csv data needs a path")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        for name in self.checks:
            if name not in CHECKS:
                raise ConfigError(f"unknown check {name!r}; known: {', '.join(CHECKS)}")
        eps = self.eps_values
        if eps and (any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps[:-1], eps[1:]))):
            raise ConfigError("eps values must be positive and strictly decreasing")

    @classmethod
    def from_text(cls, text: str, overrides: dict | None = None) -> "ExperimentConfig":
        cp = configparser.ConfigParser(strict=True, interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        vals: dict[str, dict] = {}
        for sec in cp.sections():
            if sec not in _SCHEMA:
                raise ConfigError(f"unknown section [{sec}]")
            vals[sec] = {}
            for key, raw in cp.items(sec):
                if key not in _SCHEMA[sec]:
                    raise ConfigError(f"unknown key {key!r} in [{sec}]")
                vals[sec][key] = _convert(_SCHEMA[sec][key], raw, f"[{sec}] {key}")
        prob = dict(vals.get("problem", {}))
        prob.update({k: v for k, v in (overrides or {}).items() if v is not None})
        if "s" not in prob or "n" not in prob:
            raise ConfigError("[problem] needs s and n")
        grid = vals.get("grid", {})
        data = vals.get("data", {})
        lad = vals.get("ladder", {})
        if "eps" in lad and any(k in lad for k in ("start", "ratio", "count")):
            raise ConfigError("[ladder] takes either eps or start/ratio/count")
        if "eps" in lad:
            eps = lad["eps"]
        elif lad:
            start, ratio, count = lad.get("start", 1e-3), lad.get("ratio", 0.1), lad.get("count", 5)
            if not 0 < ratio < 1 or count < 1:
                raise ConfigError("[ladder] ratio must lie in (0, 1) and count be positive")
            eps = [float(f"{start * ratio ** k:.12g}") for k in range(count)]
        else:
            eps = []
        st = dict(vals.get("stepper", {}))
        t_end = st.pop("t_end", 1.0)
        outs = st.pop("output_times", None)
        params = {"mass": data.get("mass"), "width": data.get("width", 1.0),
                  "center": data.get("center", 0.0), "path": data.get("path")}
        return cls(s=prob["s"], n=prob["n"], L=grid.get("L", 20.0),
                   n_points=grid.get("n_points", 513), data_kind=data.get("kind", "bump"),
                   data_params=params, eps_values=eps, stepper=st, t_end=t_end,
                   output_times=outs, barenblatt=vals.get("barenblatt", {}),
                   output_dir=vals.get("output", {}).get("directory", "fracdiff_out"),
                   checks=vals.get("checks", {}).get("names", []))

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, overrides)

    def to_json(self) -> dict:
        return asdict(self)

    # builders ----------------------------------------------------------
    def grid(self):
        from .grid import Grid1D
        return Grid1D(self.L, self.n_points)

    def initial_data(self):
        import numpy as np

        from .grid import Field, TailModel

        if self.data_kind == "custom_csv":
            path = Path(self.data_params["path"])
            if path.with_suffix(".json").exists():
                return Field.load(path)
            from .grid import Grid1D
            arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            x, v = arr[:, 0], arr[:, 1]
            g = Grid1D(float(x[-1]), len(x))
            if not np.allclose(x, g.x, rtol=0, atol=1e-9 * g.L):
                raise ConfigError("custom_csv nodes must be uniform and symmetric about 0")
            return Field(g, v)
        g = self.grid()
        x = g.x
        w = self.data_params.get("width") or 1.0
        c = self.data_params.get("center") or 0.0
        tail = None
        if self.data_kind == "bump":
            v = np.maximum(1 - ((x - c) / w) ** 2, 0.0) ** 2
        elif self.data_kind == "cauchy_tail":
            v = 1.0 / (1.0 + ((x - c) / w) ** 2)
            tail = TailModel(w ** 2, w ** 2, 2.0, g.L)
        else:  # vss_like
            p = self.s / (1.0 + self.n)
            v = (1.0 + ((x - c) / w) ** 2) ** (-p)
            tail = TailModel(w ** (2 * p), w ** (2 * p), 2 * p, g.L)
        mass = self.data_params.get("mass")
        if mass is not None:
            from .grid import total_mass
            m = total_mass(Field(g, v, tail)) if tail is None or tail.is_integrable() else None
            if m is None:
                raise ConfigError("mass normalization needs integrable data")
            k = mass / m
            v = k * v
            tail = None if tail is None else tail.scaled(k)
        return Field(g, v, tail)

    def stepper_config(self):
        from .evolve import StepperConfig
        try:
            return StepperConfig(**self.stepper)
        except (TypeError, ValueError, FracDiffError) as exc:
            raise ConfigError(f"[stepper] {exc}") from exc


# ---------------------------------------------------------------------------
# commands


def _write_json(path: Path, obj) -> None:
    from .diagnostics import _json_default
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, default=_json_default))


def cmd_constants(s: float, n: float, out=sys.stdout) -> int:
    from .frlap import in_existence_range, log_constant, power_constant, vss_constant

    if not in_existence_range(s, n):
        print(f"error: (s, n) = ({s}, {n}) is outside existence range "
              "s > 1/2 and 0 <= n < 2s - 1", file=sys.stderr)
        return EXIT_SOLVER
    a = 2 * s * n / (1 + n)
    K, C = vss_constant(s, n)
    alpha = 1.0 / (2 * s - 1 - n)
    rows = [("s", s), ("n", n),
            ("k(alpha, s), alpha = 2sn/(1+n)", power_constant(a, s) if a > 0 else float("nan")),
            ("c(s)", log_constant(s)), ("K(s, n)", K), ("C(n, s)", C),
            ("alpha", alpha), ("delta", 2 * s * alpha), ("gamma", 2 * s / (1 + n))]
    for name, val in rows:
        print(f"{name:<32s} {val: .10g}", file=out)
    return EXIT_OK


def cmd_evolve(cfg: ExperimentConfig, out_dir: Path) -> int:
    import numpy as np

    from .evolve import benilan_crandall_defect, cached_operator
    from .limits import DEFAULT_EPS, build_ladder, extinction_verdict
    from .nonlin import Nonlinearity

    u0 = cfg.initial_data()
    op = cached_operator(u0.grid, cfg.s)
    nl = Nonlinearity(cfg.n)
    eps = cfg.eps_values or list(DEFAULT_EPS)
    ladder = build_ladder(op, nl, u0, eps, cfg.t_end, cfg.stepper_config(), cfg.output_times)
    verdict = extinction_verdict(ladder, cfg.t_end)
    ladder.save(out_dir / "ladder")
    summary = {"s": cfg.s, "n": cfg.n, "verdict": verdict.value, "t": cfg.t_end,
               "eps_values": eps, "order_violation": ladder.order_violation, "checks": {}}
    failed = False
    for name in cfg.checks:
        tr = ladder.trajectories[-1]
        if name == "mass":
            m = tr.masses()
            drift = float(np.max(np.abs(m - m[0])) / m[0])
            res = {"value": drift, "passed": drift <= 1e-6}
        elif name == "ordering":
            res = {"value": ladder.order_violation, "passed": ladder.order_violation <= 1e-3}
        elif name == "benilan_crandall":
            d = benilan_crandall_defect(tr, nl, t_min=10 * tr.times[1])
            rel = max(0.0, d) / float(np.max(tr.sups()))
            res = {"value": rel, "passed": rel <= 1e-3}
        elif name == "smoothing":
            from .diagnostics import smoothing_fit
            from .selfsim import ScalingExponents
            fit = smoothing_fit(tr, ScalingExponents(cfg.s, cfg.n), min_decades=1.0)
            res = {"value": fit.fitted_exponent, "passed": True, "fit": fit.to_json()}
        else:  # lower_bound
            from .diagnostics import lower_bound_check
            from .selfsim import ScalingExponents
            w = cfg.data_params.get("width") or 1.0
            lb = lower_bound_check(tr.states[-1], cfg.t_end, ScalingExponents(cfg.s, cfg.n),
                                   abs(cfg.data_params.get("center") or 0.0) + w)
            res = {"value": lb.constant, "passed": lb.holds, "reference": lb.reference}
        summary["checks"][name] = res
        failed |= not res["passed"]
    _write_json(out_dir / "summary.json", summary)
    _write_json(out_dir / "config.json", cfg.to_json())
    print(f"verdict {verdict.value} at t = {cfg.t_end}")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_barenblatt(cfg: ExperimentConfig, out_dir: Path) -> int:
    import numpy as np

    from .evolve import cached_operator
    from .nonlin import Nonlinearity
    from .selfsim import (ScalingExponents, dirac_like_data, dirac_like_run, extract_profile,
                          profile_equation_residual)

    b = cfg.barenblatt
    exps = ScalingExponents(cfg.s, cfg.n)
    mass = cfg.data_params.get("mass") or 1.0
    width = cfg.data_params.get("width") or 0.05
    data = dirac_like_data(mass, width, cfg.n_points, cfg.data_params.get("center") or 0.0)
    t_end = b.get("t_end", 20.0)
    traj = dirac_like_run(cfg.s, cfg.n, data, t_end, eps=b.get("eps", 1e-15),
                          max_dt_fraction=b.get("max_dt_fraction", 0.01))
    t_from = b.get("profile_from", t_end / 10.0)
    times = [t for t in traj.times if t >= t_from]
    P = extract_profile(traj, exps, times, b.get("xi_max", 20.0), b.get("n_xi", 801))
    op = cached_operator(P.grid, cfg.s)
    residual = profile_equation_residual(P, op, Nonlinearity(cfg.n), exps)
    P.save(out_dir)
    rep = json.loads((out_dir / "fit.json").read_text())
    rep["residual"] = residual
    rep["sup_F"] = float(np.max(P.F))
    _write_json(out_dir / "fit.json", rep)
    traj.save(out_dir / "trajectory")
    print(f"gamma_fit {P.gamma_fit:.4f} (theory {exps.gamma_tail:.4f}), "
          f"c_inf {P.c_inf:.4f}, residual {residual:.3%}")
    return EXIT_OK


def _suite_operator(bundle) -> None:
    import numpy as np
    from scipy.special import zeta

    from .frlap import apply, build_operator, log_constant, power_constant
    from .grid import Field, Grid1D, TailModel

    g = Grid1D(40.0, 4097)
    x, h = g.x, g.h
    win = (np.abs(x) >= 0.5) & (np.abs(x) <= g.L / 4)
    for s, n in ((0.8, 0.2), (0.9, 0.5), (0.75, 0.0)):
        op = build_operator(g, s)
        ax = np.abs(x)
        with np.errstate(divide="ignore"):
            if n > 0:
                a = 2 * s * n / (1 + n)
                v = ax ** a
                v[g.center] = -2 * zeta(-a) * h ** a
                f = Field(g, v, TailModel(1.0, 1.0, -a, g.L))
                want = power_constant(a, s) * ax ** (a - 2 * s)
            else:
                v = np.log(ax)
                v[g.center] = np.log(h) - np.log(2 * np.pi)
                f = Field(g, v, TailModel(0.0, 0.0, 1.0, g.L, log_coefficient=(1.0, 1.0)))
                want = log_constant(s) * ax ** (-2 * s)
        got = apply(op, f).values
        err = float(np.max(np.abs(got[win] - want[win]) / np.abs(want[win])))
        bundle.add(f"power_s{s}_n{n}", err < 0.01, value=err, tolerance=0.01)
    g2 = Grid1D(200.0, 4097)
    op = build_operator(g2, 0.5)
    F = 2.0 / (1.0 + g2.x ** 2)
    tail = TailModel(0.0, 0.0, 2.0, g2.L, offset=(np.log(2.0),) * 2, log_coefficient=(-2.0, -2.0))
    got = apply(op, Field(g2, np.log(F), tail)).values
    err = float(np.max(np.abs(got - F)) / np.max(F))
    bundle.add("log_half_identity", err < 0.01, value=err, tolerance=0.01)


def _suite_scaling(bundle) -> None:
    from .diagnostics import smoothing_fit
    from .evolve import cached_operator
    from .frlap import vss_constant
    from .nonlin import Nonlinearity
    from .selfsim import (ScalingExponents, dirac_like_run, extract_profile,
                          profile_equation_residual, vss_profile)

    for s, n in ((0.8, 0.2), (0.75, 0.0)):
        exps = ScalingExponents(s, n)
        frac = 0.01 if n > 0 else 0.05
        traj = dirac_like_run(s, n, max_dt_fraction=frac)
        fit = smoothing_fit(traj, exps, 0.5, 20.0)
        err = abs(fit.fitted_exponent + exps.alpha) / exps.alpha
        bundle.add(f"smoothing_s{s}_n{n}", err < 0.05, value=fit.fitted_exponent,
                   target=-exps.alpha, fit=fit.to_json())
        if n == 0:
            continue
        P = extract_profile(traj, exps, [t for t in traj.times if t >= 2.0])
        C = vss_constant(s, n)[1]
        bundle.add("tail_exponent", abs(P.gamma_fit / exps.gamma_tail - 1) < 0.05,
                   value=P.gamma_fit, target=exps.gamma_tail)
        bundle.add("tail_constant", abs(P.c_inf / C - 1) < 0.10, value=P.c_inf, target=C)
        op = cached_operator(P.grid, s)
        res = profile_equation_residual(P, op, Nonlinearity(n), exps)
        bundle.add("profile_residual", res < 0.05, value=res, tolerance=0.05)
        res_v = profile_equation_residual(vss_profile(exps, P.grid), op, Nonlinearity(n), exps,
                                          lower=1.0)
        bundle.add("vss_residual", res_v < 0.02, value=res_v, tolerance=0.02)
        bundle.add_series("profile", ["xi", "F"], zip(P.xi, P.F))
        bundle.add_series("sup_decay", ["t", "sup"], zip(traj.times[1:], traj.sups()[1:]))


def _suite_loghalf(bundle) -> None:
    from .grid import Grid1D
    from .loghalf import explicit_pde_defect, run_loghalf

    g = Grid1D(200.0, 4097)
    for t in (0.0, 0.5):
        d = explicit_pde_defect(1.0, 1.0, g, t)
        bundle.add(f"explicit_pde_t{t}", d < 0.02, value=d, tolerance=0.02)
    _, rep = run_loghalf(grid=Grid1D(50.0, 513))
    bundle.add("mass_decay_rate", True, hard=False, value=rep.mass_decay_slope,
               exact=rep.exact_slope, T_observed=rep.T_observed)
    bundle.add_series("loghalf_mass", ["t", "mass", "sup"], zip(rep.times, rep.masses, rep.sups))


def cmd_verify(suite: str, out_dir: Path) -> int:
    from .diagnostics import ReportBundle, comparison_suite

    names = ["operator", "comparison", "scaling", "loghalf"] if suite == "all" else [suite]
    ok = True
    for name in names:
        if name == "comparison":
            bundle = comparison_suite()
        else:
            bundle = ReportBundle(name)
            {"operator": _suite_operator, "scaling": _suite_scaling,
             "loghalf": _suite_loghalf}[name](bundle)
        bundle.save(out_dir)
        for key, c in bundle.checks.items():
            flag = "PASS" if c["passed"] else ("FAIL" if c["hard"] else "INFO")
            print(f"{name:>10s}  {key:<24s} {flag}  {c.get('value', c.get('max_violation'))}")
        ok &= bundle.passed
    return EXIT_OK if ok else EXIT_CHECK


def cmd_loghalf(cfg: ExperimentConfig | None, out_dir: Path) -> int:
    from .grid import Grid1D
    from .limits import DEFAULT_EPS
    from .loghalf import run_loghalf

    grid = Grid1D(cfg.L, cfg.n_points) if cfg else Grid1D(50.0, 1025)
    eps = (cfg.eps_values if cfg and cfg.eps_values else DEFAULT_EPS)
    step = cfg.stepper_config() if cfg else None
    ladder, rep = run_loghalf(grid=grid, cfg=step, eps_values=eps)
    out_dir.mkdir(parents=True, exist_ok=True)
    rep.save(out_dir / "loghalf.json")
    ladder.save(out_dir / "ladder")
    print(f"T_exact {rep.T_exact:.4f}  T_observed {rep.T_observed}  "
          f"mass slope {rep.mass_decay_slope:.4f} (explicit {rep.exact_slope:.4f})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracdiff", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None, help="BLAS threads (FRACDIFF_THREADS wins)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("constants", help="print the closed-form constants")
    c.add_argument("--s", type=float, required=True)
    c.add_argument("--n", type=float, required=True)

    for name, hlp in (("evolve", "run an eps ladder and report the verdict"),
                      ("barenblatt", "long run, profile extraction and tail fit"),
                      ("loghalf", "s = 1/2 logarithmic case with the explicit solution")):
        e = sub.add_parser(name, help=hlp)
        e.add_argument("--config", required=(name != "loghalf"))
        e.add_argument("--out", default=None)
        e.add_argument("--s", type=float, default=None)
        e.add_argument("--n", type=float, default=None)

    v = sub.add_parser("verify", help="run a named verification suite")
    v.add_argument("suite", choices=["operator", "comparison", "scaling", "loghalf", "all"])
    v.add_argument("--out", default="fracdiff_verify")
    return p


def _set_threads(k: int | None) -> None:
    env = os.environ.get("FRACDIFF_THREADS")
    if env:
        try:
            k = int(env)
        except ValueError as exc:
            raise ConfigError("FRACDIFF_THREADS must be an integer") from exc
    if k is None:
        return
    if k < 1:
        raise ConfigError("thread count must be positive")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(k)
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    threadpool_limits(k)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _set_threads(args.threads)
        if args.command == "constants":
            return cmd_constants(args.s, args.n)
        if args.command == "verify":
            return cmd_verify(args.suite, Path(args.out))
        overrides = {"s": getattr(args, "s", None), "n": getattr(args, "n", None)}
        cfg = ExperimentConfig.from_file(args.config, overrides) if args.config else None
        out = Path(args.out) if args.out else Path(cfg.output_dir if cfg else "fracdiff_out")
        if args.command == "evolve":
            return cmd_evolve(cfg, out)
        if args.command == "barenblatt":
            return cmd_barenblatt(cfg, out)
        return cmd_loghalf(cfg, out)
    except FracDiffError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
