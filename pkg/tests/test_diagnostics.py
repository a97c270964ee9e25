import json
import math

import numpy as np
import pytest

from fracdiff.diagnostics import (ComparisonReport, Relation, ReportBundle, SpaceTimeBump,
                                  aleksandrov_check, centered_masses, concentration_compare,
                                  l1_contraction, lower_bound_check, pointwise_compare,
                                  shifting_compare, smooth_bump, smooth_bump_prime, smoothing_fit,
                                  time_continuity_check, very_weak_residual)
from fracdiff.errors import (MassMismatch, NotRearranged, PreconditionFailed, SupportViolation,
                             WindowTooShort)
from fracdiff.evolve import Trajectory
from fracdiff.frlap import vss_constant
from fracdiff.grid import Field, Grid1D
from fracdiff.nonlin import Nonlinearity
from fracdiff.selfsim import ScalingExponents, bump_values, explicit_log_half_solution, vss_field

G = Grid1D(6.0, 241)


def bump(center=0.0, width=1.0, mass=None):
    v = bump_values(G.x, center, width)
    if mass is not None:
        v = mass * v / np.trapezoid(v, dx=G.h)
    return Field(G, v)


def test_concentration_pair_and_swap():
    narrow, wide = bump(width=1.0, mass=1.0), bump(width=2.0, mass=1.0)
    assert concentration_compare(wide, narrow).max_violation < 1e-12
    swapped = concentration_compare(narrow, wide)
    assert swapped.max_violation > 0.1 and not swapped.verdict
    with pytest.raises(NotRearranged):
        concentration_compare(bump(center=1.0), narrow)


def test_shift_pair_and_swap():
    left, right = bump(center=-1.0), bump(center=1.0)
    assert shifting_compare(right, left).verdict
    assert shifting_compare(left, right).max_violation > 0.5
    with pytest.raises(MassMismatch):
        shifting_compare(bump(width=1.0), bump(width=2.0))


def test_pointwise():
    assert pointwise_compare(bump(width=1.0), bump(width=2.0)).max_violation == 0.0
    assert pointwise_compare(bump(width=2.0), bump(width=1.0)).max_violation > 0


def test_centered_masses_end_at_total():
    f = bump(mass=2.0)
    m = centered_masses(f)
    assert m[0] == 0 and m[-1] == pytest.approx(2.0, rel=1e-12)
    assert np.all(np.diff(m) >= 0)


def traj_of(fields, times=None):
    times = times or [float(k) for k in range(len(fields))]
    return Trajectory(times, fields, 0.0, 0.8, 0.2)


def test_aleksandrov_on_static_data():
    left = bump(center=-1.0)
    assert aleksandrov_check(traj_of([left, left]), 0.0).max_violation == 0.0
    with pytest.raises(PreconditionFailed):
        aleksandrov_check(traj_of([bump(center=1.0)]), 0.0)
    rep = aleksandrov_check(traj_of([left, bump(center=1.0)]), 0.0)
    assert rep.max_violation > 0.5 and rep.relation is Relation.ALEKSANDROV


def test_l1_contraction_flags_growth():
    a, b, c = bump(), bump(center=0.5), bump(center=2.0)
    assert l1_contraction(traj_of([a, a]), traj_of([b, b])).max_violation == 0.0
    assert l1_contraction(traj_of([a, a]), traj_of([b, c])).max_violation > 0.5


def test_time_continuity_flags_jumps():
    a, c = bump(), bump(center=2.0)
    ok = time_continuity_check(traj_of([a, a, a], [1.0, 2.0, 3.0]), Nonlinearity(0.2), 1.0)
    bad = time_continuity_check(traj_of([a, c], [1.0, 1.01]), Nonlinearity(0.2), 1.0)
    assert ok.max_violation == 0.0 and bad.max_violation > 0.5


def test_smoothing_fit_recovers_power():
    times = list(np.geomspace(0.1, 100, 20))
    fields = [Field(G, 3.0 * t ** -2.5 * bump().values) for t in times]
    fit = smoothing_fit(traj_of(fields, times), ScalingExponents(0.8, 0.2))
    assert fit.fitted_exponent == pytest.approx(-2.5, abs=1e-10)
    assert fit.fitted_prefactor == pytest.approx(3.0, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0)
    with pytest.raises(WindowTooShort):
        smoothing_fit(traj_of(fields, times), ScalingExponents(0.8, 0.2), t_min=1.0, t_max=10.0)


def test_lower_bound_on_vss():
    e = ScalingExponents(0.8, 0.2)
    lb = lower_bound_check(vss_field(e, 2.0, G), 2.0, e, support_radius=1.0)
    assert lb
    assert lb.constant == pytest.approx(lb.reference, rel=1e-12)
    assert lb.reference == pytest.approx(vss_constant(0.8, 0.2)[1] * 2 ** (1 / 1.2))
    assert not lower_bound_check(bump(), 1.0, e, support_radius=0.5)


def test_smooth_bump():
    z = np.linspace(-1.2, 1.2, 241)
    assert smooth_bump(np.array([0.0]))[0] == 1.0
    assert not smooth_bump(z)[np.abs(z) >= 1].any()
    d = 1e-6
    fd = (smooth_bump(z + d) - smooth_bump(z - d)) / (2 * d)
    assert np.max(np.abs(fd - smooth_bump_prime(z))) < 1e-6


def test_very_weak_residual_of_explicit_solution():
    grid = Grid1D(50.0, 1025)
    times = list(np.linspace(0.0, 0.9, 181))
    states = [explicit_log_half_solution(1.0, 1.0, grid, t) for t in times]
    traj = Trajectory(times, states, 0.0, 0.5, 0.0)
    for zeta in (SpaceTimeBump(0.0, 2.0, 0.1, 0.8), SpaceTimeBump(1.5, 1.0, 0.2, 0.6)):
        assert very_weak_residual(traj, Nonlinearity(0.0), zeta) < 1e-2
    with pytest.raises(SupportViolation):
        very_weak_residual(traj, Nonlinearity(0.0), SpaceTimeBump(0.0, 1.0, 0.5, 1.5))
    with pytest.raises(SupportViolation):
        very_weak_residual(traj, Nonlinearity(0.0), SpaceTimeBump(49.5, 1.0, 0.1, 0.5))


def test_bundle_roundtrip(tmp_path):
    b = ReportBundle("demo")
    b.add_comparison("shift", ComparisonReport(Relation.SHIFT, 0.0, 1e-3, 0.5))
    b.add("soft", False, hard=False, value=np.float64(2.0))
    b.add_series("series", ["t", "y"], [(1, 2.0), (2, 3.5)])
    assert b.passed
    path = b.save(tmp_path)
    data = json.loads(path.read_text())
    assert path.name == "report_demo.json"
    assert data["checks"]["shift"]["relation"] == "SHIFT" and data["passed"]
    assert (tmp_path / "series.csv").read_text().splitlines()[0] == "t,y"
    b.add("hard", False)
    assert not b.passed
