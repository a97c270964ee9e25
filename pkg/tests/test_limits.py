import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracdiff.errors import NonConvergent
from fracdiff.evolve import Trajectory, cached_operator
from fracdiff.grid import Field, Grid1D
from fracdiff.limits import (EpsLadder, Verdict, build_ladder, extinction_verdict,
                             extrapolate_details, fit_exponent, limit_mass)
from fracdiff.nonlin import Nonlinearity
from fracdiff.selfsim import bump_values


@settings(max_examples=40, deadline=None)
@given(st.floats(0.15, 1.9))
def test_fit_exponent_recovers_power(p):
    e = (1e-3, 1e-4, 1e-5)
    d12, d23 = e[0] ** p - e[1] ** p, e[1] ** p - e[2] ** p
    assert fit_exponent(e, (d12, d23)) == pytest.approx(p, rel=1e-6)


def test_fit_exponent_clamps_and_rejects():
    assert fit_exponent((1e-3, 1e-4, 1e-5), (1.0, 0.9999)) == 0.1
    with pytest.raises(NonConvergent):
        fit_exponent((1e-3, 1e-4, 1e-5), (1.0, 1.5))


def synthetic_ladder(p=0.5, a=0.3):
    # u_eps = ubar + a eps^p exactly, stored as v = u - eps
    g = Grid1D(5.0, 51)
    ubar = np.exp(-g.x ** 2)
    eps = [1e-2, 1e-3, 1e-4, 1e-5]
    trajs = [Trajectory([1.0], [Field(g, ubar + a * e ** p * np.cos(g.x) ** 2 - e)], e, 0.8, 0.2)
             for e in eps]
    return EpsLadder(eps, trajs, 0.8, 0.2, Field(g, ubar)), ubar


def test_extrapolation_is_exact_on_power_law():
    ladder, ubar = synthetic_ladder()
    est = extrapolate_details(ladder, 1.0)
    assert est.exponent == pytest.approx(0.5, rel=1e-8)
    assert np.max(np.abs(est.field.values - ubar)) < 1e-10


def test_limit_mass_is_finite_for_compact_data():
    ladder, ubar = synthetic_ladder()
    assert limit_mass(extrapolate_details(ladder, 1.0).field) == pytest.approx(
        np.trapezoid(ubar, dx=0.2), rel=1e-8)


def test_build_ladder_rejects_unsorted_eps():
    g = Grid1D(4.0, 33)
    with pytest.raises(ValueError):
        build_ladder(cached_operator(g, 0.8), Nonlinearity(0.2), Field(g, bump_values(g.x, 0, 1)),
                     eps_values=(1e-4, 1e-3, 1e-5))


@pytest.mark.parametrize("s,n,expected", [(0.8, 0.2, Verdict.EXISTS), (0.4, 0.2, Verdict.EXTINCT)])
def test_coarse_verdicts(s, n, expected):
    g = Grid1D(20.0, 257)
    u0 = Field(g, bump_values(g.x, 0.0, 1.0))
    ladder = build_ladder(cached_operator(g, s), Nonlinearity(n), u0, t_end=1.0, output_times=[1.0])
    assert ladder.order_violation <= 1e-9
    assert extinction_verdict(ladder, 1.0) == expected
