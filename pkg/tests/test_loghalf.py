import math

import pytest

from fracdiff.grid import Grid1D
from fracdiff.loghalf import LogHalfReport, explicit_pde_defect, run_loghalf
from fracdiff.errors import OutOfRange


@pytest.mark.parametrize("t", [0.0, 0.5])
def test_explicit_solution_satisfies_equation(t):
    assert explicit_pde_defect(1.0, 1.0, Grid1D(50.0, 1025), t) < 5e-3


def test_report_rejects_bad_time():
    with pytest.raises(OutOfRange):
        LogHalfReport(1.0, 0.0, None, -1.0)
    with pytest.raises(OutOfRange):
        run_loghalf(lam=-1.0)


def test_short_ladder_loses_mass_and_vanishes(tmp_path):
    ladder, rep = run_loghalf(grid=Grid1D(40.0, 257), eps_values=(1e-3, 1e-4, 1e-5))
    assert rep.T_exact == pytest.approx(1.0)
    assert 0.5 in [round(t, 12) for t in rep.times]
    assert all(b < a for a, b in zip(rep.masses[:-1], rep.masses[1:]))
    assert rep.mass_decay_slope < 0
    assert rep.sups[-1] < rep.sups[0]
    rep.save(tmp_path / "r.json")
    assert math.isfinite(rep.l1_error_half)
