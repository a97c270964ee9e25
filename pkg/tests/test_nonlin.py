import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracdiff.errors import NegativeArgument, NonpositiveArgument, OutOfRange
from fracdiff.nonlin import (Nonlinearity, RegularizedNonlinearity, phi, phi_eps, phi_eps_inverse,
                             phi_eps_prime, phi_eps_second, phi_inverse, phi_prime)

ns = st.sampled_from([0.0, 0.2, 0.5, 1.3])


def test_phi_values():
    assert phi(Nonlinearity(0.5), 4.0) == pytest.approx(-0.5)
    assert phi(Nonlinearity(0.0), np.e) == pytest.approx(1.0)
    with pytest.raises(NonpositiveArgument):
        phi(Nonlinearity(0.3), np.array([1.0, 0.0]))
    with pytest.raises(OutOfRange):
        Nonlinearity(-0.1)
    with pytest.raises(OutOfRange):
        RegularizedNonlinearity(Nonlinearity(0.1), 0.0)


@given(ns, st.floats(1e-8, 1.0), st.floats(0.0, 100.0))
def test_phi_eps_is_shifted_phi(n, eps, v):
    r = RegularizedNonlinearity(Nonlinearity(n), eps)
    nl = r.base
    want = phi(nl, v + eps) - phi(nl, eps)
    assert phi_eps(r, v) == pytest.approx(want, rel=1e-9, abs=1e-9 * abs(phi(nl, eps)))
    assert phi_eps(r, 0.0) == 0.0


@given(ns, st.floats(1e-6, 1.0), st.floats(0.0, 50.0))
def test_phi_eps_inverse_roundtrip(n, eps, v):
    r = RegularizedNonlinearity(Nonlinearity(n), eps)
    w = phi_eps(r, v)
    # phi_eps loses digits of v when eps^-n dwarfs v^-n; compare in the image
    assert phi_eps(r, phi_eps_inverse(r, w)) == pytest.approx(w, rel=1e-12, abs=1e-12)
    if eps >= 1e-2:
        assert phi_eps_inverse(r, w) == pytest.approx(v, rel=1e-9, abs=1e-12)


@settings(max_examples=40)
@given(ns, st.floats(1e-3, 1.0), st.floats(0.01, 10.0))
def test_derivatives_by_finite_differences(n, eps, v):
    r = RegularizedNonlinearity(Nonlinearity(n), eps)
    d = 1e-6 * v
    fd1 = (phi_eps(r, v + d) - phi_eps(r, v - d)) / (2 * d)
    fd2 = (phi_eps_prime(r, v + d) - phi_eps_prime(r, v - d)) / (2 * d)
    assert phi_eps_prime(r, v) == pytest.approx(fd1, rel=1e-5)
    assert phi_eps_second(r, v) == pytest.approx(fd2, rel=1e-4)
    assert phi_eps_prime(r, v) > 0 and phi_eps_second(r, v) < 0


@given(ns, st.floats(0.01, 10.0))
def test_phi_inverse_and_prime(n, u):
    nl = Nonlinearity(n)
    assert phi_inverse(nl, phi(nl, u)) == pytest.approx(u, rel=1e-10)
    assert phi_prime(nl, u) > 0


def test_negative_argument_errors():
    r = RegularizedNonlinearity(Nonlinearity(0.2), 1e-3)
    for fn in (phi_eps, phi_eps_prime, phi_eps_second):
        with pytest.raises(NegativeArgument):
            fn(r, np.array([-1e-3]))
    with pytest.raises(OutOfRange):
        phi_inverse(Nonlinearity(0.2), 0.5)
    with pytest.raises(OutOfRange):
        phi_eps_inverse(r, 1e9)
