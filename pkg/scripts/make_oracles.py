"""Independent reference values frozen into the unit tests.

k(alpha, s) is evaluated as c(1,s) times the symmetrized principal value
    int_0^inf (2 - (1+z)^alpha - |1-z|^alpha) z^(-1-2s) dz
with mpmath at 30 digits, i.e. (-Delta)^s |x|^alpha at x = 1 without the
Gamma-ratio formula.  Tail integrals are checked against scipy quad.
"""

import json

import mpmath as mp
import numpy as np
from scipy.integrate import quad

mp.mp.dps = 30

PAIRS = [(0.2, 0.3), (0.4, 0.45), (0.3, 0.6), (0.9, 0.55), (0.5, 0.7),
         (1.2, 0.75), (0.25, 0.8), (1.5, 0.85), (0.6, 0.9), (1.7, 0.95)]


def c1s(s):
    return 4 ** s * mp.gamma(0.5 + s) / (mp.sqrt(mp.pi) * abs(mp.gamma(-s)))


def k_oracle(alpha, s):
    """c(1,s) int_0^inf (2 - (1+z)^a - |1-z|^a) z^(-1-2s) dz in three pieces.

    [0, 0.1]: the even binomial series integrated term by term (no cancellation);
    [0.1, Z]: tanh-sinh quadrature; [Z, inf): leading asymptotic terms.
    """
    a, s = mp.mpf(alpha), mp.mpf(s)
    z0, Z = mp.mpf("0.1"), mp.mpf(10) ** 12
    near = -2 * mp.nsum(lambda k: mp.binomial(a, 2 * k) * z0 ** (2 * k - 2 * s) / (2 * k - 2 * s),
                        [1, mp.inf])
    f = lambda z: (2 - (1 + z) ** a - abs(1 - z) ** a) * z ** (-1 - 2 * s)
    mid = mp.quad(f, [z0, 0.5, 1, 2] + [10 ** k for k in range(1, 13)])
    far = 2 * Z ** (-2 * s) / (2 * s) - 2 * Z ** (a - 2 * s) / (2 * s - a)
    return float(c1s(s) * (near + mid + far))


def tail_oracle(x, L, s, A, gamma):
    """int_L^inf A r^-gamma |x - r|^(-1-2s) dr."""
    f = lambda r: A * r ** (-gamma) * abs(x - r) ** (-1 - 2 * s)
    val, _ = quad(f, L, np.inf, epsabs=0, epsrel=1e-13, limit=400)
    return val


if __name__ == "__main__":
    out = {"power": [[a, s, k_oracle(a, s)] for a, s in PAIRS],
           "tail": [[x, 10.0, s, 2.0, g, tail_oracle(x, 10.0, s, 2.0, g)]
                    for x, s, g in [(0.0, 0.8, 1.5), (5.0, 0.8, 1.5), (9.0, 0.6, 2.0),
                                    (-7.0, 0.3, 0.5), (2.0, 0.9, -0.4)]],
           "arctan_mass": float(mp.pi)}
    print(json.dumps(out, indent=1))
