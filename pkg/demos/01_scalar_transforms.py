"""Scalar warm-up: S- and R-transforms of familiar distributions.

Over B = C the operator-valued transforms reduce to the classical ones, so
the Catalan numbers (free Poisson moments) and the semicircle give closed
forms we can read off directly.
"""

import numpy as np

from freeprob import Algebra, MomentData, r_transform, s_transform

C = Algebra.matrix(1)


def moments(values):
    return MomentData(C, [np.full((1,) * (n + 2), v, dtype=complex) for n, v in enumerate(values)])


# Free Poisson with rate 1: moments are Catalan numbers and S(z) = 1/(1 + z).
catalan = [1, 2, 5, 14, 42]
s = s_transform(moments(catalan))
print("S-transform of free Poisson:", np.round(s.jet.scalars(), 12).real)
print("  diagnostics:", {k: f"{v:.1e}" for k, v in s.diagnostics.items()})

# Standard semicircle: only the second free cumulant survives, so R(z) = z.
semicircle = [0, 1, 0, 2, 0]
r = r_transform(moments(semicircle))
print("R-transform of semicircle:  ", np.round(r.jet.scalars(), 12).real)

# The free Poisson law has every free cumulant equal to 1.
print("R-transform of free Poisson:", np.round(r_transform(moments(catalan)).jet.scalars(), 12).real)

# A point mass at 1 has S = R = 1.
print("S, R of the constant 1:     ",
      s_transform(moments([1] * 4)).jet.scalars()[0].real,
      r_transform(moments([1] * 4)).jet.scalars()[0].real)

# N moments give a germ of degree N - 1; S_n already uses mu_{n+1}.
for m2 in (2.0, 3.0):
    s1 = s_transform(moments([2.0, m2])).jet.scalars()[1].real
    print(f"m1 = 2, m2 = {m2}: S_1 = {s1:+.4f}  (1/m1 - m2/m1^3 = {0.5 - m2 / 8:+.4f})")
