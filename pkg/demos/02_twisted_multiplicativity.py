"""The product of two free variables over M_2(C).

Two random model variables are placed on different letters of a full Fock
space, which makes them free with amalgamation over B = M_2(C). We tabulate
the moment functions of their product, take its S-transform, and compare it
with the twisted product formula

    S_xy(b) = S_y(b) S_x(S_y(b)^{-1} b S_y(b)).

The naive product S_x(b) S_y(b) is printed alongside: it is visibly wrong
when B is not commutative.
"""

from freeprob import Algebra, fock, series, transforms
from freeprob.fock import FockConfig
from freeprob.harness import product_moments

alg = Algebra.matrix(2)
order = 3  # compare S-jets up to degree 2

x = fock.random_model(alg, 1, "s", order - 1, seed=1)
y = fock.random_model(alg, 2, "s", order - 1, seed=2)
cfg = FockConfig(alg, indices=2, depth=2 * order + 2)

mx, my = x.moments(order, cfg), y.moments(order, cfg)
mxy = product_moments(x, y, order, cfg)

sx = transforms.s_transform(mx).jet
sy = transforms.s_transform(my).jet
sxy = transforms.s_transform(mxy).jet

twisted = series.equal(sxy, transforms.twisted_rhs(sx, sy))
plain = series.equal(sxy, series.mul(sx, sy))
print("per-degree deviation, twisted formula:", [f"{v:.1e}" for v in twisted.per_degree])
print("per-degree deviation, plain product:  ", [f"{v:.1e}" for v in plain.per_degree])

# The S-transform of a model variable is the reciprocal of its coefficient series.
closed = transforms.s_from_model_coeffs(alg, x.coeffs)
print("S_x versus 1/F_x:", f"{series.equal(sx, closed).max_dev:.1e}")

# On a commutative algebra the twist disappears.
diag = Algebra.diagonal(3)
u = fock.random_model(diag, 1, "s", 2, seed=3)
v = fock.random_model(diag, 2, "s", 2, seed=4)
c = FockConfig(diag, 2, 8)
su, sv = transforms.s_transform(u.moments(3, c)).jet, transforms.s_transform(v.moments(3, c)).jet
suv = transforms.s_transform(product_moments(u, v, 3, c)).jet
print("diagonal(3): S_uv vs S_u S_v:", f"{series.equal(suv, series.mul(su, sv)).max_dev:.1e}")
