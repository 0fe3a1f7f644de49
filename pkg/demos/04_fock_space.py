"""A tour of the truncated Fock space.

Vectors are stored sector by sector, operators are composed symbolically,
and the vacuum expectation projects onto the vacuum sector.
"""

import numpy as np

from freeprob import Algebra, fock
from freeprob.fock import L, V, FockConfig, Lambda, Product, Scaled, Sum

alg = Algebra.matrix(2)
cfg = FockConfig(alg, indices=2, depth=6)
b = alg.random(seed=0, radius=1.0)

v = L(1).apply(Lambda(b).apply(fock.vacuum(cfg)))
print("after L_1 b:", v)

alpha = np.eye(alg.dim, dtype=complex)  # alpha(c) = c
back = V(1, 1, alpha).apply(v)
print("V_{1,1}(id) L_1 b Omega = b Omega:", np.allclose(fock.expectation(back), b))

# All six families of creation/annihilation relations, on random vectors.
dev = fock.relation_deviations(cfg, seed=0, trials=3)
print("relation deviations:", {k: f"{v:.0e}" for k, v in dev.items()})

# Freeness: centered alternating words in x and y have zero expectation.
x = fock.random_model(alg, 1, "s", 2, seed=5)
y = fock.random_model(alg, 2, "r", 2, seed=6)
print("freeness, max |Ec| over 10 words:", f"{fock.freeness_check([x, y], trials=10).max_dev:.1e}")

# ...whereas two variables on the same letter are correlated.
z = fock.random_model(alg, 1, "s", 2, seed=7)
big = FockConfig(alg, 2, 9)
xc = Sum([x, Scaled(-1.0, Lambda(fock.evaluate(x, big)))])
zc = Sum([z, Scaled(-1.0, Lambda(fock.evaluate(z, big)))])
print("same letter, |Ec(x_c z_c)|:", f"{np.abs(fock.evaluate(Product([xc, zc]), big)).max():.2e}")

# Geometric states: X omega_b = F(b)(1 + L_1) omega_b below the truncation level.
rep = fock.geometric_state_check(x, alg.random(1, 0.2))
print("geometric state identity:", f"{rep.max_dev:.1e}", "(levels <=", rep.details["levels"], ")")
