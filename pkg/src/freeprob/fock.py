"""Truncated full Fock space over B and the model random variables living on it.

A vector is stored sector by sector. The sector keyed by a word
``w = (w_1, ..., w_j)`` of letters from the index set holds a tensor
``T[s_1, ..., s_j, t]``, meaning

    sum T[s, t] (e_{s_1} delta_{w_1}) (x) ... (x) (e_{s_j} delta_{w_j}) (x) e_t,

and the empty word holds the vacuum component ``b_0 Omega``. Vectors may carry
leading batch axes; operators act on the trailing axes only. This is how
moment functions are tabulated over all basis tuples in one sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from freeprob import series
from freeprob.algebra import Algebra
from freeprob.series import Jet
from freeprob.transforms import MomentData

PRUNE_TOL = 1e-15


class DepthExceeded(RuntimeError):
    """A creation operator was applied at the maximal level in strict mode."""


@dataclass(frozen=True)
class FockConfig:
    algebra: Algebra
    indices: int = 2
    depth: int = 8
    mode: str = "strict"

    def __post_init__(self):
        if self.indices < 1:
            raise ValueError("need at least one index")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.mode not in ("strict", "lossy"):
            raise ValueError(f"mode must be 'strict' or 'lossy', got {self.mode!r}")

    @property
    def letters(self):
        return tuple(range(1, self.indices + 1))

    def with_depth(self, depth):
        return FockConfig(self.algebra, self.indices, depth, self.mode)

    def with_mode(self, mode):
        return FockConfig(self.algebra, self.indices, self.depth, mode)


class FockVector:
    """Immutable sector-decomposed vector of the truncated Fock space."""

    def __init__(self, config: FockConfig, sectors=None, batch_shape=()):
        self.config = config
        self.batch_shape = tuple(batch_shape)
        self.sectors = dict(sectors or {})

    @property
    def algebra(self):
        return self.config.algebra

    def sector(self, word):
        word = tuple(word)
        if word in self.sectors:
            return self.sectors[word]
        d = self.algebra.dim
        return np.zeros(self.batch_shape + (d,) * (len(word) + 1), dtype=complex)

    def levels(self):
        return sorted({len(w) for w in self.sectors})

    def max_level(self):
        return max((len(w) for w in self.sectors), default=-1)

    def __add__(self, other):
        return combine([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return combine([(1.0, self), (-1.0, other)])

    def scale(self, c):
        return FockVector(self.config, {w: c * t for w, t in self.sectors.items()}, self.batch_shape)

    def prune(self, tol=PRUNE_TOL):
        keep = {w: t for w, t in self.sectors.items() if t.size and np.abs(t).max() > tol}
        return FockVector(self.config, keep, self.batch_shape)

    def restrict(self, max_level):
        keep = {w: t for w, t in self.sectors.items() if len(w) <= max_level}
        return FockVector(self.config, keep, self.batch_shape)

    def __repr__(self):
        return f"FockVector(sectors={len(self.sectors)}, levels={self.levels()}, batch={self.batch_shape})"


def combine(pairs):
    first = pairs[0][1]
    out = {}
    for c, v in pairs:
        if v.batch_shape != first.batch_shape:
            raise ValueError("cannot combine vectors with different batch shapes")
        for w, t in v.sectors.items():
            out[w] = out[w] + c * t if w in out else c * t
    return FockVector(first.config, out, first.batch_shape).prune()


def max_abs_diff(v: FockVector, w: FockVector, max_level=None):
    worst = 0.0
    for word in set(v.sectors) | set(w.sectors):
        if max_level is not None and len(word) > max_level:
            continue
        worst = max(worst, float(np.abs(v.sector(word) - w.sector(word)).max()))
    return worst


def vacuum(config: FockConfig, b0=None) -> FockVector:
    alg = config.algebra
    tail = alg.one() if b0 is None else np.asarray(b0, dtype=complex)
    return FockVector(config, {(): tail})


def expectation(v: FockVector):
    """Vacuum component ``P(v)``."""
    return v.sector(()).copy()


def random_vector(config: FockConfig, seed, max_level=3, density=0.7) -> FockVector:
    """Seeded vector with random sectors up to ``max_level`` (inclusive)."""
    import itertools

    rng = np.random.default_rng(seed)
    d = config.algebra.dim
    sectors = {}
    for j in range(min(max_level, config.depth) + 1):
        for word in itertools.product(config.letters, repeat=j):
            if j and rng.random() > density:
                continue
            shape = (d,) * (j + 1)
            sectors[word] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return FockVector(config, sectors)


# -- operators ---------------------------------------------------------------


class Operator:
    """Symbolic operator on the truncated Fock space."""

    #: largest possible decrease of the level of any sector
    drop = 0

    def apply(self, v: FockVector) -> FockVector:
        raise NotImplementedError

    def __call__(self, v):
        return self.apply(v)

    def __matmul__(self, other):
        return Product([self, other])

    def __add__(self, other):
        return Sum([self, other])

    def __neg__(self):
        return Scaled(-1.0, self)

    def __sub__(self, other):
        return Sum([self, Scaled(-1.0, other)])

    def __rmul__(self, c):
        return Scaled(c, self)

    def steps(self):
        """Elementary factors applied right to left."""
        return [self]


def _map(v, fn):
    out = {}
    for w, t in v.sectors.items():
        res = fn(w, t)
        if res is None:
            continue
        nw, nt = res
        out[nw] = out[nw] + nt if nw in out else nt
    return FockVector(v.config, out, v.batch_shape)


@dataclass(eq=False)
class Lambda(Operator):
    """Left action of B on the first slot (or on the vacuum component)."""

    b: np.ndarray

    def apply(self, v):
        nb = len(v.batch_shape)
        lm = v.algebra.left_matrix(np.asarray(self.b, dtype=complex))
        return _map(v, lambda w, t: (w, np.moveaxis(np.tensordot(lm, t, axes=([1], [nb])), 0, nb)))


@dataclass(eq=False)
class Rho(Operator):
    """Right action of B on the tail."""

    b: np.ndarray

    def apply(self, v):
        rm = v.algebra.right_matrix(np.asarray(self.b, dtype=complex))
        return _map(v, lambda w, t: (w, np.tensordot(t, rm, axes=([-1], [1]))))


class LambdaBasis(Operator):
    """Left multiplication by every basis element at once; adds a leading batch axis."""

    def apply(self, v):
        nb = len(v.batch_shape)
        c = v.algebra.structure
        out = {w: np.moveaxis(np.tensordot(c, t, axes=([1], [nb])), 1, 1 + nb) for w, t in v.sectors.items()}
        return FockVector(v.config, out, (v.algebra.dim,) + v.batch_shape)


def _create(v, letter, w, t, nb):
    cfg = v.config
    if len(w) + 1 > cfg.depth:
        if cfg.mode == "lossy" or np.abs(t).max() <= PRUNE_TOL:
            return None
        raise DepthExceeded(f"creation from level {len(w)} exceeds depth {cfg.depth}")
    u = v.algebra.unit
    nt = np.expand_dims(t, nb) * u.reshape((-1,) + (1,) * (t.ndim - nb))
    return (letter,) + w, nt


@dataclass(eq=False)
class L(Operator):
    """Creation: prepend ``delta_i (x)``."""

    i: int
    drop = -1

    def apply(self, v):
        nb = len(v.batch_shape)
        return _map(v, lambda w, t: _create(v, self.i, w, t, nb))


def _annihilate(v, i, n, alpha, w, t, nb, create):
    if len(w) < n or any(x != i for x in w[:n]):
        return None
    x = np.tensordot(alpha, t, axes=(list(range(1, n + 1)), list(range(nb, nb + n))))
    # x has axes (o, batch..., rest...)
    if create:
        return (i,) + w[n:], np.moveaxis(x, 0, nb)
    c = v.algebra.structure
    nt = np.tensordot(c, x, axes=([0, 1], [0, 1 + nb]))
    return w[n:], np.moveaxis(nt, 0, nb)


@dataclass(eq=False)
class V(Operator):
    """n-fold annihilation ``V_{i,n}(alpha_n)``; ``V_{i,0}(alpha_0) = lambda(alpha_0)``."""

    i: int
    n: int
    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=complex)
        if self.alpha.ndim != self.n + 1:
            raise ValueError(f"V_{{i,{self.n}}} needs an order-{self.n} coefficient tensor")
        self.drop = self.n

    def apply(self, v):
        if self.n == 0:
            return Lambda(self.alpha).apply(v)
        nb = len(v.batch_shape)
        return _map(v, lambda w, t: _annihilate(v, self.i, self.n, self.alpha, w, t, nb, False))


@dataclass(eq=False)
class W(Operator):
    """n-fold annihilation followed by one creation; ``W_{i,0}(alpha_0) = alpha_0 L_i``."""

    i: int
    n: int
    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=complex)
        if self.alpha.ndim != self.n + 1:
            raise ValueError(f"W_{{i,{self.n}}} needs an order-{self.n} coefficient tensor")
        self.drop = self.n - 1

    def apply(self, v):
        if self.n == 0:
            return Lambda(self.alpha).apply(L(self.i).apply(v))
        nb = len(v.batch_shape)
        return _map(v, lambda w, t: _annihilate(v, self.i, self.n, self.alpha, w, t, nb, True))


class Sum(Operator):
    def __init__(self, terms):
        self.terms = list(terms)
        self.drop = max((t.drop for t in self.terms), default=0)

    def apply(self, v):
        if not self.terms:
            return FockVector(v.config, {}, v.batch_shape)
        return combine([(1.0, t.apply(v)) for t in self.terms])


class Scaled(Operator):
    def __init__(self, c, op):
        self.c = c
        self.op = op
        self.drop = op.drop

    def apply(self, v):
        return self.op.apply(v).scale(self.c)


class Product(Operator):
    """Composition ``factors[0] factors[1] ...``; the last factor acts first."""

    def __init__(self, factors):
        self.factors = list(factors)
        self.drop = sum(f.drop for f in self.factors)

    def apply(self, v):
        for f in reversed(self.factors):
            v = f.apply(v)
        return v

    def steps(self):
        out = []
        for f in self.factors:
            out.extend(f.steps())
        return out


def apply(op: Operator, v: FockVector) -> FockVector:
    return op.apply(v)


# -- model random variables --------------------------------------------------


@dataclass(eq=False)
class RvModel(Operator):
    """Model variable on letter ``index``.

    ``flavor="s"``: ``sum_{n=0}^N (V_{i,n}(alpha_n) + W_{i,n}(alpha_n))``.
    ``flavor="r"``: ``L_i + sum_{n=0}^N V_{i,n}(alpha_n)``.
    """

    algebra: Algebra
    index: int
    flavor: str
    coeffs: list = field(default_factory=list)

    def __post_init__(self):
        if self.flavor not in ("s", "r"):
            raise ValueError(f"flavor must be 's' or 'r', got {self.flavor!r}")
        d = self.algebra.dim
        self.coeffs = [np.asarray(a, dtype=complex) for a in self.coeffs]
        for n, a in enumerate(self.coeffs):
            if a.shape != (d,) * (n + 1):
                raise ValueError(f"alpha_{n} has shape {a.shape}, expected {(d,) * (n + 1)}")
        if self.flavor == "s" and self.coeffs:
            self.algebra.inv(self.coeffs[0])
        self._op = self._build()
        self.drop = self._op.drop

    @property
    def N(self):
        return len(self.coeffs) - 1

    def _build(self):
        i = self.index
        if self.flavor == "s":
            terms = []
            for n, a in enumerate(self.coeffs):
                terms += [V(i, n, a), W(i, n, a)]
        else:
            terms = [L(i)] + [V(i, n, a) for n, a in enumerate(self.coeffs)]
        return Sum(terms)

    def apply(self, v):
        return self._op.apply(v)

    def coefficient_jet(self):
        """``F(b) = alpha_0 + sum_n alpha_n(b, ..., b)``."""
        return Jet(self.algebra, self.coeffs)

    def F(self, b):
        return series.diag_eval(self.coefficient_jet(), b)

    def partial(self, n):
        """Model with coefficients ``alpha_0..alpha_{n-1}``."""
        return RvModel(self.algebra, self.index, self.flavor, self.coeffs[:n])

    def moments(self, order, config=None):
        cfg = config or default_config(self.algebra, order)
        return MomentData(self.algebra, [moment_tensor([self] * m, cfg) for m in range(1, order + 1)])


def default_config(algebra, order, indices=2, mode="strict"):
    return FockConfig(algebra, indices, 2 * order + 2, mode)


def _ops_of(z):
    if isinstance(z, (list, tuple)):
        return Product(list(z))
    return z


def _pruned_run(v, steps, prune=True):
    """Apply ``steps`` right to left, dropping sectors that cannot reach the vacuum."""
    # before[k]: largest level decrease still available from steps[0..k-1]
    before = [0] * (len(steps) + 1)
    for k in range(1, len(steps) + 1):
        before[k] = before[k - 1] + steps[k - 1].drop
    for k in range(len(steps) - 1, -1, -1):
        v = steps[k].apply(v)
        if not prune:
            continue
        cap = max(before[k], 0)
        v = FockVector(v.config, {w: t for w, t in v.sectors.items() if len(w) <= cap}, v.batch_shape)
    return v


def moment_tensor(factors, config: FockConfig, skip_first=False, prune=True):
    """Tabulate ``Ec(e_{i_1} Z_1 e_{i_2} Z_2 ... e_{i_m} Z_m)`` as ``T[o, i_1, ..., i_m]``.

    Each ``Z_t`` is an operator or a sequence of operators (their product).
    With ``skip_first`` the leading coefficient is the unit and the result
    has one slot fewer. ``prune=False`` keeps every sector (slow; for checks).
    """
    steps = []
    for t, z in enumerate(factors):
        if not (skip_first and t == 0):
            steps.append(LambdaBasis())
        steps.extend(_ops_of(z).steps())
    v = _pruned_run(vacuum(config), steps, prune)
    tail = v.sector(())
    return np.moveaxis(tail, -1, 0)


def alternating_moment(factors, bs, config: FockConfig, prune=True):
    """``Ec(b_1 Z_1 b_2 Z_2 ... b_m Z_m)`` for concrete coefficients."""
    if len(factors) != len(bs):
        raise ValueError("need one coefficient per factor")
    steps = []
    for z, b in zip(factors, bs):
        steps.append(Lambda(b))
        steps.extend(_ops_of(z).steps())
    return expectation(_pruned_run(vacuum(config), steps, prune))


def evaluate(op: Operator, config: FockConfig, prune=True):
    """``Ec(op)``, evaluated with vacuum-reachability pruning."""
    return expectation(_pruned_run(vacuum(config), op.steps(), prune))


# -- fitting -----------------------------------------------------------------


def _right_transform(t, m):
    """``t(x_1, ..., x_n) -> t(x_1 a, ..., x_n a)`` where ``m`` is right multiplication by ``a``."""
    for k in range(1, t.ndim):
        t = np.moveaxis(np.tensordot(t, m, axes=([k], [0])), -1, k)
    return t


def fit_s_model(m: MomentData, index=1, config: FockConfig | None = None) -> RvModel:
    """Model ``sum_n (V_{i,n} + W_{i,n})`` whose first ``m.order`` moments match ``m``."""
    alg = m.algebra
    big_n = m.order - 1
    cfg = config or default_config(alg, m.order)
    if cfg.depth < big_n + 2:
        raise ValueError(f"depth {cfg.depth} too small; need at least {big_n + 2}")
    a0 = m.mean()
    a0inv = alg.inv(a0)
    rinv = alg.right_matrix(a0inv)
    model = RvModel(alg, index, "s", [a0])
    u = alg.unit
    for n in range(1, big_n + 1):
        target = np.tensordot(m.mu[n], u, axes=([1], [0]))
        current = moment_tensor([model] * (n + 1), cfg, skip_first=True)
        alpha = _right_transform(target - current, rinv)
        model = RvModel(alg, index, "s", model.coeffs + [alpha])
    return model


def fit_r_model(m: MomentData, index=1, config: FockConfig | None = None) -> RvModel:
    """Model ``L_i + sum_n V_{i,n}`` whose first ``m.order`` moments match ``m``."""
    alg = m.algebra
    big_n = m.order - 1
    cfg = config or default_config(alg, m.order)
    if cfg.depth < big_n + 2:
        raise ValueError(f"depth {cfg.depth} too small; need at least {big_n + 2}")
    u = alg.unit
    model = RvModel(alg, index, "r", [])
    for n in range(0, big_n + 1):
        target = np.tensordot(m.mu[n], u, axes=([1], [0]))
        current = moment_tensor([model] * (n + 1), cfg, skip_first=True)
        model = RvModel(alg, index, "r", model.coeffs + [target - current])
    return model


# -- checks ------------------------------------------------------------------


@dataclass
class CheckReport:
    name: str
    max_dev: float
    tol: float
    passed: bool
    details: dict = field(default_factory=dict)


def _random_factor(model, rng, radius=0.5):
    """Random element of the algebra generated by ``B`` and ``model``, centered."""
    alg = model.algebra
    k = int(rng.integers(1, 3))
    ops = [Lambda(alg.random(int(rng.integers(2**31)), radius) + alg.unit)]
    for _ in range(k):
        ops += [model, Lambda(alg.random(int(rng.integers(2**31)), radius) + alg.unit)]
    return Product(ops)


def freeness_check(models, trials=20, seed=0, max_length=5, config=None, tol=1e-10):
    """Expectations of random centered alternating products of model elements."""
    if len({mdl.index for mdl in models}) != len(models):
        raise ValueError("models must sit on distinct indices")
    alg = models[0].algebra
    n_idx = max(mdl.index for mdl in models)
    cfg = config or FockConfig(alg, n_idx, 4 * max_length + 1)
    rng = np.random.default_rng(seed)
    worst = 0.0
    lengths = []
    for _ in range(trials):
        p = int(rng.integers(1, max_length + 1)) if len(models) > 1 else 1
        word = []
        prev = None
        for _ in range(p):
            choices = [k for k in range(len(models)) if k != prev]
            k = choices[int(rng.integers(len(choices)))]
            prev = k
            a = _random_factor(models[k], rng)
            mean = evaluate(a, cfg)
            word.append(Sum([a, Scaled(-1.0, Lambda(mean))]))
        val = evaluate(Product(word), cfg)
        worst = max(worst, float(np.abs(val).max()))
        lengths.append(p)
    return CheckReport("freeness", worst, tol, worst <= tol, {"lengths": lengths})


def omega_state(config: FockConfig, b, letter=1):
    """Truncated ``Omega + sum_{k<=J} (b delta_letter)^{(x)k} (x) 1``."""
    alg = config.algebra
    b = np.asarray(b, dtype=complex)
    sectors = {(): alg.one()}
    t = alg.one()
    for k in range(1, config.depth + 1):
        t = np.multiply.outer(b, t)
        sectors[(letter,) * k] = t
    return FockVector(config, sectors)


def sigma_state(config: FockConfig, b, g):
    """Truncated ``(1 - Z_b)^{-1} Omega`` with ``Z_b = b L_2 + b g^{-1} L_1 g + b g^{-1} L_1 g L_2``."""
    alg = config.algebra
    ginv = alg.inv(g)
    bg = alg.mul(b, ginv)
    z = Sum(
        [
            Product([Lambda(b), L(2)]),
            Product([Lambda(bg), L(1), Lambda(g)]),
            Product([Lambda(bg), L(1), Lambda(g), L(2)]),
        ]
    )
    term = vacuum(config)
    total = term
    for _ in range(config.depth):
        term = z.apply(term)
        if not term.sectors:
            break
        total = total + term
    return total


def geometric_state_check(model: RvModel, b, config: FockConfig | None = None, tol=1e-9):
    """Check ``X omega_b = F(b)(1 + L_1) omega_b`` (S-model) or ``(L_1 + F(b)) omega_b`` (R-model)."""
    alg = model.algebra
    cfg = (config or FockConfig(alg, 2, 6, "lossy")).with_mode("lossy")
    omega = omega_state(cfg, b, model.index)
    lhs = model.apply(omega)
    fb = model.F(b)
    if model.flavor == "s":
        rhs = Lambda(fb).apply(omega + L(model.index).apply(omega))
    else:
        rhs = L(model.index).apply(omega) + Lambda(fb).apply(omega)
    top = cfg.depth - max(model.N, 1)
    dev = max_abs_diff(lhs, rhs, max_level=top)
    return CheckReport("geometric", dev, tol, dev <= tol, {"levels": top})


def geometric_product_check(x: RvModel, y: RvModel, b, config: FockConfig | None = None, tol=1e-9):
    """Check ``X Y sigma_b = F(b')(1 + L_1) G(b)(1 + L_2) sigma_b`` with ``b' = G b G^{-1}``."""
    if (x.index, y.index) != (1, 2) or x.flavor != "s" or y.flavor != "s":
        raise ValueError("product check needs S-models on letters 1 and 2")
    alg = x.algebra
    cfg = (config or FockConfig(alg, 2, max(x.N + y.N + 2, 4), "lossy")).with_mode("lossy")
    g = y.F(b)
    sigma = sigma_state(cfg, b, g)
    lhs = x.apply(y.apply(sigma))
    bprime = alg.prod(g, b, alg.inv(g))
    one_l2 = sigma + L(2).apply(sigma)
    mid = Lambda(g).apply(one_l2)
    rhs = Lambda(x.F(bprime)).apply(mid + L(1).apply(mid))
    top = cfg.depth - max(x.N + y.N, 1)
    dev = max_abs_diff(lhs, rhs, max_level=top)
    return CheckReport("geometric-product", dev, tol, dev <= tol, {"levels": top})


def random_model(algebra, index, flavor, N, seed, radius=0.3):
    """Seeded model: ``alpha_0 = 1 + r`` with ``|r| <= radius``, ``alpha_n`` of size ``1/(n! d)``."""
    rng = np.random.default_rng(seed)
    d = algebra.dim
    coeffs = [algebra.unit + algebra.random(int(rng.integers(2**63)), radius)]
    for n in range(1, N + 1):
        shape = (d,) * (n + 1)
        t = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        coeffs.append(t * (1.0 / (math.factorial(n) * d) / np.abs(t).max()))
    return RvModel(algebra, index, flavor, coeffs)


# -- operator relations ------------------------------------------------------


def _first_slot_left(t, b, alg):
    """``(b_1, ...) -> t(b b_1, ...)``."""
    lm = alg.left_matrix(b)
    return np.moveaxis(np.tensordot(t, lm, axes=([1], [0])), -1, 1)


def _random_tensor(rng, d, n):
    shape = (d,) * (n + 1)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def relation_deviations(config: FockConfig, seed=0, trials=10, orders=(1, 2)):
    """Largest deviation in each family of the creation/annihilation relations.

    Keys ``"i"``..``"vi"``; each value is the max over ``trials`` random vectors
    and all ``n, m`` in ``orders``.
    """
    alg = config.algebra
    c = alg.structure
    d = alg.dim
    eye = np.eye(d, dtype=complex)
    rng = np.random.default_rng(seed)
    dev = dict.fromkeys(("i", "ii", "iii", "iv", "v", "vi"), 0.0)
    i, other = 1, 2 if config.indices > 1 else None

    def check(key, lhs, rhs, v):
        dev[key] = max(dev[key], max_abs_diff(lhs.apply(v), rhs.apply(v)))

    for trial in range(trials):
        v = random_vector(config, int(rng.integers(2**31)), max_level=min(4, config.depth - 1))
        b = alg.random(int(rng.integers(2**31)), 1.0)
        for n in orders:
            a = _random_tensor(rng, d, n)
            at = _first_slot_left(a, b, alg)
            check("i", V(i, n, a) @ Lambda(b), V(i, n, at), v)
            check("i", W(i, n, a) @ Lambda(b), W(i, n, at), v)

            a_u = np.tensordot(a, alg.unit, axes=([1], [0]))
            if n == 1:
                check("ii", V(i, 1, a) @ L(i), Lambda(a_u), v)
                check("ii", W(i, 1, a) @ L(i), Lambda(a_u) @ L(i), v)
            else:
                check("ii", V(i, n, a) @ L(i), V(i, n - 1, a_u), v)
                check("ii", W(i, n, a) @ L(i), W(i, n - 1, a_u), v)

            check("v", Lambda(b) @ V(i, n, a), V(i, n, series.left_scale_term(c, b, a)), v)

            if other is not None:
                zero = Sum([])
                check("vi", V(i, n, a) @ L(other), zero, v)
                check("vi", W(i, n, a) @ L(other), zero, v)

            for m in orders:
                beta = _random_tensor(rng, d, m)
                g3 = series.term_substitute(a, [series.term_product(c, beta, eye)] + [eye] * (n - 1))
                check("iii", V(i, n, a) @ V(i, m, beta), V(i, n + m, g3), v)
                check("iii", W(i, n, a) @ V(i, m, beta), W(i, n + m, g3), v)
                g4 = series.term_substitute(a, [beta] + [eye] * (n - 1))
                check("iv", V(i, n, a) @ W(i, m, beta), V(i, n + m - 1, g4), v)
                check("iv", W(i, n, a) @ W(i, m, beta), W(i, n + m - 1, g4), v)
    return dev


def bimodularity_deviation(models, config: FockConfig, seed=0, trials=10):
    """Max of ``|Ec(b_1 Z b_2) - b_1 Ec(Z) b_2|`` over random model words ``Z``."""
    alg = config.algebra
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        length = int(rng.integers(1, 4))
        ops = []
        for k in range(length):
            ops.append(models[int(rng.integers(len(models)))])
            if k < length - 1:
                ops.append(Lambda(alg.random(int(rng.integers(2**31)), 1.0)))
        z = Product(ops)
        b1 = alg.random(int(rng.integers(2**31)), 1.0)
        b2 = alg.random(int(rng.integers(2**31)), 1.0)
        lhs = evaluate(Product([Lambda(b1), z, Lambda(b2)]), config)
        rhs = alg.prod(b1, evaluate(z, config), b2)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def rho_commutation_deviation(model, config: FockConfig, seed=0, trials=10):
    """Max of ``|X rho(b) v - rho(b) X v|`` over random vectors ``v``."""
    alg = config.algebra
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        v = random_vector(config, int(rng.integers(2**31)), max_level=min(3, config.depth - 1))
        b = alg.random(int(rng.integers(2**31)), 1.0)
        lhs = model.apply(Rho(b).apply(v))
        rhs = Rho(b).apply(model.apply(v))
        worst = max(worst, max_abs_diff(lhs, rhs))
    return worst
