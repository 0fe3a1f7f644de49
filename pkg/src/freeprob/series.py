"""Truncated B-valued power series ("jets") and their multilinear terms.

A term of order ``n`` is a dense tensor ``T[o, i_1, ..., i_n]`` meaning

    T(e_{i_1}, ..., e_{i_n}) = sum_o T[o, i_1, ..., i_n] e_o.

Products and compositions use an *ordered* convention: arguments are consumed
left to right in contiguous blocks. The diagonal ``T(b, ..., b)`` of every
ordered result agrees with the usual formulas for symmetric terms, so two
jets represent the same germ exactly when their symmetrized terms agree.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from freeprob.algebra import COND_GATE, Algebra, NotInvertible

MAX_SYM_ORDER = 8
STRIP_TOL = 1e-8
MIN_SCALE = 1.0


class ContractError(ValueError):
    """Arity or algebra mismatch when evaluating or combining terms."""


class FactorizationFailed(ArithmeticError):
    """A term does not factor through its first (or last) argument."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class ResourceLimit(ValueError):
    pass


@functools.lru_cache(maxsize=None)
def compositions(n, k):
    """All tuples of ``k`` positive integers summing to ``n``."""
    if k == 1:
        return ((n,),) if n >= 1 else ()
    out = []
    for first in range(1, n - k + 2):
        out.extend((first,) + rest for rest in compositions(n - first, k - 1))
    return tuple(out)


# -- term-level kernels ------------------------------------------------------


def evaluate_term(t, args):
    """Contract an order-n term against ``n`` coordinate vectors."""
    out = t
    for a in reversed(args):
        out = np.tensordot(out, a, axes=([-1], [0]))
    return out


def term_product(c, f, g):
    """Ordered product ``(x..., y...) -> f(x...) g(y...)``."""
    tmp = np.tensordot(c, f, axes=([0], [0]))  # (q, r, I...)
    return np.tensordot(tmp, g, axes=([0], [0]))  # (r, I..., J...)


def term_substitute(f, inner):
    """``f(inner_1(block_1), ..., inner_k(block_k))`` with contiguous blocks."""
    out = f
    for h in inner:
        out = np.tensordot(out, h, axes=([1], [0]))
    return out


def symmetrize_term(t):
    n = t.ndim - 1
    if n > MAX_SYM_ORDER:
        raise ResourceLimit(f"symmetrization is capped at order {MAX_SYM_ORDER}, got {n}")
    if n <= 1:
        return t.copy()
    acc = np.zeros_like(t)
    for perm in itertools.permutations(range(1, n + 1)):
        acc += t.transpose((0,) + perm)
    return acc / math.factorial(n)


def strip_left_term(c, unit, g):
    """Return ``h`` with ``g(b_1, ..., b_n) = b_1 h(b_2, ..., b_n)`` and the residual."""
    h = np.tensordot(g, unit, axes=([1], [0]))
    recon = np.tensordot(c, h, axes=([1], [0])).swapaxes(0, 1)
    return h, _residual(g, recon)


def strip_right_term(c, unit, g):
    """Return ``h`` with ``g(b_1, ..., b_n) = h(b_1, ..., b_{n-1}) b_n`` and the residual."""
    h = np.tensordot(g, unit, axes=([-1], [0]))
    recon = np.moveaxis(np.tensordot(h, c, axes=([0], [0])), -1, 0)
    return h, _residual(g, recon)


def _residual(a, b):
    if a.size == 0:
        return 0.0
    scale = max(MIN_SCALE, float(np.abs(a).max()))
    return float(np.abs(a - b).max()) / scale


def left_scale_term(c, x, t):
    """``(b...) -> x t(b...)``."""
    return np.tensordot(np.einsum("p,pqr->rq", x, c), t, axes=([1], [0]))


def right_scale_term(c, x, t):
    """``(b...) -> t(b...) x``."""
    return np.tensordot(np.einsum("q,pqr->rp", x, c), t, axes=([1], [0]))


# -- multilinear maps --------------------------------------------------------


class MultilinearMap:
    """A B-valued n-linear map on B, stored as its coefficient tensor."""

    def __init__(self, algebra: Algebra, coeffs):
        t = np.asarray(coeffs, dtype=complex)
        d = algebra.dim
        if t.ndim < 1 or any(s != d for s in t.shape):
            raise ContractError(f"coefficient tensor must have shape (d,)*(n+1) with d={d}, got {t.shape}")
        self.algebra = algebra
        self.coeffs = t

    @property
    def order(self):
        return self.coeffs.ndim - 1

    def __call__(self, *args):
        if len(args) != self.order:
            raise ContractError(f"order-{self.order} map called with {len(args)} arguments")
        vs = [np.asarray(a, dtype=complex) for a in args]
        for v in vs:
            if v.shape != (self.algebra.dim,):
                raise ContractError(f"argument has shape {v.shape}, expected ({self.algebra.dim},)")
        return evaluate_term(self.coeffs, vs)

    def symmetrize(self):
        return MultilinearMap(self.algebra, symmetrize_term(self.coeffs))

    def __repr__(self):
        return f"MultilinearMap(order={self.order}, algebra={self.algebra!r})"

    @classmethod
    def from_function(cls, algebra, n, fn):
        """Tabulate ``fn(e_{i_1}, ..., e_{i_n})`` over all basis tuples."""
        d = algebra.dim
        t = np.zeros((d,) * (n + 1), dtype=complex)
        basis = [algebra.basis(p) for p in range(d)]
        for idx in itertools.product(range(d), repeat=n):
            t[(slice(None),) + idx] = fn(*(basis[i] for i in idx))
        return cls(algebra, t)


# -- jets --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Jet:
    """Truncated germ ``F_0 + sum_{n=1}^N F_n(b, ..., b)``.

    ``terms[n]`` is the order-n coefficient tensor (``terms[0]`` is an element
    of the algebra).
    """

    algebra: Algebra
    terms: tuple = field(default=())

    def __post_init__(self):
        d = self.algebra.dim
        terms = tuple(np.asarray(t, dtype=complex) for t in self.terms)
        if not terms:
            raise ContractError("a jet needs at least its constant term")
        for n, t in enumerate(terms):
            if t.shape != (d,) * (n + 1):
                raise ContractError(f"term {n} has shape {t.shape}, expected {(d,) * (n + 1)}")
        object.__setattr__(self, "terms", terms)

    @property
    def degree(self):
        return len(self.terms) - 1

    def term(self, n):
        return MultilinearMap(self.algebra, self.terms[n])

    def truncate(self, degree):
        if degree > self.degree:
            raise ValueError(f"cannot extend a degree-{self.degree} jet to degree {degree}")
        return Jet(self.algebra, self.terms[: degree + 1])

    def symmetrized(self):
        return Jet(self.algebra, [symmetrize_term(t) for t in self.terms])

    def __call__(self, b):
        return diag_eval(self, b)

    def _check(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        if other.algebra != self.algebra:
            raise ContractError("jets live over different algebras")
        return min(self.degree, other.degree)

    def __add__(self, other):
        n = self._check(other)
        if n is NotImplemented:
            return n
        return Jet(self.algebra, [a + b for a, b in zip(self.terms[: n + 1], other.terms)])

    def __sub__(self, other):
        n = self._check(other)
        if n is NotImplemented:
            return n
        return Jet(self.algebra, [a - b for a, b in zip(self.terms[: n + 1], other.terms)])

    def __neg__(self):
        return Jet(self.algebra, [-t for t in self.terms])

    def __mul__(self, other):
        if isinstance(other, Jet):
            return mul(self, other)
        return Jet(self.algebra, [other * t for t in self.terms])

    def __rmul__(self, other):
        return Jet(self.algebra, [other * t for t in self.terms])

    def max_abs(self):
        return max(float(np.abs(t).max()) for t in self.terms)

    def scalars(self):
        """Coefficient list of a jet over a one-dimensional algebra."""
        if self.algebra.dim != 1:
            raise TypeError("scalars() needs a one-dimensional algebra")
        return [complex(t.reshape(-1)[0]) for t in self.terms]

    def __repr__(self):
        return f"Jet(degree={self.degree}, algebra={self.algebra!r})"

    # constructors

    @classmethod
    def constant(cls, algebra, x, degree):
        d = algebra.dim
        terms = [np.asarray(x, dtype=complex)]
        terms += [np.zeros((d,) * (n + 1), dtype=complex) for n in range(1, degree + 1)]
        return cls(algebra, terms)

    @classmethod
    def unit(cls, algebra, degree):
        return cls.constant(algebra, algebra.unit, degree)

    @classmethod
    def zero(cls, algebra, degree):
        return cls.constant(algebra, algebra.zero(), degree)

    @classmethod
    def identity(cls, algebra, degree):
        """The germ ``b -> b`` (requires degree >= 1)."""
        if degree < 1:
            raise ValueError("the identity jet needs degree >= 1")
        jet = cls.zero(algebra, degree)
        terms = list(jet.terms)
        terms[1] = np.eye(algebra.dim, dtype=complex)
        return cls(algebra, terms)

    @classmethod
    def from_scalars(cls, coeffs, algebra=None):
        alg = algebra if algebra is not None else Algebra.matrix(1)
        if alg.dim != 1:
            raise TypeError("from_scalars needs a one-dimensional algebra")
        return cls(alg, [np.full((1,) * (n + 1), c, dtype=complex) for n, c in enumerate(coeffs)])


def _same_algebra(*jets):
    alg = jets[0].algebra
    for j in jets[1:]:
        if j.algebra != alg:
            raise ContractError("jets live over different algebras")
    return alg


def mul(f: Jet, g: Jet) -> Jet:
    """Ordered product, truncated to the smaller degree."""
    alg = _same_algebra(f, g)
    c = alg.structure
    deg = min(f.degree, g.degree)
    terms = []
    for n in range(deg + 1):
        acc = term_product(c, f.terms[0], g.terms[n])
        for k in range(1, n + 1):
            acc = acc + term_product(c, f.terms[k], g.terms[n - k])
        terms.append(acc)
    return Jet(alg, terms)


def compose(f: Jet, h: Jet, tol=1e-12) -> Jet:
    """Ordered composition ``f o h``; ``h`` must vanish at 0."""
    alg = _same_algebra(f, h)
    if np.abs(h.terms[0]).max() > tol:
        raise ValueError("composition requires the inner jet to vanish at 0")
    deg = min(f.degree, h.degree)
    terms = [f.terms[0].copy()]
    for n in range(1, deg + 1):
        acc = np.zeros((alg.dim,) * (n + 1), dtype=complex)
        for k in range(1, n + 1):
            for parts in compositions(n, k):
                acc += term_substitute(f.terms[k], [h.terms[p] for p in parts])
        terms.append(acc)
    return Jet(alg, terms)


def reciprocal(f: Jet) -> Jet:
    """Jet of ``b -> f(b)^{-1}``."""
    alg = f.algebra
    c = alg.structure
    g0 = alg.inv(f.terms[0])
    left = alg.left_matrix(g0)
    terms = [g0]
    for n in range(1, f.degree + 1):
        acc = term_product(c, f.terms[1], terms[n - 1])
        for k in range(2, n + 1):
            acc = acc + term_product(c, f.terms[k], terms[n - k])
        terms.append(-np.tensordot(left, acc, axes=([1], [0])))
    return Jet(alg, terms)


def linear_inverse(m):
    """Inverse of a d x d coordinate map, gated like :meth:`Algebra.inv`."""
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0 or s[-1] <= COND_GATE * s[0]:
        cond = np.inf if s[-1] == 0 else s[0] / s[-1]
        raise NotInvertible(f"linear term is singular (condition estimate {cond:.3g})", cond)
    return np.linalg.inv(m)


def comp_inverse(f: Jet, tol=1e-12) -> Jet:
    """Compositional inverse of a jet with ``f(0) = 0`` and invertible linear term."""
    alg = f.algebra
    if np.abs(f.terms[0]).max() > tol:
        raise ValueError("compositional inverse requires f(0) = 0")
    if f.degree < 1:
        raise ValueError("compositional inverse requires degree >= 1")
    f1inv = linear_inverse(f.terms[1])
    terms = [alg.zero(), f1inv]
    for n in range(2, f.degree + 1):
        acc = np.zeros((alg.dim,) * (n + 1), dtype=complex)
        for k in range(2, n + 1):
            for parts in compositions(n, k):
                acc += term_substitute(f.terms[k], [terms[p] for p in parts])
        terms.append(-np.tensordot(f1inv, acc, axes=([1], [0])))
    return Jet(alg, terms)


def strip(g: Jet, side="left", tol=STRIP_TOL, return_residual=False):
    """Factor ``g(b) = b h(b)`` (left) or ``g(b) = h(b) b`` (right).

    The returned jet has degree ``g.degree - 1``. Raises
    :class:`FactorizationFailed` if some term does not factor.
    """
    alg = g.algebra
    if np.abs(g.terms[0]).max() > 1e-12:
        raise ValueError("strip requires g(0) = 0")
    if g.degree < 1:
        raise ValueError("strip requires degree >= 1")
    kernel = {"left": strip_left_term, "right": strip_right_term}[side]
    terms = []
    worst = 0.0
    for n in range(1, g.degree + 1):
        h, res = kernel(alg.structure, alg.unit, g.terms[n])
        worst = max(worst, res)
        terms.append(h)
    if worst > tol:
        raise FactorizationFailed(f"{side} factorization residual {worst:.3g} exceeds {tol:g}", worst)
    out = Jet(alg, terms)
    return (out, worst) if return_residual else out


def diag_eval(f: Jet, b):
    b = np.asarray(b, dtype=complex)
    out = f.terms[0].copy()
    for n in range(1, f.degree + 1):
        out = out + evaluate_term(f.terms[n], [b] * n)
    return out


@dataclass
class JetComparison:
    per_degree: list
    max_dev: float
    tol: float
    passed: bool

    def __bool__(self):
        return self.passed


def term_deviation(a, b):
    """Max-coordinate deviation of symmetrized terms, relative when the scale exceeds 1."""
    sa, sb = symmetrize_term(a), symmetrize_term(b)
    scale = max(MIN_SCALE, float(np.abs(sa).max()), float(np.abs(sb).max()))
    return float(np.abs(sa - sb).max()) / scale


def equal(f: Jet, g: Jet, tol=1e-7) -> JetComparison:
    """Compare two jets as germs, degree by degree."""
    _same_algebra(f, g)
    if f.degree != g.degree:
        raise ContractError(f"degree mismatch: {f.degree} vs {g.degree}")
    per = [term_deviation(a, b) for a, b in zip(f.terms, g.terms)]
    worst = max(per)
    return JetComparison(per, worst, tol, bool(worst <= tol))


def random_jet(algebra, degree, seed, radius=1.0, constant=None):
    """Seeded jet with random terms of max coordinate ``radius / n!``."""
    rng = np.random.default_rng(seed)
    d = algebra.dim
    terms = []
    for n in range(degree + 1):
        shape = (d,) * (n + 1)
        t = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        terms.append(t * (radius / math.factorial(n) / np.abs(t).max()))
    if constant is not None:
        terms[0] = np.asarray(constant, dtype=complex)
    return Jet(algebra, terms)
