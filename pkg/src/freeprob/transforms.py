"""S- and R-transforms from moment functions.

Moment data for a variable ``a`` are the multilinear maps

    mu_n(b_1, ..., b_n) = E(b_1 a b_2 a ... b_n a),    n = 1..N.

From these the module builds the germs

    Psi(b) = E((1 - b a)^{-1}) - 1,   Phi(b) = E(a (1 - b a)^{-1}),
    C(b)   = E((1 - b a)^{-1} b),

and solves for ``S`` with ``Psi^{<-1>}(b) = b H(b)``, ``S(b) = (1 + b) H(b)``
and for ``R`` with ``C^{<-1>}(b) = b (1 + R(b) b)^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from freeprob import series
from freeprob.algebra import Algebra
from freeprob.series import FactorizationFailed, Jet, term_product

BIMODULE_TOL = 1e-10
STAGE_TOL = {"inversion": 1e-8, "strip": 1e-8, "residual": 1e-7}


@dataclass
class MomentData:
    """Moment functions ``mu_1..mu_N`` of one variable, as coefficient tensors."""

    algebra: Algebra
    mu: list

    def __post_init__(self):
        d = self.algebra.dim
        self.mu = [np.asarray(t, dtype=complex) for t in self.mu]
        for n, t in enumerate(self.mu, start=1):
            if t.shape != (d,) * (n + 1):
                raise ValueError(f"mu_{n} has shape {t.shape}, expected {(d,) * (n + 1)}")

    @property
    def order(self):
        return len(self.mu)

    def mean(self):
        """``E(a) = mu_1(1)``."""
        return np.tensordot(self.mu[0], self.algebra.unit, axes=([1], [0]))

    def moment(self, n):
        return series.MultilinearMap(self.algebra, self.mu[n - 1])

    def truncate(self, order):
        return MomentData(self.algebra, self.mu[:order])

    def bimodule_residual(self):
        """Largest deviation from ``mu_n(c b_1, ...) = c mu_n(b_1, ...)``."""
        alg = self.algebra
        worst = 0.0
        for t in self.mu:
            _, res = series.strip_left_term(alg.structure, alg.unit, t)
            worst = max(worst, res)
        return worst

    def check(self, tol=BIMODULE_TOL):
        res = self.bimodule_residual()
        if res > tol:
            raise ValueError(f"moment data violate E-bimodularity (residual {res:.3g})")
        return res

    def scaled(self, lam):
        """Moments of ``lam * a`` for a scalar ``lam``."""
        return MomentData(self.algebra, [lam**n * t for n, t in enumerate(self.mu, start=1)])


@dataclass
class TransformResult:
    jet: Jet
    diagnostics: dict = field(default_factory=dict)
    raw: Jet | None = None

    @property
    def ok(self):
        return all(self.diagnostics.get(k, 0.0) <= tol for k, tol in STAGE_TOL.items())


def _contract_first(t, unit):
    return np.tensordot(t, unit, axes=([1], [0]))


def psi_jet(m: MomentData) -> Jet:
    zero = m.algebra.zero()
    return Jet(m.algebra, [zero] + list(m.mu))


def phi_jet(m: MomentData) -> Jet:
    if m.order < 1:
        raise ValueError("phi_jet needs at least the first moment")
    u = m.algebra.unit
    return Jet(m.algebra, [_contract_first(t, u) for t in m.mu])


def c_jet(m: MomentData) -> Jet:
    """Germ of ``E((1 - b a)^{-1} b)``, degree ``N + 1`` from ``N`` moments."""
    alg = m.algebra
    eye = np.eye(alg.dim, dtype=complex)
    terms = [alg.zero(), eye]
    terms += [term_product(alg.structure, t, eye) for t in m.mu]
    return Jet(alg, terms)


def one_plus_b(algebra, degree):
    return Jet.unit(algebra, max(degree, 1)) + Jet.identity(algebra, max(degree, 1))


def _identity_residual(jet):
    ident = Jet.identity(jet.algebra, jet.degree)
    return series.equal(jet, ident, tol=np.inf).max_dev


def s_transform(m: MomentData) -> TransformResult:
    """S-transform to degree ``N - 1`` from moments ``mu_1..mu_N``."""
    alg = m.algebra
    if m.order < 1:
        raise ValueError("s_transform needs at least one moment")
    alg.inv(m.mean())
    psi = psi_jet(m)
    psi_inv = series.comp_inverse(psi)
    inversion = _identity_residual(series.compose(psi, psi_inv))
    h, strip_res = series.strip(psi_inv, "left", return_residual=True)
    s = series.mul(one_plus_b(alg, h.degree), h)

    # H(b) Phi(b H(b)) = 1
    phi = phi_jet(m).truncate(h.degree)
    bh = series.mul(Jet.identity(alg, max(h.degree, 1)), h)
    lhs = series.mul(h, series.compose(phi, bh)) if h.degree >= 1 else series.mul(h, phi)
    residual = series.equal(lhs, Jet.unit(alg, lhs.degree), tol=np.inf).max_dev

    diagnostics = {"inversion": inversion, "strip": strip_res, "residual": residual}
    return TransformResult(s.symmetrized(), diagnostics, raw=s)


def r_transform(m: MomentData, seed=0, n_points=10, radius=0.1) -> TransformResult:
    """R-transform to degree ``N - 1`` from moments ``mu_1..mu_N``.

    Solves ``K(b) R(b) b = b - K(b)`` with ``K = C^{<-1>}`` term by term,
    peeling the trailing and leading arguments off each ordered term.
    """
    alg = m.algebra
    c = alg.structure
    u = alg.unit
    if m.order < 1:
        raise ValueError("r_transform needs at least one moment")
    cj = c_jet(m)
    k = series.comp_inverse(cj)
    inversion = _identity_residual(series.compose(cj, k))
    eye = np.eye(alg.dim, dtype=complex)

    r_terms = []
    strip_res = 0.0
    for n in range(2, k.degree + 1):
        q = -k.terms[n]
        for p in range(2, n):
            q = q - term_product(c, term_product(c, k.terms[p], r_terms[n - 1 - p]), eye)
        inner, res_r = series.strip_right_term(c, u, q)
        rn, res_l = series.strip_left_term(c, u, inner)
        strip_res = max(strip_res, res_r, res_l)
        r_terms.append(rn)
    if strip_res > series.STRIP_TOL:
        raise FactorizationFailed(f"R extraction residual {strip_res:.3g}", strip_res)
    r = Jet(alg, r_terms)

    residual = _r_fixed_point_residual(m, r, seed, n_points, radius)
    diagnostics = {"inversion": inversion, "strip": strip_res, "residual": residual}
    return TransformResult(r.symmetrized(), diagnostics, raw=r)


def r_fixed_point_jet(m: MomentData, r: Jet) -> Jet:
    """``Phi((1 + b R(b))^{-1} b) (1 + b R(b))^{-1} - R(b)`` as a truncated jet."""
    alg = m.algebra
    deg = r.degree
    ident = Jet.identity(alg, max(deg, 1))
    w = series.reciprocal(Jet.unit(alg, max(deg, 1)) + series.mul(ident, r))
    arg = series.mul(w, ident)
    phi = phi_jet(m).truncate(deg)
    if deg >= 1:
        lhs = series.mul(series.compose(phi, arg), w)
    else:
        lhs = series.mul(phi, w)
    return lhs - r


def _r_fixed_point_residual(m, r, seed, n_points, radius):
    res_jet = r_fixed_point_jet(m, r)
    worst = 0.0
    for s in range(n_points):
        b = m.algebra.random((seed, s), radius)
        worst = max(worst, float(np.abs(series.diag_eval(res_jet, b)).max()))
    return worst


def twisted_rhs(sx: Jet, sy: Jet) -> Jet:
    """Germ of ``S_y(b) S_x(S_y(b)^{-1} b S_y(b))``."""
    alg = series._same_algebra(sx, sy)
    deg = min(sx.degree, sy.degree)
    sx, sy = sx.truncate(deg), sy.truncate(deg)
    ident = Jet.identity(alg, max(deg, 1))
    g = series.mul(series.mul(series.reciprocal(sy), ident), sy)
    return series.mul(sy, series.compose(sx, g))


def s_from_model_coeffs(algebra, coeffs):
    """``F(b)^{-1}`` for ``F(b) = alpha_0 + sum alpha_n(b, ..., b)``."""
    return series.reciprocal(Jet(algebra, coeffs))


def psi_from_s(s: Jet) -> Jet:
    """Invert the S pipeline: ``Psi`` from ``S`` (degree ``deg S + 1``)."""
    alg = s.algebra
    deg = s.degree
    h = series.mul(series.reciprocal(one_plus_b(alg, deg)), s)
    psi_inv = series.mul(Jet.identity(alg, deg + 1), _pad(h, deg + 1))
    return series.comp_inverse(psi_inv)


def _pad(jet, degree):
    d = jet.algebra.dim
    extra = [np.zeros((d,) * (n + 1), dtype=complex) for n in range(jet.degree + 1, degree + 1)]
    return Jet(jet.algebra, list(jet.terms) + extra)


@dataclass
class DependenceReport:
    kind: str
    n: int
    perturbed_order: int
    deviation: float
    per_degree: list
    tol: float
    passed: bool


def random_bimodule_tensor(algebra, order, rng, magnitude=1.0):
    """Random ``(b_1, ..., b_n) -> b_1 P(b_2, ..., b_n)`` with max coordinate ``magnitude``."""
    d = algebra.dim
    shape = (d,) * order
    p = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    t = np.tensordot(algebra.structure, p, axes=([1], [0])).swapaxes(0, 1)
    return t * (magnitude / np.abs(t).max())


def dependence_check(m: MomentData, kind, n, seed=0, perturb=None, magnitude=1.0, tol=1e-10):
    """Perturb one moment function and measure the change in transform terms ``0..n``.

    By default ``mu_{n+1}`` is perturbed for ``kind="S"`` and ``mu_{n+2}``
    for ``kind="R"``. ``magnitude=0`` leaves the data unchanged. The
    perturbation is left B-linear in its first slot so the perturbed data are
    still valid moment functions.
    """
    kind = kind.upper()
    transform = {"S": s_transform, "R": r_transform}[kind]
    if perturb is None:
        perturb = n + 1 if kind == "S" else n + 2
    if not 1 <= perturb <= m.order:
        raise ValueError(f"cannot perturb mu_{perturb} with {m.order} moments")
    rng = np.random.default_rng(seed)
    mu = list(m.mu)
    if magnitude:
        mu[perturb - 1] = mu[perturb - 1] + random_bimodule_tensor(m.algebra, perturb, rng, magnitude)
    base = transform(m).jet
    moved = transform(MomentData(m.algebra, mu)).jet
    top = min(n, base.degree)
    per = [series.term_deviation(base.terms[j], moved.terms[j]) for j in range(top + 1)]
    dev = max(per)
    return DependenceReport(kind, n, perturb, dev, per, tol, dev <= tol)
