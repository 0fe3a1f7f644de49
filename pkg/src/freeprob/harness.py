"""End-to-end scenarios: twisted multiplicativity, additivity, commutative
reduction, a noncommutative witness, and the aggregated self-test."""

from __future__ import annotations

import math
import time
import traceback
from dataclasses import asdict, dataclass, field

import numpy as np

from freeprob import fock, series, transforms
from freeprob.algebra import Algebra, AlgebraValidationError
from freeprob.fock import FockConfig, RvModel, Sum
from freeprob.series import Jet
from freeprob.transforms import MomentData

KINDS = ("verify-s", "verify-r", "commutative", "counterexample", "selftest")
WITNESS_GAP = 1e-3


@dataclass
class ScenarioConfig:
    kind: str
    algebra: str | dict = "matrix:2"
    order: int = 3
    seed: int = 0
    tol: float | None = None
    trials: int = 20
    x: MomentData | None = None
    y: MomentData | None = None
    forced_commutative: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario {self.kind!r}")
        if self.kind != "selftest" and not 1 <= self.order <= 4:
            raise ValueError("compare order must be in 1..4")

    @property
    def tolerance(self):
        if self.tol is not None:
            return self.tol
        return 1e-8 if self.kind == "verify-r" else 1e-7

    def build_algebra(self):
        if self.x is not None:
            return self.x.algebra
        return Algebra.from_spec(self.algebra)

    def echo(self):
        alg = self.algebra if isinstance(self.algebra, str) else dict(self.algebra)
        return {
            "kind": self.kind,
            "algebra": alg,
            "order": self.order,
            "seed": self.seed,
            "tol": self.tolerance,
            "trials": self.trials,
            "from_files": self.x is not None,
        }


@dataclass
class Report:
    scenario: dict
    order: int
    per_degree: list
    max_abs_dev: float
    passed: bool
    seeds: list
    runtime_ms: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self):
        out = asdict(self)
        out["pass"] = out.pop("passed")
        out["seed"] = self.seeds[0] if self.seeds else None
        return _jsonable(out)

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        line = f"{status} {self.scenario.get('kind', '?')}: max deviation {self.max_abs_dev:.3e}"
        if self.error:
            line += f" ({self.error})"
        return line


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


# -- instances ---------------------------------------------------------------


def _diagonal_projector(algebra):
    """Coordinates of the diagonal subalgebra of ``matrix(k)``."""
    k = algebra.param
    mask = np.zeros(algebra.dim, dtype=bool)
    mask[[i * k + i for i in range(k)]] = True
    return mask


def _project_diagonal(model):
    mask = _diagonal_projector(model.algebra)
    coeffs = []
    for a in model.coeffs:
        a = a.copy()
        for ax in range(a.ndim):
            idx = [slice(None)] * a.ndim
            idx[ax] = ~mask
            a[tuple(idx)] = 0.0
        coeffs.append(a)
    return RvModel(model.algebra, model.index, model.flavor, coeffs)


def generate_models(kind, algebra, N, seed, forced_commutative=False):
    flavor = {"s": "s", "r": "r", "verify-s": "s", "verify-r": "r"}.get(kind, "s")
    x = fock.random_model(algebra, 1, flavor, N, [seed, 1])
    y = fock.random_model(algebra, 2, flavor, N, [seed, 2])
    if forced_commutative:
        if algebra.kind != "matrix":
            raise ValueError("forced-commutative instances need a matrix algebra")
        x, y = _project_diagonal(x), _project_diagonal(y)
    return x, y


def generate_instance(kind, algebra, N, seed, forced_commutative=False):
    """Moment data (orders ``1..N+1``) of a random pair of model variables."""
    if N > 5:
        raise ValueError("instance generation is capped at N = 5")
    x, y = generate_models(kind, algebra, N, seed, forced_commutative)
    cfg = fock.default_config(algebra, N + 1)
    return x.moments(N + 1, cfg), y.moments(N + 1, cfg)


def product_moments(x: RvModel, y: RvModel, order, config: FockConfig):
    return MomentData(x.algebra, [fock.moment_tensor([[x, y]] * m, config) for m in range(1, order + 1)])


def sum_moments(x: RvModel, y: RvModel, order, config: FockConfig):
    z = Sum([x, y])
    return MomentData(x.algebra, [fock.moment_tensor([z] * m, config) for m in range(1, order + 1)])


# -- scenarios ---------------------------------------------------------------


def _instances(cfg: ScenarioConfig, alg, n_coeffs):
    if cfg.x is not None:
        if cfg.y is None:
            raise ValueError("--x and --y must be given together")
        yield cfg.seed, cfg.x, cfg.y
        return
    for s in range(cfg.seed, cfg.seed + cfg.trials):
        yield (s,) + generate_instance(cfg.kind, alg, n_coeffs, s, cfg.forced_commutative)


def _s_pipeline(mx, my, n_cmp):
    """Return LHS (from Fock product moments), twisted RHS, S_x, S_y and diagnostics."""
    alg = mx.algebra
    mx, my = mx.truncate(n_cmp), my.truncate(n_cmp)
    cfg = FockConfig(alg, 2, 2 * n_cmp + 2)
    fx = fock.fit_s_model(mx, 1, cfg)
    fy = fock.fit_s_model(my, 2, cfg)
    mxy = product_moments(fx, fy, n_cmp, cfg)
    lhs = transforms.s_transform(mxy)
    rx = transforms.s_transform(mx)
    ry = transforms.s_transform(my)
    rhs = transforms.twisted_rhs(rx.jet, ry.jet)
    diag = {
        "lhs": lhs.diagnostics,
        "x": rx.diagnostics,
        "y": ry.diagnostics,
        "first_moment_factorization": float(np.abs(mxy.mean() - alg.mul(mx.mean(), my.mean())).max()),
    }
    return lhs.jet, rhs, rx.jet, ry.jet, diag


def _finish(cfg, start, per_degree, passed, seeds, diagnostics, error=None):
    per = [float(v) for v in per_degree]
    return Report(
        scenario=cfg.echo(),
        order=cfg.order,
        per_degree=per,
        max_abs_dev=max(per) if per else float("inf"),
        passed=bool(passed) and error is None,
        seeds=list(seeds),
        runtime_ms=(time.perf_counter() - start) * 1e3,
        diagnostics=diagnostics,
        error=error,
    )


def _guard(fn):
    def wrapper(cfg):
        start = time.perf_counter()
        try:
            return fn(cfg, start)
        except Exception as exc:  # reported as a failed scenario
            return _finish(cfg, start, [], False, [cfg.seed], {"traceback": traceback.format_exc()},
                           error=f"{type(exc).__name__}: {exc}")

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _elementwise_max(rows):
    return [max(col) for col in zip(*rows)]


@_guard
def run_s_scenario(cfg: ScenarioConfig, start=None):
    """Twisted multiplicativity ``S_xy(b) = S_y(b) S_x(S_y(b)^{-1} b S_y(b))``."""
    alg = cfg.build_algebra()
    tol = cfg.tolerance
    rows, seeds, trials = [], [], []
    for seed, mx, my in _instances(cfg, alg, cfg.order - 1):
        lhs, rhs, _, _, diag = _s_pipeline(mx, my, cfg.order)
        cmp = series.equal(lhs, rhs, tol)
        rows.append(cmp.per_degree)
        seeds.append(seed)
        trials.append({"seed": seed, "max_dev": cmp.max_dev, "pass": cmp.passed, **diag})
    per = _elementwise_max(rows)
    return _finish(cfg, start, per, max(per) <= tol, seeds, {"trials": trials})


@_guard
def run_r_scenario(cfg: ScenarioConfig, start=None):
    """Additivity ``R_{x+y} = R_x + R_y``."""
    alg = cfg.build_algebra()
    tol = cfg.tolerance
    n_cmp = cfg.order
    rows, seeds, trials = [], [], []
    for seed, mx, my in _instances(cfg, alg, n_cmp):
        mx, my = mx.truncate(n_cmp + 1), my.truncate(n_cmp + 1)
        fc = FockConfig(alg, 2, n_cmp + 3)
        fx = fock.fit_r_model(mx, 1, fc)
        fy = fock.fit_r_model(my, 2, fc)
        msum = sum_moments(fx, fy, n_cmp + 1, fc)
        lhs = transforms.r_transform(msum)
        rx = transforms.r_transform(mx)
        ry = transforms.r_transform(my)
        cmp = series.equal(lhs.jet, rx.jet + ry.jet, tol)
        rows.append(cmp.per_degree)
        seeds.append(seed)
        trials.append(
            {
                "seed": seed,
                "max_dev": cmp.max_dev,
                "pass": cmp.passed,
                "lhs": lhs.diagnostics,
                "first_moment_sum": float(np.abs(msum.mean() - mx.mean() - my.mean()).max()),
            }
        )
    per = _elementwise_max(rows)
    return _finish(cfg, start, per, max(per) <= tol, seeds, {"trials": trials})


@_guard
def run_commutative_scenario(cfg: ScenarioConfig, start=None):
    """On a commutative algebra the twist disappears: ``S_xy = S_x S_y``."""
    alg = cfg.build_algebra()
    if not alg.is_commutative:
        raise ValueError("commutative scenario needs a commutative algebra")
    tol = cfg.tolerance
    rows, seeds, trials = [], [], []
    for seed, mx, my in _instances(cfg, alg, cfg.order - 1):
        lhs, rhs, sx, sy, diag = _s_pipeline(mx, my, cfg.order)
        plain = series.mul(sx, sy)
        twist = series.equal(rhs, plain, 1e-10)
        theorem = series.equal(lhs, rhs, tol)
        classical = series.equal(lhs, plain, tol)
        ok = twist.passed and theorem.passed and classical.passed
        rows.append([max(v) for v in zip(twist.per_degree, theorem.per_degree, classical.per_degree)])
        seeds.append(seed)
        trials.append(
            {
                "seed": seed,
                "twist_vs_plain": twist.max_dev,
                "lhs_vs_twisted": theorem.max_dev,
                "lhs_vs_plain": classical.max_dev,
                "pass": ok,
                **diag,
            }
        )
    per = _elementwise_max(rows)
    return _finish(cfg, start, per, all(t["pass"] for t in trials), seeds, {"trials": trials})


@_guard
def run_counterexample_scenario(cfg: ScenarioConfig, start=None):
    """Search for an instance where plain multiplicativity fails but the twisted form holds."""
    alg = cfg.build_algebra()
    if alg.kind != "matrix" or alg.param < 2:
        raise ValueError("counterexample scenario needs matrix(k) with k >= 2")
    tol = cfg.tolerance
    witnesses, seeds, trials = [], [], []
    best = None
    for seed, mx, my in _instances(cfg, alg, cfg.order - 1):
        lhs, rhs, sx, sy, _ = _s_pipeline(mx, my, cfg.order)
        twisted = series.equal(lhs, rhs, tol)
        plain = series.equal(lhs, series.mul(sx, sy), tol)
        seeds.append(seed)
        is_witness = plain.max_dev > WITNESS_GAP and twisted.passed
        trials.append({"seed": seed, "plain_dev": plain.max_dev, "twisted_dev": twisted.max_dev, "witness": is_witness})
        if is_witness:
            witnesses.append(seed)
            if best is None:
                best = (twisted, plain)
    diagnostics = {"witness_seeds": witnesses, "trials": trials}
    if best is None:
        return _finish(cfg, start, [float(t["plain_dev"]) for t in trials[:1]], False, seeds, diagnostics,
                       error="no witness found")
    twisted, plain = best
    diagnostics["witness_seed"] = witnesses[0]
    diagnostics["plain_per_degree"] = plain.per_degree
    return _finish(cfg, start, twisted.per_degree, True, seeds, diagnostics)


# -- self-test ---------------------------------------------------------------


def _suite(results, name, fn):
    t0 = time.perf_counter()
    try:
        dev, tol = fn()
        ok = bool(dev <= tol)
        results[name] = {"pass": ok, "max_dev": float(dev), "tol": tol}
    except Exception as exc:
        results[name] = {"pass": False, "error": f"{type(exc).__name__}: {exc}"}
    results[name]["seconds"] = time.perf_counter() - t0
    return results[name]["pass"]


def _algebra_suite(algebras):
    worst = 0.0
    for alg in algebras:
        alg.validate()
        for s in range(5):
            x, y, z = (alg.random((s, j), 1.0) for j in range(3))
            worst = max(worst, float(np.abs(alg.mul(alg.mul(x, y), z) - alg.mul(x, alg.mul(y, z))).max()))
            w = alg.unit + alg.random((s, 9), 0.3)
            worst = max(worst, float(np.abs(alg.inv(alg.inv(w)) - w).max()))
    return worst, 1e-10


def _series_suite(algebras):
    worst = 0.0
    for alg in algebras:
        for seed in range(3):
            f = series.random_jet(alg, 4, (seed, 0), constant=alg.unit + alg.random((seed, 1), 0.3))
            g = series.random_jet(alg, 4, (seed, 2))
            g0 = Jet(alg, [alg.zero(), np.eye(alg.dim) + 0.1 * g.terms[1]] + list(g.terms[2:]))
            worst = max(worst, series.equal(series.mul(f, series.reciprocal(f)), Jet.unit(alg, 4), 1).max_dev)
            worst = max(worst, series.equal(series.mul(series.reciprocal(f), f), Jet.unit(alg, 4), 1).max_dev)
            inv = series.comp_inverse(g0)
            ident = Jet.identity(alg, 4)
            worst = max(worst, series.equal(series.compose(g0, inv), ident, 1).max_dev)
            worst = max(worst, series.equal(series.compose(inv, g0), ident, 1).max_dev)
            worst = max(worst, diagonal_consistency(f, g0, seed))
    return worst, 1e-8


def diagonal_consistency(f: Jet, h: Jet, seed=0, points=10):
    """Compare diagonals of ordered results with recursions run on diagonals alone.

    ``f`` needs an invertible constant term and ``h`` must vanish at 0 with an
    invertible linear term. Returns the largest deviation over ``points``
    random arguments.
    """
    alg = f.algebra
    deg = min(f.degree, h.degree)
    prod = series.mul(f, h)
    comp = series.compose(f, h)
    rec = series.reciprocal(f)
    inv = series.comp_inverse(h)
    worst = 0.0
    for p in range(points):
        b = alg.random((seed, 100 + p), 1.0)
        fd = [series.evaluate_term(t, [b] * n) for n, t in enumerate(f.terms)]
        hd = [series.evaluate_term(t, [b] * n) for n, t in enumerate(h.terms)]
        sym = [series.symmetrize_term(t) for t in f.terms]
        for n in range(deg + 1):
            want = sum(alg.mul(fd[k], hd[n - k]) for k in range(n + 1))
            worst = max(worst, float(np.abs(series.evaluate_term(prod.terms[n], [b] * n) - want).max()))
        for n in range(1, deg + 1):
            want = alg.zero()
            for k in range(1, n + 1):
                for parts in series.compositions(n, k):
                    want = want + series.evaluate_term(sym[k], [hd[q] for q in parts])
            worst = max(worst, float(np.abs(series.evaluate_term(comp.terms[n], [b] * n) - want).max()))
        g0inv = alg.inv(fd[0])
        gd = [g0inv]
        for n in range(1, f.degree + 1):
            acc = sum(alg.mul(fd[k], gd[n - k]) for k in range(1, n + 1))
            gd.append(-alg.mul(g0inv, acc))
        for n in range(f.degree + 1):
            worst = max(worst, float(np.abs(series.evaluate_term(rec.terms[n], [b] * n) - gd[n]).max()))
        # compositional inverse: symmetric terms are needed for off-diagonal arguments
        hsym = [series.symmetrize_term(t) for t in h.terms]
        h1inv = np.linalg.inv(h.terms[1])
        kd = [alg.zero(), h1inv @ b]
        for n in range(2, h.degree + 1):
            acc = alg.zero()
            for k in range(2, n + 1):
                for parts in series.compositions(n, k):
                    acc = acc + series.evaluate_term(hsym[k], [kd[q] for q in parts])
            kd.append(-h1inv @ acc)
        for n in range(1, h.degree + 1):
            worst = max(worst, float(np.abs(series.evaluate_term(inv.terms[n], [b] * n) - kd[n]).max()))
    return worst


def _transform_suite(algebras):
    worst = 0.0
    for alg in algebras:
        for seed in range(3):
            x = fock.random_model(alg, 1, "s", 3, (seed, 3))
            res = transforms.s_transform(x.moments(4))
            worst = max(worst, series.equal(res.jet, transforms.s_from_model_coeffs(alg, x.coeffs)).max_dev)
            xr = fock.random_model(alg, 1, "r", 3, (seed, 4))
            rres = transforms.r_transform(xr.moments(4))
            worst = max(worst, series.equal(rres.jet, xr.coefficient_jet()).max_dev)
            worst = max(worst, rres.diagnostics["residual"])
    return worst, 1e-7


def _dependence_suite(algebras):
    worst = 0.0
    for alg in algebras:
        x = fock.random_model(alg, 1, "s", 3, 11)
        m = x.moments(4)
        for n in range(0, 2):
            # S_n is a function of mu_1..mu_{n+1}, so mu_{n+2} is the first free moment
            worst = max(worst, transforms.dependence_check(m, "S", n, seed=n, perturb=n + 2).deviation)
            worst = max(worst, transforms.dependence_check(m, "R", n, seed=n).deviation)
    return worst, 1e-10


def _fock_relations_suite(algebras):
    worst = 0.0
    for alg in algebras:
        dev = fock.relation_deviations(FockConfig(alg, 2, 7), seed=1, trials=4)
        worst = max(worst, max(dev.values()))
    return worst, 1e-12


def _fock_bimodule_suite(algebras):
    worst = 0.0
    for alg in algebras:
        x = fock.random_model(alg, 1, "s", 2, 21)
        y = fock.random_model(alg, 2, "r", 2, 22)
        cfg = FockConfig(alg, 2, 10)
        worst = max(worst, fock.bimodularity_deviation([x, y], cfg, seed=2))
        worst = max(worst, fock.rho_commutation_deviation(x, FockConfig(alg, 2, 6), seed=3))
    return worst, 1e-12


def _freeness_suite(algebras):
    worst = 0.0
    for alg in algebras:
        x = fock.random_model(alg, 1, "s", 2, 31)
        y = fock.random_model(alg, 2, "s", 2, 32)
        worst = max(worst, fock.freeness_check([x, y], trials=10, seed=4).max_dev)
    return worst, 1e-10


def _geometric_suite(algebras):
    worst = 0.0
    for alg in algebras:
        x = fock.random_model(alg, 1, "s", 2, 41)
        y = fock.random_model(alg, 2, "s", 1, 42)
        b = alg.random(43, 0.2)
        worst = max(worst, fock.geometric_state_check(x, b, FockConfig(alg, 2, 6, "lossy")).max_dev)
        worst = max(worst, fock.geometric_product_check(fock.random_model(alg, 1, "s", 1, 44), y, b).max_dev)
    return worst, 1e-9


def _scalar_suite():
    alg = Algebra.matrix(1)

    def md(vals):
        return MomentData(alg, [np.full((1,) * (n + 2), v, dtype=complex) for n, v in enumerate(vals)])

    dev = max(
        np.abs(np.array(transforms.s_transform(md([1, 2, 5, 14])).jet.scalars()) - [1, -1, 1, -1]).max(),
        np.abs(np.array(transforms.r_transform(md([0, 1, 0, 2])).jet.scalars()) - [0, 1, 0, 0]).max(),
    )
    return dev, 1e-9


def _scenario_suite():
    rep = run_s_scenario(ScenarioConfig("verify-s", "matrix:2", 3, seed=0, trials=3))
    rep2 = run_r_scenario(ScenarioConfig("verify-r", "matrix:2", 3, seed=0, trials=3))
    if not (rep.passed and rep2.passed):
        return float("inf"), 1e-7
    return max(rep.max_abs_dev, rep2.max_abs_dev), 1e-7


def run_selftest(algebras=None, cfg: ScenarioConfig | None = None) -> Report:
    """Run every invariant suite; the first suite validates the algebras themselves."""
    start = time.perf_counter()
    cfg = cfg or ScenarioConfig("selftest")
    if algebras is None:
        algebras = [Algebra.matrix(1), Algebra.matrix(2), Algebra.diagonal(3)]
    results = {}
    order = []
    if not _suite(results, "algebra", lambda: _algebra_suite(algebras)):
        order.append("algebra")
    else:
        suites = [
            ("series", lambda: _series_suite(algebras)),
            ("fock-relations", lambda: _fock_relations_suite(algebras)),
            ("fock-bimodule", lambda: _fock_bimodule_suite(algebras)),
            ("freeness", lambda: _freeness_suite(algebras)),
            ("geometric", lambda: _geometric_suite(algebras)),
            ("transforms", lambda: _transform_suite(algebras)),
            ("dependence", lambda: _dependence_suite(algebras)),
            ("scalar", _scalar_suite),
            ("scenarios", _scenario_suite),
        ]
        for name, fn in suites:
            if not _suite(results, name, fn):
                order.append(name)
    per = [results[k].get("max_dev", float("inf")) for k in results]
    passed = all(r["pass"] for r in results.values())
    diagnostics = {"suites": results, "failed": order}
    return _finish(cfg, start, per, passed, [0], diagnostics,
                   error=None if passed else f"failed suites: {', '.join(order)}")


def run(cfg: ScenarioConfig) -> Report:
    return {
        "verify-s": run_s_scenario,
        "verify-r": run_r_scenario,
        "commutative": run_commutative_scenario,
        "counterexample": run_counterexample_scenario,
        "selftest": lambda c: run_selftest(cfg=c),
    }[cfg.kind](cfg)


def corrupt_algebra(algebra):
    """Copy of ``algebra`` with its structure tensor transposed in the output/right-factor axes."""
    return Algebra(algebra.structure.transpose(0, 2, 1), algebra.unit, validate=False)


__all__ = [
    "AlgebraValidationError",
    "Report",
    "ScenarioConfig",
    "corrupt_algebra",
    "diagonal_consistency",
    "generate_instance",
    "generate_models",
    "product_moments",
    "run",
    "run_commutative_scenario",
    "run_counterexample_scenario",
    "run_r_scenario",
    "run_s_scenario",
    "run_selftest",
    "sum_moments",
]
