"""Acceptance criteria 1-9, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (visible even when pytest
captures output) before asserting.
"""

import time

import numpy as np
import pytest

from freeprob import fock, series, transforms
from freeprob.algebra import Algebra
from freeprob.fock import FockConfig
from freeprob.harness import ScenarioConfig, product_moments, run, sum_moments
from freeprob.series import Jet
from freeprob.transforms import MomentData

from oracles import catalan, scalar_r_coeffs, scalar_s_coeffs


@pytest.fixture
def report(capsys):
    def emit(number, title, dev, tol, ok, extra=""):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number} [{title}]: {status} max_dev={dev:.3e} tol={tol:.0e}"
        if extra:
            line += f" {extra}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def _grid(kind, tol):
    t0 = time.perf_counter()
    reps = [
        run(ScenarioConfig(kind, "matrix:2", 3, seed=0, trials=20, tol=tol)),
        run(ScenarioConfig(kind, "matrix:3", 2, seed=0, trials=5, tol=tol)),
    ]
    seconds = time.perf_counter() - t0
    dev = max(r.max_abs_dev for r in reps)
    return reps, dev, seconds


def test_criterion_1_twisted_multiplicativity(report):
    reps, dev, seconds = _grid("verify-s", 1e-7)
    ok = all(r.passed for r in reps) and seconds <= 60
    report(1, "twisted multiplicativity", dev, 1e-7, ok, f"instances=25 runtime={seconds:.1f}s")


def test_criterion_2_r_additivity(report):
    reps, dev, seconds = _grid("verify-r", 1e-8)
    ok = all(r.passed for r in reps) and seconds <= 30
    report(2, "R additivity", dev, 1e-8, ok, f"instances=25 runtime={seconds:.1f}s")


def test_criterion_3_model_closed_forms(report):
    s_dev = r_dev = 0.0
    for k in (1, 2):
        alg = Algebra.matrix(k)
        for seed in range(10):
            x = fock.random_model(alg, 1, "s", 3, (k, seed, 0))
            got = transforms.s_transform(x.moments(4)).jet
            s_dev = max(s_dev, series.equal(got, transforms.s_from_model_coeffs(alg, x.coeffs)).max_dev)
            y = fock.random_model(alg, 1, "r", 3, (k, seed, 1))
            got = transforms.r_transform(y.moments(4)).jet
            r_dev = max(r_dev, series.equal(got, y.coefficient_jet()).max_dev)
    ok = s_dev <= 1e-7 and r_dev <= 1e-8
    report(3, "model closed forms", max(s_dev, r_dev), 1e-7, ok, f"S={s_dev:.1e}<=1e-7 R={r_dev:.1e}<=1e-8")


def _scalar(vals):
    alg = Algebra.matrix(1)
    return MomentData(alg, [np.full((1,) * (n + 2), v, dtype=complex) for n, v in enumerate(vals)])


def test_criterion_4_scalar_classical(report):
    cat = [int(catalan(n)) for n in range(1, 5)]
    assert cat == [1, 2, 5, 14]
    s = np.array(transforms.s_transform(_scalar(cat)).jet.scalars())
    s_dev = max(np.abs(s - [1, -1, 1, -1]).max(), np.abs(s - scalar_s_coeffs(cat)).max())
    semi = [0, 1, 0, 2]
    r = np.array(transforms.r_transform(_scalar(semi)).jet.scalars())
    r_dev = max(np.abs(r - [0, 1, 0, 0]).max(), np.abs(r - scalar_r_coeffs(semi)).max())
    one = _scalar([1] * 5)
    const = np.array([1, 0, 0, 0, 0])
    one_dev = max(
        np.abs(np.array(transforms.s_transform(one).jet.scalars()) - const).max(),
        np.abs(np.array(transforms.r_transform(one).jet.scalars()) - const).max(),
    )
    ok = s_dev <= 1e-9 and r_dev <= 1e-10 and one_dev <= 1e-12
    report(4, "scalar classical checks", max(s_dev, r_dev, one_dev), 1e-9, ok,
           f"S={s_dev:.1e} R={r_dev:.1e} unit={one_dev:.1e}")


def test_criterion_5_commutative_reduction(report):
    twist = theorem = 0.0
    ok = True
    for d in range(1, 5):
        rep = run(ScenarioConfig("commutative", f"diagonal:{d}", 3, trials=5))
        ok &= rep.passed
        for t in rep.diagnostics["trials"]:
            twist = max(twist, t["twist_vs_plain"])
            theorem = max(theorem, t["lhs_vs_twisted"], t["lhs_vs_plain"])
    ok = ok and twist <= 1e-10 and theorem <= 1e-7
    report(5, "commutative reduction", max(twist, theorem), 1e-7, ok, f"twist_vs_plain={twist:.1e}<=1e-10")


def test_criterion_6_noncommutative_witness(report):
    rep = run(ScenarioConfig("counterexample", "matrix:2", 3, trials=20))
    gap = max((t["plain_dev"] for t in rep.diagnostics.get("trials", []) if t["witness"]), default=0.0)
    report(6, "noncommutative witness", rep.max_abs_dev, 1e-7, rep.passed,
           f"witnesses={len(rep.diagnostics.get('witness_seeds', []))}/20 plain_gap={gap:.2e}")


def test_criterion_7_freeness_and_relations(report):
    algebras = [Algebra.matrix(1), Algebra.matrix(2), Algebra.diagonal(3)]
    free = rel = bim = geo = 0.0
    for i, alg in enumerate(algebras):
        x = fock.random_model(alg, 1, "s", 2, (i, 1))
        y = fock.random_model(alg, 2, "r", 2, (i, 2))
        free = max(free, fock.freeness_check([x, y], trials=20, seed=i, max_length=5).max_dev)
        rel = max(rel, max(fock.relation_deviations(FockConfig(alg, 2, 7), seed=i, trials=4).values()))
        bim = max(bim, fock.bimodularity_deviation([x, y], FockConfig(alg, 2, 10), seed=i))
        bim = max(bim, fock.rho_commutation_deviation(x, FockConfig(alg, 2, 6), seed=i))
        b = alg.random((i, 3), 0.2)
        lossy = FockConfig(alg, 2, 6, "lossy")
        geo = max(geo, fock.geometric_state_check(x, b, lossy).max_dev)
        geo = max(geo, fock.geometric_state_check(fock.random_model(alg, 1, "r", 2, (i, 4)), b, lossy).max_dev)
        x1 = fock.random_model(alg, 1, "s", 1, (i, 5))
        y1 = fock.random_model(alg, 2, "s", 1, (i, 6))
        geo = max(geo, fock.geometric_product_check(x1, y1, b).max_dev)
    ok = free <= 1e-10 and rel <= 1e-12 and bim <= 1e-12 and geo <= 1e-9
    report(7, "freeness and operator relations", max(free, rel, bim, geo), 1e-10, ok,
           f"freeness={free:.1e} relations={rel:.1e} bimodule={bim:.1e} geometric={geo:.1e}")


def test_criterion_8_r_locality(report):
    alg = Algebra.matrix(2)
    dev = 0.0
    for trial in range(5):
        m = fock.random_model(alg, 1, "r", 3, (8, trial)).moments(4)
        for n in range(3):
            dev = max(dev, transforms.dependence_check(m, "R", n, seed=(trial, n)).deviation)
    report("8 (R part)", "perturbing mu_{n+2} leaves R_0..R_n", dev, 1e-10, dev <= 1e-10, "trials=5")


def test_criterion_8_s_locality(report):
    """Perturb ``mu_{n+1}`` and require ``S_0..S_n`` unchanged.

    ``S_n`` is built from ``mu_1..mu_{n+1}`` (for scalars
    ``S_1 = 1/m_1 - m_2/m_1^3``), so this criterion cannot hold as stated;
    the test runs it faithfully and is expected to report FAIL.
    """
    alg = Algebra.matrix(2)
    dev = 0.0
    for trial in range(5):
        m = fock.random_model(alg, 1, "s", 3, (9, trial)).moments(4)
        for n in range(3):
            dev = max(dev, transforms.dependence_check(m, "S", n, seed=(trial, n)).deviation)
    report("8 (S part)", "perturbing mu_{n+1} leaves S_0..S_n", dev, 1e-10, dev <= 1e-10, "trials=5")


def test_criterion_9_depth_stability_and_determinism(report):
    alg = Algebra.matrix(2)
    dev = 0.0
    for seed in range(3):
        x = fock.random_model(alg, 1, "s", 2, (seed, 1))
        y = fock.random_model(alg, 2, "s", 2, (seed, 2))
        xr = fock.random_model(alg, 1, "r", 3, (seed, 3))
        yr = fock.random_model(alg, 2, "r", 3, (seed, 4))
        for depth in (8, 9):
            base = FockConfig(alg, 2, depth)
            deeper = base.with_depth(depth + 1)
            for a, b in [
                (product_moments(x, y, 3, base), product_moments(x, y, 3, deeper)),
                (sum_moments(xr, yr, 4, base), sum_moments(xr, yr, 4, deeper)),
                (x.moments(4, base), x.moments(4, deeper)),
            ]:
                dev = max(dev, max(float(np.abs(s - t).max()) for s, t in zip(a.mu, b.mu)))
        # without vacuum-reachability pruning (smaller orders keep this affordable)
        small = FockConfig(alg, 2, 4)
        for prune in (True, False):
            a = product_moments(x, y, 2, small)
            b = MomentData(alg, [fock.moment_tensor([[x, y]] * m, small.with_depth(5), prune=prune)
                                 for m in (1, 2)])
            dev = max(dev, max(float(np.abs(s - t).max()) for s, t in zip(a.mu, b.mu)))

    same = True
    for kind in ("verify-s", "verify-r", "counterexample"):
        cfg = ScenarioConfig(kind, "matrix:2", 2, seed=3, trials=3)
        r1, r2 = run(cfg).to_dict(), run(cfg).to_dict()
        r1.pop("runtime_ms")
        r2.pop("runtime_ms")
        same &= r1 == r2
    report(9, "depth stability and determinism", dev, 1e-12, dev <= 1e-12 and same, f"identical_reports={same}")
