"""Running the scenario harness programmatically.

The same scenarios are available from the command line as ``freeprob
verify-s``, ``verify-r``, ``commutative``, ``counterexample`` and
``selftest``.
"""

from freeprob import fock, transforms
from freeprob.algebra import Algebra
from freeprob.harness import ScenarioConfig, run, run_selftest

for cfg in [
    ScenarioConfig("verify-s", "matrix:2", order=3, trials=5),
    ScenarioConfig("verify-r", "matrix:2", order=3, trials=5),
    ScenarioConfig("commutative", "diagonal:3", order=3, trials=5),
    ScenarioConfig("counterexample", "matrix:2", order=3, trials=5),
]:
    rep = run(cfg)
    print(f"{rep.summary():60s} {rep.runtime_ms:7.1f} ms")

rep = run_selftest()
print(rep.summary())
for name, res in rep.diagnostics["suites"].items():
    print(f"  {name:15s} {'ok' if res['pass'] else 'FAILED':6s} {res.get('max_dev', float('nan')):.1e}")

# Which moments does each transform term depend on?
m = fock.random_model(Algebra.matrix(2), 1, "s", 3, seed=0).moments(4)
for n in range(3):
    with_next = transforms.dependence_check(m, "S", n, perturb=n + 1).per_degree[n]
    beyond = transforms.dependence_check(m, "S", n, perturb=n + 2).deviation
    print(f"S_{n}: moves by {with_next:.2e} when mu_{n + 1} moves, by {beyond:.1e} when mu_{n + 2} moves")
