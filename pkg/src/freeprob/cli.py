"""Command-line entry point ``freeprob``."""

import argparse
import json
import sys

from freeprob import harness, io, transforms


def _add_common(p, algebra="matrix:2"):
    p.add_argument("--algebra", default=algebra, help="matrix:K, diagonal:D or a JSON algebra spec")
    p.add_argument("--order", type=int, default=3, help="compare order N_cmp (1..4)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--x", help="moment data JSON for x")
    p.add_argument("--y", help="moment data JSON for y")
    p.add_argument("--json-out", help="write the report here")


def build_parser():
    parser = argparse.ArgumentParser(prog="freeprob", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("verify-s", help="twisted multiplicativity of the S-transform"))
    _add_common(sub.add_parser("verify-r", help="additivity of the R-transform"))
    _add_common(sub.add_parser("commutative", help="commutative reduction"), algebra="diagonal:3")
    _add_common(sub.add_parser("counterexample", help="witness that the twist is needed"))
    st = sub.add_parser("selftest", help="run every invariant suite")
    st.add_argument("--json-out")
    tr = sub.add_parser("transform", help="S- or R-transform of moment data")
    tr.add_argument("--kind", choices=["s", "r"], required=True)
    tr.add_argument("--input", required=True)
    tr.add_argument("--output", required=True)
    return parser


def _algebra_arg(text):
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    return text


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "transform":
        m = io.load_moments(args.input)
        fn = transforms.s_transform if args.kind == "s" else transforms.r_transform
        result = fn(m)
        with open(args.output, "w") as fh:
            json.dump(io.transform_result_to_dict(result), fh, indent=1)
        print(f"{args.kind.upper()}-transform of degree {result.jet.degree}: {result.diagnostics}")
        return 0 if result.ok else 1

    if args.command == "selftest":
        cfg = harness.ScenarioConfig("selftest")
    else:
        x = io.load_moments(args.x) if args.x else None
        y = io.load_moments(args.y) if args.y else None
        cfg = harness.ScenarioConfig(
            args.command,
            _algebra_arg(args.algebra),
            args.order,
            seed=args.seed,
            tol=args.tol,
            trials=args.trials,
            x=x,
            y=y,
        )
    report = harness.run(cfg)
    print(report.summary())
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(report.to_dict(), fh, indent=1)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
