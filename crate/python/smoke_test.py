"""Smoke test for the detrep_py extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/detrep_py-*.whl
"""

import json
import sys

import detrep_py as d


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    return ok


def main():
    results = []
    p = d.cubic_poly()
    pencil = d.cubic_pencil()

    rep = json.loads(d.verify_representation(p, pencil, 1e-10))
    results.append(check("identity", rep["invariants"]["representation"]["pass"]))

    point = [0.7, -1.3 + 0.2j, 2.1]
    lhs = pencil.eval_det(point)
    results.append(check("det_pointwise", abs(lhs - p.eval(point)) < 1e-10))

    inv = json.loads(d.theorem1_invariants(p, pencil))
    results.append(check("invariants", all(v["pass"] for v in inv["invariants"].values())))

    built, report = d.theorem1_construct(p)
    report = json.loads(report)
    results.append(check("theorem1_construct", all(v["pass"] for v in report["invariants"].values()), f"k={built.k}"))
    again = d.Pencil.from_json(built.to_json())
    results.append(check("pencil_json_round_trip", again.to_poly(["x0", "x1", "x2"]).max_abs_diff(p) < 1e-8))

    lifted, _ = d.lift_to_four(pencil)
    want = d.Polynomial("3*x1*y1*x2 - (x2 + x1 + 3*y1)*x0^2", ["x0", "x1", "y1", "x2"])
    results.append(check("lift", lifted.max_abs_diff(want) < 1e-10))

    v = json.loads(d.is_hyperbolic(d.Polynomial("x0^2 + x1^2 + x2^2", ["x0", "x1", "x2"]), [0, 0, 1]))
    results.append(check("definite_form_not_hyperbolic", not v["holds"]))

    cert = d.nonconvexity_certificate(p, [1.0, 0.0, -1.0])
    results.append(check("nonconvexity", cert is not None))

    rs = sorted(d.roots([-1j, 2, -3j]), key=lambda z: z.imag)
    results.append(check("roots", abs(rs[0] + 1j) < 1e-12 and abs(rs[1] - 1j / 3) < 1e-12))

    _, residual = d.find_sos_tridisk(d.Polynomial("8 - z1*z2 - z1*z3 - z2*z3", ["z1", "z2", "z3"]), 1)
    results.append(check("sos_tridisk", residual <= 1e-6, f"residual={residual:.2e}"))

    try:
        d.Polynomial("x0 +", ["x0"])
        results.append(check("parse_error_raises", False))
    except d.DetrepError:
        results.append(check("parse_error_raises", True))

    suite = json.loads(d.cubic_suite())
    results.append(check("cubic_suite", all(v["pass"] for v in suite["invariants"].values())))

    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
