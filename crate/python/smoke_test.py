"""Smoke test for the pysymverify extension."""
import json

import pysymverify as sv


def main():
    e = sv.Expr("(x + 1)^2 - x^2 - 2*x - 1")
    assert e.is_zero(), e
    assert str(sv.Expr("sqrt(x^2)").simplify()) != "x"

    f = sv.Expr("x^3*sin(u)")
    assert (f.diff("x") - sv.Expr("3*x^2*sin(u)")).is_zero()
    d = f.total_derivative("x")
    assert "diff(u,x)" in d.symbols(), d
    assert abs(sv.Expr("x*diff(u,x)").evaluate({"x": 2.0, "diff(u,x)": 1.5}) - 3.0) < 1e-15

    heat = sv.System(["t", "x"], ["u"], ["diff(u,t) = diff(u,x,x)"])
    scaling = sv.VectorField.coefficients({"t": "2*t", "x": "x", "u": "0"})
    r = sv.symmetry(scaling, heat)
    assert r["verdict"] == "symbolic-zero", r
    wrong = sv.VectorField.coefficients({"t": "t", "x": "x", "u": "0"})
    assert sv.symmetry(wrong, heat)["verdict"] == "nonzero"

    pt = sv.VectorField.coefficients({"t": "1", "x": "0", "u": "0"})
    b = sv.bracket(scaling, pt, ["t", "x"])
    assert b.components() == {"t": "-2", "x": "0", "u": "0"}, b

    names = sv.builtin_scenarios()
    assert len(names) == 8, names
    report = json.loads(sv.run(names[0]))
    assert report["status"] == "pass", report["scenario"]
    print(f"ok: {len(names)} builtin scenarios, {report['scenario']} passes with {len(report['checks'])} checks")


if __name__ == "__main__":
    main()
