"""Smoke test for the planarprob_py extension.

Build and install it first, e.g.

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/planarprob_py-*.whl

then run `python3 python/smoke_test.py`.
"""

import json
import math

import planarprob_py as pp


def main():
    assert [pp.tl_dim(k) for k in range(7)] == [1, 1, 2, 5, 14, 42, 132]

    cup = pp.TL.cup()
    assert cup.trace() == "d"
    assert cup.power(2).trace() == "d^2 + d"
    assert pp.nc_moments(3) == "d^3 + 3*d^2 + d"
    assert abs(cup.power(3).trace_at(2.0) - 22.0) < 1e-12
    assert pp.TL("cup").wedge(0, cup) == cup.power(2)

    try:
        pp.TL("cup + bogus")
    except ValueError as e:
        assert "position 6" in str(e)
    else:
        raise AssertionError("parse error expected")

    eig = sorted(pp.gram_eigenvalues(2, 2.0))
    assert abs(eig[0] - 2.0) < 1e-12 and abs(eig[1] - 6.0) < 1e-12

    q = pp.Poly.from_tl(2, cup.power(2))
    assert q.gaussian_trace() == "6"

    quartic = [("X1 X1* X1 X1*", 0)]
    series = pp.gibbs_series("X1 X1*", quartic, [2])
    assert series.coefficients() == {(0,): "1", (1,): "-4", (2,): "36"}
    oracle = pp.wick_oracle("X1 X1*", quartic, [2])
    assert oracle.large_n_limit().coefficients() == series.coefficients()
    json.loads(series.to_json())

    on = pp.on_model_series("cup", 1, 1)
    assert math.isfinite(on.evaluate([0.01, 0.01], math.sqrt(2)))

    cfg = {"mode": "gaussian-poly", "k": 1, "n": 32, "trials": 20, "seed": 1,
           "observables": ["X1 X1*"]}
    (res,) = pp.run_ensemble(json.dumps(cfg))
    assert abs(res["mean"] - 1.0) < 4 * res["stderr"]

    h = pp.spectral_histogram("X1 X1*", json.dumps(cfg), 20, 0.0, 5.0)
    width = h["edges"][1] - h["edges"][0]
    assert abs(sum(d * width for d in h["density"]) - 1.0) < 1e-9

    print("planarprob_py", pp.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
