"""Smoke test for the baryopt Python bindings.

Build and install the extension first, e.g.
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/baryopt-*.whl
then run `python python/smoke_test.py`.
"""

import math

import baryopt


def close(a, b, tol=1e-10):
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def main():
    xs = [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]
    fs = [1.0, 2.0, 0.5]

    batch = baryopt.batch_barycenter(xs, fs, 1.5)
    state = baryopt.BarycenterState([0.0, 0.0])
    gains = [state.update(x, f, 1.5) for x, f in zip(xs, fs)]
    assert gains[0] == 1.0
    assert all(0.0 <= g <= 1.0 for g in gains)
    assert close(state.estimate, batch), (state.estimate, batch)
    assert len(state) == 3

    w = baryopt.barycentric_weights(xs, fs, 1.5)
    assert abs(sum(w) - 1.0) < 1e-12

    acc = baryopt.ComplexAccumulator(2, 1.0, 0.0)
    for x, f in zip(xs, fs):
        acc.accumulate(x, f)
    assert close(acc.estimate(), baryopt.batch_barycenter(xs, fs, 1.0))

    assert "rosenbrock" in baryopt.objectives()
    assert baryopt.objective_value("rosenbrock", [1.0, 1.0]) == 0.0

    trace = baryopt.run_search("rosenbrock", [-1.5, 1.5], 4.0, 0.6, "linear:2:0.4:80", 80, 1)
    assert len(trace["records"]) == 80
    assert trace["aborted"] is None
    again = baryopt.run_search("rosenbrock", [-1.5, 1.5], 4.0, 0.6, "linear:2:0.4:80", 80, 1)
    assert again["best_f"] == trace["best_f"]

    def sphere(x):
        return sum(v * v for v in x)

    custom = baryopt.run_search(sphere, [2.0, 2.0], 1.0, 0.6, "geometric:1:0.95", 100, 3)
    assert custom["best_f"] < sphere([2.0, 2.0])

    def broken(x):
        raise KeyError("boom")

    try:
        baryopt.run_search(broken, [0.0, 0.0], 1.0, 0.5, "constant:1", 5, 1)
    except KeyError:
        pass
    else:
        raise AssertionError("callable errors must propagate")

    try:
        baryopt.run_search("himmelblau", [0.0, 0.0], 1.0, 0.5, "constant:1", 5, 1)
    except ValueError as e:
        assert "unknown objective" in str(e)
    else:
        raise AssertionError("unknown objective must raise")

    m = baryopt.noise_moments([[1.5, -2.0]], [0.7], 1.3, 0.05)
    assert m["eta_bar"] == [1.5, -2.0] and m["eta_bbar"] == [1.5, -2.0]
    assert math.isclose(m["m_bar"], math.exp(-1.3 * 0.7))

    ok, report = baryopt.run_suite("thm3")
    assert ok, report
    assert report.count("\n") > 5

    summary = baryopt.bench("perturbed_quadratic", seeds=10)
    assert summary["q1"] <= summary["median"] <= summary["q3"]

    print("smoke test passed")


if __name__ == "__main__":
    main()
