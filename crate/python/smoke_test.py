"""Smoke test for the fraclap extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import math

import fraclap


def main():
    assert abs(fraclap.mu(0.5) - 1.0 / (2.0 * math.sqrt(2.0 * math.pi))) < 1e-12
    assert abs(fraclap.gamma(5.0) - 24.0) < 1e-10
    assert abs(fraclap.predicted_exponent(2.0, 0.75) - 1.25) < 1e-15

    grid = fraclap.Grid(L=4.0, a=1.0, n=256)
    op = fraclap.FracGradient(grid, 0.5)
    assert op.shape == (257, 257)
    odd = [x * max(0.0, 1.0 - x * x) for x in grid.nodes()]
    g = op.apply(odd)
    assert max(abs(g[k] - g[-1 - k]) for k in range(len(g))) < 1e-12

    sol = fraclap.solve(2.0, 0.5, rhs="const:1", L=8.0, n=1024)
    center = sol.u[len(sol.u) // 2]
    assert abs(center - 1.0) < 0.02, center
    assert sol.weak_residual < 1e-8

    fine = fraclap.Grid(L=2.0, a=1.0, n=2048)
    v = [abs(x) if abs(x) <= 1.0 else 0.0 for x in fine.nodes()]
    _, slope, _, points = fraclap.probe(fine, v, 2.0, 2.0 ** -8, 2.0 ** -4)
    assert points == 4 and abs(slope - 1.5) < 0.05, slope

    try:
        fraclap.solve(0.9, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("p <= 1 must be rejected")
    try:
        fraclap.probe(fine, [0.0] * fine.n_nodes, 2.0, 2.0 ** -8, 2.0 ** -4)
    except fraclap.MeasurementError:
        pass
    else:
        raise AssertionError("a zero function has no exponent")

    print(f"ok: u(0) = {center:.5f}, |x| slope = {slope:.4f}, {sol!r}")


if __name__ == "__main__":
    main()
