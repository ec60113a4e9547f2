"""Smoke test for the flatchain_py extension.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import json
import math

import flatchain_py as fc


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def segment(a, b, norm="l2", coeff=1.0, group="Z"):
    return fc.Chain.simplex([a, b], norm=norm, group=group, coeff=coeff)


def square_boundary():
    corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    loop = segment(corners[0], corners[1])
    for i in range(1, 4):
        loop = loop + segment(corners[i], corners[(i + 1) % 4])
    return loop


def main():
    # segment masses follow the norm
    assert close(segment([0, 0], [1, 1], "linf").mass(), 1.0)
    assert close(segment([0, 0], [1, 1], "l1").mass(), 2.0)
    assert close(segment([0, 0], [1, 1], "l2", coeff=3).mass(), 3 * math.sqrt(2))

    # the unit square has l1 density 2
    tri = fc.Chain.simplex([[0, 0], [1, 0], [1, 1]], norm="l1")
    tri2 = fc.Chain.simplex([[0, 0], [1, 1], [0, 1]], norm="l1")
    square = (tri + tri2).canonicalize()
    assert close(square.mass(), 2.0, 1e-9), square.mass()

    # boundary of a boundary vanishes; the boundary of the square is its perimeter
    assert square.boundary().boundary().is_zero()
    assert close(square.boundary().mass(), 4.0)

    # cone identity dC(R) = R - C(dR)
    r = segment([0.2, 0.1], [0.7, 0.4])
    z = [0.1, 0.9]
    lhs = r.cone(z).boundary()
    rhs = r - r.boundary().cone(z)
    assert (lhs - rhs).is_zero()

    # slicing the square at x = 0.5 gives a unit segment
    cut = square.slice([1.0, 0.0], 0.5)
    assert cut.k == 1 and close(cut.mass(), 1.0, 1e-9)

    # JSON round trip
    again = fc.Chain.from_json(square.to_json())
    assert (again - square).is_zero()

    # flat norm of the unit square boundary is 1 (fill with the square)
    value, discrepancy = square_boundary().flat_norm([0, 0], [1, 1], resolution=2, mode="int")
    assert close(value, 1.0, 1e-6) and discrepancy == 0.0, (value, discrepancy)

    # l1 ball of radius 0.3: a diamond of area 0.18 at density 2
    inside, converged = square.restrict_ball([0.5, 0.5], 0.3, stages=8)
    assert converged and close(inside.mass(), 0.36, 1e-3), inside.mass()

    # quantizing onto the segment's own endpoint is free
    seg = segment([0.0, 0.0], [0.2, 0.0])
    q, budget = seg.quantize([[0.0, 0.0]], 0.5)
    assert budget >= 0.0 and q.k == 1

    # an experiment runs end to end
    config = {
        "experiment": "lsc",
        "space": {"dim": 2, "norm": {"kind": "p", "p": 1}},
        "group": {"kind": "Z"},
        "k": 1,
        "instances": 3,
        "seed": 7,
        "params": {"replicates": 1},
    }
    report = json.loads(fc.run_experiment_json(json.dumps(config)))
    assert report["experiment"] == "lsc" and len(report["rows"]) > 0

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
