"""
Degree distribution tests.
Run with pytest, or standalone: python test_degdist.py
"""

import math

import numpy as np

from construct import make_rng
from degdist import (CHECK, EDGE, NODE, VARIABLE, DegreeDistribution, average_degree, edge_to_node,
                     format_distribution, node_to_edge, parse_distribution, sample_degrees,
                     variable_dist_for, variable_dist_regular_approx)
from errors import DistributionError


def _raises(fn, exc=DistributionError):
    try:
        fn()
    except exc:
        return True
    return False


def test_parse_default_literal():
    d = parse_distribution("0.475*x^3 + 0.525*x^6")
    assert d.view == NODE and d.kind == CHECK
    assert d.degrees.tolist() == [3, 6]
    assert math.isclose(d.mean(), 0.475 * 3 + 0.525 * 6)


def test_parse_is_lenient():
    d = parse_distribution(" 0.1x^2+0.4 * x^3 + 0.25x^6 + 0.25x^6 ")
    assert math.isclose(d.as_dict()[6], 0.5)
    assert math.isclose(sum(d.probs), 1.0, abs_tol=1e-12)


def test_parse_rejects_bad_literals():
    assert _raises(lambda: parse_distribution(""))
    assert _raises(lambda: parse_distribution("0.5x^2 + 0.4x^3"))
    assert _raises(lambda: parse_distribution("0.5y^2 + 0.5x^3"))
    assert _raises(lambda: parse_distribution("0.5x + 0.5x^3"))
    assert _raises(lambda: parse_distribution("1.0x^60", max_degree=50))


def test_variable_kind_allows_low_degrees():
    d = parse_distribution("0.5 + 0.5x", kind=VARIABLE)
    assert d.degrees.tolist() == [0, 1]


def test_format_reads_back():
    d = parse_distribution("0.2x^2 + 0.3x^4 + 0.5x^9")
    again = parse_distribution(format_distribution(d))
    assert np.allclose(again.probs, d.probs)
    assert again.degrees.tolist() == d.degrees.tolist()


def test_direct_construction_checks_sum():
    assert _raises(lambda: DegreeDistribution(NODE, ((2, 0.5), (3, 0.4))))
    assert _raises(lambda: DegreeDistribution(NODE, ((3, 0.5), (2, 0.5))))
    assert _raises(lambda: DegreeDistribution("dual", ((2, 1.0),)))


def test_view_conversions():
    node = parse_distribution("0.5x^2 + 0.5x^4")
    edge = node_to_edge(node)
    assert edge.view == EDGE
    # beta = 3, omega_2 = 0.5*2/3, omega_4 = 0.5*4/3
    assert np.allclose(edge.probs, [1 / 3, 2 / 3])
    assert math.isclose(average_degree(edge), 3.0)
    back = edge_to_node(edge)
    assert np.allclose(back.probs, node.probs)
    assert _raises(lambda: node_to_edge(edge))


def test_sampling_matches_probabilities():
    d = parse_distribution("0.25x^2 + 0.75x^5")
    draws = sample_degrees(d, make_rng(7), 20000)
    assert set(draws.tolist()) <= {2, 5}
    assert abs(np.mean(draws == 5) - 0.75) < 0.02


def test_regular_approx_mean():
    omega = parse_distribution("0.475*x^3 + 0.525*x^6")
    K, L = 500, 650
    node, edge = variable_dist_regular_approx(omega, K, L)
    alpha = omega.mean() * L / (K + L)
    assert math.isclose(node.mean(), alpha, rel_tol=1e-12)
    assert node.degrees.tolist() == [math.floor(alpha), math.floor(alpha) + 1]
    assert math.isclose(average_degree(edge), alpha, rel_tol=1e-9)


def test_regular_approx_integer_alpha():
    node, _ = variable_dist_regular_approx(parse_distribution("1.0x^4"), 100, 100)
    assert node.as_dict() == {2: 1.0}


def test_empirical_model_edge_view():
    omega = parse_distribution("0.5x^2 + 0.5x^3")
    edge = variable_dist_for(omega, 40, 52, model="empirical", seed=3, trials=2, d_max=20)
    assert edge.view == EDGE and edge.kind == VARIABLE
    # edges / variables over both ends of every check
    assert 1.0 < average_degree(edge) < 3.0
    assert _raises(lambda: variable_dist_for(omega, 40, 52, model="poisson"))


def test_empirical_mean_counts_every_edge():
    # each check adds its degree in edges over K + L variables
    single = variable_dist_for(parse_distribution("1.0x^3"), 200, 200, model="empirical", seed=4, trials=50)
    assert abs(average_degree(single) - 1.5) <= 0.01
    robust = variable_dist_for(parse_distribution("0.475*x^3 + 0.525*x^6"), 1000, 1000, model="empirical",
                               seed=4, trials=5)
    assert abs(average_degree(robust) - 2.2875) <= 0.02


def main():
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
                print(f"[OK] {name}")
            except Exception as e:
                failed += 1
                print(f"[FAIL] {name}: {e!r}")
    return failed


if __name__ == "__main__":
    raise SystemExit(main())
