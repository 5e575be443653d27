"""
Ball-into-bin construction tests.
Run with pytest, or standalone: python test_construct.py
"""

import tempfile
from pathlib import Path

import numpy as np

from config import Config
from construct import (BinState, CodeSpec, TannerGraph, build_graph, check_structure, degree_histogram,
                       derive_seed, make_rng, message_order, select_neighbors)
from degdist import parse_distribution
from errors import ConfigError, SpecInvalidError
from gf2 import rank

ROBUST = parse_distribution("0.475*x^3 + 0.525*x^6")


def _spec(K=120, delta=0.3, seed=1, **kw):
    return CodeSpec(K=K, delta=delta, omega=ROBUST, seed=seed, **kw)


def _raises(fn, exc):
    try:
        fn()
    except exc:
        return True
    return False


def test_spec_defaults_and_validation():
    spec = _spec(K=6)
    assert spec.boundary == 7
    assert spec.L_total == 7
    assert spec.rng == "philox"
    assert _raises(lambda: _spec(K=1), SpecInvalidError)
    assert _raises(lambda: _spec(delta=0.0), SpecInvalidError)
    assert _raises(lambda: _spec(K=10, L_total=5), SpecInvalidError)
    assert _raises(lambda: _spec(d_max=1), SpecInvalidError)


def test_spec_json_round_trip():
    spec = _spec(seed=99, L_total=200)
    with tempfile.TemporaryDirectory() as tmp:
        loaded = CodeSpec.load(spec.dump(Path(tmp) / "spec.json"))
    assert (loaded.K, loaded.delta, loaded.seed, loaded.d_max, loaded.L_total, loaded.rng) == \
           (spec.K, spec.delta, spec.seed, spec.d_max, spec.L_total, spec.rng)
    assert np.allclose(loaded.omega.probs, spec.omega.probs)
    assert _raises(lambda: CodeSpec.from_dict({"K": 10}), ConfigError)


def test_rng_streams():
    a = make_rng(7, 1, 2).random(4)
    assert np.array_equal(a, make_rng(7, 1, 2).random(4))
    assert not np.array_equal(a, make_rng(7, 2, 1).random(4))
    assert derive_seed(7, 0) != derive_seed(7, 1)
    assert derive_seed(7, 3) == derive_seed(7, 3)


def test_bin_state_moves():
    bins = BinState.from_bins({0: [0, 1], 1: [2]}, d_max=4)
    bins.promote(0)
    assert bins.degree[0] == 1 and sorted(bins.bins[1]) == [0, 2]
    bins.to_buffer(2)
    assert bins.selectable() == 2 and bins.buffer == {2: 1}
    bins.release_buffer()
    assert sorted(bins.bins[1]) == [0, 2] and not bins.buffer


def test_select_neighbors_lowest_first():
    rng = make_rng(3)
    bins = BinState.from_bins({0: [0, 1], 1: [2, 3, 4]}, d_max=5)
    chosen = select_neighbors(bins, 3, rng)
    assert len(chosen) == 3 and {0, 1} <= set(chosen)
    assert sorted(select_neighbors(bins, 10, rng)) == [0, 1, 2, 3, 4]


def test_select_neighbors_skips_full_bin():
    bins = BinState.from_bins({0: [0], 2: [1]}, d_max=2)
    assert select_neighbors(bins, 5, make_rng(0)) == [0]
    assert bins.lowest_message_ball(2, make_rng(0)) == 0
    assert bins.lowest_message_ball(2, make_rng(0), exclude={0}) is None


def test_build_is_deterministic():
    a = build_graph(_spec(seed=5))
    b = build_graph(_spec(seed=5))
    c = build_graph(_spec(seed=6))
    assert a.checks == b.checks and a.buffer_log == b.buffer_log
    assert a.checks != c.checks


def test_structure_over_seeds():
    for seed in range(5):
        graph = build_graph(_spec(seed=seed, L_total=240))
        assert check_structure(graph) == [], f"seed {seed}"
        assert sorted(message_order(graph)) == list(range(graph.K))


def test_message_part_full_rank():
    for seed in range(3):
        graph = build_graph(_spec(seed=seed))
        head = graph.truncate(graph.K).H.take_cols(range(graph.K))
        assert rank(head) == graph.K


def test_prefix_consistent():
    long = build_graph(_spec(seed=2, L_total=300))
    short = build_graph(_spec(seed=2))
    cut = long.truncate(short.L)
    assert cut.checks == short.checks
    assert cut.buffer_log == short.buffer_log


def test_degree_cap_and_histogram():
    graph = build_graph(_spec(K=60, seed=4, d_max=6, L_total=78))
    assert int(graph.var_degrees.max()) <= 6
    hist = degree_histogram(graph)
    assert sum(hist.values()) == graph.n_vars
    assert min(hist) >= 1
    assert set(degree_histogram(graph, "check")) <= {3, 6}


def test_degrees_concentrate():
    graph = build_graph(_spec(K=500, seed=8, L_total=1000))
    degrees = graph.var_degrees
    within = np.abs(degrees - degrees.mean()) <= 1.0 + 1e-9
    assert within.mean() >= 0.95


def test_noiseless_recovery_and_concentration_over_seeds():
    if not Config.SLOW_TESTS:
        return
    from codec import decode_noiseless, encode_all

    recovered, within = 0, []
    for seed in range(20):
        graph = build_graph(_spec(K=500, seed=seed, L_total=1000))
        degrees = graph.var_degrees
        within.append(np.abs(degrees - degrees.mean()) <= 1.0 + 1e-9)
        for trial in range(5):
            message = make_rng(seed, 100 + trial).integers(0, 2, graph.K, dtype=np.uint8)
            encoded = encode_all(graph, message)
            known = {graph.K + l: int(encoded[l]) for l in range(graph.K)}
            recovered += int(np.array_equal(decode_noiseless(graph, known), message))
    assert recovered == 100
    assert np.concatenate(within).mean() >= 0.95


def test_check_degree_too_large():
    spec = CodeSpec(K=2, delta=0.5, omega=parse_distribution("1.0x^4"), seed=1)
    assert _raises(lambda: build_graph(spec), SpecInvalidError)


def test_check_structure_flags_defects():
    graph = TannerGraph.from_checks(2, [[0, 2], [1, 2]])
    problems = check_structure(graph)
    assert any("misses its encoded symbol 3" in p for p in problems)
    assert any("buffer log" in p for p in problems)


def test_default_d_max_from_config():
    assert _spec().d_max == Config.DEFAULT_D_MAX


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
