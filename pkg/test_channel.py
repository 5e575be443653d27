"""
Channel model tests: BPSK, AWGN, LLRs and the Shannon-limit arithmetic.
Run with pytest, or standalone: python test_channel.py
"""

import math

import numpy as np

from channel import (ChannelParams, capacity, channel_llr, ebn0_db, hard_decision, modulate, overhead,
                     saved_symbols, shannon_table, sigma_for_rate, symbols_for_overhead, transmit)
from construct import make_rng


def test_modulation_convention():
    assert modulate([0, 1]).tolist() == [1.0, -1.0]
    bits = np.array([0, 1, 1, 0, 1], dtype=np.uint8)
    assert np.array_equal(hard_decision(modulate(bits)), bits)
    assert hard_decision([0.0]).tolist() == [0]


def test_transmit_reproducible_and_scalar():
    p = ChannelParams(0.8)
    a = transmit(np.ones(16), p, make_rng(5, 1))
    b = transmit(np.ones(16), p, make_rng(5, 1))
    assert np.array_equal(a, b)
    assert isinstance(transmit(1.0, p, make_rng(5)), float)
    assert abs(transmit(1.0, ChannelParams(1e-12), make_rng(5)) - 1.0) < 1e-9


def test_noise_moments():
    p = ChannelParams(0.5)
    x = np.ones(1_000_000)
    noise = transmit(x, p, make_rng(11)) - x
    assert abs(noise.mean()) < 0.002
    assert abs(noise.var() - 0.25) < 0.0025


def test_channel_llr():
    p = ChannelParams(1.0)
    assert channel_llr(0.0, p) == 0.0
    assert channel_llr(1.0, p) == 2.0
    llr = channel_llr(transmit(np.ones(200_000), p, make_rng(3)), p)
    assert abs(llr.var() - 4.0) / 4.0 < 0.02
    assert math.isclose(p.sigma_ch ** 2, p.sigma_ch_sq)


def test_shannon_limit_table():
    assert abs(capacity(0.977) - 0.501) <= 0.001
    assert abs(capacity(0.5) - 0.912) <= 0.001
    assert abs(capacity(0.2859) - 0.999) <= 0.001


def test_capacity_decreasing():
    grid = np.linspace(0.2, 3.0, 100)
    values = [capacity(float(s)) for s in grid]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_sigma_for_rate_inverts_capacity():
    assert abs(sigma_for_rate(0.501) - 0.977) <= 0.002
    assert abs(sigma_for_rate(0.912) - 0.5) <= 0.002
    for R in (0.2, 0.5, 0.9):
        assert abs(capacity(sigma_for_rate(R)) - R) <= 1e-6


def test_ebn0_db():
    assert abs(ebn0_db(0.501, 0.977) - 0.1934) <= 0.001
    assert abs(ebn0_db(0.912, 0.5) - 3.4104) <= 0.001
    assert abs(ebn0_db(0.5, 1.0)) < 1e-12
    rows = shannon_table()
    assert [round(r, 3) for r, _, _ in rows] == [0.501, 0.912, 0.999]
    assert abs(rows[2][2] - 7.864) <= 0.02


def test_overhead_arithmetic():
    K, sigma = 5000, 0.977
    M = K / capacity(sigma)
    assert abs(overhead(int(round(M)), K, sigma)) < 1e-3
    assert abs(saved_symbols(K, sigma, 0.18) - 1796) < 5
    assert abs(saved_symbols(K, 0.5, 0.05) - 274) < 2
    assert symbols_for_overhead(K, sigma, 0.18) == int(round(M * 1.18))


def test_invalid_sigma():
    try:
        ChannelParams(0.0)
    except ValueError:
        return
    assert False, "zero noise level accepted"


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
