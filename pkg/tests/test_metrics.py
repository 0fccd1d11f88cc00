import bisect

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elaa_detect.errors import FormatError
from elaa_detect.linalg import solve_hermitian
from elaa_detect.metrics import (MIN_DISTANCE, QAM16_POINTS, ber, iterations_to_tolerance,
                                 macs_to_tolerance, qam16_demodulate, qam16_modulate,
                                 random_bits, relative_error, relative_residual)
from elaa_detect.solvers import IterationRecord, IterationTrace, Method, Status

from conftest import make_system, random_cvec, random_pd

# written out by hand from the Gray level map 00:-3 01:-1 11:+1 10:+3
GOLDEN = {
    "0000": -3 - 3j, "0001": -3 - 1j, "0011": -3 + 1j, "0010": -3 + 3j,
    "0100": -1 - 3j, "0101": -1 - 1j, "0111": -1 + 1j, "0110": -1 + 3j,
    "1100": 1 - 3j, "1101": 1 - 1j, "1111": 1 + 1j, "1110": 1 + 3j,
    "1000": 3 - 3j, "1001": 3 - 1j, "1011": 3 + 1j, "1010": 3 + 3j,
}


def to_bits(pattern):
    return [int(c) for c in pattern]


@pytest.mark.parametrize("pattern,point", sorted(GOLDEN.items()))
def test_golden_mapping(pattern, point):
    x = qam16_modulate(to_bits(pattern))
    assert x.shape == (1,)
    assert x[0] == pytest.approx(point / np.sqrt(10), abs=1e-15)
    np.testing.assert_array_equal(qam16_demodulate(x), to_bits(pattern))


def test_constellation_energy_and_spacing():
    assert np.mean(np.abs(QAM16_POINTS) ** 2) == pytest.approx(1.0, abs=1e-15)
    d = np.abs(QAM16_POINTS[:, None] - QAM16_POINTS[None, :])
    assert d[~np.eye(16, dtype=bool)].min() == pytest.approx(MIN_DISTANCE, rel=1e-14)


def test_gray_adjacency():
    pairs = 0
    for p, a in GOLDEN.items():
        for q, b in GOLDEN.items():
            if abs(a - b) == 2:  # horizontal or vertical neighbours
                pairs += 1
                assert sum(x != y for x, y in zip(p, q)) == 1
    assert pairs == 2 * 24


def test_round_trip_many_groups():
    rng = np.random.default_rng(0)
    bits = random_bits(2**18, rng)
    np.testing.assert_array_equal(qam16_demodulate(qam16_modulate(bits)), bits)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=4, max_size=64).filter(lambda v: len(v) % 4 == 0),
       st.integers(0, 2**32 - 1))
def test_small_perturbations_decode(bits, seed):
    rng = np.random.default_rng(seed)
    x = qam16_modulate(bits)
    theta = rng.uniform(0, 2 * np.pi, x.size)
    noise = 0.49 * MIN_DISTANCE / np.sqrt(2) * np.exp(1j * theta) * rng.random(x.size)
    np.testing.assert_array_equal(qam16_demodulate(x + noise), bits)


def test_tie_breaks_to_smallest_pattern():
    # midway between 0000 and 0001
    np.testing.assert_array_equal(qam16_demodulate([(-3 - 2j) / np.sqrt(10)]), to_bits("0000"))
    # origin is equidistant from 0101, 0111, 1101, 1111
    np.testing.assert_array_equal(qam16_demodulate([0]), to_bits("0101"))


@pytest.mark.parametrize("bad", [[0, 1, 1], [0, 1, 2, 0], [[0, 1, 0, 1]]])
def test_modulate_rejects_bad_bits(bad):
    with pytest.raises(FormatError):
        qam16_modulate(bad)


def test_demodulate_rejects_nan():
    with pytest.raises(FormatError):
        qam16_demodulate([np.nan])


def test_ber_counts():
    tx = np.zeros(12, dtype=int)
    rx = tx.copy()
    rx[[0, 5, 11]] = 1
    assert ber(tx, rx) == 0.25
    assert ber(tx, tx) == 0.0
    with pytest.raises(FormatError):
        ber(tx, tx[:8])


def trace_from(residuals):
    records = [IterationRecord(i, r, r, 10 * i) for i, r in enumerate(residuals)]
    return IterationTrace(Method.RI, records, Status.MAX_ITERS, "", [], None)


def test_iterations_to_tolerance():
    res = [1.0, 0.5, 0.3, 0.1, 1e-3, 1e-5, 1e-7, 1e-9, 1e-10]
    trace = trace_from(res)
    assert iterations_to_tolerance(trace, 1e-8) == 7
    assert macs_to_tolerance(trace, 1e-8) == 70
    assert iterations_to_tolerance(trace, 1e-12) is None
    assert macs_to_tolerance(trace, 1e-12) is None
    assert iterations_to_tolerance(trace, 1.0) == 0
    with pytest.raises(ValueError):
        iterations_to_tolerance(trace_from([]), 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-14, 1.0), min_size=1, max_size=40), st.floats(1e-14, 1.0))
def test_iterations_to_tolerance_matches_bisect(res, tol):
    # on a monotone trace the first crossing is a bisection point
    res = sorted(res, reverse=True)
    neg = [-r for r in res]
    k = bisect.bisect_left(neg, -tol)
    expected = k if k < len(res) else None
    assert iterations_to_tolerance(trace_from(res), tol) == expected


def test_relative_measures(rng):
    A = random_pd(6, rng, cond=20)
    b = random_cvec(6, rng)
    sys = make_system(A, b)
    assert relative_residual(sys, solve_hermitian(A, b)) <= 1e-10
    assert relative_residual(sys, np.zeros(6)) == 1.0
    assert relative_error(np.ones(3), np.zeros(3)) == float("inf")
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
    assert relative_residual(make_system(A, np.zeros(6)), np.ones(6)) == float("inf")
