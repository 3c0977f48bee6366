import inspect
import math

import numpy as np
import oracles
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from puf_trng import (
    DimensionError,
    InsufficientLengthError,
    ParameterError,
    approximate_entropy,
    as_bit_array,
    berlekamp_massey,
    binary_matrix_rank,
    block_frequency,
    cumulative_sums,
    dft_spectral,
    frequency_monobit,
    gf2_rank,
    linear_complexity,
    longest_run_of_ones,
    runs,
    serial,
)
from puf_trng.nist import (
    ALL_TESTS,
    _fold_counts,
    _longest_run_per_block,
    _pattern_counts,
    _rank32_batch,
    _RANK_PROBS,
)

ORACLE_TOL = 1e-9  # fast path vs naive reference
KAT_TOL = 1e-4  # pinned reference constants


# ---------------------------------------------------------------------------
# Input coercion


def test_as_bit_array_accepts_common_forms():
    assert as_bit_array("0101").tolist() == [0, 1, 0, 1]
    assert as_bit_array([1, 0, 1]).tolist() == [1, 0, 1]
    assert as_bit_array(np.array([True, False])).tolist() == [1, 0]
    arr = np.array([0, 1, 1], dtype=np.uint8)
    assert as_bit_array(arr).dtype == np.uint8
    assert as_bit_array([]).size == 0


def test_as_bit_array_rejects_bad_input():
    with pytest.raises(ParameterError):
        as_bit_array([0, 2, 1])
    with pytest.raises(ParameterError):
        as_bit_array("0121")
    with pytest.raises(DimensionError):
        as_bit_array(np.zeros((2, 2), dtype=np.uint8))


# ---------------------------------------------------------------------------
# Known answers (short worked examples with pinned p-values)


def test_kat_frequency_monobit():
    out = frequency_monobit("1011010101")
    assert abs(out.p_values[0] - 0.527089) <= KAT_TOL
    assert abs(out.p_values[0] - oracles.monobit_p("1011010101")) <= ORACLE_TOL
    assert out.statistic == pytest.approx(2.0 / math.sqrt(10.0))


def test_kat_block_frequency():
    out = block_frequency("0110011010", block_size=3)
    assert abs(out.p_values[0] - 0.801252) <= KAT_TOL
    assert abs(out.p_values[0] - oracles.block_frequency_p("0110011010", 3)) <= ORACLE_TOL
    assert out.statistic == pytest.approx(1.0)


def test_kat_runs():
    out = runs("1001101011")
    assert abs(out.p_values[0] - 0.147232) <= KAT_TOL
    assert abs(out.p_values[0] - oracles.runs_p("1001101011")) <= ORACLE_TOL
    assert out.statistic == 7.0  # observed number of runs


def test_kat_cumulative_sums():
    out = cumulative_sums("1011010111")
    assert abs(out.p_values[0] - 0.411659) <= KAT_TOL
    assert abs(out.p_values[0] - oracles.cusum_p("1011010111")) <= ORACLE_TOL
    assert out.statistic == 4.0  # forward maximum excursion


def test_kat_approximate_entropy():
    out = approximate_entropy("0100110101", m=3)
    assert abs(out.p_values[0] - 0.261961) <= KAT_TOL
    assert abs(out.p_values[0] - oracles.approximate_entropy_p("0100110101", 3)) <= ORACLE_TOL


def test_kat_serial():
    out = serial("0011011101", m=3)
    want = oracles.serial_ps("0011011101", 3)
    assert abs(out.p_values[0] - 0.808792) <= KAT_TOL
    assert abs(out.p_values[1] - 0.670320) <= KAT_TOL
    assert abs(out.p_values[0] - want[0]) <= ORACLE_TOL
    assert abs(out.p_values[1] - want[1]) <= ORACLE_TOL


# ---------------------------------------------------------------------------
# Fast path vs naive oracles on random input


def _random_bits(seed: int, n: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, n, dtype=np.uint8)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_monobit_runs_cusum_match_oracles(seed):
    bits = _random_bits(seed, 700 + 13 * seed)
    assert abs(frequency_monobit(bits).p_values[0] - oracles.monobit_p(bits)) <= ORACLE_TOL
    assert abs(runs(bits).p_values[0] - oracles.runs_p(bits)) <= ORACLE_TOL
    out = cumulative_sums(bits)
    assert abs(out.p_values[0] - oracles.cusum_p(bits)) <= ORACLE_TOL
    assert abs(out.p_values[1] - oracles.cusum_p(bits, reverse=True)) <= ORACLE_TOL


@pytest.mark.parametrize("seed,block_size", [(5, 10), (6, 20), (7, 128)])
def test_block_frequency_matches_oracle(seed, block_size):
    bits = _random_bits(seed, 1280)
    got = block_frequency(bits, block_size=block_size).p_values[0]
    assert abs(got - oracles.block_frequency_p(bits, block_size)) <= ORACLE_TOL


@pytest.mark.parametrize("seed,m", [(8, 2), (9, 3), (10, 4)])
def test_approximate_entropy_matches_oracle(seed, m):
    bits = _random_bits(seed, 600)
    got = approximate_entropy(bits, m=m).p_values[0]
    assert abs(got - oracles.approximate_entropy_p(bits, m)) <= ORACLE_TOL


@pytest.mark.parametrize("seed,m", [(11, 2), (12, 3), (13, 5)])
def test_serial_matches_oracle(seed, m):
    bits = _random_bits(seed, 600)
    got = serial(bits, m=m).p_values
    want = oracles.serial_ps(bits, m)
    assert abs(got[0] - want[0]) <= ORACLE_TOL
    assert abs(got[1] - want[1]) <= ORACLE_TOL


def test_cusum_reversal_swaps_p_values():
    bits = _random_bits(14, 500)
    fwd = cumulative_sums(bits).p_values
    rev = cumulative_sums(bits[::-1]).p_values
    assert fwd[0] == pytest.approx(rev[1], abs=1e-12)
    assert fwd[1] == pytest.approx(rev[0], abs=1e-12)


# ---------------------------------------------------------------------------
# Longest run of ones


def test_longest_run_block_scan_matches_oracle():
    rng = np.random.default_rng(15)
    blocks = rng.integers(0, 2, (50, 8), dtype=np.uint8)
    blocks[0] = 1  # saturated block
    blocks[1] = 0  # empty block
    got = _longest_run_per_block(blocks)
    want = [oracles.longest_run_of_ones_in(row) for row in blocks]
    assert got.tolist() == want


def test_longest_run_class_probabilities_by_enumeration():
    # For 8-bit blocks the class probabilities are exact dyadic fractions;
    # recover them by enumerating all 256 blocks.
    counts = [0, 0, 0, 0]
    for value in range(256):
        block = [(value >> k) & 1 for k in range(8)]
        longest = oracles.longest_run_of_ones_in(block)
        counts[min(max(longest, 1), 4) - 1] += 1
    assert [c / 256.0 for c in counts] == [0.21484375, 0.3671875, 0.23046875, 0.1875]


def _longest_run_oracle_p(bits, block_size, v_min, v_max, pi):
    num_blocks = len(bits) // block_size
    counts = [0] * (v_max - v_min + 1)
    for i in range(num_blocks):
        longest = oracles.longest_run_of_ones_in(bits[i * block_size : (i + 1) * block_size])
        counts[min(max(longest, v_min), v_max) - v_min] += 1
    chi2 = sum(
        (c - num_blocks * p) ** 2 / (num_blocks * p) for c, p in zip(counts, pi)
    )
    return oracles.igamc_by_quadrature((len(pi) - 1) / 2.0, chi2 / 2.0)


@pytest.mark.parametrize(
    "seed,n,block_size,v_min,v_max,pi",
    [
        (16, 1280, 8, 1, 4, (0.21484375, 0.3671875, 0.23046875, 0.1875)),
        (17, 12544, 128, 4, 9,
         (0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847)),
        (18, 750000, 10**4, 10, 16,
         (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    ],
)
def test_longest_run_matches_oracle_all_regimes(seed, n, block_size, v_min, v_max, pi):
    bits = _random_bits(seed, n)
    got = longest_run_of_ones(bits).p_values[0]
    want = _longest_run_oracle_p(bits.tolist(), block_size, v_min, v_max, pi)
    assert abs(got - want) <= ORACLE_TOL


# ---------------------------------------------------------------------------
# Matrix rank


def test_gf2_rank_matches_rowspace_oracle():
    rng = np.random.default_rng(19)
    for _ in range(50):
        m = rng.integers(0, 2, (6, 6), dtype=np.uint8)
        assert gf2_rank(m) == oracles.rank_by_rowspace(m)
    assert gf2_rank(np.eye(8, dtype=np.uint8)) == 8
    assert gf2_rank(np.zeros((5, 5), dtype=np.uint8)) == 0
    dup = np.array([[1, 0, 1], [1, 0, 1], [0, 1, 0]], dtype=np.uint8)
    assert gf2_rank(dup) == 2
    with pytest.raises(DimensionError):
        gf2_rank(np.array([1, 0, 1]))
    with pytest.raises(ParameterError):
        gf2_rank(np.array([[2]]))


def _pack_rows(matrix: np.ndarray) -> np.ndarray:
    packed = np.packbits(matrix.astype(np.uint8), axis=1)
    return packed.astype(np.int64) @ np.array([1 << 24, 1 << 16, 1 << 8, 1], dtype=np.int64)


def test_rank32_batch_matches_gf2_rank():
    rng = np.random.default_rng(20)
    mats = rng.integers(0, 2, (200, 32, 32), dtype=np.uint8)
    mats[0] = np.eye(32, dtype=np.uint8)
    mats[1] = 0
    mats[2, :, :] = mats[2, 0, :]  # rank-1 matrix
    words = np.stack([_pack_rows(m) for m in mats])
    got = _rank32_batch(words)
    for k in range(200):
        assert got[k] == gf2_rank(mats[k])


def test_rank_probabilities_match_published_rounding():
    assert abs(_RANK_PROBS[0] - 0.2888) <= 1e-4
    assert abs(_RANK_PROBS[1] - 0.5776) <= 1e-4
    assert abs(_RANK_PROBS[2] - 0.1336) <= 1e-4
    assert sum(_RANK_PROBS) == pytest.approx(1.0, abs=1e-12)


def test_full_rank_frequency_monte_carlo():
    # P(rank = 32) for a uniform 32x32 GF(2) matrix, checked empirically.
    rng = np.random.default_rng(21)
    trials = 10_000
    mats = rng.integers(0, 2, (trials, 32, 32), dtype=np.uint8)
    words = np.stack([_pack_rows(m) for m in mats])
    ranks = _rank32_batch(words)
    frac = np.count_nonzero(ranks == 32) / trials
    sigma = math.sqrt(_RANK_PROBS[0] * (1 - _RANK_PROBS[0]) / trials)
    assert abs(frac - _RANK_PROBS[0]) <= 3 * sigma


def test_binary_matrix_rank_matches_elimination_oracle():
    bits = _random_bits(22, 40 * 1024)
    got = binary_matrix_rank(bits)
    counts = [0, 0, 0]
    for i in range(40):
        m = bits[i * 1024 : (i + 1) * 1024].reshape(32, 32)
        r = gf2_rank(m)
        counts[0 if r == 32 else (1 if r == 31 else 2)] += 1
    chi2 = sum((c - 40 * p) ** 2 / (40 * p) for c, p in zip(counts, _RANK_PROBS))
    want = oracles.igamc_by_quadrature(1.0, chi2 / 2.0)
    assert abs(got.p_values[0] - want) <= ORACLE_TOL
    assert got.statistic == pytest.approx(chi2, abs=1e-9)


# ---------------------------------------------------------------------------
# Spectral


@pytest.mark.parametrize("seed,n", [(23, 16), (24, 64)])
def test_dft_matches_naive_oracle(seed, n):
    bits = _random_bits(seed, n)
    mags = np.abs(np.fft.rfft(2.0 * bits - 1.0))[: n // 2]
    want_mags = oracles.dft_magnitudes(bits)
    assert np.allclose(mags, want_mags, atol=1e-9)
    threshold = math.sqrt(n * math.log(20.0))
    below = sum(1 for v in want_mags if v < threshold)
    d = (below - 0.95 * n / 2.0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    want_p = oracles.erfc_by_quadrature(abs(d) / math.sqrt(2.0))
    out = dft_spectral(bits)
    assert abs(out.p_values[0] - want_p) <= ORACLE_TOL
    assert out.statistic == pytest.approx(d, abs=1e-9)


def test_dft_flags_periodic_sequence():
    # A strictly alternating sequence concentrates all spectral mass at
    # the Nyquist frequency, leaving every counted bin below threshold.
    out = dft_spectral("10" * 512)
    assert out.p_values[0] < 1e-6
    assert not out.passed


# ---------------------------------------------------------------------------
# Berlekamp-Massey and linear complexity


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 21, 40, 64, 100, 257])
def test_berlekamp_massey_matches_naive(n):
    bits = _random_bits(25 + n, n)
    assert berlekamp_massey(bits) == oracles.berlekamp_massey_naive(bits)


def test_berlekamp_massey_known_sequences():
    assert berlekamp_massey([]) == 0
    assert berlekamp_massey([0, 0, 0, 0]) == 0
    assert berlekamp_massey([1]) == 1
    assert berlekamp_massey([0, 0, 1]) == 3  # delayed impulse needs full length
    assert berlekamp_massey([1, 1, 1, 1, 1, 1]) == 1
    assert berlekamp_massey([0, 1] * 8) == 2


@pytest.mark.parametrize("degree,taps", [(4, [4, 3]), (7, [7, 6]), (9, [9, 5])])
def test_berlekamp_massey_recovers_lfsr_degree(degree, taps):
    # The output column of a maximal LFSR has linear complexity = degree.
    states = oracles.lfsr_state_ints(degree, taps, 1, 4 * degree)
    stream = [(s >> (degree - 1)) & 1 for s in states]
    assert berlekamp_massey(stream) == degree
    assert oracles.berlekamp_massey_naive(stream) == degree


def test_linear_complexity_matches_naive_oracle():
    bits = _random_bits(26, 10_000)
    block_size = 500
    got = linear_complexity(bits, block_size=block_size)

    mean = block_size / 2.0 + (9.0 + (-1.0) ** (block_size + 1)) / 36.0
    mean -= (block_size / 3.0 + 2.0 / 9.0) / 2.0**block_size
    counts = [0] * 7
    bounds = [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]
    for i in range(20):
        block = bits[i * block_size : (i + 1) * block_size]
        t = (-1.0) ** block_size * (oracles.berlekamp_massey_naive(block) - mean) + 2.0 / 9.0
        cls = 0
        while cls < 6 and t > bounds[cls]:
            cls += 1
        counts[cls] += 1
    probs = [0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833]
    chi2 = sum((c - 20 * p) ** 2 / (20 * p) for c, p in zip(counts, probs))
    want = oracles.igamc_by_quadrature(3.0, chi2 / 2.0)
    assert abs(got.p_values[0] - want) <= ORACLE_TOL
    assert got.statistic == pytest.approx(chi2, abs=1e-9)


def test_linear_complexity_rejects_degenerate_input():
    out = linear_complexity("0" * 2000, block_size=500)
    assert out.p_values[0] < 1e-10
    assert not out.passed


def test_linear_complexity_large_block_mean_correction_negligible():
    bits = _random_bits(27, 4000)
    out = linear_complexity(bits, block_size=1000)
    assert 0.0 <= out.p_values[0] <= 1.0


# ---------------------------------------------------------------------------
# Pattern-count plumbing


def test_pattern_counts_match_cyclic_oracle():
    bits = _random_bits(28, 200)
    counts = _pattern_counts(bits, 3)
    assert counts.sum() == 200
    oracle = oracles._cyclic_window_counter(bits.tolist(), 3)
    for value in range(8):
        pattern = tuple((value >> (2 - k)) & 1 for k in range(3))
        assert counts[value] == oracle.get(pattern, 0)


def test_fold_counts_consistent_with_direct_counting():
    bits = _random_bits(29, 150)
    folded = _fold_counts(_pattern_counts(bits, 4))
    assert folded.tolist() == _pattern_counts(bits, 3).tolist()


# ---------------------------------------------------------------------------
# Guards and structural minima


@pytest.mark.parametrize(
    "func,kwargs,n,minimum",
    [
        (frequency_monobit, {}, 0, 1),
        (block_frequency, {"block_size": 128}, 100, 128),
        (runs, {}, 0, 1),
        (longest_run_of_ones, {}, 127, 128),
        (binary_matrix_rank, {}, 1000, 38 * 1024),
        (dft_spectral, {}, 1, 2),
        (cumulative_sums, {}, 0, 1),
        (approximate_entropy, {"m": 4}, 4, 5),
        (serial, {"m": 5}, 4, 5),
        (linear_complexity, {"block_size": 500}, 499, 500),
    ],
)
def test_insufficient_length_reported_with_fields(func, kwargs, n, minimum):
    bits = np.zeros(n, dtype=np.uint8)
    with pytest.raises(InsufficientLengthError) as info:
        func(bits, **kwargs)
    err = info.value
    assert err.n == n
    assert err.minimum == minimum
    assert err.test_name == func.__name__


def test_parameter_validation():
    bits = np.zeros(100, dtype=np.uint8)
    with pytest.raises(ParameterError):
        block_frequency(bits, block_size=0)
    with pytest.raises(ParameterError):
        approximate_entropy(bits, m=0)
    with pytest.raises(ParameterError):
        serial(bits, m=0)
    with pytest.raises(ParameterError):
        linear_complexity(bits, block_size=3)


def test_runs_prerequisite_failure_reports_zero():
    assert runs("1" * 100).p_values[0] == 0.0
    assert runs("0" * 100).p_values[0] == 0.0
    biased = "1" * 80 + "0" * 20
    assert runs(biased).p_values[0] == 0.0  # |pi - 1/2| beyond 2/sqrt(n)


def test_outcome_pass_semantics():
    balanced = frequency_monobit("10" * 50)
    assert balanced.p_values[0] == 1.0
    assert balanced.passed
    constant = frequency_monobit("1" * 100)
    assert constant.p_values[0] < 1e-10
    assert not constant.passed
    assert constant.alpha == 0.01
    lenient = frequency_monobit("1" * 100, alpha=0.0)
    assert lenient.passed  # alpha = 0 accepts everything


def test_all_tests_registry():
    names = [f.__name__ for f in ALL_TESTS]
    assert names == [
        "frequency_monobit",
        "block_frequency",
        "cumulative_sums",
        "runs",
        "longest_run_of_ones",
        "binary_matrix_rank",
        "dft_spectral",
        "approximate_entropy",
        "serial",
        "linear_complexity",
    ]


def test_default_parameters_pinned():
    assert inspect.signature(block_frequency).parameters["block_size"].default == 128
    assert inspect.signature(approximate_entropy).parameters["m"].default == 10
    assert inspect.signature(serial).parameters["m"].default == 16
    assert inspect.signature(linear_complexity).parameters["block_size"].default == 500


@settings(max_examples=50, deadline=None)
@given(bits=st.lists(st.integers(0, 1), min_size=20, max_size=400))
def test_p_values_stay_in_unit_interval(bits):
    for outcome in (
        frequency_monobit(bits),
        runs(bits),
        cumulative_sums(bits),
        serial(bits, m=3),
        approximate_entropy(bits, m=2),
    ):
        for p in outcome.p_values:
            assert 0.0 <= p <= 1.0
