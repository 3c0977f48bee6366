"""Ten SP 800-22 statistical tests with their reference constants.

Each test takes a 0/1 bit array (anything `as_bit_array` accepts) plus
its parameters and returns a TestOutcome; a sequence below the test's
structural minimum raises InsufficientLengthError.  The Berlekamp-Massey
and GF(2)-rank subroutines are exposed for direct use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DimensionError, InsufficientLengthError, ParameterError
from .pvalues import erfc, igamc, normal_cdf

ALPHA_DEFAULT = 0.01


@dataclass(frozen=True)
class TestOutcome:
    """Result of one statistical test on one sequence.

    ``passed`` means every p-value reached ``alpha``.  Serialized reports
    call this field "pass", which Python reserves as a keyword.
    """

    test_name: str
    statistic: float
    p_values: tuple[float, ...]
    passed: bool
    alpha: float = ALPHA_DEFAULT


def as_bit_array(bits) -> np.ndarray:
    """Coerce a bit container (array, list, or '0101' string) to uint8."""
    if isinstance(bits, str):
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits)
    if arr.ndim != 1:
        raise DimensionError(f"bit sequence must be one-dimensional, got shape {arr.shape}")
    if arr.dtype == np.bool_:
        arr = arr.astype(np.uint8)
    elif arr.dtype != np.uint8:
        arr = arr.astype(np.uint8)
    if arr.size and int(arr.max()) > 1:
        raise ParameterError("bit sequence must contain only 0 and 1")
    return arr


def _outcome(name: str, statistic: float, p_values, alpha: float) -> TestOutcome:
    ps = tuple(min(max(float(p), 0.0), 1.0) for p in p_values)
    return TestOutcome(
        test_name=name,
        statistic=float(statistic),
        p_values=ps,
        passed=all(p >= alpha for p in ps),
        alpha=alpha,
    )


def _require(name: str, n: int, minimum: int) -> None:
    if n < minimum:
        raise InsufficientLengthError(test_name=name, n=n, minimum=minimum)


# ---------------------------------------------------------------------------
# Subroutines


def berlekamp_massey(bits) -> int:
    """Length of the shortest LFSR generating ``bits`` (linear complexity).

    Incremental-product formulation: instead of re-deriving the
    discrepancy from the connection polynomial each round, the products
    sequence*B and sequence*C are carried as integers and updated with
    single shift/xor operations, which is far faster in Python than
    bit-at-a-time loops.  Only the complexity is returned, not the
    polynomial, which is all the linear-complexity test needs.
    """
    arr = as_bit_array(bits)
    s = int.from_bytes(np.packbits(arr, bitorder="little").tobytes(), "little")
    prod_b = prod_c = s
    complexity = 0
    gap = 0
    for n in range(arr.size):
        disc = prod_c & (1 << gap)
        gap += 1
        if disc:
            prod_c >>= gap
            gap = 0
            if 2 * complexity <= n:
                prod_b, prod_c = prod_c, prod_b
                complexity = n + 1 - complexity
            prod_c ^= prod_b
    return complexity


def gf2_rank(matrix) -> int:
    """Rank of a 0/1 matrix over GF(2) by Gaussian elimination."""
    m = np.array(matrix, dtype=np.uint8)
    if m.ndim != 2:
        raise DimensionError(f"matrix must be two-dimensional, got shape {m.shape}")
    if m.size and int(m.max()) > 1:
        raise ParameterError("matrix entries must be 0 or 1")
    n_rows, n_cols = m.shape
    rank = 0
    for col in range(n_cols):
        pivots = np.flatnonzero(m[rank:, col])
        if pivots.size == 0:
            continue
        pivot = rank + int(pivots[0])
        if pivot != rank:
            m[[rank, pivot]] = m[[pivot, rank]]
        clear = m[:, col] == 1
        clear[rank] = False
        m[clear] ^= m[rank]
        rank += 1
        if rank == n_rows:
            break
    return rank


@numba.njit(cache=True)
def _rank32_batch(words):
    """Ranks of packed 32x32 GF(2) matrices (one int64 word per row,
    bit 31 = first column)."""
    count = words.shape[0]
    out = np.empty(count, dtype=np.int64)
    for k in range(count):
        m = words[k].copy()
        rank = 0
        for col in range(32):
            bit = 1 << (31 - col)
            pivot = -1
            for r in range(rank, 32):
                if m[r] & bit:
                    pivot = r
                    break
            if pivot < 0:
                continue
            tmp = m[pivot]
            m[pivot] = m[rank]
            m[rank] = tmp
            for r in range(32):
                if r != rank and (m[r] & bit):
                    m[r] ^= m[rank]
            rank += 1
        out[k] = rank
    return out


def _pattern_counts(arr: np.ndarray, m: int) -> np.ndarray:
    """Counts of all cyclic m-bit windows, indexed by window value
    (first bit most significant).  The counts sum to n."""
    n = arr.size
    ext = np.concatenate([arr, arr[: m - 1]]) if m > 1 else arr
    values = np.zeros(n, dtype=np.int64)
    for i in range(m):
        values = (values << 1) | ext[i : i + n]
    return np.bincount(values, minlength=1 << m)


def _fold_counts(counts: np.ndarray) -> np.ndarray:
    """Window counts for order m-1 from order-m counts: the (m-1)-window
    at each position is the m-window's value shifted right by one."""
    return counts.reshape(-1, 2).sum(axis=1)


def _psi_squared(counts: np.ndarray, n: int) -> float:
    num_patterns = counts.size
    return float(num_patterns / n * (counts.astype(np.float64) ** 2).sum() - n)


# ---------------------------------------------------------------------------
# The ten tests


def frequency_monobit(bits, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """Monobit balance: S = |#ones - #zeros|, p = erfc(S / sqrt(2n))."""
    arr = as_bit_array(bits)
    n = arr.size
    _require("frequency_monobit", n, 1)
    s = abs(2 * int(arr.sum()) - n)
    p = erfc(s / math.sqrt(2.0 * n))
    return _outcome("frequency_monobit", s / math.sqrt(n), (p,), alpha)


def block_frequency(bits, block_size: int = 128, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """Per-block one-proportions against 1/2, chi-square with N blocks."""
    if block_size < 1:
        raise ParameterError(f"block_size must be >= 1, got {block_size}")
    arr = as_bit_array(bits)
    n = arr.size
    _require("block_frequency", n, block_size)
    num_blocks = n // block_size
    props = arr[: num_blocks * block_size].reshape(num_blocks, block_size).mean(axis=1)
    chi2 = 4.0 * block_size * float(((props - 0.5) ** 2).sum())
    p = igamc(num_blocks / 2.0, chi2 / 2.0)
    return _outcome("block_frequency", chi2, (p,), alpha)


def runs(bits, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """Total number of runs against its expectation under the observed
    one-proportion; prerequisite failure reports p = 0."""
    arr = as_bit_array(bits)
    n = arr.size
    _require("runs", n, 1)
    pi = float(arr.mean())
    v = 1 + int(np.count_nonzero(np.diff(arr)))
    if pi in (0.0, 1.0) or abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return _outcome("runs", float(v), (0.0,), alpha)
    p = erfc(abs(v - 2.0 * n * pi * (1.0 - pi)) / (2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)))
    return _outcome("runs", float(v), (p,), alpha)


# Longest-run-of-ones regimes: (minimum n, block size M, class clip range,
# class probabilities) per SP 800-22 section 2.4.
_LONGEST_RUN_REGIMES = (
    (750000, 10**4, 10, 16,
     (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6272, 128, 4, 9,
     (0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847)),
    (128, 8, 1, 4,
     (0.21484375, 0.3671875, 0.23046875, 0.1875)),
)


def _longest_run_per_block(blocks: np.ndarray) -> np.ndarray:
    """Longest run of ones in each row, via run boundaries of the
    zero-padded flattened array (rows cannot interfere across the pads)."""
    num_blocks, block_size = blocks.shape
    padded = np.zeros((num_blocks, block_size + 2), dtype=np.int8)
    padded[:, 1:-1] = blocks
    deltas = np.diff(padded.ravel().astype(np.int8))
    starts = np.flatnonzero(deltas == 1)
    ends = np.flatnonzero(deltas == -1)
    longest = np.zeros(num_blocks, dtype=np.int64)
    if starts.size:
        np.maximum.at(longest, starts // (block_size + 2), ends - starts)
    return longest


def longest_run_of_ones(bits, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """Distribution of per-block longest runs over the SP 800-22 classes."""
    arr = as_bit_array(bits)
    n = arr.size
    _require("longest_run_of_ones", n, 128)
    for n_min, block_size, v_min, v_max, pi in _LONGEST_RUN_REGIMES:
        if n >= n_min:
            break
    num_blocks = n // block_size
    blocks = arr[: num_blocks * block_size].reshape(num_blocks, block_size)
    longest = _longest_run_per_block(blocks)
    classes = np.clip(longest, v_min, v_max) - v_min
    counts = np.bincount(classes, minlength=v_max - v_min + 1)
    expected = num_blocks * np.asarray(pi)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = igamc((len(pi) - 1) / 2.0, chi2 / 2.0)
    return _outcome("longest_run_of_ones", chi2, (p,), alpha)


def _rank_class_probabilities() -> tuple[float, float, float]:
    """Exact P(rank = 32), P(rank = 31), P(rank <= 30) for a uniform
    random 32x32 GF(2) matrix (SP 800-22 rounds these to 4 digits)."""

    def prob(m: int, r: int) -> float:
        p = 2.0 ** (r * (2 * m - r) - m * m)
        for i in range(r):
            p *= (1.0 - 2.0 ** (i - m)) ** 2 / (1.0 - 2.0 ** (i - r))
        return p

    p_full = prob(32, 32)
    p_defect1 = prob(32, 31)
    return p_full, p_defect1, 1.0 - p_full - p_defect1


_RANK_PROBS = _rank_class_probabilities()
_RANK_MATRIX_BITS = 32 * 32
_RANK_MIN_MATRICES = 38


def binary_matrix_rank(bits, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """GF(2) ranks of disjoint 32x32 matrices over three rank classes."""
    arr = as_bit_array(bits)
    n = arr.size
    _require("binary_matrix_rank", n, _RANK_MIN_MATRICES * _RANK_MATRIX_BITS)
    num_matrices = n // _RANK_MATRIX_BITS
    rows = arr[: num_matrices * _RANK_MATRIX_BITS].reshape(num_matrices * 32, 32)
    packed = np.packbits(rows, axis=1)
    words = (
        packed.astype(np.int64) @ np.array([1 << 24, 1 << 16, 1 << 8, 1], dtype=np.int64)
    ).reshape(num_matrices, 32)
    ranks = _rank32_batch(words)
    counts = np.array(
        [
            int(np.count_nonzero(ranks == 32)),
            int(np.count_nonzero(ranks == 31)),
            int(np.count_nonzero(ranks <= 30)),
        ]
    )
    expected = num_matrices * np.asarray(_RANK_PROBS)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = igamc(1.0, chi2 / 2.0)
    return _outcome("binary_matrix_rank", chi2, (p,), alpha)


def dft_spectral(bits, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """Count of sub-threshold DFT peaks in the first n/2 bins against the
    expected 95 percent, threshold T = sqrt(n ln 20)."""
    arr = as_bit_array(bits)
    n = arr.size
    _require("dft_spectral", n, 2)
    x = 2.0 * arr.astype(np.float64) - 1.0
    magnitudes = np.abs(np.fft.rfft(x))[: n // 2]
    threshold = math.sqrt(n * math.log(20.0))
    expected_below = 0.95 * n / 2.0
    observed_below = int(np.count_nonzero(magnitudes < threshold))
    d = (observed_below - expected_below) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    p = erfc(abs(d) / math.sqrt(2.0))
    return _outcome("dft_spectral", d, (p,), alpha)


def _cusum_p_value(n: int, z: int) -> float:
    """SP 800-22 normal-CDF series for the maximum excursion z.  The
    published summation bounds are real-valued; the integer k ranges take
    the ceiling of each lower bound and the floor of each upper bound."""
    sqrt_n = math.sqrt(n)
    hi = math.floor((n / z - 1) / 4)
    total = 1.0
    for k in range(math.ceil((-n / z + 1) / 4), hi + 1):
        total -= normal_cdf((4 * k + 1) * z / sqrt_n) - normal_cdf((4 * k - 1) * z / sqrt_n)
    for k in range(math.ceil((-n / z - 3) / 4), hi + 1):
        total += normal_cdf((4 * k + 3) * z / sqrt_n) - normal_cdf((4 * k + 1) * z / sqrt_n)
    return total


def cumulative_sums(bits, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """Maximum excursion of the +-1 random walk, forward and reverse
    (two p-values in one outcome)."""
    arr = as_bit_array(bits)
    n = arr.size
    _require("cumulative_sums", n, 1)
    steps = 2 * arr.astype(np.int64) - 1
    z_forward = int(np.abs(np.cumsum(steps)).max())
    z_reverse = int(np.abs(np.cumsum(steps[::-1])).max())
    p_forward = _cusum_p_value(n, z_forward)
    p_reverse = _cusum_p_value(n, z_reverse)
    return _outcome("cumulative_sums", float(z_forward), (p_forward, p_reverse), alpha)


def approximate_entropy(bits, m: int = 10, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """ApEn(m) from cyclic m- and (m+1)-window frequencies;
    chi2 = 2n(ln 2 - ApEn), p = igamc(2^(m-1), chi2/2)."""
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    arr = as_bit_array(bits)
    n = arr.size
    _require("approximate_entropy", n, m + 1)

    def phi(counts: np.ndarray) -> float:
        freq = counts[counts > 0] / n
        return float((freq * np.log(freq)).sum())

    counts_m1 = _pattern_counts(arr, m + 1)
    apen = phi(_fold_counts(counts_m1)) - phi(counts_m1)
    chi2 = max(2.0 * n * (math.log(2.0) - apen), 0.0)
    p = igamc(2.0 ** (m - 1), chi2 / 2.0)
    return _outcome("approximate_entropy", chi2, (p,), alpha)


def serial(bits, m: int = 16, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """First- and second-difference psi-square statistics over cyclic
    m-window counts (two p-values in one outcome)."""
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    arr = as_bit_array(bits)
    n = arr.size
    _require("serial", n, m)
    counts_m = _pattern_counts(arr, m)
    psi_m = _psi_squared(counts_m, n)
    if m >= 2:
        counts_m1 = _fold_counts(counts_m)
        psi_m1 = _psi_squared(counts_m1, n)
        psi_m2 = _psi_squared(_fold_counts(counts_m1), n) if m >= 3 else 0.0
    else:
        psi_m1 = psi_m2 = 0.0
    delta1 = max(psi_m - psi_m1, 0.0)
    delta2 = max(psi_m - 2.0 * psi_m1 + psi_m2, 0.0)
    p1 = igamc(2.0 ** (m - 2), delta1 / 2.0)
    p2 = igamc(2.0 ** (m - 3), delta2 / 2.0)
    return _outcome("serial", delta1, (p1, p2), alpha)


# Linear-complexity T-statistic class probabilities (7 classes bounded at
# -2.5, -1.5, -0.5, 0.5, 1.5, 2.5) per SP 800-22 section 2.10.
_LC_CLASS_BOUNDS = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
_LC_CLASS_PROBS = np.array([0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833])


def linear_complexity(bits, block_size: int = 500, alpha: float = ALPHA_DEFAULT) -> TestOutcome:
    """Berlekamp-Massey complexity of each block against the theoretical
    mean, binned into seven T-statistic classes."""
    if block_size < 4:
        raise ParameterError(f"block_size must be >= 4, got {block_size}")
    arr = as_bit_array(bits)
    n = arr.size
    _require("linear_complexity", n, block_size)
    num_blocks = n // block_size

    mean = block_size / 2.0 + (9.0 + (-1.0) ** (block_size + 1)) / 36.0
    if block_size < 900:  # beyond this the correction is below float precision
        mean -= (block_size / 3.0 + 2.0 / 9.0) / 2.0**block_size
    sign = -1.0 if block_size % 2 else 1.0

    t_values = np.empty(num_blocks)
    for i in range(num_blocks):
        complexity = berlekamp_massey(arr[i * block_size : (i + 1) * block_size])
        t_values[i] = sign * (complexity - mean) + 2.0 / 9.0
    classes = np.searchsorted(_LC_CLASS_BOUNDS, t_values, side="left")
    counts = np.bincount(classes, minlength=7)
    expected = num_blocks * _LC_CLASS_PROBS
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = igamc(3.0, chi2 / 2.0)
    return _outcome("linear_complexity", chi2, (p,), alpha)


ALL_TESTS = (
    frequency_monobit,
    block_frequency,
    cumulative_sums,
    runs,
    longest_run_of_ones,
    binary_matrix_rank,
    dft_spectral,
    approximate_entropy,
    serial,
    linear_complexity,
)
