"""Battery aggregation: run the ten tests over many sequences and apply
the SP 800-22 pass-proportion bound.

Multi-p-value tests contribute one proportion line per p-value (forward
and reverse for cumulative sums, first and second difference for
serial), mirroring how the reference suite tabulates them.  Sequences
too short for a test are marked skipped for that test and excluded from
its proportion, never counted as failures.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import nist
from .errors import InsufficientLengthError, ParameterError

REPORT_VERSION = 1
THREADS_ENV_VAR = "PUF_TRNG_THREADS"

# Proportion-line labels for tests returning several p-values.
_P_VALUE_LABELS = {
    "cumulative_sums": ("cumulative_sums_forward", "cumulative_sums_reverse"),
    "serial": ("serial_delta1", "serial_delta2"),
}


@dataclass(frozen=True)
class BatteryConfig:
    """Battery parameters: significance level, optional stream splitting,
    and the per-test block sizes and orders."""

    alpha: float = nist.ALPHA_DEFAULT
    sequence_length_bits: int | None = None
    sequence_count: int | None = None
    block_frequency_block_size: int = 128
    approximate_entropy_m: int = 10
    serial_m: int = 16
    linear_complexity_block_size: int = 500

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.sequence_length_bits is not None and self.sequence_length_bits < 1:
            raise ParameterError("sequence_length_bits must be >= 1")
        if self.sequence_count is not None and self.sequence_count < 1:
            raise ParameterError("sequence_count must be >= 1")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "sequence_length_bits": self.sequence_length_bits,
            "sequence_count": self.sequence_count,
            "block_frequency_block_size": self.block_frequency_block_size,
            "approximate_entropy_m": self.approximate_entropy_m,
            "serial_m": self.serial_m,
            "linear_complexity_block_size": self.linear_complexity_block_size,
        }


@dataclass(frozen=True)
class SkippedTest:
    """Placeholder result for a test a sequence was too short to run."""

    test_name: str
    reason: str


@dataclass(frozen=True)
class ProportionResult:
    """Pass count for one p-value line against the SP 800-22 bound."""

    test_name: str
    passed: int
    total: int
    lower_bound: float

    @property
    def proportion(self) -> float:
        return self.passed / self.total if self.total else 0.0

    @property
    def verdict(self) -> bool:
        return self.proportion >= self.lower_bound


@dataclass(frozen=True)
class BatteryReport:
    """All per-sequence outcomes plus the per-line proportions."""

    config: BatteryConfig
    results: tuple[tuple[object, ...], ...]
    proportions: tuple[ProportionResult, ...]
    verdict: bool


def proportion_lower_bound(alpha: float, total: int) -> float:
    """SP 800-22 acceptance line: p_hat - 3*sqrt(p_hat(1-p_hat)/total)."""
    if total < 1:
        raise ParameterError(f"total must be >= 1, got {total}")
    p_hat = 1.0 - alpha
    return p_hat - 3.0 * math.sqrt(p_hat * (1.0 - p_hat) / total)


def test_plan(config: BatteryConfig) -> tuple[tuple[str, dict, object], ...]:
    """The battery's (name, params, callable) triples, in report order."""
    a = config.alpha
    return (
        ("frequency_monobit", {}, lambda b: nist.frequency_monobit(b, alpha=a)),
        ("block_frequency", {"block_size": config.block_frequency_block_size},
         lambda b: nist.block_frequency(b, config.block_frequency_block_size, alpha=a)),
        ("cumulative_sums", {}, lambda b: nist.cumulative_sums(b, alpha=a)),
        ("runs", {}, lambda b: nist.runs(b, alpha=a)),
        ("longest_run_of_ones", {}, lambda b: nist.longest_run_of_ones(b, alpha=a)),
        ("binary_matrix_rank", {}, lambda b: nist.binary_matrix_rank(b, alpha=a)),
        ("dft_spectral", {}, lambda b: nist.dft_spectral(b, alpha=a)),
        ("approximate_entropy", {"m": config.approximate_entropy_m},
         lambda b: nist.approximate_entropy(b, config.approximate_entropy_m, alpha=a)),
        ("serial", {"m": config.serial_m},
         lambda b: nist.serial(b, config.serial_m, alpha=a)),
        ("linear_complexity", {"block_size": config.linear_complexity_block_size},
         lambda b: nist.linear_complexity(b, config.linear_complexity_block_size, alpha=a)),
    )


def split_sequences(bits, config: BatteryConfig) -> list[np.ndarray]:
    """Cut one long stream into the battery's sequences.  Without a
    configured sequence length the whole stream is a single sequence."""
    arr = nist.as_bit_array(bits)
    if config.sequence_length_bits is None:
        if config.sequence_count not in (None, 1):
            raise ParameterError("sequence_count needs sequence_length_bits")
        return [arr]
    length = config.sequence_length_bits
    count = config.sequence_count if config.sequence_count is not None else arr.size // length
    if count < 1:
        raise ParameterError(f"stream of {arr.size} bits is shorter than one sequence ({length})")
    if count * length > arr.size:
        raise ParameterError(
            f"stream of {arr.size} bits cannot supply {count} sequences of {length}"
        )
    return [arr[i * length : (i + 1) * length] for i in range(count)]


def resolve_worker_count(max_workers: int | None, n_sequences: int) -> int:
    """Explicit argument wins, then the PUF_TRNG_THREADS cap, then 1."""
    if max_workers is None:
        raw = os.environ.get(THREADS_ENV_VAR)
        if raw is None:
            max_workers = 1
        else:
            try:
                max_workers = int(raw)
            except ValueError:
                raise ParameterError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
    if max_workers < 1:
        raise ParameterError(f"worker count must be >= 1, got {max_workers}")
    return min(max_workers, max(n_sequences, 1))


def _run_one_sequence(arr: np.ndarray, plan) -> tuple[object, ...]:
    entries = []
    for name, _params, fn in plan:
        try:
            entries.append(fn(arr))
        except InsufficientLengthError as exc:
            entries.append(SkippedTest(test_name=name, reason=str(exc)))
    return tuple(entries)


def run_battery(
    streams,
    config: BatteryConfig = BatteryConfig(),
    max_workers: int | None = None,
) -> BatteryReport:
    """Run every test on every sequence and aggregate proportions.

    ``streams`` is an iterable of bit sequences.  Results are ordered by
    (sequence index, test order) regardless of the worker count.
    """
    arrays = [nist.as_bit_array(s) for s in streams]
    if not arrays:
        raise ParameterError("battery needs at least one sequence")
    plan = test_plan(config)
    workers = resolve_worker_count(max_workers, len(arrays))

    if workers == 1:
        results = [_run_one_sequence(arr, plan) for arr in arrays]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda arr: _run_one_sequence(arr, plan), arrays))

    tallies: dict[str, list[int]] = {}
    for entries in results:
        for entry in entries:
            if isinstance(entry, SkippedTest):
                continue
            labels = _P_VALUE_LABELS.get(entry.test_name, (entry.test_name,))
            for label, p in zip(labels, entry.p_values):
                passed, total = tallies.setdefault(label, [0, 0])
                tallies[label] = [passed + (p >= config.alpha), total + 1]

    proportions = tuple(
        ProportionResult(
            test_name=label,
            passed=passed,
            total=total,
            lower_bound=proportion_lower_bound(config.alpha, total),
        )
        for label, (passed, total) in tallies.items()
    )
    verdict = bool(proportions) and all(p.verdict for p in proportions)
    return BatteryReport(
        config=config,
        results=tuple(results),
        proportions=proportions,
        verdict=verdict,
    )


def report_to_dict(report: BatteryReport) -> dict:
    """JSON-ready form: report_version, config echo, per-sequence test
    entries, proportion lines, verdict."""
    params_by_name = {name: params for name, params, _fn in test_plan(report.config)}
    sequences = []
    for entries in report.results:
        seq_doc = []
        for entry in entries:
            if isinstance(entry, SkippedTest):
                seq_doc.append(
                    {"name": entry.test_name, "skipped": True, "reason": entry.reason}
                )
            else:
                seq_doc.append(
                    {
                        "name": entry.test_name,
                        "params": params_by_name.get(entry.test_name, {}),
                        "statistic": entry.statistic,
                        "p_values": list(entry.p_values),
                        "pass": entry.passed,
                    }
                )
        sequences.append(seq_doc)
    return {
        "report_version": REPORT_VERSION,
        "report_type": "nist_battery",
        "config": report.config.to_dict(),
        "results": sequences,
        "proportions": [
            {
                "test_name": p.test_name,
                "passed": p.passed,
                "total": p.total,
                "lower_bound": p.lower_bound,
                "proportion": p.proportion,
                "verdict": p.verdict,
            }
            for p in report.proportions
        ],
        "verdict": report.verdict,
    }
