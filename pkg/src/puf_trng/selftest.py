"""Built-in self-test: known-answer vectors, cross-implementation oracle
checks, and a p-value range fuzz.  Everything here is fast enough to run
on every install (well under a minute)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import nist
from .generator import RegisterState, TapSet, lfsr_period, lfsr_step
from .puf import PufParameters, feature_transform, model_weights, propagate, sample_puf

KAT_TOLERANCE = 1e-4
ORACLE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class KnownAnswer:
    """A hand-computable reference vector: expected p-values (compared
    positionally, so a prefix may be given) for one test invocation."""

    name: str
    bits: str
    expected: tuple[float, ...]
    run: Callable[[str], nist.TestOutcome]


KNOWN_ANSWERS: tuple[KnownAnswer, ...] = (
    KnownAnswer("frequency_monobit", "1011010101", (0.527089,), nist.frequency_monobit),
    KnownAnswer(
        "block_frequency M=3", "0110011010", (0.801252,),
        lambda b: nist.block_frequency(b, block_size=3),
    ),
    KnownAnswer("runs", "1001101011", (0.147232,), nist.runs),
    KnownAnswer("cumulative_sums forward", "1011010111", (0.411659,), nist.cumulative_sums),
    KnownAnswer(
        "approximate_entropy m=3", "0100110101", (0.261961,),
        lambda b: nist.approximate_entropy(b, m=3),
    ),
    KnownAnswer(
        "serial m=3", "0011011101", (0.808792, 0.670320),
        lambda b: nist.serial(b, m=3),
    ),
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _check_known_answers() -> list[CheckResult]:
    results = []
    for kat in KNOWN_ANSWERS:
        outcome = kat.run(kat.bits)
        errors = [
            abs(p - e) for p, e in zip(outcome.p_values, kat.expected)
        ]
        ok = len(outcome.p_values) >= len(kat.expected) and all(
            e <= KAT_TOLERANCE for e in errors
        )
        detail = ", ".join(
            f"p={p:.6f} (want {e:.6f})" for p, e in zip(outcome.p_values, kat.expected)
        )
        results.append(CheckResult(f"kat: {kat.name}", ok, detail))
    return results


def _check_puf_oracle() -> CheckResult:
    """Stage-wise propagation must equal the parity-feature linear model
    on every challenge of small instances."""
    worst = 0.0
    for n in range(2, 9):
        instance = sample_puf(PufParameters(n_stages=n, instance_seed=1000 + n))
        weights = model_weights(instance)
        for idx in range(1 << n):
            challenge = np.array([(idx >> k) & 1 for k in range(n)], dtype=np.uint8)
            delta = propagate(instance, challenge)
            model = float(weights @ feature_transform(challenge))
            worst = max(worst, abs(delta - model))
    ok = worst <= ORACLE_TOLERANCE
    return CheckResult("puf model oracle n=2..8", ok, f"max |delta - model| = {worst:.3e}")


def _check_lfsr_periods() -> CheckResult:
    cases = (
        (TapSet(degree=4, taps=frozenset({4, 3})), 15),
        (TapSet(degree=7, taps=frozenset({7, 6})), 127),
        (TapSet(degree=4, taps=frozenset({4, 2})), 6),
    )
    observed = [lfsr_period(taps, 1) for taps, _want in cases]
    ok = all(got == want for got, (_t, want) in zip(observed, cases))
    return CheckResult("lfsr periods", ok, f"periods {observed} (want [15, 127, 6])")


def _check_berlekamp_massey() -> CheckResult:
    state = RegisterState(bits=(1, 0, 0, 0))
    taps = TapSet(degree=4, taps=frozenset({4, 3}))
    stream = []
    for _ in range(30):
        stream.append(state.bits[-1])
        state = lfsr_step(state, taps)
    degree = nist.berlekamp_massey(stream)
    single = nist.berlekamp_massey([1] + [0] * 19)
    zeros = nist.berlekamp_massey([0] * 20)
    ok = degree == 4 and single == 1 and zeros == 0
    return CheckResult(
        "berlekamp-massey", ok, f"L(taps {{4,3}} stream)={degree}, L(100..)={single}, L(0..)={zeros}"
    )


def _fuzz_sequences(rng: np.random.Generator) -> list[np.ndarray]:
    seqs = [
        np.zeros(256, dtype=np.uint8),
        np.ones(256, dtype=np.uint8),
        np.tile([0, 1], 128).astype(np.uint8),
        np.array([1] + [0] * 255, dtype=np.uint8),
    ]
    for _ in range(24):
        n = int(rng.integers(2, 4097))
        seqs.append(rng.integers(0, 2, n, dtype=np.uint8))
    return seqs


def _check_p_value_ranges(rng_seed: int) -> CheckResult:
    rng = np.random.default_rng(rng_seed)
    tests = (
        nist.frequency_monobit,
        lambda b: nist.block_frequency(b, block_size=8),
        nist.cumulative_sums,
        nist.runs,
        nist.longest_run_of_ones,
        nist.binary_matrix_rank,
        nist.dft_spectral,
        lambda b: nist.approximate_entropy(b, m=3),
        lambda b: nist.serial(b, m=3),
        lambda b: nist.linear_complexity(b, block_size=8),
    )
    checked = 0
    for seq in _fuzz_sequences(rng):
        for fn in tests:
            try:
                outcome = fn(seq)
            except nist.InsufficientLengthError:
                continue
            for p in outcome.p_values:
                if not 0.0 <= p <= 1.0:
                    return CheckResult(
                        "p-value range fuzz", False,
                        f"{outcome.test_name} produced p={p} on n={seq.size}",
                    )
                checked += 1
    return CheckResult("p-value range fuzz", True, f"{checked} p-values all in [0, 1]")


def run_selftest(rng_seed: int = 123) -> tuple[bool, tuple[CheckResult, ...]]:
    """Run every check; returns (all passed, individual results)."""
    results = _check_known_answers()
    results.append(_check_puf_oracle())
    results.append(_check_lfsr_periods())
    results.append(_check_berlekamp_massey())
    results.append(_check_p_value_ranges(rng_seed))
    return all(r.ok for r in results), tuple(results)
