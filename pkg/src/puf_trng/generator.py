"""Shift-register TRNG core: PUF-fed NFSR with validity-gated output.

The register's parallel state is the PUF challenge.  Each step XORs the
linear feedback (Fibonacci taps) with the dual-arbiter candidate bit to
form the register input, so the register is a genuine nonlinear-feedback
shift register; only evaluations whose arbiters agree emit an output bit.

Generation is inherently sequential (each challenge depends on the
previous state).  ``generate`` runs a compiled kernel that repeats the
exact accumulation order of :func:`puf_trng.puf.propagate`, so the fast
path and the step-by-step reference path are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numba
import numpy as np

from .errors import DimensionError, ParameterError, StarvationError
from .puf import DualArbiterOutcome, PufInstance, PufParameters, dual_arbiter_eval, sample_puf


@dataclass(frozen=True)
class TapSet:
    """Feedback tap positions (exponents of the feedback polynomial).

    Tap position t reads register bit t-1; bit 0 is the newest bit.  The
    degree tap (the register output position) must be present.
    """

    degree: int
    taps: frozenset[int]

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise ParameterError(f"degree must be >= 1, got {self.degree}")
        taps = frozenset(self.taps)
        object.__setattr__(self, "taps", taps)
        if not taps:
            raise ParameterError("tap set must not be empty")
        if any(t < 1 or t > self.degree for t in taps):
            raise ParameterError(f"taps must lie in [1, {self.degree}]: {sorted(taps)}")
        if self.degree not in taps:
            raise ParameterError("tap set must include the degree position")

    @classmethod
    def from_positions(cls, positions: Iterable[int]) -> "TapSet":
        taps = frozenset(positions)
        return cls(degree=max(taps, default=0), taps=taps)


# x^128 + x^126 + x^101 + x^99 + 1, the default feedback polynomial.
DEFAULT_TAPS = TapSet(degree=128, taps=frozenset({128, 126, 101, 99}))

DEFAULT_REGISTER_SEED = 1
DEFAULT_MAX_EVALUATIONS_PER_BIT = 1000


@dataclass(frozen=True)
class RegisterState:
    """Register contents (bit 0 = newest) plus the number of steps taken."""

    bits: tuple[int, ...]
    step_count: int = 0

    def __post_init__(self) -> None:
        if not self.bits:
            raise ParameterError("register must hold at least one bit")
        if any(b not in (0, 1) for b in self.bits):
            raise ParameterError("register bits must be 0 or 1")

    @property
    def degree(self) -> int:
        return len(self.bits)

    def as_int(self) -> int:
        value = 0
        for i, b in enumerate(self.bits):
            value |= b << i
        return value


def register_state_from_seed(degree: int, seed: int) -> RegisterState:
    """Build the initial register state from a nonzero degree-bit seed."""
    if seed == 0:
        raise ParameterError("register seed must be nonzero (all-zero state is absorbing)")
    if not 0 < seed < (1 << degree):
        raise ParameterError(f"register seed must fit in {degree} bits")
    return RegisterState(bits=tuple((seed >> i) & 1 for i in range(degree)))


@dataclass(frozen=True)
class GeneratorConfig:
    """Everything needed to reproduce a stream bit for bit."""

    puf_params: PufParameters = field(default_factory=PufParameters)
    taps: TapSet = DEFAULT_TAPS
    register_seed: int = DEFAULT_REGISTER_SEED
    noise_seed: int = 0
    max_evaluations_per_bit: int = DEFAULT_MAX_EVALUATIONS_PER_BIT

    def __post_init__(self) -> None:
        if self.taps.degree != self.puf_params.n_stages:
            raise ParameterError(
                f"tap degree {self.taps.degree} != {self.puf_params.n_stages} PUF stages"
            )
        if self.register_seed == 0:
            raise ParameterError("register_seed must be nonzero")
        if not 0 < self.register_seed < (1 << self.taps.degree):
            raise ParameterError(f"register_seed must fit in {self.taps.degree} bits")
        if not 0 <= self.noise_seed < 2**64:
            raise ParameterError("noise_seed must fit in 64 bits")
        if self.max_evaluations_per_bit < 1:
            raise ParameterError("max_evaluations_per_bit must be >= 1")

    def initial_state(self) -> RegisterState:
        return register_state_from_seed(self.taps.degree, self.register_seed)


@dataclass(frozen=True)
class GenerationStats:
    """Accounting for the validity gating: evaluations spent per bit kept."""

    evaluations: int
    valid_bits: int

    @property
    def validity_rate(self) -> float:
        return self.valid_bits / self.evaluations if self.evaluations else 0.0


@dataclass(frozen=True)
class BitStream:
    """Packed output bits (MSB-first per byte) with generation statistics."""

    data: bytes
    length_bits: int
    stats: GenerationStats

    def bits(self) -> np.ndarray:
        raw = np.frombuffer(self.data, dtype=np.uint8)
        return np.unpackbits(raw)[: self.length_bits]


class GaussianNoiseSource:
    """Deterministic stream of Gaussian(0, sigma) noise draws.

    Draws are produced in fixed-size blocks from one seeded generator, so
    scalar consumers (``next``) and block consumers (``peek``/``advance``)
    see the identical sequence.
    """

    BLOCK_SIZE = 1 << 16

    def __init__(self, sigma: float, seed: int):
        if sigma < 0:
            raise ParameterError(f"noise sigma must be >= 0, got {sigma}")
        self._sigma = float(sigma)
        self._rng = np.random.default_rng(seed)
        self._buf = np.empty(0, dtype=np.float64)
        self._pos = 0

    def peek(self) -> np.ndarray:
        if self._pos >= self._buf.shape[0]:
            self._buf = self._rng.normal(0.0, self._sigma, self.BLOCK_SIZE)
            self._pos = 0
        return self._buf[self._pos :]

    def advance(self, count: int) -> None:
        self._pos += count

    def next(self) -> float:
        value = float(self.peek()[0])
        self.advance(1)
        return value


def lfsr_feedback(state: RegisterState, taps: TapSet) -> int:
    """XOR of the register bits at the tap positions."""
    if taps.degree != state.degree:
        raise DimensionError(f"tap degree {taps.degree} != register degree {state.degree}")
    fb = 0
    for t in taps.taps:
        fb ^= state.bits[t - 1]
    return fb


def lfsr_step(state: RegisterState, taps: TapSet) -> RegisterState:
    """One step of the pure linear register (no PUF term)."""
    fb = lfsr_feedback(state, taps)
    return RegisterState(bits=(fb,) + state.bits[:-1], step_count=state.step_count + 1)


def nfsr_step(
    state: RegisterState,
    taps: TapSet,
    instance: PufInstance,
    noise: float,
) -> tuple[RegisterState, DualArbiterOutcome]:
    """One NFSR step: evaluate the PUF on the current state, fold its
    candidate bit into the linear feedback, shift, and report the outcome.

    The emitted random bit is ``outcome.bit`` when ``outcome.valid``; the
    candidate bit feeds back on every step either way.
    """
    if instance.n_stages != state.degree:
        raise DimensionError(
            f"instance has {instance.n_stages} stages, register degree {state.degree}"
        )
    outcome = dual_arbiter_eval(instance, state.bits, noise)
    input_bit = lfsr_feedback(state, taps) ^ outcome.bit
    new_state = RegisterState(
        bits=(input_bit,) + state.bits[:-1], step_count=state.step_count + 1
    )
    return new_state, outcome


@numba.njit(cache=True)
def _nfsr_chunk(delays, tap_idx, state, noise, offset, out_bits, emitted, target, steps, budget):
    """Run NFSR steps until the noise block, bit target, or step budget
    is exhausted.  Mutates ``state`` and ``out_bits`` in place."""
    n = state.shape[0]
    n_noise = noise.shape[0]
    j = 0
    while j < n_noise and emitted < target and steps < budget:
        t_top = 0.0
        t_bottom = 0.0
        for i in range(n):
            if state[i] == 0:
                t_top += delays[i, 0]
                t_bottom += delays[i, 1]
            else:
                new_bottom = t_top + delays[i, 2]
                new_top = t_bottom + delays[i, 3]
                t_top = new_top
                t_bottom = new_bottom
        delta = (t_bottom - t_top) + noise[j]
        j += 1
        steps += 1
        bit = 1 if delta > offset else 0
        fb = 0
        for k in range(tap_idx.shape[0]):
            fb ^= state[tap_idx[k]]
        input_bit = fb ^ bit
        for i in range(n - 1, 0, -1):
            state[i] = state[i - 1]
        state[0] = input_bit
        if abs(delta) > offset:
            out_bits[emitted] = bit
            emitted += 1
    return emitted, steps, j


def generate(
    config: GeneratorConfig,
    n_bits: int,
    instance: PufInstance | None = None,
) -> BitStream:
    """Generate ``n_bits`` validity-gated bits, deterministically.

    Raises StarvationError once n_bits * max_evaluations_per_bit steps
    elapse without emitting enough bits (a dead-zone pathology, e.g.
    sigma_process = 0).
    """
    if n_bits < 1:
        raise ParameterError(f"n_bits must be >= 1, got {n_bits}")
    if instance is None:
        instance = sample_puf(config.puf_params)
    elif instance.params != config.puf_params:
        raise ParameterError("instance parameters do not match the generator config")

    tap_idx = np.array(sorted(t - 1 for t in config.taps.taps), dtype=np.int64)
    state = np.array(config.initial_state().bits, dtype=np.uint8)
    out_bits = np.empty(n_bits, dtype=np.uint8)
    offset = instance.params.arbiter_offset
    budget = n_bits * config.max_evaluations_per_bit
    source = GaussianNoiseSource(instance.params.sigma_noise, config.noise_seed)

    emitted = 0
    steps = 0
    while emitted < n_bits and steps < budget:
        block = source.peek()
        emitted, steps, consumed = _nfsr_chunk(
            instance.delays, tap_idx, state, block, offset,
            out_bits, emitted, n_bits, steps, budget,
        )
        source.advance(consumed)
    if emitted < n_bits:
        raise StarvationError(requested_bits=n_bits, emitted_bits=emitted, evaluations=steps)

    stats = GenerationStats(evaluations=steps, valid_bits=emitted)
    return BitStream(
        data=np.packbits(out_bits).tobytes(),
        length_bits=n_bits,
        stats=stats,
    )


def lfsr_period(taps: TapSet, seed: int | RegisterState) -> int:
    """Steps until the pure LFSR state first repeats, by direct iteration.

    Exhaustive, so restricted to degree <= 24.  The state map is
    invertible (the degree tap is always present), so the first repeat is
    the seed itself.
    """
    if taps.degree > 24:
        raise ParameterError(f"degree {taps.degree} > 24: exhaustive search unsupported")
    seed_int = seed.as_int() if isinstance(seed, RegisterState) else int(seed)
    if seed_int == 0:
        raise ParameterError("seed must be nonzero")
    if not 0 < seed_int < (1 << taps.degree):
        raise ParameterError(f"seed must fit in {taps.degree} bits")

    mask = (1 << taps.degree) - 1
    tap_mask = 0
    for t in taps.taps:
        tap_mask |= 1 << (t - 1)

    state = seed_int
    period = 0
    while True:
        fb = (state & tap_mask).bit_count() & 1
        state = ((state << 1) & mask) | fb
        period += 1
        if state == seed_int:
            return period
        if period > mask:  # unreachable: the state map is a permutation
            raise RuntimeError("period search failed to close")


def config_to_dict(config: GeneratorConfig) -> dict:
    """Plain-dict form of a config, suitable for JSON and digesting."""
    p = config.puf_params
    return {
        "puf": {
            "n_stages": p.n_stages,
            "sigma_process": p.sigma_process,
            "sigma_noise": p.sigma_noise,
            "arbiter_offset": p.arbiter_offset,
            "instance_seed": p.instance_seed,
        },
        "taps": sorted(config.taps.taps, reverse=True),
        "register_seed": config.register_seed,
        "noise_seed": config.noise_seed,
        "max_evaluations_per_bit": config.max_evaluations_per_bit,
    }


def config_from_dict(doc: dict) -> GeneratorConfig:
    puf = doc["puf"]
    return GeneratorConfig(
        puf_params=PufParameters(**puf),
        taps=TapSet.from_positions(doc["taps"]),
        register_seed=doc["register_seed"],
        noise_seed=doc["noise_seed"],
        max_evaluations_per_bit=doc["max_evaluations_per_bit"],
    )
