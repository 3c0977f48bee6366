"""Arbiter-PUF additive delay model with dual-arbiter validity gating.

Two signal edges race through a chain of challenge-controlled switch
stages.  Each stage either passes the edges straight through or crosses
them, and every path through a stage carries its own manufactured delay.
An arbiter at the end decides which edge arrived first.  The dual-arbiter
variant inserts an extra delay ``e`` before one input of each of two
arbiters; their agreement certifies that the race margin exceeded ``e``,
rejecting metastability-prone evaluations.

The module also provides the standard linear (parity feature) oracle for
the additive delay model, used to cross-validate the stage-wise
simulation: ``propagate(inst, c) == model_weights(inst) @ feature_transform(c)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionError, ParameterError

# All delays are in arbitrary time units; only differences matter.
NOMINAL_DELAY = 10.0

DEFAULT_N_STAGES = 128
DEFAULT_SIGMA_PROCESS = 1.0
DEFAULT_SIGMA_NOISE = 0.05
DEFAULT_ARBITER_OFFSET = 0.02

# Calibrated by scripts/calibrate_default_instance.py: among the scanned
# seeds this instance has near-zero model bias, so its output stream is
# statistically usable without post-processing (the simulated analogue of
# binning a manufactured device).
DEFAULT_INSTANCE_SEED = 10652

INSTANCE_FORMAT = "puf-trng.instance"
INSTANCE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PufParameters:
    """Process, noise and threshold parameters of one simulated device."""

    n_stages: int = DEFAULT_N_STAGES
    sigma_process: float = DEFAULT_SIGMA_PROCESS
    sigma_noise: float = DEFAULT_SIGMA_NOISE
    arbiter_offset: float = DEFAULT_ARBITER_OFFSET
    instance_seed: int = DEFAULT_INSTANCE_SEED

    def __post_init__(self) -> None:
        if self.n_stages < 1:
            raise ParameterError(f"n_stages must be >= 1, got {self.n_stages}")
        if self.sigma_process < 0:
            raise ParameterError(f"sigma_process must be >= 0, got {self.sigma_process}")
        if self.sigma_noise < 0:
            raise ParameterError(f"sigma_noise must be >= 0, got {self.sigma_noise}")
        if self.arbiter_offset < 0:
            raise ParameterError(f"arbiter_offset must be >= 0, got {self.arbiter_offset}")
        if not 0 <= self.instance_seed < 2**64:
            raise ParameterError("instance_seed must fit in 64 bits")


@dataclass(frozen=True)
class StageDelays:
    """The four path delays of one switch stage.

    ``straight_top``/``straight_bottom`` apply when the challenge bit is 0
    (edges stay in their lanes); ``cross_down``/``cross_up`` when it is 1
    (the top edge moves to the bottom lane and vice versa).
    """

    straight_top: float
    straight_bottom: float
    cross_down: float
    cross_up: float


@dataclass(frozen=True, eq=False)
class PufInstance:
    """One sampled device: parameters plus frozen per-stage delays.

    ``delays`` has shape (n_stages, 4) with columns ordered as
    (straight_top, straight_bottom, cross_down, cross_up).  Instances are
    immutable and safe to share across threads.
    """

    params: PufParameters
    delays: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.delays, dtype=np.float64)
        if arr.shape != (self.params.n_stages, 4):
            raise DimensionError(
                f"delays shape {arr.shape} != ({self.params.n_stages}, 4)"
            )
        if not np.all(np.isfinite(arr)):
            raise ParameterError("stage delays must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "delays", arr)

    @property
    def n_stages(self) -> int:
        return self.params.n_stages

    @property
    def stages(self) -> list[StageDelays]:
        return [StageDelays(*row) for row in self.delays.tolist()]


@dataclass(frozen=True)
class DualArbiterOutcome:
    """One dual-arbiter evaluation: candidate bit, validity, and the
    noisy delay difference that produced them (exposed for testing)."""

    bit: int
    valid: bool
    delta: float


def sample_puf(params: PufParameters) -> PufInstance:
    """Sample one device from the process-variation model.

    Every path delay is NOMINAL_DELAY plus an independent
    Gaussian(0, sigma_process) deviation, drawn deterministically from
    ``params.instance_seed``.  With sigma_process = 0 all four delays are
    equal in every stage, so every challenge yields a noiseless delay
    difference of exactly 0.
    """
    rng = np.random.default_rng(params.instance_seed)
    delays = NOMINAL_DELAY + rng.normal(
        0.0, params.sigma_process, size=(params.n_stages, 4)
    )
    return PufInstance(params=params, delays=delays)


def _check_challenge(n_stages: int, challenge: Sequence[int] | np.ndarray) -> np.ndarray:
    bits = np.asarray(challenge, dtype=np.uint8)
    if bits.ndim != 1 or bits.shape[0] != n_stages:
        raise DimensionError(
            f"challenge length {bits.shape} does not match {n_stages} stages"
        )
    if not np.all(bits <= 1):
        raise ParameterError("challenge bits must be 0 or 1")
    return bits


def propagate(instance: PufInstance, challenge: Sequence[int] | np.ndarray) -> float:
    """Noiseless final delay difference t_bottom - t_top.

    Walks the switch chain stage by stage: challenge bit 0 keeps both
    edges in their lanes (accumulating the straight delays), bit 1 swaps
    them (accumulating the cross delays).  The generation kernel repeats
    this accumulation in the same order, so both paths agree bit for bit.
    """
    bits = _check_challenge(instance.n_stages, challenge)
    rows = instance.delays.tolist()
    t_top = 0.0
    t_bottom = 0.0
    for c, (straight_top, straight_bottom, cross_down, cross_up) in zip(
        bits.tolist(), rows
    ):
        if c == 0:
            t_top += straight_top
            t_bottom += straight_bottom
        else:
            new_bottom = t_top + cross_down
            new_top = t_bottom + cross_up
            t_top = new_top
            t_bottom = new_bottom
    return t_bottom - t_top


def feature_transform(challenge: Sequence[int] | np.ndarray) -> np.ndarray:
    """Parity feature vector phi of a challenge (length n+1).

    phi[j] = prod_{i=j}^{n-1} (1 - 2 c_i) for j < n, and phi[n] = 1.
    """
    bits = np.asarray(challenge, dtype=np.int64)
    if bits.ndim != 1:
        raise DimensionError("challenge must be one-dimensional")
    if bits.size and bits.max(initial=0) > 1:
        raise ParameterError("challenge bits must be 0 or 1")
    x = 1 - 2 * bits
    phi = np.ones(bits.size + 1, dtype=np.float64)
    phi[:-1] = np.cumprod(x[::-1])[::-1]
    return phi


def model_weights(instance: PufInstance) -> np.ndarray:
    """Weights w (length n+1) of the linear delay model.

    Satisfies w @ feature_transform(c) == propagate(instance, c) for every
    challenge, by the standard additive-model algebra: with per-stage
    straight differential a_i and cross differential b_i,

        w[0] = (a_0 - b_0)/2
        w[j] = (a_j - b_j)/2 + (a_{j-1} + b_{j-1})/2   for 0 < j < n
        w[n] = (a_{n-1} + b_{n-1})/2
    """
    d = instance.delays
    a = d[:, 1] - d[:, 0]  # straight_bottom - straight_top
    b = d[:, 2] - d[:, 3]  # cross_down - cross_up
    half_sum = (a + b) / 2.0
    half_diff = (a - b) / 2.0
    n = instance.n_stages
    w = np.empty(n + 1, dtype=np.float64)
    w[0] = half_diff[0]
    w[1:n] = half_diff[1:] + half_sum[:-1]
    w[n] = half_sum[-1]
    return w


def arbiter(t_top: float, t_bottom: float) -> int:
    """1 if the top edge arrives strictly earlier, else 0 (ties give 0)."""
    return 1 if t_top < t_bottom else 0


def dual_arbiter_eval(
    instance: PufInstance,
    challenge: Sequence[int] | np.ndarray,
    noise: float,
) -> DualArbiterOutcome:
    """Evaluate the PUF through the dual-arbiter threshold scheme.

    ``noise`` is the realized Gaussian(0, sigma_noise) draw for this
    evaluation, injected explicitly so callers control the randomness.
    The first arbiter sees the top edge delayed by the threshold offset
    ``e``, the second the bottom edge delayed by ``e``; they agree exactly
    when |delta| > e.  The candidate bit is always the first arbiter's
    output so the register feedback stays driven during invalid runs.
    """
    e = instance.params.arbiter_offset
    delta = propagate(instance, challenge) + noise
    # First arbiter with the top path delayed by e; equivalent to
    # comparing arrival offsets e (top) vs delta (bottom).
    bit = arbiter(e, delta)
    # The boundary |delta| == e counts as invalid; the deterministic
    # tie-break would let both arbiters agree at delta == -e, but the
    # boundary has probability zero under continuous noise.
    valid = abs(delta) > e
    return DualArbiterOutcome(bit=bit, valid=valid, delta=delta)


def instance_to_json(instance: PufInstance) -> str:
    """Serialize an instance to a versioned JSON document.

    Delays round-trip exactly (repr-based float encoding).
    """
    doc = {
        "format": INSTANCE_FORMAT,
        "version": INSTANCE_FORMAT_VERSION,
        "params": {
            "n_stages": instance.params.n_stages,
            "sigma_process": instance.params.sigma_process,
            "sigma_noise": instance.params.sigma_noise,
            "arbiter_offset": instance.params.arbiter_offset,
            "instance_seed": instance.params.instance_seed,
        },
        "stages": instance.delays.tolist(),
    }
    return json.dumps(doc, indent=2) + "\n"


def instance_from_json(text: str) -> PufInstance:
    doc = json.loads(text)
    if doc.get("format") != INSTANCE_FORMAT:
        raise ParameterError(f"not a PUF instance document: {doc.get('format')!r}")
    if doc.get("version") != INSTANCE_FORMAT_VERSION:
        raise ParameterError(f"unsupported instance version {doc.get('version')!r}")
    params = PufParameters(**doc["params"])
    return PufInstance(params=params, delays=np.asarray(doc["stages"], dtype=np.float64))


def save_instance(instance: PufInstance, path: str | Path) -> None:
    Path(path).write_text(instance_to_json(instance))


def load_instance(path: str | Path) -> PufInstance:
    return instance_from_json(Path(path).read_text())
