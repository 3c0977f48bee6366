"""Byte-level randomness diagnostics in the classic ent report format:
entropy, optimum compression, chi-square, mean, Monte Carlo pi, and
serial correlation.

Conventions follow the classic ent tool: Monte Carlo points are
consecutive non-overlapping 6-byte groups read as two 24-bit coordinates
scaled to [0, 1) with a strict interior test, and serial correlation is
cyclic (last byte pairs with the first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InsufficientLengthError, ParameterError
from .pvalues import igamc

MONTE_CARLO_GROUP_BYTES = 6
_COORD_SCALE = float(1 << 24)


@dataclass(frozen=True)
class EntReport:
    """The six metrics plus the input size they were computed from.

    ``serial_correlation_degenerate`` marks zero-variance input, where
    the correlation is undefined and reported as 1.0 by convention.
    """

    entropy_bits_per_byte: float
    optimum_compression_pct: float
    chi_square: float
    chi_square_exceed_pct: float
    mean: float
    monte_carlo_pi: float
    serial_correlation: float
    n_bytes: int
    serial_correlation_degenerate: bool = False


def _as_byte_array(data) -> np.ndarray:
    if isinstance(data, (bytes, bytearray, memoryview)):
        return np.frombuffer(bytes(data), dtype=np.uint8)
    arr = np.asarray(data)
    if arr.ndim != 1:
        raise DimensionError(f"byte sequence must be one-dimensional, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.size and (int(arr.min()) < 0 or int(arr.max()) > 255):
            raise ParameterError("byte values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def ent_metrics(data) -> EntReport:
    """Compute the six metrics over a byte sequence (>= 6 bytes so at
    least one Monte Carlo point exists)."""
    buf = _as_byte_array(data)
    n = buf.size
    if n < MONTE_CARLO_GROUP_BYTES:
        raise InsufficientLengthError(
            test_name="ent_metrics", n=n, minimum=MONTE_CARLO_GROUP_BYTES
        )

    counts = np.bincount(buf, minlength=256)
    freqs = counts[counts > 0] / n
    entropy = float(-(freqs * np.log2(freqs)).sum()) + 0.0  # avoid -0.0
    compression_pct = float(round((8.0 - entropy) / 8.0 * 100.0))

    expected = n / 256.0
    chi_square = float(((counts - expected) ** 2 / expected).sum())
    exceed_pct = igamc(255 / 2.0, chi_square / 2.0) * 100.0

    mean = float(buf.mean())

    groups = n // MONTE_CARLO_GROUP_BYTES
    coords = (
        buf[: groups * MONTE_CARLO_GROUP_BYTES]
        .reshape(groups, MONTE_CARLO_GROUP_BYTES)
        .astype(np.float64)
    )
    weights = np.array([65536.0, 256.0, 1.0])
    x = (coords[:, :3] @ weights) / _COORD_SCALE
    y = (coords[:, 3:] @ weights) / _COORD_SCALE
    inside = np.count_nonzero(x * x + y * y < 1.0)
    monte_carlo_pi = 4.0 * inside / groups

    values = buf.astype(np.float64)
    mu = values.mean()
    variance = float((values * values).mean() - mu * mu)
    covariance = float((values * np.roll(values, -1)).mean() - mu * mu)
    degenerate = variance == 0.0
    serial_correlation = 1.0 if degenerate else covariance / variance

    return EntReport(
        entropy_bits_per_byte=entropy,
        optimum_compression_pct=compression_pct,
        chi_square=chi_square,
        chi_square_exceed_pct=exceed_pct,
        mean=mean,
        monte_carlo_pi=monte_carlo_pi,
        serial_correlation=serial_correlation,
        n_bytes=n,
        serial_correlation_degenerate=degenerate,
    )


def ent_verdict(report: EntReport) -> tuple[bool, tuple[str, ...]]:
    """Pass/fail bands for a report (the reference tool prints metrics
    with no verdict, so these are this artifact's conventions).

    Bands scale with input size: chi-square exceed-probability within
    [1, 99] percent, and mean / Monte Carlo pi / serial correlation
    within 4 standard errors of the uniform-byte expectation.  Entropy is
    gated through an upper bound on the deficit implied by the chi-square
    band (deficit ~ chi2 * log2(e) / (2n)).
    """
    n = report.n_bytes
    groups = max(n // MONTE_CARLO_GROUP_BYTES, 1)
    issues = []

    if not 1.0 <= report.chi_square_exceed_pct <= 99.0:
        issues.append(
            f"chi-square exceed probability {report.chi_square_exceed_pct:.4g}% "
            "outside [1%, 99%]"
        )

    # Uniform bytes: variance (256^2 - 1)/12, so sigma of the mean is
    # sqrt(5461.25/n).
    mean_band = 4.0 * math.sqrt((256.0**2 - 1.0) / 12.0 / n)
    if abs(report.mean - 127.5) > mean_band:
        issues.append(f"mean {report.mean:.4f} deviates from 127.5 by more than {mean_band:.4f}")

    # Bernoulli(pi/4) per 6-byte point.
    p_in = math.pi / 4.0
    pi_band = 4.0 * 4.0 * math.sqrt(p_in * (1.0 - p_in) / groups)
    if abs(report.monte_carlo_pi - math.pi) > pi_band:
        issues.append(
            f"Monte Carlo pi {report.monte_carlo_pi:.6f} deviates from pi by more than {pi_band:.4f}"
        )

    scc_band = 4.0 / math.sqrt(n)
    if report.serial_correlation_degenerate or abs(report.serial_correlation) > scc_band:
        issues.append(
            f"serial correlation {report.serial_correlation:.6f} outside +-{scc_band:.4f}"
        )

    # chi2 <= 99th-percentile band above implies entropy deficit below
    # roughly 2 * 311 * log2(e) / (2n); doubled again for slack.
    entropy_floor = 8.0 - max(900.0 * math.log2(math.e) / n, 1e-6)
    if report.entropy_bits_per_byte < entropy_floor:
        issues.append(
            f"entropy {report.entropy_bits_per_byte:.6f} below floor {entropy_floor:.6f}"
        )

    return not issues, tuple(issues)


def report_to_dict(report: EntReport, verdict: bool, issues: tuple[str, ...]) -> dict:
    """JSON-ready form of an ent report plus its verdict."""
    return {
        "report_version": 1,
        "report_type": "ent",
        "metrics": {
            "entropy_bits_per_byte": report.entropy_bits_per_byte,
            "optimum_compression_pct": report.optimum_compression_pct,
            "chi_square": report.chi_square,
            "chi_square_exceed_pct": report.chi_square_exceed_pct,
            "mean": report.mean,
            "monte_carlo_pi": report.monte_carlo_pi,
            "serial_correlation": report.serial_correlation,
            "serial_correlation_degenerate": report.serial_correlation_degenerate,
            "n_bytes": report.n_bytes,
        },
        "issues": list(issues),
        "verdict": verdict,
    }
