"""Bitstream packing and file I/O.

Streams are stored as raw packed bytes (MSB-first within each byte, zero
padding in the final byte) next to a ``<name>.meta.json`` sidecar that
records the exact length in bits, a digest of the generating config, and
the generation statistics, so a stream file is self-describing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .generator import BitStream, GenerationStats

METADATA_FORMAT = "puf-trng.bitstream"
METADATA_VERSION = 1


def pack_bits(bits: np.ndarray) -> bytes:
    """Pack a 0/1 array into bytes, MSB first, zero-padded at the end."""
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ParameterError(f"bits must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ParameterError("bits must be 0 or 1")
    return np.packbits(arr.astype(np.uint8)).tobytes()


def unpack_bits(data: bytes, length_bits: int) -> np.ndarray:
    """Recover the first ``length_bits`` bits of an MSB-first packing."""
    if length_bits < 0:
        raise ParameterError(f"length_bits must be >= 0, got {length_bits}")
    if length_bits > 8 * len(data):
        raise ParameterError(f"{length_bits} bits requested from {len(data)} bytes")
    raw = np.frombuffer(data, dtype=np.uint8)
    return np.unpackbits(raw)[:length_bits]


def canonical_json(doc: dict) -> str:
    """Deterministic JSON rendering (sorted keys, no whitespace)."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_digest(config_doc: dict) -> str:
    """SHA-256 hex digest of the canonical JSON form of a config dict."""
    return hashlib.sha256(canonical_json(config_doc).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class StreamMetadata:
    """Sidecar contents for a stored bitstream."""

    length_bits: int
    config_digest: str
    evaluations: int
    valid_bits: int

    @property
    def validity_rate(self) -> float:
        return self.valid_bits / self.evaluations if self.evaluations else 0.0


def metadata_path(stream_path: str | Path) -> Path:
    return Path(str(stream_path) + ".meta.json")


def save_bitstream(path: str | Path, stream: BitStream, config_doc: dict) -> None:
    """Write the packed stream plus its ``.meta.json`` sidecar."""
    path = Path(path)
    path.write_bytes(stream.data)
    meta = {
        "format": METADATA_FORMAT,
        "version": METADATA_VERSION,
        "length_bits": stream.length_bits,
        "config_digest": config_digest(config_doc),
        "stats": {
            "evaluations": stream.stats.evaluations,
            "valid_bits": stream.stats.valid_bits,
            "validity_rate": stream.stats.validity_rate,
        },
    }
    metadata_path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def load_bitstream(path: str | Path) -> tuple[BitStream, StreamMetadata]:
    """Read a stream file and its sidecar back into memory."""
    path = Path(path)
    data = path.read_bytes()
    doc = json.loads(metadata_path(path).read_text(encoding="utf-8"))
    if doc.get("format") != METADATA_FORMAT:
        raise ParameterError(f"not a bitstream sidecar: {metadata_path(path)}")
    if doc.get("version") != METADATA_VERSION:
        raise ParameterError(f"unsupported sidecar version {doc.get('version')}")
    length_bits = doc["length_bits"]
    if length_bits > 8 * len(data):
        raise ParameterError(
            f"sidecar claims {length_bits} bits but file holds {8 * len(data)}"
        )
    stats = GenerationStats(
        evaluations=doc["stats"]["evaluations"],
        valid_bits=doc["stats"]["valid_bits"],
    )
    meta = StreamMetadata(
        length_bits=length_bits,
        config_digest=doc["config_digest"],
        evaluations=stats.evaluations,
        valid_bits=stats.valid_bits,
    )
    return BitStream(data=data, length_bits=length_bits, stats=stats), meta
