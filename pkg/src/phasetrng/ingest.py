"""File interchange: headerless signed-byte sample dumps and packed bitstreams.

Bitstreams are packed MSB-first within each byte, the last byte zero-padded.
The true bit length lives in a sidecar ``<name>.meta`` holding
``length_bits=<N>``, so external ENT/Diehard/STS binaries can read the
packed file directly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from .errors import EmptyInputError, InvalidParameterError
from .phase_sim import Provenance, SampleBlock

PathLike = Union[str, "os.PathLike[str]"]

META_SUFFIX = ".meta"
DEFAULT_SAMPLE_RATE_HZ = 100e6


@dataclass(frozen=True, eq=False)
class BitStream:
    """Bit sequence stored packed MSB-first, with an explicit length."""

    packed: np.ndarray
    length_bits: int

    def __post_init__(self) -> None:
        packed = np.ascontiguousarray(self.packed, dtype=np.uint8).reshape(-1)
        if self.length_bits < 0 or len(packed) != -(-self.length_bits // 8):
            raise InvalidParameterError(
                f"{len(packed)} packed bytes cannot hold exactly {self.length_bits} bits"
            )
        spare = 8 * len(packed) - self.length_bits
        if spare and packed[-1] & ((1 << spare) - 1):
            packed = packed.copy()
            packed[-1] &= 0xFF ^ ((1 << spare) - 1)
        object.__setattr__(self, "packed", packed)

    @classmethod
    def from_bits(cls, bits) -> "BitStream":
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        if bits.size and bits.max() > 1:
            raise InvalidParameterError("bits must be 0 or 1")
        return cls(np.packbits(bits), len(bits))

    @classmethod
    def from_bytes(cls, data) -> "BitStream":
        if isinstance(data, (bytes, bytearray, memoryview)):
            data = np.frombuffer(data, dtype=np.uint8)
        data = np.asarray(data, dtype=np.uint8).reshape(-1)
        return cls(data, 8 * len(data))

    def bits(self) -> np.ndarray:
        """Unpacked ``uint8`` array of 0/1 values."""
        return np.unpackbits(self.packed, count=self.length_bits)

    def __len__(self) -> int:
        return self.length_bits

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return self.length_bits == other.length_bits and np.array_equal(self.packed, other.packed)

    def __getitem__(self, item: slice) -> "BitStream":
        if not isinstance(item, slice):
            raise TypeError("BitStream supports slicing only")
        start, stop, step = item.indices(self.length_bits)
        if step == 1 and start % 8 == 0:
            nbits = max(stop - start, 0)
            chunk = self.packed[start // 8 : (start + nbits + 7) // 8]
            return BitStream(chunk, nbits)
        return BitStream.from_bits(self.bits()[item])


def meta_path(path: PathLike) -> Path:
    p = Path(path)
    return p.with_name(p.name + META_SUFFIX)


def _read_raw(path: PathLike, max_bytes: Optional[int] = None) -> np.ndarray:
    count = -1 if max_bytes is None else int(max_bytes)
    try:
        return np.fromfile(path, dtype=np.uint8, count=count)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        raise OSError(exc.errno, f"cannot read {path}: {exc.strerror}") from exc


def read_samples(
    path: PathLike, max: Optional[int] = None, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
) -> SampleBlock:
    """Read a headerless file of two's-complement signed 8-bit samples."""
    if max is not None and max < 0:
        raise InvalidParameterError("max must be >= 0")
    raw = _read_raw(path, max)
    if raw.size == 0:
        raise EmptyInputError(f"{path}: no samples")
    return SampleBlock(raw.view(np.int8), sample_rate_hz, Provenance.INGESTED)


def iter_samples(
    path: PathLike, chunk: int = 1 << 22, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
) -> Iterator[SampleBlock]:
    """Stream a sample file in blocks of at most ``chunk`` samples."""
    if chunk < 1:
        raise InvalidParameterError("chunk must be >= 1")
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        while True:
            data = fh.read(chunk)
            if not data:
                return
            yield SampleBlock(
                np.frombuffer(data, dtype=np.int8), sample_rate_hz, Provenance.INGESTED
            )


def write_samples(block: Union[SampleBlock, np.ndarray], path: PathLike) -> None:
    samples = block.samples if isinstance(block, SampleBlock) else np.asarray(block, dtype=np.int8)
    _write(path, samples.astype(np.int8, copy=False).tobytes())


def _write(path: PathLike, payload: bytes) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def write_bits(bits: BitStream, path: PathLike) -> None:
    _write(path, bits.packed.tobytes())
    try:
        meta_path(path).write_text(f"length_bits={bits.length_bits}\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {meta_path(path)}: {exc.strerror}") from exc


def read_meta(path: PathLike) -> int:
    """Bit length recorded in the sidecar of ``path``."""
    mpath = meta_path(path)
    try:
        text = mpath.read_text()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read {mpath}: {exc.strerror}") from exc
    for line in text.splitlines():
        key, sep, value = line.partition("=")
        if sep and key.strip() == "length_bits":
            return int(value.strip())
    raise InvalidParameterError(f"{mpath}: no length_bits entry")


def read_bits(path: PathLike, length_bits: Optional[int] = None) -> BitStream:
    """Read a packed bitstream; without ``length_bits`` the sidecar is consulted,
    falling back to the whole file when no sidecar exists."""
    if length_bits is None:
        length_bits = read_meta(path) if meta_path(path).exists() else None
    raw = _read_raw(path)
    if length_bits is None:
        length_bits = 8 * len(raw)
    if length_bits > 8 * len(raw):
        raise InvalidParameterError(
            f"{path}: {len(raw)} bytes cannot supply {length_bits} bits"
        )
    return BitStream(raw[: -(-length_bits // 8)], length_bits)
