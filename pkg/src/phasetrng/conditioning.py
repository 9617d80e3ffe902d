"""Post-processing chain: pairwise XOR debiasing, m-LSB extraction, byte repacking.

Bytes are handled as raw 8-bit patterns (``uint8``); signed ADC samples are
reinterpreted, not converted.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Union

import numpy as np

from .errors import InsufficientDataError, InvalidParameterError
from .ingest import BitStream
from .phase_sim import SampleBlock

DEFAULT_LSB = 6

ByteLike = Union[SampleBlock, np.ndarray, bytes, bytearray]


def as_bytes(data: ByteLike) -> np.ndarray:
    """View any supported byte source as a flat ``uint8`` array."""
    if isinstance(data, SampleBlock):
        return data.as_bytes()
    if isinstance(data, (bytes, bytearray, memoryview)):
        return np.frombuffer(data, dtype=np.uint8)
    arr = np.asarray(data)
    if arr.dtype == np.int8:
        return arr.reshape(-1).view(np.uint8)
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < -128 or arr.max() > 255):
            raise InvalidParameterError("byte values must lie in [-128, 255]")
        arr = arr.astype(np.int16).astype(np.uint8)
    return arr.reshape(-1)


def xor_pairs(data: ByteLike) -> np.ndarray:
    """XOR non-overlapping byte pairs: ``out[k] = in[2k] ^ in[2k + 1]``.

    A trailing odd byte is dropped, so the output holds ``len(in) // 2`` bytes.
    """
    b = as_bytes(data)
    if len(b) < 2:
        raise InsufficientDataError(f"xor_pairs needs at least 2 bytes, got {len(b)}")
    n = len(b) & ~1
    return np.bitwise_xor(b[0:n:2], b[1:n:2])


def _check_m(m: int) -> None:
    if isinstance(m, bool) or int(m) != m or not 1 <= m <= 8:
        raise InvalidParameterError(f"m must be an integer in 1..8, got {m!r}")


def _pack_lsb_groups(b: np.ndarray, m: int) -> np.ndarray:
    # Eight bytes contribute 8*m bits, which is exactly m output bytes.
    groups = b[: len(b) - len(b) % 8].reshape(-1, 8)
    mask = np.uint64((1 << m) - 1)
    word = np.zeros(len(groups), dtype=np.uint64)
    for i in range(8):
        word <<= np.uint64(m)
        word |= groups[:, i].astype(np.uint64) & mask
    return word.astype(">u8").view(np.uint8).reshape(-1, 8)[:, 8 - m :].reshape(-1)


def lsb_extract(data: ByteLike, m: int = DEFAULT_LSB) -> BitStream:
    """Keep the ``m`` low-order bits of every byte, emitted from bit ``m-1`` down to 0."""
    _check_m(m)
    b = as_bytes(data)
    head = _pack_lsb_groups(b, m)
    tail = b[len(b) - len(b) % 8 :]
    if len(tail) == 0:
        return BitStream(head, m * len(b))
    tail_bits = np.unpackbits(tail).reshape(-1, 8)[:, 8 - m :].reshape(-1)
    return BitStream(np.concatenate((head, np.packbits(tail_bits))), m * len(b))


def repack(bits: BitStream) -> np.ndarray:
    """Whole bytes of ``bits``, MSB-first; a trailing partial byte is dropped."""
    return bits.packed[: bits.length_bits // 8].copy()


def condition(data: ByteLike, m: int = DEFAULT_LSB, xor: bool = True) -> np.ndarray:
    """Full chain (XOR if requested, then m-LSB, then repack) on one buffer."""
    b = xor_pairs(data) if xor else as_bytes(data)
    return repack(lsb_extract(b, m))


class StreamConditioner:
    """Chunk-invariant version of :func:`condition`.

    Feed arbitrary byte chunks with :meth:`feed`; leftovers that do not yet
    fill an XOR pair or an 8-byte extraction group are carried over, so the
    concatenated output equals ``condition(all_input, m, xor)``.
    """

    def __init__(self, m: int = DEFAULT_LSB, xor: bool = True) -> None:
        _check_m(m)
        self.m = m
        self.xor = xor
        self._pending = np.empty(0, dtype=np.uint8)
        self._stage = np.empty(0, dtype=np.uint8)
        self.bytes_in = 0
        self.bytes_out = 0

    def feed(self, data: ByteLike) -> np.ndarray:
        b = as_bytes(data)
        self.bytes_in += len(b)
        if self.xor:
            b = np.concatenate((self._pending, b)) if len(self._pending) else b
            n = len(b) & ~1
            self._pending = b[n:].copy()
            b = np.bitwise_xor(b[0:n:2], b[1:n:2])
        b = np.concatenate((self._stage, b)) if len(self._stage) else b
        n = len(b) - len(b) % 8
        self._stage = b[n:].copy()
        out = _pack_lsb_groups(b[:n], self.m)
        self.bytes_out += len(out)
        return out

    def finish(self) -> np.ndarray:
        """Flush whole bytes still held in the extraction stage."""
        out = repack(lsb_extract(self._stage, self.m)) if len(self._stage) else self._stage
        self._stage = np.empty(0, dtype=np.uint8)
        self.bytes_out += len(out)
        return out


def condition_stream(
    chunks: Iterable[ByteLike], m: int = DEFAULT_LSB, xor: bool = True
) -> Iterator[np.ndarray]:
    conditioner = StreamConditioner(m, xor)
    for chunk in chunks:
        out = conditioner.feed(chunk)
        if len(out):
            yield out
    tail = conditioner.finish()
    if len(tail):
        yield tail
