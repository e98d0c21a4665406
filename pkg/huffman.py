"""
huffman.py
Entropy-coding primitives shared by the lossless and lossy feature paths.

  - magnitude categories + extra bits, as in baseline JPEG
  - canonical Huffman tables built from symbol counts
  - MSB-first bit packing / unpacking

Table wire form (inside the .fse header):
    [2B]  symbol count (uint16 LE)
    [3B each] symbol id (uint16 LE) + code length (uint8),
              in canonical order (sorted by length, then symbol)
"""

import heapq
import struct
from collections import Counter

import numpy as np

from errors import CorruptStreamError

# Code lengths are stored as uint8
MAX_CODE_LENGTH = 255


# ── Magnitude categories ──────────────────────────────────────────────────────

def magnitude_category(value: int) -> int:
    """Number of bits needed for |value| (0 for zero)."""
    return abs(int(value)).bit_length()


def extra_bits(value: int, size: int) -> int:
    """Extra-bit pattern for `value` in category `size` (negatives are offset)."""
    return value if value >= 0 else value + (1 << size) - 1


def decode_extra(bits: int, size: int) -> int:
    if size == 0:
        return 0
    if bits >> (size - 1):
        return bits
    return bits - (1 << size) + 1


# ── Table construction ────────────────────────────────────────────────────────

def code_lengths(counts: Counter) -> dict[int, int]:
    """
    Huffman code length per symbol. Ties are broken by symbol id so the same
    counts always give the same table.
    """
    if not counts:
        return {}
    if len(counts) == 1:
        return {next(iter(counts)): 1}

    # heap entries: (weight, tiebreak, symbols-under-node)
    heap = [(count, sym, [sym]) for sym, count in sorted(counts.items())]
    heapq.heapify(heap)
    lengths = dict.fromkeys(counts, 0)
    next_id = max(counts) + 1
    while len(heap) > 1:
        w1, _, syms1 = heapq.heappop(heap)
        w2, _, syms2 = heapq.heappop(heap)
        for sym in syms1:
            lengths[sym] += 1
        for sym in syms2:
            lengths[sym] += 1
        heapq.heappush(heap, (w1 + w2, next_id, syms1 + syms2))
        next_id += 1

    if max(lengths.values()) > MAX_CODE_LENGTH:
        raise ValueError("Huffman code length exceeds 255 bits")
    return lengths


def canonical_order(lengths: dict[int, int]) -> list[tuple[int, int]]:
    return sorted(lengths.items(), key=lambda item: (item[1], item[0]))


def canonical_codes(lengths: dict[int, int]) -> dict[int, str]:
    """Symbol -> code as a '0'/'1' string, assigned in canonical order."""
    codes: dict[int, str] = {}
    code = 0
    prev_len = 0
    for sym, length in canonical_order(lengths):
        code <<= length - prev_len
        prev_len = length
        codes[sym] = format(code, f"0{length}b")
        code += 1
    return codes


# ── Table serialisation ───────────────────────────────────────────────────────

def pack_table(lengths: dict[int, int]) -> bytes:
    order = canonical_order(lengths)
    out = bytearray(struct.pack("<H", len(order)))
    for sym, length in order:
        out += struct.pack("<HB", sym, length)
    return bytes(out)


def unpack_table(data: bytes, offset: int) -> tuple[dict[int, int], int]:
    """Parse a table at `offset`; returns (lengths, offset after the table)."""
    try:
        (count,) = struct.unpack_from("<H", data, offset)
        offset += 2
        lengths = {}
        for _ in range(count):
            sym, length = struct.unpack_from("<HB", data, offset)
            offset += 3
            if length == 0 or sym in lengths:
                raise CorruptStreamError(f"invalid Huffman table entry for symbol {sym}")
            lengths[sym] = length
    except struct.error as exc:
        raise CorruptStreamError("truncated Huffman table") from exc
    return lengths, offset


# ── Bit I/O ───────────────────────────────────────────────────────────────────

class BitWriter:
    """Collects '0'/'1' fragments and packs them MSB-first."""

    def __init__(self):
        self._parts: list[str] = []

    def write(self, bits: str) -> None:
        self._parts.append(bits)

    def write_int(self, value: int, width: int) -> None:
        if width:
            self._parts.append(format(value, f"0{width}b"))

    def to_bytes(self) -> bytes:
        bits = "".join(self._parts)
        if not bits:
            return b""
        as_array = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
        return np.packbits(as_array).tobytes()  # zero-padded to a byte boundary


class HuffmanReader:
    """Decodes canonical Huffman symbols and raw bit fields from a payload."""

    def __init__(self, payload: bytes, lengths: dict[int, int]):
        if not lengths:
            raise CorruptStreamError("empty Huffman table")
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
        self._bits = (bits + ord("0")).tobytes().decode("ascii")
        self._pos = 0
        self._decode = {code: sym for sym, code in canonical_codes(lengths).items()}
        self._lengths = sorted(set(lengths.values()))

    def read_symbol(self) -> int:
        for length in self._lengths:
            end = self._pos + length
            if end > len(self._bits):
                raise CorruptStreamError("truncated payload")
            sym = self._decode.get(self._bits[self._pos:end])
            if sym is not None:
                self._pos = end
                return sym
        raise CorruptStreamError(f"invalid code at bit {self._pos}")

    def read_int(self, width: int) -> int:
        if width == 0:
            return 0
        end = self._pos + width
        if end > len(self._bits):
            raise CorruptStreamError("truncated payload")
        value = int(self._bits[self._pos:end], 2)
        self._pos = end
        return value
