"""
featcodec.py
Encoding of intermediate feature tensors before transmission.

Two paths, one entropy coder:

    lossless : raw 16-bit values, row-major, tokenised as (zero-run, value)
               pairs → canonical Huffman. Exact reconstruction.
    lossy    : per-tensor affine map to 8 bits → level shift −128 →
               8×8 blocks per channel (edge blocks replicate-padded) →
               2-D DCT-II → quantisation by the luminance table scaled by QF →
               zigzag → DC differences + (run, size) AC tokens → canonical Huffman.

Stream layout (.fse, little-endian):
    [4B] "FSE1"  [1B] version  [1B] mode (0 lossless / 1 lossy)
    [12B] c, h, w (uint32)  [1B] qf (0 when lossless)
    [4B] dequant_scale (float32)  [4B] dequant_offset (float32)
    Huffman table (see huffman.py)
    payload, bit-packed MSB-first, zero-padded to a byte boundary

Usage:
    from featcodec import encode_lossless, encode_lossy, decode, compression_ratio
"""

import logging
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dctn, idctn

from errors import CorruptStreamError
from huffman import (
    BitWriter,
    HuffmanReader,
    canonical_codes,
    code_lengths,
    decode_extra,
    extra_bits,
    magnitude_category,
    pack_table,
    unpack_table,
)

logger = logging.getLogger(__name__)

MAGIC   = b"FSE1"
VERSION = 1

MODE_LOSSLESS = 0
MODE_LOSSY    = 1
MODE_NAMES    = {MODE_LOSSLESS: "lossless", MODE_LOSSY: "lossy"}

_HEADER = struct.Struct("<4sBBIIIBff")

BLOCK = 8

# Decoders allocate the whole tensor up front, so headers beyond this are rejected
MAX_ELEMENTS = 1 << 26

# ── Symbol alphabet ───────────────────────────────────────────────────────────
# (run, size) pairs share one id space with the DC categories.
EOB       = 0
ZRL       = 15 << 5          # sixteen zeros
DC_BASE   = 512
MAX_RUN   = 15
MAX_SIZE  = 16

# Baseline luminance quantisation table, natural (row-major) order
LUMINANCE_QT = np.array([
    16, 11, 10, 16,  24,  40,  51,  61,
    12, 12, 14, 19,  26,  58,  60,  55,
    14, 13, 16, 24,  40,  57,  69,  56,
    14, 17, 22, 29,  51,  87,  80,  62,
    18, 22, 37, 56,  68, 109, 103,  77,
    24, 35, 55, 64,  81, 104, 113,  92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103,  99,
], dtype=np.int64).reshape(BLOCK, BLOCK)

# ZIGZAG[k] = natural index of the k-th coefficient in scan order
ZIGZAG = np.array([
     0,  1,  8, 16,  9,  2,  3, 10,
    17, 24, 32, 25, 18, 11,  4,  5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13,  6,  7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
])


# ── Domain types ──────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class FeatureTensor:
    """c × h × w int16 feature map."""
    data: np.ndarray
    scale_hint: float | None = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ValueError(f"feature tensor must be 3-D with positive dims, got shape {data.shape}")
        if data.dtype != np.int16:
            if data.size and (data.min() < -32768 or data.max() > 32767):
                raise ValueError("feature values do not fit in 16 bits")
            data = data.astype(np.int16)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_values(cls, shape, values, scale_hint=None) -> "FeatureTensor":
        return cls(np.asarray(values, dtype=np.int64).reshape(shape), scale_hint)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.data.shape)

    @property
    def raw_bytes(self) -> int:
        return int(self.data.size) * 2

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureTensor):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class EncodedStream:
    mode: int
    shape: tuple[int, int, int]
    qf: int
    dequant_scale: float
    dequant_offset: float
    lengths: dict
    payload: bytes

    @property
    def mode_name(self) -> str:
        return MODE_NAMES[self.mode]

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            MAGIC, VERSION, self.mode, *self.shape, self.qf,
            self.dequant_scale, self.dequant_offset,
        )
        return header + pack_table(self.lengths) + self.payload

    def __len__(self) -> int:
        return _HEADER.size + 2 + 3 * len(self.lengths) + len(self.payload)

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncodedStream":
        if len(data) < _HEADER.size:
            raise CorruptStreamError("stream shorter than header")
        magic, version, mode, c, h, w, qf, scale, offset = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise CorruptStreamError(f"bad magic {magic!r}")
        if version != VERSION:
            raise CorruptStreamError(f"unsupported version {version}")
        if mode not in MODE_NAMES:
            raise CorruptStreamError(f"unknown mode {mode}")
        if min(c, h, w) < 1:
            raise CorruptStreamError(f"invalid shape {(c, h, w)}")
        if mode == MODE_LOSSY and not 1 <= qf <= 100:
            raise CorruptStreamError(f"invalid quality factor {qf}")
        hp, wp = _padded_dims(h, w) if mode == MODE_LOSSY else (h, w)
        if c * hp * wp > MAX_ELEMENTS:
            raise CorruptStreamError(f"shape {(c, h, w)} exceeds {MAX_ELEMENTS} elements")
        lengths, offset_after = unpack_table(data, _HEADER.size)
        payload = bytes(data[offset_after:])
        # every lossy block starts with a DC code of at least one bit
        blocks = c * (hp // BLOCK) * (wp // BLOCK)
        if mode == MODE_LOSSY and blocks > 8 * len(payload):
            raise CorruptStreamError(f"{len(payload)}-byte payload cannot hold {blocks} blocks")
        return cls(
            mode=mode, shape=(c, h, w), qf=qf,
            dequant_scale=scale, dequant_offset=offset,
            lengths=lengths, payload=payload,
        )


@dataclass(frozen=True)
class FeatureStats:
    entropy_bits: float
    nonzero_ratio: float


# ── Shared 8-bit affine map ───────────────────────────────────────────────────

def affine_params(data: np.ndarray) -> tuple[float, float]:
    """
    (scale, offset) as float32-representable values. A flat tensor maps to
    the mid code 128 so its level-shifted blocks are all zero.
    """
    lo = float(data.min())
    hi = float(data.max())
    if hi == lo:
        return 1.0, float(np.float32(lo - 128.0))
    return float(np.float32((hi - lo) / 255.0)), float(np.float32(lo))


def affine_quantize(data: np.ndarray, scale: float, offset: float) -> np.ndarray:
    q = np.rint((data.astype(np.float64) - offset) / scale)
    return np.clip(q, 0, 255).astype(np.uint8)


def affine_dequantize(q: np.ndarray, scale: float, offset: float) -> np.ndarray:
    values = np.rint(q.astype(np.float64) * scale + offset)
    return np.clip(values, -32768, 32767).astype(np.int16)


def feature_stats(t: FeatureTensor) -> FeatureStats:
    scale, offset = affine_params(t.data)
    q = affine_quantize(t.data, scale, offset)
    hist = np.bincount(q.ravel(), minlength=256)
    p = hist[hist > 0] / q.size
    entropy = float(-(p * np.log2(p)).sum())
    return FeatureStats(
        entropy_bits=min(max(entropy, 0.0), 8.0),
        nonzero_ratio=np.count_nonzero(t.data) / t.data.size,
    )


# ── Tokens → Huffman stream ───────────────────────────────────────────────────

def _emit_pair(tokens: list, run: int, value: int) -> None:
    while run > MAX_RUN:
        tokens.append((ZRL, 0, 0))
        run -= MAX_RUN + 1
    size = magnitude_category(value)
    tokens.append(((run << 5) | size, extra_bits(value, size), size))


def _huffman_payload(tokens: list) -> tuple[dict[int, int], bytes]:
    lengths = code_lengths(Counter(sym for sym, _, _ in tokens))
    codes = canonical_codes(lengths)
    writer = BitWriter()
    for sym, bits, size in tokens:
        writer.write(codes[sym])
        writer.write_int(bits, size)
    return lengths, writer.to_bytes()


def _read_pair(reader: HuffmanReader, sym: int) -> tuple[int, int]:
    run, size = sym >> 5, sym & 0x1F
    if sym >= DC_BASE or size == 0 or size > MAX_SIZE:
        raise CorruptStreamError(f"unexpected symbol {sym}")
    return run, decode_extra(reader.read_int(size), size)


# ── Lossless path ─────────────────────────────────────────────────────────────

def encode_lossless(t: FeatureTensor) -> EncodedStream:
    flat = t.data.ravel().astype(np.int64)
    nonzero = np.flatnonzero(flat)
    runs = np.diff(np.concatenate(([-1], nonzero))) - 1

    tokens: list = []
    for run, value in zip(runs.tolist(), flat[nonzero].tolist()):
        _emit_pair(tokens, run, value)
    if nonzero.size == 0 or nonzero[-1] < flat.size - 1:
        tokens.append((EOB, 0, 0))

    lengths, payload = _huffman_payload(tokens)
    logger.debug("Lossless encode | %s, %d tokens, %d payload bytes", t.shape, len(tokens), len(payload))
    return EncodedStream(MODE_LOSSLESS, t.shape, 0, 0.0, 0.0, lengths, payload)


def decode_lossless(s: EncodedStream) -> FeatureTensor:
    if s.mode != MODE_LOSSLESS:
        raise CorruptStreamError("stream is not lossless")
    n = s.shape[0] * s.shape[1] * s.shape[2]
    out = np.zeros(n, dtype=np.int16)
    reader = HuffmanReader(s.payload, s.lengths)
    pos = 0
    while pos < n:
        sym = reader.read_symbol()
        if sym == EOB:
            break
        if sym == ZRL:
            pos += MAX_RUN + 1
            if pos >= n:
                raise CorruptStreamError("zero run past end of tensor")
            continue
        run, value = _read_pair(reader, sym)
        pos += run
        if pos >= n:
            raise CorruptStreamError("zero run past end of tensor")
        if not -32768 <= value <= 32767:
            raise CorruptStreamError(f"value {value} outside 16-bit range")
        out[pos] = value
        pos += 1
    return FeatureTensor(out.reshape(s.shape))


# ── Lossy path: transform helpers ─────────────────────────────────────────────

def quant_table(qf: int) -> np.ndarray:
    """Luminance table scaled by the usual quality rule, entries >= 1."""
    if isinstance(qf, bool) or not isinstance(qf, (int, np.integer)) or not 1 <= qf <= 100:
        raise ValueError(f"quality factor must be an integer in 1..100, got {qf!r}")
    scale = 5000 // qf if qf < 50 else 200 - 2 * qf
    table = (LUMINANCE_QT * scale + 50) // 100
    return np.maximum(table, 1)


def dct_2d(blocks: np.ndarray) -> np.ndarray:
    return dctn(blocks, type=2, norm="ortho", axes=(-2, -1))


def idct_2d(coefs: np.ndarray) -> np.ndarray:
    return idctn(coefs, type=2, norm="ortho", axes=(-2, -1))


def zigzag(blocks: np.ndarray) -> np.ndarray:
    """(..., 8, 8) → (..., 64) in scan order."""
    return blocks.reshape(*blocks.shape[:-2], BLOCK * BLOCK)[..., ZIGZAG]


def unzigzag(scans: np.ndarray) -> np.ndarray:
    natural = np.empty_like(scans)
    natural[..., ZIGZAG] = scans
    return natural.reshape(*scans.shape[:-1], BLOCK, BLOCK)


def _padded_dims(h: int, w: int) -> tuple[int, int]:
    return -(-h // BLOCK) * BLOCK, -(-w // BLOCK) * BLOCK


def _to_blocks(planes: np.ndarray) -> np.ndarray:
    c, h, w = planes.shape
    hp, wp = _padded_dims(h, w)
    padded = np.pad(planes, ((0, 0), (0, hp - h), (0, wp - w)), mode="edge")
    return (
        padded.reshape(c, hp // BLOCK, BLOCK, wp // BLOCK, BLOCK)
              .transpose(0, 1, 3, 2, 4)
              .reshape(c, -1, BLOCK, BLOCK)
    )


def _from_blocks(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    c = blocks.shape[0]
    hp, wp = _padded_dims(h, w)
    planes = (
        blocks.reshape(c, hp // BLOCK, wp // BLOCK, BLOCK, BLOCK)
              .transpose(0, 1, 3, 2, 4)
              .reshape(c, hp, wp)
    )
    return planes[:, :h, :w]


# ── Lossy path ────────────────────────────────────────────────────────────────

def encode_lossy(t: FeatureTensor, qf: int) -> EncodedStream:
    table = quant_table(qf)
    scale, offset = affine_params(t.data)
    q = affine_quantize(t.data, scale, offset)

    blocks = _to_blocks(q.astype(np.float64) - 128.0)
    quantised = np.rint(dct_2d(blocks) / table).astype(np.int64)
    scans = zigzag(quantised)

    tokens: list = []
    for channel in scans:
        prev_dc = 0
        for scan in channel.tolist():
            diff = scan[0] - prev_dc
            prev_dc = scan[0]
            size = magnitude_category(diff)
            tokens.append((DC_BASE + size, extra_bits(diff, size), size))

            last = 0
            for k in range(1, BLOCK * BLOCK):
                value = scan[k]
                if value:
                    _emit_pair(tokens, k - last - 1, value)
                    last = k
            if last < BLOCK * BLOCK - 1:
                tokens.append((EOB, 0, 0))

    lengths, payload = _huffman_payload(tokens)
    logger.debug("Lossy encode | %s qf=%d, %d tokens, %d payload bytes", t.shape, qf, len(tokens), len(payload))
    return EncodedStream(MODE_LOSSY, t.shape, int(qf), scale, offset, lengths, payload)


def decode_lossy(s: EncodedStream) -> FeatureTensor:
    if s.mode != MODE_LOSSY:
        raise CorruptStreamError("stream is not lossy")
    c, h, w = s.shape
    hp, wp = _padded_dims(h, w)
    per_channel = (hp // BLOCK) * (wp // BLOCK)
    n_coef = BLOCK * BLOCK

    scans = np.zeros((c, per_channel, n_coef), dtype=np.int64)
    reader = HuffmanReader(s.payload, s.lengths)
    for ch in range(c):
        prev_dc = 0
        for b in range(per_channel):
            sym = reader.read_symbol()
            size = sym - DC_BASE
            if not 0 <= size <= MAX_SIZE:
                raise CorruptStreamError(f"expected DC symbol, got {sym}")
            prev_dc += decode_extra(reader.read_int(size), size)
            scans[ch, b, 0] = prev_dc

            k = 1
            while k < n_coef:
                sym = reader.read_symbol()
                if sym == EOB:
                    break
                if sym == ZRL:
                    k += MAX_RUN + 1
                    continue
                run, value = _read_pair(reader, sym)
                k += run
                if k >= n_coef:
                    raise CorruptStreamError("AC run past end of block")
                scans[ch, b, k] = value
                k += 1
            if k > n_coef:
                raise CorruptStreamError("AC run past end of block")

    coefs = unzigzag(scans) * quant_table(s.qf)
    pixels = np.clip(np.rint(idct_2d(coefs.astype(np.float64)) + 128.0), 0, 255)
    q = _from_blocks(pixels, h, w).astype(np.uint8)
    return FeatureTensor(affine_dequantize(q, s.dequant_scale, s.dequant_offset))


# ── Dispatch / files ──────────────────────────────────────────────────────────

def encode(t: FeatureTensor, mode: str, qf: int | None = None) -> EncodedStream:
    if mode == "lossless":
        return encode_lossless(t)
    if mode == "lossy":
        if qf is None:
            raise ValueError("lossy encoding needs a quality factor")
        return encode_lossy(t, qf)
    raise ValueError(f"unknown encoding mode '{mode}'")


def decode(s: EncodedStream) -> FeatureTensor:
    return decode_lossless(s) if s.mode == MODE_LOSSLESS else decode_lossy(s)


def compression_ratio(t: FeatureTensor, s: EncodedStream) -> float:
    """Raw 16-bit bytes over total stream bytes (header included)."""
    return t.raw_bytes / len(s)


def write_stream(path, s: EncodedStream) -> int:
    data = s.to_bytes()
    Path(path).write_bytes(data)
    return len(data)


def read_stream(path) -> EncodedStream:
    return EncodedStream.from_bytes(Path(path).read_bytes())


if __name__ == "__main__":
    rng = np.random.default_rng(0)
    demo = np.where(rng.random((16, 13, 13)) < 0.2, rng.integers(1, 200, (16, 13, 13)), 0)
    tensor = FeatureTensor(demo)
    for label, stream in (("lossless", encode_lossless(tensor)), ("lossy qf=30", encode_lossy(tensor, 30))):
        print(f"{label:12s} ratio={compression_ratio(tensor, stream):6.2f}  bytes={len(stream)}")
    print(feature_stats(tensor))
