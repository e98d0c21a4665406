"""
synth.py
Generates synthetic post-ReLU feature tensors for codec experiments.

Sparsity is exact: round(nonzero_ratio · c·h·w) positions are non-zero.
With spatial_clustering > 0 those positions gather in blobs, like the
activation maps of deeper conv layers.

Tensor file (.ftr, little-endian):
    [4B] "FTR1"  [12B] c, h, w (uint32)  then c·h·w int16 values, row-major
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from errors import CorruptStreamError
from featcodec import FeatureTensor

logger = logging.getLogger(__name__)

TENSOR_MAGIC = b"FTR1"
_TENSOR_HEADER = struct.Struct("<4s3I")

INT16_MAX = 32767

# Blob size (in elements) for clustered masks
CLUSTER_SIGMA = 1.5

DISTRIBUTIONS = ("exponential", "uniform")


@dataclass(frozen=True)
class SynthSpec:
    shape: tuple[int, int, int]
    nonzero_ratio: float
    value_dist: tuple = ("exponential", 0.05)
    spatial_clustering: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.shape) != 3 or min(self.shape) < 1:
            raise ValueError(f"shape must be three positive dims, got {self.shape}")
        if not 0.0 <= self.nonzero_ratio <= 1.0:
            raise ValueError(f"nonzero_ratio must be in [0, 1], got {self.nonzero_ratio}")
        if self.spatial_clustering < 0:
            raise ValueError(f"spatial_clustering must be >= 0, got {self.spatial_clustering}")
        kind, *params = self.value_dist
        if kind == "exponential":
            if len(params) != 1 or params[0] <= 0:
                raise ValueError(f"exponential needs one rate > 0, got {params}")
        elif kind == "uniform":
            if len(params) != 2 or not 0 <= params[0] <= params[1]:
                raise ValueError(f"uniform needs 0 <= lo <= hi, got {params}")
        else:
            raise ValueError(f"unknown value distribution {kind!r}")


def parse_dist(text: str) -> tuple:
    """'exponential:0.05' or 'uniform:1:255' → value_dist tuple."""
    kind, *params = text.split(":")
    try:
        return (kind, *(float(p) for p in params))
    except ValueError as exc:
        raise ValueError(f"bad distribution '{text}'") from exc


def _positions(rng: np.random.Generator, spec: SynthSpec, count: int) -> np.ndarray:
    c, h, w = spec.shape
    n = c * h * w
    if spec.spatial_clustering == 0:
        return rng.choice(n, size=count, replace=False)

    noise = gaussian_filter(rng.standard_normal((c, h, w)), sigma=(0, CLUSTER_SIGMA, CLUSTER_SIGMA))
    mean = noise.mean(axis=(1, 2), keepdims=True)
    std = noise.std(axis=(1, 2), keepdims=True)
    z = (noise - mean) / np.where(std > 0, std, 1.0)

    logits = spec.spatial_clustering * z.ravel()
    weights = np.maximum(np.exp(logits - logits.max()), 1e-300)
    return rng.choice(n, size=count, replace=False, p=weights / weights.sum())


def _values(rng: np.random.Generator, spec: SynthSpec, count: int) -> np.ndarray:
    kind, *params = spec.value_dist
    if kind == "exponential":
        raw = rng.exponential(1.0 / params[0], size=count)
    else:
        raw = rng.uniform(params[0], params[1], size=count)
    return np.clip(np.rint(raw), 1, INT16_MAX)


def generate(spec: SynthSpec) -> FeatureTensor:
    rng = np.random.Generator(np.random.Philox(spec.seed))
    n = spec.shape[0] * spec.shape[1] * spec.shape[2]
    count = int(round(spec.nonzero_ratio * n))

    flat = np.zeros(n, dtype=np.int16)
    if count:
        flat[_positions(rng, spec, count)] = _values(rng, spec, count)

    logger.debug("Generated | %s, %d non-zero (seed %d)", spec.shape, count, spec.seed)
    return FeatureTensor(flat.reshape(spec.shape))


# ── Tensor files ──────────────────────────────────────────────────────────────

def tensor_to_bytes(t: FeatureTensor) -> bytes:
    return _TENSOR_HEADER.pack(TENSOR_MAGIC, *t.shape) + t.data.astype("<i2").tobytes()


def tensor_from_bytes(data: bytes) -> FeatureTensor:
    if len(data) < _TENSOR_HEADER.size:
        raise CorruptStreamError("tensor file shorter than header")
    magic, c, h, w = _TENSOR_HEADER.unpack_from(data, 0)
    if magic != TENSOR_MAGIC:
        raise CorruptStreamError(f"bad tensor magic {magic!r}")
    if min(c, h, w) < 1:
        raise CorruptStreamError(f"invalid tensor shape {(c, h, w)}")
    body = data[_TENSOR_HEADER.size:]
    if len(body) != 2 * c * h * w:
        raise CorruptStreamError(f"tensor body is {len(body)} bytes, expected {2 * c * h * w}")
    return FeatureTensor.from_values((c, h, w), np.frombuffer(body, dtype="<i2"))


def write_tensor(path, t: FeatureTensor) -> None:
    Path(path).write_bytes(tensor_to_bytes(t))


def read_tensor(path) -> FeatureTensor:
    return tensor_from_bytes(Path(path).read_bytes())


if __name__ == "__main__":
    for ratio in (0.9, 0.5, 0.15):
        t = generate(SynthSpec((256, 13, 13), ratio, spatial_clustering=2.0, seed=42))
        print(f"ratio {ratio:.2f} | realised {np.count_nonzero(t.data) / t.data.size:.3f}")
