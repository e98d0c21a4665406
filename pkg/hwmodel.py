"""
hwmodel.py
Latency / energy model of the edge platform.

Stages of one frame on the edge:
    inference : MAC array + weight streaming from DRAM (overlapped, slower wins)
    encode    : on-chip feature encoder
    transmit  : radio at the selected datarate mode

Hardware and channel files are JSON-compatible text with full-line `#`
comments. Numeric fields are plain numbers or annotated objects:

    "clock_hz": {"value": 9.0e8, "source": "calibrated", "note": "..."}
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from errors import ConfigError
from netmodel import LayerDemand, strip_comments

logger = logging.getLogger(__name__)

HW_FIELDS = (
    "mac_units",
    "mac_bits",
    "clock_hz",
    "energy_per_mac",
    "dram_energy_per_32b",
    "dram_bandwidth_Bps",
    "codec_bytes_per_cycle",
    "codec_power_W",
    "weight_compression_ratio",
    "buffer_energy_per_byte",
)

SOURCES = ("published", "calibrated", "derived")


@dataclass(frozen=True)
class StageCost:
    latency_s: float = 0.0
    energy_J: float = 0.0

    def __post_init__(self):
        if self.latency_s < 0 or self.energy_J < 0:
            raise ValueError(f"stage cost must be non-negative, got {self}")

    def __add__(self, other: "StageCost") -> "StageCost":
        return StageCost(self.latency_s + other.latency_s, self.energy_J + other.energy_J)


@dataclass(frozen=True)
class HardwareSpec:
    mac_units: int
    mac_bits: int
    clock_hz: float
    energy_per_mac: float
    dram_energy_per_32b: float
    dram_bandwidth_Bps: float
    codec_bytes_per_cycle: float
    codec_power_W: float
    weight_compression_ratio: float
    buffer_energy_per_byte: float
    # field name -> "published" / "calibrated" / "derived"
    sources: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.mac_units < 1:
            raise ConfigError(f"mac_units must be >= 1, got {self.mac_units}")
        if self.weight_compression_ratio < 1:
            raise ConfigError(f"weight_compression_ratio must be >= 1, got {self.weight_compression_ratio}")
        for name in HW_FIELDS:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def dram_energy_per_byte(self) -> float:
        return self.dram_energy_per_32b / 4

    @property
    def codec_Bps(self) -> float:
        return self.codec_bytes_per_cycle * self.clock_hz

    def with_raw_weights(self) -> "HardwareSpec":
        """Same platform with uncompressed weights (no weight decoder)."""
        return replace(self, weight_compression_ratio=1.0)


@dataclass(frozen=True)
class ChannelSpec:
    modes: tuple[tuple[float, float], ...]
    selected_mode: int = 0

    def __post_init__(self):
        if not self.modes:
            raise ConfigError("channel needs at least one mode")
        for rate, power in self.modes:
            if rate <= 0 or power <= 0:
                raise ConfigError(f"mode ({rate}, {power}): datarate and power must be > 0")
        if not 0 <= self.selected_mode < len(self.modes):
            raise ConfigError(f"selected_mode {self.selected_mode} out of range 0..{len(self.modes) - 1}")

    @property
    def datarate_bps(self) -> float:
        return self.modes[self.selected_mode][0]

    @property
    def power_W(self) -> float:
        return self.modes[self.selected_mode][1]

    def with_mode(self, index: int) -> "ChannelSpec":
        return ChannelSpec(self.modes, index)

    @classmethod
    def single(cls, datarate_bps: float, power_W: float) -> "ChannelSpec":
        return cls(((float(datarate_bps), float(power_W)),), 0)


# ── Loading ───────────────────────────────────────────────────────────────────

def _read_doc(path) -> dict:
    try:
        doc = json.loads(strip_comments(Path(path).read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc.msg} at line {exc.lineno}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def _number(doc: dict, key: str) -> tuple[float, str | None]:
    if key not in doc:
        raise ConfigError(f"missing field '{key}'")
    raw = doc[key]
    source = None
    if isinstance(raw, dict):
        source = raw.get("source")
        if source is not None and source not in SOURCES:
            raise ConfigError(f"field '{key}': unknown source {source!r}")
        raw = raw.get("value")
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"field '{key}' must be a number, got {raw!r}")
    return raw, source


def parse_hardware(doc: dict) -> HardwareSpec:
    values, sources = {}, {}
    for key in HW_FIELDS:
        values[key], source = _number(doc, key)
        if source:
            sources[key] = source
    values["mac_units"] = int(values["mac_units"])
    values["mac_bits"] = int(values["mac_bits"])
    return HardwareSpec(**values, sources=sources)


def load_hardware(path) -> HardwareSpec:
    hw = parse_hardware(_read_doc(path))
    calibrated = sorted(k for k, s in hw.sources.items() if s == "calibrated")
    logger.info("Hardware loaded | %s (calibrated: %s)", path, ", ".join(calibrated) or "none")
    return hw


def parse_channel(doc: dict) -> ChannelSpec:
    raw_modes = doc.get("modes")
    if not isinstance(raw_modes, list) or not raw_modes:
        raise ConfigError("channel needs a non-empty 'modes' list")
    modes = []
    for entry in raw_modes:
        if isinstance(entry, dict):
            entry = [entry.get("datarate_bps"), entry.get("power_W")]
        if (
            not isinstance(entry, list) or len(entry) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)
        ):
            raise ConfigError(f"mode must be [datarate_bps, power_W], got {entry!r}")
        modes.append((float(entry[0]), float(entry[1])))
    selected = doc.get("selected_mode", 0)
    if isinstance(selected, bool) or not isinstance(selected, int):
        raise ConfigError(f"selected_mode must be an integer, got {selected!r}")
    return ChannelSpec(tuple(modes), selected)


def load_channel(path) -> ChannelSpec:
    ch = parse_channel(_read_doc(path))
    logger.info("Channel loaded | %s: %d modes, selected %.3g bps", path, len(ch.modes), ch.datarate_bps)
    return ch


# ── Costs ─────────────────────────────────────────────────────────────────────

def inference_cost(hw: HardwareSpec, *layers: LayerDemand) -> StageCost:
    """
    Edge inference over the given layers.

    latency = max(compute, weight streaming)
    energy  = MACs + DRAM weight reads + weight decode + feature buffer traffic
    """
    if not layers:
        raise ValueError("inference_cost needs at least one layer demand")

    macs = sum(d.macs for d in layers)
    weight_bytes = sum(d.weight_bytes for d in layers) / hw.weight_compression_ratio
    buffer_bytes = sum(d.in_feature_bytes + d.out_feature_bytes for d in layers)

    compute_s = macs / (hw.mac_units * hw.clock_hz)
    memory_s = weight_bytes / hw.dram_bandwidth_Bps

    energy = macs * hw.energy_per_mac + weight_bytes * hw.dram_energy_per_byte
    if hw.weight_compression_ratio > 1:
        energy += weight_bytes / hw.codec_Bps * hw.codec_power_W
    energy += buffer_bytes * hw.buffer_energy_per_byte

    return StageCost(max(compute_s, memory_s), energy)


def encode_cost(hw: HardwareSpec, raw_bytes: float, encoded_bytes: float) -> StageCost:
    # encoder time depends on the input size only
    latency = raw_bytes / hw.codec_Bps
    return StageCost(latency, latency * hw.codec_power_W)


def tx_cost(ch: ChannelSpec, payload_bytes: float) -> StageCost:
    latency = 8 * payload_bytes / ch.datarate_bps
    return StageCost(latency, latency * ch.power_W)


def required_datarate_bps(payload_bytes: float, fps: float) -> float:
    """Datarate needed to stream `payload_bytes` per frame at `fps`."""
    return 8 * payload_bytes * fps
