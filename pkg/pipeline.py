"""
pipeline.py
Evaluates one partition of a network across edge and channel.

Stage order for a cut after layer p:
    1  edge inference   → layers 0..block_end(p)        (hwmodel.inference_cost)
    2  feature encoder  → tensors live at block_end(p)  (hwmodel.encode_cost)
    3  radio            → encoded payload               (hwmodel.tx_cost)

Stages 1 and 2+3 form a two-stage pipeline, so
    throughput = 1 / max(t_inference, t_encode + t_tx)
    energy     = sum of all stage energies

p = -1 sends the input image (host inference); p = L-1 sends the network
output (edge inference).

Usage:
    from pipeline import Encoding, PartitionPoint, evaluate, profile
"""

import logging
from dataclasses import dataclass

import pandas as pd

from curves import DEFAULT_VARIANT, AccuracyCurves
from errors import CurveError, InfeasibleError
from hwmodel import ChannelSpec, HardwareSpec, StageCost, encode_cost, inference_cost, tx_cost
from netmodel import NetworkSpec, demands

logger = logging.getLogger(__name__)

# ── Encoding modes ────────────────────────────────────────────────────────────
# Order doubles as the tie-break rank (cheaper first).
NONE     = "none"
LOSSLESS = "lossless"
LOSSY    = "lossy"
ENCODING_MODES = (NONE, LOSSLESS, LOSSY)

INFERENCE    = "inference"
TRANSMISSION = "transmission"


@dataclass(frozen=True)
class Encoding:
    mode: str = NONE
    qf: int | None = None

    def __post_init__(self):
        if self.mode not in ENCODING_MODES:
            raise ValueError(f"unknown encoding {self.mode!r} (expected one of {', '.join(ENCODING_MODES)})")
        if self.mode == LOSSY:
            if isinstance(self.qf, bool) or not isinstance(self.qf, int) or not 1 <= self.qf <= 100:
                raise ValueError(f"lossy encoding needs qf in 1..100, got {self.qf!r}")
        elif self.qf is not None:
            raise ValueError(f"{self.mode} encoding takes no qf")

    @property
    def rank(self) -> int:
        return ENCODING_MODES.index(self.mode)

    def __str__(self) -> str:
        return f"lossy({self.qf})" if self.mode == LOSSY else self.mode


@dataclass(frozen=True)
class PartitionPoint:
    index: int
    encoding: Encoding = Encoding()


@dataclass(frozen=True)
class PartitionReport:
    point: PartitionPoint
    layer: str           # cut layer (curve lookup key)
    sent_layer: str      # layer whose output is transmitted
    raw_bytes: int
    payload_bytes: float
    inference: StageCost
    encode: StageCost
    tx: StageCost
    throughput_fps: float
    energy_per_frame_J: float
    bottleneck: str

    @property
    def transmission(self) -> StageCost:
        return self.encode + self.tx

    @property
    def frames_per_J(self) -> float:
        return 1.0 / self.energy_per_frame_J


def payload_ratio(
    curves: AccuracyCurves | None,
    layer: str,
    encoding: Encoding,
    variant: str = DEFAULT_VARIANT,
) -> float:
    """Compression ratio applied to the transmitted tensor (1 when unencoded)."""
    if encoding.mode == NONE:
        return 1.0
    if curves is None:
        raise CurveError(f"{encoding} encoding at '{layer}' needs accuracy curves")
    if encoding.mode == LOSSLESS:
        return curves.lossless_ratio(layer, variant)
    return curves.entry(layer, variant).ratio_at(encoding.qf)


def evaluate(
    net: NetworkSpec,
    hw: HardwareSpec,
    ch: ChannelSpec,
    pt: PartitionPoint,
    curves: AccuracyCurves | None = None,
    variant: str = DEFAULT_VARIANT,
) -> PartitionReport:
    p = pt.index
    if not -1 <= p < len(net):
        raise IndexError(f"partition index {p} out of range -1..{len(net) - 1}")

    layer = net.layer_name(p)
    sent = net.block_end(p)
    raw = net.cut_bytes(sent)
    payload = raw / payload_ratio(curves, layer, pt.encoding, variant)

    inference = inference_cost(hw, *demands(net, sent)) if sent >= 0 else StageCost()
    encode = encode_cost(hw, raw, payload) if pt.encoding.mode != NONE else StageCost()
    tx = tx_cost(ch, payload)

    t_inf = inference.latency_s
    t_tx = encode.latency_s + tx.latency_s
    report = PartitionReport(
        point=pt,
        layer=layer,
        sent_layer=net.layer_name(sent),
        raw_bytes=raw,
        payload_bytes=payload,
        inference=inference,
        encode=encode,
        tx=tx,
        throughput_fps=1.0 / max(t_inf, t_tx),
        energy_per_frame_J=inference.energy_J + encode.energy_J + tx.energy_J,
        bottleneck=INFERENCE if t_inf > t_tx else TRANSMISSION,
    )
    logger.debug(
        "Evaluated | %s p=%d %s: %.2f fps, %.4g J (%s-bound)",
        net.name, p, pt.encoding, report.throughput_fps, report.energy_per_frame_J, report.bottleneck,
    )
    return report


def report_row(network: str, r: PartitionReport) -> dict:
    """One CSV row (result_store.PIPELINE_COLUMNS)."""
    return {
        "network": network,
        "p": r.point.index,
        "layer": r.layer,
        "encoding": r.point.encoding.mode,
        "qf": r.point.encoding.qf,
        "payload_bytes": r.payload_bytes,
        "t_inf_s": r.inference.latency_s,
        "t_tx_s": r.transmission.latency_s,
        "fps": r.throughput_fps,
        "J_per_frame": r.energy_per_frame_J,
        "bottleneck": r.bottleneck,
    }


def encoding_for(
    curves: AccuracyCurves | None,
    layer: str,
    mode: str,
    max_loss_pct: float,
    variant: str = DEFAULT_VARIANT,
) -> Encoding | None:
    """
    Concrete encoding of `mode` at a cut, or None when the curves cannot
    support it there (no entry, no lossless ratio, or no qf within the bound).
    """
    if mode == NONE:
        return Encoding()
    if curves is None or not curves.has(layer):
        return None
    entry = curves.entry(layer, variant)
    if mode == LOSSLESS:
        return Encoding(LOSSLESS) if entry.lossless_ratio is not None else None
    try:
        qf, _ = entry.select(max_loss_pct)
    except InfeasibleError:
        return None
    return Encoding(LOSSY, qf)


def profile(
    net: NetworkSpec,
    hw: HardwareSpec,
    ch: ChannelSpec,
    mode: str = NONE,
    curves: AccuracyCurves | None = None,
    max_loss_pct: float = 1.0,
    variant: str = DEFAULT_VARIANT,
) -> pd.DataFrame:
    """
    Evaluate every cut p = -1..L-1 under one encoding mode. Cuts where the
    mode is unavailable are left out.
    """
    rows = []
    for p in range(-1, len(net)):
        enc = encoding_for(curves, net.layer_name(p), mode, max_loss_pct, variant)
        if enc is None:
            continue
        report = evaluate(net, hw, ch, PartitionPoint(p, enc), curves, variant)
        rows.append(report_row(net.name, report))
    logger.info("Profile | %s, %s encoding: %d cuts", net.name, mode, len(rows))
    return pd.DataFrame(rows)
