"""
curves.py
Accuracy curves: compression ratio and accuracy loss per sampled quality
factor, for each transmitted layer of a network.

File layout (JSON-compatible, `#` comments allowed):

    {
      "network": "alexnet",
      "entries": [
        {"layer": "conv5", "variant": "original", "source": "digitized",
         "lossless_ratio": 6.0,
         "samples": [[10, 52.0, 6.0], [30, 28.0, 1.0], ...]},
        ...
      ]
    }

Samples are [qf, compression_ratio, accuracy_loss_pct]. A "finetuned" entry
describes the host partition after re-training; layers without one fall back
to "original".
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from errors import CurveError, InfeasibleError
from netmodel import strip_comments

logger = logging.getLogger(__name__)

VARIANTS = ("original", "finetuned")
DEFAULT_VARIANT = "original"


@dataclass(frozen=True)
class CurveEntry:
    layer: str
    variant: str
    samples: tuple[tuple[int, float, float], ...]
    lossless_ratio: float | None = None
    source: str = "digitized"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise CurveError(f"{self.layer}: unknown variant {self.variant!r}")
        if not self.samples:
            raise CurveError(f"{self.layer}/{self.variant}: no samples")
        prev_qf, prev_loss = 0, float("inf")
        for qf, ratio, loss in self.samples:
            if not 1 <= qf <= 100:
                raise CurveError(f"{self.layer}/{self.variant}: qf {qf} outside 1..100")
            if qf <= prev_qf:
                raise CurveError(f"{self.layer}/{self.variant}: qf samples must be strictly increasing")
            if ratio <= 0 or loss < 0:
                raise CurveError(f"{self.layer}/{self.variant}: bad sample ({qf}, {ratio}, {loss})")
            if loss > prev_loss:
                raise CurveError(f"{self.layer}/{self.variant}: accuracy loss increases at qf {qf}")
            prev_qf, prev_loss = qf, loss
        if self.lossless_ratio is not None and self.lossless_ratio <= 0:
            raise CurveError(f"{self.layer}/{self.variant}: lossless_ratio must be > 0")

    @property
    def qfs(self) -> list[int]:
        return [s[0] for s in self.samples]

    def ratio_at(self, qf: int) -> float:
        for sample_qf, ratio, _ in self.samples:
            if sample_qf == qf:
                return ratio
        raise CurveError(f"{self.layer}/{self.variant}: no sample at qf {qf}")

    def loss_at(self, qf: int) -> float:
        for sample_qf, _, loss in self.samples:
            if sample_qf == qf:
                return loss
        raise CurveError(f"{self.layer}/{self.variant}: no sample at qf {qf}")

    def select(self, max_loss_pct: float) -> tuple[int, float]:
        """Smallest sampled qf whose loss is within the bound, with its ratio."""
        if max_loss_pct < 0:
            raise ValueError(f"max_loss_pct must be >= 0, got {max_loss_pct}")
        for qf, ratio, loss in self.samples:
            if loss <= max_loss_pct:
                return qf, ratio
        raise InfeasibleError(
            f"no sampled qf for layer '{self.layer}' ({self.variant}) meets {max_loss_pct}% loss"
        )


@dataclass(frozen=True)
class AccuracyCurves:
    network: str
    entries: dict  # (layer, variant) -> CurveEntry

    def layers(self) -> list[str]:
        return sorted({layer for layer, _ in self.entries})

    def has(self, layer: str) -> bool:
        return (layer, DEFAULT_VARIANT) in self.entries

    def entry(self, layer: str, variant: str = DEFAULT_VARIANT) -> CurveEntry:
        if variant not in VARIANTS:
            raise CurveError(f"unknown variant {variant!r}")
        found = self.entries.get((layer, variant)) or self.entries.get((layer, DEFAULT_VARIANT))
        if found is None:
            raise CurveError(f"no accuracy curve for layer '{layer}'")
        return found

    def lossless_ratio(self, layer: str, variant: str = DEFAULT_VARIANT) -> float:
        ratio = self.entry(layer, variant).lossless_ratio
        if ratio is None:
            raise CurveError(f"no lossless ratio for layer '{layer}'")
        return ratio


def _parse_entry(raw) -> CurveEntry:
    if not isinstance(raw, dict) or "layer" not in raw or "samples" not in raw:
        raise CurveError(f"curve entry needs 'layer' and 'samples': {raw!r}")
    samples = []
    for s in raw["samples"]:
        if not isinstance(s, list) or len(s) != 3:
            raise CurveError(f"{raw['layer']}: sample must be [qf, ratio, loss], got {s!r}")
        qf, ratio, loss = s
        if isinstance(qf, bool) or not isinstance(qf, int):
            raise CurveError(f"{raw['layer']}: qf must be an integer, got {qf!r}")
        samples.append((qf, float(ratio), float(loss)))
    lossless = raw.get("lossless_ratio")
    return CurveEntry(
        layer=str(raw["layer"]),
        variant=raw.get("variant", DEFAULT_VARIANT),
        samples=tuple(samples),
        lossless_ratio=None if lossless is None else float(lossless),
        source=raw.get("source", "digitized"),
    )


def parse_curves(doc: dict) -> AccuracyCurves:
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise CurveError("curves file needs an 'entries' list")
    entries = {}
    for raw in doc["entries"]:
        e = _parse_entry(raw)
        key = (e.layer, e.variant)
        if key in entries:
            raise CurveError(f"duplicate curve entry {e.layer}/{e.variant}")
        entries[key] = e
    for layer, variant in entries:
        if (layer, DEFAULT_VARIANT) not in entries:
            raise CurveError(f"{layer}: '{variant}' entry without an 'original' entry")
    return AccuracyCurves(network=str(doc.get("network", "")), entries=entries)


def load_curves(path) -> AccuracyCurves:
    try:
        doc = json.loads(strip_comments(Path(path).read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise CurveError(f"{path}: {exc.msg} at line {exc.lineno}") from exc
    curves = parse_curves(doc)
    logger.info("Curves loaded | %s: %d entries", curves.network or path, len(curves.entries))
    return curves
