"""
planner.py
Choice of quality factor and partition layer.

    select_qf          : smallest sampled QF within an accuracy-loss bound
    optimize_partition : exhaustive search over (p, encoding) for one objective
    sweep              : optimum per (bandwidth, tx power) cell, both objectives
    headline           : optimum against host-only and edge-only inference

Ties go to the smaller p, then the cheaper encoding (none < lossless < lossy).
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from itertools import product

import pandas as pd

from curves import DEFAULT_VARIANT, AccuracyCurves
from errors import InfeasibleError
from hwmodel import ChannelSpec, HardwareSpec
from netmodel import NetworkSpec
from pipeline import (
    ENCODING_MODES,
    NONE,
    Encoding,
    PartitionPoint,
    PartitionReport,
    encoding_for,
    evaluate,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_LOSS_PCT = 1.0

THROUGHPUT = "throughput"
ENERGY     = "energy"
OBJECTIVES = (THROUGHPUT, ENERGY)


def select_qf(
    curves: AccuracyCurves,
    layer: str,
    max_loss_pct: float,
    variant: str = DEFAULT_VARIANT,
) -> tuple[int, float]:
    """(qf, compression_ratio) of the smallest sampled qf meeting the bound."""
    return curves.entry(layer, variant).select(max_loss_pct)


def _check_objective(objective: str) -> None:
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r} (expected one of {', '.join(OBJECTIVES)})")


def objective_value(report: PartitionReport, objective: str) -> float:
    """Lower is better for both objectives."""
    _check_objective(objective)
    if objective == THROUGHPUT:
        return -report.throughput_fps
    return report.energy_per_frame_J


def candidates(
    net: NetworkSpec,
    curves: AccuracyCurves | None,
    max_loss_pct: float = DEFAULT_MAX_LOSS_PCT,
    encodings=ENCODING_MODES,
    variant: str = DEFAULT_VARIANT,
) -> list[PartitionPoint]:
    """Every admissible (p, encoding), in tie-break order."""
    if max_loss_pct < 0:
        raise ValueError(f"max_loss_pct must be >= 0, got {max_loss_pct}")
    unknown = set(encodings) - set(ENCODING_MODES)
    if unknown:
        raise ValueError(f"unknown encoding(s): {', '.join(sorted(unknown))}")
    modes = [m for m in ENCODING_MODES if m in encodings]

    points = []
    for p in range(-1, len(net)):
        layer = net.layer_name(p)
        for mode in modes:
            enc = encoding_for(curves, layer, mode, max_loss_pct, variant)
            if enc is not None:
                points.append(PartitionPoint(p, enc))
    if not points:
        raise InfeasibleError(
            f"no partition of '{net.name}' admits encodings {', '.join(modes)} within {max_loss_pct}% loss"
        )
    return points


def optimize_partition(
    net: NetworkSpec,
    hw: HardwareSpec,
    ch: ChannelSpec,
    curves: AccuracyCurves | None,
    max_loss_pct: float = DEFAULT_MAX_LOSS_PCT,
    objective: str = THROUGHPUT,
    encodings=ENCODING_MODES,
    variant: str = DEFAULT_VARIANT,
) -> tuple[PartitionPoint, PartitionReport]:
    _check_objective(objective)
    best = None
    best_value = float("inf")
    for pt in candidates(net, curves, max_loss_pct, encodings, variant):
        report = evaluate(net, hw, ch, pt, curves, variant)
        value = objective_value(report, objective)
        if value < best_value:
            best, best_value = (pt, report), value

    pt, report = best
    logger.info(
        "Optimum | %s by %s: cut at %s (p=%d) with %s, %.2f fps, %.4g J/frame",
        net.name, objective, report.layer, pt.index, pt.encoding,
        report.throughput_fps, report.energy_per_frame_J,
    )
    return best


# ── Sweeps ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SweepCell:
    bandwidth_bps: float
    power_W: float
    # objective -> (PartitionPoint, PartitionReport)
    best: dict


@dataclass(frozen=True)
class SweepResult:
    network: str
    cells: tuple[SweepCell, ...]

    def best_layer(self, bandwidth_bps: float, power_W: float, objective: str = THROUGHPUT) -> str:
        for cell in self.cells:
            if cell.bandwidth_bps == bandwidth_bps and cell.power_W == power_W:
                return cell.best[objective][1].layer
        raise KeyError(f"no sweep cell for ({bandwidth_bps}, {power_W})")

    def to_frame(self) -> pd.DataFrame:
        """Rows in grid order (result_store.SWEEP_COLUMNS)."""
        rows = []
        for cell in self.cells:
            for objective, (_, report) in cell.best.items():
                rows.append({
                    "bandwidth_bps": cell.bandwidth_bps,
                    "power_W": cell.power_W,
                    "objective": objective,
                    "best_layer": report.layer,
                    "fps": report.throughput_fps,
                    "J_per_frame": report.energy_per_frame_J,
                })
        return pd.DataFrame(rows)


def _solve_cell(cell, net, hw, curves, max_loss_pct, objectives, encodings, variant) -> SweepCell:
    bandwidth, power = cell
    ch = ChannelSpec.single(bandwidth, power)
    best = {
        objective: optimize_partition(net, hw, ch, curves, max_loss_pct, objective, encodings, variant)
        for objective in objectives
    }
    return SweepCell(float(bandwidth), float(power), best)


def sweep(
    net: NetworkSpec,
    hw: HardwareSpec,
    curves: AccuracyCurves | None,
    max_loss_pct: float,
    bw_list,
    power_list,
    objectives=OBJECTIVES,
    encodings=ENCODING_MODES,
    variant: str = DEFAULT_VARIANT,
    paired: bool = False,
    workers: int = 1,
) -> SweepResult:
    """
    Optimum for each (bandwidth, power) cell. The grid is the cartesian
    product of the two lists, or their element-wise pairing with paired=True.
    """
    if not bw_list or not power_list:
        raise ValueError("sweep needs at least one bandwidth and one power value")
    if paired and len(bw_list) != len(power_list):
        raise ValueError("paired sweep needs equally long bandwidth and power lists")
    for objective in objectives:
        _check_objective(objective)

    grid = list(zip(bw_list, power_list)) if paired else list(product(bw_list, power_list))
    solve = partial(
        _solve_cell, net=net, hw=hw, curves=curves, max_loss_pct=max_loss_pct,
        objectives=tuple(objectives), encodings=tuple(encodings), variant=variant,
    )
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(solve, grid))
    else:
        cells = [solve(cell) for cell in grid]

    logger.info("Sweep | %s: %d cells, %s", net.name, len(cells), ", ".join(objectives))
    return SweepResult(net.name, tuple(cells))


# ── Baseline comparison ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class Headline:
    partitioned: PartitionReport
    host: PartitionReport
    edge: PartitionReport

    @property
    def fps_vs_host(self) -> float:
        return self.partitioned.throughput_fps / self.host.throughput_fps

    @property
    def energy_vs_host(self) -> float:
        return self.host.energy_per_frame_J / self.partitioned.energy_per_frame_J

    @property
    def fps_vs_edge(self) -> float:
        return self.partitioned.throughput_fps / self.edge.throughput_fps

    @property
    def energy_vs_edge(self) -> float:
        return self.edge.energy_per_frame_J / self.partitioned.energy_per_frame_J

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for label, r in (("host", self.host), ("partitioned", self.partitioned), ("edge", self.edge)):
            rows.append({
                "case": label,
                "layer": r.layer,
                "encoding": str(r.point.encoding),
                "fps": r.throughput_fps,
                "J_per_frame": r.energy_per_frame_J,
            })
        return pd.DataFrame(rows)


def headline(
    net: NetworkSpec,
    hw: HardwareSpec,
    ch: ChannelSpec,
    curves: AccuracyCurves | None,
    max_loss_pct: float = DEFAULT_MAX_LOSS_PCT,
    objective: str = THROUGHPUT,
    encodings=ENCODING_MODES,
    variant: str = DEFAULT_VARIANT,
) -> Headline:
    """
    Best partition against the two unpartitioned extremes: host inference
    (input image sent with its best available encoding, whatever `encodings`
    allows the partitioned search) and edge inference (raw network output sent).
    """
    _, partitioned = optimize_partition(net, hw, ch, curves, max_loss_pct, objective, encodings, variant)

    host = None
    for pt in candidates(net, curves, max_loss_pct, variant=variant):
        if pt.index != -1:
            continue
        report = evaluate(net, hw, ch, pt, curves, variant)
        if host is None or objective_value(report, objective) < objective_value(host, objective):
            host = report

    edge = evaluate(net, hw, ch, PartitionPoint(len(net) - 1, Encoding(NONE)), curves, variant)
    return Headline(partitioned, host, edge)
