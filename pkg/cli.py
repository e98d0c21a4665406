"""
cli.py
Command-line front end. Every command writes CSV to stdout (or --out).

    python cli.py demand   --net data/alexnet.net --fps 30
    python cli.py gen      feats.ftr --shape 256,6,6 --nonzero 0.15 --seed 1
    python cli.py encode   feats.ftr --mode lossy --qf 30
    python cli.py decode   feats.fse --out feats.dec.ftr
    python cli.py stats    feats.ftr --qf 10 30 50 90
    python cli.py evaluate --partition conv5 --encoding lossy --variant finetuned
    python cli.py optimize --objective energy --encoding none
    python cli.py sweep    --bw-list 1e6 2e6 22e6 --power-list 0.099

Errors print one line `error: ...` on stderr and exit with status 2.
"""

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from curves import DEFAULT_VARIANT, VARIANTS, AccuracyCurves, load_curves
from errors import CurveError, EdgeSplitError
from featcodec import (
    compression_ratio,
    decode,
    encode,
    feature_stats,
    read_stream,
    write_stream,
)
from hwmodel import ChannelSpec, HardwareSpec, load_channel, load_hardware, required_datarate_bps
from netmodel import demand_table, load_network
from pipeline import ENCODING_MODES, LOSSY, NONE, Encoding, PartitionPoint, evaluate, report_row
from planner import DEFAULT_MAX_LOSS_PCT, OBJECTIVES, THROUGHPUT, headline, optimize_partition, select_qf, sweep
from result_store import (
    DEMAND_COLUMNS,
    PIPELINE_COLUMNS,
    STATS_COLUMNS,
    SWEEP_COLUMNS,
    write_frame,
)
from synth import SynthSpec, generate, parse_dist, read_tensor, write_tensor

logger = logging.getLogger("cli")

DATA_DIR = Path(__file__).resolve().parent / "data"

DEFAULT_NET    = str(DATA_DIR / "alexnet.net")
DEFAULT_HW     = str(DATA_DIR / "edge28nm.hw")
DEFAULT_CH     = str(DATA_DIR / "nlink.ch")
DEFAULT_CURVES = str(DATA_DIR / "alexnet.curves")

WEIGHTS = ("auto", "compressed", "raw")

DEFAULT_FPS = 30.0

EXIT_ERROR = 2


# ── Shared loading ────────────────────────────────────────────────────────────

def _hardware(args, encodings) -> HardwareSpec:
    hw = load_hardware(args.hw)
    raw = args.weights == "raw" or (args.weights == "auto" and set(encodings) == {NONE})
    return hw.with_raw_weights() if raw else hw


def _curves(args, net) -> AccuracyCurves | None:
    curves = load_curves(args.curves)
    if curves.network and curves.network != net.name:
        logger.warning("Curves ignored | %s describes '%s', not '%s'", args.curves, curves.network, net.name)
        return None
    return curves


def _channel(args) -> ChannelSpec:
    ch = load_channel(args.ch)
    return ch if args.mode is None else ch.with_mode(args.mode)


def _partition_index(net, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        return net.index_of(text)


def _shape(text: str) -> tuple[int, int, int]:
    try:
        dims = tuple(int(v) for v in text.replace("x", ",").split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad shape '{text}'") from exc
    if len(dims) != 3:
        raise argparse.ArgumentTypeError(f"shape needs three dims, got '{text}'")
    return dims


# ── Commands ──────────────────────────────────────────────────────────────────

def cmd_demand(args) -> None:
    if args.fps <= 0:
        raise ValueError(f"--fps must be > 0, got {args.fps}")
    table = demand_table(load_network(args.net))
    # datarate needed to stream each layer's output uncompressed at --fps
    table["rate_bps"] = required_datarate_bps(table["out_feature_bytes"], args.fps)
    write_frame(table, DEMAND_COLUMNS, args.out)


def cmd_gen(args) -> None:
    spec = SynthSpec(
        shape=args.shape,
        nonzero_ratio=args.nonzero,
        value_dist=parse_dist(args.dist),
        spatial_clustering=args.clustering,
        seed=args.seed,
    )
    write_tensor(args.tensor, generate(spec))
    logger.info("Tensor written | %s %s", args.tensor, spec.shape)


def _stats_row(name, t, mode, qf, encoded_bytes, stats) -> dict:
    return {
        "tensor": name,
        "shape": "x".join(map(str, t.shape)),
        "mode": mode,
        "qf": qf,
        "raw_bytes": t.raw_bytes,
        "encoded_bytes": encoded_bytes,
        "ratio": t.raw_bytes / encoded_bytes,
        "entropy_bits": stats.entropy_bits,
        "nonzero_ratio": stats.nonzero_ratio,
    }


def cmd_encode(args) -> None:
    if args.mode == LOSSY and args.qf is None:
        raise ValueError("--mode lossy needs --qf")
    t = read_tensor(args.tensor)
    stream = encode(t, args.mode, args.qf if args.mode == LOSSY else None)
    out = args.out or str(Path(args.tensor).with_suffix(".fse"))
    write_stream(out, stream)
    logger.info("Stream written | %s ratio %.2f", out, compression_ratio(t, stream))
    row = _stats_row(args.tensor, t, stream.mode_name, stream.qf or None, len(stream), feature_stats(t))
    write_frame(pd.DataFrame([row]), STATS_COLUMNS)


def cmd_decode(args) -> None:
    t = decode(read_stream(args.stream))
    out = args.out or str(Path(args.stream).with_suffix(".dec.ftr"))
    write_tensor(out, t)
    logger.info("Tensor written | %s %s", out, t.shape)


def cmd_stats(args) -> None:
    t = read_tensor(args.tensor)
    stats = feature_stats(t)
    rows = [_stats_row(args.tensor, t, NONE, None, t.raw_bytes, stats)]
    rows.append(_stats_row(args.tensor, t, "lossless", None, len(encode(t, "lossless")), stats))
    for qf in args.qf or []:
        rows.append(_stats_row(args.tensor, t, LOSSY, qf, len(encode(t, LOSSY, qf)), stats))
    write_frame(pd.DataFrame(rows), STATS_COLUMNS, args.out)


def cmd_evaluate(args) -> None:
    net = load_network(args.net)
    curves = _curves(args, net)
    hw = _hardware(args, [args.encoding])
    ch = _channel(args)
    p = _partition_index(net, args.partition)

    if curves is None and args.encoding != NONE:
        raise CurveError(f"{args.encoding} encoding needs accuracy curves for '{net.name}'")
    qf = args.qf
    if args.encoding == LOSSY and qf is None:
        qf, _ = select_qf(curves, net.layer_name(p), args.max_loss, args.variant)
    enc = Encoding(args.encoding, qf if args.encoding == LOSSY else None)

    report = evaluate(net, hw, ch, PartitionPoint(p, enc), curves, args.variant)
    write_frame(pd.DataFrame([report_row(net.name, report)]), PIPELINE_COLUMNS, args.out)


def cmd_optimize(args) -> None:
    net = load_network(args.net)
    curves = _curves(args, net)
    hw = _hardware(args, args.encoding)
    ch = _channel(args)

    _, best = optimize_partition(
        net, hw, ch, curves, args.max_loss, args.objective, args.encoding, args.variant,
    )
    reports = [best]
    if args.baselines:
        h = headline(net, hw, ch, curves, args.max_loss, args.objective, args.encoding, args.variant)
        reports = [h.host, best, h.edge]
        logger.info(
            "Improvement | vs host %.2fx fps, %.2fx energy; vs edge %.2fx fps, %.2fx energy",
            h.fps_vs_host, h.energy_vs_host, h.fps_vs_edge, h.energy_vs_edge,
        )
    rows = [report_row(net.name, r) for r in reports]
    write_frame(pd.DataFrame(rows), PIPELINE_COLUMNS, args.out)


def cmd_sweep(args) -> None:
    net = load_network(args.net)
    curves = _curves(args, net)
    hw = _hardware(args, args.encoding)
    ch = _channel(args)

    paired = False
    if args.bw_list is None and args.power_list is None:
        bw_list = [rate for rate, _ in ch.modes]
        power_list = [power for _, power in ch.modes]
        paired = True
    else:
        bw_list = args.bw_list or [ch.datarate_bps]
        power_list = args.power_list or [ch.power_W]

    objectives = args.objective or list(OBJECTIVES)
    result = sweep(
        net, hw, curves, args.max_loss, bw_list, power_list,
        objectives=objectives, encodings=args.encoding, variant=args.variant,
        paired=paired, workers=args.workers,
    )
    write_frame(result.to_frame(), SWEEP_COLUMNS, args.out)


# ── Parser ────────────────────────────────────────────────────────────────────

def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--net", default=DEFAULT_NET, help="network description")
    p.add_argument("--hw", default=DEFAULT_HW, help="hardware description")
    p.add_argument("--ch", default=DEFAULT_CH, help="channel description")
    p.add_argument("--curves", default=DEFAULT_CURVES, help="accuracy curves")
    p.add_argument("--max-loss", type=float, default=DEFAULT_MAX_LOSS_PCT, help="accuracy loss bound, percent")
    p.add_argument("--variant", choices=VARIANTS, default=DEFAULT_VARIANT)
    p.add_argument("--weights", choices=WEIGHTS, default="auto",
                   help="auto: uncompressed weights when only 'none' encoding is allowed")
    p.add_argument("--mode", type=int, default=None, help="channel mode index")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgesplit", description="Edge-host DNN partitioning model")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demand", help="per-layer compute/memory/feature demand")
    p.add_argument("--net", default=DEFAULT_NET)
    p.add_argument("--fps", type=float, default=DEFAULT_FPS, help="frame rate for the rate_bps column")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_demand)

    p = sub.add_parser("gen", help="write a synthetic feature tensor")
    p.add_argument("tensor")
    p.add_argument("--shape", type=_shape, default=(256, 13, 13))
    p.add_argument("--nonzero", type=float, default=0.15)
    p.add_argument("--dist", default="exponential:0.05", help="exponential:RATE or uniform:LO:HI")
    p.add_argument("--clustering", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("encode", help="encode a tensor file to a stream")
    p.add_argument("tensor")
    p.add_argument("--mode", choices=("lossless", LOSSY), default="lossless")
    p.add_argument("--qf", type=int, default=None)
    p.add_argument("--out", default=None, help="stream path (default: tensor path with .fse)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a stream to a tensor file")
    p.add_argument("stream")
    p.add_argument("--out", default=None, help="tensor path (default: stream path with .dec.ftr)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("stats", help="feature statistics and compression ratios")
    p.add_argument("tensor")
    p.add_argument("--qf", type=int, nargs="*", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("evaluate", help="evaluate one partition point")
    _add_model_args(p)
    p.add_argument("--partition", required=True, help="layer name, index, or 'input'")
    p.add_argument("--encoding", choices=ENCODING_MODES, default=NONE)
    p.add_argument("--qf", type=int, default=None, help="lossy qf (default: selected from curves)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="best partition for one objective")
    _add_model_args(p)
    p.add_argument("--objective", choices=OBJECTIVES, default=THROUGHPUT)
    p.add_argument("--encoding", choices=ENCODING_MODES, nargs="+", default=list(ENCODING_MODES))
    p.add_argument("--baselines", action="store_true", help="add host and edge inference rows")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="best partition over a bandwidth x power grid")
    _add_model_args(p)
    p.add_argument("--objective", choices=OBJECTIVES, nargs="+", default=None)
    p.add_argument("--encoding", choices=ENCODING_MODES, nargs="+", default=list(ENCODING_MODES))
    p.add_argument("--bw-list", type=float, nargs="+", default=None)
    p.add_argument("--power-list", type=float, nargs="+", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    try:
        args.func(args)
    except KeyError as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_ERROR
    except (EdgeSplitError, ValueError, IndexError, OSError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
