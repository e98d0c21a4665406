"""
netmodel.py
Declarative network descriptions and their per-layer demand.

A network file is JSON-compatible text (full-line `#` comments allowed):

    {
      "name": "alexnet",
      "input_shape": [3, 227, 227],
      "feature_bits": 16,
      "layers": [
        {"name": "conv1", "kind": "conv", "kernel": 11, "stride": 4, "out_channels": 64},
        {"name": "relu1", "kind": "relu"},
        ...
      ]
    }

Residual shortcuts: "input_from" makes a layer read a named earlier tensor
(its output is summed with the main path); "add_from" sums a named earlier
tensor into the layer's input (identity shortcut).

Demand per layer:
    conv : macs = kH·kW·Cin·Cout·Hout·Wout,  weights = kH·kW·Cin·Cout + Cout
    fc   : macs = Nin·Nout,                  weights = Nin·Nout + Nout
    relu / norm / maxpool / avgpool / flatten : zero macs, zero weights

Usage:
    from netmodel import load_network, layer_demand, cumulative_demand
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from errors import NetworkParseError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_FEATURE_BITS = 16

COMPUTE_KINDS = ("conv", "fc")
FREE_KINDS    = ("relu", "norm", "maxpool", "avgpool", "flatten")
KINDS         = COMPUTE_KINDS + FREE_KINDS

# Name used for the network input wherever a layer name is expected
INPUT_NAME = "input"

Shape = tuple[int, int, int]


# ── Domain types ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    kernel_h: int = 0
    kernel_w: int = 0
    stride: int = 1
    pad: int = 0
    out_channels: int = 0
    out_features: int = 0
    window: int = 0
    # Shortcut layers read a named earlier tensor instead of the previous layer
    input_from: str | None = None
    # Identity shortcut: the named earlier tensor is summed into this layer's input
    add_from: str | None = None


@dataclass(frozen=True)
class LayerDemand:
    name: str
    kind: str
    macs: int
    weight_bytes: int
    in_feature_bytes: int
    out_feature_bytes: int
    out_shape: Shape


@dataclass(frozen=True)
class NetworkSpec:
    """
    Validated network. Shapes are propagated on construction, so an instance
    that exists is a consistent layer chain.
    """
    name: str
    input_shape: Shape
    layers: tuple[LayerSpec, ...]
    feature_bits: int = DEFAULT_FEATURE_BITS
    in_shapes: tuple[Shape, ...] = field(init=False, repr=False, compare=False)
    out_shapes: tuple[Shape, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.layers:
            raise NetworkParseError(f"network '{self.name}' has no layers")
        if self.feature_bits < 8 or self.feature_bits % 8:
            raise NetworkParseError(
                f"feature_bits must be a positive multiple of 8, got {self.feature_bits}"
            )
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ShapeError(f"input_shape must be three positive dims, got {self.input_shape}")
        ins, outs = _propagate(self.input_shape, self.layers)
        object.__setattr__(self, "in_shapes", ins)
        object.__setattr__(self, "out_shapes", outs)

    def __len__(self) -> int:
        return len(self.layers)

    def index_of(self, name: str) -> int:
        """Layer index for a name; the network input maps to -1."""
        if name == INPUT_NAME:
            return -1
        for i, layer in enumerate(self.layers):
            if layer.name == name:
                return i
        raise KeyError(f"no layer named '{name}' in network '{self.name}'")

    def layer_name(self, index: int) -> str:
        return INPUT_NAME if index == -1 else self.layers[index].name

    def feature_bytes(self, shape: Shape) -> int:
        c, h, w = shape
        return c * h * w * self.feature_bits // 8

    def input_bytes(self) -> int:
        return self.feature_bytes(self.input_shape)

    def output_bytes(self, index: int) -> int:
        """Bytes of the tensor produced by layer `index` (-1: the input image)."""
        if index == -1:
            return self.input_bytes()
        return self.feature_bytes(self.out_shapes[index])

    def block_end(self, index: int) -> int:
        """
        Last index of the run of zero-cost layers directly following `index`.
        A cut after `index` transmits the tensor at block_end(index): the edge
        always runs the free layers that trail the cut layer.
        """
        if index == -1:
            return -1
        end = index
        while (
            end + 1 < len(self.layers)
            and self.layers[end + 1].kind in FREE_KINDS
            and self.layers[end + 1].input_from is None
        ):
            end += 1
        return end

    def live_tensors(self, index: int) -> list[int]:
        """
        Tensors produced at or before `index` that some later layer still reads.
        The tensor at `index` itself is always included. In a plain chain this
        is [index]; inside a residual block the pending shortcut source joins it.
        """
        if not -1 <= index < len(self.layers):
            raise IndexError(f"cut index {index} out of range -1..{len(self.layers) - 1}")
        positions = {INPUT_NAME: -1}
        positions.update((layer.name, i) for i, layer in enumerate(self.layers))
        live = {index}
        for layer in self.layers[index + 1:]:
            for source in (layer.input_from, layer.add_from):
                if source is not None and positions[source] <= index:
                    live.add(positions[source])
        return sorted(live)

    def cut_bytes(self, index: int) -> int:
        """Bytes the host needs to resume after `index`: every live tensor."""
        return sum(self.output_bytes(i) for i in self.live_tensors(index))

    def compute_layers(self) -> list[int]:
        return [i for i, layer in enumerate(self.layers) if layer.kind in COMPUTE_KINDS]


# ── Shape propagation ─────────────────────────────────────────────────────────

def _window_out(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def _check_positive(layer: LayerSpec, **values: int) -> None:
    for key, value in values.items():
        if value < 1:
            raise ShapeError(f"{key} must be >= 1, got {value}", layer.name)


def _layer_out_shape(layer: LayerSpec, shape: Shape) -> Shape:
    c, h, w = shape
    kind = layer.kind

    if kind == "conv":
        _check_positive(
            layer,
            kernel_h=layer.kernel_h, kernel_w=layer.kernel_w,
            stride=layer.stride, out_channels=layer.out_channels,
        )
        if layer.pad < 0:
            raise ShapeError(f"pad must be >= 0, got {layer.pad}", layer.name)
        out = (
            layer.out_channels,
            _window_out(h, layer.kernel_h, layer.stride, layer.pad),
            _window_out(w, layer.kernel_w, layer.stride, layer.pad),
        )
    elif kind in ("maxpool", "avgpool"):
        _check_positive(layer, window=layer.window, stride=layer.stride)
        if layer.pad < 0:
            raise ShapeError(f"pad must be >= 0, got {layer.pad}", layer.name)
        out = (
            c,
            _window_out(h, layer.window, layer.stride, layer.pad),
            _window_out(w, layer.window, layer.stride, layer.pad),
        )
    elif kind == "fc":
        _check_positive(layer, out_features=layer.out_features)
        out = (layer.out_features, 1, 1)
    elif kind == "flatten":
        out = (c * h * w, 1, 1)
    elif kind in ("relu", "norm"):
        out = shape
    else:
        raise NetworkParseError(f"unknown kind '{kind}' (expected one of {', '.join(KINDS)})", layer.name)

    if min(out) < 1:
        raise ShapeError(f"input {shape} yields non-positive output {out}", layer.name)
    return out


def _propagate(input_shape: Shape, layers) -> tuple[tuple[Shape, ...], tuple[Shape, ...]]:
    produced: dict[str, Shape] = {INPUT_NAME: tuple(input_shape)}
    ins: list[Shape] = []
    outs: list[Shape] = []
    current: Shape = tuple(input_shape)

    for layer in layers:
        if layer.name in produced:
            raise NetworkParseError("duplicate layer name", layer.name)

        if layer.input_from is not None:
            if layer.input_from not in produced:
                raise ShapeError(f"input_from '{layer.input_from}' is not an earlier layer", layer.name)
            source = produced[layer.input_from]
        else:
            source = current

        if layer.add_from is not None:
            if layer.add_from not in produced:
                raise ShapeError(f"add_from '{layer.add_from}' is not an earlier layer", layer.name)
            if produced[layer.add_from] != source:
                raise ShapeError(
                    f"identity shortcut {produced[layer.add_from]} does not match input {source}", layer.name,
                )

        out = _layer_out_shape(layer, source)
        # A shortcut is summed with the main path, so both must agree
        if layer.input_from is not None and out != current:
            raise ShapeError(f"shortcut output {out} does not match main path {current}", layer.name)

        ins.append(source)
        outs.append(out)
        produced[layer.name] = out
        current = out

    return tuple(ins), tuple(outs)


# ── Loading ───────────────────────────────────────────────────────────────────

_INT_FIELDS = ("kernel_h", "kernel_w", "stride", "pad", "out_channels", "out_features", "window")


def strip_comments(text: str) -> str:
    """Drop full-line `#` comments so the rest parses as JSON."""
    return "\n".join(line for line in text.splitlines() if not line.lstrip().startswith("#"))


def _parse_layer(raw: dict, position: int) -> LayerSpec:
    if not isinstance(raw, dict):
        raise NetworkParseError(f"layer #{position} is not an object")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise NetworkParseError(f"layer #{position} has no name")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise NetworkParseError(f"unknown kind {kind!r} (expected one of {', '.join(KINDS)})", name)

    values = {}
    if "kernel" in raw:
        values["kernel_h"] = values["kernel_w"] = raw["kernel"]
    for key in _INT_FIELDS:
        if key in raw:
            values[key] = raw[key]
    for key, value in values.items():
        if isinstance(value, bool) or not isinstance(value, int):
            raise NetworkParseError(f"field '{key}' must be an integer, got {value!r}", name)

    if kind == "conv" and not {"kernel_h", "kernel_w", "out_channels"} <= values.keys():
        raise NetworkParseError("conv needs kernel (or kernel_h/kernel_w) and out_channels", name)
    if kind == "fc" and "out_features" not in values:
        raise NetworkParseError("fc needs out_features", name)
    if kind in ("maxpool", "avgpool") and "window" not in values:
        raise NetworkParseError(f"{kind} needs window", name)

    refs = {}
    for key in ("input_from", "add_from"):
        ref = raw.get(key)
        if ref is not None and not isinstance(ref, str):
            raise NetworkParseError(f"{key} must be a layer name", name)
        refs[key] = ref
    if refs["input_from"] and refs["add_from"]:
        raise NetworkParseError("a layer takes input_from or add_from, not both", name)

    return LayerSpec(name=name, kind=kind, **refs, **values)


def parse_network(doc: dict) -> NetworkSpec:
    if not isinstance(doc, dict):
        raise NetworkParseError("network description must be an object")
    for key in ("name", "input_shape", "layers"):
        if key not in doc:
            raise NetworkParseError(f"missing top-level field '{key}'")
    shape = doc["input_shape"]
    if not isinstance(shape, list) or len(shape) != 3 or not all(isinstance(v, int) for v in shape):
        raise NetworkParseError(f"input_shape must be [c, h, w] integers, got {shape!r}")
    if not isinstance(doc["layers"], list):
        raise NetworkParseError("layers must be a list")

    layers = tuple(_parse_layer(raw, i) for i, raw in enumerate(doc["layers"]))
    return NetworkSpec(
        name=str(doc["name"]),
        input_shape=tuple(shape),
        layers=layers,
        feature_bits=int(doc.get("feature_bits", DEFAULT_FEATURE_BITS)),
    )


def load_network(path) -> NetworkSpec:
    """Read, parse and validate a network file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(strip_comments(text))
    except json.JSONDecodeError as exc:
        raise NetworkParseError(f"{path}: {exc.msg} at line {exc.lineno}") from exc
    net = parse_network(doc)
    logger.info("Network loaded | %s: %d layers, input %s", net.name, len(net), net.input_shape)
    return net


# ── Demand ────────────────────────────────────────────────────────────────────

def _check_index(net: NetworkSpec, index: int) -> None:
    if not 0 <= index < len(net.layers):
        raise IndexError(f"layer index {index} out of range 0..{len(net.layers) - 1}")


def layer_demand(net: NetworkSpec, index: int) -> LayerDemand:
    _check_index(net, index)
    layer = net.layers[index]
    cin, hin, win = net.in_shapes[index]
    out_shape = net.out_shapes[index]
    cout, hout, wout = out_shape

    if layer.kind == "conv":
        per_output = layer.kernel_h * layer.kernel_w * cin
        macs = per_output * cout * hout * wout
        params = per_output * cout + cout
    elif layer.kind == "fc":
        n_in = cin * hin * win
        macs = n_in * layer.out_features
        params = n_in * layer.out_features + layer.out_features
    else:
        macs = params = 0

    return LayerDemand(
        name=layer.name,
        kind=layer.kind,
        macs=macs,
        weight_bytes=params * net.feature_bits // 8,
        in_feature_bytes=net.feature_bytes(net.in_shapes[index]),
        out_feature_bytes=net.feature_bytes(out_shape),
        out_shape=out_shape,
    )


def demands(net: NetworkSpec, upto: int) -> list[LayerDemand]:
    """Layer demands for layers 0..=upto (empty for upto = -1)."""
    if upto == -1:
        return []
    _check_index(net, upto)
    return [layer_demand(net, i) for i in range(upto + 1)]


def cumulative_demand(net: NetworkSpec, upto: int) -> tuple[int, int]:
    _check_index(net, upto)
    macs = weight_bytes = 0
    for d in demands(net, upto):
        macs += d.macs
        weight_bytes += d.weight_bytes
    return macs, weight_bytes


def demand_table(net: NetworkSpec) -> pd.DataFrame:
    """
    Per-layer demand with cumulative columns; first row is the network input.
    Columns follow result_store.DEMAND_COLUMNS except rate_bps, which
    depends on a frame rate and is added by the caller.
    """
    rows = [{
        "index": -1,
        "name": INPUT_NAME,
        "kind": INPUT_NAME,
        "out_shape": "x".join(map(str, net.input_shape)),
        "macs": 0,
        "weight_bytes": 0,
        "out_feature_bytes": net.input_bytes(),
        "cum_macs": 0,
        "cum_weight_bytes": 0,
    }]
    cum_macs = cum_weights = 0
    for i in range(len(net.layers)):
        d = layer_demand(net, i)
        cum_macs += d.macs
        cum_weights += d.weight_bytes
        rows.append({
            "index": i,
            "name": d.name,
            "kind": d.kind,
            "out_shape": "x".join(map(str, d.out_shape)),
            "macs": d.macs,
            "weight_bytes": d.weight_bytes,
            "out_feature_bytes": d.out_feature_bytes,
            "cum_macs": cum_macs,
            "cum_weight_bytes": cum_weights,
        })
    return pd.DataFrame(rows)


if __name__ == "__main__":
    net = load_network("data/alexnet.net")
    print(demand_table(net).to_string(index=False))
