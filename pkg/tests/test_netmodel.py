import json

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from errors import NetworkParseError, ShapeError
from netmodel import (
    cumulative_demand,
    demand_table,
    demands,
    layer_demand,
    load_network,
    parse_network,
)


def _write(tmp_path, doc, name="net.net"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_alexnet_structure(alexnet):
    kinds = [layer.kind for layer in alexnet.layers]
    assert alexnet.input_shape == (3, 227, 227)
    assert kinds.count("conv") == 5
    assert kinds.count("fc") == 3
    assert len(alexnet) == 21
    assert [alexnet.layer_name(i) for i in alexnet.compute_layers()] == [
        "conv1", "conv2", "conv3", "conv4", "conv5", "fc6", "fc7", "fc8",
    ]


def test_alexnet_feature_sizes(alexnet):
    assert alexnet.input_bytes() == 309_174
    conv5 = alexnet.index_of("conv5")
    assert layer_demand(alexnet, conv5).out_feature_bytes == 86_528
    assert alexnet.out_shapes[alexnet.index_of("pool5")] == (256, 6, 6)
    assert layer_demand(alexnet, len(alexnet) - 1).out_feature_bytes == 2_000


def test_alexnet_totals(alexnet):
    macs, weight_bytes = cumulative_demand(alexnet, len(alexnet) - 1)
    assert macs == 714_188_480
    assert weight_bytes == 122_201_680
    assert weight_bytes // 2 == 61_100_840


def test_alexnet_layer_demand(alexnet):
    conv1 = layer_demand(alexnet, 0)
    assert conv1.macs == 70_276_800
    assert conv1.out_shape == (64, 55, 55)
    assert conv1.in_feature_bytes == 309_174
    fc6 = layer_demand(alexnet, alexnet.index_of("fc6"))
    assert fc6.weight_bytes == 75_505_664
    relu = layer_demand(alexnet, 1)
    assert relu.macs == 0 and relu.weight_bytes == 0


def test_vgg16_structure_and_totals(vgg16):
    kinds = [layer.kind for layer in vgg16.layers]
    assert kinds.count("conv") == 13
    assert kinds.count("fc") == 3
    macs, weight_bytes = cumulative_demand(vgg16, len(vgg16) - 1)
    assert macs == 15_470_264_320
    assert weight_bytes == 138_357_544 * 2


def test_resnet50_loads(resnet50):
    assert resnet50.out_shapes[-1] == (1000, 1, 1)
    assert sum(1 for layer in resnet50.layers if layer.input_from) == 4
    assert sum(1 for layer in resnet50.layers if layer.add_from) == 12


def test_cut_inside_residual_block_keeps_shortcut(resnet50):
    cut = resnet50.block_end(resnet50.index_of("res2b_a"))
    assert resnet50.layer_name(cut) == "res2b_a_relu"
    assert resnet50.live_tensors(cut) == [resnet50.index_of("res2a_relu"), cut]
    assert resnet50.cut_bytes(cut) == 1_605_632 + 401_408

    # projection blocks keep the block input alive until the projection runs
    tail = resnet50.index_of("res2a_c")
    assert resnet50.live_tensors(tail) == [resnet50.index_of("pool1"), tail]
    assert resnet50.cut_bytes(tail) == 401_408 + 1_605_632


def test_cut_at_block_boundary_sends_one_tensor(resnet50, alexnet):
    end = resnet50.block_end(resnet50.index_of("res2b_c"))
    assert resnet50.layer_name(end) == "res2b_relu"
    assert resnet50.live_tensors(end) == [end]
    assert resnet50.cut_bytes(end) == 1_605_632
    assert resnet50.live_tensors(-1) == [-1]
    for i in range(-1, len(alexnet)):
        assert alexnet.cut_bytes(i) == alexnet.output_bytes(i)
    with pytest.raises(IndexError):
        alexnet.live_tensors(len(alexnet))


@pytest.mark.parametrize("layers, error", [
    ([{"name": "r", "kind": "relu", "add_from": "later"}], ShapeError),
    ([{"name": "c", "kind": "conv", "kernel": 1, "out_channels": 8},
      {"name": "r", "kind": "relu", "add_from": "input"}], ShapeError),
    ([{"name": "r", "kind": "relu", "add_from": 3}], NetworkParseError),
    ([{"name": "c", "kind": "conv", "kernel": 1, "out_channels": 4, "input_from": "input", "add_from": "input"}],
     NetworkParseError),
])
def test_shortcut_errors(layers, error):
    with pytest.raises(error):
        parse_network({"name": "s", "input_shape": [4, 8, 8], "layers": layers})


def test_fc_unit_layer():
    net = parse_network({
        "name": "tiny", "input_shape": [1, 1, 1],
        "layers": [{"name": "fc", "kind": "fc", "out_features": 1}],
    })
    d = layer_demand(net, 0)
    assert d.macs == 1
    assert d.weight_bytes == 4


def test_cumulative_first_layer_equals_layer(alexnet):
    d = layer_demand(alexnet, 0)
    assert cumulative_demand(alexnet, 0) == (d.macs, d.weight_bytes)


def test_cumulative_monotone(alexnet):
    prev = (0, 0)
    for i in range(len(alexnet)):
        cur = cumulative_demand(alexnet, i)
        assert cur[0] >= prev[0] and cur[1] >= prev[1]
        prev = cur


def test_index_out_of_range(alexnet):
    with pytest.raises(IndexError):
        layer_demand(alexnet, len(alexnet))
    with pytest.raises(IndexError):
        cumulative_demand(alexnet, -1)
    assert demands(alexnet, -1) == []


def test_block_end(alexnet):
    assert alexnet.block_end(alexnet.index_of("conv5")) == alexnet.index_of("flatten")
    assert alexnet.block_end(alexnet.index_of("conv3")) == alexnet.index_of("relu3")
    assert alexnet.block_end(alexnet.index_of("fc8")) == alexnet.index_of("fc8")
    assert alexnet.block_end(-1) == -1
    assert alexnet.output_bytes(alexnet.block_end(alexnet.index_of("conv5"))) == 18_432


def test_index_of(alexnet):
    assert alexnet.index_of("input") == -1
    assert alexnet.index_of("fc6") == 16
    with pytest.raises(KeyError):
        alexnet.index_of("conv9")


def test_demand_table(alexnet):
    table = demand_table(alexnet)
    assert len(table) == len(alexnet) + 1
    assert table.iloc[0]["name"] == "input"
    assert table.iloc[0]["out_feature_bytes"] == 309_174
    assert table.iloc[-1]["cum_macs"] == 714_188_480
    assert table["cum_macs"].is_monotonic_increasing


def test_conv_stride_zero_is_shape_error(tmp_path):
    path = _write(tmp_path, {
        "name": "bad", "input_shape": [3, 8, 8],
        "layers": [{"name": "c1", "kind": "conv", "kernel": 3, "stride": 0, "out_channels": 4}],
    })
    with pytest.raises(ShapeError, match="c1"):
        load_network(path)


def test_kernel_larger_than_input(tmp_path):
    path = _write(tmp_path, {
        "name": "bad", "input_shape": [3, 4, 4],
        "layers": [{"name": "big", "kind": "conv", "kernel": 7, "out_channels": 4}],
    })
    with pytest.raises(ShapeError, match="big"):
        load_network(path)


@pytest.mark.parametrize("doc, match", [
    ({"name": "n", "input_shape": [3, 8, 8], "layers": []}, "no layers"),
    ({"name": "n", "input_shape": [3, 8, 8], "layers": [{"name": "x", "kind": "lstm"}]}, "x"),
    ({"name": "n", "input_shape": [3, 8, 8], "layers": [{"name": "c", "kind": "conv", "kernel": 3}]}, "c"),
    ({"name": "n", "layers": []}, "input_shape"),
    ({"name": "n", "input_shape": [3, 8, 8],
      "layers": [{"name": "r", "kind": "relu"}, {"name": "r", "kind": "relu"}]}, "duplicate"),
])
def test_parse_errors(tmp_path, doc, match):
    with pytest.raises(NetworkParseError, match=match):
        load_network(_write(tmp_path, doc))


def test_malformed_file(tmp_path):
    path = tmp_path / "broken.net"
    path.write_text('{"name": "x", "layers": [')
    with pytest.raises(NetworkParseError):
        load_network(path)


def test_comments_are_ignored(tmp_path):
    path = tmp_path / "c.net"
    path.write_text(
        "# leading comment\n"
        '{"name": "c", "input_shape": [1, 4, 4],\n'
        "  # inner comment\n"
        ' "layers": [{"name": "f", "kind": "flatten"}]}\n'
    )
    assert load_network(path).out_shapes == ((16, 1, 1),)


conv_layers = st.lists(
    st.tuples(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2), st.integers(1, 16)),
    min_size=1, max_size=5,
)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(16, 64), conv_layers)
def test_shape_propagation_matches_formula(cin, size, layers):
    """Accepted chains carry the textbook output shape and MAC count."""
    doc = {"name": "p", "input_shape": [cin, size, size], "layers": []}
    expected = []
    c, h = cin, size
    valid = True
    for i, (k, s, pad, cout) in enumerate(layers):
        doc["layers"].append({"name": f"c{i}", "kind": "conv", "kernel": k,
                              "stride": s, "pad": pad, "out_channels": cout})
        out = (h + 2 * pad - k) // s + 1
        if out < 1:
            valid = False
            break
        expected.append(((cout, out, out), k * k * c * cout * out * out))
        c, h = cout, out

    if not valid:
        with pytest.raises(ShapeError):
            parse_network(doc)
        return
    net = parse_network(doc)
    for i, (shape, macs) in enumerate(expected):
        assert net.out_shapes[i] == shape
        assert layer_demand(net, i).macs == macs
