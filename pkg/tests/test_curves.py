import json

import pytest
from hypothesis import given
import hypothesis.strategies as st

from curves import CurveEntry, load_curves, parse_curves
from errors import CurveError, InfeasibleError
from planner import select_qf


def _entry(layer="conv5", variant="original", samples=((10, 20.0, 2.0), (50, 8.0, 0.5)), **kw):
    raw = {"layer": layer, "variant": variant, "samples": [list(s) for s in samples]}
    raw.update(kw)
    return raw


def test_shipped_curves(curves):
    assert curves.network == "alexnet"
    assert set(curves.layers()) == {"input", "conv1", "conv2", "conv3", "conv4", "conv5", "fc6", "fc7"}
    assert curves.lossless_ratio("conv5") == 6.0
    assert not curves.has("relu5")


@pytest.mark.parametrize("layer, qf, ratio", [
    ("input", 50, 15.0),
    ("conv1", 70, 5.5),
    ("conv2", 70, 8.0),
    ("conv3", 50, 12.0),
    ("conv4", 40, 18.0),
    ("conv5", 30, 28.0),
    ("fc6", 50, 40.0),
    ("fc7", 50, 50.0),
])
def test_selected_qf_at_one_percent(curves, layer, qf, ratio):
    assert select_qf(curves, layer, 1.0) == (qf, ratio)


def test_conv5_anchor(curves):
    qf, ratio = select_qf(curves, "conv5", 1.0)
    assert 30 <= qf <= 35
    assert ratio == pytest.approx(28, rel=0.05)


def test_finetuned_conv5_compresses_harder(curves):
    qf, ratio = select_qf(curves, "conv5", 1.0, "finetuned")
    assert qf == 25
    assert ratio / select_qf(curves, "conv5", 1.0)[1] == pytest.approx(1.11, abs=0.01)


def test_variant_falls_back_to_original(curves):
    assert curves.entry("fc6", "finetuned") is curves.entry("fc6")
    with pytest.raises(CurveError):
        curves.entry("fc6", "pruned")


def test_unbounded_loss_picks_smallest_qf(curves):
    for layer in curves.layers():
        assert select_qf(curves, layer, float("inf"))[0] == curves.entry(layer).qfs[0]


def test_infeasible_bound(curves):
    entry = CurveEntry("x", "original", ((10, 9.0, 3.0), (90, 2.0, 0.5)))
    with pytest.raises(InfeasibleError):
        entry.select(0.1)
    with pytest.raises(ValueError):
        entry.select(-1)
    assert select_qf(curves, "conv5", 0.0) == (100, 5.2)


def test_missing_layer(curves):
    with pytest.raises(CurveError, match="relu1"):
        curves.entry("relu1")


def test_sample_lookup(curves):
    entry = curves.entry("conv5")
    assert entry.ratio_at(35) == 26.0
    assert entry.loss_at(35) == 0.8
    with pytest.raises(CurveError):
        entry.ratio_at(36)


@pytest.mark.parametrize("raw", [
    _entry(samples=()),
    _entry(samples=((0, 5.0, 1.0),)),
    _entry(samples=((50, 5.0, 1.0), (30, 8.0, 2.0))),
    _entry(samples=((30, 8.0, 0.5), (50, 5.0, 1.0))),
    _entry(samples=((30, -1.0, 0.5),)),
    _entry(samples=((30.5, 8.0, 0.5),)),
    _entry(samples=((30, 8.0),)),
    _entry(variant="pruned"),
    _entry(lossless_ratio=0),
    {"layer": "conv5"},
])
def test_bad_entries(raw):
    with pytest.raises(CurveError):
        parse_curves({"network": "n", "entries": [raw]})


def test_duplicate_entry():
    with pytest.raises(CurveError, match="duplicate"):
        parse_curves({"entries": [_entry(), _entry()]})


def test_finetuned_needs_original():
    with pytest.raises(CurveError, match="original"):
        parse_curves({"entries": [_entry(layer="fc6", variant="finetuned")]})


def test_load_errors(tmp_path):
    broken = tmp_path / "broken.curves"
    broken.write_text("{")
    with pytest.raises(CurveError):
        load_curves(broken)

    no_entries = tmp_path / "empty.curves"
    no_entries.write_text(json.dumps({"network": "n"}))
    with pytest.raises(CurveError, match="entries"):
        load_curves(no_entries)


monotone_curves = st.lists(
    st.tuples(st.floats(0.5, 100.0), st.floats(0.0, 5.0)), min_size=1, max_size=12,
).map(lambda pts: tuple(
    (qf, ratio, loss)
    for qf, (ratio, loss) in zip(
        range(5, 101, 8),
        zip(sorted((p[0] for p in pts), reverse=True), sorted((p[1] for p in pts), reverse=True)),
    )
))


@given(monotone_curves, st.floats(0.0, 6.0))
def test_select_is_smallest_qualifying_qf(samples, bound):
    entry = CurveEntry("l", "original", samples)
    qualifying = [qf for qf, _, loss in samples if loss <= bound]
    if not qualifying:
        with pytest.raises(InfeasibleError):
            entry.select(bound)
        return
    qf, ratio = entry.select(bound)
    assert qf == min(qualifying)
    assert ratio == entry.ratio_at(qf)
    # looser bounds never raise the chosen qf
    assert entry.select(bound + 1.0)[0] <= qf
