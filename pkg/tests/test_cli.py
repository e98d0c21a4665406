import io
import json
import struct

import pandas as pd
import pytest

from cli import EXIT_ERROR, main


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _csv(text):
    return pd.read_csv(io.StringIO(text))


def test_demand(capsys):
    code, out, _ = _run(capsys, "demand")
    assert code == 0
    df = _csv(out)
    assert len(df) == 22
    assert df.loc[0, "name"] == "input"
    assert df.loc[0, "out_feature_bytes"] == 309_174
    assert df["cum_macs"].iloc[-1] == 714_188_480
    assert df.loc[0, "rate_bps"] == pytest.approx(74.2e6, rel=1e-3)
    assert df.loc[0, "rate_bps"] == 8 * 309_174 * 30

    _, out, _ = _run(capsys, "demand", "--fps", "10")
    assert _csv(out).loc[0, "rate_bps"] == 8 * 309_174 * 10


def test_demand_writes_file(capsys, tmp_path):
    out_path = tmp_path / "res" / "demand.csv"
    code, out, _ = _run(capsys, "demand", "--out", str(out_path))
    assert code == 0 and out == ""
    assert pd.read_csv(out_path)["name"].iloc[-1] == "fc8"


def test_empty_network_is_an_error(capsys, tmp_path):
    path = tmp_path / "empty.net"
    path.write_text(json.dumps({"name": "e", "input_shape": [3, 8, 8], "layers": []}))
    code, out, err = _run(capsys, "demand", "--net", str(path))
    assert code == EXIT_ERROR
    assert out == ""
    assert err.startswith("error:") and "no layers" in err
    assert len(err.strip().splitlines()) == 1


def test_lossless_file_roundtrip(capsys, tmp_path):
    tensor = tmp_path / "t.ftr"
    assert main(["gen", str(tensor), "--shape", "64,16,16", "--nonzero", "0.1", "--seed", "3"]) == 0
    code, out, _ = _run(capsys, "encode", str(tensor))
    assert code == 0
    row = _csv(out).iloc[0]
    assert row["mode"] == "lossless"
    assert row["raw_bytes"] == 64 * 16 * 16 * 2
    assert row["ratio"] > 3
    assert (tmp_path / "t.fse").stat().st_size == row["encoded_bytes"]

    assert main(["decode", str(tmp_path / "t.fse")]) == 0
    assert (tmp_path / "t.dec.ftr").read_bytes() == tensor.read_bytes()


@pytest.mark.parametrize("mode", [["--mode", "lossless"], ["--mode", "lossy", "--qf", "30"]])
def test_all_zero_tensor_compresses_hugely(capsys, tmp_path, mode):
    tensor = tmp_path / "z.ftr"
    main(["gen", str(tensor), "--nonzero", "0"])
    code, out, _ = _run(capsys, "encode", str(tensor), *mode)
    assert code == 0
    assert _csv(out).loc[0, "ratio"] > 10


def test_default_corpus_lossy_ratio(capsys, tmp_path):
    tensor = tmp_path / "f.ftr"
    main(["gen", str(tensor), "--seed", "1"])
    code, out, _ = _run(capsys, "encode", str(tensor), "--mode", "lossy", "--qf", "30",
                        "--out", str(tmp_path / "f30.fse"))
    assert code == 0
    row = _csv(out).iloc[0]
    assert row["qf"] == 30
    assert 5 <= row["ratio"] <= 50


def test_lossy_encode_needs_qf(capsys, tmp_path):
    tensor = tmp_path / "f.ftr"
    main(["gen", str(tensor), "--shape", "2,8,8"])
    code, _, err = _run(capsys, "encode", str(tensor), "--mode", "lossy")
    assert code == EXIT_ERROR
    assert "--qf" in err


def test_stats(capsys, tmp_path):
    tensor = tmp_path / "s.ftr"
    main(["gen", str(tensor), "--shape", "32,13,13", "--clustering", "2", "--seed", "4"])
    code, out, _ = _run(capsys, "stats", str(tensor), "--qf", "10", "90")
    assert code == 0
    df = _csv(out)
    assert df["mode"].tolist() == ["none", "lossless", "lossy", "lossy"]
    assert df.loc[0, "ratio"] == 1.0
    assert df.loc[2, "ratio"] > df.loc[3, "ratio"]
    assert df["nonzero_ratio"].nunique() == 1


def test_evaluate_selects_qf_from_curves(capsys):
    code, out, _ = _run(capsys, "evaluate", "--partition", "input", "--encoding", "lossy")
    assert code == 0
    row = _csv(out).iloc[0]
    assert (row["p"], row["layer"], row["qf"]) == (-1, "input", 50)
    assert row["bottleneck"] == "transmission"
    assert row["fps"] == pytest.approx(12.104, rel=1e-3)


def test_optimize_unencoded_picks_fc6(capsys):
    code, out, _ = _run(capsys, "optimize", "--encoding", "none")
    assert code == 0
    row = _csv(out).iloc[0]
    assert row["layer"] == "fc6"
    assert row["fps"] == pytest.approx(24.86, rel=1e-3)


def test_optimize_lossy_picks_conv5(capsys):
    code, out, _ = _run(capsys, "optimize", "--variant", "finetuned", "--objective", "energy")
    assert code == 0
    row = _csv(out).iloc[0]
    assert (row["layer"], row["encoding"], row["qf"]) == ("conv5", "lossy", 25)


def test_optimize_with_baselines(capsys):
    code, out, _ = _run(capsys, "optimize", "--baselines", "--variant", "finetuned")
    assert code == 0
    df = _csv(out)
    assert df["layer"].tolist() == ["input", "conv5", "fc8"]
    assert df.loc[1, "fps"] / df.loc[0, "fps"] == pytest.approx(16.5, rel=0.15)


def test_unencoded_baselines_keep_compressed_host_image(capsys):
    code, out, _ = _run(capsys, "optimize", "--baselines", "--encoding", "none")
    assert code == 0
    df = _csv(out)
    assert df["layer"].tolist() == ["input", "fc6", "fc8"]
    assert df["encoding"].tolist() == ["lossy", "none", "none"]
    assert df.loc[1, "fps"] / df.loc[0, "fps"] == pytest.approx(2.054, rel=1e-3)


def test_other_network_ignores_alexnet_curves(capsys, caplog, data_dir):
    net = str(data_dir / "vgg16.net")
    code, out, _ = _run(capsys, "optimize", "--net", net, "--baselines", "--encoding", "none",
                          "--objective", "energy")
    assert code == 0
    df = _csv(out)
    assert df["layer"].tolist() == ["input", "conv5_3", "fc8"]
    assert set(df["encoding"]) == {"none"}
    assert "Curves ignored" in caplog.text

    code, _, err = _run(capsys, "evaluate", "--net", net, "--partition", "conv5_3", "--encoding", "lossy")
    assert code == EXIT_ERROR
    assert err.strip().splitlines()[-1].startswith("error:")


def test_single_cell_sweep_matches_evaluate(capsys):
    _, swept, _ = _run(capsys, "sweep", "--bw-list", "2e6", "--power-list", "0.099", "--objective", "throughput")
    _, single, _ = _run(capsys, "evaluate", "--partition", "conv5", "--encoding", "lossy")
    cell, row = _csv(swept).iloc[0], _csv(single).iloc[0]
    assert cell["best_layer"] == row["layer"] == "conv5"
    assert cell["fps"] == pytest.approx(row["fps"], rel=1e-12)
    assert cell["J_per_frame"] == pytest.approx(row["J_per_frame"], rel=1e-12)


def test_sweep_over_channel_modes(capsys):
    code, out, _ = _run(capsys, "sweep")
    assert code == 0
    df = _csv(out)
    assert len(df) == 6
    best = df[df["objective"] == "throughput"]
    assert best["bandwidth_bps"].tolist() == [1e6, 2e6, 22e6]
    assert best["best_layer"].tolist() == ["conv5", "conv5", "conv2"]


def test_output_is_deterministic(capsys):
    runs = [_run(capsys, "sweep", "--bw-list", "1e6", "5e6", "--power-list", "0.1")[1] for _ in range(2)]
    assert runs[0] == runs[1]


@pytest.mark.parametrize("argv", [
    ["evaluate", "--partition", "conv9"],
    ["evaluate", "--partition", "99"],
    ["evaluate", "--partition", "relu1", "--encoding", "lossless"],
    ["optimize", "--max-loss", "-1"],
    ["optimize", "--mode", "7"],
    ["demand", "--net", "/nonexistent/x.net"],
    ["decode", "/nonexistent/x.fse"],
    ["demand", "--fps", "0"],
])
def test_errors_are_single_lines(capsys, argv):
    code, out, err = _run(capsys, *argv)
    assert code == EXIT_ERROR
    assert out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("error:")


def test_decode_rejects_oversized_header(capsys, tmp_path):
    tensor = tmp_path / "t.ftr"
    assert main(["gen", str(tensor), "--shape", "2,8,8", "--seed", "1"]) == 0
    assert main(["encode", str(tensor)]) == 0
    stream = tmp_path / "t.fse"
    data = bytearray(stream.read_bytes())
    struct.pack_into("<III", data, 6, 4000, 4000, 4000)
    stream.write_bytes(bytes(data))
    capsys.readouterr()

    code, out, err = _run(capsys, "decode", str(stream))
    assert code == EXIT_ERROR
    assert err.strip().splitlines() == [err.strip()] and "exceeds" in err


def test_bad_arguments_exit_through_argparse():
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "--objective", "latency"])
    assert exc.value.code == 2
