import json

import numpy as np
import pytest

from linetrace import dataset as ds
from linetrace.cli import main
from linetrace.sim import EpisodeTrace


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Worlds, a learned threshold, and a small demo CSV shared by CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["make-worlds", "--out-dir", str(root / "worlds")]) == 0
    assert main([
        "survey", "--world", str(root / "worlds" / "oval.json"),
        "--out", str(root / "pixels.csv"), "--poses", "6", "--seed", "1",
    ]) == 0
    assert main([
        "train-threshold", "--pixels", str(root / "pixels.csv"),
        "--color", "blue", "--out-dir", str(root / "thr"),
    ]) == 0
    assert main([
        "collect", "--world", str(root / "worlds" / "oval.json"),
        "--frames", "140", "--rounds", "2", "--vary",
        "--threshold-dir", str(root / "thr"),
        "--out", str(root / "demos.csv"), "--seed", "5",
    ]) == 0
    return root


def test_make_worlds_files_load(workspace):
    from linetrace.sim import TrackWorld

    names = ["oval", "s_curve", "test_loop", "test_loop_occluded"]
    for name in names:
        world = TrackWorld.load(workspace / "worlds" / f"{name}.json")
        assert len(world.waypoints) >= 3
    occ = TrackWorld.load(workspace / "worlds" / "test_loop_occluded.json")
    assert len(occ.occluders) == 2


def test_survey_csv_schema(workspace):
    lines = (workspace / "pixels.csv").read_text().splitlines()
    assert lines[0] == "h,s,v,label"
    assert all(line.rsplit(",", 1)[1] in ("line", "non-line") for line in lines[1:])


def test_threshold_file_written(workspace):
    doc = json.loads((workspace / "thr" / "blue.threshold.json").read_text())
    assert doc["name"] == "blue"
    assert doc["clauses"]


def test_collect_row_count_and_validity(workspace):
    demo = ds.read_csv(workspace / "demos.csv")
    assert len(demo) == 280  # 2 rounds x 140 frames
    norms = np.hypot(demo.velocities[:, 0], demo.velocities[:, 1])
    assert np.all((norms == 0) | (np.abs(norms - 1) <= 1e-9))


def test_train_eval_smoke(workspace):
    out = workspace / "run"
    assert main([
        "train", "--dataset", str(workspace / "demos.csv"), "--model", "mlp",
        "--epochs", "3", "--batch-size", "64", "--out-dir", str(out), "--seed", "3",
    ]) == 0
    assert (out / "mlp.ltnn").is_file()
    assert (out / "mlp_loss.png").is_file()
    history = (out / "mlp_history.csv").read_text().splitlines()
    assert history[0] == "epoch,train_loss,val_loss"
    assert len(history) == 4

    assert main([
        "eval", "--dataset", str(workspace / "demos.csv"),
        "--model", str(out / "mlp.ltnn"), "--out", str(out / "eval.json"),
    ]) == 0
    doc = json.loads((out / "eval.json").read_text())
    assert set(doc) == {"n", "loss", "accuracy", "mae", "rmse"}
    assert doc["n"] == 280


def test_model_reloads_bit_exactly(workspace):
    from linetrace.nn_core import Network

    path = workspace / "run" / "mlp.ltnn"
    net1, net2 = Network.load(path), Network.load(path)
    x = np.zeros((2, 1, 1024))
    assert np.array_equal(net1.predict(x), net2.predict(x))


def test_cnn_param_count_logged(workspace, capsys):
    out = workspace / "cnn_run"
    code = main([
        "train", "--dataset", str(workspace / "demos.csv"), "--model", "cnn1d",
        "--epochs", "1", "--batch-size", "64", "--no-augment",
        "--out-dir", str(out), "--seed", "3",
    ])
    assert code == 0
    err = capsys.readouterr().err
    assert "265519" in err.replace(",", "")


def test_simulate_and_compare_model_vs_itself(workspace):
    out = workspace / "run"
    assert main([
        "simulate", "--world", str(workspace / "worlds" / "oval.json"),
        "--driver", "model", "--model", str(out / "mlp.ltnn"),
        "--threshold-dir", str(workspace / "thr"),
        "--frames", "40", "--out", str(out / "trace.csv"), "--seed", "0",
    ]) == 0
    trace = EpisodeTrace.from_csv(out / "trace.csv")
    assert len(trace) >= 1

    # compare against its own trace: MAE must be exactly zero
    assert main([
        "compare", "--world", str(workspace / "worlds" / "oval.json"),
        "--model", str(out / "mlp.ltnn"), "--reference", str(out / "trace.csv"),
        "--frames", str(len(trace)), "--threshold-dir", str(workspace / "thr"),
        "--out-dir", str(out / "cmp"), "--seed", "0",
    ]) == 0
    rows = (out / "cmp" / "compare_report.csv").read_text().splitlines()
    assert rows[0] == "model,lighting,linear_mae,angular_mae"
    _, _, lin, ang = rows[1].split(",")
    assert float(lin) == 0.0 and float(ang) == 0.0
    assert (out / "cmp" / "compare_linear_l1.png").is_file()
    assert (out / "cmp" / "compare_angular_l1.png").is_file()


def test_compare_frame_mismatch_fails(workspace):
    out = workspace / "run"
    code = main([
        "compare", "--world", str(workspace / "worlds" / "oval.json"),
        "--model", str(out / "mlp.ltnn"), "--reference", str(out / "trace.csv"),
        "--frames", "9999", "--threshold-dir", str(workspace / "thr"),
        "--out-dir", str(out / "cmp2"), "--seed", "0",
    ])
    assert code == 1


def test_heatmap_outputs(workspace):
    out = workspace / "heat"
    assert main([
        "heatmap", "--dataset", str(workspace / "demos.csv"),
        "--out-dir", str(out), "--bins", "21",
    ]) == 0
    for comp in ("linear", "angular"):
        assert (out / f"heatmap_{comp}.png").is_file()
        grid = np.loadtxt(out / f"heatmap_{comp}.csv", delimiter=",", dtype=int)
        assert grid.sum() == 280


def test_missing_input_file_nonzero_exit(workspace, capsys):
    code = main([
        "train-threshold", "--pixels", str(workspace / "nope.csv"),
        "--color", "x", "--out-dir", str(workspace),
    ])
    assert code == 1
    assert "nope.csv" in capsys.readouterr().err


def test_single_class_pixels_nonzero_exit(workspace, tmp_path):
    bad = tmp_path / "single.csv"
    bad.write_text("h,s,v,label\n0.5,0.5,0.5,line\n0.6,0.5,0.5,line\n")
    code = main([
        "train-threshold", "--pixels", str(bad), "--color", "x",
        "--out-dir", str(tmp_path),
    ])
    assert code == 1


def test_collect_without_threshold_fails(workspace, capsys):
    code = main([
        "collect", "--world", str(workspace / "worlds" / "s_curve.json"),
        "--frames", "10", "--threshold-dir", str(workspace / "thr"),
        "--out", str(workspace / "x.csv"),
    ])
    assert code == 1
    assert "threshold" in capsys.readouterr().err.lower()
