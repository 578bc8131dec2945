import json

import numpy as np
import pytest

import seqsim.cli as cli
from seqsim.cli import main
from seqsim.data import load_jsonl
from seqsim.evaluation import load_report
from seqsim.model import load_checkpoint
from seqsim.training import load_train_log


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def data_path(tmp_path):
    path = tmp_path / "data.jsonl"
    assert run(
        "gen-data", "--out", path, "--classes", 4, "--per-class", 8,
        "--dim", 2, "--len-min", 6, "--len-max", 10, "--noise", 0.05, "--seed", 11,
    ) == 0
    return path


# --- gen-data ----------------------------------------------------------------


def test_gen_data_writes_deterministic_bytes_and_true_summary(tmp_path, capsys):
    args = ["gen-data", "--classes", 3, "--per-class", 5, "--dim", 2,
            "--len-min", 4, "--len-max", 9, "--seed", 7]
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(*args, "--out", p1) == 0
    summary = capsys.readouterr().out
    assert run(*args, "--out", p2) == 0
    assert p1.read_bytes() == p2.read_bytes()

    data = load_jsonl(p1)
    lengths = [s.length for s in data]
    assert f"wrote {len(data)} series" in summary
    assert f"{len(set(data.class_ids))} classes" in summary
    assert f"{min(lengths)}/{np.mean(lengths):.1f}/{max(lengths)}" in summary


@pytest.mark.parametrize("task,n_classes", [("reversal", 2), ("distractor", 3)])
def test_gen_data_other_tasks(tmp_path, task, n_classes):
    path = tmp_path / f"{task}.jsonl"
    assert run("gen-data", "--task", task, "--out", path, "--classes", 3,
               "--per-class", 4, "--dim", 2, "--seed", 3) == 0
    data = load_jsonl(path)
    assert len(set(data.class_ids)) == n_classes


def test_gen_data_config_merge_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "gen.json"
    cfg.write_text(json.dumps({"classes": 2, "per_class": 3, "dim": 1, "seed": 5}))
    out = tmp_path / "d.jsonl"
    assert run("gen-data", "--config", cfg, "--out", out, "--per-class", 4) == 0
    capsys.readouterr()
    data = load_jsonl(out)
    assert len(data) == 8  # 2 classes x flag-overridden 4 per class


def test_gen_data_rejects_unknown_config_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"clases": 2}))
    assert run("gen-data", "--config", cfg, "--out", tmp_path / "x.jsonl") == 2
    assert "unknown config keys: clases" in capsys.readouterr().err


def test_gen_data_requires_out(capsys):
    assert run("gen-data") == 2
    assert "--out is required" in capsys.readouterr().err


# --- train ---------------------------------------------------------------------


def test_train_writes_artifacts(tmp_path, data_path, capsys):
    out_dir = tmp_path / "run"
    code = run(
        "train", "--data", data_path, "--out-dir", out_dir, "--model", "srn-a",
        "--hidden", 6, "--steps", 40, "--eval-interval", 20, "--batch", 8,
        "--val-frac", 0.25, "--seed", 3,
    )
    assert code == 0
    printed = capsys.readouterr().out
    assert "trained srn-a" in printed and "test auc=" in printed
    params, window = load_checkpoint(out_dir / "checkpoint.json")
    assert window == 1 and params.hidden == 6
    assert params.pooling == "average" and params.recurrent
    log = load_train_log(out_dir / "train_log.csv")
    assert [r.step for r in log] == [20, 40]
    assert (out_dir / "train_curve.png").stat().st_size > 0
    report = load_report(out_dir / "report.json")
    assert report.metric == "auc" and 0.0 <= report.value <= 1.0


def test_train_model_flag_selects_variant(tmp_path, data_path):
    out_dir = tmp_path / "snl"
    assert run(
        "train", "--data", data_path, "--out-dir", out_dir, "--model", "sn-l",
        "--hidden", 4, "--steps", 10, "--eval-interval", 5, "--batch", 6,
        "--val-frac", 0.25, "--seed", 3,
    ) == 0
    params, _ = load_checkpoint(out_dir / "checkpoint.json")
    assert params.pooling == "last" and not params.recurrent
    assert np.all(params.A == 0.0)


def test_train_missing_data_fails_cleanly(tmp_path, capsys):
    assert run("train", "--out-dir", tmp_path / "x") == 2
    assert "--data is required" in capsys.readouterr().err
    assert run("train", "--data", tmp_path / "missing.jsonl",
               "--out-dir", tmp_path / "x") == 2


# --- eval ----------------------------------------------------------------------


def test_eval_dtw_is_byte_deterministic(tmp_path, data_path, capsys):
    args = ["eval", "--data", data_path, "--scorer", "dtw", "--metric", "auc",
            "--val-frac", 0.25, "--seed", 5]
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert run(*args, "--out", r1) == 0
    assert run(*args, "--out", r2) == 0
    assert r1.read_bytes() == r2.read_bytes()
    report = load_report(r1)
    assert report.scorer == "dtw" and report.n > 0


def test_eval_checkpoint_scorer_and_one_shot(tmp_path, data_path, capsys):
    out_dir = tmp_path / "run"
    assert run(
        "train", "--data", data_path, "--out-dir", out_dir, "--model", "srn-a",
        "--hidden", 4, "--steps", 20, "--eval-interval", 10, "--batch", 6,
        "--val-frac", 0.25, "--seed", 3,
    ) == 0
    out = tmp_path / "os.json"
    assert run(
        "eval", "--data", data_path, "--scorer", "checkpoint",
        "--checkpoint", out_dir / "checkpoint.json", "--metric", "one-shot",
        "--split", "none", "--seed", 5, "--out", out,
    ) == 0
    report = load_report(out)
    assert report.metric == "one-shot-accuracy"
    assert report.scorer == "srn-a"


def test_eval_fisher_grid_selects_a_state_count(tmp_path, data_path, capsys):
    out = tmp_path / "fk.json"
    assert run(
        "eval", "--data", data_path, "--scorer", "fisher-kernel",
        "--hmm-states", "2,3", "--hmm-iters", 3, "--val-frac", 0.25,
        "--seed", 5, "--out", out,
    ) == 0
    assert load_report(out).scorer == "fisher-kernel"


def test_eval_requires_checkpoint_path(tmp_path, data_path, capsys):
    assert run("eval", "--data", data_path, "--scorer", "checkpoint",
               "--out", tmp_path / "r.json") == 2
    assert "--checkpoint is required" in capsys.readouterr().err


# --- sweep ---------------------------------------------------------------------


def test_sweep_cross_product_rows_and_determinism(tmp_path, data_path, capsys):
    args = [
        "sweep", "--data", data_path, "--models", "srn-a,logistic,dtw",
        "--hidden", "4,6", "--reps", 2, "--steps", 10, "--eval-interval", 5,
        "--batch", 6, "--val-frac", 0.25, "--seed", 9,
    ]
    d1, d2 = tmp_path / "s1", tmp_path / "s2"
    assert run(*args, "--out-dir", d1) == 0
    assert run(*args, "--out-dir", d2, "--workers", 2) == 0
    assert (d1 / "sweep.csv").read_bytes() == (d2 / "sweep.csv").read_bytes()
    assert (d1 / "sweep.png").stat().st_size > 0

    lines = (d1 / "sweep.csv").read_text().splitlines()
    assert lines[0] == "# seqsim-sweep v1"
    assert lines[1] == "model,hidden,rep,split,metric,value,n,seed,status"
    rows = [line.split(",") for line in lines[2:]]
    # trainable models expand over hidden sizes, dtw does not
    assert [(r[0], r[1], r[2]) for r in rows] == [
        ("srn-a", "4", "0"), ("srn-a", "4", "1"),
        ("srn-a", "6", "0"), ("srn-a", "6", "1"),
        ("logistic", "4", "0"), ("logistic", "4", "1"),
        ("logistic", "6", "0"), ("logistic", "6", "1"),
        ("dtw", "", "0"), ("dtw", "", "1"),
    ]
    assert all(r[-1] == "ok" for r in rows)
    seeds = [r[7] for r in rows]
    assert len(set(seeds)) == len(seeds)  # every cell gets its own seed
    # per-cell artifacts for trainable models only
    assert (d1 / "srn-a-h4-r0" / "checkpoint.json").exists()
    assert (d1 / "logistic-h6-r1" / "checkpoint.json").exists()
    assert not (d1 / "dtw-r0").exists()


def test_sweep_marks_failed_cells_and_exits_nonzero(tmp_path, data_path, capsys, monkeypatch):
    def explode(*args, **kwargs):
        raise ValueError("synthetic failure")

    monkeypatch.setattr(cli, "baum_welch", explode)
    out_dir = tmp_path / "sf"
    code = run(
        "sweep", "--data", data_path, "--models", "dtw,fisher-kernel",
        "--hmm-states", "2", "--val-frac", 0.25, "--seed", 9, "--out-dir", out_dir,
    )
    assert code == 1
    captured = capsys.readouterr()
    assert "FAILED" in captured.err
    lines = (out_dir / "sweep.csv").read_text().splitlines()
    by_model = {line.split(",")[0]: line for line in lines[2:]}
    assert by_model["dtw"].endswith("ok")
    assert "error - ValueError: synthetic failure" in by_model["fisher-kernel"]
    # the failed cell's value and n are blanked out
    cells = by_model["fisher-kernel"].split(",")
    assert cells[5] == "" and cells[6] == "0"


def test_sweep_one_shot_rows(tmp_path, data_path, capsys):
    out_dir = tmp_path / "so"
    assert run(
        "sweep", "--data", data_path, "--models", "dtw", "--one-shot",
        "--val-frac", 0.25, "--seed", 2, "--out-dir", out_dir,
    ) == 0
    lines = (out_dir / "sweep.csv").read_text().splitlines()
    metrics = [line.split(",")[4] for line in lines[2:]]
    assert metrics == ["auc", "one-shot-accuracy"]


def test_sweep_rejects_unknown_models(tmp_path, data_path, capsys):
    assert run("sweep", "--data", data_path, "--out-dir", tmp_path / "x",
               "--models", "dtw,bogus") == 2
    assert "unknown sweep models" in capsys.readouterr().err


# --- export ----------------------------------------------------------------------


def test_export_matches_library_output(tmp_path, data_path):
    out_dir = tmp_path / "run"
    assert run(
        "train", "--data", data_path, "--out-dir", out_dir, "--model", "srn-l",
        "--hidden", 5, "--steps", 10, "--eval-interval", 5, "--batch", 6,
        "--val-frac", 0.25, "--seed", 4,
    ) == 0
    out = tmp_path / "emb.csv"
    assert run("export", "--checkpoint", out_dir / "checkpoint.json",
               "--data", data_path, "--out", out) == 0

    from seqsim.evaluation import export_embeddings

    params, _ = load_checkpoint(out_dir / "checkpoint.json")
    want = tmp_path / "want.csv"
    export_embeddings(params, load_jsonl(data_path), want)
    assert out.read_bytes() == want.read_bytes()


def test_export_rejects_logistic_checkpoints(tmp_path, data_path, capsys):
    out_dir = tmp_path / "logi"
    assert run(
        "train", "--data", data_path, "--out-dir", out_dir, "--model", "logistic",
        "--steps", 10, "--eval-interval", 5, "--batch", 6,
        "--val-frac", 0.25, "--seed", 4,
    ) == 0
    assert run("export", "--checkpoint", out_dir / "checkpoint.json",
               "--data", data_path, "--out", tmp_path / "e.csv") == 2
    assert "logistic" in capsys.readouterr().err
