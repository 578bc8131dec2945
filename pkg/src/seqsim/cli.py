"""Command-line entry point.

Subcommands: gen-data (synthetic corpora), train (one model + artifacts),
sweep (models x hidden sizes x repetitions, optionally in parallel), eval
(score any model on a split), export (embedding CSV from a checkpoint).

Options resolve as: command-line flag > --config JSON > built-in default.
Unknown config keys are rejected before any work starts. All delimited/JSON
outputs are byte-stable for a fixed invocation; every random choice flows
from --seed through per-purpose derived streams, so sub-experiments are
independently reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .data import (
    Dataset,
    SplitSpec,
    build_pairs,
    load_jsonl,
    make_split,
    save_jsonl,
    synth_distractor,
    synth_generate,
    synth_reversal,
    window_dataset,
    zscore_dataset,
)
from .evaluation import (
    Scorer,
    build_fisher_references,
    dtw_scorer,
    evaluate_pairs,
    export_embeddings,
    fisher_kernel_scorer,
    fisher_vector_scorer,
    logistic_scorer,
    one_shot,
    save_report,
    srn_scorer,
)
from .fisher import baum_welch, fisher_score, score_scales
from .model import LogisticParams, SrnParams, load_checkpoint, save_checkpoint
from .numerics import derive_seed
from .plots import plot_sweep, plot_train_curve
from .training import TrainConfig, save_train_log, train, train_logistic

_SRN_KINDS = {
    "srn-a": ("average", True),
    "srn-l": ("last", True),
    "sn-a": ("average", False),
    "sn-l": ("last", False),
}
_TRAINABLE = (*_SRN_KINDS, "logistic")
_BASELINES = ("dtw", "fisher-kernel", "fisher-vector")
_SWEEP_MODELS = _TRAINABLE + _BASELINES

_GEN_DEFAULTS = {
    "task": "classes",
    "out": None,
    "classes": 5,
    "per_class": 20,
    "dim": 3,
    "len_min": 20,
    "len_max": 30,
    "noise": 0.05,
    "distractors": 6,
    "label_scale": 0.3,
    "distractor_scale": 1.5,
    "seed": 0,
}

_SHARED_DEFAULTS = {
    "data": None,
    "window": 1,
    "zscore": False,
    "split": "within-domain",
    "train_frac": 0.7,
    "val_frac": 0.1,
    "train_classes": None,
    "test_classes": None,
    "seed": 0,
}

_FIT_DEFAULTS = {
    "batch": 50,
    "lr": 1e-3,
    "dropout": 0.0,
    "clip": 5.0,
    "rms_decay": 0.9,
    "epsilon": 1e-6,
    "lr_decay": 0.4,
    "patience": 3,
    "eval_interval": 100,
    "eval_pairs": 2000,
    "steps": 2000,
}

_BASELINE_DEFAULTS = {
    "local": "euclidean",
    "normalize": False,
    "hmm_states": "2,4,8,16",
    "hmm_iters": 10,
    "fisher_scale": False,
    "max_refs": 200,
}

_TRAIN_DEFAULTS = {
    **_SHARED_DEFAULTS,
    **_FIT_DEFAULTS,
    "out_dir": None,
    "model": "srn-a",
    "hidden": 32,
}

_EVAL_DEFAULTS = {
    **_SHARED_DEFAULTS,
    **_BASELINE_DEFAULTS,
    "out": None,
    "scorer": "dtw",
    "metric": "auc",
    "max_pairs": 2000,
}

_SWEEP_DEFAULTS = {
    **_SHARED_DEFAULTS,
    **_FIT_DEFAULTS,
    **_BASELINE_DEFAULTS,
    "out_dir": None,
    "models": "srn-a,srn-l,sn-a,logistic,dtw",
    "hidden": "32",
    "reps": 1,
    "workers": 1,
    "one_shot": False,
    "max_pairs": 2000,
}


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults, optional config JSON, and explicit flags (flags win)."""
    opts = dict(defaults)
    cfg_path = getattr(args, "config", None)
    if cfg_path is not None:
        cfg = json.loads(Path(cfg_path).read_text())
        if not isinstance(cfg, dict):
            raise ValueError(f"{cfg_path}: config must be a JSON object")
        unknown = sorted(set(cfg) - set(defaults))
        if unknown:
            raise ValueError(f"{cfg_path}: unknown config keys: {', '.join(unknown)}")
        opts.update(cfg)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def _require(opts: dict, key: str, flag: str) -> None:
    if opts.get(key) in (None, ""):
        raise ValueError(f"{flag} is required (flag or config key {key!r})")


def _parse_class_set(text) -> set[int]:
    if isinstance(text, (list, set, tuple)):
        return {int(c) for c in text}
    try:
        return {int(part) for part in str(text).split(",") if part.strip() != ""}
    except ValueError:
        raise ValueError(f"class list must be comma-separated integers, got {text!r}")


def _parse_int_list(value, what: str) -> list[int]:
    if isinstance(value, int):
        return [value]
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        out = [int(part) for part in str(value).split(",") if part.strip() != ""]
    except ValueError:
        raise ValueError(f"{what} must be comma-separated integers, got {value!r}")
    if not out:
        raise ValueError(f"{what} must not be empty")
    return out


def _load_and_prepare(path: str, window: int, zscore: bool) -> Dataset:
    data = load_jsonl(path)
    if window > 1:
        data = window_dataset(data, window)
    if zscore:
        data = zscore_dataset(data)
    return data


def _split_three(data: Dataset, opts: dict):
    """(train, val, test) per the resolved split options; mode "none" trains
    and evaluates on the full dataset with no validation."""
    mode = opts["split"]
    seed = opts.get("split_seed", opts["seed"])
    if mode == "none":
        return data, None, data
    if mode == "out-of-domain":
        if opts["train_classes"] is None or opts["test_classes"] is None:
            raise ValueError("out-of-domain split needs --train-classes and --test-classes")
        spec = SplitSpec(
            mode=mode,
            seed=seed,
            validation_fraction=opts["val_frac"],
            train_classes=_parse_class_set(opts["train_classes"]),
            test_classes=_parse_class_set(opts["test_classes"]),
        )
    else:
        spec = SplitSpec(
            mode=mode,
            seed=seed,
            train_fraction=opts["train_frac"],
            validation_fraction=opts["val_frac"],
        )
    train_set, val_set, test_set = make_split(data, spec)
    return train_set, (val_set if len(val_set) else None), test_set


def _train_config(opts: dict, model: str, hidden: int) -> TrainConfig:
    pooling, recurrent = _SRN_KINDS.get(model, ("average", True))
    return TrainConfig(
        hidden=hidden,
        pooling=pooling,
        recurrent=recurrent,
        batch=opts["batch"],
        lr=opts["lr"],
        rms_decay=opts["rms_decay"],
        epsilon=opts["epsilon"],
        clip_lo=-opts["clip"],
        clip_hi=opts["clip"],
        dropout=opts["dropout"],
        lr_decay=opts["lr_decay"],
        patience=opts["patience"],
        eval_interval=opts["eval_interval"],
        eval_pairs=opts["eval_pairs"],
        max_steps=opts["steps"],
        seed=derive_seed(opts["seed"], f"train:{model}"),
    )


def _fit_model(model: str, train_set, val_set, opts: dict, hidden: int):
    config = _train_config(opts, model, hidden)
    if model == "logistic":
        return train_logistic(train_set, config, val_set)
    if model in _SRN_KINDS:
        return train(train_set, config, val_set)
    raise ValueError(f"model {model!r} is not trainable")


def _scorer_for_params(params) -> Scorer:
    if isinstance(params, SrnParams):
        return srn_scorer(params)
    if isinstance(params, LogisticParams):
        return logistic_scorer(params)
    raise ValueError(f"no scorer for {type(params).__name__}")


def _eval_seed(opts: dict) -> int:
    return opts.get("eval_seed", derive_seed(opts["seed"], "eval"))


def _make_fisher_scorer(name: str, hmm, train_set: Dataset, opts: dict) -> Scorer:
    scale = None
    if opts["fisher_scale"]:
        scale = score_scales([fisher_score(hmm, s) for s in train_set])
    if name == "fisher-kernel":
        return fisher_kernel_scorer(hmm, scale=scale)
    refs = build_fisher_references(
        hmm,
        train_set,
        build_pairs(train_set),
        seed=opts["seed"],
        max_refs=opts["max_refs"],
        scale=scale,
    )
    return fisher_vector_scorer(hmm, refs, scale=scale)


def _baseline_scorer(
    name: str, train_set: Dataset, val_set: Dataset | None, opts: dict
) -> Scorer:
    if name == "dtw":
        return dtw_scorer(local=opts["local"], normalize=opts["normalize"])
    if name not in ("fisher-kernel", "fisher-vector"):
        raise ValueError(f"unknown baseline {name!r}")

    grid = _parse_int_list(opts["hmm_states"], "--hmm-states")
    can_select = (
        len(grid) > 1
        and val_set is not None
        and len(val_set) >= 2
        and len(set(val_set.class_ids)) >= 2
    )
    if not can_select:
        grid = grid[:1]

    best_scorer = None
    best_auc = None
    for k in grid:
        hmm = baum_welch(
            train_set, k, iters=opts["hmm_iters"], seed=derive_seed(opts["seed"], f"hmm:{k}")
        )
        scorer = _make_fisher_scorer(name, hmm, train_set, opts)
        if len(grid) == 1:
            return scorer
        report = evaluate_pairs(
            scorer,
            val_set,
            build_pairs(val_set),
            seed=derive_seed(opts["seed"], "hmm-select"),
            max_pairs=min(opts["max_pairs"], 200),
            split="validation",
        )
        # Strict > keeps the smallest state count on ties.
        if best_auc is None or report.value > best_auc:
            best_auc = report.value
            best_scorer = scorer
    return best_scorer


def _test_report(scorer: Scorer, test_set: Dataset, opts: dict, max_pairs: int):
    pairs = build_pairs(test_set)
    return evaluate_pairs(
        scorer,
        test_set,
        pairs,
        seed=_eval_seed(opts),
        max_pairs=max_pairs,
        split=opts["split"],
    )


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_gen_data(args: argparse.Namespace) -> int:
    opts = _resolve(args, _GEN_DEFAULTS)
    _require(opts, "out", "--out")
    len_range = (opts["len_min"], opts["len_max"])
    task = opts["task"]
    if task == "classes":
        data = synth_generate(
            opts["classes"], opts["per_class"], opts["dim"], len_range,
            opts["noise"], opts["seed"],
        )
    elif task == "reversal":
        data = synth_reversal(
            opts["per_class"], opts["dim"], len_range, opts["noise"], opts["seed"]
        )
    elif task == "distractor":
        data = synth_distractor(
            opts["classes"], opts["per_class"], opts["dim"], len_range,
            opts["noise"], opts["seed"],
            n_distractors=opts["distractors"],
            label_scale=opts["label_scale"],
            distractor_scale=opts["distractor_scale"],
        )
    else:
        raise ValueError(f"unknown task {task!r}")
    out = Path(opts["out"])
    if str(out.parent) not in ("", "."):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_jsonl(data, out)
    lengths = [s.length for s in data]
    print(
        f"wrote {len(data)} series: {len(set(data.class_ids))} classes, dim {data.dim},"
        f" length min/mean/max {min(lengths)}/{sum(lengths) / len(lengths):.1f}/{max(lengths)}"
        f" -> {out}"
    )
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    opts = _resolve(args, _TRAIN_DEFAULTS)
    _require(opts, "data", "--data")
    _require(opts, "out_dir", "--out-dir")
    model = opts["model"]
    if model not in _TRAINABLE:
        raise ValueError(f"--model must be one of {_TRAINABLE}")
    data = _load_and_prepare(opts["data"], opts["window"], opts["zscore"])
    train_set, val_set, test_set = _split_three(data, opts)

    result = _fit_model(model, train_set, val_set, opts, opts["hidden"])

    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.params, opts["window"], out_dir / "checkpoint.json")
    save_train_log(result.log, out_dir / "train_log.csv")
    plot_train_curve(result.log, out_dir / "train_curve.png")
    if getattr(args, "verbose", False):
        for r in result.log:
            print(f"  step {r.step}: loss {r.loss:.4f} val_auc {r.val_auc:.4f} lr {r.lr:g}")
    print(
        f"trained {model}: steps={result.steps} stop={result.stop_reason}"
        f" best_val_auc={result.best_auc:.4f} (step {result.best_step})"
    )

    if test_set is not None and len(test_set) >= 2 and len(set(test_set.class_ids)) >= 2:
        report = _test_report(
            _scorer_for_params(result.params), test_set, opts, opts["eval_pairs"]
        )
        save_report(report, out_dir / "report.json")
        print(f"test auc={report.value:.4f} over {report.n} pairs -> report.json")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    opts = _resolve(args, _EVAL_DEFAULTS)
    _require(opts, "data", "--data")
    _require(opts, "out", "--out")
    scorer_name = opts["scorer"]

    if scorer_name == "checkpoint":
        if args.checkpoint is None:
            raise ValueError("--checkpoint is required when --scorer checkpoint")
        params, ckpt_window = load_checkpoint(args.checkpoint)
        data = _load_and_prepare(opts["data"], ckpt_window, opts["zscore"])
        train_set, _, test_set = _split_three(data, opts)
        scorer = _scorer_for_params(params)
    elif scorer_name in ("dtw", "fisher-kernel", "fisher-vector"):
        data = _load_and_prepare(opts["data"], opts["window"], opts["zscore"])
        train_set, val_set, test_set = _split_three(data, opts)
        scorer = _baseline_scorer(scorer_name, train_set, val_set, opts)
    else:
        raise ValueError(
            "--scorer must be checkpoint, dtw, fisher-kernel or fisher-vector"
        )

    if opts["metric"] == "auc":
        report = _test_report(scorer, test_set, opts, opts["max_pairs"])
    elif opts["metric"] == "one-shot":
        report = one_shot(scorer, test_set, seed=_eval_seed(opts), split=opts["split"])
    else:
        raise ValueError("--metric must be auc or one-shot")

    out = Path(opts["out"])
    if str(out.parent) not in ("", "."):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_report(report, out)
    print(
        f"scorer={report.scorer} split={report.split or 'none'}"
        f" {report.metric}={report.value:.4f} n={report.n} -> {out}"
    )
    return 0


def _sweep_task(payload: dict) -> list[dict]:
    """Train/evaluate one sweep cell; runs in a worker process. Failures are
    reported as marked rows so the rest of the sweep continues."""
    opts = payload["opts"]
    model = payload["model"]
    hidden = payload["hidden"]
    base = {
        "model": model,
        "hidden": hidden,
        "rep": payload["rep"],
        "split": opts["split"],
        "seed": opts["seed"],
    }
    try:
        data = _load_and_prepare(opts["data"], opts["window"], opts["zscore"])
        train_set, val_set, test_set = _split_three(data, opts)

        if model in _TRAINABLE:
            result = _fit_model(model, train_set, val_set, opts, hidden)
            cell_dir = Path(payload["out_dir"]) / payload["cell_name"]
            cell_dir.mkdir(parents=True, exist_ok=True)
            save_checkpoint(result.params, opts["window"], cell_dir / "checkpoint.json")
            save_train_log(result.log, cell_dir / "train_log.csv")
            plot_train_curve(result.log, cell_dir / "train_curve.png")
            scorer = _scorer_for_params(result.params)
        else:
            scorer = _baseline_scorer(model, train_set, val_set, opts)

        rows = []
        report = _test_report(scorer, test_set, opts, opts["max_pairs"])
        rows.append({**base, "metric": report.metric, "value": report.value,
                     "n": report.n, "status": "ok"})
        if opts["one_shot"]:
            osr = one_shot(scorer, test_set, seed=_eval_seed(opts), split=opts["split"])
            rows.append({**base, "metric": osr.metric, "value": osr.value,
                         "n": osr.n, "status": "ok"})
        return rows
    except Exception as exc:  # marked in the CSV; sweep carries on
        brief = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
        return [{**base, "metric": "auc", "value": None, "n": 0,
                 "status": f"error - {brief}"}]


def _cmd_sweep(args: argparse.Namespace) -> int:
    opts = _resolve(args, _SWEEP_DEFAULTS)
    _require(opts, "data", "--data")
    _require(opts, "out_dir", "--out-dir")
    models = [m.strip() for m in str(opts["models"]).split(",") if m.strip()]
    bad = [m for m in models if m not in _SWEEP_MODELS]
    if bad:
        raise ValueError(f"unknown sweep models: {bad}; choose from {_SWEEP_MODELS}")
    if not models:
        raise ValueError("no models requested")
    hiddens = _parse_int_list(opts["hidden"], "--hidden")
    reps = int(opts["reps"])
    if reps < 1:
        raise ValueError("--reps must be >= 1")

    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    # Fixed cross-product order; each cell gets its own derived seed while the
    # split and eval-pair subsets are shared per repetition for comparability.
    root_seed = opts["seed"]
    payloads = []
    for model in models:
        for hidden in hiddens if model in _TRAINABLE else [None]:
            for rep in range(reps):
                cell = f"{model}-h{hidden}-r{rep}" if hidden is not None else f"{model}-r{rep}"
                cell_opts = dict(opts)
                cell_opts["seed"] = derive_seed(root_seed, f"cell:{cell}")
                cell_opts["split_seed"] = derive_seed(root_seed, f"split:r{rep}")
                cell_opts["eval_seed"] = derive_seed(root_seed, f"eval:r{rep}")
                payloads.append(
                    {"model": model, "hidden": hidden, "rep": rep,
                     "cell_name": cell, "out_dir": str(out_dir), "opts": cell_opts}
                )

    if opts["workers"] > 1:
        with ProcessPoolExecutor(max_workers=opts["workers"]) as pool:
            row_lists = list(pool.map(_sweep_task, payloads))
    else:
        row_lists = [_sweep_task(p) for p in payloads]
    rows = [row for rows_ in row_lists for row in rows_]

    lines = ["# seqsim-sweep v1", "model,hidden,rep,split,metric,value,n,seed,status"]
    for r in rows:
        hidden = "" if r["hidden"] is None else r["hidden"]
        value = "" if r["value"] is None else repr(float(r["value"]))
        lines.append(
            f"{r['model']},{hidden},{r['rep']},{r['split']},{r['metric']},"
            f"{value},{r['n']},{r['seed']},{r['status']}"
        )
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")
    plot_sweep(rows, out_dir / "sweep.png")

    failed = 0
    for r in rows:
        if r["status"] == "ok":
            shape = f"h={r['hidden']} " if r["hidden"] is not None else ""
            print(f"{r['model']:14s} {shape}rep={r['rep']} {r['metric']}: {r['value']:.4f} (n={r['n']})")
        else:
            failed += 1
            print(f"{r['model']:14s} rep={r['rep']} FAILED ({r['status']})", file=sys.stderr)
    print(f"wrote {out_dir / 'sweep.csv'} and sweep.png")
    return 1 if failed else 0


def _cmd_export(args: argparse.Namespace) -> int:
    params, ckpt_window = load_checkpoint(args.checkpoint)
    if not isinstance(params, SrnParams):
        raise ValueError("export needs a recurrent/feedforward checkpoint, not logistic")
    data = _load_and_prepare(args.data, ckpt_window, bool(args.zscore))
    out = Path(args.out)
    if str(out.parent) not in ("", "."):
        out.parent.mkdir(parents=True, exist_ok=True)
    export_embeddings(params, data, out)
    print(f"wrote {len(data)} embeddings (hidden={params.hidden}) to {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_shared_split_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, help="stack this many consecutive frames")
    p.add_argument(
        "--zscore",
        action=argparse.BooleanOptionalAction,
        help="standardize each input dimension on the full dataset",
    )
    p.add_argument(
        "--split", choices=["within-domain", "out-of-domain", "none"], default=None
    )
    p.add_argument("--train-frac", type=float, help="within-domain train fraction")
    p.add_argument("--val-frac", type=float, help="validation fraction carved from train")
    p.add_argument("--train-classes", help="comma-separated class ids (out-of-domain)")
    p.add_argument("--test-classes", help="comma-separated class ids (out-of-domain)")
    p.add_argument("--seed", type=int, help="root seed; all randomness derives from it")
    p.add_argument("--config", help="JSON file with option defaults (flags override)")
    p.add_argument("--verbose", action="store_true", help="print per-evaluation detail")


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=int, help="training steps")
    p.add_argument("--batch", type=int, help="pairs per step (half similar)")
    p.add_argument("--lr", type=float, help="initial learning rate")
    p.add_argument("--dropout", type=float, help="dropout on pooled-path hidden states")
    p.add_argument("--clip", type=float, help="elementwise gradient clip bound")
    p.add_argument("--rms-decay", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--lr-decay", type=float, help="lr multiplier on validation plateau")
    p.add_argument("--patience", type=int, help="evaluations without improvement before decay")
    p.add_argument("--eval-interval", type=int, help="steps between validation evaluations")
    p.add_argument("--eval-pairs", type=int, help="max validation/test pairs to score")


def _add_baseline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--local", choices=["euclidean", "squared-euclidean"], default=None)
    p.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        help="divide alignment cost by path length",
    )
    p.add_argument(
        "--hmm-states",
        help="comma list of HMM state counts; more than one selects by validation AUC",
    )
    p.add_argument("--hmm-iters", type=int)
    p.add_argument(
        "--fisher-scale",
        action=argparse.BooleanOptionalAction,
        help="whiten score vectors by their per-coordinate RMS",
    )
    p.add_argument("--max-refs", type=int, help="reference pairs for fisher-vector")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqsim",
        description="Similarity learning over variable-length multivariate time series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic JSONL dataset")
    g.add_argument("--task", choices=["classes", "reversal", "distractor"], default=None)
    g.add_argument("--out")
    g.add_argument("--classes", type=int)
    g.add_argument("--per-class", type=int)
    g.add_argument("--dim", type=int)
    g.add_argument("--len-min", type=int)
    g.add_argument("--len-max", type=int)
    g.add_argument("--noise", type=float)
    g.add_argument("--distractors", type=int, help="shared distractor templates")
    g.add_argument("--label-scale", type=float)
    g.add_argument("--distractor-scale", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--config", help="JSON file with option defaults (flags override)")
    g.set_defaults(func=_cmd_gen_data)

    t = sub.add_parser("train", help="fit one model; write checkpoint, log, curve")
    t.add_argument("--data")
    t.add_argument("--out-dir")
    t.add_argument("--model", choices=list(_TRAINABLE), default=None)
    t.add_argument("--hidden", type=int, help="hidden units")
    _add_fit_flags(t)
    _add_shared_split_flags(t)
    t.set_defaults(func=_cmd_train)

    s = sub.add_parser("sweep", help="cross-product of models x hidden sizes x reps")
    s.add_argument("--data")
    s.add_argument("--out-dir")
    s.add_argument("--models", help=f"comma list from {_SWEEP_MODELS}")
    s.add_argument("--hidden", help="comma list of hidden sizes")
    s.add_argument("--reps", type=int, help="repetitions with distinct seeds/splits")
    s.add_argument("--workers", type=int, help="parallel worker processes")
    s.add_argument(
        "--one-shot",
        action=argparse.BooleanOptionalAction,
        help="also report one-shot accuracy per cell",
    )
    s.add_argument("--max-pairs", type=int, help="max test pairs to score")
    _add_fit_flags(s)
    _add_baseline_flags(s)
    _add_shared_split_flags(s)
    s.set_defaults(func=_cmd_sweep)

    e = sub.add_parser("eval", help="score a checkpoint or baseline; write report JSON")
    e.add_argument("--data")
    e.add_argument("--out")
    e.add_argument(
        "--scorer",
        choices=["checkpoint", "dtw", "fisher-kernel", "fisher-vector"],
        default=None,
    )
    e.add_argument("--checkpoint", help="model file (required for --scorer checkpoint)")
    e.add_argument("--metric", choices=["auc", "one-shot"], default=None)
    e.add_argument("--max-pairs", type=int)
    _add_baseline_flags(e)
    _add_shared_split_flags(e)
    e.set_defaults(func=_cmd_eval)

    x = sub.add_parser("export", help="write pooled embeddings for every series")
    x.add_argument("--checkpoint", required=True)
    x.add_argument("--data", required=True)
    x.add_argument("--out", required=True)
    x.add_argument("--zscore", action=argparse.BooleanOptionalAction)
    x.set_defaults(func=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
