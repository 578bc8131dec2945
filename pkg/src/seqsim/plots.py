"""Headless matplotlib figures for training runs and model sweeps."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def plot_train_curve(log, path: str | Path) -> None:
    """Loss and validation AUC against training step, shared x axis."""
    steps = [r.step for r in log]
    losses = [r.loss for r in log]
    aucs = [r.val_auc for r in log]

    fig, ax_loss = plt.subplots(figsize=(7, 4))
    ax_loss.plot(steps, losses, color="tab:blue", label="train loss")
    ax_loss.set_xlabel("step")
    ax_loss.set_ylabel("mean pair loss", color="tab:blue")
    ax_loss.tick_params(axis="y", labelcolor="tab:blue")

    if any(a == a for a in aucs):  # at least one non-NaN
        ax_auc = ax_loss.twinx()
        ax_auc.plot(steps, aucs, color="tab:orange", label="validation AUC")
        ax_auc.set_ylabel("validation AUC", color="tab:orange")
        ax_auc.tick_params(axis="y", labelcolor="tab:orange")
        ax_auc.set_ylim(0.0, 1.05)

    ax_loss.set_title("training curve")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(rows: list[dict], path: str | Path) -> None:
    """Sweep summary: metric value per model, against hidden size when the
    sweep varied it (mean over repetitions), else as plain bars."""
    ok = [r for r in rows if r.get("status", "ok") == "ok" and r.get("value") is not None]
    metrics = sorted({r["metric"] for r in ok})
    n_panels = max(len(metrics), 1)
    fig, axes = plt.subplots(1, n_panels, figsize=(1 + 4.5 * n_panels, 4), squeeze=False)

    for ax, metric in zip(axes[0], metrics):
        chosen = [r for r in ok if r["metric"] == metric]
        hiddens = sorted({r["hidden"] for r in chosen if r.get("hidden") is not None})
        models = sorted({r["model"] for r in chosen})
        if len(hiddens) > 1:
            for model in models:
                xs, ys = [], []
                for h in hiddens:
                    vals = [
                        r["value"]
                        for r in chosen
                        if r["model"] == model and r.get("hidden") == h
                    ]
                    if vals:
                        xs.append(h)
                        ys.append(float(np.mean(vals)))
                if xs:
                    ax.plot(xs, ys, marker="o", label=model)
            flat = [
                (m, [r["value"] for r in chosen if r["model"] == m and r.get("hidden") is None])
                for m in models
            ]
            for model, vals in flat:
                if vals:
                    ax.axhline(float(np.mean(vals)), linestyle=":", label=model)
            ax.set_xlabel("hidden units")
            ax.legend(fontsize=8)
        else:
            means = [
                (m, float(np.mean([r["value"] for r in chosen if r["model"] == m])))
                for m in models
            ]
            ax.bar(range(len(means)), [v for _, v in means], color="tab:blue")
            ax.set_xticks(range(len(means)))
            ax.set_xticklabels([m for m, _ in means], rotation=30, ha="right")
        ax.set_ylim(0.0, 1.05)
        ax.set_ylabel(metric)
        ax.set_title(metric)
        ax.axhline(0.5, color="grey", linewidth=0.8, linestyle="--")
    if not metrics:
        axes[0][0].set_title("no successful cells")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
