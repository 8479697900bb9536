"""Figure rendering for experiment results (PNG files next to the CSVs)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiment import ARM_SCRATCH, ARM_SSL, ResultsTable, _fmt_fraction

_ARM_STYLE = {
    ARM_SCRATCH: dict(color="tab:gray", marker="o", label="from scratch"),
    ARM_SSL: dict(color="tab:blue", marker="*", label="with pretraining"),
}


def render_figures(table: ResultsTable, out_dir) -> list[str]:
    """Render accuracy-vs-fraction, convergence, and pretraining-loss figures.

    Returns the written file paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    fractions = [row.fraction for row in table.rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for arm, key in ((ARM_SCRATCH, "acc_no_ssl"), (ARM_SSL, "acc_ssl")):
        ys = [getattr(row, key) for row in table.rows]
        if all(y is None for y in ys):
            continue
        ax.plot(fractions, ys, **_ARM_STYLE[arm])
        for row, y in zip(table.rows, ys):
            seeds = row.per_seed_ssl if arm == ARM_SSL else row.per_seed_no_ssl
            ax.scatter(
                [row.fraction] * len(seeds),
                seeds,
                color=_ARM_STYLE[arm]["color"],
                alpha=0.3,
                s=12,
            )
    ax.set_xlabel("labeled fraction (%)")
    ax.set_ylabel("eval edge accuracy")
    ax.set_title("Accuracy vs. label budget")
    ax.grid(True, alpha=0.3)
    ax.legend()
    path = os.path.join(out_dir, "accuracy_vs_fraction.png")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    for f in sorted({c.fraction for c in table.cells}):
        fig, ax = plt.subplots(figsize=(6, 4))
        plotted = False
        for c in table.cells:
            if c.fraction != f:
                continue
            ys = [m.eval_accuracy for m in c.metrics]
            if any(y is None for y in ys):
                continue
            xs = [m.epoch for m in c.metrics]
            style = _ARM_STYLE[c.arm]
            ax.plot(
                xs,
                ys,
                color=style["color"],
                alpha=0.7,
                label=style["label"] if c.repeat == 0 else None,
            )
            plotted = True
        if not plotted:
            plt.close(fig)
            continue
        ax.set_xlabel("epoch")
        ax.set_ylabel("eval edge accuracy")
        ax.set_title(f"Fine-tuning convergence at {_fmt_fraction(f)}% labels")
        ax.grid(True, alpha=0.3)
        ax.legend()
        path = os.path.join(out_dir, f"convergence_{_fmt_fraction(f)}.png")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    if table.pretrain_curves:
        fig, ax = plt.subplots(figsize=(6, 4))
        for r, losses in table.pretrain_curves:
            ax.plot(range(len(losses)), losses, label=f"repeat {r}")
        ax.set_xlabel("epoch")
        ax.set_ylabel("contrastive loss")
        ax.set_title("Pretraining loss")
        ax.grid(True, alpha=0.3)
        ax.legend()
        path = os.path.join(out_dir, "pretrain_loss.png")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    return written
