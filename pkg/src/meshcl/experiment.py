"""Label-fraction experiment: does contrastive pretraining help when labels are scarce?

For every fraction f and repeat r the harness draws one labeled subset D_l of
the training meshes and fine-tunes two models on exactly that subset: one from
random initialization ("no_ssl") and one wrapping a pretrained encoder
("ssl").  Pretraining sees all training meshes, unlabeled, and is shared
across fractions within a repeat.  Accuracy is measured on an evaluation
split that is excluded from pretraining and fine-tuning alike.

Everything derives from ``spec.seed``: dataset splits, subset draws, and
training seeds — so a run is reproducible end to end, and the emitted CSVs
are byte-stable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from .augment import AugmentationPolicy
from .data import split_eval
from .features import extract_features, fit_channel_stats
from .model import ArchitectureSpec, init_params
from .rng import mix_seed
from .training import (
    Dataset,
    MetricsRecord,
    PretrainResult,
    TrainConfig,
    finetune,
    pretrain,
    transfer_and_assemble_unet,
)

_TAG_PRETRAIN = 0x21
_TAG_POLICY = 0x22
_TAG_SUBSET = 0x23
_TAG_FINETUNE = 0x24

ARM_SCRATCH = "no_ssl"
ARM_SSL = "ssl"


@dataclass(frozen=True)
class ExperimentSpec:
    """What to sweep and how to train each cell.

    ``fractions`` are percentages of the training meshes that get labels.
    Both arms run by default; restrict ``arms`` to isolate one.
    """

    fractions: tuple[float, ...] = (5, 10, 25, 33, 50, 67, 75, 100)
    repeats: int = 3
    arms: tuple[str, ...] = (ARM_SCRATCH, ARM_SSL)
    eval_fraction: float = 0.2
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    policy: AugmentationPolicy = field(default_factory=AugmentationPolicy)
    arch: ArchitectureSpec = field(default_factory=ArchitectureSpec)

    def __post_init__(self):
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        object.__setattr__(self, "arms", tuple(self.arms))
        if not self.fractions:
            raise ValueError("need at least one fraction")
        for f in self.fractions:
            if not 0.0 < f <= 100.0:
                raise ValueError(f"fraction {f} must lie in (0, 100]")
        if len(set(self.fractions)) != len(self.fractions):
            raise ValueError("fractions must be distinct")
        if self.repeats < 1:
            raise ValueError("repeats must be positive")
        bad = set(self.arms) - {ARM_SCRATCH, ARM_SSL}
        if bad or not self.arms:
            raise ValueError(f"arms must be drawn from ({ARM_SCRATCH!r}, {ARM_SSL!r})")


def desk_spec(seed: int = 0) -> ExperimentSpec:
    """Desk-scale defaults: small enough for a laptop CPU run.

    Besides shrinking batch sizes and epoch counts, the desk setting sharpens
    the contrastive temperature, raises the learning rate, and gentles the
    augmentations: at tens of meshes and tens of epochs the full-scale knobs
    leave the contrastive loss sitting on its ln(2M - 1) plateau, while these
    make it visibly decrease and stabilize.  Fine-tuning keeps the full 30
    epochs — with few labeled meshes both arms need them to converge.
    """
    return ExperimentSpec(
        fractions=(25, 50, 100),
        repeats=3,
        seed=seed,
        train=TrainConfig(m1=8, m2=4, n1=20, n2=30, tau=0.1, lr=2e-3, seed=seed),
        policy=AugmentationPolicy(
            scale_sigma=0.05,
            shift_probability=0.1,
            flip_probability=0.02,
            jitter=False,
            seed=seed,
        ),
    )


@dataclass(frozen=True)
class CellResult:
    """One (arm, fraction, repeat) fine-tuning run."""

    arm: str
    fraction: float
    repeat: int
    dl_indices: tuple[int, ...]
    final_eval_accuracy: float
    metrics: tuple[MetricsRecord, ...]


@dataclass(frozen=True)
class ResultsRow:
    """Per-fraction summary; the ssl-minus-scratch difference is always
    recomputed from the stored means, never stored."""

    fraction: float
    acc_no_ssl: float | None
    acc_ssl: float | None
    per_seed_no_ssl: tuple[float, ...]
    per_seed_ssl: tuple[float, ...]

    @property
    def diff(self) -> float | None:
        if self.acc_no_ssl is None or self.acc_ssl is None:
            return None
        return self.acc_ssl - self.acc_no_ssl


@dataclass(frozen=True)
class ResultsTable:
    rows: tuple[ResultsRow, ...]
    cells: tuple[CellResult, ...]
    pretrain_curves: tuple[tuple[int, tuple[float, ...]], ...]  # (repeat, losses)


def run_label_fraction_experiment(dataset: Dataset, spec: ExperimentSpec) -> ResultsTable:
    """Run the full sweep; see the module docstring for the design.

    The dataset must be fully labeled (every mesh needs a label so any subset
    can be drawn and the eval split can be scored).
    """
    if len(dataset.labeled_indices) != len(dataset):
        raise ValueError("label-fraction experiment needs a fully labeled dataset")
    num_classes = dataset.num_classes
    train_ds, eval_ds = split_eval(dataset, spec.eval_fraction, spec.seed)
    n_u = len(train_ds)
    unlabeled = Dataset(train_ds.meshes)
    stats = fit_channel_stats(
        np.vstack([extract_features(m) for m in train_ds.meshes])
    )

    pretrains: dict[int, PretrainResult] = {}
    if ARM_SSL in spec.arms:
        for r in range(spec.repeats):
            cfg = replace(spec.train, seed=mix_seed(spec.seed, _TAG_PRETRAIN, r))
            policy = replace(spec.policy, seed=mix_seed(spec.seed, _TAG_POLICY, r))
            pretrains[r] = pretrain(unlabeled, cfg, policy, spec.arch)

    cells: list[CellResult] = []
    for f in spec.fractions:
        k = round(f * n_u / 100.0)
        if k < 1:
            raise ValueError(
                f"fraction {f}% of {n_u} training meshes rounds to an empty subset"
            )
        for r in range(spec.repeats):
            subset_rng = np.random.default_rng(
                mix_seed(spec.seed, _TAG_SUBSET, int(round(f * 1000)), r)
            )
            dl_idx = tuple(
                sorted(int(i) for i in subset_rng.choice(n_u, size=k, replace=False))
            )
            d_l = train_ds.restrict_labels(dl_idx)
            ft_seed = mix_seed(spec.seed, _TAG_FINETUNE, int(round(f * 1000)), r)
            cfg = replace(spec.train, seed=ft_seed)
            for arm in spec.arms:
                if arm == ARM_SCRATCH:
                    arch = replace(spec.arch, num_classes=num_classes)
                    params = init_params(arch, ft_seed, kind="unet")
                else:
                    arch, params = transfer_and_assemble_unet(
                        pretrains[r].params, spec.arch, num_classes, ft_seed
                    )
                _, metrics = finetune(
                    d_l, stats, arch, params, cfg, eval_dataset=eval_ds
                )
                cells.append(
                    CellResult(
                        arm=arm,
                        fraction=f,
                        repeat=r,
                        dl_indices=dl_idx,
                        final_eval_accuracy=float(metrics[-1].eval_accuracy),
                        metrics=tuple(metrics),
                    )
                )

    rows = []
    for f in spec.fractions:
        per_arm: dict[str, list[float]] = {ARM_SCRATCH: [], ARM_SSL: []}
        for c in cells:
            if c.fraction == f:
                per_arm[c.arm].append(c.final_eval_accuracy)
        rows.append(
            ResultsRow(
                fraction=f,
                acc_no_ssl=(
                    float(np.mean(per_arm[ARM_SCRATCH]))
                    if per_arm[ARM_SCRATCH]
                    else None
                ),
                acc_ssl=(
                    float(np.mean(per_arm[ARM_SSL])) if per_arm[ARM_SSL] else None
                ),
                per_seed_no_ssl=tuple(per_arm[ARM_SCRATCH]),
                per_seed_ssl=tuple(per_arm[ARM_SSL]),
            )
        )

    curves = tuple(
        (r, tuple(pretrains[r].loss_history)) for r in sorted(pretrains)
    )
    return ResultsTable(tuple(rows), tuple(cells), curves)


# ---------------------------------------------------------------------------
# Delimited output


def _fmt_fraction(f: float) -> str:
    return str(int(f)) if float(f).is_integer() else repr(float(f))


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def emit_results(table: ResultsTable, out_dir) -> list[str]:
    """Write ``results.csv``, per-cell convergence CSVs, and the pretraining
    loss curve under ``out_dir``.  Returns the written paths.

    Floats are written with ``repr`` (shortest exact round-trip), so parsing a
    column back gives bit-identical values and repeated emissions of the same
    table are byte-identical.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    path = os.path.join(out_dir, "results.csv")
    lines = ["fraction,acc_no_ssl,acc_ssl,diff,seed_values_no_ssl,seed_values_ssl"]
    for row in table.rows:
        lines.append(
            ",".join(
                [
                    _fmt_fraction(row.fraction),
                    _fmt(row.acc_no_ssl),
                    _fmt(row.acc_ssl),
                    _fmt(row.diff),
                    ";".join(repr(v) for v in row.per_seed_no_ssl),
                    ";".join(repr(v) for v in row.per_seed_ssl),
                ]
            )
        )
    _write_lines(path, lines)
    written.append(path)

    arms = sorted({c.arm for c in table.cells})
    fractions = sorted({c.fraction for c in table.cells})
    for arm in arms:
        for f in fractions:
            group = [c for c in table.cells if c.arm == arm and c.fraction == f]
            if not group:
                continue
            path = os.path.join(
                out_dir, f"convergence_{arm}_{_fmt_fraction(f)}.csv"
            )
            lines = ["epoch,repeat,loss,train_accuracy,eval_accuracy"]
            for c in sorted(group, key=lambda c: c.repeat):
                for m in c.metrics:
                    lines.append(
                        f"{m.epoch},{c.repeat},{_fmt(m.loss)},"
                        f"{_fmt(m.accuracy)},{_fmt(m.eval_accuracy)}"
                    )
            _write_lines(path, lines)
            written.append(path)

    if table.pretrain_curves:
        path = os.path.join(out_dir, "pretrain_loss.csv")
        lines = ["epoch,repeat,loss"]
        for r, losses in table.pretrain_curves:
            for epoch, loss in enumerate(losses):
                lines.append(f"{epoch},{r},{_fmt(loss)}")
        _write_lines(path, lines)
        written.append(path)

    return written


def _write_lines(path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
