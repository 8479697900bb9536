"""Two-phase training: contrastive pretraining, then supervised fine-tuning.

Phase 1 (:func:`pretrain`) sees only raw meshes: every step augments each
batch mesh twice, encodes all views, and minimizes the NT-Xent loss between
paired views.  The projection head used during this phase is dropped at the
end; only encoder weights survive.

Phase 2 (:func:`finetune`) assembles a segmentation network around an encoder
(transferred or freshly initialized), and trains it end to end — encoder
included — with per-edge cross entropy on the labeled subset.

Labels live in a :class:`Dataset` side table keyed by mesh index, so the
unlabeled phase has no label access by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .augment import AugmentationPolicy, augment, jitter_policy
from .features import ChannelStats, extract_features, fit_channel_stats
from .losses import cross_entropy_edges_with_grad, edge_accuracy, nt_xent_with_grad
from .mesh import Mesh
from .model import (
    ArchitectureSpec,
    Params,
    init_params,
    pretrain_backward,
    pretrain_forward,
    unet_forward,
    unet_backward,
)
from .optim import AdamState, adam_step
from .rng import mix_seed

# namespaces for derived seeds, so distinct uses of one base seed never collide
_TAG_SHUFFLE = 0x51
_TAG_PAIRS = 0x52
_TAG_FINETUNE_SHUFFLE = 0x53


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for both phases.

    ``m1``/``n1`` are the pretraining batch size (meshes per step; each
    contributes two views) and epoch count; ``m2``/``n2`` the same for
    fine-tuning.  Pretraining drops a trailing incomplete batch (NT-Xent needs
    full batches of negatives); fine-tuning keeps it.
    """

    m1: int = 32
    m2: int = 12
    n1: int = 100
    n2: int = 30
    tau: float = 0.7
    lr: float = 2e-4
    groups: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.m1 < 2:
            raise ValueError("m1 must be at least 2 (NT-Xent needs negatives)")
        if self.m2 < 1 or self.n1 < 1 or self.n2 < 1:
            raise ValueError("batch sizes and epoch counts must be positive")
        if self.tau <= 0 or self.lr <= 0:
            raise ValueError("tau and lr must be positive")
        if self.groups < 1:
            raise ValueError("groups must be positive")


@dataclass(frozen=True)
class Dataset:
    """Meshes plus a label side table covering only the labeled subset.

    ``labels[i]`` is an (E_i,) integer array for mesh i; indices absent from
    the dict are unlabeled.  Code that consumes labels must go through
    :meth:`label_for`, which fails loudly for unlabeled meshes.
    """

    meshes: tuple[Mesh, ...]
    labels: dict[int, np.ndarray] = field(default_factory=dict)
    num_classes: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "meshes", tuple(self.meshes))
        clean: dict[int, np.ndarray] = {}
        top = -1
        for i, lab in self.labels.items():
            if not 0 <= i < len(self.meshes):
                raise ValueError(f"label index {i} out of range")
            lab = np.asarray(lab)
            if not np.issubdtype(lab.dtype, np.integer):
                raise ValueError(f"labels for mesh {i} must be integers")
            if lab.shape != (self.meshes[i].edge_count,):
                raise ValueError(
                    f"mesh {i} has {self.meshes[i].edge_count} edges but "
                    f"{lab.shape} labels"
                )
            if lab.size and lab.min() < 0:
                raise ValueError(f"labels for mesh {i} must be non-negative")
            top = max(top, int(lab.max()) if lab.size else -1)
            clean[int(i)] = lab.astype(np.int64)
        object.__setattr__(self, "labels", clean)
        if self.num_classes is None and clean:
            object.__setattr__(self, "num_classes", top + 1)
        if self.num_classes is not None and top >= self.num_classes:
            raise ValueError(
                f"label {top} exceeds the declared {self.num_classes} classes"
            )

    def __len__(self) -> int:
        return len(self.meshes)

    @property
    def labeled_indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.labels))

    def label_for(self, i: int) -> np.ndarray:
        if i not in self.labels:
            raise KeyError(f"mesh {i} is unlabeled")
        return self.labels[i]

    def restrict_labels(self, indices) -> "Dataset":
        """Same meshes, labels kept only for ``indices`` (all must be labeled)."""
        keep = {int(i) for i in indices}
        missing = keep - set(self.labels)
        if missing:
            raise ValueError(f"cannot restrict to unlabeled meshes: {sorted(missing)}")
        return Dataset(
            self.meshes,
            {i: self.labels[i] for i in sorted(keep)},
            self.num_classes,
        )


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int
    phase: str  # "pretrain" or "finetune"
    loss: float
    accuracy: float | None = None
    eval_accuracy: float | None = None


def metrics_to_csv(records) -> str:
    """Render metrics as CSV with columns epoch, phase, loss, accuracy."""
    lines = ["epoch,phase,loss,accuracy"]
    for r in records:
        acc = "" if r.accuracy is None else repr(float(r.accuracy))
        lines.append(f"{r.epoch},{r.phase},{repr(float(r.loss))},{acc}")
    return "\n".join(lines) + "\n"


def mesh_inputs(mesh: Mesh, stats: ChannelStats) -> np.ndarray:
    """Standardized (5, E) network input for one mesh."""
    feats = extract_features(mesh)
    return ((feats - stats.mean) / stats.std).T


def build_positive_pairs(
    meshes, policy: AugmentationPolicy, rng: np.random.Generator
) -> list[Mesh]:
    """Two independent augmentations of every mesh, in paired-view layout.

    The result has ``2M`` meshes for ``M`` inputs: entry i and entry i + M are
    the two views of input i — the layout :func:`meshcl.losses.nt_xent`
    expects.  Per-view RNGs are derived from one draw on ``rng``, so the views
    are independent but fully reproducible.
    """
    meshes = list(meshes)
    base = int(rng.integers(1 << 62))
    out = []
    for view in (0, 1):
        for i, mesh in enumerate(meshes):
            view_rng = np.random.default_rng(mix_seed(base, i, view))
            out.append(augment(mesh, policy, view_rng))
    return out


@dataclass(frozen=True)
class PretrainResult:
    """Encoder weights plus everything phase 2 needs to reuse them."""

    params: Params  # encoder-only (enc.*); the projection head is dropped
    stats: ChannelStats
    loss_history: tuple[float, ...]
    arch: ArchitectureSpec


def pretrain(
    dataset: Dataset,
    config: TrainConfig,
    policy: AugmentationPolicy,
    arch: ArchitectureSpec | None = None,
) -> PretrainResult:
    """Contrastive pretraining over the dataset's meshes (labels untouched).

    Feature standardization statistics are fit once on the clean meshes and
    applied to every augmented view.  Each epoch reshuffles the meshes with a
    seeded permutation, optionally jitters the augmentation policy, and drops
    the trailing incomplete batch.  Returns only encoder weights — the
    projection head is discarded by design.
    """
    if arch is None:
        arch = ArchitectureSpec(groups=config.groups)
    meshes = dataset.meshes
    if len(meshes) < config.m1:
        raise ValueError(
            f"need at least m1={config.m1} meshes for one batch, got {len(meshes)}"
        )
    stats = fit_channel_stats(
        np.vstack([extract_features(m) for m in meshes])
    )
    params = init_params(arch, config.seed, kind="pretrain")
    state = AdamState()
    history: list[float] = []
    for epoch in range(config.n1):
        epoch_policy = jitter_policy(policy, epoch)
        order = np.random.default_rng(
            mix_seed(config.seed, _TAG_SHUFFLE, epoch)
        ).permutation(len(meshes))
        epoch_losses: list[float] = []
        for b in range(len(meshes) // config.m1):
            batch_idx = order[b * config.m1 : (b + 1) * config.m1]
            pair_rng = np.random.default_rng(
                mix_seed(config.seed, _TAG_PAIRS, epoch, b)
            )
            views = build_positive_pairs(
                [meshes[i] for i in batch_idx], epoch_policy, pair_rng
            )
            latents = []
            ctxs = []
            for vm in views:
                latent, ctx = pretrain_forward(arch, params, mesh_inputs(vm, stats), vm)
                latents.append(latent)
                ctxs.append(ctx)
            loss, g_latents = nt_xent_with_grad(np.stack(latents), config.tau)
            grads: Params = {}
            for ctx, g in zip(ctxs, g_latents):
                for name, value in pretrain_backward(arch, ctx, g).items():
                    if name in grads:
                        grads[name] = grads[name] + value
                    else:
                        grads[name] = value
            params, state = adam_step(params, grads, state, lr=config.lr)
            epoch_losses.append(loss)
        history.append(float(np.mean(epoch_losses)))
    encoder_params = {k: v for k, v in params.items() if k.startswith("enc.")}
    return PretrainResult(encoder_params, stats, tuple(history), arch)


def transfer_and_assemble_unet(
    encoder_params: Params,
    arch: ArchitectureSpec,
    num_classes: int,
    seed: int,
) -> tuple[ArchitectureSpec, Params]:
    """Wrap a pretrained encoder in a randomly initialized decoder/classifier.

    The encoder weights are copied verbatim; decoder and classifier come from
    :func:`init_params` with ``seed``.  Passing the same seed to a scratch
    :func:`init_params` call yields the identical decoder, so transferred and
    scratch models differ only in the encoder.
    """
    arch = replace(arch, num_classes=num_classes)
    params = init_params(arch, seed, kind="unet")
    expected = {k for k in params if k.startswith("enc.")}
    if expected != set(encoder_params):
        raise ValueError("encoder parameter names do not match the architecture")
    for name, value in encoder_params.items():
        if params[name].shape != value.shape:
            raise ValueError(f"shape mismatch for transferred parameter {name}")
        params[name] = np.array(value, dtype=np.float64, copy=True)
    return arch, params


def finetune(
    dataset: Dataset,
    stats: ChannelStats,
    arch: ArchitectureSpec,
    params: Params,
    config: TrainConfig,
    eval_dataset: Dataset | None = None,
) -> tuple[Params, list[MetricsRecord]]:
    """Supervised fine-tuning on the labeled subset, end to end.

    Only labeled meshes are ever forwarded.  Batches of ``m2`` are formed from
    a seeded shuffle each epoch; a trailing smaller batch is kept.  One
    :class:`MetricsRecord` is appended per epoch with the mean train loss,
    mean train edge accuracy, and — when ``eval_dataset`` is given — the mean
    edge accuracy over its labeled meshes.
    """
    labeled = dataset.labeled_indices
    if not labeled:
        raise ValueError("no labeled meshes to fine-tune on")
    if dataset.num_classes is not None and dataset.num_classes > arch.num_classes:
        raise ValueError(
            f"dataset has {dataset.num_classes} classes, model only {arch.num_classes}"
        )
    inputs = {i: mesh_inputs(dataset.meshes[i], stats) for i in labeled}
    state = AdamState()
    metrics: list[MetricsRecord] = []
    for epoch in range(config.n2):
        order = np.random.default_rng(
            mix_seed(config.seed, _TAG_FINETUNE_SHUFFLE, epoch)
        ).permutation(len(labeled))
        losses: list[float] = []
        accs: list[float] = []
        for start in range(0, len(labeled), config.m2):
            batch = [labeled[j] for j in order[start : start + config.m2]]
            grads: Params = {}
            for i in batch:
                labels = dataset.label_for(i)
                logits, ctx = unet_forward(arch, params, inputs[i], dataset.meshes[i])
                loss, g_logits = cross_entropy_edges_with_grad(logits, labels)
                losses.append(loss)
                accs.append(edge_accuracy(logits, labels))
                for name, value in unet_backward(arch, ctx, g_logits).items():
                    if name in grads:
                        grads[name] = grads[name] + value
                    else:
                        grads[name] = value
            params, state = adam_step(params, grads, state, lr=config.lr)
        eval_acc = None
        if eval_dataset is not None:
            eval_acc = evaluate_unet(eval_dataset, stats, arch, params)
        metrics.append(
            MetricsRecord(
                epoch,
                "finetune",
                float(np.mean(losses)),
                float(np.mean(accs)),
                eval_acc,
            )
        )
    return params, metrics


def evaluate_unet(
    dataset: Dataset,
    stats: ChannelStats,
    arch: ArchitectureSpec,
    params: Params,
) -> float:
    """Mean edge accuracy over the dataset's labeled meshes (no training)."""
    labeled = dataset.labeled_indices
    if not labeled:
        raise ValueError("no labeled meshes to evaluate on")
    accs = []
    for i in labeled:
        logits, _ = unet_forward(
            arch, params, mesh_inputs(dataset.meshes[i], stats), dataset.meshes[i]
        )
        accs.append(edge_accuracy(logits, dataset.label_for(i)))
    return float(np.mean(accs))
