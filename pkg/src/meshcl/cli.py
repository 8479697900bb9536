"""Command line interface.

Subcommands: validate, features, augment, gen-data, pretrain, finetune, eval,
experiment.  Every flag has a config-file equivalent (``--config``): training,
augmentation, and architecture fields live in ``train:`` / ``augment:`` /
``arch:`` sections, and per-command paths in a section named after the
command.  Explicit flags always win over the file.  On failure, commands print
one ``error: ...`` line to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .augment import augment
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import (
    ConfigError,
    build_arch,
    build_experiment_spec,
    build_policy,
    build_train_config,
    load_config_file,
    section,
)
from .data import gen_synthetic_dataset, load_dataset, save_dataset
from .experiment import desk_spec, emit_results, run_label_fraction_experiment
from .features import extract_features, features_to_csv, fit_channel_stats
from .mesh import MeshError, load_obj_path, save_obj, validate_mesh
from .model import init_params
from .rng import mix_seed
from .training import (
    Dataset,
    MetricsRecord,
    finetune,
    evaluate_unet,
    metrics_to_csv,
    pretrain,
    transfer_and_assemble_unet,
)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MeshError, ConfigError, ValueError, KeyError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshcl",
        description="Contrastive pretraining and limited-label segmentation for triangular meshes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a mesh for structural problems")
    p.add_argument("obj", help="OBJ file to check")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("features", help="per-edge geometric features as CSV")
    p.add_argument("obj")
    p.add_argument("--csv", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("augment", help="write a stochastically augmented copy")
    p.add_argument("obj")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma", type=float, help="anisotropic scale sigma")
    p.add_argument("--p-shift", type=float, help="vertex shift probability")
    p.add_argument("--p-flip", type=float, help="edge flip probability")
    p.add_argument("--out", help="output OBJ path (default: stdout)")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("gen-data", help="generate a labeled synthetic dataset")
    p.add_argument("--config")
    p.add_argument("--n", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--subdivisions", type=int)
    p.add_argument("--out", help="dataset directory (meshes/ and labels/)")
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("pretrain", help="contrastive pretraining of the encoder")
    p.add_argument("--config")
    p.add_argument("--data", help="directory of OBJ meshes")
    p.add_argument("--out", help="encoder checkpoint path")
    p.add_argument("--metrics", help="optional CSV of the per-epoch loss")
    _add_train_flags(p)
    _add_policy_flags(p)
    p.set_defaults(func=_cmd_pretrain)

    p = sub.add_parser("finetune", help="supervised fine-tuning of a segmentation net")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--labels")
    p.add_argument("--ckpt", help="encoder checkpoint to transfer (omit to train from scratch)")
    p.add_argument("--fraction", type=float, help="percent of labeled meshes to use (default 100)")
    p.add_argument("--out", help="segmentation checkpoint path")
    p.add_argument("--eval-data")
    p.add_argument("--eval-labels")
    p.add_argument("--classes", type=int)
    p.add_argument("--metrics", help="optional CSV of per-epoch metrics")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("eval", help="mean edge accuracy of a checkpoint on a dataset")
    p.add_argument("--config")
    p.add_argument("--ckpt")
    p.add_argument("--data")
    p.add_argument("--labels")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("experiment", help="label-fraction sweep with and without pretraining")
    p.add_argument("--spec", help="experiment spec file (YAML)")
    p.add_argument("--out", help="output directory for CSVs and figures")
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--figures",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="render PNG figures next to the CSVs (default: yes)",
    )
    p.set_defaults(func=_cmd_experiment)

    return parser


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m1", type=int, help="pretraining meshes per batch")
    p.add_argument("--m2", type=int, help="fine-tuning meshes per batch")
    p.add_argument("--n1", type=int, help="pretraining epochs")
    p.add_argument("--n2", type=int, help="fine-tuning epochs")
    p.add_argument("--tau", type=float, help="NT-Xent temperature")
    p.add_argument("--lr", type=float, help="Adam learning rate")
    p.add_argument("--groups", type=int, help="group-norm group count")
    p.add_argument("--seed", type=int)


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, help="anisotropic scale sigma")
    p.add_argument("--p-shift", type=float, help="vertex shift probability")
    p.add_argument("--p-flip", type=float, help="edge flip probability")
    p.add_argument(
        "--jitter",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="per-epoch augmentation-strength jitter (default: on)",
    )


def _load_cfg(args) -> dict:
    return load_config_file(args.config) if getattr(args, "config", None) else {}


def _pick(flag, cfg_cmd: dict, key: str, default=None):
    return flag if flag is not None else cfg_cmd.get(key, default)


def _require(value, name: str):
    if value is None:
        raise ConfigError(f"missing required option: {name}")
    return value


def _train_config(args, cfg: dict):
    return build_train_config(
        section(cfg, "train"),
        m1=args.m1,
        m2=getattr(args, "m2", None),
        n1=args.n1,
        n2=getattr(args, "n2", None),
        tau=args.tau,
        lr=args.lr,
        groups=args.groups,
        seed=args.seed,
    )


def _policy(args, cfg: dict):
    return build_policy(
        section(cfg, "augment"),
        scale_sigma=getattr(args, "sigma", None),
        shift_probability=getattr(args, "p_shift", None),
        flip_probability=getattr(args, "p_flip", None),
        jitter=getattr(args, "jitter", None),
        seed=getattr(args, "seed", None),
    )


# ---------------------------------------------------------------------------
# Commands


def _cmd_validate(args) -> int:
    mesh = load_obj_path(args.obj)
    report = validate_mesh(mesh)
    if report.ok:
        print(
            f"ok: {mesh.vertex_count} vertices, {mesh.edge_count} edges, "
            f"{mesh.face_count} faces"
        )
        return 0
    for issue in report.issues:
        print(f"{issue.code}[{issue.index}]: {issue.message}")
    print(f"invalid: {len(report.issues)} issue(s)")
    return 1


def _cmd_features(args) -> int:
    mesh = load_obj_path(args.obj)
    csv = features_to_csv(extract_features(mesh))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(csv)
        print(args.csv)
    else:
        sys.stdout.write(csv)
    return 0


def _cmd_augment(args) -> int:
    cfg = _load_cfg(args)
    aug_cfg = dict(section(cfg, "augment"))
    out = _pick(args.out, aug_cfg, "out")
    aug_cfg.pop("out", None)
    mesh = load_obj_path(args.obj)
    policy = build_policy(
        aug_cfg,
        scale_sigma=args.sigma,
        shift_probability=args.p_shift,
        flip_probability=args.p_flip,
        seed=args.seed,
    )
    text = save_obj(augment(mesh, policy))
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(out)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_gen_data(args) -> int:
    cfg = _load_cfg(args)
    cmd = section(cfg, "gen_data")
    n = int(_pick(args.n, cmd, "n", 40))
    classes = int(_pick(args.classes, cmd, "classes", 2))
    seed = int(_pick(args.seed, cmd, "seed", 0))
    subdivisions = int(_pick(args.subdivisions, cmd, "subdivisions", 2))
    out = _require(_pick(args.out, cmd, "out"), "--out")
    dataset = gen_synthetic_dataset(n, classes, seed, subdivisions)
    save_dataset(dataset, out)
    print(f"{out}: {n} meshes, {classes} classes")
    return 0


def _cmd_pretrain(args) -> int:
    cfg = _load_cfg(args)
    cmd = section(cfg, "pretrain")
    data_dir = _require(_pick(args.data, cmd, "data"), "--data")
    out = _require(_pick(args.out, cmd, "out"), "--out")
    config = _train_config(args, cfg)
    policy = _policy(args, cfg)
    arch = build_arch(section(cfg, "arch"), groups=args.groups)
    dataset = load_dataset(data_dir)
    result = pretrain(Dataset(dataset.meshes), config, policy, arch)
    save_checkpoint(
        out,
        Checkpoint("encoder", result.arch, result.params, result.stats, config.seed),
    )
    metrics_path = _pick(args.metrics, cmd, "metrics")
    if metrics_path:
        records = [
            MetricsRecord(e, "pretrain", loss)
            for e, loss in enumerate(result.loss_history)
        ]
        with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(metrics_to_csv(records))
    print(
        f"{out}: pretrained {config.n1} epochs on {len(dataset.meshes)} meshes, "
        f"loss {result.loss_history[0]:.4f} -> {result.loss_history[-1]:.4f}"
    )
    return 0


def _cmd_finetune(args) -> int:
    cfg = _load_cfg(args)
    cmd = section(cfg, "finetune")
    data_dir = _require(_pick(args.data, cmd, "data"), "--data")
    label_dir = _require(_pick(args.labels, cmd, "labels"), "--labels")
    out = _require(_pick(args.out, cmd, "out"), "--out")
    ckpt_path = _pick(args.ckpt, cmd, "ckpt")
    fraction = float(_pick(args.fraction, cmd, "fraction", 100.0))
    if not 0.0 < fraction <= 100.0:
        raise ConfigError("--fraction must lie in (0, 100]")
    config = _train_config(args, cfg)

    dataset = load_dataset(data_dir, label_dir)
    labeled = dataset.labeled_indices
    if not labeled:
        raise ConfigError(f"no label files found under {label_dir}")
    num_classes = int(
        _pick(args.classes, cmd, "classes", dataset.num_classes)
    )
    k = round(fraction * len(labeled) / 100.0)
    if k < 1:
        raise ConfigError(f"--fraction {fraction} leaves no labeled meshes")
    rng = np.random.default_rng(mix_seed(config.seed, 0x90))
    chosen = sorted(int(labeled[i]) for i in rng.choice(len(labeled), k, replace=False))
    d_l = dataset.restrict_labels(chosen)

    if ckpt_path:
        ckpt = load_checkpoint(ckpt_path)
        if ckpt.kind != "encoder":
            raise ConfigError(f"--ckpt must be an encoder checkpoint, got {ckpt.kind!r}")
        stats = ckpt.stats
        arch, params = transfer_and_assemble_unet(
            ckpt.params, ckpt.arch, num_classes, config.seed
        )
    else:
        base = build_arch(section(cfg, "arch"), groups=args.groups, num_classes=num_classes)
        arch = base
        params = init_params(arch, config.seed, kind="unet")
        stats = fit_channel_stats(
            np.vstack([extract_features(m) for m in dataset.meshes])
        )

    eval_data = _pick(getattr(args, "eval_data", None), cmd, "eval_data")
    eval_labels = _pick(getattr(args, "eval_labels", None), cmd, "eval_labels")
    eval_ds = None
    if eval_data and eval_labels:
        eval_ds = load_dataset(eval_data, eval_labels)

    params, metrics = finetune(d_l, stats, arch, params, config, eval_dataset=eval_ds)
    save_checkpoint(out, Checkpoint("unet", arch, params, stats, config.seed))
    metrics_path = _pick(args.metrics, cmd, "metrics")
    if metrics_path:
        with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(metrics_to_csv(metrics))
    last = metrics[-1]
    tail = f", eval accuracy {last.eval_accuracy:.4f}" if last.eval_accuracy is not None else ""
    print(
        f"{out}: fine-tuned on {len(chosen)}/{len(labeled)} labeled meshes, "
        f"train accuracy {last.accuracy:.4f}{tail}"
    )
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    cmd = section(cfg, "eval")
    ckpt_path = _require(_pick(args.ckpt, cmd, "ckpt"), "--ckpt")
    data_dir = _require(_pick(args.data, cmd, "data"), "--data")
    label_dir = _require(_pick(args.labels, cmd, "labels"), "--labels")
    ckpt = load_checkpoint(ckpt_path)
    if ckpt.kind != "unet":
        raise ConfigError(f"--ckpt must be a segmentation checkpoint, got {ckpt.kind!r}")
    dataset = load_dataset(data_dir, label_dir)
    accuracy = evaluate_unet(dataset, ckpt.stats, ckpt.arch, ckpt.params)
    print(repr(accuracy))
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config_file(args.spec) if args.spec else {}
    if args.spec:
        spec = build_experiment_spec(cfg, seed=args.seed)
    else:
        spec = desk_spec(args.seed if args.seed is not None else 0)
    out = _require(_pick(args.out, cfg, "out"), "--out")
    figures = _pick(args.figures, cfg, "figures", True)

    ds_cfg = section(cfg, "dataset")
    if "data" in ds_cfg:
        dataset = load_dataset(ds_cfg["data"], ds_cfg.get("labels"))
        if len(dataset.labeled_indices) != len(dataset):
            raise ConfigError("experiment dataset must be fully labeled")
    else:
        syn = section(ds_cfg, "synthetic") if "synthetic" in ds_cfg else ds_cfg
        dataset = gen_synthetic_dataset(
            int(syn.get("n", 40)),
            int(syn.get("classes", 2)),
            int(syn.get("seed", spec.seed)),
            int(syn.get("subdivisions", 2)),
        )

    table = run_label_fraction_experiment(dataset, spec)
    written = emit_results(table, out)
    if figures:
        from .report import render_figures

        written += render_figures(table, out)
    for row in table.rows:
        diff = "" if row.diff is None else f" (diff {row.diff:+.4f})"
        no_ssl = "-" if row.acc_no_ssl is None else f"{row.acc_no_ssl:.4f}"
        ssl = "-" if row.acc_ssl is None else f"{row.acc_ssl:.4f}"
        print(f"fraction {row.fraction:g}%: no_ssl {no_ssl}, ssl {ssl}{diff}")
    for path in written:
        print(path)
    return 0
