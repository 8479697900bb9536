"""Checkpoint serialization: one ``.npz`` per model.

Layout (format version 1): a ``meta`` entry holding a JSON string with the
format version, the checkpoint kind (``"encoder"`` or ``"unet"``), the
architecture fields, the training seed, and the parameter names; each
parameter is stored as ``param/<name>`` in float64, and the feature
standardization statistics as ``stats/mean`` and ``stats/std``.  Loading
restores every array bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .features import ChannelStats
from .model import ArchitectureSpec, Params

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    kind: str  # "encoder" or "unet"
    arch: ArchitectureSpec
    params: Params
    stats: ChannelStats
    seed: int


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    if ckpt.kind not in ("encoder", "unet"):
        raise ValueError(f"unknown checkpoint kind: {ckpt.kind!r}")
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": ckpt.kind,
        "arch": asdict(ckpt.arch),
        "seed": int(ckpt.seed),
        "param_names": sorted(ckpt.params),
    }
    arrays = {f"param/{k}": np.asarray(v, dtype=np.float64) for k, v in ckpt.params.items()}
    arrays["stats/mean"] = ckpt.stats.mean
    arrays["stats/std"] = ckpt.stats.std
    arrays["meta"] = np.array(json.dumps(meta))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> Checkpoint:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        version = meta.get("format_version")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version: {version}")
        arch_fields = dict(meta["arch"])
        for key in ("encoder_channels", "pool_fractions"):
            arch_fields[key] = tuple(arch_fields[key])
        arch = ArchitectureSpec(**arch_fields)
        params = {name: data[f"param/{name}"] for name in meta["param_names"]}
        stats = ChannelStats(data["stats/mean"], data["stats/std"])
        return Checkpoint(meta["kind"], arch, params, stats, int(meta["seed"]))
