"""Synthetic labeled mesh corpora and on-disk dataset layout.

Synthetic meshes are deformed icospheres: a smooth bump field whose amplitude
depends on the azimuthal sector, plus small per-vertex radial noise, plus a
random anisotropic squash.  Per-edge labels are the azimuthal sector of the
edge midpoint in the final geometry, so the label of a region is readable
from its local surface statistics (stronger bumps <-> higher sector id) —
learnable, but not trivially so.

Besides the sector structure, every mesh draws its own global style — bump
frequencies, overall bump strength, noise level, squash factors — so meshes
are tellable apart at the whole-mesh level.  Contrastive pretraining feeds on
exactly that: two augmented views of one mesh share its style, different
meshes do not.

On disk a dataset is a directory of ``.obj`` meshes plus a labels directory
of ``.txt`` files pairing by basename; each label file holds one integer per
line, line t giving the class of edge t in the mesh's edge enumeration.
"""

from __future__ import annotations

import os

import numpy as np

from .mesh import Mesh, MeshError, load_obj_path, save_obj_path
from .rng import mix_seed
from .shapes import icosphere
from .training import Dataset

_TAG_MESH = 0x11
_TAG_SPLIT = 0x12

# per-mesh bump frequencies are drawn from this range (inclusive); the top
# stays low enough to be resolvable at icosphere level 1
_FREQ_CHOICES = (2, 6)


def _sector(x: np.ndarray, y: np.ndarray, classes: int) -> np.ndarray:
    theta = np.arctan2(y, x)  # (-pi, pi]
    s = np.floor((theta + np.pi) / (2.0 * np.pi) * classes).astype(np.int64)
    return np.clip(s, 0, classes - 1)


def synthesize_mesh(
    seed: int, classes: int, subdivisions: int = 2
) -> tuple[Mesh, np.ndarray]:
    """One deformed icosphere plus its per-edge sector labels."""
    rng = np.random.default_rng(seed)
    base = icosphere(subdivisions)
    v = base.vertices.copy()

    # whole-mesh style: frequencies, bump strength, roughness, squash
    freq = rng.integers(_FREQ_CHOICES[0], _FREQ_CHOICES[1] + 1, size=2)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
    strength = rng.uniform(0.6, 1.6)
    noise_sigma = rng.uniform(0.005, 0.02)
    squash = rng.uniform(0.7, 1.4, size=3)

    theta = np.arctan2(v[:, 1], v[:, 0])
    phi = np.arccos(np.clip(v[:, 2], -1.0, 1.0))
    sector_v = _sector(v[:, 0], v[:, 1], classes)
    # amplitude grows with the sector id, making sectors distinguishable from
    # local geometry alone
    amplitude = strength * (0.02 + 0.12 * sector_v / max(1, classes - 1))
    bump = amplitude * np.sin(freq[0] * phi + phases[0]) * np.cos(
        freq[1] * theta + phases[1]
    )
    radial = 1.0 + bump + rng.normal(0.0, noise_sigma, size=len(v))
    v = v * radial[:, None]
    v = v * squash

    mesh = Mesh.from_arrays(v, base.faces)
    mid = 0.5 * (v[mesh.edges[:, 0]] + v[mesh.edges[:, 1]])
    labels = _sector(mid[:, 0], mid[:, 1], classes)
    return mesh, labels


def gen_synthetic_dataset(
    n: int, classes: int, seed: int, subdivisions: int = 2
) -> Dataset:
    """Generate ``n`` labeled meshes; fully deterministic in ``seed``."""
    if n < 1:
        raise ValueError("need at least one mesh")
    if classes < 2:
        raise ValueError("need at least two classes")
    meshes = []
    labels = {}
    for i in range(n):
        mesh, lab = synthesize_mesh(mix_seed(seed, _TAG_MESH, i), classes, subdivisions)
        meshes.append(mesh)
        labels[i] = lab
    return Dataset(tuple(meshes), labels, num_classes=classes)


def split_eval(dataset: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split off a seeded evaluation subset (``fraction`` of the meshes).

    Returns ``(train, eval)`` datasets with disjoint meshes; labels follow
    their meshes.  The split depends only on ``seed`` and the sizes, so it is
    stable across experiment arms and repeats.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("eval fraction must be in (0, 1)")
    n = len(dataset)
    k = max(1, round(fraction * n))
    if k >= n:
        raise ValueError("eval split would consume the whole dataset")
    perm = np.random.default_rng(mix_seed(seed, _TAG_SPLIT)).permutation(n)
    eval_idx = sorted(int(i) for i in perm[:k])
    train_idx = sorted(int(i) for i in perm[k:])

    def take(indices):
        meshes = tuple(dataset.meshes[i] for i in indices)
        labels = {
            new: dataset.labels[old]
            for new, old in enumerate(indices)
            if old in dataset.labels
        }
        return Dataset(meshes, labels, dataset.num_classes)

    return take(train_idx), take(eval_idx)


# ---------------------------------------------------------------------------
# Directory layout


def save_dataset(dataset: Dataset, out_dir) -> None:
    """Write ``meshes/mesh_XXXX.obj`` and ``labels/mesh_XXXX.txt`` under ``out_dir``."""
    mesh_dir = os.path.join(out_dir, "meshes")
    label_dir = os.path.join(out_dir, "labels")
    os.makedirs(mesh_dir, exist_ok=True)
    os.makedirs(label_dir, exist_ok=True)
    for i, mesh in enumerate(dataset.meshes):
        name = f"mesh_{i:04d}"
        save_obj_path(mesh, os.path.join(mesh_dir, name + ".obj"))
        if i in dataset.labels:
            with open(os.path.join(label_dir, name + ".txt"), "w", encoding="utf-8") as fh:
                fh.write("\n".join(str(int(c)) for c in dataset.labels[i]) + "\n")


def load_mesh_dir(mesh_dir) -> tuple[tuple[Mesh, ...], list[str]]:
    """Load every ``.obj`` under ``mesh_dir`` sorted by filename.

    Returns the meshes plus their basenames (for label pairing).
    """
    names = sorted(
        os.path.splitext(f)[0]
        for f in os.listdir(mesh_dir)
        if f.endswith(".obj")
    )
    if not names:
        raise MeshError(f"no .obj files under {mesh_dir}")
    meshes = tuple(
        load_obj_path(os.path.join(mesh_dir, name + ".obj")) for name in names
    )
    return meshes, names


def load_labels_file(path, edge_count: int) -> np.ndarray:
    """Read one integer per line; line t labels edge t."""
    with open(path, "r", encoding="utf-8") as fh:
        values = [line.strip() for line in fh if line.strip()]
    try:
        labels = np.array([int(v) for v in values], dtype=np.int64)
    except ValueError:
        raise MeshError(f"{path}: label lines must be integers") from None
    if len(labels) != edge_count:
        raise MeshError(
            f"{path}: {len(labels)} labels for a mesh with {edge_count} edges"
        )
    return labels


def load_dataset(mesh_dir, label_dir=None) -> Dataset:
    """Assemble a :class:`Dataset` from mesh and (optional) label directories.

    Label files pair with meshes by basename; meshes without a label file are
    loaded as unlabeled.
    """
    meshes, names = load_mesh_dir(mesh_dir)
    labels: dict[int, np.ndarray] = {}
    if label_dir is not None:
        for i, name in enumerate(names):
            path = os.path.join(label_dir, name + ".txt")
            if os.path.exists(path):
                labels[i] = load_labels_file(path, meshes[i].edge_count)
    return Dataset(meshes, labels)
