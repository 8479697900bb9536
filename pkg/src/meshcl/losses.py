"""Contrastive and supervised losses, with hand-written gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LatentBatch:
    """A (2M, d) stack of latent vectors in paired-view layout.

    Row ``i`` and row ``i + M`` are the two augmented views of source mesh
    ``i``; :func:`nt_xent` relies on exactly this layout.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] % 2 != 0 or values.shape[0] == 0:
            raise ValueError(
                f"latent batch must be (2M, d) with M >= 1, got {values.shape}"
            )
        if not np.isfinite(values).all():
            raise ValueError("latent batch must be finite")
        object.__setattr__(self, "values", values)

    @property
    def pair_count(self) -> int:
        return self.values.shape[0] // 2

    def pair_index(self, i: int) -> int:
        return (i + self.pair_count) % (2 * self.pair_count)


def _as_batch(latents) -> LatentBatch:
    return latents if isinstance(latents, LatentBatch) else LatentBatch(latents)


def nt_xent_with_grad(latents, tau: float) -> tuple[float, np.ndarray]:
    """Normalized-temperature cross entropy over paired views.

    For anchor i with positive p(i) (its other view) and cosine similarity
    ``sim``, the per-anchor loss is::

        -log( exp(sim(i, p(i)) / tau) / sum_{k != i} exp(sim(i, k) / tau) )

    and the batch loss is the mean over all 2M anchors.  With M = 1 the only
    candidate is the positive, so the loss is exactly zero.

    Returns:
        ``(loss, grad)`` where grad matches the (2M, d) latent layout.

    Raises:
        ValueError: non-positive tau or a zero-norm latent row (cosine
            similarity undefined).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    z = _as_batch(latents).values
    n = z.shape[0]
    m = n // 2
    norms = np.linalg.norm(z, axis=1)
    if norms.min() == 0.0:
        raise ValueError("zero-norm latent row: cosine similarity undefined")
    u = z / norms[:, None]
    sim = u @ u.T
    logits = sim / tau
    np.fill_diagonal(logits, -np.inf)
    row_max = logits.max(axis=1)
    expd = np.exp(logits - row_max[:, None])
    np.fill_diagonal(expd, 0.0)
    denom = expd.sum(axis=1)
    lse = row_max + np.log(denom)
    pos = np.concatenate([np.arange(m, n), np.arange(0, m)])
    anchor_losses = lse - logits[np.arange(n), pos]
    loss = float(anchor_losses.mean())

    softmax = expd / denom[:, None]
    softmax[np.arange(n), pos] -= 1.0
    g_sim = softmax / (n * tau)
    g_u = (g_sim + g_sim.T) @ u
    g_z = (g_u - (g_u * u).sum(axis=1, keepdims=True) * u) / norms[:, None]
    return loss, g_z


def nt_xent(latents, tau: float) -> float:
    """Batch NT-Xent loss; see :func:`nt_xent_with_grad`."""
    loss, _ = nt_xent_with_grad(latents, tau)
    return loss


def cross_entropy_edges_with_grad(
    logits: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean per-edge softmax cross entropy.

    Args:
        logits: (C, E) unnormalized class scores.
        labels: (E,) integer class ids in ``[0, C)``.

    Returns:
        ``(loss, grad)`` with grad of shape (C, E).
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2:
        raise ValueError(f"logits must be (C, E), got {logits.shape}")
    C, E = logits.shape
    if labels.shape != (E,):
        raise ValueError(f"labels must be ({E},), got {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("labels must be integers")
    if labels.size and (labels.min() < 0 or labels.max() >= C):
        raise ValueError(f"labels must lie in [0, {C})")
    row_max = logits.max(axis=0)
    expd = np.exp(logits - row_max)
    denom = expd.sum(axis=0)
    lse = row_max + np.log(denom)
    cols = np.arange(E)
    loss = float((lse - logits[labels, cols]).mean())
    grad = expd / denom
    grad[labels, cols] -= 1.0
    grad /= E
    return loss, grad


def cross_entropy_edges(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean per-edge cross entropy; see :func:`cross_entropy_edges_with_grad`."""
    loss, _ = cross_entropy_edges_with_grad(logits, labels)
    return loss


def edge_accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of edges whose argmax class matches the label (ties go to the
    lowest class id, deterministically)."""
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[1],):
        raise ValueError("logits must be (C, E) with labels (E,)")
    return float((logits.argmax(axis=0) == labels).mean())
