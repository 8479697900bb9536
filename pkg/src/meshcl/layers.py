"""Edge-domain neural network layers, forward and backward, in plain numpy.

Every layer is a pure ``*_forward`` function returning ``(output, ctx)`` and a
matching ``*_backward(grad_output, ctx)`` returning the input gradient plus
any parameter gradients.  All math runs in float64; the backward passes are
derived by hand and validated against central finite differences (see
``gradcheck``).

The public wrappers at the bottom (:func:`mesh_conv`, :func:`group_norm`,
:func:`mesh_pool`, :func:`mesh_unpool`, ...) operate on :class:`EdgeTensor`,
which binds a (channels x edges) value matrix to the mesh whose edge
enumeration orders its columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .mesh import Mesh
from .pooling import (
    CollapseRecord,
    _pool_arrays,
    _pool_backward,
    _unpool_arrays,
    _unpool_backward,
)


@dataclass(frozen=True)
class EdgeTensor:
    """A (C, E) feature matrix whose columns follow one mesh's edge order.

    ``mesh_ref`` is the :attr:`Mesh.uid` of that mesh; ops that need topology
    take the mesh separately and refuse a tensor bound to a different one.
    """

    values: np.ndarray
    mesh_ref: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"EdgeTensor values must be (C, E), got {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("EdgeTensor values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def for_mesh(cls, values: np.ndarray, mesh: Mesh) -> "EdgeTensor":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != mesh.edge_count:
            raise ValueError(
                f"values shape {values.shape} does not match {mesh.edge_count} edges"
            )
        return cls(values, mesh.uid)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def edge_count(self) -> int:
        return self.values.shape[1]


def _require_bound(tensor: EdgeTensor, mesh: Mesh) -> None:
    if tensor.mesh_ref != mesh.uid:
        raise ValueError("tensor is bound to a different mesh's edge enumeration")
    if tensor.edge_count != mesh.edge_count:
        raise ValueError(
            f"tensor has {tensor.edge_count} columns, mesh has {mesh.edge_count} edges"
        )


# ---------------------------------------------------------------------------
# Convolution over the 4-edge ring


class _ConvCtx(NamedTuple):
    stacked: np.ndarray  # (5, C_in, E) the five symmetric input combinations
    sign_ac: np.ndarray
    sign_bd: np.ndarray
    ring: np.ndarray
    mask: np.ndarray
    kernel: np.ndarray


def conv_forward(
    x: np.ndarray, ring: np.ndarray, kernel: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, _ConvCtx]:
    """Ring convolution.

    With ring neighbors a, b, c, d of edge e (missing neighbors contribute
    zeros), output channel o is::

        bias_o + sum_in  k0*e + k1*|a - c| + k2*(a + c) + k3*|b - d| + k4*(b + d)

    The |a-c| / (a+c) combinations make the result invariant to which incident
    face is "first", so it only depends on the mesh, not face scan order.

    Args:
        x: (C_in, E) input features.
        ring: (E, 4) neighbor ids with -1 for missing slots.
        kernel: (C_out, C_in, 5) tap weights.
        bias: (C_out,).
    """
    mask = ring >= 0
    idx = np.where(mask, ring, 0)
    nb = x[:, idx] * mask  # (C_in, E, 4)
    a, b, c, d = nb[..., 0], nb[..., 1], nb[..., 2], nb[..., 3]
    sign_ac = np.sign(a - c)
    sign_bd = np.sign(b - d)
    stacked = np.stack([x, np.abs(a - c), a + c, np.abs(b - d), b + d])
    y = np.einsum("oik,kie->oe", kernel, stacked) + bias[:, None]
    return y, _ConvCtx(stacked, sign_ac, sign_bd, ring, mask, kernel)


def conv_backward(
    gy: np.ndarray, ctx: _ConvCtx
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_input, grad_kernel, grad_bias)."""
    gkernel = np.einsum("oe,kie->oik", gy, ctx.stacked)
    gbias = gy.sum(axis=1)
    gt = np.einsum("oik,oe->kie", ctx.kernel, gy)  # (5, C_in, E)
    gx = gt[0].copy()
    ga = gt[1] * ctx.sign_ac + gt[2]
    gc = -gt[1] * ctx.sign_ac + gt[2]
    gb = gt[3] * ctx.sign_bd + gt[4]
    gd = -gt[3] * ctx.sign_bd + gt[4]
    for slot, g in enumerate((ga, gb, gc, gd)):
        m = ctx.mask[:, slot]
        np.add.at(gx, (slice(None), ctx.ring[m, slot]), g[:, m])
    return gx, gkernel, gbias


# ---------------------------------------------------------------------------
# Group normalization (per mesh, no batch dimension)

GN_EPS = 1e-5


class _GnCtx(NamedTuple):
    xhat: np.ndarray
    inv_std: np.ndarray  # (G, 1, 1)
    gain: np.ndarray
    groups: int


def gn_forward(
    x: np.ndarray, groups: int, gain: np.ndarray, offset: np.ndarray
) -> tuple[np.ndarray, _GnCtx]:
    """Normalize over (channels-in-group x edges), then apply gain/offset.

    ``groups`` must divide the channel count exactly.
    """
    C, E = x.shape
    if C % groups != 0:
        raise ValueError(f"{groups} groups do not divide {C} channels")
    g = x.reshape(groups, C // groups, E)
    mean = g.mean(axis=(1, 2), keepdims=True)
    var = g.var(axis=(1, 2), keepdims=True)
    inv_std = 1.0 / np.sqrt(var + GN_EPS)
    xhat = ((g - mean) * inv_std).reshape(C, E)
    y = gain[:, None] * xhat + offset[:, None]
    return y, _GnCtx(xhat, inv_std, gain, groups)


def gn_backward(
    gy: np.ndarray, ctx: _GnCtx
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_input, grad_gain, grad_offset)."""
    C, E = gy.shape
    G = ctx.groups
    ggain = (gy * ctx.xhat).sum(axis=1)
    goffset = gy.sum(axis=1)
    gxhat = (gy * ctx.gain[:, None]).reshape(G, C // G, E)
    xhat = ctx.xhat.reshape(G, C // G, E)
    mean_g = gxhat.mean(axis=(1, 2), keepdims=True)
    mean_gx = (gxhat * xhat).mean(axis=(1, 2), keepdims=True)
    gx = ctx.inv_std * (gxhat - mean_g - xhat * mean_gx)
    return gx.reshape(C, E), ggain, goffset


# ---------------------------------------------------------------------------
# Pointwise and dense pieces


def relu_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.maximum(x, 0.0), x > 0


def relu_backward(gy: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return gy * mask


class _AffineCtx(NamedTuple):
    x: np.ndarray
    weight: np.ndarray


def affine_forward(
    x: np.ndarray, weight: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, _AffineCtx]:
    """``weight @ x + bias`` for a vector (C,) or per-edge matrix (C, E)."""
    y = weight @ x + (bias if x.ndim == 1 else bias[:, None])
    return y, _AffineCtx(x, weight)


def affine_backward(
    gy: np.ndarray, ctx: _AffineCtx
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if ctx.x.ndim == 1:
        gweight = np.outer(gy, ctx.x)
        gbias = gy.copy()
    else:
        gweight = gy @ ctx.x.T
        gbias = gy.sum(axis=1)
    gx = ctx.weight.T @ gy
    return gx, gweight, gbias


def mean_forward(x: np.ndarray) -> tuple[np.ndarray, int]:
    """Mean over edges: (C, E) -> (C,)."""
    return x.mean(axis=1), x.shape[1]


def mean_backward(gy: np.ndarray, edge_count: int) -> np.ndarray:
    return np.repeat(gy[:, None] / edge_count, edge_count, axis=1)


# ---------------------------------------------------------------------------
# Public EdgeTensor ops


def mesh_conv(
    tensor: EdgeTensor, mesh: Mesh, kernel: np.ndarray, bias: np.ndarray
) -> EdgeTensor:
    """Ring convolution bound to ``mesh``; see :func:`conv_forward`."""
    _require_bound(tensor, mesh)
    kernel = np.asarray(kernel, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if kernel.ndim != 3 or kernel.shape[2] != 5:
        raise ValueError(f"kernel must be (C_out, C_in, 5), got {kernel.shape}")
    if kernel.shape[1] != tensor.channels:
        raise ValueError(
            f"kernel expects {kernel.shape[1]} input channels, tensor has {tensor.channels}"
        )
    if bias.shape != (kernel.shape[0],):
        raise ValueError("bias shape must match kernel output channels")
    y, _ = conv_forward(tensor.values, mesh.edge_ring, kernel, bias)
    return EdgeTensor(y, mesh.uid)


def group_norm(
    tensor: EdgeTensor, groups: int, gain: np.ndarray, offset: np.ndarray
) -> EdgeTensor:
    """Group normalization over the tensor's channels; see :func:`gn_forward`."""
    gain = np.asarray(gain, dtype=np.float64)
    offset = np.asarray(offset, dtype=np.float64)
    if gain.shape != (tensor.channels,) or offset.shape != (tensor.channels,):
        raise ValueError("gain/offset must be one value per channel")
    y, _ = gn_forward(tensor.values, groups, gain, offset)
    return EdgeTensor(y, tensor.mesh_ref)


def mesh_pool(
    tensor: EdgeTensor, mesh: Mesh, target: int
) -> tuple[EdgeTensor, Mesh, CollapseRecord]:
    """Collapse lowest-norm edges until ``target`` edges remain.

    ``target`` must differ from the current count by a multiple of 3.  With
    ``target`` equal to the current count this is the identity (empty record).

    Returns:
        ``(pooled tensor, pooled mesh, record)``.
    """
    _require_bound(tensor, mesh)
    values, pooled_mesh, record = _pool_arrays(tensor.values, mesh, target)
    return EdgeTensor(values, pooled_mesh.uid), pooled_mesh, record


def mesh_unpool(tensor: EdgeTensor, record: CollapseRecord) -> EdgeTensor:
    """Reverse a pooling pass: each coarse edge's feature is copied to every
    original edge of its merge group, restoring the source edge count."""
    if tensor.mesh_ref != record.pooled_ref:
        raise ValueError("tensor is not bound to the record's pooled mesh")
    return EdgeTensor(_unpool_arrays(tensor.values, record), record.source_ref)


def global_mean_encode(tensor: EdgeTensor) -> np.ndarray:
    """Mesh-level encoding: the per-channel mean over all edges."""
    return tensor.values.mean(axis=1)


def projection_head(encoding: np.ndarray, params: dict, prefix: str = "head") -> np.ndarray:
    """Two-layer MLP ``w2 @ relu(w1 @ x + b1) + b2`` used only in pretraining."""
    h = params[f"{prefix}.w1"] @ encoding + params[f"{prefix}.b1"]
    h = np.maximum(h, 0.0)
    return params[f"{prefix}.w2"] @ h + params[f"{prefix}.b2"]
