"""Encoder / encoder-decoder assembly over the edge-domain layers.

Parameters live in flat ``{name: array}`` dicts so the optimizer and the
checkpoint format stay trivial.  Naming scheme::

    enc.conv{i}.kernel / .bias      ring convolutions, shallow to deep
    enc.gn{i}.gain / .offset        group norms after each encoder conv
    head.w1 / .b1 / .w2 / .b2       pretraining projection head
    dec.conv{i}.kernel / .bias      decoder convolutions, mirroring stage i
    dec.gn{i}.gain / .offset
    cls.weight / .bias              per-edge linear classifier

The encoder is conv -> group norm -> relu -> pool per stage; the decoder
mirrors it with unpool -> concat skip -> conv -> group norm -> relu, and a
final linear layer maps to class logits per original edge.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .layers import (
    affine_backward,
    affine_forward,
    conv_backward,
    conv_forward,
    gn_backward,
    gn_forward,
    mean_backward,
    mean_forward,
    relu_backward,
    relu_forward,
)
from .mesh import Mesh
from .pooling import _pool_arrays, _pool_backward, _unpool_arrays, _unpool_backward
from .rng import mix_seed

Params = dict[str, np.ndarray]


@dataclass(frozen=True)
class ArchitectureSpec:
    """Shapes of the network; pool depths are fractions of the input edge count.

    ``pool_fractions[i]`` is the fraction of the *original* edge count left
    after stage i's pooling; targets are rounded to the nearest reachable
    count (multiples of 3 away from the input).
    """

    in_channels: int = 5
    encoder_channels: tuple[int, ...] = (16, 32)
    pool_fractions: tuple[float, ...] = (0.8, 0.6)
    head_hidden: int = 32
    latent_dim: int = 16
    groups: int = 16
    num_classes: int = 2

    def __post_init__(self):
        if len(self.encoder_channels) != len(self.pool_fractions):
            raise ValueError("need one pool fraction per encoder stage")
        if not self.encoder_channels:
            raise ValueError("need at least one encoder stage")
        prev = 1.0
        for f in self.pool_fractions:
            if not 0.0 < f < prev:
                raise ValueError("pool fractions must be strictly decreasing in (0, 1)")
            prev = f
        for ch in self.encoder_channels:
            if ch % self.groups != 0:
                raise ValueError(
                    f"group count {self.groups} must divide channel width {ch}"
                )
        if self.num_classes < 2:
            raise ValueError("need at least two classes")

    def decoder_channels(self) -> tuple[int, ...]:
        """Output width of the decoder conv mirroring each encoder stage."""
        enc = self.encoder_channels
        return tuple(enc[max(i - 1, 0)] for i in range(len(enc)))

    def pool_targets(self, edge_count: int) -> tuple[int, ...]:
        """Resolve the pool fractions into strictly decreasing edge counts."""
        targets = []
        prev = edge_count
        for f in self.pool_fractions:
            removed = 3 * max(1, round((1.0 - f) * edge_count / 3.0))
            t = edge_count - removed
            while t >= prev:
                t -= 3
            if t < 6:
                raise ValueError(
                    f"mesh with {edge_count} edges is too small for pool fraction {f}"
                )
            targets.append(t)
            prev = t
        return tuple(targets)


def _xavier(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_params(arch: ArchitectureSpec, seed: int, kind: str = "pretrain") -> Params:
    """Fresh parameters: Xavier-uniform weights, zero biases, unit gains.

    ``kind`` selects which parts exist: ``"encoder"`` (convs + norms),
    ``"pretrain"`` (encoder + projection head), or ``"unet"`` (encoder +
    decoder + classifier).
    """
    if kind not in ("encoder", "pretrain", "unet"):
        raise ValueError(f"unknown parameter set kind: {kind!r}")
    rng = np.random.default_rng(mix_seed(seed, 0x1417))
    params: Params = {}
    c_in = arch.in_channels
    for i, c_out in enumerate(arch.encoder_channels):
        params[f"enc.conv{i}.kernel"] = _xavier(
            rng, (c_out, c_in, 5), c_in * 5, c_out * 5
        )
        params[f"enc.conv{i}.bias"] = np.zeros(c_out)
        params[f"enc.gn{i}.gain"] = np.ones(c_out)
        params[f"enc.gn{i}.offset"] = np.zeros(c_out)
        c_in = c_out
    if kind == "pretrain":
        deep = arch.encoder_channels[-1]
        params["head.w1"] = _xavier(
            rng, (arch.head_hidden, deep), deep, arch.head_hidden
        )
        params["head.b1"] = np.zeros(arch.head_hidden)
        params["head.w2"] = _xavier(
            rng, (arch.latent_dim, arch.head_hidden), arch.head_hidden, arch.latent_dim
        )
        params["head.b2"] = np.zeros(arch.latent_dim)
    if kind == "unet":
        params.update(_init_decoder(arch, rng))
    return params


def _init_decoder(arch: ArchitectureSpec, rng: np.random.Generator) -> Params:
    params: Params = {}
    enc = arch.encoder_channels
    dec = arch.decoder_channels()
    n = len(enc)
    prev = enc[-1]  # channels arriving from the deepest pooled resolution
    for i in reversed(range(n)):
        c_in = prev + enc[i]  # unpooled features concatenated with the skip
        c_out = dec[i]
        params[f"dec.conv{i}.kernel"] = _xavier(
            rng, (c_out, c_in, 5), c_in * 5, c_out * 5
        )
        params[f"dec.conv{i}.bias"] = np.zeros(c_out)
        params[f"dec.gn{i}.gain"] = np.ones(c_out)
        params[f"dec.gn{i}.offset"] = np.zeros(c_out)
        prev = c_out
    params["cls.weight"] = _xavier(
        rng, (arch.num_classes, prev), prev, arch.num_classes
    )
    params["cls.bias"] = np.zeros(arch.num_classes)
    return params


# ---------------------------------------------------------------------------
# Encoder


def encoder_forward(arch: ArchitectureSpec, params: Params, x: np.ndarray, mesh: Mesh):
    """Run conv/norm/relu/pool stages.

    Returns:
        ``(out, out_mesh, caches, skips)`` where ``out`` is (C_deep, E_deep),
        ``caches`` holds per-stage backward contexts, and ``skips`` the
        pre-pool activations with their meshes (for the decoder).
    """
    targets = arch.pool_targets(mesh.edge_count)
    caches = []
    skips = []
    m = mesh
    for i in range(len(arch.encoder_channels)):
        y, conv_ctx = conv_forward(
            x, m.edge_ring, params[f"enc.conv{i}.kernel"], params[f"enc.conv{i}.bias"]
        )
        z, gn_ctx = gn_forward(
            y, arch.groups, params[f"enc.gn{i}.gain"], params[f"enc.gn{i}.offset"]
        )
        a, relu_mask = relu_forward(z)
        skips.append((a, m))
        pooled, pooled_mesh, record = _pool_arrays(a, m, targets[i])
        caches.append((conv_ctx, gn_ctx, relu_mask, record))
        x, m = pooled, pooled_mesh
    return x, m, caches, skips


def encoder_backward(
    arch: ArchitectureSpec,
    caches: list,
    g_out: np.ndarray,
    skip_grads: list[np.ndarray] | None = None,
) -> tuple[Params, np.ndarray]:
    """Backward through the encoder stages.

    ``skip_grads`` optionally adds a gradient to each stage's pre-pool
    activation (the decoder's skip connections).

    Returns:
        ``(param grads, gradient w.r.t. the input features)``.
    """
    grads: Params = {}
    g = g_out
    for i in reversed(range(len(arch.encoder_channels))):
        conv_ctx, gn_ctx, relu_mask, record = caches[i]
        g = _pool_backward(g, record)
        if skip_grads is not None and skip_grads[i] is not None:
            g = g + skip_grads[i]
        g = relu_backward(g, relu_mask)
        g, ggain, goffset = gn_backward(g, gn_ctx)
        grads[f"enc.gn{i}.gain"] = ggain
        grads[f"enc.gn{i}.offset"] = goffset
        g, gkernel, gbias = conv_backward(g, conv_ctx)
        grads[f"enc.conv{i}.kernel"] = gkernel
        grads[f"enc.conv{i}.bias"] = gbias
    return grads, g


# ---------------------------------------------------------------------------
# Pretraining model: encoder -> global mean -> projection head


def pretrain_forward(arch: ArchitectureSpec, params: Params, x: np.ndarray, mesh: Mesh):
    """Latent vector for one mesh. Returns ``(latent, ctx)``."""
    out, _, caches, _ = encoder_forward(arch, params, x, mesh)
    pooled_mean, edge_count = mean_forward(out)
    h, aff1 = affine_forward(pooled_mean, params["head.w1"], params["head.b1"])
    hr, relu_mask = relu_forward(h)
    latent, aff2 = affine_forward(hr, params["head.w2"], params["head.b2"])
    return latent, (caches, edge_count, aff1, relu_mask, aff2)


def pretrain_backward(
    arch: ArchitectureSpec, ctx, g_latent: np.ndarray
) -> Params:
    """Parameter gradients for one mesh given the latent gradient."""
    caches, edge_count, aff1, relu_mask, aff2 = ctx
    g, gw2, gb2 = affine_backward(g_latent, aff2)
    g = relu_backward(g, relu_mask)
    g, gw1, gb1 = affine_backward(g, aff1)
    g = mean_backward(g, edge_count)
    grads, _ = encoder_backward(arch, caches, g)
    grads.update({"head.w1": gw1, "head.b1": gb1, "head.w2": gw2, "head.b2": gb2})
    return grads


# ---------------------------------------------------------------------------
# Segmentation model: encoder + mirrored decoder with skip connections


def unet_forward(arch: ArchitectureSpec, params: Params, x: np.ndarray, mesh: Mesh):
    """Per-edge class logits. Returns ``(logits (C, E), ctx)``."""
    out, _, enc_caches, skips = encoder_forward(arch, params, x, mesh)
    dec_caches = {}
    g = out
    for i in reversed(range(len(arch.encoder_channels))):
        record = enc_caches[i][3]
        up = _unpool_arrays(g, record)
        skip_a, skip_mesh = skips[i]
        cat = np.concatenate([up, skip_a], axis=0)
        y, conv_ctx = conv_forward(
            cat,
            skip_mesh.edge_ring,
            params[f"dec.conv{i}.kernel"],
            params[f"dec.conv{i}.bias"],
        )
        z, gn_ctx = gn_forward(
            y, arch.groups, params[f"dec.gn{i}.gain"], params[f"dec.gn{i}.offset"]
        )
        a, relu_mask = relu_forward(z)
        dec_caches[i] = (record, up.shape[0], conv_ctx, gn_ctx, relu_mask)
        g = a
    logits, cls_ctx = affine_forward(g, params["cls.weight"], params["cls.bias"])
    return logits, (enc_caches, dec_caches, cls_ctx)


def unet_backward(arch: ArchitectureSpec, ctx, g_logits: np.ndarray) -> Params:
    """Parameter gradients given the logit gradient."""
    enc_caches, dec_caches, cls_ctx = ctx
    grads: Params = {}
    g, gw, gb = affine_backward(g_logits, cls_ctx)
    grads["cls.weight"] = gw
    grads["cls.bias"] = gb
    n = len(arch.encoder_channels)
    skip_grads: list[np.ndarray | None] = [None] * n
    for i in range(n):  # reverse of the decoder's deep-to-shallow application
        record, split, conv_ctx, gn_ctx, relu_mask = dec_caches[i]
        g = relu_backward(g, relu_mask)
        g, ggain, goffset = gn_backward(g, gn_ctx)
        grads[f"dec.gn{i}.gain"] = ggain
        grads[f"dec.gn{i}.offset"] = goffset
        g, gkernel, gbias = conv_backward(g, conv_ctx)
        grads[f"dec.conv{i}.kernel"] = gkernel
        grads[f"dec.conv{i}.bias"] = gbias
        skip_grads[i] = g[split:]
        g = _unpool_backward(g[:split], record)
    enc_grads, _ = encoder_backward(arch, enc_caches, g, skip_grads)
    grads.update(enc_grads)
    return grads
