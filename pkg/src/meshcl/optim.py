"""Adam optimizer over dictionaries of named parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """First/second moment estimates plus the step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float = 2e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One Adam update with bias correction.

    Parameters without a gradient entry are carried over unchanged.  Neither
    input dict is mutated; fresh arrays are returned.
    """
    t = state.t + 1
    new_params: dict[str, np.ndarray] = {}
    m: dict[str, np.ndarray] = {}
    v: dict[str, np.ndarray] = {}
    for name, value in params.items():
        g = grads.get(name)
        if g is None:
            new_params[name] = value.copy()
            if name in state.m:
                m[name] = state.m[name].copy()
                v[name] = state.v[name].copy()
            continue
        if g.shape != value.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        m_prev = state.m.get(name, np.zeros_like(value))
        v_prev = state.v.get(name, np.zeros_like(value))
        m[name] = beta1 * m_prev + (1.0 - beta1) * g
        v[name] = beta2 * v_prev + (1.0 - beta2) * (g * g)
        m_hat = m[name] / (1.0 - beta1**t)
        v_hat = v[name] / (1.0 - beta2**t)
        new_params[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_params, AdamState(m, v, t)
