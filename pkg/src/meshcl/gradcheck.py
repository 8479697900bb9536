"""Central finite-difference validation of hand-written backward passes."""

from __future__ import annotations

from typing import Callable

import numpy as np

LossAndGrads = Callable[[dict[str, np.ndarray]], tuple[float, dict[str, np.ndarray]]]


def grad_check(
    fn: LossAndGrads,
    inputs: dict[str, np.ndarray],
    step: float = 1e-5,
    zero_floor: float = 1e-6,
) -> float:
    """Compare analytic gradients against central finite differences.

    Args:
        fn: maps named input arrays to ``(scalar loss, gradient dict)``; the
            gradient dict must cover every key of ``inputs``.
        inputs: the point at which to check; arrays are not modified.
        step: finite-difference half-step.
        zero_floor: entries where both gradients are below this magnitude are
            counted as exact (guards against meaningless relative error on
            true zeros).

    Returns:
        The worst relative error ``|analytic - numeric| / max(|analytic|,
        |numeric|)`` over every entry of every input.
    """
    _, analytic = fn(inputs)
    worst = 0.0
    for name, x in inputs.items():
        x = np.asarray(x, dtype=np.float64)
        a = np.asarray(analytic[name], dtype=np.float64)
        if a.shape != x.shape:
            raise ValueError(f"analytic gradient shape mismatch for {name}")
        flat = x.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            work = {k: (v.copy() if k == name else v) for k, v in inputs.items()}
            wf = work[name].reshape(-1)
            wf[j] = orig + step
            up, _ = fn(work)
            wf[j] = orig - step
            down, _ = fn(work)
            numeric = (up - down) / (2.0 * step)
            ana = float(a.reshape(-1)[j])
            denom = max(abs(ana), abs(numeric))
            if denom < zero_floor:
                continue
            worst = max(worst, abs(ana - numeric) / denom)
    return worst
