"""Central-difference verification of analytic gradients."""
from __future__ import annotations

import numpy as np

from .autodiff import NumericError
from .optim import ParamStore


class GradCheckError(AssertionError):
    pass


def grad_check(forward, inputs: ParamStore, tol: float | None = None,
               step: float = 1e-3) -> float:
    """Max relative error between analytic and central-difference gradients.

    `forward` maps a ParamStore to a scalar-loss Tensor and must be a pure
    function of it. The check runs on a float64 shadow copy of the inputs,
    so the production float32 path is untouched. Relative error uses a unit
    floor in the denominator: |a - fd| / max(|a|, |fd|, 1).

    Raises GradCheckError if tol is given and exceeded, NumericError if the
    loss is non-finite.
    """
    shadow = inputs.to_dtype(np.float64)
    loss = forward(shadow)
    if not np.isfinite(loss.data):
        raise NumericError("non-finite loss in grad_check")
    shadow.zero_grad()
    loss.backward()
    analytic = {
        name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for name, t in shadow.items()
    }

    worst = 0.0
    worst_name = None
    for name, t in shadow.items():
        flat = t.data.reshape(-1)
        aflat = analytic[name].reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            lo_hi = float(forward(shadow).data)
            flat[i] = saved - step
            lo_lo = float(forward(shadow).data)
            flat[i] = saved
            fd = (lo_hi - lo_lo) / (2.0 * step)
            a = aflat[i]
            rel = abs(a - fd) / max(abs(a), abs(fd), 1.0)
            if rel > worst:
                worst = rel
                worst_name = name
    if tol is not None and worst > tol:
        raise GradCheckError(
            f"gradient mismatch {worst:.3e} > {tol:.1e} at parameter {worst_name!r}")
    return worst
