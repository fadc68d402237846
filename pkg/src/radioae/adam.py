"""Adam optimizer over named parameter tensors.

Standard update with bias correction:

    m <- b1*m + (1-b1)*g        mhat = m / (1 - b1^t)
    v <- b2*v + (1-b2)*g^2      vhat = v / (1 - b2^t)
    theta <- theta - alpha * mhat / (sqrt(vhat) + eps)

epsilon sits outside the square root; this is fixed so runs reproduce.
Parameters and accumulators are dicts keyed by tensor name, updated in
place by adam_step (single-writer: one state mutates one parameter set).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError

__all__ = ["AdamHyper", "AdamState", "adam_init", "adam_step"]


@dataclass(frozen=True)
class AdamHyper:
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.alpha <= 0 or self.epsilon <= 0:
            raise ParameterError("alpha and epsilon must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ParameterError("beta1 and beta2 must lie in (0, 1)")


@dataclass
class AdamState:
    hyper: AdamHyper
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_init(param_shapes, hyper=None, dtype=np.float64):
    """Fresh state: zero moments of the given shapes, step counter 0.

    param_shapes maps tensor name -> shape tuple.
    """
    hyper = hyper or AdamHyper()
    state = AdamState(hyper=hyper)
    for name, shape in param_shapes.items():
        state.m[name] = np.zeros(shape, dtype=dtype)
        state.v[name] = np.zeros(shape, dtype=dtype)
    return state


def adam_step(state, params, grads):
    """One Adam update; mutates params and state in place and returns them."""
    if set(params) != set(state.m):
        raise ShapeError(
            f"parameter names {sorted(params)} do not match state {sorted(state.m)}")
    h = state.hyper
    state.step += 1
    t = state.step
    bc1 = 1.0 - h.beta1 ** t
    bc2 = 1.0 - h.beta2 ** t
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise ShapeError(f"grad shape {g.shape} != param shape {p.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= h.beta1
        m += (1.0 - h.beta1) * g
        v *= h.beta2
        v += (1.0 - h.beta2) * (g * g)
        p -= h.alpha * (m / bc1) / (np.sqrt(v / bc2) + h.epsilon)
    return params, state
