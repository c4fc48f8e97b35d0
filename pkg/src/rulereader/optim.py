"""Adam with bias correction and an optional linear learning-rate warm-up."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Parameter


class OptimizerError(Exception):
    pass


@dataclass
class AdamState:
    """Moment estimates and schedule position for one training run.

    ``warmup_fraction`` of ``total_steps`` are spent ramping the learning rate
    linearly from zero to ``learning_rate``; after the ramp the rate is held
    constant. With ``warmup_fraction`` zero the configured rate applies from
    the first step.
    """

    learning_rate: float
    total_steps: int = 0
    warmup_fraction: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moments: dict = field(default_factory=dict, repr=False)
    second_moments: dict = field(default_factory=dict, repr=False)

    def current_learning_rate(self) -> float:
        """Effective rate for the step numbered ``step_count`` (1-based)."""
        warmup_steps = self.warmup_fraction * self.total_steps
        if warmup_steps <= 0:
            return self.learning_rate
        return self.learning_rate * min(1.0, self.step_count / warmup_steps)


def adam_step(parameters, state: AdamState) -> float:
    """Apply one Adam update to every trainable parameter, in place.

    Gradients are read from ``parameter.grad`` (missing gradients count as
    zero). Returns the effective learning rate used for this step.
    """
    state.step_count += 1
    lr = state.current_learning_rate()
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    correction1 = 1.0 - b1 ** state.step_count
    correction2 = 1.0 - b2 ** state.step_count
    for p in parameters:
        if not isinstance(p, Parameter):
            raise OptimizerError(f"adam_step expects Parameter, got {type(p).__name__}")
        if not p.trainable:
            continue
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise OptimizerError(f"gradient shape {g.shape} != parameter shape {p.data.shape} for {p.name}")
        m = state.first_moments.get(p.name)
        v = state.second_moments.get(p.name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        state.first_moments[p.name] = m
        state.second_moments[p.name] = v
        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return lr
