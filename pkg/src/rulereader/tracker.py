"""Gated recurrent memory over rule sentences.

Each rule sentence owns a key (its encoder vector, unit-normalized at
initialization) and a value that starts equal to the key. Reading one piece
of user information s updates every slot i:

    candidate_i = relu(W_k k_i + W_v v_i + W_s s)
    gate_i      = sigmoid(s . k_i + s . v_i)
    v_i        <- normalize(v_i + gate_i * candidate_i)

Keys never change. Reads fold in the question, the scenario, and then each
history turn, in that order. A bypass constructor supports the ablation that
skips tracking entirely and uses (k_i, k_i) pairs downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad


class TrackerError(Exception):
    pass


@dataclass
class TrackerParams:
    w_key: ad.Parameter    # (d, d)
    w_value: ad.Parameter  # (d, d)
    w_state: ad.Parameter  # (d, d)

    def all(self) -> list[ad.Parameter]:
        return [self.w_key, self.w_value, self.w_state]


@dataclass
class MemoryState:
    """Keys, current values, and the gate activations of every read so far."""

    keys: ad.Tensor    # (M, d)
    values: ad.Tensor  # (M, d)
    gate_log: list[np.ndarray] = field(default_factory=list)

    @property
    def num_slots(self) -> int:
        return self.keys.data.shape[0]


def init_memory(keys, normalize_keys: bool = True) -> MemoryState:
    """Fresh memory with values equal to keys.

    Keys are unit-normalized by default; a zero-norm key is an error.
    """
    k = keys if isinstance(keys, ad.Tensor) else ad.Tensor(keys)
    if k.data.ndim != 2 or k.data.shape[0] < 1:
        raise TrackerError(f"keys must be (M, d) with M >= 1, got {k.data.shape}")
    norms = np.linalg.norm(k.data, axis=1)
    if np.any(norms < ad.EPS_NORM):
        raise TrackerError(f"rule sentence {int(np.argmin(norms))} has a zero-norm key")
    if normalize_keys:
        k = ad.l2_normalize_rows(k)
    return MemoryState(keys=k, values=k)


def bypass_memory(keys) -> MemoryState:
    """Tracking disabled: values stay identical to the (normalized) keys."""
    return init_memory(keys, normalize_keys=True)


def read(state: MemoryState, s, params: TrackerParams) -> MemoryState:
    """Fold one user-information vector into every memory slot."""
    s_t = s if isinstance(s, ad.Tensor) else ad.Tensor(s)
    d = state.keys.data.shape[1]
    if s_t.data.shape != (d,):
        raise TrackerError(f"state vector shape {s_t.data.shape} does not match memory dim {d}")
    updated, gate = ad.gated_update(state.keys, state.values, s_t,
                                    params.w_key, params.w_value, params.w_state)
    return MemoryState(keys=state.keys, values=updated,
                       gate_log=state.gate_log + [gate])


def track(state: MemoryState, states_in_order, params: TrackerParams) -> MemoryState:
    """Apply ``read`` once per state vector, preserving order."""
    for s in states_in_order:
        state = read(state, s, params)
    return state
