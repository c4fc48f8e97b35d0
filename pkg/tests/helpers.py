"""Independent oracles and checkers shared across the test suite.

Everything here is deliberately written the slow, obvious way: scalar loops,
full dynamic-programming tables, exhaustive enumeration. Production code must
agree with these within stated tolerances; the oracles themselves depend on
nothing from the package except plain data containers.
"""

from __future__ import annotations

import numpy as np


# ---------------------------------------------------------------------------
# Finite-difference gradient checking


def finite_difference(f, arrays, h: float = 1e-5):
    """Central-difference gradients of scalar ``f`` w.r.t. each input array.

    ``f`` receives the list of arrays and returns a float. Arrays are
    perturbed one entry at a time.
    """
    grads = []
    for i, a in enumerate(arrays):
        g = np.zeros_like(a, dtype=np.float64)
        flat = a.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = f(arrays)
            flat[j] = orig - h
            down = f(arrays)
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor: float = 1e-5) -> float:
    """Worst-case elementwise relative error between two gradient lists.

    The denominator is floored so that near-zero entries are compared on an
    absolute scale instead of amplifying finite-difference noise.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        a = np.asarray(a, dtype=np.float64)
        n = np.asarray(n, dtype=np.float64)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


# ---------------------------------------------------------------------------
# Memory tracker reference: one update step written as explicit scalar loops.


def tracker_read_oracle(keys, values, state, w_key, w_value, w_state):
    """One gated memory update, elementwise.

    candidate_i = relu(W_k k_i + W_v v_i + W_s s)
    gate_i      = sigmoid(k_i . s + v_i . s)
    v_i'        = (v_i + gate_i * candidate_i) / ||v_i + gate_i * candidate_i||
    """
    keys = np.asarray(keys, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    state = np.asarray(state, dtype=np.float64)
    m, d = values.shape
    updated = np.zeros_like(values)
    gates = np.zeros(m)
    for i in range(m):
        candidate = np.zeros(d)
        for r in range(d):
            acc = 0.0
            for c in range(d):
                acc += w_key[r, c] * keys[i, c]
                acc += w_value[r, c] * values[i, c]
                acc += w_state[r, c] * state[c]
            candidate[r] = acc if acc > 0.0 else 0.0
        score = 0.0
        for c in range(d):
            score += keys[i, c] * state[c] + values[i, c] * state[c]
        gates[i] = 1.0 / (1.0 + np.exp(-score))
        raw = np.zeros(d)
        norm_sq = 0.0
        for c in range(d):
            raw[c] = values[i, c] + gates[i] * candidate[c]
            norm_sq += raw[c] * raw[c]
        norm = np.sqrt(norm_sq)
        for c in range(d):
            updated[i, c] = raw[c] / norm
    return updated, gates


# ---------------------------------------------------------------------------
# Span labeling reference: full-table Levenshtein plus exhaustive span search.


def levenshtein_oracle(a, b) -> int:
    """Token edit distance with a complete DP table."""
    n, m = len(a), len(b)
    table = np.zeros((n + 1, m + 1), dtype=np.int64)
    for i in range(n + 1):
        table[i, 0] = i
    for j in range(m + 1):
        table[0, j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            table[i, j] = min(
                table[i - 1, j] + 1,
                table[i, j - 1] + 1,
                table[i - 1, j - 1] + cost,
            )
    return int(table[n, m])


def label_span_oracle(sentences, query_tokens):
    """Best (sentence, start, end) over every contiguous token span.

    ``sentences`` is a list of token lists. Ranking: lowest edit distance to
    the query, then shortest span, then earliest sentence, then earliest
    start. Returns (sentence_index, start, end) with an inclusive end.
    """
    best = None
    best_key = None
    for si, tokens in enumerate(sentences):
        for start in range(len(tokens)):
            for end in range(start, len(tokens)):
                dist = levenshtein_oracle(tokens[start:end + 1], query_tokens)
                key = (dist, end - start + 1, si, start)
                if best_key is None or key < best_key:
                    best_key = key
                    best = (si, start, end)
    return best


def extract_span_oracle(gamma, delta, sentence_index):
    """Best within-sentence (start, end) pair by the product of raw scores.

    Ranking: highest gamma[start] * delta[end] with start <= end and both in
    the same sentence; ties prefer the shorter span, then the earlier start.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    sentence_index = np.asarray(sentence_index)
    best = None
    best_key = None
    for start in range(gamma.shape[0]):
        for end in range(start, gamma.shape[0]):
            if sentence_index[start] != sentence_index[end]:
                continue
            score = gamma[start] * delta[end]
            key = (-score, end - start + 1, start)
            if best_key is None or key < best_key:
                best_key = key
                best = (start, end)
    return best


# ---------------------------------------------------------------------------
# Synthetic corpus reference: decisions recomputed from the condition table.


def synthetic_decision_oracle(conjunctive: bool, settled):
    """(decision, index-to-ask) for a partially settled condition list."""
    if conjunctive:
        if any(v is False for v in settled):
            return "No", None
        if all(v is True for v in settled):
            return "Yes", None
    else:
        if any(v is True for v in settled):
            return "Yes", None
        if all(v is False for v in settled):
            return "No", None
    return "Inquire", settled.index(None)


def softmax_oracle(x, axis=-1):
    x = np.asarray(x, dtype=np.float64)
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)
