"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

Every operation returns a new ``Tensor`` holding the forward value and, while
gradient recording is enabled, a closure that propagates the output gradient
to the operation's tensor inputs. ``backward`` walks the recorded graph from a
scalar loss in reverse creation order, which is a valid reverse topological
order because inputs always exist before the node that consumes them. Plain
numpy arrays and Python numbers may be mixed into any operation; they are
treated as constants and receive no gradient work at all.

Only the operations needed by the dialog model are provided. There is no
general broadcasting: each op documents the exact shapes it accepts.
"""

from __future__ import annotations

from itertools import count
from operator import attrgetter

import numpy as np

EPS_NORM = 1e-12


class AutodiffError(Exception):
    """Contract violation in the autodiff core."""


class DimensionError(AutodiffError):
    """Operand shapes do not match the operation's contract."""


class DegenerateNormError(AutodiffError):
    """A vector with norm below EPS_NORM cannot be normalized."""


_GRAD_ENABLED = [True]
_SEQ = count()


class no_grad:
    """Context manager that disables graph recording (inference mode)."""

    def __enter__(self):
        self._prev = _GRAD_ENABLED[0]
        _GRAD_ENABLED[0] = False
        return self

    def __exit__(self, *exc):
        _GRAD_ENABLED[0] = self._prev
        return False


class Tensor:
    """A float64 array plus an optional gradient and graph linkage."""

    __slots__ = ("data", "grad", "_parents", "_backward", "_seq")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._seq = next(_SEQ)
        if _GRAD_ENABLED[0]:
            self._parents = parents
            self._backward = backward
        else:
            self._parents = ()
            self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise AutodiffError(f"item() on tensor of shape {self.data.shape}")
        return float(self.data.reshape(()))

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


class Parameter(Tensor):
    """A named trainable tensor. Gradients start at exact zero."""

    __slots__ = ("name", "trainable")

    def __init__(self, name: str, data, trainable: bool = True):
        super().__init__(data)
        self.name = name
        self.trainable = trainable
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape})"


def _val(x) -> np.ndarray:
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _accum(t, g):
    # Gradients are only ever rebound, never mutated in place, so adopting
    # the incoming array without a copy is safe even when it aliases or
    # views another node's gradient.
    if t.grad is None:
        t.grad = np.asarray(g, dtype=np.float64)
    else:
        t.grad = t.grad + g


_seq_of = attrgetter("_seq")


def backward(loss: Tensor) -> None:
    """Propagate d(loss)/d(node) through the graph rooted at a scalar loss."""
    if loss.data.size != 1:
        raise AutodiffError(f"backward requires a scalar, got shape {loss.data.shape}")
    visited = {id(loss)}
    interior = [loss] if loss._parents else []
    stack = [loss]
    while stack:
        for p in stack.pop()._parents:
            i = id(p)
            if i not in visited:
                visited.add(i)
                if p._parents:
                    interior.append(p)
                    stack.append(p)
    interior.sort(key=_seq_of, reverse=True)
    loss.grad = np.ones_like(loss.data)
    for node in interior:
        if node._backward is not None:
            node._backward()


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _pair(a, at, b, bt) -> tuple:
    if at:
        return (a, b) if bt else (a,)
    return (b,) if bt else ()


def add(a, b) -> Tensor:
    """Elementwise sum. Accepts equal shapes, or matrix + row vector."""
    at, bt = isinstance(a, Tensor), isinstance(b, Tensor)
    va = a.data if at else np.asarray(a, dtype=np.float64)
    vb = b.data if bt else np.asarray(b, dtype=np.float64)
    try:
        data = va + vb
    except ValueError as exc:
        raise DimensionError(f"add: {va.shape} vs {vb.shape}") from exc
    out = Tensor(data, _pair(a, at, b, bt), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        if at:
            _accum(a, _unbroadcast(g, va.shape))
        if bt:
            _accum(b, _unbroadcast(g, vb.shape))

    out._backward = bw
    return out


def mul(a, b) -> Tensor:
    """Elementwise product. Accepts equal shapes, or array * scalar array."""
    at, bt = isinstance(a, Tensor), isinstance(b, Tensor)
    va = a.data if at else np.asarray(a, dtype=np.float64)
    vb = b.data if bt else np.asarray(b, dtype=np.float64)
    try:
        data = va * vb
    except ValueError as exc:
        raise DimensionError(f"mul: {va.shape} vs {vb.shape}") from exc
    out = Tensor(data, _pair(a, at, b, bt), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        if at:
            _accum(a, _unbroadcast(g * vb, va.shape))
        if bt:
            _accum(b, _unbroadcast(g * va, vb.shape))

    out._backward = bw
    return out


def scale(x, s: float) -> Tensor:
    """Multiply by a Python constant (does not enter the graph as a node)."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    s = float(s)
    out = Tensor(vx * s, (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        _accum(x, out.grad * s)

    out._backward = bw
    return out


def matmul(a, b) -> Tensor:
    """Matrix product (m,k) @ (k,n) -> (m,n)."""
    at, bt = isinstance(a, Tensor), isinstance(b, Tensor)
    va = a.data if at else np.asarray(a, dtype=np.float64)
    vb = b.data if bt else np.asarray(b, dtype=np.float64)
    if va.ndim != 2 or vb.ndim != 2 or va.shape[1] != vb.shape[0]:
        raise DimensionError(f"matmul: {va.shape} @ {vb.shape}")
    out = Tensor(va @ vb, _pair(a, at, b, bt), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        if at:
            _accum(a, g @ vb.T)
        if bt:
            _accum(b, va.T @ g)

    out._backward = bw
    return out


def matvec(m, v) -> Tensor:
    """Matrix-vector product (p,q) @ (q,) -> (p,)."""
    mt, vt = isinstance(m, Tensor), isinstance(v, Tensor)
    vm = m.data if mt else np.asarray(m, dtype=np.float64)
    vv = v.data if vt else np.asarray(v, dtype=np.float64)
    if vm.ndim != 2 or vv.ndim != 1 or vm.shape[1] != vv.shape[0]:
        raise DimensionError(f"matvec: {vm.shape} @ {vv.shape}")
    out = Tensor(vm @ vv, _pair(m, mt, v, vt), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        if mt:
            _accum(m, np.outer(g, vv))
        if vt:
            _accum(v, vm.T @ g)

    out._backward = bw
    return out


def matmul_t(a, b) -> Tensor:
    """Product with the second factor transposed: (m,k) @ (n,k).T -> (m,n).

    Equivalent to ``matmul(a, transpose(b))`` without the transpose node;
    the usual way to apply a weight matrix stored as (out, in) rows.
    """
    at, bt = isinstance(a, Tensor), isinstance(b, Tensor)
    va = a.data if at else np.asarray(a, dtype=np.float64)
    vb = b.data if bt else np.asarray(b, dtype=np.float64)
    if va.ndim != 2 or vb.ndim != 2 or va.shape[1] != vb.shape[1]:
        raise DimensionError(f"matmul_t: {va.shape} @ {vb.shape}.T")
    out = Tensor(va @ vb.T, _pair(a, at, b, bt), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        if at:
            _accum(a, g @ vb)
        if bt:
            _accum(b, g.T @ va)

    out._backward = bw
    return out


def vecmat(v, m) -> Tensor:
    """Vector-matrix product (p,) @ (p,q) -> (q,)."""
    vt, mt = isinstance(v, Tensor), isinstance(m, Tensor)
    vv = v.data if vt else np.asarray(v, dtype=np.float64)
    vm = m.data if mt else np.asarray(m, dtype=np.float64)
    if vv.ndim != 1 or vm.ndim != 2 or vm.shape[0] != vv.shape[0]:
        raise DimensionError(f"vecmat: {vv.shape} @ {vm.shape}")
    out = Tensor(vv @ vm, _pair(v, vt, m, mt), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        if vt:
            _accum(v, vm @ g)
        if mt:
            _accum(m, np.outer(vv, g))

    out._backward = bw
    return out


def linear(x, w, b) -> Tensor:
    """Affine map x @ w.T + b for x (N,f_in), w (f_out,f_in), b (f_out,)."""
    xt, wt, bt = isinstance(x, Tensor), isinstance(w, Tensor), isinstance(b, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    vw = w.data if wt else np.asarray(w, dtype=np.float64)
    vb = b.data if bt else np.asarray(b, dtype=np.float64)
    if vx.ndim != 2 or vw.ndim != 2 or vb.ndim != 1:
        raise DimensionError(f"linear: {vx.shape} @ {vw.shape}.T + {vb.shape}")
    if vx.shape[1] != vw.shape[1] or vw.shape[0] != vb.shape[0]:
        raise DimensionError(f"linear: {vx.shape} @ {vw.shape}.T + {vb.shape}")
    parents = tuple(t for t, flag in ((x, xt), (w, wt), (b, bt)) if flag)
    out = Tensor(vx @ vw.T + vb, parents, None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        if xt:
            _accum(x, g @ vw)
        if wt:
            _accum(w, g.T @ vx)
        if bt:
            _accum(b, g.sum(axis=0))

    out._backward = bw
    return out


def gated_update(k, v, s, w_key, w_value, w_state):
    """One fused gated memory update over all slots.

        candidate = relu(k @ w_key.T + v @ w_value.T + w_state @ s)
        gate      = sigmoid(k @ s + v @ s)
        result    = row_normalize(v + gate[:, None] * candidate)

    ``k`` and ``v`` are (M, d), ``s`` is (d,), the weights are (d, d).
    Returns the (M, d) result tensor and the gate activations as a plain
    array. Fusing the whole step is worthwhile because the per-slot
    matrices are small enough that graph bookkeeping would otherwise
    dominate the arithmetic.
    """
    kt, vt, st = isinstance(k, Tensor), isinstance(v, Tensor), isinstance(s, Tensor)
    wkt, wvt, wst = (isinstance(w_key, Tensor), isinstance(w_value, Tensor),
                     isinstance(w_state, Tensor))
    vk = k.data if kt else np.asarray(k, dtype=np.float64)
    vv = v.data if vt else np.asarray(v, dtype=np.float64)
    vs = s.data if st else np.asarray(s, dtype=np.float64)
    vwk = w_key.data if wkt else np.asarray(w_key, dtype=np.float64)
    vwv = w_value.data if wvt else np.asarray(w_value, dtype=np.float64)
    vws = w_state.data if wst else np.asarray(w_state, dtype=np.float64)
    if vk.ndim != 2 or vk.shape != vv.shape:
        raise DimensionError(f"gated_update: keys {vk.shape} vs values {vv.shape}")
    d = vk.shape[1]
    if vs.shape != (d,) or vwk.shape != (d, d) or vwv.shape != (d, d) or vws.shape != (d, d):
        raise DimensionError(
            f"gated_update: state {vs.shape}, weights {vwk.shape}/{vwv.shape}/{vws.shape} for d={d}")

    pre = vk @ vwk.T + vv @ vwv.T + vws @ vs
    cand = np.where(pre > 0, pre, 0.0)
    glogit = vk @ vs + vv @ vs
    t = np.exp(-np.abs(glogit))
    gate = np.where(glogit >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    u = vv + gate[:, None] * cand
    norms = np.sqrt((u * u).sum(axis=1, keepdims=True))
    if np.any(norms < EPS_NORM):
        bad = int(np.argmin(norms))
        raise DegenerateNormError(f"row {bad} has norm {float(norms[bad, 0])} below {EPS_NORM}")
    y = u / norms
    parents = tuple(tensor for tensor, flag in
                    ((k, kt), (v, vt), (s, st), (w_key, wkt), (w_value, wvt), (w_state, wst))
                    if flag)
    out = Tensor(y, parents, None)
    if not out._parents:
        return out, gate

    def bw():
        g = out.grad
        gu = (g - y * (g * y).sum(axis=1, keepdims=True)) / norms
        ggate = (gu * cand).sum(axis=1)
        gcand = gu * gate[:, None]
        gpre = np.where(pre > 0, gcand, 0.0)
        glin = ggate * gate * (1.0 - gate)
        gpre_sum = gpre.sum(axis=0)
        if kt:
            _accum(k, np.outer(glin, vs) + gpre @ vwk)
        if vt:
            _accum(v, gu + np.outer(glin, vs) + gpre @ vwv)
        if st:
            _accum(s, (vk + vv).T @ glin + vws.T @ gpre_sum)
        if wkt:
            _accum(w_key, gpre.T @ vk)
        if wvt:
            _accum(w_value, gpre.T @ vv)
        if wst:
            _accum(w_state, np.outer(gpre_sum, vs))

    out._backward = bw
    return out, gate


def attention_blocks(q, k, v, lengths, scale_factor: float = 1.0) -> Tensor:
    """Scaled dot-product attention within consecutive row blocks.

    ``q``, ``k``, ``v`` are (N, d) matrices packing several sequences one
    after another; ``lengths`` gives the block sizes and must sum to N.
    Each block attends only to itself: the result rows s0:s1 equal
    softmax(q[s0:s1] @ k[s0:s1].T * scale_factor) @ v[s0:s1]. Fusing the
    whole pattern into one node keeps minibatch graphs small.
    """
    qt, kt, vt = isinstance(q, Tensor), isinstance(k, Tensor), isinstance(v, Tensor)
    vq = q.data if qt else np.asarray(q, dtype=np.float64)
    vk = k.data if kt else np.asarray(k, dtype=np.float64)
    vv = v.data if vt else np.asarray(v, dtype=np.float64)
    if vq.ndim != 2 or vq.shape != vk.shape or vq.shape != vv.shape:
        raise DimensionError(f"attention_blocks: {vq.shape}/{vk.shape}/{vv.shape}")
    sizes = [int(n) for n in lengths]
    if any(n < 1 for n in sizes) or sum(sizes) != vq.shape[0]:
        raise DimensionError(f"attention_blocks: block sizes {sizes} do not tile {vq.shape[0]} rows")
    scale_factor = float(scale_factor)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    out_data = np.empty_like(vq)
    attn = []
    for b in range(len(sizes)):
        s0, s1 = bounds[b], bounds[b + 1]
        s = (vq[s0:s1] @ vk[s0:s1].T) * scale_factor
        s -= s.max(axis=1, keepdims=True)
        e = np.exp(s)
        a = e / e.sum(axis=1, keepdims=True)
        attn.append(a)
        out_data[s0:s1] = a @ vv[s0:s1]
    parents = tuple(t for t, flag in ((q, qt), (k, kt), (v, vt)) if flag)
    out = Tensor(out_data, parents, None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        gq = np.empty_like(vq) if qt else None
        gk = np.empty_like(vk) if kt else None
        gv = np.empty_like(vv) if vt else None
        for b, a in enumerate(attn):
            s0, s1 = bounds[b], bounds[b + 1]
            gb = g[s0:s1]
            if vt:
                gv[s0:s1] = a.T @ gb
            if qt or kt:
                ga = gb @ vv[s0:s1].T
                gs = a * (ga - (ga * a).sum(axis=1, keepdims=True))
                gs *= scale_factor
                if qt:
                    gq[s0:s1] = gs @ vk[s0:s1]
                if kt:
                    gk[s0:s1] = gs.T @ vq[s0:s1]
        if qt:
            _accum(q, gq)
        if kt:
            _accum(k, gk)
        if vt:
            _accum(v, gv)

    out._backward = bw
    return out


def transpose(x) -> Tensor:
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    if vx.ndim != 2:
        raise DimensionError(f"transpose: need 2-d, got {vx.shape}")
    out = Tensor(vx.T, (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        _accum(x, out.grad.T)

    out._backward = bw
    return out


def dot(a, b) -> Tensor:
    """Inner product of two equal-length vectors -> scalar."""
    at, bt = isinstance(a, Tensor), isinstance(b, Tensor)
    va = a.data if at else np.asarray(a, dtype=np.float64)
    vb = b.data if bt else np.asarray(b, dtype=np.float64)
    if va.ndim != 1 or vb.ndim != 1 or va.shape != vb.shape:
        raise DimensionError(f"dot: {va.shape} . {vb.shape}")
    out = Tensor(va @ vb, _pair(a, at, b, bt), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        if at:
            _accum(a, g * vb)
        if bt:
            _accum(b, g * va)

    out._backward = bw
    return out


def concat(a, b) -> Tensor:
    """Concatenate two vectors."""
    at, bt = isinstance(a, Tensor), isinstance(b, Tensor)
    va = a.data if at else np.asarray(a, dtype=np.float64)
    vb = b.data if bt else np.asarray(b, dtype=np.float64)
    if va.ndim != 1 or vb.ndim != 1:
        raise DimensionError(f"concat: {va.shape} ++ {vb.shape}")
    out = Tensor(np.concatenate([va, vb]), _pair(a, at, b, bt), None)
    if not out._parents:
        return out
    na = va.shape[0]

    def bw():
        g = out.grad
        if at:
            _accum(a, g[:na])
        if bt:
            _accum(b, g[na:])

    out._backward = bw
    return out


def hstack(a, b) -> Tensor:
    """Concatenate two matrices with equal row counts along columns."""
    at, bt = isinstance(a, Tensor), isinstance(b, Tensor)
    va = a.data if at else np.asarray(a, dtype=np.float64)
    vb = b.data if bt else np.asarray(b, dtype=np.float64)
    if va.ndim != 2 or vb.ndim != 2 or va.shape[0] != vb.shape[0]:
        raise DimensionError(f"hstack: {va.shape} ++ {vb.shape}")
    out = Tensor(np.concatenate([va, vb], axis=1), _pair(a, at, b, bt), None)
    if not out._parents:
        return out
    na = va.shape[1]

    def bw():
        g = out.grad
        if at:
            _accum(a, g[:, :na])
        if bt:
            _accum(b, g[:, na:])

    out._backward = bw
    return out


def relu(x) -> Tensor:
    """max(x, 0). The subgradient at exactly 0 is 0."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    mask = vx > 0
    out = Tensor(np.where(mask, vx, 0.0), (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        _accum(x, out.grad * mask)

    out._backward = bw
    return out


def sigmoid(x) -> Tensor:
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    # exp of a non-positive argument never overflows; both branches share it.
    t = np.exp(-np.abs(vx))
    y = np.where(vx >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    out = Tensor(y, (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        _accum(x, out.grad * y * (1.0 - y))

    out._backward = bw
    return out


def softmax(x, axis: int = -1) -> Tensor:
    """Shift-stable softmax along one axis of a 1-d or 2-d tensor."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    if vx.ndim not in (1, 2):
        raise DimensionError(f"softmax: need 1-d or 2-d, got {vx.shape}")
    shifted = vx - vx.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y, (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        inner = (g * y).sum(axis=axis, keepdims=True)
        _accum(x, y * (g - inner))

    out._backward = bw
    return out


def l2_normalize(x) -> Tensor:
    """x / ||x|| for a vector. Norms below EPS_NORM are an error."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    if vx.ndim != 1:
        raise DimensionError(f"l2_normalize: need 1-d, got {vx.shape}")
    n = float(np.sqrt(vx @ vx))
    if n < EPS_NORM:
        raise DegenerateNormError(f"norm {n} below {EPS_NORM}")
    y = vx / n
    out = Tensor(y, (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        _accum(x, (g - y * (y @ g)) / n)

    out._backward = bw
    return out


def l2_normalize_rows(x) -> Tensor:
    """Normalize each row of a matrix to unit Euclidean norm."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    if vx.ndim != 2:
        raise DimensionError(f"l2_normalize_rows: need 2-d, got {vx.shape}")
    norms = np.sqrt((vx * vx).sum(axis=1, keepdims=True))
    if np.any(norms < EPS_NORM):
        bad = int(np.argmin(norms))
        raise DegenerateNormError(f"row {bad} has norm {float(norms[bad, 0])} below {EPS_NORM}")
    y = vx / norms
    out = Tensor(y, (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        inner = (g * y).sum(axis=1, keepdims=True)
        _accum(x, (g - y * inner) / norms)

    out._backward = bw
    return out


def standardize_rows(x, eps: float = 1e-6) -> Tensor:
    """Shift and scale each row to zero mean and unit variance.

    Layer normalization without the affine parameters; keeps downstream dot
    products in a bounded range so gating nonlinearities do not saturate.
    """
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    if vx.ndim != 2:
        raise DimensionError(f"standardize_rows: need 2-d, got {vx.shape}")
    centered = vx - vx.mean(axis=1, keepdims=True)
    scale_inv = 1.0 / np.sqrt((centered * centered).mean(axis=1, keepdims=True) + eps)
    y = centered * scale_inv
    out = Tensor(y, (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        inner = (g * y).mean(axis=1, keepdims=True)
        _accum(x, scale_inv * (g - y * inner - g.mean(axis=1, keepdims=True)))

    out._backward = bw
    return out


def scale_rows(m, v) -> Tensor:
    """Multiply row i of a (M,d) matrix by entry i of a (M,) vector."""
    mt, vt = isinstance(m, Tensor), isinstance(v, Tensor)
    vm = m.data if mt else np.asarray(m, dtype=np.float64)
    vv = v.data if vt else np.asarray(v, dtype=np.float64)
    if vm.ndim != 2 or vv.ndim != 1 or vm.shape[0] != vv.shape[0]:
        raise DimensionError(f"scale_rows: {vm.shape} rows * {vv.shape}")
    out = Tensor(vm * vv[:, None], _pair(m, mt, v, vt), None)
    if not out._parents:
        return out

    def bw():
        g = out.grad
        if mt:
            _accum(m, g * vv[:, None])
        if vt:
            _accum(v, (g * vm).sum(axis=1))

    out._backward = bw
    return out


def rows(x, indices) -> Tensor:
    """Gather rows of a matrix: (N,d)[idx] -> (len(idx), d)."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    idx = np.asarray(indices, dtype=np.int64)
    if vx.ndim != 2 or idx.ndim != 1:
        raise DimensionError(f"rows: {vx.shape} with index shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= vx.shape[0]):
        raise DimensionError(f"rows: index out of range for {vx.shape[0]} rows")
    out = Tensor(vx[idx], (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        g = np.zeros_like(vx)
        np.add.at(g, idx, out.grad)
        _accum(x, g)

    out._backward = bw
    return out


def row(x, index: int) -> Tensor:
    """Read one row of a matrix as a vector."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    if vx.ndim != 2 or not (0 <= index < vx.shape[0]):
        raise DimensionError(f"row: index {index} into {vx.shape}")
    out = Tensor(vx[index], (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        g = np.zeros_like(vx)
        g[index] += out.grad
        _accum(x, g)

    out._backward = bw
    return out


def column(x, index: int) -> Tensor:
    """Read one column of a matrix as a vector."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    if vx.ndim != 2 or not (0 <= index < vx.shape[1]):
        raise DimensionError(f"column: index {index} into {vx.shape}")
    out = Tensor(vx[:, index], (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        g = np.zeros_like(vx)
        g[:, index] += out.grad
        _accum(x, g)

    out._backward = bw
    return out


def take(x, indices) -> Tensor:
    """Gather entries of a vector: (N,)[idx] -> (len(idx),)."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    idx = np.asarray(indices, dtype=np.int64)
    if vx.ndim != 1 or idx.ndim != 1:
        raise DimensionError(f"take: {vx.shape} with index shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= vx.shape[0]):
        raise DimensionError(f"take: index out of range for {vx.shape[0]} entries")
    out = Tensor(vx[idx], (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        g = np.zeros_like(vx)
        np.add.at(g, idx, out.grad)
        _accum(x, g)

    out._backward = bw
    return out


def sum_all(x) -> Tensor:
    """Sum of all entries -> scalar."""
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    out = Tensor(vx.sum(), (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        _accum(x, np.full_like(vx, float(out.grad)))

    out._backward = bw
    return out


def cross_entropy(logits, target: int) -> Tensor:
    """Negative log softmax probability of ``target`` under a logit vector."""
    lt = isinstance(logits, Tensor)
    vz = logits.data if lt else np.asarray(logits, dtype=np.float64)
    if vz.ndim != 1:
        raise DimensionError(f"cross_entropy: need 1-d logits, got {vz.shape}")
    if not (0 <= target < vz.shape[0]):
        raise AutodiffError(f"cross_entropy: target {target} out of range {vz.shape[0]}")
    m = vz.max()
    lse = m + np.log(np.exp(vz - m).sum())
    out = Tensor(lse - vz[target], (logits,) if lt else (), None)
    if not out._parents:
        return out

    def bw():
        p = np.exp(vz - lse)
        p[target] -= 1.0
        _accum(logits, p * float(out.grad))

    out._backward = bw
    return out


def mean_cross_entropy_rows(logits, targets) -> Tensor:
    """Mean of per-row cross entropies for a (M,C) logit matrix."""
    lt = isinstance(logits, Tensor)
    vz = logits.data if lt else np.asarray(logits, dtype=np.float64)
    tg = np.asarray(targets, dtype=np.int64)
    if vz.ndim != 2 or tg.ndim != 1 or tg.shape[0] != vz.shape[0]:
        raise DimensionError(f"mean_cross_entropy_rows: {vz.shape} with targets {tg.shape}")
    if tg.size == 0:
        raise AutodiffError("mean_cross_entropy_rows: no rows")
    if tg.min() < 0 or tg.max() >= vz.shape[1]:
        raise AutodiffError("mean_cross_entropy_rows: target index out of range")
    m = vz.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(vz - m).sum(axis=1, keepdims=True))
    losses = lse[:, 0] - vz[np.arange(vz.shape[0]), tg]
    out = Tensor(losses.mean(), (logits,) if lt else (), None)
    if not out._parents:
        return out

    def bw():
        p = np.exp(vz - lse)
        p[np.arange(vz.shape[0]), tg] -= 1.0
        _accum(logits, p * (float(out.grad) / vz.shape[0]))

    out._backward = bw
    return out


def dropout(x, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero entries with probability ``rate``, rescale rest."""
    if not 0.0 <= rate < 1.0:
        raise AutodiffError(f"dropout rate {rate} outside [0, 1)")
    if rate == 0.0:
        return x if isinstance(x, Tensor) else Tensor(x)
    xt = isinstance(x, Tensor)
    vx = x.data if xt else np.asarray(x, dtype=np.float64)
    mask = (rng.random(vx.shape) >= rate) / (1.0 - rate)
    out = Tensor(vx * mask, (x,) if xt else (), None)
    if not out._parents:
        return out

    def bw():
        _accum(x, out.grad * mask)

    out._backward = bw
    return out
