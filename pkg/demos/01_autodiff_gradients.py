"""The reverse-mode tape that every model component trains through.

Builds a tiny expression graph by hand, backpropagates, and checks one
gradient against a finite difference - the same check the test suite runs
across every operation at scale.
"""

import numpy as np

from rulereader import autodiff as ad

# f(W, x) = sum(sigmoid(W @ x) * x): a couple of ops composed.
rng = np.random.default_rng(0)
W = ad.Parameter("W", rng.normal(size=(3, 3)))
x = ad.Parameter("x", rng.normal(size=3))


def forward():
    return ad.sum_all(ad.mul(ad.sigmoid(ad.matvec(W, x)), x))


loss = forward()
print(f"forward value: {loss.data:.6f}")

ad.backward(loss)
print("gradient w.r.t. W:")
print(np.array_str(W.grad, precision=4, suppress_small=True))

# Finite-difference probe of one entry of W.
eps = 1e-6
W.data[1, 2] += eps
plus = forward().data
W.data[1, 2] -= 2 * eps
minus = forward().data
W.data[1, 2] += eps

numeric = (plus - minus) / (2 * eps)
print(f"\nanalytic dL/dW[1,2] = {W.grad[1, 2]:.8f}")
print(f"numeric  dL/dW[1,2] = {numeric:.8f}")
print(f"relative error      = {abs(W.grad[1, 2] - numeric) / max(abs(numeric), 1e-12):.2e}")

# Gradients accumulate until cleared, so a second backward doubles them.
before = W.grad[1, 2]
ad.backward(forward())
print(f"\naccumulation: grad after second backward = {W.grad[1, 2]:.8f} (= 2 x {before:.8f})")
