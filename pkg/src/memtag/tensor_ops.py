"""Dense linear algebra primitives, nonlinearities with derivatives, and seeded RNG.

All numeric state in this package is float64 numpy arrays: matrices are 2-D,
vectors 1-D.  Gradients are hand-derived per cell and verified against finite
differences, which is why everything runs in double precision.
"""

from __future__ import annotations

import numpy as np

# Added to the cosine denominator so zero-norm keys are well defined.
EPS_COS = 1e-8


class ShapeError(ValueError):
    """Raised when operand shapes do not conform."""


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of a (r x k) and b (k x c)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    return a @ b


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x):
    """log(1 + exp(x)), stable for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    hi = x > 30.0
    lo = x < -30.0
    mid = ~(hi | lo)
    out[hi] = x[hi]
    # clamp away underflow so the output stays strictly positive
    out[lo] = np.maximum(np.exp(x[lo]), np.finfo(np.float64).tiny)
    out[mid] = np.log1p(np.exp(x[mid]))
    return out


_FUNCS = {
    "sigmoid": sigmoid,
    "tanh": lambda x: np.tanh(np.asarray(x, dtype=np.float64)),
    "softplus": softplus,
    "identity": lambda x: np.asarray(x, dtype=np.float64),
}

_GRADS = {
    # f'(x), written in terms of x
    "sigmoid": lambda x: sigmoid(x) * (1.0 - sigmoid(x)),
    "tanh": lambda x: 1.0 - np.tanh(x) ** 2,
    "softplus": sigmoid,
    "identity": lambda x: np.ones_like(np.asarray(x, dtype=np.float64)),
}


def elementwise(op_kind: str, x: np.ndarray) -> np.ndarray:
    """Apply a named scalar nonlinearity elementwise."""
    if op_kind not in _FUNCS:
        raise ValueError(f"unknown elementwise op {op_kind!r}")
    return _FUNCS[op_kind](x)


def elementwise_grad(op_kind: str, x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """upstream * f'(x) for the named nonlinearity."""
    if op_kind not in _GRADS:
        raise ValueError(f"unknown elementwise op {op_kind!r}")
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.shape != upstream.shape:
        raise ShapeError(f"elementwise_grad: {x.shape} vs upstream {upstream.shape}")
    return upstream * _GRADS[op_kind](x)


def softmax(x: np.ndarray) -> np.ndarray:
    """Softmax of a vector, computed with max-subtraction for stability."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("softmax of empty vector")
    e = np.exp(x - x.max())
    return e / e.sum()


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity u.v / (|u||v| + eps); 0 when both vectors are zero."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ShapeError(f"cosine: {u.shape} vs {v.shape}")
    denom = np.linalg.norm(u) * np.linalg.norm(v) + EPS_COS
    return float(u @ v / denom)


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator; identical seed gives an identical draw sequence."""
    return np.random.default_rng(seed)


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Weight matrix drawn uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out))."""
    if rows <= 0 or cols <= 0:
        raise ValueError(f"nonpositive matrix dims ({rows}, {cols})")
    r = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-r, r, size=(rows, cols))


def check_finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite values in {what}")
    return x
