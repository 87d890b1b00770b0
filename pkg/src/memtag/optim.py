"""Parameter updates: AdaDelta (no learning rate) and plain SGD, plus
optional global-norm gradient clipping.

Parameters and gradients are nested dicts of float64 arrays with identical
structure; the small tree helpers below walk them in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_ops import ShapeError


def tree_leaves(tree, prefix=""):
    """Yield (dotted_name, array) pairs in sorted key order."""
    for key in sorted(tree):
        val = tree[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from tree_leaves(val, name + ".")
        else:
            yield name, val


def tree_map(fn, tree, *rest):
    out = {}
    for key, val in tree.items():
        others = [r[key] for r in rest]
        if isinstance(val, dict):
            out[key] = tree_map(fn, val, *others)
        else:
            out[key] = fn(val, *others)
    return out


def global_norm(grads) -> float:
    total = 0.0
    for _, g in tree_leaves(grads):
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


@dataclass
class ClipConfig:
    enabled: bool = False
    max_norm: float = 5.0

    def __post_init__(self):
        if self.enabled and self.max_norm <= 0:
            raise ValueError("max_norm must be positive when clipping is on")


def clip_gradients(grads, cfg: ClipConfig):
    """Rescale all gradients so the global L2 norm is at most max_norm."""
    if not cfg.enabled:
        return grads
    norm = global_norm(grads)
    if norm <= cfg.max_norm:
        return grads
    scale = cfg.max_norm / norm
    return tree_map(lambda g: g * scale, grads)


class AdaDeltaState:
    """Running E[g^2] and E[dx^2] accumulators, one per parameter tensor."""

    def __init__(self, params, rho: float = 0.95, eps: float = 1e-6):
        self.rho = rho
        self.eps = eps
        self.sq_grad = tree_map(np.zeros_like, params)
        self.sq_delta = tree_map(np.zeros_like, params)


def adadelta_step(params, grads, state: AdaDeltaState):
    """One AdaDelta update, in place on params.

    E[g^2] <- rho E[g^2] + (1-rho) g^2
    dx = -(RMS[dx] / RMS[g]) g
    E[dx^2] <- rho E[dx^2] + (1-rho) dx^2
    """
    rho, eps = state.rho, state.eps
    for (name, p), (_, g), (_, sg), (_, sd) in zip(
            tree_leaves(params), tree_leaves(grads),
            tree_leaves(state.sq_grad), tree_leaves(state.sq_delta)):
        if p.shape != g.shape:
            raise ShapeError(f"{name}: param {p.shape} vs grad {g.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {name}")
        sg *= rho
        sg += (1.0 - rho) * g * g
        delta = -np.sqrt((sd + eps) / (sg + eps)) * g
        sd *= rho
        sd += (1.0 - rho) * delta * delta
        p += delta
    return params, state


def sgd_step(params, grads, lr: float):
    """Plain SGD, in place on params (debugging baseline)."""
    for (name, p), (_, g) in zip(tree_leaves(params), tree_leaves(grads)):
        if p.shape != g.shape:
            raise ShapeError(f"{name}: param {p.shape} vs grad {g.shape}")
        p -= lr * g
    return params
