"""External memory: an m x n slot matrix with content-based (cosine) addressing.

The memory M has n slots of m elements each.  A read weight vector w over the
slots is carried between timesteps; it is produced by sharpened cosine
similarity between a generated key and each slot, then interpolated with the
previous weight by a scalar gate.  Writes couple erasure to the read weight:
per slot, M'(:,c) = f(c) * M(:,c) + w(c) * v with f = 1 - w * e, so slots that
are not read are left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor_ops import ShapeError, sigmoid, softmax, softplus, EPS_COS

DEFAULT_INIT_VALUE = 0.1


@dataclass
class ExternalMemory:
    """Memory matrix plus the read weight carried from the previous step."""

    slot_dim: int          # m
    slot_count: int        # n
    M: np.ndarray = field(default=None)        # (m, n)
    w_prev: np.ndarray = field(default=None)   # (n,), on the simplex
    init_value: float = DEFAULT_INIT_VALUE

    def __post_init__(self):
        if self.M is None:
            self.M = np.full((self.slot_dim, self.slot_count), self.init_value)
        if self.w_prev is None:
            self.w_prev = np.full(self.slot_count, 1.0 / self.slot_count)
        self.M = np.asarray(self.M, dtype=np.float64)
        self.w_prev = np.asarray(self.w_prev, dtype=np.float64)
        if self.M.shape != (self.slot_dim, self.slot_count):
            raise ShapeError(f"memory shape {self.M.shape}, expected "
                             f"({self.slot_dim}, {self.slot_count})")
        if self.w_prev.shape != (self.slot_count,):
            raise ShapeError(f"read weight shape {self.w_prev.shape}, expected "
                             f"({self.slot_count},)")

    def copy(self) -> "ExternalMemory":
        return ExternalMemory(self.slot_dim, self.slot_count,
                              self.M.copy(), self.w_prev.copy(), self.init_value)


@dataclass
class AddressingParams:
    """Weights mapping the hidden activity to key, sharpening, gate, content
    and erase signals.  Views into the owning cell's parameter dict."""

    W_k: np.ndarray    # (m, p)
    b_k: np.ndarray    # (m,)
    W_beta: np.ndarray  # (1, p)
    b_beta: np.ndarray  # scalar, stored (1,)
    W_g: np.ndarray    # (1, p)
    b_g: np.ndarray    # (1,)
    W_v: np.ndarray    # (m, p)
    b_v: np.ndarray    # (m,)
    W_he: np.ndarray   # (n, p)
    b_he: np.ndarray   # (n,)


def _cosine_columns(k: np.ndarray, M: np.ndarray):
    """Cosine similarity of k against every memory column, with norms cached
    for the backward pass."""
    col_norms = np.linalg.norm(M, axis=0)
    k_norm = np.linalg.norm(k)
    denom = k_norm * col_norms + EPS_COS
    sims = (k @ M) / denom
    return sims, k_norm, col_norms, denom


def address(mem: ExternalMemory, params: AddressingParams, h: np.ndarray):
    """Content addressing: key k = W_k h + b_k, sharpening beta = softplus(.),
    and w_hat = softmax(beta * cos(k, M(:,c))).  Returns (w_hat, beta, k)."""
    full = address_full(mem, params, h)
    return full["w_hat"], full["beta"], full["k"]


def address_full(mem: ExternalMemory, params: AddressingParams, h: np.ndarray) -> dict:
    """address() plus every intermediate the backward pass needs."""
    h = np.asarray(h, dtype=np.float64).ravel()
    if h.shape[0] != params.W_k.shape[1]:
        raise ShapeError(f"hidden vector length {h.shape[0]} vs W_k {params.W_k.shape}")
    k = params.W_k @ h + params.b_k
    a_beta = float((params.W_beta @ h + params.b_beta)[0])
    beta = float(softplus(np.array([a_beta]))[0])
    sims, k_norm, col_norms, denom = _cosine_columns(k, mem.M)
    w_hat = softmax(beta * sims)
    return {"w_hat": w_hat, "beta": beta, "k": k, "a_beta": a_beta,
            "sims": sims, "k_norm": k_norm, "col_norms": col_norms,
            "denom": denom}


def interpolate_weight(w_prev: np.ndarray, w_hat: np.ndarray, g: float) -> np.ndarray:
    """w = (1 - g) * w_prev + g * w_hat; convex, so the simplex is preserved."""
    if not 0.0 <= g <= 1.0:
        raise ValueError(f"interpolation gate g={g} outside [0, 1]")
    w_prev = np.asarray(w_prev, dtype=np.float64)
    w_hat = np.asarray(w_hat, dtype=np.float64)
    if w_prev.shape != w_hat.shape:
        raise ShapeError(f"interpolate: {w_prev.shape} vs {w_hat.shape}")
    return (1.0 - g) * w_prev + g * w_hat


def read(mem: ExternalMemory) -> np.ndarray:
    """Content retrieved with the previous step's memory and weight: c = M w."""
    return mem.M @ mem.w_prev


def write(mem: ExternalMemory, params: AddressingParams, h: np.ndarray,
          w: np.ndarray) -> ExternalMemory:
    """Write new content v = W_v h + b_v under forget gate f = 1 - w * e.

    Per slot: M'(:,c) = f(c) * M(:,c) + w(c) * v.  Returns a new memory with
    w stored as the next step's w_prev; the input memory is left unchanged.
    """
    h = np.asarray(h, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != mem.slot_count:
        raise ShapeError(f"write weight length {w.shape[0]} vs {mem.slot_count} slots")
    v = params.W_v @ h + params.b_v
    e = sigmoid(params.W_he @ h + params.b_he)
    f = 1.0 - w * e
    M_new = mem.M * f[None, :] + np.outer(v, w)
    return ExternalMemory(mem.slot_dim, mem.slot_count, M_new, w.copy(),
                          mem.init_value)


def write_full(mem: ExternalMemory, params: AddressingParams, h: np.ndarray,
               w: np.ndarray):
    """write() plus the gate intermediates needed for the backward pass."""
    h = np.asarray(h, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    v = params.W_v @ h + params.b_v
    a_e = params.W_he @ h + params.b_he
    e = sigmoid(a_e)
    f = 1.0 - w * e
    M_new = mem.M * f[None, :] + np.outer(v, w)
    new_mem = ExternalMemory(mem.slot_dim, mem.slot_count, M_new, w.copy(),
                             mem.init_value)
    return new_mem, {"v": v, "a_e": a_e, "e": e, "f": f}


def reset(mem: ExternalMemory) -> ExternalMemory:
    """Fresh memory: M filled with init_value, uniform read weight."""
    return ExternalMemory(mem.slot_dim, mem.slot_count, init_value=mem.init_value)
