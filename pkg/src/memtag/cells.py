"""Recurrent cells with hand-derived gradients: simple RNN (Elman), LSTM,
GRNN (reset/update gates), and the memory-augmented cell ("rnn_em").

Every cell exposes the same surface: init_params / init_state / step_forward /
step_backward / count_params.  step_forward caches all intermediates on the
returned state; step_backward consumes that cache and returns exact analytic
gradients, which the test suite checks coordinate-by-coordinate against
central finite differences.

State conventions:
  - simple_rnn, grnn: recurrent state is h.
  - lstm: recurrent state is (h, cell_c).
  - rnn_em: h is NOT recurrent; the recurrent state is the external memory
    (M, w_prev).  Each step runs read -> hidden -> address -> interpolate ->
    write, in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import memory as em
from .tensor_ops import ShapeError, check_finite, glorot_uniform, sigmoid

CELL_KINDS = ("simple_rnn", "lstm", "grnn", "rnn_em")


@dataclass
class Dims:
    """Shape bundle: d_window is the full (windowed) input width, p the hidden
    size; m (slot width) and n (slot count) apply to rnn_em only."""

    d_window: int
    p: int
    m: int = 0
    n: int = 0


@dataclass
class CellState:
    h: np.ndarray
    cell_c: np.ndarray | None = None
    memory: em.ExternalMemory | None = None
    step_cache: dict | None = field(default=None, repr=False)


@dataclass
class StateGrad:
    """Gradient flowing backward into a step through the recurrent state."""

    h: np.ndarray | None = None
    cell_c: np.ndarray | None = None
    dM: np.ndarray | None = None
    dw: np.ndarray | None = None

    @staticmethod
    def zero(kind: str, dims: Dims) -> "StateGrad":
        g = StateGrad(h=np.zeros(dims.p))
        if kind == "lstm":
            g.cell_c = np.zeros(dims.p)
        if kind == "rnn_em":
            g.dM = np.zeros((dims.m, dims.n))
            g.dw = np.zeros(dims.n)
        return g


def _param_shapes(kind: str, dims: Dims) -> dict[str, tuple]:
    D, p, m, n = dims.d_window, dims.p, dims.m, dims.n
    if kind == "simple_rnn":
        return {"W_xh": (p, D), "W_hh": (p, p), "b_h": (p,)}
    if kind == "grnn":
        return {"W_xh": (p, D), "W_hh": (p, p), "b_h": (p,),
                "W_xr": (p, D), "W_hr": (p, p), "b_r": (p,),
                "W_xz": (p, D), "W_hz": (p, p), "b_z": (p,)}
    if kind == "lstm":
        return {"W_xi": (p, D), "W_hi": (p, p), "b_i": (p,),
                "W_xf": (p, D), "W_hf": (p, p), "b_f": (p,),
                "W_xo": (p, D), "W_ho": (p, p), "b_o": (p,),
                "W_xc": (p, D), "W_hc": (p, p), "b_c": (p,)}
    if kind == "rnn_em":
        return {"W_ih": (p, D), "W_c": (p, m), "b_h": (p,),
                "W_k": (m, p), "b_k": (m,),
                "W_beta": (1, p), "b_beta": (1,),
                "W_g": (1, p), "b_g": (1,),
                "W_v": (m, p), "b_v": (m,),
                "W_he": (n, p), "b_he": (n,)}
    raise ValueError(f"unknown cell kind {kind!r}")


def init_params(kind: str, dims: Dims, rng: np.random.Generator) -> dict:
    """Glorot-uniform matrices, zero biases."""
    if dims.d_window <= 0 or dims.p <= 0:
        raise ValueError(f"nonpositive dims {dims}")
    if kind == "rnn_em" and (dims.m <= 0 or dims.n <= 0):
        raise ValueError(f"rnn_em requires positive m, n; got {dims}")
    params = {}
    for name, shape in _param_shapes(kind, dims).items():
        if len(shape) == 2:
            params[name] = glorot_uniform(rng, *shape)
        else:
            params[name] = np.zeros(shape)
    return params


def zero_like_params(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def count_params(params: dict) -> int:
    """Total scalar count across all weight and bias tensors."""
    return int(sum(v.size for v in params.values()))


def init_state(kind: str, dims: Dims,
               memory_init_value: float = em.DEFAULT_INIT_VALUE) -> CellState:
    state = CellState(h=np.zeros(dims.p))
    if kind == "lstm":
        state.cell_c = np.zeros(dims.p)
    if kind == "rnn_em":
        state.memory = em.ExternalMemory(dims.m, dims.n,
                                         init_value=memory_init_value)
    return state


def addressing_params(params: dict) -> em.AddressingParams:
    return em.AddressingParams(
        W_k=params["W_k"], b_k=params["b_k"],
        W_beta=params["W_beta"], b_beta=params["b_beta"],
        W_g=params["W_g"], b_g=params["b_g"],
        W_v=params["W_v"], b_v=params["b_v"],
        W_he=params["W_he"], b_he=params["b_he"])


# ---------------------------------------------------------------- forward

def step_forward(kind: str, params: dict, state: CellState,
                 x: np.ndarray) -> CellState:
    x = np.asarray(x, dtype=np.float64).ravel()
    if kind == "simple_rnn":
        new = _forward_simple(params, state, x)
    elif kind == "grnn":
        new = _forward_grnn(params, state, x)
    elif kind == "lstm":
        new = _forward_lstm(params, state, x)
    elif kind == "rnn_em":
        new = _forward_rnn_em(params, state, x)
    else:
        raise ValueError(f"unknown cell kind {kind!r}")
    check_finite(new.h, f"{kind} hidden activity")
    return new


def _forward_simple(params, state, x):
    hp = state.h
    a = params["W_xh"] @ x + params["W_hh"] @ hp + params["b_h"]
    h = np.tanh(a)
    return CellState(h=h, step_cache={"x": x, "hp": hp, "h": h})


def _forward_grnn(params, state, x):
    hp = state.h
    r = sigmoid(params["W_xr"] @ x + params["W_hr"] @ hp + params["b_r"])
    z = sigmoid(params["W_xz"] @ x + params["W_hz"] @ hp + params["b_z"])
    rh = r * hp
    hhat = np.tanh(params["W_xh"] @ x + params["W_hh"] @ rh + params["b_h"])
    h = (1.0 - z) * hp + z * hhat
    return CellState(h=h, step_cache={"x": x, "hp": hp, "r": r, "z": z,
                                      "rh": rh, "hhat": hhat, "h": h})


def _forward_lstm(params, state, x):
    hp, cp = state.h, state.cell_c
    i = sigmoid(params["W_xi"] @ x + params["W_hi"] @ hp + params["b_i"])
    f = sigmoid(params["W_xf"] @ x + params["W_hf"] @ hp + params["b_f"])
    o = sigmoid(params["W_xo"] @ x + params["W_ho"] @ hp + params["b_o"])
    chat = np.tanh(params["W_xc"] @ x + params["W_hc"] @ hp + params["b_c"])
    c = f * cp + i * chat
    tc = np.tanh(c)
    h = o * tc
    return CellState(h=h, cell_c=c,
                     step_cache={"x": x, "hp": hp, "cp": cp, "i": i, "f": f,
                                 "o": o, "chat": chat, "c": c, "tc": tc,
                                 "h": h})


def _forward_rnn_em(params, state, x):
    mem = state.memory
    ap = addressing_params(params)
    # read with the previous step's memory and weight
    c_read = em.read(mem)
    h = np.tanh(params["W_ih"] @ x + params["W_c"] @ c_read + params["b_h"])
    addr = em.address_full(mem, ap, h)
    g = float(sigmoid(params["W_g"] @ h + params["b_g"])[0])
    w = em.interpolate_weight(mem.w_prev, addr["w_hat"], g)
    new_mem, wr = em.write_full(mem, ap, h, w)
    cache = {"x": x, "M": mem.M, "wp": mem.w_prev, "c_read": c_read, "h": h,
             "addr": addr, "g": g, "w": w, "write": wr}
    return CellState(h=h, memory=new_mem, step_cache=cache)


# ---------------------------------------------------------------- backward

def step_backward(kind: str, params: dict, cached_state: CellState,
                  grad_h: np.ndarray, grad_state_next: StateGrad):
    """Returns (grad_params, grad_x, grad_state_prev).

    grad_h is the loss gradient wrt this step's output h (e.g. from the
    output layer); grad_state_next carries the gradient arriving through the
    recurrent state from the following step.
    """
    cache = cached_state.step_cache
    if cache is None:
        raise ValueError("step_backward requires a state produced by "
                         "step_forward (missing cache)")
    grad_h = np.asarray(grad_h, dtype=np.float64).ravel()
    if kind == "simple_rnn":
        return _backward_simple(params, cache, grad_h, grad_state_next)
    if kind == "grnn":
        return _backward_grnn(params, cache, grad_h, grad_state_next)
    if kind == "lstm":
        return _backward_lstm(params, cache, grad_h, grad_state_next)
    if kind == "rnn_em":
        return _backward_rnn_em(params, cache, grad_h, grad_state_next)
    raise ValueError(f"unknown cell kind {kind!r}")


def _backward_simple(params, cache, grad_h, gsn):
    x, hp, h = cache["x"], cache["hp"], cache["h"]
    dh = grad_h + (gsn.h if gsn.h is not None else 0.0)
    da = (1.0 - h * h) * dh
    grads = {"W_xh": np.outer(da, x), "W_hh": np.outer(da, hp), "b_h": da}
    dx = params["W_xh"].T @ da
    dhp = params["W_hh"].T @ da
    return grads, dx, StateGrad(h=dhp)


def _backward_grnn(params, cache, grad_h, gsn):
    x, hp = cache["x"], cache["hp"]
    r, z, rh, hhat = cache["r"], cache["z"], cache["rh"], cache["hhat"]
    dh = grad_h + (gsn.h if gsn.h is not None else 0.0)

    dz = dh * (hhat - hp)
    dhhat = dh * z
    dhp = dh * (1.0 - z)

    dahat = (1.0 - hhat * hhat) * dhhat
    drh = params["W_hh"].T @ dahat
    dr = drh * hp
    dhp = dhp + drh * r

    dar = r * (1.0 - r) * dr
    daz = z * (1.0 - z) * dz
    dhp = dhp + params["W_hr"].T @ dar + params["W_hz"].T @ daz
    dx = (params["W_xh"].T @ dahat + params["W_xr"].T @ dar
          + params["W_xz"].T @ daz)

    grads = {"W_xh": np.outer(dahat, x), "W_hh": np.outer(dahat, rh),
             "b_h": dahat,
             "W_xr": np.outer(dar, x), "W_hr": np.outer(dar, hp), "b_r": dar,
             "W_xz": np.outer(daz, x), "W_hz": np.outer(daz, hp), "b_z": daz}
    return grads, dx, StateGrad(h=dhp)


def _backward_lstm(params, cache, grad_h, gsn):
    x, hp, cp = cache["x"], cache["hp"], cache["cp"]
    i, f, o, chat, tc = cache["i"], cache["f"], cache["o"], cache["chat"], cache["tc"]
    dh = grad_h + (gsn.h if gsn.h is not None else 0.0)
    dc = dh * o * (1.0 - tc * tc)
    if gsn.cell_c is not None:
        dc = dc + gsn.cell_c

    do = dh * tc
    df = dc * cp
    di = dc * chat
    dchat = dc * i
    dcp = dc * f

    dai = i * (1.0 - i) * di
    daf = f * (1.0 - f) * df
    dao = o * (1.0 - o) * do
    dac = (1.0 - chat * chat) * dchat

    dhp = (params["W_hi"].T @ dai + params["W_hf"].T @ daf
           + params["W_ho"].T @ dao + params["W_hc"].T @ dac)
    dx = (params["W_xi"].T @ dai + params["W_xf"].T @ daf
          + params["W_xo"].T @ dao + params["W_xc"].T @ dac)

    grads = {"W_xi": np.outer(dai, x), "W_hi": np.outer(dai, hp), "b_i": dai,
             "W_xf": np.outer(daf, x), "W_hf": np.outer(daf, hp), "b_f": daf,
             "W_xo": np.outer(dao, x), "W_ho": np.outer(dao, hp), "b_o": dao,
             "W_xc": np.outer(dac, x), "W_hc": np.outer(dac, hp), "b_c": dac}
    return grads, dx, StateGrad(h=dhp, cell_c=dcp)


def _backward_rnn_em(params, cache, grad_h, gsn):
    x, M, wp = cache["x"], cache["M"], cache["wp"]
    c_read, h, g, w = cache["c_read"], cache["h"], cache["g"], cache["w"]
    addr, wr = cache["addr"], cache["write"]
    k, beta, sims = addr["k"], addr["beta"], addr["sims"]
    k_norm, col_norms, denom = addr["k_norm"], addr["col_norms"], addr["denom"]
    w_hat, a_beta = addr["w_hat"], addr["a_beta"]
    v, e, f = wr["v"], wr["e"], wr["f"]

    dM_next = gsn.dM if gsn.dM is not None else np.zeros_like(M)
    dw = (gsn.dw.copy() if gsn.dw is not None else np.zeros_like(w))

    # memory write: M' = M * f[None, :] + outer(v, w)
    dM_prev = dM_next * f[None, :]
    df = (dM_next * M).sum(axis=0)
    dv = dM_next @ w
    dw += v @ dM_next

    # forget gate f = 1 - w * e
    dw += -df * e
    de = -df * w

    # interpolation w = (1 - g) * wp + g * w_hat
    dwp = (1.0 - g) * dw
    dw_hat = g * dw
    dg = float(dw @ (w_hat - wp))

    # softmax over z = beta * sims
    dz = w_hat * (dw_hat - float(dw_hat @ w_hat))
    dbeta = float(dz @ sims)
    ds = beta * dz

    # cosine similarities against each column of the pre-write memory
    k_norm_safe = max(k_norm, 1e-300)
    col_safe = np.maximum(col_norms, 1e-300)
    dk = M @ (ds / denom) - k * float(ds @ (sims * col_norms / denom)) / k_norm_safe
    dM_prev = dM_prev + np.outer(k, ds / denom) \
        - M * (ds * sims * k_norm / (col_safe * denom))[None, :]

    # scalar gates and linear maps from h
    da_beta = sigmoid(np.array([a_beta]))[0] * dbeta
    da_g = g * (1.0 - g) * dg
    da_e = e * (1.0 - e) * de

    dh = grad_h.copy()
    dh += params["W_k"].T @ dk
    dh += params["W_beta"][0] * da_beta
    dh += params["W_g"][0] * da_g
    dh += params["W_v"].T @ dv
    dh += params["W_he"].T @ da_e

    # hidden h = tanh(W_ih x + W_c c_read + b_h)
    da_h = (1.0 - h * h) * dh
    dx = params["W_ih"].T @ da_h
    dc = params["W_c"].T @ da_h

    # read c = M @ wp (previous memory and weight)
    dM_prev = dM_prev + np.outer(dc, wp)
    dwp = dwp + M.T @ dc

    grads = {"W_ih": np.outer(da_h, x), "W_c": np.outer(da_h, c_read),
             "b_h": da_h,
             "W_k": np.outer(dk, h), "b_k": dk,
             "W_beta": da_beta * h[None, :], "b_beta": np.array([da_beta]),
             "W_g": da_g * h[None, :], "b_g": np.array([da_g]),
             "W_v": np.outer(dv, h), "b_v": dv,
             "W_he": np.outer(da_e, h), "b_he": da_e}
    return grads, dx, StateGrad(dM=dM_prev, dw=dwp)
