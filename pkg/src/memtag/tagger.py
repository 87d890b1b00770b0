"""End-to-end sequence tagger: embedding lookup, context windowing, a
recurrent cell, and a softmax output layer with cross-entropy loss.

The model factors the tag posterior over positions; each position sees the
concatenated embeddings of a (2k+1)-word context window.  Loss is the summed
negative log-likelihood in nats; the per-word value is what the evaluation
module tracks as training entropy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cells
from .cells import CellState, Dims, StateGrad
from .memory import DEFAULT_INIT_VALUE
from .tensor_ops import glorot_uniform, softmax


@dataclass
class SequenceLoss:
    total_nll: float
    token_count: int

    @property
    def per_word_nll(self) -> float:
        return self.total_nll / self.token_count


@dataclass
class TaggerModel:
    kind: str
    window_k: int              # context half-width; window size = 2k + 1
    d: int                     # embedding dimension
    p: int                     # hidden dimension
    L: int                     # number of labels
    vocab_size: int
    m: int = 0                 # memory slot width (rnn_em)
    n: int = 0                 # memory slot count (rnn_em)
    pad_index: int = 0
    memory_init_value: float = DEFAULT_INIT_VALUE
    params: dict = field(default=None)

    @property
    def d_window(self) -> int:
        return (2 * self.window_k + 1) * self.d

    @property
    def dims(self) -> Dims:
        return Dims(d_window=self.d_window, p=self.p, m=self.m, n=self.n)

    def init_state(self) -> CellState:
        return cells.init_state(self.kind, self.dims, self.memory_init_value)


def init_model(kind: str, vocab_size: int, n_labels: int, d: int, p: int,
               window_k: int, rng: np.random.Generator, m: int = 0,
               n: int = 0, pad_index: int = 0,
               memory_init_value: float = DEFAULT_INIT_VALUE) -> TaggerModel:
    model = TaggerModel(kind=kind, window_k=window_k, d=d, p=p, L=n_labels,
                        vocab_size=vocab_size, m=m, n=n, pad_index=pad_index,
                        memory_init_value=memory_init_value)
    model.params = {
        "emb": glorot_uniform(rng, vocab_size, d),
        "W_out": glorot_uniform(rng, n_labels, p),
        "b_out": np.zeros(n_labels),
        "cell": cells.init_params(kind, model.dims, rng),
    }
    return model


def zero_grads(model: TaggerModel) -> dict:
    return {"emb": np.zeros_like(model.params["emb"]),
            "W_out": np.zeros_like(model.params["W_out"]),
            "b_out": np.zeros_like(model.params["b_out"]),
            "cell": cells.zero_like_params(model.params["cell"])}


def window_indices(sentence, t: int, k: int, pad_index: int):
    """Word indices of the length-(2k+1) context window centered at t,
    out-of-range positions mapped to the padding token."""
    T = len(sentence)
    if not 0 <= t < T:
        raise IndexError(f"position {t} outside sentence of length {T}")
    return [sentence[t + off] if 0 <= t + off < T else pad_index
            for off in range(-k, k + 1)]


def window_input(sentence, t: int, k: int, embeddings: np.ndarray,
                 pad_index: int = 0) -> np.ndarray:
    """Concatenated context-window embeddings for position t."""
    idx = window_indices(sentence, t, k, pad_index)
    return embeddings[idx].ravel()


def forward_sequence(model: TaggerModel, words, labels=None,
                     init_state: CellState | None = None):
    """Run the cell over a sentence.

    Returns (probs, final_state, loss, cache).  probs is a (T, L) array of
    per-position label distributions.  loss is None when labels is None.
    cache holds per-step cell states for backward_sequence.
    """
    if len(words) == 0:
        raise ValueError("empty sentence")
    if labels is not None and len(labels) != len(words):
        raise ValueError(f"{len(words)} words vs {len(labels)} labels")
    emb = model.params["emb"]
    W_out, b_out = model.params["W_out"], model.params["b_out"]
    state = init_state if init_state is not None else model.init_state()

    probs = np.empty((len(words), model.L))
    states, xs = [], []
    total_nll = 0.0
    for t in range(len(words)):
        x = window_input(words, t, model.window_k, emb, model.pad_index)
        state = cells.step_forward(model.kind, model.params["cell"], state, x)
        probs[t] = softmax(W_out @ state.h + b_out)
        states.append(state)
        xs.append(x)
        if labels is not None:
            y = labels[t]
            if not 0 <= y < model.L:
                raise ValueError(f"label index {y} out of range (L={model.L})")
            total_nll -= np.log(max(probs[t, y], 1e-300))

    loss = SequenceLoss(total_nll, len(words)) if labels is not None else None
    cache = {"words": list(words), "labels": None if labels is None else list(labels),
             "states": states, "xs": xs, "probs": probs}
    return probs, state, loss, cache


def backward_sequence(model: TaggerModel, cache) -> dict:
    """Full-sequence BPTT; returns gradients mirroring model.params."""
    if cache.get("labels") is None:
        raise ValueError("backward_sequence needs a cache built with labels")
    words, labels = cache["words"], cache["labels"]
    states, xs, probs = cache["states"], cache["xs"], cache["probs"]
    W_out = model.params["W_out"]
    cell_params = model.params["cell"]
    grads = zero_grads(model)

    gstate = StateGrad.zero(model.kind, model.dims)
    for t in range(len(words) - 1, -1, -1):
        dlogits = probs[t].copy()
        dlogits[labels[t]] -= 1.0
        grads["W_out"] += np.outer(dlogits, states[t].h)
        grads["b_out"] += dlogits
        dh = W_out.T @ dlogits

        cgrads, dx, gstate = cells.step_backward(
            model.kind, cell_params, states[t], dh, gstate)
        for name, gval in cgrads.items():
            grads["cell"][name] += gval

        # scatter the window-input gradient back onto embedding rows
        idx = window_indices(words, t, model.window_k, model.pad_index)
        dx = dx.reshape(len(idx), model.d)
        for row, payload in zip(idx, dx):
            grads["emb"][row] += payload
    return grads


def predict_sequence(model: TaggerModel, words,
                     init_state: CellState | None = None):
    """Argmax decoding; returns (label indices, final_state)."""
    probs, final_state, _, _ = forward_sequence(model, words, None, init_state)
    return probs.argmax(axis=1).tolist(), final_state
