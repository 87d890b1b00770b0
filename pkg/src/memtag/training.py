"""Training and verification harness: corpus preparation, the per-sentence
training loop, evaluation, finite-difference gradient checking, and the
memory-slot sweep.

Every run is driven by a TrainConfig and is bit-reproducible from its
manifest: all randomness flows from named substreams of the config seed.
"""

from __future__ import annotations

import os
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import cells, data, evaluation, tagger
from .cells import _param_shapes
from .config import TrainConfig, build_manifest
from .data import Corpus, SynthConfig, generate_synthetic, load_conll
from .evaluation import EntropyTracker, F1Report, score_f1
from .optim import AdaDeltaState, ClipConfig, adadelta_step, clip_gradients, sgd_step
from .tagger import TaggerModel, backward_sequence, forward_sequence, init_model


def make_corpora(cfg: TrainConfig):
    """(train, test, dev): from CoNLL paths when given, else synthetic."""
    if cfg.train_path:
        train = load_conll(cfg.train_path)
        test = None
        if cfg.test_path:
            test = load_conll(cfg.test_path, train.word_vocab, train.label_vocab)
        dev = None
        if cfg.dev_path:
            dev = load_conll(cfg.dev_path, train.word_vocab, train.label_vocab)
        return train, test, dev
    synth = SynthConfig(seed=cfg.synth_seed, vocab_size=cfg.synth_vocab_size,
                        label_count=cfg.synth_label_count,
                        len_min=cfg.synth_len_min, len_max=cfg.synth_len_max,
                        dist_min=cfg.synth_dist_min, dist_max=cfg.synth_dist_max,
                        n_train=cfg.synth_n_train, n_test=cfg.synth_n_test)
    train, test = generate_synthetic(synth)
    return train, test, None


def build_model(cfg: TrainConfig, corpus: Corpus) -> TaggerModel:
    rng = np.random.default_rng([cfg.seed, 0])
    return init_model(cfg.cell, vocab_size=len(corpus.word_vocab),
                      n_labels=len(corpus.label_vocab), d=cfg.d, p=cfg.p,
                      window_k=cfg.window_k, rng=rng, m=cfg.m, n=cfg.n,
                      pad_index=corpus.pad_index,
                      memory_init_value=cfg.memory_init_value)


def singleton_words(corpus: Corpus) -> frozenset:
    counts = Counter(w for seq in corpus.sequences for w in seq.words)
    return frozenset(w for w, c in counts.items() if c == 1)


@dataclass
class TrainResult:
    model: TaggerModel
    optim_state: object
    tracker: EntropyTracker
    best_dev_f1: float | None = None


def _carry_state(model: TaggerModel, prev_final, policy: str):
    """State for the next sentence: hidden state always resets; with the
    persistent policy the external memory carries over."""
    state = model.init_state()
    if (model.kind == "rnn_em" and policy == "persistent"
            and prev_final is not None):
        state.memory = prev_final.memory
    return state


def train_model(cfg: TrainConfig, train_corpus: Corpus,
                dev_corpus: Corpus | None = None,
                log=None) -> TrainResult:
    model = build_model(cfg, train_corpus)
    if cfg.optimizer == "adadelta":
        optim_state = AdaDeltaState(model.params, rho=cfg.rho, eps=cfg.eps)
    else:
        optim_state = None
    clip = ClipConfig(enabled=cfg.clip_enabled, max_norm=cfg.clip_max_norm)
    unk_rng = np.random.default_rng([cfg.seed, 1])
    singles = singleton_words(train_corpus) if cfg.unk_singleton_prob > 0 else frozenset()
    unk = train_corpus.unk_index
    tracker = EntropyTracker()
    best_f1, best_params = None, None

    for epoch in range(1, cfg.epochs + 1):
        total_nll, total_tokens = 0.0, 0
        final_state = None
        for seq in train_corpus.sequences:
            words = seq.words
            if singles:
                words = [unk if (w in singles and unk_rng.random() < cfg.unk_singleton_prob)
                         else w for w in words]
            state0 = _carry_state(model, final_state, cfg.memory_policy)
            _, final_state, loss, cache = forward_sequence(
                model, words, seq.labels, state0)
            total_nll += loss.total_nll
            total_tokens += loss.token_count
            grads = backward_sequence(model, cache)
            grads = clip_gradients(grads, clip)
            if cfg.optimizer == "adadelta":
                adadelta_step(model.params, grads, optim_state)
            else:
                sgd_step(model.params, grads, cfg.lr)
        entropy = total_nll / total_tokens
        tracker.append(epoch, entropy)
        dev_f1 = None
        if dev_corpus is not None:
            report, _ = evaluate_corpus(model, dev_corpus, cfg.memory_policy)
            dev_f1 = report.f1
            if best_f1 is None or dev_f1 > best_f1:
                best_f1 = dev_f1
                best_params = {k: (v.copy() if not isinstance(v, dict)
                                   else {k2: v2.copy() for k2, v2 in v.items()})
                               for k, v in model.params.items()}
        if log:
            msg = f"epoch {epoch}/{cfg.epochs}  entropy {entropy:.6f}"
            if dev_f1 is not None:
                msg += f"  dev F1 {dev_f1:.2f}"
            log(msg)

    if best_params is not None:
        model.params = best_params
    return TrainResult(model, optim_state, tracker, best_f1)


def evaluate_corpus(model: TaggerModel, corpus: Corpus, memory_policy: str):
    """Argmax decoding over the corpus; returns (F1Report, predictions)."""
    predictions = []
    final_state = None
    for seq in corpus.sequences:
        state0 = _carry_state(model, final_state, memory_policy)
        pred, final_state = tagger.predict_sequence(model, seq.words, state0)
        predictions.append(pred)
    gold = [corpus.label_strings(seq) for seq in corpus.sequences]
    predicted = [[corpus.label_vocab.tokens[i] for i in pred]
                 for pred in predictions]
    return score_f1(gold, predicted), predictions


def run_training(cfg: TrainConfig, log=print) -> dict:
    """Full training run with artifacts: manifest, per-epoch entropy CSV,
    checkpoint, and (when test data exists) a test F1 report."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = build_manifest(cfg)
    with open(os.path.join(cfg.out_dir, "manifest.txt"), "w") as fh:
        fh.write(manifest)

    train_corpus, test_corpus, dev_corpus = make_corpora(cfg)
    t0 = time.time()
    result = train_model(cfg, train_corpus, dev_corpus, log=log)
    elapsed = time.time() - t0

    entropy_path = os.path.join(cfg.out_dir, "entropy.csv")
    result.tracker.to_csv(entropy_path)
    ckpt_path = os.path.join(cfg.out_dir, "checkpoint.bin")
    data.save_checkpoint(result.model, result.optim_state, ckpt_path,
                         train_corpus.word_vocab, train_corpus.label_vocab)

    out = {"entropy_csv": entropy_path, "checkpoint": ckpt_path,
           "manifest": os.path.join(cfg.out_dir, "manifest.txt"),
           "final_entropy": result.tracker.rows[-1][1],
           "train_seconds": elapsed}
    if test_corpus is not None:
        report, preds = evaluate_corpus(result.model, test_corpus,
                                        cfg.memory_policy)
        pred_path = os.path.join(cfg.out_dir, "predictions.conll")
        data.write_conll(test_corpus, pred_path, preds)
        out["test_f1"] = report.f1
        out["predictions"] = pred_path
        if log:
            log(report.summary())
    return out


# --------------------------------------------------------- gradient check

GRADCHECK_TOL = 1e-4
FD_STEP = 1e-5


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def gradient_check(kind: str, seed: int = 7, seq_len: int = 6,
                   coords_per_tensor: int = 12, d: int = 3, p: int = 4,
                   m: int = 4, n: int = 3, n_labels: int = 3,
                   vocab: int = 8, corrupt: str | None = None) -> dict:
    """Compare full-sequence BPTT gradients against central finite
    differences on a tiny random model.

    Returns {tensor_name: worst relative error} covering every parameter
    tensor (embeddings and output layer included).  `corrupt` names a tensor
    whose analytic gradient is deliberately perturbed (test hook)."""
    rng = np.random.default_rng(seed)
    model = init_model(kind, vocab_size=vocab, n_labels=n_labels, d=d, p=p,
                       window_k=1, rng=rng, m=m, n=n, pad_index=0)
    words = rng.integers(1, vocab, size=seq_len).tolist()
    labels = rng.integers(0, n_labels, size=seq_len).tolist()

    def loss_value():
        _, _, loss, _ = forward_sequence(model, words, labels, model.init_state())
        return loss.total_nll

    _, _, _, cache = forward_sequence(model, words, labels, model.init_state())
    grads = backward_sequence(model, cache)

    flat_params = dict(_walk(model.params))
    flat_grads = dict(_walk(grads))
    if corrupt is not None:
        if corrupt not in flat_grads:
            raise KeyError(f"no tensor named {corrupt!r}")
        flat_grads[corrupt] = flat_grads[corrupt] + 0.01

    worst = {}
    for name, param in flat_params.items():
        g = flat_grads[name]
        size = param.size
        n_coords = min(size, coords_per_tensor)
        picks = rng.choice(size, size=n_coords, replace=False)
        w = 0.0
        flat = param.ravel()
        for idx in picks:
            orig = flat[idx]
            flat[idx] = orig + FD_STEP
            up = loss_value()
            flat[idx] = orig - FD_STEP
            down = loss_value()
            flat[idx] = orig
            fd = (up - down) / (2 * FD_STEP)
            w = max(w, _rel_err(float(g.ravel()[idx]), fd))
        worst[name] = w
    return worst


def _walk(tree, prefix=""):
    for key in sorted(tree):
        val = tree[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _walk(val, name + ".")
        else:
            yield name, val


def gradcheck_all(kinds=cells.CELL_KINDS, log=print, corrupt=None, **kw):
    """Run gradient_check for every cell kind; returns (all_pass, results).

    A corrupt tensor name applies only to the kinds that own that tensor."""
    if corrupt is not None:
        known = {"emb", "W_out", "b_out"}
        for kind in kinds:
            known |= {f"cell.{name}" for name in
                      _param_shapes(kind, cells.Dims(4, 4, 4, 3))}
        if corrupt not in known:
            raise KeyError(f"no tensor named {corrupt!r} in any cell kind")
    all_pass = True
    results = {}
    for kind in kinds:
        kind_tensors = {"emb", "W_out", "b_out"} | {
            f"cell.{name}" for name in _param_shapes(kind, cells.Dims(4, 4, 4, 3))}
        kind_corrupt = corrupt if corrupt in kind_tensors else None
        worst = gradient_check(kind, corrupt=kind_corrupt, **kw)
        results[kind] = worst
        for name, err in sorted(worst.items()):
            ok = err < GRADCHECK_TOL
            all_pass &= ok
            if log:
                log(f"{kind:11s} {name:18s} worst rel err {err:.3e} "
                    f"{'ok' if ok else 'FAIL'}")
    return all_pass, results


# ---------------------------------------------------------------- sweeps

def matched_hidden_size(kind: str, target_count: int, d_window: int,
                        m: int = 0, n: int = 0, p_max: int = 1024) -> int:
    """Hidden size whose cell parameter count is closest to target_count."""
    best_p, best_diff = 1, float("inf")
    for p in range(1, p_max + 1):
        count = sum(int(np.prod(shape)) for shape in
                    _param_shapes(kind, cells.Dims(d_window, p, m, n)).values())
        diff = abs(count - target_count)
        if diff < best_diff:
            best_p, best_diff = p, diff
        if count > target_count and diff > best_diff:
            break
    return best_p


def cell_param_count(kind: str, d_window: int, p: int, m: int = 0,
                     n: int = 0) -> int:
    return sum(int(np.prod(shape)) for shape in
               _param_shapes(kind, cells.Dims(d_window, p, m, n)).values())


def sweep_slots(cfg: TrainConfig, slot_list, log=print) -> list[dict]:
    """Train one model per slot count n (slot width m fixed); returns rows of
    {n, f1, entropy, error}.  Per-run failures are recorded and the sweep
    continues."""
    rows = []
    for slots in slot_list:
        try:
            run_cfg = cfg.replace(n=int(slots),
                                  out_dir=os.path.join(cfg.out_dir, f"n{slots}"))
            out = run_training(run_cfg, log=None)
            rows.append({"n": int(slots), "f1": out.get("test_f1"),
                         "entropy": out["final_entropy"], "error": ""})
            if log:
                log(f"n={slots}: F1={out.get('test_f1')}  "
                    f"entropy={out['final_entropy']:.6f}")
        except Exception as exc:  # sweep must survive per-run failures
            rows.append({"n": int(slots), "f1": None, "entropy": None,
                         "error": str(exc)})
            if log:
                log(f"n={slots}: FAILED ({exc})")
    return rows


def write_sweep_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,f1,entropy,error\n")
        for row in rows:
            f1 = "" if row["f1"] is None else f"{row['f1']:.17g}"
            ent = "" if row["entropy"] is None else f"{row['entropy']:.17g}"
            fh.write(f"{row['n']},{f1},{ent},{row['error']}\n")
