"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Criteria 3 and 4 train many models on the synthetic long-dependency task and
take tens of minutes on one core; they are marked `slow`
(`pytest -m "not slow"` skips them).  Criterion 5 needs the licensed ATIS
corpus and is skipped unless MEMTAG_ATIS_TRAIN / MEMTAG_ATIS_TEST point at
CoNLL-format folds.

Run with `-s` (or read the captured stdout) to see the per-criterion lines.
"""

import math
import os
import time

import numpy as np
import pytest

from memtag import cells
from memtag.cells import CellState, Dims
from memtag.config import TrainConfig
from memtag.memory import ExternalMemory
from memtag.tensor_ops import EPS_COS
from memtag.training import (GRADCHECK_TOL, cell_param_count, evaluate_corpus,
                             gradcheck_all, make_corpora, matched_hidden_size,
                             run_training, sweep_slots, train_model)


def _report(criterion: int, label: str, ok: bool, detail: str):
    line = (f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: "
            f"{label} — {detail}")
    print(line)
    assert ok, line


# The shared small task configuration for criteria 3 and 4: default synthetic
# corpus (2000 train / 400 test sentences, dependency distance 8-12, window 3
# so the tagger cannot see the trigger from the slot marker).
def _task_cfg(**kw):
    base = dict(cell="rnn_em", d=16, p=32, m=16, n=8, seed=1,
                synth_n_train=2000, synth_n_test=400)
    base.update(kw)
    return TrainConfig(**base)


def test_criterion_1_gradient_correctness():
    """All four cells: BPTT vs central finite differences, rel err < 1e-4."""
    t0 = time.time()
    ok, results = gradcheck_all(log=None)
    elapsed = time.time() - t0
    worst = max(err for res in results.values() for err in res.values())
    _report(1, "gradient check (4 cell kinds)",
            ok and worst < GRADCHECK_TOL and elapsed < 60,
            f"worst rel err {worst:.3e} (tol {GRADCHECK_TOL:g}), "
            f"{elapsed:.1f}s (< 60s)")


def test_criterion_2_step_oracle():
    """One memory-cell step vs an independent scalar straight-line
    evaluation of read / hidden / key / sharpen / gate / write."""
    t0 = time.time()
    rng = np.random.default_rng(2024)
    p, m, n, D = 3, 2, 2, 4
    params = cells.init_params("rnn_em", Dims(D, p, m, n),
                               np.random.default_rng(11))
    for name, w in params.items():
        if w.ndim == 1:
            params[name] = rng.normal(scale=0.3, size=w.shape)
    M0 = rng.normal(size=(m, n))
    w0 = np.array([0.4, 0.6])
    mem = ExternalMemory(m, n, M=M0.copy(), w_prev=w0.copy())
    x = rng.normal(size=D)
    out = cells.step_forward("rnn_em", params,
                             CellState(h=np.zeros(p), memory=mem), x)

    # straight-line oracle: scalar loops and math.* only
    c = [sum(M0[i][j] * w0[j] for j in range(n)) for i in range(m)]
    h = [math.tanh(sum(params["W_ih"][i][j] * x[j] for j in range(D))
                   + sum(params["W_c"][i][j] * c[j] for j in range(m))
                   + params["b_h"][i]) for i in range(p)]
    k = [sum(params["W_k"][i][j] * h[j] for j in range(p)) + params["b_k"][i]
         for i in range(m)]
    beta = math.log(1.0 + math.exp(
        sum(params["W_beta"][0][j] * h[j] for j in range(p)) + params["b_beta"][0]))
    knorm = math.sqrt(sum(v * v for v in k))
    sims = [sum(k[i] * M0[i][col] for i in range(m))
            / (knorm * math.sqrt(sum(M0[i][col] ** 2 for i in range(m))) + EPS_COS)
            for col in range(n)]
    exps = [math.exp(beta * s) for s in sims]
    w_hat = [e / sum(exps) for e in exps]
    g = 1.0 / (1.0 + math.exp(-(sum(params["W_g"][0][j] * h[j] for j in range(p))
                                + params["b_g"][0])))
    w = [(1 - g) * w0[j] + g * w_hat[j] for j in range(n)]
    v = [sum(params["W_v"][i][j] * h[j] for j in range(p)) + params["b_v"][i]
         for i in range(m)]
    e = [1.0 / (1.0 + math.exp(-(sum(params["W_he"][i][j] * h[j] for j in range(p))
                                 + params["b_he"][i]))) for i in range(n)]
    M1 = [[(1.0 - w[col] * e[col]) * M0[row][col] + w[col] * v[row]
           for col in range(n)] for row in range(m)]

    err = max(float(np.max(np.abs(out.h - np.array(h)))),
              float(np.max(np.abs(out.memory.w_prev - np.array(w)))),
              float(np.max(np.abs(out.memory.M - np.array(M1)))))
    elapsed = time.time() - t0
    _report(2, "single-step oracle equivalence",
            err <= 1e-12 and elapsed < 1,
            f"max abs err {err:.3e} (<= 1e-12), {elapsed:.2f}s (< 1s)")


@pytest.mark.slow
def test_criterion_3_memory_capacity_trend(tmp_path):
    """Slot sweep n in {1, 2, 8, 64} with slot width m fixed: final training
    entropy at n=8 strictly below n=1, test F1 at n=8 above n=1."""
    t0 = time.time()
    cfg = _task_cfg(epochs=8, memory_policy="persistent",
                    out_dir=str(tmp_path / "sweep"))
    rows = sweep_slots(cfg, [1, 2, 8, 64], log=None)
    elapsed = time.time() - t0
    by_n = {r["n"]: r for r in rows}
    for r in rows:
        print(f"  n={r['n']:3d}  entropy={r['entropy']}  F1={r['f1']}"
              f"{'  ERROR: ' + r['error'] if r['error'] else ''}")
    ok = (all(not r["error"] for r in rows)
          and by_n[8]["entropy"] < by_n[1]["entropy"]
          and by_n[8]["f1"] > by_n[1]["f1"]
          and elapsed < 30 * 60)
    _report(3, "memory-capacity trend (slot sweep)", ok,
            f"entropy n=8 {by_n[8]['entropy']:.4f} < n=1 "
            f"{by_n[1]['entropy']:.4f}; F1 n=8 {by_n[8]['f1']:.2f} > n=1 "
            f"{by_n[1]['f1']:.2f}; {elapsed/60:.1f} min (< 30 min)")


@pytest.mark.slow
def test_criterion_4_architecture_ordering():
    """Parameter-matched (within 5% by cell parameter count) mean-over-5-seeds
    F1: memory cell >= GRNN, and memory cell beats the window-limited simple
    RNN by at least 1 F1 point.

    Evaluation protocol: per-sentence memory reset, 15 epochs.  The task's
    single long dependency lies outside the window, so the simple RNN cannot
    solve it while both gated/memory models can."""
    t0 = time.time()
    base = _task_cfg(epochs=15, memory_policy="reset_per_sentence")
    train, test, _ = make_corpora(base)
    d_window = base.d * base.window_k
    target = cell_param_count("rnn_em", d_window, base.p, base.m, base.n)
    sizes = {"rnn_em": base.p}
    for kind in ("grnn", "simple_rnn"):
        p = matched_hidden_size(kind, target, d_window)
        count = cell_param_count(kind, d_window, p)
        assert abs(count - target) / target < 0.05, (kind, p, count)
        sizes[kind] = p

    means = {}
    for kind, p in sizes.items():
        f1s = []
        for seed in range(1, 6):
            cfg = base.replace(cell=kind, p=p, seed=seed,
                               m=base.m if kind == "rnn_em" else 0,
                               n=base.n if kind == "rnn_em" else 0)
            res = train_model(cfg, train)
            report, _ = evaluate_corpus(res.model, test, cfg.memory_policy)
            f1s.append(report.f1)
        means[kind] = sum(f1s) / len(f1s)
        print(f"  {kind:11s} p={p:3d}  per-seed F1 "
              f"{['%.2f' % f for f in f1s]}  mean {means[kind]:.2f}")
    elapsed = time.time() - t0
    ok = (means["rnn_em"] >= means["grnn"]
          and means["rnn_em"] - means["simple_rnn"] >= 1.0
          and elapsed < 2 * 3600)
    _report(4, "architecture ordering at matched parameter budget", ok,
            f"mean F1 rnn_em {means['rnn_em']:.2f} >= grnn "
            f"{means['grnn']:.2f}; gap over simple_rnn "
            f"{means['rnn_em'] - means['simple_rnn']:.2f} >= 1.0; "
            f"{elapsed/60:.1f} min (< 2 h)")


@pytest.mark.slow
@pytest.mark.skipif(
    not (os.environ.get("MEMTAG_ATIS_TRAIN") and os.environ.get("MEMTAG_ATIS_TEST")),
    reason="licensed ATIS corpus not available; set MEMTAG_ATIS_TRAIN and "
           "MEMTAG_ATIS_TEST to CoNLL-format folds to run this criterion")
def test_criterion_5_atis_reproduction(tmp_path):
    """Default configuration on a user-supplied ATIS fold: test F1 must land
    in [94.3, 95.8]."""
    cfg = TrainConfig(train_path=os.environ["MEMTAG_ATIS_TRAIN"],
                      test_path=os.environ["MEMTAG_ATIS_TEST"],
                      out_dir=str(tmp_path / "atis"))
    out = run_training(cfg, log=None)
    f1 = out["test_f1"]
    _report(5, "published-range F1 on ATIS", 94.3 <= f1 <= 95.8,
            f"test F1 {f1:.2f} in [94.3, 95.8]")


def test_criterion_6_determinism(tmp_path):
    """Two runs from the same manifest: byte-identical entropy CSV and
    checkpoint."""
    t0 = time.time()
    cfg = TrainConfig(cell="rnn_em", d=8, p=8, m=6, n=3, epochs=3, seed=9,
                      synth_n_train=40, synth_n_test=10,
                      out_dir=str(tmp_path / "a"))
    out1 = run_training(cfg, log=None)
    out2 = run_training(cfg.replace(out_dir=str(tmp_path / "b")), log=None)
    same = True
    for key in ("entropy_csv", "checkpoint"):
        with open(out1[key], "rb") as fa, open(out2[key], "rb") as fb:
            same &= fa.read() == fb.read()
    elapsed = time.time() - t0
    _report(6, "bit-level determinism", same and elapsed < 5 * 60,
            f"entropy.csv and checkpoint.bin byte-identical across reruns; "
            f"{elapsed:.1f}s (< 5 min)")


def test_criterion_7_overfit_sanity():
    """A 10-sentence fixture must be driven to F1 = 100 within 200 epochs."""
    t0 = time.time()
    cfg = TrainConfig(cell="rnn_em", d=8, p=12, m=8, n=4, epochs=200, seed=3,
                      unk_singleton_prob=0.0,
                      synth_n_train=10, synth_n_test=2, synth_vocab_size=12,
                      synth_label_count=3, synth_len_min=6, synth_len_max=8,
                      synth_dist_min=2, synth_dist_max=3)
    train, _, _ = make_corpora(cfg)
    # passing the fixture as the dev corpus keeps the best-epoch parameters,
    # so best_dev_f1 is the best F1 seen across the 200 epochs
    res = train_model(cfg, train, dev_corpus=train)
    elapsed = time.time() - t0
    _report(7, "overfit sanity (10-sentence fixture)",
            res.best_dev_f1 == 100.0 and elapsed < 120,
            f"best F1 {res.best_dev_f1:.1f} within {cfg.epochs} epochs; "
            f"{elapsed:.1f}s (< 2 min)")
