"""Command-line entry point: train, eval, gradcheck, sweep-slots.

Flags mirror TrainConfig fields; a config/manifest file may be given instead
and individual flags override it.  MEMTAG_OUT_DIR overrides the output
directory."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields

from . import data, training
from .config import TrainConfig
from .evaluation import write_f1_csv
from .training import GRADCHECK_TOL


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="config or manifest file to load")
    for f in fields(TrainConfig):
        flag = "--" + f.name.replace("_", "-")
        if isinstance(f.default, bool):
            parser.add_argument(flag, type=str, choices=["true", "false"],
                                default=None, help=f"(default {f.default})")
        else:
            parser.add_argument(flag, type=type(f.default), default=None,
                                help=f"(default {f.default})")


def _build_config(args) -> TrainConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = TrainConfig.from_text(fh.read())
    else:
        cfg = TrainConfig()
    overrides = {}
    for f in fields(TrainConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = (val == "true") if isinstance(f.default, bool) else val
    if overrides:
        cfg = cfg.replace(**overrides)
    env_out = os.environ.get("MEMTAG_OUT_DIR")
    if env_out:
        cfg = cfg.replace(out_dir=env_out)
    return cfg


def cmd_train(args) -> int:
    cfg = _build_config(args)
    out = training.run_training(cfg, log=print)
    print(f"entropy csv: {out['entropy_csv']}")
    print(f"checkpoint:  {out['checkpoint']}")
    if "test_f1" in out:
        print(f"test F1: {out['test_f1']:.2f}")
    return 0


def cmd_eval(args) -> int:
    if not os.path.exists(args.checkpoint):
        print(f"error: checkpoint {args.checkpoint!r} not found", file=sys.stderr)
        return 2
    model, _, word_vocab, label_vocab = data.load_checkpoint(args.checkpoint)
    if word_vocab is None or label_vocab is None:
        print("error: checkpoint carries no vocabulary tables", file=sys.stderr)
        return 2
    corpus = data.load_conll(args.data, word_vocab, label_vocab)
    report, preds = training.evaluate_corpus(model, corpus, args.memory_policy)
    print(report.summary())
    out_path = args.predictions or "predictions.conll"
    data.write_conll(corpus, out_path, preds)
    print(f"predictions: {out_path}")
    if args.f1_csv:
        write_f1_csv(args.f1_csv,
                     [(lab, stats["f1"]) for lab, stats in report.per_label.items()],
                     header=("label", "f1"))
    return 0


def cmd_gradcheck(args) -> int:
    ok, _ = training.gradcheck_all(seed=args.seed, corrupt=args.corrupt)
    print("gradcheck: " + ("PASS" if ok else "FAIL")
          + f" (tolerance {GRADCHECK_TOL:g})")
    return 0 if ok else 1


def cmd_sweep_slots(args) -> int:
    cfg = _build_config(args)
    slot_list = [int(s) for s in args.slots.split(",")]
    rows = training.sweep_slots(cfg, slot_list, log=print)
    os.makedirs(cfg.out_dir, exist_ok=True)
    csv_path = os.path.join(cfg.out_dir, "sweep.csv")
    training.write_sweep_csv(rows, csv_path)
    print(f"sweep table: {csv_path}")
    return 0 if all(not r["error"] for r in rows) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="memtag",
        description="Sequence tagger with an external-memory recurrent cell "
                    "and simple-RNN / LSTM / GRNN baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and write artifacts")
    _add_config_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a CoNLL file")
    p_eval.add_argument("checkpoint")
    p_eval.add_argument("data")
    p_eval.add_argument("--memory-policy", default="persistent",
                        choices=["persistent", "reset_per_sentence"])
    p_eval.add_argument("--predictions", help="output CoNLL path")
    p_eval.add_argument("--f1-csv", help="per-label F1 CSV path")
    p_eval.set_defaults(func=cmd_eval)

    p_gc = sub.add_parser("gradcheck",
                          help="finite-difference check of every cell kind")
    p_gc.add_argument("--seed", type=int, default=7)
    p_gc.add_argument("--corrupt", default=None,
                      help="tensor name whose gradient is deliberately "
                           "perturbed (fault-injection hook)")
    p_gc.set_defaults(func=cmd_gradcheck)

    p_sw = sub.add_parser("sweep-slots",
                          help="train one model per slot count, fixed slot width")
    _add_config_flags(p_sw)
    p_sw.add_argument("--slots", default="1,2,4,8,16,32,64,128,256,512",
                      help="comma-separated slot counts")
    p_sw.set_defaults(func=cmd_sweep_slots)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
