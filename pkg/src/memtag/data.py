"""Corpus ingestion and generation.

Two-column CoNLL-style files ("token<TAB or space>label", blank line between
sentences) are the ingestion contract.  A deterministic synthetic generator
produces a long-dependency slot-filling task: each sentence contains a trigger
token whose identity fixes the label of a marker token several positions
later, so per-word labels are a pure function of the visible sequence and a
perfect tagger scores F1 = 100.

Checkpoints are a JSON text header followed by little-endian float64 tensor
blocks; round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .memory import DEFAULT_INIT_VALUE
from .tagger import TaggerModel

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
NULL_LABEL = "O"

CHECKPOINT_MAGIC = b"MTCK"
CHECKPOINT_VERSION = 1


class Vocab:
    """Token <-> index map, insertion-ordered by first occurrence."""

    def __init__(self, tokens=()):
        self.tokens: list[str] = []
        self.index: dict[str, int] = {}
        for tok in tokens:
            self.add(tok)

    def add(self, token: str) -> int:
        if token not in self.index:
            self.index[token] = len(self.tokens)
            self.tokens.append(token)
        return self.index[token]

    def get(self, token: str, default: int | None = None) -> int:
        if token in self.index:
            return self.index[token]
        if default is None:
            raise KeyError(token)
        return default

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index


@dataclass
class TaggedSequence:
    words: list[int]
    labels: list[int]
    raw_tokens: list[str]

    def __post_init__(self):
        if len(self.words) != len(self.labels):
            raise ValueError(f"{len(self.words)} words vs {len(self.labels)} labels")
        if not self.words:
            raise ValueError("empty sequence")

    def __len__(self):
        return len(self.words)


@dataclass
class Corpus:
    sequences: list[TaggedSequence]
    word_vocab: Vocab
    label_vocab: Vocab

    @property
    def pad_index(self) -> int:
        return self.word_vocab.index[PAD_TOKEN]

    @property
    def unk_index(self) -> int:
        return self.word_vocab.index[UNK_TOKEN]

    def token_count(self) -> int:
        return sum(len(s) for s in self.sequences)

    def label_strings(self, seq: TaggedSequence) -> list[str]:
        return [self.label_vocab.tokens[i] for i in seq.labels]


def new_word_vocab() -> Vocab:
    return Vocab([PAD_TOKEN, UNK_TOKEN])


def load_conll(path, word_vocab: Vocab | None = None,
               label_vocab: Vocab | None = None) -> Corpus:
    """Parse a two-column file.  With no vocabs given, builds them from the
    file (training use); with vocabs given, unknown tokens map to UNK and
    unknown labels are an error."""
    build = word_vocab is None
    if build:
        word_vocab = new_word_vocab()
        label_vocab = Vocab()
    elif label_vocab is None:
        raise ValueError("word_vocab given without label_vocab")

    sequences = []
    toks, labs, raw = [], [], []
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    if not any(line.strip() for line in lines):
        raise ValueError(f"{path}: empty corpus file")

    def flush():
        if toks:
            sequences.append(TaggedSequence(list(toks), list(labs), list(raw)))
            toks.clear()
            labs.clear()
            raw.clear()

    unk = word_vocab.index[UNK_TOKEN]
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            flush()
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'token label', got {line!r}")
        token, label = parts
        if build:
            toks.append(word_vocab.add(token))
            labs.append(label_vocab.add(label))
        else:
            toks.append(word_vocab.get(token, unk))
            if label not in label_vocab:
                raise ValueError(f"{path}:{lineno}: label {label!r} not in vocabulary")
            labs.append(label_vocab.index[label])
        raw.append(token)
    flush()
    return Corpus(sequences, word_vocab, label_vocab)


def write_conll(corpus: Corpus, path, predictions=None):
    """Write token<TAB>label lines; with predictions, a third column is
    added (token, gold, predicted)."""
    with open(path, "w", encoding="utf-8") as fh:
        for si, seq in enumerate(corpus.sequences):
            for wi in range(len(seq)):
                row = [seq.raw_tokens[wi], corpus.label_vocab.tokens[seq.labels[wi]]]
                if predictions is not None:
                    row.append(corpus.label_vocab.tokens[predictions[si][wi]])
                fh.write("\t".join(row) + "\n")
            fh.write("\n")


# ------------------------------------------------------------- synthetic

@dataclass
class SynthConfig:
    seed: int = 12345
    vocab_size: int = 40          # filler word inventory
    label_count: int = 8          # distinct slot labels / trigger types
    len_min: int = 14
    len_max: int = 20
    dist_min: int = 8
    dist_max: int = 12
    n_train: int = 2000
    n_test: int = 400

    def __post_init__(self):
        if self.dist_max >= self.len_min:
            raise ValueError("dependency distance must fit inside the "
                             f"shortest sentence (dist_max={self.dist_max}, "
                             f"len_min={self.len_min})")
        if min(self.vocab_size, self.label_count, self.len_min,
               self.n_train, self.n_test) <= 0:
            raise ValueError(f"inconsistent synthetic config {self}")


def _synth_sentence(cfg: SynthConfig, rng: np.random.Generator):
    T = int(rng.integers(cfg.len_min, cfg.len_max + 1))
    dist = int(rng.integers(cfg.dist_min, cfg.dist_max + 1))
    pos = int(rng.integers(0, T - dist))
    trig = int(rng.integers(0, cfg.label_count))
    tokens = [f"w{int(rng.integers(0, cfg.vocab_size))}" for _ in range(T)]
    tokens[pos] = f"trig{trig}"
    tokens[pos + dist] = "slot"
    labels = [NULL_LABEL] * T
    labels[pos + dist] = f"L{trig}"
    return tokens, labels


def generate_synthetic(cfg: SynthConfig):
    """Deterministic (train, test) corpora; test sentences never duplicate a
    training sentence."""
    word_vocab = new_word_vocab()
    label_vocab = Vocab()
    label_vocab.add(NULL_LABEL)
    # fixed inventories so vocab indices do not depend on draw order
    for i in range(cfg.vocab_size):
        word_vocab.add(f"w{i}")
    for j in range(cfg.label_count):
        word_vocab.add(f"trig{j}")
        label_vocab.add(f"L{j}")
    word_vocab.add("slot")

    def build(n, rng, forbidden):
        seqs = []
        while len(seqs) < n:
            tokens, labels = _synth_sentence(cfg, rng)
            key = tuple(tokens)
            if key in forbidden:
                continue
            seqs.append(TaggedSequence(
                [word_vocab.index[t] for t in tokens],
                [label_vocab.index[l] for l in labels],
                tokens))
        return seqs

    rng_train = np.random.default_rng([cfg.seed, 0])
    rng_test = np.random.default_rng([cfg.seed, 1])
    train_seqs = build(cfg.n_train, rng_train, frozenset())
    seen = {tuple(s.raw_tokens) for s in train_seqs}
    test_seqs = build(cfg.n_test, rng_test, seen)
    return (Corpus(train_seqs, word_vocab, label_vocab),
            Corpus(test_seqs, word_vocab, label_vocab))


# ------------------------------------------------------------ checkpoints

def _flatten_params(params, prefix=""):
    for key in sorted(params):
        val = params[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _flatten_params(val, name + ".")
        else:
            yield name, np.asarray(val, dtype=np.float64)


def _unflatten(pairs):
    tree = {}
    for name, arr in pairs:
        node = tree
        parts = name.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = arr
    return tree


def save_checkpoint(model: TaggerModel, optim_state, path,
                    word_vocab: Vocab | None = None,
                    label_vocab: Vocab | None = None):
    """JSON header + raw little-endian float64 blocks.  optim_state may be an
    AdaDeltaState or None."""
    tensors = list(_flatten_params({"model": model.params}))
    opt_meta = None
    if optim_state is not None:
        opt_meta = {"rho": optim_state.rho, "eps": optim_state.eps}
        tensors += list(_flatten_params({"optim.sq_grad": optim_state.sq_grad,
                                         "optim.sq_delta": optim_state.sq_delta}))
    header = {
        "version": CHECKPOINT_VERSION,
        "model": {"kind": model.kind, "window_k": model.window_k,
                  "d": model.d, "p": model.p, "L": model.L,
                  "vocab_size": model.vocab_size, "m": model.m, "n": model.n,
                  "pad_index": model.pad_index,
                  "memory_init_value": model.memory_init_value},
        "optim": opt_meta,
        "word_vocab": None if word_vocab is None else word_vocab.tokens,
        "label_vocab": None if label_vocab is None else label_vocab.tokens,
        "tensors": [{"name": name, "shape": list(arr.shape)}
                    for name, arr in tensors],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for _, arr in tensors:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


class CheckpointError(ValueError):
    pass


def load_checkpoint(path):
    """Returns (model, optim_state, word_vocab, label_vocab)."""
    from .optim import AdaDeltaState  # local import avoids a cycle

    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(raw[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from exc

    offset = 12 + hlen
    pairs = []
    for spec_ in header["tensors"]:
        shape = tuple(spec_["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8 if shape else 8
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if offset + count * 8 > len(raw):
            raise CheckpointError(f"{path}: truncated tensor block "
                                  f"{spec_['name']!r}")
        arr = np.frombuffer(raw, dtype="<f8", count=count,
                            offset=offset).astype(np.float64).reshape(shape)
        offset += count * 8
        pairs.append((spec_["name"], arr))
    tree = _unflatten(pairs)

    meta = header["model"]
    model = TaggerModel(kind=meta["kind"], window_k=meta["window_k"],
                        d=meta["d"], p=meta["p"], L=meta["L"],
                        vocab_size=meta["vocab_size"], m=meta["m"],
                        n=meta["n"], pad_index=meta["pad_index"],
                        memory_init_value=meta.get("memory_init_value",
                                                   DEFAULT_INIT_VALUE))
    model.params = tree["model"]
    exp_shapes = {"emb": (model.vocab_size, model.d),
                  "W_out": (model.L, model.p)}
    for name, shape in exp_shapes.items():
        if model.params[name].shape != shape:
            raise CheckpointError(f"{path}: tensor {name} has shape "
                                  f"{model.params[name].shape}, header says {shape}")

    optim_state = None
    if header["optim"] is not None:
        optim_state = AdaDeltaState(model.params, rho=header["optim"]["rho"],
                                    eps=header["optim"]["eps"])
        optim_state.sq_grad = tree["optim"]["sq_grad"]
        optim_state.sq_delta = tree["optim"]["sq_delta"]

    wv = None if header["word_vocab"] is None else Vocab(header["word_vocab"])
    lv = None if header["label_vocab"] is None else Vocab(header["label_vocab"])
    return model, optim_state, wv, lv
