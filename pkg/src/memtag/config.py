"""Run configuration: one serializable record holding every hyperparameter,
seed, and policy.  The on-disk form is line-oriented key=value text with a
lossless round trip; run manifests embed the config plus a content hash of
any input data files."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, fields


MEMORY_POLICIES = ("persistent", "reset_per_sentence")


@dataclass
class TrainConfig:
    # model
    cell: str = "rnn_em"
    d: int = 100               # embedding dimension
    p: int = 100               # hidden dimension
    m: int = 40                # memory slot width (rnn_em)
    n: int = 8                 # memory slot count (rnn_em)
    window: int = 3            # context window size (odd; k = (window-1)//2)
    memory_init_value: float = 0.1
    memory_policy: str = "persistent"
    # training
    epochs: int = 50
    seed: int = 0
    optimizer: str = "adadelta"
    rho: float = 0.95
    eps: float = 1e-6
    lr: float = 0.1            # sgd only
    clip_enabled: bool = False
    clip_max_norm: float = 5.0
    unk_singleton_prob: float = 0.5
    # data: file paths win over the synthetic generator
    train_path: str = ""
    test_path: str = ""
    dev_path: str = ""
    synth_seed: int = 12345
    synth_vocab_size: int = 40
    synth_label_count: int = 8
    synth_len_min: int = 14
    synth_len_max: int = 20
    synth_dist_min: int = 8
    synth_dist_max: int = 12
    synth_n_train: int = 2000
    synth_n_test: int = 400
    # output
    out_dir: str = "runs/default"

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError(f"window size must be odd and >= 1, got {self.window}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if min(self.d, self.p) <= 0:
            raise ValueError("dims must be positive")
        if self.cell == "rnn_em" and min(self.m, self.n) <= 0:
            raise ValueError("rnn_em needs positive m and n")
        if self.memory_policy not in MEMORY_POLICIES:
            raise ValueError(f"memory_policy must be one of {MEMORY_POLICIES}")
        if self.optimizer not in ("adadelta", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    @property
    def window_k(self) -> int:
        return (self.window - 1) // 2

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            lines.append(f"{f.name}={val!r}" if isinstance(val, str)
                         else f"{f.name}={val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        types = {f.name: f.type for f in fields(cls)}
        defaults = {f.name: f.default for f in fields(cls)}
        kwargs = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in types:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            proto = defaults[key]
            if isinstance(proto, bool):
                kwargs[key] = val in ("True", "true", "1")
            elif isinstance(proto, int):
                kwargs[key] = int(val)
            elif isinstance(proto, float):
                kwargs[key] = float(val)
            else:
                kwargs[key] = val.strip("'\"")
        return cls(**kwargs)

    def replace(self, **kw) -> "TrainConfig":
        return dataclasses.replace(self, **kw)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(cfg: TrainConfig) -> str:
    """Config text plus content hashes of any input data files."""
    parts = ["# run manifest", cfg.to_text().rstrip()]
    for name in ("train_path", "test_path", "dev_path"):
        path = getattr(cfg, name)
        if path:
            parts.append(f"# sha256 {name} {file_sha256(path)}")
    return "\n".join(parts) + "\n"


def config_from_manifest(text: str) -> TrainConfig:
    return TrainConfig.from_text(text)
