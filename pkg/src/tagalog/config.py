"""Run configuration and the flat key-value config file format."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

ATTENTION_VARIANTS = ("NA", "LGA", "UGA", "UGA+LGA")
COMPONENT_VARIANTS = ("FI", "FR", "FR+FI")


@dataclass
class TrainConfig:
    seed: int = 42
    epochs: int = 300
    lr: float = 0.01
    optimizer: str = "adam"
    embed_dim: int = 64
    seq_len: int = 50
    embed_file: str | None = None
    max_hashtags: int | None = None
    min_tag_freq: int = 1
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    sim_threshold: float = 0.5
    topk: int | None = 10
    exact_paper_graph: bool = False
    gae_layers: int = 2
    gae_dim: int | None = None
    unweighted_mean: bool = False
    l2_normalize: bool = False
    gae_loss: str = "mean"
    head: str = "softmax"
    uga_pool_hl: bool = False
    user_node_init: str = "mean-uga"
    attention: str = "UGA+LGA"
    component: str = "FR+FI"
    select_k: int = 3
    eval_every: int = 1

    def __post_init__(self):
        self.split_ratios = tuple(float(r) for r in self.split_ratios)
        checks = [
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.lr > 0, "lr must be positive"),
            (self.embed_dim > 0 and self.seq_len >= 3, "embed_dim > 0 and seq_len >= 3 required"),
            (self.gae_layers >= 1, "gae_layers must be >= 1"),
            (self.gae_dim is None or self.gae_dim > 0, "gae_dim must be positive"),
            (self.optimizer in ("adam", "sgd"), f"unknown optimizer {self.optimizer!r}"),
            (self.gae_loss in ("mean", "sum"), f"unknown gae_loss {self.gae_loss!r}"),
            (self.head in ("softmax", "sigmoid"), f"unknown head {self.head!r}"),
            (self.user_node_init in ("embedding", "mean-uga"), f"unknown user_node_init {self.user_node_init!r}"),
            (self.attention in ATTENTION_VARIANTS, f"unknown attention variant {self.attention!r}"),
            (self.component in COMPONENT_VARIANTS, f"unknown component variant {self.component!r}"),
            (self.select_k >= 1 and self.eval_every >= 1, "select_k and eval_every must be >= 1"),
            (self.topk is None or self.topk >= 1, "topk must be >= 1"),
            (self.min_tag_freq >= 1, "min_tag_freq must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def graph_dim(self) -> int:
        return self.gae_dim or self.embed_dim

    # variant switches
    @property
    def use_graph(self) -> bool:
        return self.component != "FR"

    @property
    def use_lga(self) -> bool:
        return self.component != "FI" and self.attention in ("LGA", "UGA+LGA")

    @property
    def use_uga(self) -> bool:
        return self.component != "FI" and self.attention in ("UGA", "UGA+LGA")

    @property
    def use_word_attention(self) -> bool:
        return self.attention != "NA"

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["split_ratios"] = list(self.split_ratios)
        return d

    @classmethod
    def from_json(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def canonical_json(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


def read_kv_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment. Keys use flag
    spelling (dashes or underscores)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out
