"""Top-K ranking metrics, K sweeps and the ablation runner."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import ATTENTION_VARIANTS, COMPONENT_VARIANTS, TrainConfig
from .corpus import CleanPost, Vocab
from .errors import DataError
from .head import rank

logger = logging.getLogger(__name__)

METRICS = ("hit_rate", "precision", "recall", "f1")


def hit_rate(gh: set, rh: set) -> int:
    if not gh:
        raise ValueError("ground-truth set is empty")
    return 1 if gh & rh else 0


def precision(gh: set, rh: set) -> float:
    if not rh:
        raise ValueError("recommended set is empty")
    return len(gh & rh) / len(rh)


def recall(gh: set, rh: set) -> float:
    if not gh:
        raise ValueError("ground-truth set is empty")
    return len(gh & rh) / len(gh)


def f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


@dataclass
class MetricRow:
    variant: str
    k: int
    hit_rate: float
    precision: float
    recall: float
    f1: float

    def as_list(self) -> list:
        return [self.variant, self.k, self.hit_rate, self.precision, self.recall, self.f1]


def post_metrics(gh: set, rh: set) -> tuple[float, float, float, float]:
    p, r = precision(gh, rh), recall(gh, rh)
    return float(hit_rate(gh, rh)), p, r, f1(p, r)


def metrics_from_scores(scores: np.ndarray, truths: Sequence[Iterable[int]], ks: Sequence[int],
                        variant: str = "model") -> list[MetricRow]:
    """Average per-post metrics of the top-K ranked hashtags, one row per K."""
    if len(truths) == 0:
        raise DataError("cannot evaluate an empty split")
    n_tags = scores.shape[1]
    for k in ks:
        if not 1 <= k <= n_tags:
            raise ValueError(f"K={k} outside [1, {n_tags}]")
    order = rank(scores)
    truths = [set(t) for t in truths]
    rows = []
    for k in ks:
        per_post = [post_metrics(gh, set(order[i, :k].tolist())) for i, gh in enumerate(truths)]
        means = [math.fsum(col) / len(per_post) for col in zip(*per_post)]
        rows.append(MetricRow(variant, k, *means))
    return rows


def evaluate_model(model, posts: Sequence[CleanPost], ks: Sequence[int],
                   variant: str = "model") -> list[MetricRow]:
    if not posts:
        raise DataError("cannot evaluate an empty split")
    scores = model.infer(posts)
    return metrics_from_scores(scores, [p.tag_indices for p in posts], ks, variant)


def evaluate(checkpoint, posts: Sequence[CleanPost], ks: Sequence[int], variant: str = "model",
             provider=None) -> list[MetricRow]:
    """Inductive evaluation of a checkpoint on held-out posts."""
    return evaluate_model(checkpoint.model(provider), posts, ks, variant)


@dataclass(frozen=True)
class AblationSpec:
    attention: str = "UGA+LGA"
    component: str = "FR+FI"

    def __post_init__(self):
        if self.attention not in ATTENTION_VARIANTS:
            raise ValueError(f"unknown attention variant {self.attention!r}")
        if self.component not in COMPONENT_VARIANTS:
            raise ValueError(f"unknown component variant {self.component!r}")

    @property
    def name(self) -> str:
        if self.component != "FR+FI":
            return self.component
        return self.attention

    @classmethod
    def parse(cls, name: str) -> "AblationSpec":
        if name in COMPONENT_VARIANTS and name != "FR+FI":
            return cls(component=name)
        if name == "FR+FI":
            return cls()
        return cls(attention=name)


# attention table rows then component table rows
ATTENTION_TABLE = [AblationSpec(attention=a) for a in ATTENTION_VARIANTS]
COMPONENT_TABLE = [AblationSpec(component=c) for c in COMPONENT_VARIANTS]
# the full model appears in both tables; train it once
ALL_SPECS = ATTENTION_TABLE + [s for s in COMPONENT_TABLE if s not in ATTENTION_TABLE]


def ablate(train_posts: Sequence[CleanPost], val_posts: Sequence[CleanPost],
           test_posts: Sequence[CleanPost], vocab: Vocab, base: TrainConfig,
           specs: Sequence[AblationSpec] = tuple(ALL_SPECS), ks: Sequence[int] = (8,),
           provider=None) -> list[MetricRow]:
    """Train one model per spec (same seed and config otherwise) and
    evaluate each on the test split."""
    from .train import train

    if not specs:
        raise ValueError("no ablation specs given")
    rows = []
    for spec in specs:
        cfg = base.replace(attention=spec.attention, component=spec.component)
        logger.info("ablation %s", spec.name)
        ckpt, _ = train(train_posts, val_posts, vocab, cfg, provider=provider)
        rows.extend(evaluate(ckpt, test_posts, ks, variant=spec.name, provider=provider))
    return rows


def write_table(rows: Sequence[MetricRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["variant", "K", *METRICS])
    for row in rows:
        writer.writerow(row.as_list())


def write_curves(rows: Sequence[MetricRow], fh) -> None:
    """Long format: model,K,metric,value."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["model", "K", "metric", "value"])
    for row in rows:
        for metric in METRICS:
            writer.writerow([row.variant, row.k, metric, getattr(row, metric)])


def read_table(fh) -> list[MetricRow]:
    """Read a metrics table, e.g. externally supplied baseline rows."""
    return [MetricRow(r["variant"], int(r["K"]), *(float(r[m]) for m in METRICS))
            for r in csv.DictReader(fh)]
