"""Joint training loop, optimizers, checkpoints and finite-difference checks."""
from __future__ import annotations

import io
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .autograd import Tensor
from .config import TrainConfig
from .corpus import CleanPost, Vocab
from .encoder import EmbeddingProvider
from .errors import DataError, NumericalError
from .graph import HeteroGraph
from .model import TagalogModel
from .params import ParamStore

logger = logging.getLogger(__name__)

MAGIC = b"TGLG"
FORMAT_VERSION = 1


def backward(loss: Tensor, store: ParamStore) -> None:
    """Fill every parameter's gradient slot with d loss / d parameter."""
    store.zero_grad()
    loss.backward()
    store.fill_missing_grads()
    for name, t in store.items():
        if not np.isfinite(t.grad).all():
            raise NumericalError(f"non-finite gradient in {name}")


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, store: ParamStore) -> None:
        for _, t in store.items():
            t.data = t.data - self.lr * t.grad

    def state(self) -> dict[str, np.ndarray]:
        return {}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        pass


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, store: ParamStore) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, p in store.items():
            g = p.grad
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data = p.data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state(self) -> dict[str, np.ndarray]:
        out = {"opt.step": np.array([float(self.t)])}
        for name in sorted(self.m):
            out[f"opt.m.{name}"] = self.m[name].copy()
            out[f"opt.v.{name}"] = self.v[name].copy()
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        self.t = int(state.get("opt.step", np.zeros(1))[0])
        for key, value in state.items():
            if key.startswith("opt.m."):
                self.m[key[6:]] = value.copy()
            elif key.startswith("opt.v."):
                self.v[key[6:]] = value.copy()


def make_optimizer(cfg: TrainConfig):
    return Adam(cfg.lr) if cfg.optimizer == "adam" else SGD(cfg.lr)


def step(store: ParamStore, optimizer) -> None:
    optimizer.step(store)


# ---------------------------------------------------------------- checkpoints
def _post_json(p: CleanPost) -> list:
    return [p.id, p.user_index, p.token_text, p.lang, sorted(p.tag_indices)]


def _post_from_json(row: list) -> CleanPost:
    return CleanPost(row[0], int(row[1]), row[2], row[3], frozenset(int(t) for t in row[4]))


@dataclass
class Checkpoint:
    config: TrainConfig
    vocab: Vocab
    train_posts: list[CleanPost]
    graph: HeteroGraph | None
    params: dict[str, np.ndarray]
    opt_state: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @property
    def graph_digest(self) -> str | None:
        return self.graph.digest() if self.graph is not None else None

    def header(self) -> dict:
        return {
            "config": self.config.to_json(),
            "vocab": self.vocab.to_json(),
            "train_posts": [_post_json(p) for p in self.train_posts],
            "graph": self.graph.to_json() if self.graph is not None else None,
            "graph_digest": self.graph_digest,
            "meta": self.meta,
        }

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        header = json.dumps(self.header(), sort_keys=True, separators=(",", ":"),
                            ensure_ascii=False).encode("utf-8")
        buf.write(MAGIC)
        buf.write(struct.pack("<I", self.version))
        buf.write(struct.pack("<Q", len(header)))
        buf.write(header)
        tensors = {**self.params, **self.opt_state}
        buf.write(struct.pack("<I", len(tensors)))
        for name in sorted(tensors):
            arr = np.ascontiguousarray(tensors[name], dtype="<f8")
            raw = name.encode("utf-8")
            buf.write(struct.pack("<I", len(raw)))
            buf.write(raw)
            buf.write(struct.pack("<I", arr.ndim))
            buf.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            buf.write(arr.tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Checkpoint":
        view = memoryview(data)
        if bytes(view[:4]) != MAGIC:
            raise DataError("not a checkpoint file (bad magic)")
        (version,) = struct.unpack_from("<I", view, 4)
        if version != FORMAT_VERSION:
            raise DataError(f"unsupported checkpoint version {version}")
        (hlen,) = struct.unpack_from("<Q", view, 8)
        pos = 16
        header = json.loads(bytes(view[pos:pos + hlen]).decode("utf-8"))
        pos += hlen
        (count,) = struct.unpack_from("<I", view, pos)
        pos += 4
        params, opt_state = {}, {}
        for _ in range(count):
            (nlen,) = struct.unpack_from("<I", view, pos)
            pos += 4
            name = bytes(view[pos:pos + nlen]).decode("utf-8")
            pos += nlen
            (ndim,) = struct.unpack_from("<I", view, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}Q", view, pos)
            pos += 8 * ndim
            size = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(view, dtype="<f8", count=size, offset=pos).reshape(shape).astype(np.float64)
            pos += 8 * size
            (opt_state if name.startswith("opt.") else params)[name] = arr
        graph = HeteroGraph.from_json(header["graph"]) if header["graph"] is not None else None
        ckpt = cls(
            config=TrainConfig.from_json(header["config"]),
            vocab=Vocab.from_json(header["vocab"]),
            train_posts=[_post_from_json(r) for r in header["train_posts"]],
            graph=graph,
            params=params,
            opt_state=opt_state,
            meta=header["meta"],
            version=version,
        )
        if graph is not None and ckpt.graph_digest != header["graph_digest"]:
            raise DataError("checkpoint graph digest mismatch")
        return ckpt

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read checkpoint {path}: {exc.strerror or exc}") from exc
        return cls.from_bytes(data)

    def model(self, provider: EmbeddingProvider | None = None) -> TagalogModel:
        model = TagalogModel(self.config, self.vocab, self.train_posts, provider=provider,
                             graph=self.graph)
        model.store.load_state(self.params)
        return model


def snapshot(model: TagalogModel, optimizer, meta: dict) -> Checkpoint:
    return Checkpoint(model.cfg, model.vocab, model.train_posts, model.graph,
                      model.store.state(), optimizer.state(), dict(meta))


# ---------------------------------------------------------------- training
@dataclass
class EpochLog:
    epoch: int
    loss: float
    l_gae: float
    l_hr: float
    train_hit_rate: float
    val_f1: float | None = None


def _train_hit_rate(y: np.ndarray, posts: Sequence[CleanPost], k: int) -> float:
    from .head import rank
    top = rank(y)[:, :k]
    hits = [bool(set(row.tolist()) & p.tag_indices) for row, p in zip(top, posts)]
    return sum(hits) / len(hits)


def train(train_posts: Sequence[CleanPost], val_posts: Sequence[CleanPost], vocab: Vocab,
          cfg: TrainConfig, provider: EmbeddingProvider | None = None,
          resume: Checkpoint | None = None,
          callback: Callable[[EpochLog], None] | None = None) -> tuple[Checkpoint, list[EpochLog]]:
    """Full-batch joint training; returns the best-validation checkpoint.

    Validation F1@select_k is checked every ``eval_every`` epochs and ties
    keep the later epoch. Without validation posts the last epoch is kept.
    """
    from .eval import evaluate_model

    if not train_posts:
        raise DataError("training split is empty")
    if resume is not None:
        model = resume.model(provider)
        start = int(resume.meta.get("epoch", 0))
    else:
        model = TagalogModel(cfg, vocab, train_posts, provider=provider)
        start = 0
    optimizer = make_optimizer(cfg)
    if resume is not None:
        optimizer.load_state(resume.opt_state)
    logger.info("training %d params on %d posts (|H|=%d)", model.store.num_parameters(),
                len(train_posts), len(vocab.hashtags))

    best = resume if resume is not None else snapshot(model, optimizer, {"epoch": 0})
    best_f1 = best.meta.get("val_f1")
    history: list[EpochLog] = []
    for epoch in range(start + 1, start + cfg.epochs + 1):
        out = model.forward()
        if not np.isfinite(out.loss.data):
            raise NumericalError(f"loss became {out.loss.data} at epoch {epoch} "
                                 f"(gae={out.l_gae.data}, hr={out.l_hr.data})")
        backward(out.loss, model.store)
        optimizer.step(model.store)
        model.store.check_finite()
        log = EpochLog(epoch, float(out.loss.data), float(out.l_gae.data), float(out.l_hr.data),
                       _train_hit_rate(out.y_pred.data, model.train_posts, cfg.select_k))
        last = epoch == start + cfg.epochs
        if val_posts and (epoch % cfg.eval_every == 0 or last):
            row = evaluate_model(model, val_posts, [cfg.select_k])[0]
            log.val_f1 = row.f1
            if best_f1 is None or row.f1 >= best_f1:
                best_f1 = row.f1
                best = snapshot(model, optimizer, {"epoch": epoch, "val_f1": row.f1})
        elif not val_posts and last:
            best = snapshot(model, optimizer, {"epoch": epoch})
        history.append(log)
        if callback is not None:
            callback(log)
        logger.debug("epoch %d loss %.6f gae %.6f hr %.6f train_hr %.3f val_f1 %s", epoch,
                     log.loss, log.l_gae, log.l_hr, log.train_hit_rate, log.val_f1)
    return best, history


# ------------------------------------------------------------ gradient check
def numerical_gradient(fn: Callable[[], Tensor], tensor: Tensor, eps: float = 1e-5) -> np.ndarray:
    """Central differences of the scalar ``fn()`` w.r.t. every entry of ``tensor``."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = float(fn().data)
        flat[i] = orig - eps
        down = float(fn().data)
        flat[i] = orig
        gflat[i] = (up - down) / (2 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-10) -> float:
    """||a - n|| / max(||a||, ||n||); both tiny counts as agreement."""
    diff = float(np.linalg.norm(analytic - numeric))
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    if scale < floor:
        return diff
    return diff / scale


def gradcheck(fn: Callable[[], Tensor], tensors: dict[str, Tensor], eps: float = 1e-5) -> dict[str, float]:
    """Relative error between backprop and central differences per tensor."""
    for t in tensors.values():
        t.grad = None
        t.requires_grad = True
    fn().backward()
    analytic = {k: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
                for k, t in tensors.items()}
    return {k: relative_error(analytic[k], numerical_gradient(fn, t, eps)) for k, t in tensors.items()}
