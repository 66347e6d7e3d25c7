"""Command-line driver: ingest, split, gen-synth, train, evaluate, recommend,
ablate and stats.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Sequence

from .config import ATTENTION_VARIANTS, COMPONENT_VARIANTS, TrainConfig, read_kv_file
from .corpus import CleanPost, RawPost, Vocab, build_corpus, clean_text, load_corpus, split, stats, to_raw, write_corpus
from .errors import ConfigError, DataError, NumericalError, TagalogError
from .eval import ALL_SPECS, AblationSpec, METRICS, ablate, metrics_from_scores, post_metrics, write_curves, write_table
from .head import rank
from .langid import LangCode, NGramProfile, identify_language
from .synth import SynthSpec, gen_synth
from .train import Checkpoint, train

logger = logging.getLogger("tagalog")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    """Shows the built-in default for config flags whose parser default is None."""

    def _get_help_string(self, action):
        builtin = getattr(action, "builtin_default", dataclasses.MISSING)
        if builtin is not dataclasses.MISSING:
            return f"{action.help} (default: {_show(builtin)})"
        return super()._get_help_string(action)


def _show(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


# --------------------------------------------------------------- config flags
def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("none", "") else int(text)


def _opt_str(text: str) -> str | None:
    return None if text.strip().lower() in ("none", "") else text


def _ratios(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValueError("expected three comma-separated ratios")
    return tuple(parts)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


CONFIG_FLAGS: dict[str, tuple] = {
    # field: (parser, help, choices)
    "seed": (int, "random seed for initialisation, shuffling and hashing", None),
    "epochs": (int, "training epochs", None),
    "lr": (float, "learning rate", None),
    "optimizer": (str, "optimiser", ("adam", "sgd")),
    "embed_dim": (int, "token embedding dimension", None),
    "seq_len": (int, "token sequence length including [CLS]/[SEP]", None),
    "embed_file": (_opt_str, "precomputed token embeddings (dim= header, then token + floats)", None),
    "max_hashtags": (_opt_int, "keep only the most frequent hashtags", None),
    "min_tag_freq": (int, "drop hashtags seen in fewer posts", None),
    "split_ratios": (_ratios, "train,val,test ratios", None),
    "sim_threshold": (float, "minimum cosine similarity for tweet-tweet edges", None),
    "topk": (_opt_int, "similarity edges kept per tweet ('none' for all)", None),
    "exact_paper_graph": (_bool, "connect every same-family tweet pair with no threshold", None),
    "gae_layers": (int, "graph encoder layers", None),
    "gae_dim": (_opt_int, "graph embedding dimension (none = embed-dim)", None),
    "unweighted_mean": (_bool, "plain neighbour mean instead of edge-weighted", None),
    "l2_normalize": (_bool, "L2-normalise hidden graph layers", None),
    "gae_loss": (str, "reconstruction loss reduction", ("mean", "sum")),
    "head": (str, "output activation", ("softmax", "sigmoid")),
    "uga_pool_hl": (_bool, "pool the language-attention hidden states inside UGA", None),
    "user_node_init": (str, "initial user node features", ("embedding", "mean-uga")),
    "attention": (str, "attention variant", ATTENTION_VARIANTS),
    "component": (str, "component variant", COMPONENT_VARIANTS),
    "select_k": (int, "K used for validation F1 model selection", None),
    "eval_every": (int, "validate every N epochs", None),
}
BOOL_FIELDS = {"exact_paper_graph", "unweighted_mean", "l2_normalize", "uga_pool_hl"}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key = value config file (flags override it)")
    defaults = TrainConfig()
    for name, (conv, help_text, choices) in CONFIG_FLAGS.items():
        flag = "--" + name.replace("_", "-")
        if name in BOOL_FIELDS:
            action = p.add_argument(flag, action=argparse.BooleanOptionalAction, default=None, help=help_text)
        else:
            action = p.add_argument(flag, type=conv, default=None, choices=choices, help=help_text,
                                    metavar=None if choices else name.upper())
        action.builtin_default = getattr(defaults, name)


def resolve_config(args: argparse.Namespace) -> TrainConfig:
    """Flag > config file > built-in default."""
    values: dict = {}
    if getattr(args, "config", None):
        for key, text in read_kv_file(args.config).items():
            if key not in CONFIG_FLAGS:
                raise ConfigError(f"{args.config}: unknown config key {key!r}")
            conv, _, choices = CONFIG_FLAGS[key]
            conv = _bool if key in BOOL_FIELDS else conv
            try:
                values[key] = conv(text)
            except ValueError as exc:
                raise ConfigError(f"{args.config}: bad value for {key}: {exc}") from exc
            if choices and values[key] not in choices:
                raise ConfigError(f"{args.config}: {key} must be one of {', '.join(choices)}")
    for key in CONFIG_FLAGS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    cfg = TrainConfig(**values)
    logger.info("resolved config: %s", cfg.canonical_json())
    return cfg


# -------------------------------------------------------------------- helpers
def parse_ks(text: str) -> list[int]:
    """'1..9' or '1,3,5'."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            ks = list(range(lo, hi + 1))
        else:
            ks = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad K list {text!r}; use 1..9 or 1,3,5") from None
    if not ks:
        raise argparse.ArgumentTypeError("empty K list")
    return ks


@contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        try:
            fh = open(path, "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc.strerror or exc}") from exc
        with fh:
            yield fh


def _profiles(args) -> NGramProfile | None:
    path = getattr(args, "lang_profiles", None)
    return NGramProfile.load(path) if path else None


def _load(path: str) -> list[RawPost]:
    raws = load_corpus(path)
    if not raws:
        raise DataError(f"{path}: no usable posts")
    return raws


def _frozen_posts(path: str, vocab: Vocab, profiles) -> list[CleanPost]:
    posts, _ = build_corpus(_load(path), vocab=vocab, profiles=profiles)
    return posts


def _train_data(args, cfg: TrainConfig):
    """(train, val, test, vocab) from --corpus (split here) or --train/--val/--test files."""
    profiles = _profiles(args)
    if args.corpus:
        posts, vocab = build_corpus(_load(args.corpus), profiles=profiles, min_tag_freq=cfg.min_tag_freq,
                                    max_hashtags=cfg.max_hashtags)
        tr, va, te = split(posts, cfg.split_ratios, cfg.seed)
        return tr, va, te, vocab.freeze()
    if not args.train:
        raise UsageError("one of --corpus or --train is required")
    tr, vocab = build_corpus(_load(args.train), profiles=profiles, min_tag_freq=cfg.min_tag_freq,
                             max_hashtags=cfg.max_hashtags)
    vocab.freeze()
    va = _frozen_posts(args.val, vocab, profiles) if args.val else []
    te = _frozen_posts(args.test, vocab, profiles) if getattr(args, "test", None) else []
    return tr, va, te, vocab


def _write_history(history, path: str) -> None:
    with _output(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss", "l_gae", "l_hr", "train_hit_rate", "val_f1"])
        for log in history:
            writer.writerow([log.epoch, log.loss, log.l_gae, log.l_hr, log.train_hit_rate,
                             "" if log.val_f1 is None else log.val_f1])


def adhoc_post(text: str, user: str | None, lang: str | None, vocab: Vocab, profiles=None,
               post_id: str = "adhoc") -> CleanPost:
    """A post for inference only: cleaned text, no ground-truth tags."""
    body, _ = clean_text(text)
    if not body:
        raise DataError("post text is empty after cleaning")
    code = LangCode.parse(lang).value if lang else identify_language(body, profiles).value
    idx = vocab.user_index(user) if user is not None else None
    return CleanPost(post_id, -1 if idx is None else idx, body, code, frozenset())


# ------------------------------------------------------------------- commands
def cmd_ingest(args) -> None:
    posts, vocab = build_corpus(_load(args.input), profiles=_profiles(args),
                                min_tag_freq=args.min_tag_freq, max_hashtags=args.max_hashtags)
    if not posts:
        raise DataError("no posts survived preprocessing")
    write_corpus([to_raw(p, vocab) for p in posts], args.out)
    logger.info("wrote %d clean posts to %s", len(posts), args.out)
    if args.stats_out:
        with _output(args.stats_out) as fh:
            stats(posts).write_csv(fh)


def cmd_split(args) -> None:
    posts, vocab = build_corpus(_load(args.input), profiles=_profiles(args))
    parts = split(posts, args.ratios, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "val", "test"), parts):
        write_corpus([to_raw(p, vocab) for p in part], out / f"{name}.jsonl")
        logger.info("%s: %d posts", name, len(part))


def cmd_gen_synth(args) -> None:
    spec = SynthSpec(args.users, args.posts, args.languages, args.hashtags, args.seed)
    write_corpus(gen_synth(spec), args.out)


def cmd_stats(args) -> None:
    posts, _ = build_corpus(_load(args.input), profiles=_profiles(args))
    with _output(args.out) as fh:
        stats(posts).write_csv(fh)


def cmd_train(args) -> None:
    cfg = resolve_config(args)
    tr, va, _, vocab = _train_data(args, cfg)
    resume = Checkpoint.load(args.resume) if args.resume else None
    ckpt, history = train(tr, va, vocab, cfg, resume=resume)
    ckpt.save(args.out)
    logger.info("saved checkpoint %s (%s)", args.out, ckpt.meta)
    if args.history_out:
        _write_history(history, args.history_out)
    if args.graph_out and ckpt.graph is not None:
        with _output(args.graph_out) as fh:
            ckpt.graph.write_csv(fh)


def _eval_posts(args, ckpt: Checkpoint) -> list[CleanPost]:
    profiles = _profiles(args)
    posts = _frozen_posts(args.input, ckpt.vocab, profiles)
    if args.split != "all":
        cfg = ckpt.config
        posts = dict(zip(("train", "val", "test"), split(posts, cfg.split_ratios, cfg.seed)))[args.split]
    if not posts:
        raise DataError("no evaluable posts")
    return posts


def cmd_evaluate(args) -> None:
    ckpt = Checkpoint.load(args.ckpt)
    logger.info("checkpoint config: %s", ckpt.config.canonical_json())
    posts = _eval_posts(args, ckpt)
    scores = ckpt.model().infer(posts)
    truths = [p.tag_indices for p in posts]
    rows = metrics_from_scores(scores, truths, args.ks, variant=args.variant)
    with _output(args.out) as fh:
        write_table(rows, fh)
    if args.curves_out:
        with _output(args.curves_out) as fh:
            write_curves(rows, fh)
    if args.per_post_out:
        order = rank(scores)
        with _output(args.per_post_out) as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["post_id", "K", *METRICS])
            for i, post in enumerate(posts):
                for k in args.ks:
                    writer.writerow([post.id, k, *post_metrics(set(truths[i]), set(order[i, :k].tolist()))])


def cmd_recommend(args) -> None:
    ckpt = Checkpoint.load(args.ckpt)
    vocab, profiles = ckpt.vocab, _profiles(args)
    if args.post_id is not None:
        if not args.input:
            raise UsageError("--post-id needs --input")
        match = [r for r in _load(args.input) if r.id == args.post_id]
        if not match:
            raise DataError(f"post {args.post_id!r} not found in {args.input}")
        raw = match[0]
        post = adhoc_post(raw.text, raw.user_id, raw.lang, vocab, profiles, raw.id)
    elif args.text is not None:
        post = adhoc_post(args.text, args.user, args.lang, vocab, profiles)
    else:
        raise UsageError("give --post-id with --input, or --text")
    if not 1 <= args.k <= len(vocab.hashtags):
        raise UsageError(f"--k must be in 1..{len(vocab.hashtags)}")
    recs = ckpt.model().recommend([post], args.k)[0]
    with _output(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["post_id", "rank", "hashtag", "probability"])
        for r, (tag, prob) in enumerate(recs, start=1):
            writer.writerow([post.id, r, vocab.tag(tag), prob])


def cmd_ablate(args) -> None:
    cfg = resolve_config(args)
    tr, va, te, vocab = _train_data(args, cfg)
    if not te:
        raise UsageError("ablation needs test posts (--corpus or --test)")
    try:
        specs = [AblationSpec.parse(s.strip()) for s in args.specs.split(",")] if args.specs else ALL_SPECS
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = ablate(tr, va, te, vocab, cfg, specs, args.ks)
    with _output(args.out) as fh:
        write_table(rows, fh)


# --------------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tagalog", description="Multilingual personalised hashtag recommendation.",
                     formatter_class=_Formatter)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=_Formatter)
        p.set_defaults(func=func)
        return p

    def profiles_flag(p):
        p.add_argument("--lang-profiles", metavar="PATH", default=None,
                       help="trigram profile CSV (lang,trigram,rank); built-in hi/mr profiles if omitted")

    p = command("ingest", cmd_ingest, "clean a raw JSONL corpus")
    p.add_argument("--input", required=True, help="raw corpus JSONL")
    p.add_argument("--out", required=True, help="clean corpus JSONL")
    p.add_argument("--stats-out", default=None, help="corpus statistics CSV")
    p.add_argument("--min-tag-freq", type=int, default=1, help="drop hashtags seen in fewer posts")
    p.add_argument("--max-hashtags", type=int, default=None, help="keep only the most frequent hashtags")
    profiles_flag(p)

    p = command("split", cmd_split, "seeded train/val/test split into a directory")
    p.add_argument("--input", required=True, help="corpus JSONL")
    p.add_argument("--out-dir", required=True, help="receives train.jsonl, val.jsonl, test.jsonl")
    p.add_argument("--ratios", type=_ratios, default=(0.8, 0.1, 0.1), help="train,val,test ratios")
    p.add_argument("--seed", type=int, default=42, help="shuffle seed")
    profiles_flag(p)

    p = command("gen-synth", cmd_gen_synth, "write a synthetic corpus with recoverable hashtags")
    p.add_argument("--users", type=int, default=6, help="number of users")
    p.add_argument("--posts", type=int, default=60, help="number of posts")
    p.add_argument("--languages", type=int, default=7, help="number of languages used")
    p.add_argument("--hashtags", type=int, default=12, help="number of hashtags")
    p.add_argument("--seed", type=int, default=42, help="generator seed")
    p.add_argument("--out", required=True, help="output JSONL")

    p = command("stats", cmd_stats, "corpus statistics as CSV metric,value")
    p.add_argument("--input", required=True, help="corpus JSONL")
    p.add_argument("--out", default=None, help="output CSV (stdout if omitted)")
    profiles_flag(p)

    def data_flags(p, with_test=False):
        p.add_argument("--corpus", default=None, help="one corpus file, split with --split-ratios/--seed")
        p.add_argument("--train", default=None, help="training corpus JSONL")
        p.add_argument("--val", default=None, help="validation corpus JSONL")
        if with_test:
            p.add_argument("--test", default=None, help="test corpus JSONL")
        profiles_flag(p)

    p = command("train", cmd_train, "train a model and write the best-validation checkpoint")
    data_flags(p)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--resume", default=None, help="continue from a checkpoint")
    p.add_argument("--history-out", default=None, help="per-epoch log CSV")
    p.add_argument("--graph-out", default=None, help="edge list CSV of the training graph")
    _add_config_flags(p)

    p = command("evaluate", cmd_evaluate, "top-K metrics of a checkpoint on a corpus")
    p.add_argument("--ckpt", required=True, help="checkpoint path")
    p.add_argument("--input", required=True, help="corpus JSONL")
    p.add_argument("--split", choices=("all", "train", "val", "test"), default="all",
                   help="re-split the input with the checkpoint's ratios and seed and keep one part")
    p.add_argument("--ks", type=parse_ks, default=[1, 3, 8], help="K values, e.g. 1..9 or 1,3,5")
    p.add_argument("--variant", default="model", help="name written in the variant column")
    p.add_argument("--out", default=None, help="metrics CSV (stdout if omitted)")
    p.add_argument("--curves-out", default=None, help="long-format CSV model,K,metric,value")
    p.add_argument("--per-post-out", default=None, help="per-post metrics CSV")
    profiles_flag(p)

    p = command("recommend", cmd_recommend, "top-K hashtags for one post")
    p.add_argument("--ckpt", required=True, help="checkpoint path")
    p.add_argument("--input", default=None, help="corpus JSONL holding --post-id")
    p.add_argument("--post-id", default=None, help="post to recommend for")
    p.add_argument("--text", default=None, help="ad-hoc post text")
    p.add_argument("--user", default=None, help="ad-hoc post author id")
    p.add_argument("--lang", default=None, help="ad-hoc post language code (identified if omitted)")
    p.add_argument("--k", type=int, default=3, help="number of hashtags")
    p.add_argument("--out", default=None, help="output CSV (stdout if omitted)")
    profiles_flag(p)

    p = command("ablate", cmd_ablate, "train and evaluate attention and component variants")
    data_flags(p, with_test=True)
    p.add_argument("--specs", default=None,
                   help="comma-separated variants from NA, LGA, UGA, UGA+LGA, FI, FR, FR+FI (all if omitted)")
    p.add_argument("--ks", type=parse_ks, default=[8], help="K values, e.g. 1..9 or 1,3,5")
    p.add_argument("--out", default=None, help="metrics CSV (stdout if omitted)")
    _add_config_flags(p)
    return parser


def _setup_logging() -> None:
    name = os.environ.get("TAGALOG_LOG", "info").strip().lower()
    level = LOG_LEVELS.get(name, logging.INFO)
    root = logging.getLogger("tagalog")
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False
    if name not in LOG_LEVELS:
        root.warning("unknown TAGALOG_LOG level %r; using info", name)


def run(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logger.info("command %s: %s", args.command,
                    {k: v for k, v in vars(args).items() if k not in ("func", "command") and v is not None})
        args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except TagalogError as exc:
        print(f"tagalog: {exc}", file=sys.stderr)
        return exc.exit_code
    except FloatingPointError as exc:
        print(f"tagalog: numerical failure: {exc}", file=sys.stderr)
        return NumericalError.exit_code
    except ValueError as exc:
        print(f"tagalog: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
