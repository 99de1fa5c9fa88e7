"""Command-line entry point: ``sphembed {train,eval-sim,eval-cluster,eval-classify,prepare-20ng}``."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import build_vocabulary, encode_corpus
from .eval import (
    clustering_metrics,
    evaluate_word_similarity,
    f1_scores,
    kmeans,
    knn_classify,
    load_labeled_corpus,
    load_similarity_dataset,
    load_split,
    spherical_kmeans,
)
from .model import TrainConfig, load_embeddings, save_embeddings, train

log = logging.getLogger("sphembed")

WORD_FILE = "word_emb.txt"
CONTEXT_FILE = "context_emb.txt"
DOC_FILE = "doc_emb.txt"
MANIFEST_FILE = "manifest.json"


class CliError(Exception):
    pass


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _default_threads() -> int:
    env = os.environ.get("SPHEMBED_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"SPHEMBED_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _report(rows, header: str | None = None, out=None) -> None:
    out = out or sys.stdout
    if header:
        out.write(f"# {header}\n")
    for name, mean, std in rows:
        out.write(f"{name}\t{mean:.6f}\t{std:.6f}\n")


# ---------------------------------------------------------------- train

def cmd_train(args, parser) -> int:
    fields = dict(
        dim=args.dim, margin=args.margin, negatives=args.negatives, window=args.window,
        iterations=args.iters, initial_lr=args.lr, lr_floor_fraction=args.lr_floor,
        min_count=args.min_count, seed=args.seed, subsample=args.subsample,
        neg_power=args.neg_power, fixed_window=args.fixed_window, neg_reduce=args.neg_reduce,
    )
    corpus_path = args.corpus
    threads = args.threads
    if args.manifest:
        with open(args.manifest, encoding="utf-8") as f:
            manifest = json.load(f)
        fields.update({k: v for k, v in manifest["config"].items() if k in fields})
        threads = manifest["config"].get("threads", 1)
        corpus_path = corpus_path or manifest["corpus"]
        if corpus_path and Path(corpus_path).exists() and _sha256(corpus_path) != manifest["corpus_sha256"]:
            log.warning("corpus checksum differs from the manifest")
    if not corpus_path:
        parser.error("--corpus is required (or --manifest)")
    if threads is None:
        threads = _default_threads()
    try:
        config = TrainConfig(threads=threads, **fields)
    except ValueError as e:
        parser.error(str(e))

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    t0 = time.perf_counter()
    vocab = build_vocabulary(corpus_path, config.min_count)
    corpus = encode_corpus(corpus_path, vocab)
    timings["load_seconds"] = time.perf_counter() - t0
    log.info("vocabulary %d, paragraphs %d, tokens %d", len(vocab), corpus.doc_count, corpus.token_count)

    t0 = time.perf_counter()
    params, stats = train(corpus, vocab, config)
    timings["train_seconds"] = time.perf_counter() - t0
    timings["epoch_seconds"] = stats.epoch_seconds

    t0 = time.perf_counter()
    save_embeddings(out / WORD_FILE, vocab.id_to_token, params.U)
    save_embeddings(out / CONTEXT_FILE, vocab.id_to_token, params.V)
    save_embeddings(out / DOC_FILE, range(corpus.doc_count), params.D)
    if args.save_vocab:
        vocab.save(out / "vocab.tsv")
    timings["write_seconds"] = time.perf_counter() - t0

    manifest = {
        "tool": "sphembed",
        "version": __version__,
        "command": "train",
        "corpus": str(corpus_path),
        "corpus_sha256": _sha256(corpus_path),
        "config": config.to_dict(),
        "seed": config.seed,
        "vocab_size": len(vocab),
        "doc_count": corpus.doc_count,
        "processed_tuples": stats.processed_tuples,
        "epoch_loss": stats.epoch_loss,
        "timings": timings,
        "outputs": [WORD_FILE, CONTEXT_FILE, DOC_FILE],
    }
    with open(out / MANIFEST_FILE, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
    print(f"wrote {out / WORD_FILE}, {out / CONTEXT_FILE}, {out / DOC_FILE}")
    return 0


# ---------------------------------------------------------------- evaluation

def cmd_eval_sim(args, parser) -> int:
    keys, M = load_embeddings(args.embeddings)
    dataset = load_similarity_dataset(args.dataset)
    rho, coverage = evaluate_word_similarity(keys, M, dataset)
    _report([("spearman", rho, 0.0), ("coverage", coverage, 0.0)],
            header=f"word similarity: {Path(args.dataset).name}, OOV pairs skipped")
    return 0


def _doc_matrix(path, n_expected: int) -> np.ndarray:
    keys, M = load_embeddings(path)
    ids = np.array([int(k) for k in keys])
    if len(ids) != n_expected or not np.array_equal(np.sort(ids), np.arange(n_expected)):
        raise CliError(f"{path}: {len(ids)} paragraph rows do not match {n_expected} labels")
    out = np.empty_like(M)
    out[ids] = M
    return out


def cmd_eval_cluster(args, parser) -> int:
    labeled, _ = load_labeled_corpus(args.labels)
    X = _doc_matrix(args.doc_embeddings, len(labeled.labels))
    k = args.k or labeled.class_count
    if args.runs < 1:
        parser.error("--runs must be >= 1")
    algo = spherical_kmeans if args.alg == "skmeans" else kmeans
    if args.alg == "skmeans":
        X = X / np.linalg.norm(X, axis=1, keepdims=True)
    results = []
    for r in range(args.runs):
        res = algo(X, k, seed=args.seed + r)
        results.append(clustering_metrics(res.assignments, labeled.labels, args.nmi_norm))
    rows = []
    for name in ("MI", "NMI", "ARI", "Purity"):
        vals = np.array([m[name] for m in results])
        std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        rows.append((name, float(vals.mean()), std))
    _report(rows, header=(
        f"alg={args.alg} k={k} runs={args.runs}; MI in nats; "
        f"NMI normalized by {args.nmi_norm} mean of entropies"))
    return 0


def cmd_eval_classify(args, parser) -> int:
    labeled, _ = load_labeled_corpus(args.labels)
    n = len(labeled.labels)
    X = _doc_matrix(args.doc_embeddings, n)
    train_idx = load_split(args.split)
    if train_idx.size and (train_idx.min() < 0 or train_idx.max() >= n):
        raise CliError("split file references a line index out of range")
    mask = np.zeros(n, dtype=bool)
    mask[train_idx] = True
    test_idx = np.flatnonzero(~mask)
    if args.k > mask.sum():
        raise CliError(f"k={args.k} exceeds the {int(mask.sum())} training documents")
    pred = knn_classify(X[mask], labeled.labels[mask], X[test_idx], k=args.k)
    macro, micro = f1_scores(pred, labeled.labels[test_idx], labeled.class_count)
    _report([("macro_f1", macro, 0.0), ("micro_f1", micro, 0.0)],
            header=f"k-NN k={args.k} Euclidean; train={int(mask.sum())} test={len(test_idx)}")
    return 0


# ---------------------------------------------------------------- 20 Newsgroups

_TOKEN = re.compile(r"[a-z]+")


def _clean_newsgroup_post(raw: str) -> str:
    _, _, body = raw.partition("\n\n")
    return " ".join(_TOKEN.findall(body.lower()))


def cmd_prepare_20ng(args, parser) -> int:
    """Flatten a 20news-bydate tree into corpus, labels and split files."""
    src = Path(args.source)
    parts = [src / "20news-bydate-train", src / "20news-bydate-test"]
    if not all(p.is_dir() for p in parts):
        raise CliError(f"{src} must contain 20news-bydate-train/ and 20news-bydate-test/")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    train_ids = []
    i = 0
    with open(out / "corpus.txt", "w", encoding="utf-8") as fc, \
            open(out / "labels.tsv", "w", encoding="utf-8") as fl:
        for split, root in zip(("train", "test"), parts):
            for group in sorted(d.name for d in root.iterdir() if d.is_dir()):
                for post in sorted((root / group).iterdir(), key=lambda p: p.name):
                    text = _clean_newsgroup_post(post.read_text(encoding="latin-1"))
                    fc.write(text + "\n")
                    fl.write(f"{group}\t{text}\n")
                    if split == "train":
                        train_ids.append(i)
                    i += 1
    with open(out / "train_split.txt", "w", encoding="utf-8") as f:
        f.write("\n".join(map(str, train_ids)) + "\n")
    print(f"wrote {i} documents ({len(train_ids)} train) to {out}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphembed", description=__doc__,
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    t = sub.add_parser("train", help="train word, context and paragraph embeddings",
                       formatter_class=fmt)
    t.add_argument("--corpus", help="UTF-8 text, one paragraph per line")
    t.add_argument("--output", default=".", help="directory for embeddings and manifest")
    t.add_argument("--dim", type=int, default=100, help="embedding dimension")
    t.add_argument("--window", type=int, default=10, help="max context window")
    t.add_argument("--margin", type=float, default=0.15, help="hinge margin")
    t.add_argument("--negatives", type=int, default=2, help="negative samples per tuple")
    t.add_argument("--lr", type=float, default=0.04, help="initial learning rate")
    t.add_argument("--lr-floor", type=float, default=1e-4,
                   help="learning-rate floor as a fraction of --lr")
    t.add_argument("--iters", type=int, default=10, help="training epochs")
    t.add_argument("--min-count", type=int, default=5,
                   help="drop words rarer than this (100 for Wikipedia-scale runs)")
    t.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $SPHEMBED_THREADS, else CPU count)")
    t.add_argument("--seed", type=int, default=1, help="seed for all randomness")
    t.add_argument("--subsample", type=float, default=1e-3,
                   help="frequent-word subsampling threshold; 0 disables")
    t.add_argument("--neg-power", type=float, default=0.75,
                   help="exponent on counts for the negative distribution (0 = uniform)")
    t.add_argument("--fixed-window", action="store_true",
                   help="always use the full window instead of a random width")
    t.add_argument("--neg-reduce", choices=("sum", "mean"), default="sum",
                   help="combine per-negative hinge terms by sum or mean")
    t.add_argument("--manifest", help="rerun with the config recorded in this manifest")
    t.add_argument("--save-vocab", action="store_true", help="also write vocab.tsv")
    t.set_defaults(func=cmd_train, subparser=t)

    s = sub.add_parser("eval-sim", help="word similarity (Spearman)", formatter_class=fmt)
    s.add_argument("--embeddings", required=True, help="word embedding file")
    s.add_argument("--dataset", required=True, help="TSV word1<TAB>word2<TAB>score")
    s.set_defaults(func=cmd_eval_sim, subparser=s)

    c = sub.add_parser("eval-cluster", help="document clustering", formatter_class=fmt)
    c.add_argument("--doc-embeddings", required=True)
    c.add_argument("--labels", required=True, help="TSV label<TAB>text aligned with paragraphs")
    c.add_argument("--k", type=int, default=None, help="clusters (default: number of classes)")
    c.add_argument("--alg", choices=("kmeans", "skmeans"), default="skmeans")
    c.add_argument("--runs", type=int, default=10, help="restarts with seeds seed..seed+runs-1")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--nmi-norm", choices=("geometric", "arithmetic"), default="geometric")
    c.set_defaults(func=cmd_eval_cluster, subparser=c)

    k = sub.add_parser("eval-classify", help="k-NN document classification", formatter_class=fmt)
    k.add_argument("--doc-embeddings", required=True)
    k.add_argument("--labels", required=True, help="TSV label<TAB>text aligned with paragraphs")
    k.add_argument("--split", required=True, help="training line indices, one per line")
    k.add_argument("--k", type=int, default=3)
    k.set_defaults(func=cmd_eval_classify, subparser=k)

    g = sub.add_parser("prepare-20ng", help="convert a 20news-bydate tree", formatter_class=fmt)
    g.add_argument("--source", required=True, help="directory holding 20news-bydate-{train,test}")
    g.add_argument("--output", required=True)
    g.set_defaults(func=cmd_prepare_20ng, subparser=g)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args, args.subparser)
    except (CliError, ValueError, OSError, KeyError) as e:
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"sphembed: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
