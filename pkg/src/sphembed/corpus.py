"""Corpus ingestion and the (center, context, paragraph) tuple stream.

A corpus file holds one paragraph per line; tokens are split on ASCII
whitespace and case is preserved. Line ``i`` becomes paragraph id ``i`` even if
it ends up empty after vocabulary filtering.

The pure-Python :func:`tuple_stream` is the reference for what the compiled
training kernel consumes. Both draw from the same SplitMix64 sequence in the
same order, so a seeded single-worker stream is reproducible bit for bit.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Tiny counter-based generator shared (bit-exactly) with the numba kernel."""

    def __init__(self, state: int):
        self.state = state & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        return _mix64(self.state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, n: int) -> int:
        """Integer in ``[0, n)``."""
        return self.next_u64() % n


def stream_state(seed: int, worker: int, epoch: int) -> int:
    """Initial RNG state for one worker's pass over its documents."""
    s = _mix64((seed ^ worker) & _MASK64)
    return _mix64((s + (epoch + 1) * _GOLDEN) & _MASK64)


@dataclass
class Vocabulary:
    id_to_token: list[str]
    token_to_id: dict[str, int]
    counts: np.ndarray
    total_tokens: int

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, token: str) -> int:
        return self.token_to_id[token]

    def decode(self, idx: int) -> str:
        return self.id_to_token[idx]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for tok, c in zip(self.id_to_token, self.counts):
                f.write(f"{tok}\t{int(c)}\n")


def _read_lines(path) -> Iterator[str]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            yield line.rstrip("\n")


def vocabulary_from_lines(lines: Iterable[str], min_count: int) -> Vocabulary:
    cnt: Counter[str] = Counter()
    for line in lines:
        cnt.update(line.split())
    kept = sorted((t for t, c in cnt.items() if c >= min_count), key=lambda t: (-cnt[t], t))
    if not kept:
        raise ValueError(f"empty vocabulary (min_count={min_count})")
    counts = np.array([cnt[t] for t in kept], dtype=np.int64)
    return Vocabulary(
        id_to_token=kept,
        token_to_id={t: i for i, t in enumerate(kept)},
        counts=counts,
        total_tokens=int(counts.sum()),
    )


def build_vocabulary(corpus_path, min_count: int) -> Vocabulary:
    """Count whitespace tokens in ``corpus_path`` and keep those seen ``min_count`` times.

    Ids follow descending frequency, ties broken lexicographically.
    ``total_tokens`` counts retained tokens only.
    """
    return vocabulary_from_lines(_read_lines(corpus_path), min_count)


@dataclass
class EncodedCorpus:
    documents: list[np.ndarray]
    _flat: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @property
    def doc_count(self) -> int:
        return len(self.documents)

    @property
    def token_count(self) -> int:
        return sum(len(d) for d in self.documents)

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """All token ids concatenated, plus ``doc_count + 1`` offsets."""
        if self._flat is None:
            lengths = np.array([len(d) for d in self.documents], dtype=np.int64)
            offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
            np.cumsum(lengths, out=offsets[1:])
            tokens = (
                np.concatenate(self.documents).astype(np.int32)
                if offsets[-1]
                else np.zeros(0, dtype=np.int32)
            )
            self._flat = (tokens, offsets)
        return self._flat


def encode_lines(lines: Iterable[str], vocab: Vocabulary) -> EncodedCorpus:
    t2i = vocab.token_to_id
    docs = [
        np.array([t2i[t] for t in line.split() if t in t2i], dtype=np.int32) for line in lines
    ]
    return EncodedCorpus(docs)


def encode_corpus(corpus_path, vocab: Vocabulary) -> EncodedCorpus:
    return encode_lines(_read_lines(corpus_path), vocab)


def subsample_keep_probability(word_count: int, total: int, threshold: float) -> float:
    if total <= 0 or threshold <= 0:
        raise ValueError("total and threshold must be positive")
    f = word_count / total
    if f <= threshold:
        return 1.0
    return min(1.0, math.sqrt(threshold / f))


def keep_probabilities(vocab: Vocabulary, threshold: float) -> np.ndarray:
    """Vectorised keep probability per word id; ``threshold <= 0`` disables subsampling."""
    if threshold <= 0:
        return np.ones(len(vocab), dtype=np.float64)
    f = vocab.counts / vocab.total_tokens
    return np.minimum(1.0, np.sqrt(threshold / f))


class NegativeSampler:
    """Inverse-CDF sampler over word ids with P(w) proportional to count(w)**power."""

    def __init__(self, counts, power: float = 0.75):
        w = np.asarray(counts, dtype=np.float64) ** power
        if w.size == 0 or not np.all(np.isfinite(w)) or w.sum() <= 0:
            raise ValueError("negative sampler needs positive counts")
        cum = np.cumsum(w / w.sum())
        cum[-1] = 1.0
        self.cumulative = cum

    @property
    def probabilities(self) -> np.ndarray:
        return np.diff(self.cumulative, prepend=0.0)

    def sample(self, rng: SplitMix64) -> int:
        return sample_negative(self, rng)


def sample_negative(sampler: NegativeSampler, rng: SplitMix64) -> int:
    i = int(np.searchsorted(sampler.cumulative, rng.uniform(), side="right"))
    return min(i, len(sampler.cumulative) - 1)


class TrainingTuple(NamedTuple):
    center: int
    context: int
    doc: int
    negatives: tuple[int, ...]


def partition_documents(corpus: EncodedCorpus, workers: int) -> list[tuple[int, int]]:
    """Split paragraphs into ``workers`` contiguous ranges of roughly equal token mass."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    _, offsets = corpus.flat()
    n = corpus.doc_count
    total = offsets[-1]
    bounds = [0]
    for w in range(1, workers):
        cut = int(np.searchsorted(offsets, total * w / workers, side="left"))
        bounds.append(min(max(cut, bounds[-1]), n))
    bounds.append(n)
    return [(bounds[i], bounds[i + 1]) for i in range(workers)]


def tuple_stream(
    corpus: EncodedCorpus,
    vocab: Vocabulary,
    sampler: NegativeSampler,
    config,
    rng_seed: int,
    worker: int = 0,
    workers: int = 1,
    epoch: int = 0,
) -> Iterator[TrainingTuple]:
    """Yield training tuples for one worker's document range during one epoch.

    ``config`` needs ``window``, ``negatives``, ``subsample`` and
    ``fixed_window`` attributes (a :class:`sphembed.model.TrainConfig` works).
    """
    if corpus.doc_count == 0:
        raise ValueError("corpus is empty")
    keep = keep_probabilities(vocab, config.subsample)
    rng = SplitMix64(stream_state(rng_seed, worker, epoch))
    lo, hi = partition_documents(corpus, workers)[worker]
    window = int(config.window)
    for d in range(lo, hi):
        kept = []
        for w in corpus.documents[d]:
            kp = keep[w]
            if kp < 1.0 and rng.uniform() >= kp:
                continue
            kept.append(int(w))
        n = len(kept)
        for t in range(n):
            b = window if config.fixed_window else 1 + rng.randint(window)
            for c in range(max(0, t - b), min(n, t + b + 1)):
                if c == t:
                    continue
                negs = tuple(sample_negative(sampler, rng) for _ in range(config.negatives))
                yield TrainingTuple(kept[t], kept[c], d, negs)


def expected_tuples_per_epoch(
    corpus: EncodedCorpus, keep: np.ndarray, window: int, fixed_window: bool
) -> float:
    """Expected number of (center, context) pairs in one pass.

    Uses the expected post-subsampling length of each paragraph; only drives
    the learning-rate schedule, so an approximation is fine.
    """
    lengths = np.array(
        [float(keep[doc].sum()) if len(doc) else 0.0 for doc in corpus.documents]
    )
    n = np.rint(lengths)
    windows = [window] if fixed_window else list(range(1, window + 1))
    total = np.zeros_like(n)
    for b in windows:
        # sum over positions t of min(b, t): triangular part + flat part
        short = n * (n - 1) / 2.0
        long = b * (b - 1) / 2.0 + (n - b) * b
        total += 2.0 * np.where(n - 1 <= b, short, long)
    return float(total.sum() / len(windows))
