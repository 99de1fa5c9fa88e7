"""Joint spherical word/paragraph model: objective, gradients and training loop.

For a positive tuple (center u, context v, paragraph d) and a negative word u'
the loss is the hinge

    max(0, m - v.u - u.d + v.u' + u'.d)

(all rows are unit vectors, so cosines are dot products and the vMF
normalizers cancel). Each row is moved with the angle-aware Riemannian step of
:func:`sphembed.sphere.update_point`.

``loss``/``euclidean_gradients``/``train_step`` are the double-precision
reference path; :func:`train` runs the compiled kernel in worker threads.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .corpus import (
    EncodedCorpus,
    NegativeSampler,
    TrainingTuple,
    Vocabulary,
    expected_tuples_per_epoch,
    keep_probabilities,
    partition_documents,
    stream_state,
)
from .sphere import project_to_tangent, update_point

log = logging.getLogger(__name__)

GRAD_BOUND = 2.0


@dataclass
class TrainConfig:
    dim: int = 100
    margin: float = 0.15
    negatives: int = 2
    window: int = 10
    iterations: int = 10
    initial_lr: float = 0.04
    lr_floor_fraction: float = 1e-4
    min_count: int = 5
    threads: int = 1
    seed: int = 1
    subsample: float = 1e-3
    neg_power: float = 0.75
    fixed_window: bool = False
    neg_reduce: str = "sum"
    dtype: str = "float32"

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be > 0")
        if not 0 < self.lr_floor_fraction <= 1:
            raise ValueError("lr_floor_fraction must be in (0, 1]")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.subsample < 0:
            raise ValueError("subsample must be >= 0 (0 disables it)")
        if self.neg_power < 0:
            raise ValueError("neg_power must be >= 0")
        if self.neg_reduce not in ("sum", "mean"):
            raise ValueError("neg_reduce must be 'sum' or 'mean'")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be 'float32' or 'float64'")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EmbeddingMatrices:
    U: np.ndarray
    V: np.ndarray
    D: np.ndarray

    @property
    def p(self) -> int:
        return self.U.shape[1]

    def copy(self) -> "EmbeddingMatrices":
        return EmbeddingMatrices(self.U.copy(), self.V.copy(), self.D.copy())

    def astype(self, dtype) -> "EmbeddingMatrices":
        return EmbeddingMatrices(
            self.U.astype(dtype), self.V.astype(dtype), self.D.astype(dtype)
        )

    def max_norm_deviation(self) -> float:
        devs = [
            np.abs(np.linalg.norm(M.astype(np.float64), axis=1) - 1.0).max()
            for M in (self.U, self.V, self.D)
            if M.shape[0]
        ]
        return float(max(devs)) if devs else 0.0


@dataclass
class TrainStats:
    processed_tuples: int = 0
    epoch_loss: list[float] = field(default_factory=list)
    epoch_active_fraction: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    learning_rate: float = 0.0
    expected_tuples: float = 0.0


def _random_rows(rng: np.random.Generator, n: int, p: int) -> np.ndarray:
    X = rng.standard_normal((n, p))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X


def init_embeddings(vocab_size: int, doc_count: int, p: int, seed: int) -> EmbeddingMatrices:
    """Uniform random points on the sphere for every row (float64)."""
    if vocab_size < 1 or doc_count < 1 or p < 2:
        raise ValueError("need vocab_size >= 1, doc_count >= 1, p >= 2")
    rng = np.random.default_rng(seed)
    U = _random_rows(rng, vocab_size, p)
    V = _random_rows(rng, vocab_size, p)
    D = _random_rows(rng, doc_count, p)
    return EmbeddingMatrices(U, V, D)


def loss(u, v, d, u_neg, m: float) -> float:
    return max(0.0, m - np.dot(v, u) - np.dot(u, d) + np.dot(v, u_neg) + np.dot(u_neg, d))


def euclidean_gradients(u, v, d, u_neg, m: float):
    """Gradients of :func:`loss` w.r.t. (u, v, d, u_neg); all zero when the hinge is inactive."""
    if loss(u, v, d, u_neg, m) <= 0.0:
        z = np.zeros_like(np.asarray(u, dtype=np.float64))
        return z, z.copy(), z.copy(), z.copy()
    g_u = -v - d
    g_v = -u + u_neg
    g_d = -u + u_neg
    g_neg = v + d
    return g_u, g_v, g_d, g_neg


def train_step(params: EmbeddingMatrices, tup: TrainingTuple, eta: float, m: float,
               neg_scale: float = 1.0) -> float:
    """Apply one training tuple in place; returns the (scaled) summed hinge loss.

    Each negative is handled as its own hinge: gradients come from a snapshot
    of the four rows, then the rows are written back in the order
    u, v, d, u'. Inactive hinges leave the parameters untouched.
    """
    U, V, D = params.U, params.V, params.D
    total = 0.0
    for neg in tup.negatives:
        u = U[tup.center].astype(np.float64)
        v = V[tup.context].astype(np.float64)
        d = D[tup.doc].astype(np.float64)
        n = U[neg].astype(np.float64)
        l = loss(u, v, d, n, m)
        if l <= 0.0:
            continue
        g_u, g_v, g_d, g_n = euclidean_gradients(u, v, d, n, m)
        assert max(np.linalg.norm(g) for g in (g_u, g_v, g_d, g_n)) <= GRAD_BOUND + 1e-9
        step = eta * neg_scale
        U[tup.center] = update_point(u, g_u, step)
        V[tup.context] = update_point(v, g_v, step)
        D[tup.doc] = update_point(d, g_d, step)
        U[neg] = update_point(n, g_n, step, negative_sample=True)
        total += l * neg_scale
    return total


def riemannian_grad_norm(params: EmbeddingMatrices, tuples: Sequence[TrainingTuple],
                         m: float) -> float:
    """Mean over tuples of the norm of the Riemannian gradient of the tuple loss.

    The per-tuple gradient stacks the tangent-projected gradients of every row
    the tuple touches, summed over its negatives.
    """
    if not tuples:
        raise ValueError("no tuples to probe")
    U = params.U.astype(np.float64, copy=False)
    V = params.V.astype(np.float64, copy=False)
    D = params.D.astype(np.float64, copy=False)
    out = []
    for t in tuples:
        acc: dict[tuple[str, int], np.ndarray] = {}
        u, v, d = U[t.center], V[t.context], D[t.doc]
        for neg in t.negatives:
            n = U[neg]
            grads = euclidean_gradients(u, v, d, n, m)
            keys = (("U", t.center), ("V", t.context), ("D", t.doc), ("U", neg))
            bases = (u, v, d, n)
            for key, x, g in zip(keys, bases, grads):
                r = project_to_tangent(x, g).delta
                acc[key] = acc.get(key, 0.0) + r
        out.append(np.sqrt(sum(float(np.dot(r, r)) for r in acc.values())))
    return float(np.mean(out))


EpochCallback = Callable[[int, EmbeddingMatrices, TrainStats], None]


def train(
    corpus: EncodedCorpus,
    vocab: Vocabulary,
    config: TrainConfig,
    init: EmbeddingMatrices | None = None,
    on_epoch_end: EpochCallback | None = None,
) -> tuple[EmbeddingMatrices, TrainStats]:
    """Run ``config.iterations`` epochs of lock-free Riemannian SGD.

    With ``threads == 1`` the result is a deterministic function of the
    config, corpus and seed. With more threads, workers share the matrices
    without locks and the outcome depends on scheduling.
    """
    if corpus.doc_count == 0:
        raise ValueError("corpus has no paragraphs")
    dtype = np.dtype(config.dtype)
    if init is None:
        init = init_embeddings(len(vocab), corpus.doc_count, config.dim, config.seed)
    params = init.astype(dtype)
    stats = TrainStats(learning_rate=config.initial_lr)
    if config.iterations == 0:
        return params, stats

    tokens, offsets = corpus.flat()
    keep = keep_probabilities(vocab, config.subsample)
    cum = NegativeSampler(vocab.counts, config.neg_power).cumulative
    per_epoch = expected_tuples_per_epoch(corpus, keep, config.window, config.fixed_window)
    expected_total = max(per_epoch * config.iterations, 1.0)
    stats.expected_tuples = expected_total
    neg_scale = 1.0 / config.negatives if config.neg_reduce == "mean" else 1.0
    parts = partition_documents(corpus, config.threads)
    progress = np.zeros(1, dtype=np.int64)

    def run(worker: int, epoch: int, out: np.ndarray) -> None:
        lo, hi = parts[worker]
        state = np.array([stream_state(config.seed, worker, epoch)], dtype=np.uint64)
        _kernels.run_worker(
            params.U, params.V, params.D, tokens, offsets, lo, hi, keep, cum,
            config.window, config.fixed_window, config.negatives, neg_scale,
            config.margin, config.initial_lr, config.lr_floor_fraction,
            expected_total, progress, state, out,
        )

    for epoch in range(config.iterations):
        t0 = time.perf_counter()
        outs = np.zeros((config.threads, 4))
        if config.threads == 1:
            run(0, epoch, outs[0])
        else:
            workers = [
                threading.Thread(target=run, args=(w, epoch, outs[w]), daemon=True)
                for w in range(config.threads)
            ]
            for th in workers:
                th.start()
            for th in workers:
                th.join()
        for M in (params.U, params.V, params.D):
            _kernels.renormalize_rows(M)
        n_tuples = int(outs[:, 1].sum())
        stats.processed_tuples += n_tuples
        stats.epoch_loss.append(float(outs[:, 0].sum() / max(n_tuples, 1)))
        stats.epoch_active_fraction.append(
            float(outs[:, 2].sum() / max(n_tuples * config.negatives, 1))
        )
        stats.epoch_seconds.append(time.perf_counter() - t0)
        stats.learning_rate = float(outs[:, 3].min())
        log.info(
            "epoch %d/%d  tuples=%d  loss=%.5f  lr=%.6f  %.1fs",
            epoch + 1, config.iterations, n_tuples, stats.epoch_loss[-1],
            stats.learning_rate, stats.epoch_seconds[-1],
        )
        if on_epoch_end is not None:
            on_epoch_end(epoch + 1, params, stats)
    return params, stats


def save_embeddings(path, keys: Sequence, matrix: np.ndarray) -> None:
    """Write ``<count> <dim>`` then one ``key v1 ... vp`` row per line, 6 decimals."""
    matrix = np.asarray(matrix)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for key, row in zip(keys, matrix):
            f.write(str(key) + " " + " ".join(f"{x:.6f}" for x in row) + "\n")


def load_embeddings(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: bad header, expected '<count> <dim>'")
        count, dim = int(header[0]), int(header[1])
        keys: list[str] = []
        M = np.empty((count, dim), dtype=np.float64)
        for i, line in enumerate(f):
            if i >= count:
                raise ValueError(f"{path}: more rows than the header's {count}")
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}:{i + 2}: expected {dim} values")
            keys.append(parts[0])
            M[i] = np.array(parts[1:], dtype=np.float64)
    if len(keys) != count:
        raise ValueError(f"{path}: header says {count} rows, found {len(keys)}")
    return keys, M
