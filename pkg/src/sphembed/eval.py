"""Evaluation harness: word similarity, document clustering, k-NN classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_ITER = 300


# ---------------------------------------------------------------- data carriers

@dataclass
class SimilarityDataset:
    pairs: list[tuple[str, str, float]]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("similarity dataset is empty")
        for w1, w2, s in self.pairs:
            if not math.isfinite(s):
                raise ValueError(f"non-finite score for pair ({w1}, {w2})")


@dataclass
class LabeledCorpus:
    labels: np.ndarray
    class_count: int
    class_names: list[str] | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError("label out of range")


@dataclass
class ClusteringResult:
    assignments: np.ndarray
    centroids: np.ndarray
    objective: float
    iterations: int = 0
    history: list[float] | None = None


def load_similarity_dataset(path) -> SimilarityDataset:
    """Read ``word1<TAB>word2<TAB>score`` lines; ``#`` lines are comments."""
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise ValueError(f"{path}:{lineno}: expected word1<TAB>word2<TAB>score")
            pairs.append((parts[0], parts[1], float(parts[2])))
    return SimilarityDataset(pairs)


def write_similarity_dataset(path, dataset: SimilarityDataset) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for w1, w2, s in dataset.pairs:
            f.write(f"{w1}\t{w2}\t{s!r}\n")


def load_labeled_corpus(path) -> tuple[LabeledCorpus, list[str]]:
    """Read ``label<TAB>text`` lines. Class ids follow sorted label names."""
    names, texts = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            label, sep, text = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected label<TAB>text")
            names.append(label)
            texts.append(text)
    classes = sorted(set(names))
    idx = {c: i for i, c in enumerate(classes)}
    return LabeledCorpus(np.array([idx[n] for n in names]), len(classes), classes), texts


def load_split(path) -> np.ndarray:
    """Line indices (0-based), one per line."""
    with open(path, encoding="utf-8") as f:
        return np.array([int(x) for x in f.read().split()], dtype=np.int64)


# ---------------------------------------------------------------- word similarity

def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    n = len(x)
    while i < n:
        j = i
        while j + 1 < n and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman's rho as the Pearson correlation of average ranks."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("spearman needs two equal-length sequences of length >= 2")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    den = math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry)))
    if den == 0.0:
        raise ValueError("spearman undefined: zero rank variance")
    return float(np.clip(np.dot(rx, ry) / den, -1.0, 1.0))


def evaluate_word_similarity(keys: Sequence[str], vectors: np.ndarray,
                             dataset: SimilarityDataset) -> tuple[float, float]:
    """Spearman between cosine similarity and human scores, plus pair coverage."""
    index = {k: i for i, k in enumerate(keys)}
    model, human = [], []
    for w1, w2, s in dataset.pairs:
        if w1 not in index or w2 not in index:
            continue
        a = vectors[index[w1]]
        b = vectors[index[w2]]
        model.append(float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))))
        human.append(s)
    if not model:
        raise ValueError("no dataset pair is covered by the embeddings")
    coverage = len(model) / len(dataset.pairs)
    return spearman(model, human), coverage


# ---------------------------------------------------------------- clustering

def _check_k(n: int, k: int) -> None:
    if k <= 0 or k > n:
        raise ValueError(f"need 1 <= k <= number of points ({n}), got k={k}")


def _plus_plus(X: np.ndarray, k: int, rng: np.random.Generator, cosine: bool) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]

    def cost(c):
        if cosine:
            return np.maximum(1.0 - X @ X[c], 0.0)
        diff = X - X[c]
        return np.einsum("ij,ij->i", diff, diff)

    dist = cost(chosen[0])
    for _ in range(1, k):
        total = dist.sum()
        if total <= 0:
            rest = np.setdiff1d(np.arange(n), chosen)
            c = int(rng.choice(rest))
        else:
            c = int(rng.choice(n, p=dist / total))
        chosen.append(c)
        dist = np.minimum(dist, cost(c))
    return X[chosen].copy()


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans(points, k: int, seed: int = 0, max_iter: int = MAX_ITER) -> ClusteringResult:
    """Lloyd's algorithm with k-means++ seeding.

    Empty clusters are moved to the point currently farthest from its centroid.
    """
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    _check_k(n, k)
    rng = np.random.default_rng(seed)
    C = _plus_plus(X, k, rng, cosine=False)
    assign = np.full(n, -1)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d = _sq_dists(X, C)
        new = d.argmin(1)
        history.append(float(d[np.arange(n), new].sum()))
        if np.array_equal(new, assign):
            break
        assign = new
        for j in range(k):
            members = assign == j
            if members.any():
                C[j] = X[members].mean(0)
            else:
                far = int(d[np.arange(n), assign].argmax())
                C[j] = X[far]
                assign[far] = j
                d[far] = 0.0
    d = _sq_dists(X, C)
    inertia = float(d[np.arange(n), assign].sum())
    return ClusteringResult(assign, C, inertia, it, history)


def spherical_kmeans(points, k: int, seed: int = 0, max_iter: int = MAX_ITER) -> ClusteringResult:
    """Cosine-assignment k-means with normalized-mean centroids.

    The objective is the total member-to-centroid cosine (maximized). An empty
    cluster, or one whose members sum to zero, is reseeded at the point with
    the lowest best-cosine.
    """
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    _check_k(n, k)
    if np.abs(np.linalg.norm(X, axis=1) - 1.0).max() > 1e-4:
        raise ValueError("spherical k-means needs unit-norm points")
    rng = np.random.default_rng(seed)
    C = _plus_plus(X, k, rng, cosine=True)
    assign = np.full(n, -1)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        S = X @ C.T
        new = S.argmax(1)
        best = S[np.arange(n), new]
        history.append(float(best.sum()))
        if np.array_equal(new, assign):
            break
        assign = new
        for j in range(k):
            members = assign == j
            s = X[members].sum(0) if members.any() else None
            norm = np.linalg.norm(s) if s is not None else 0.0
            if norm > 1e-12:
                C[j] = s / norm
            else:
                worst = int(best.argmin())
                C[j] = X[worst]
                assign[worst] = j
                best[worst] = 1.0
    S = X @ C.T
    objective = float(S[np.arange(n), assign].sum())
    return ClusteringResult(assign, C, objective, it, history)


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def contingency(assignments, labels) -> np.ndarray:
    a = np.asarray(assignments)
    b = np.asarray(labels)
    if a.shape != b.shape:
        raise ValueError("assignments and labels differ in length")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def clustering_metrics(assignments, labels, nmi_norm: str = "geometric") -> dict[str, float]:
    """MI (nats), NMI, ARI and purity of a clustering against gold labels."""
    T = contingency(assignments, labels)
    n = T.sum()
    rows = T.sum(1)
    cols = T.sum(0)
    nz = T > 0
    outer = np.outer(rows, cols)
    mi = float((T[nz] / n * np.log(n * T[nz] / outer[nz])).sum())
    ha = _entropy(rows)
    hb = _entropy(cols)
    if ha == 0.0 and hb == 0.0:
        raise ValueError("NMI undefined for a single cluster and a single class")
    if nmi_norm == "geometric":
        den = math.sqrt(ha * hb)
    elif nmi_norm == "arithmetic":
        den = (ha + hb) / 2.0
    else:
        raise ValueError(f"unknown NMI normalization {nmi_norm!r}")
    nmi = mi / den if den > 0 else 0.0

    def pairs(x):
        return (x * (x - 1) / 2.0).sum()

    sum_ij = pairs(T.astype(np.float64))
    sum_a = pairs(rows.astype(np.float64))
    sum_b = pairs(cols.astype(np.float64))
    expected = sum_a * sum_b / (n * (n - 1) / 2.0) if n > 1 else 0.0
    max_index = (sum_a + sum_b) / 2.0
    ari = 1.0 if max_index == expected else float((sum_ij - expected) / (max_index - expected))
    purity = float(T.max(1).sum() / n)
    return {"MI": mi, "NMI": min(nmi, 1.0), "ARI": ari, "Purity": purity}


# ---------------------------------------------------------------- classification

def knn_classify(train_points, train_labels, test_points, k: int = 3,
                 chunk: int = 1024) -> np.ndarray:
    """Majority vote over the k nearest training points by Euclidean distance.

    Distance ties go to the lower training index; vote ties go to whichever
    tied class owns the nearest neighbour.
    """
    Xtr = np.asarray(train_points, dtype=np.float64)
    ytr = np.asarray(train_labels)
    Xte = np.asarray(test_points, dtype=np.float64)
    if Xtr.shape[0] == 0:
        raise ValueError("empty training set")
    if k < 1 or k > Xtr.shape[0]:
        raise ValueError(f"need 1 <= k <= {Xtr.shape[0]} training points, got k={k}")
    out = np.empty(Xte.shape[0], dtype=ytr.dtype)
    for s in range(0, Xte.shape[0], chunk):
        d = _sq_dists(Xte[s:s + chunk], Xtr)
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        for r, nbrs in enumerate(order):
            labs = ytr[nbrs]
            vals, counts = np.unique(labs, return_counts=True)
            tied = set(vals[counts == counts.max()].tolist())
            out[s + r] = next(lab for lab in labs if lab in tied)
    return out


def f1_scores(predicted, gold, class_count: int) -> tuple[float, float]:
    """(macro F1, micro F1). Classes never gold nor predicted count as F1 = 0."""
    pred = np.asarray(predicted)
    gold = np.asarray(gold)
    if pred.shape != gold.shape:
        raise ValueError("predicted and gold differ in length")
    f1s = []
    tp_all = fp_all = fn_all = 0
    for c in range(class_count):
        tp = int(((pred == c) & (gold == c)).sum())
        fp = int(((pred == c) & (gold != c)).sum())
        fn = int(((pred != c) & (gold == c)).sum())
        tp_all += tp
        fp_all += fp
        fn_all += fn
        den = 2 * tp + fp + fn
        f1s.append(2 * tp / den if den else 0.0)
    den = 2 * tp_all + fp_all + fn_all
    micro = 2 * tp_all / den if den else 0.0
    return float(np.mean(f1s)), float(micro)
