"""Test-only data generators: a vMF rejection sampler and a corpus drawn from
the spherical generative model (paragraph -> center word -> context word)."""

from __future__ import annotations

import numpy as np


def sample_vmf(mu, kappa: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Wood's rejection sampler for vMF(mu, kappa) on S^{p-1}."""
    mu = np.asarray(mu, dtype=np.float64)
    p = mu.shape[0]
    b = (p - 1) / (2.0 * kappa + np.sqrt(4.0 * kappa**2 + (p - 1) ** 2))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + (p - 1) * np.log(1.0 - x0**2)
    out = np.empty((n, p))
    for i in range(n):
        while True:
            z = rng.beta((p - 1) / 2.0, (p - 1) / 2.0)
            w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
            if kappa * w + (p - 1) * np.log(1.0 - x0 * w) - c >= np.log(rng.uniform()):
                break
        v = rng.standard_normal(p)
        v -= v.dot(mu) * mu
        v /= np.linalg.norm(v)
        out[i] = w * mu + np.sqrt(max(1.0 - w * w, 0.0)) * v
    return out


def generative_corpus(
    n_docs: int = 300,
    vocab_size: int = 1000,
    p: int = 10,
    clusters: int = 3,
    kappa: float = 5.0,
    doc_len: int = 60,
    word_kappa: float = 1.0,
    seed: int = 0,
):
    """Lines of text plus cluster labels.

    Cluster means are orthogonal axes. Each paragraph direction ``d`` is drawn
    from vMF(mean, kappa). Words follow a chain in which the next word ``w``
    is drawn with probability proportional to
    ``exp(word_kappa * (cos(w, prev) + cos(w, d)))``; ``word_kappa = 1`` is the
    product of the two unit-concentration conditionals.
    """
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((vocab_size, p))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    means = np.eye(p)[:clusters]
    labels = np.repeat(np.arange(clusters), int(np.ceil(n_docs / clusters)))[:n_docs]
    rng.shuffle(labels)
    names = [f"w{i}" for i in range(vocab_size)]
    lines = []
    for lab in labels:
        d = sample_vmf(means[lab], kappa, 1, rng)[0]
        doc_score = W @ d
        prev = None
        words = []
        for _ in range(doc_len):
            s = doc_score if prev is None else doc_score + W @ W[prev]
            s = word_kappa * s
            prob = np.exp(s - s.max())
            prob /= prob.sum()
            prev = int(rng.choice(vocab_size, p=prob))
            words.append(names[prev])
        lines.append(" ".join(words))
    return lines, labels
