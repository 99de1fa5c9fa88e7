"""Compiled hot loop: one worker's epoch over its paragraph range.

The kernel releases the GIL, so several Python threads can run it at once
against the same embedding arrays with no locking (races on a row are
tolerated; updates are sparse). It replays exactly the draw order of
``corpus.tuple_stream`` and the arithmetic of ``sphere.update_point``.
"""

import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

LR_BLOCK = 10_000


@njit(nogil=True, cache=True)
def next_u64(state):
    s = state[0] + _GOLDEN
    state[0] = s
    z = (s ^ (s >> _S30)) * _C1
    z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


@njit(nogil=True, cache=True)
def uniform(state):
    return np.float64(next_u64(state) >> _S11) * _INV53


@njit(nogil=True, cache=True)
def _sample(cum, state):
    u = uniform(state)
    lo = 0
    hi = cum.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    if lo >= cum.shape[0]:
        lo = cum.shape[0] - 1
    return lo


@njit(nogil=True, cache=True)
def _rsgd_row(row, x, g, eta, negative):
    p = g.shape[0]
    gn2 = 0.0
    xg = 0.0
    for i in range(p):
        gn2 += g[i] * g[i]
        xg += x[i] * g[i]
    gn = math.sqrt(gn2)
    if gn <= 1e-12:
        return
    c = xg / gn
    mult = c if negative else 1.0 + c
    if mult == 0.0:
        return
    s = -eta * mult
    n2 = 0.0
    for i in range(p):
        y = x[i] + s * (g[i] - xg * x[i])
        n2 += y * y
    inv = 1.0 / math.sqrt(n2)
    for i in range(p):
        row[i] = (x[i] + s * (g[i] - xg * x[i])) * inv


@njit(nogil=True, cache=True)
def pair_step(U, V, D, u, v, d, n, eta, margin, su, sv, sd, sn, gu, gv, gd, gn):
    """Hinge step for one (center, context, paragraph, negative); returns the loss."""
    p = U.shape[1]
    for i in range(p):
        su[i] = U[u, i]
        sv[i] = V[v, i]
        sd[i] = D[d, i]
        sn[i] = U[n, i]
    vu = 0.0
    ud = 0.0
    vn = 0.0
    nd = 0.0
    for i in range(p):
        vu += sv[i] * su[i]
        ud += su[i] * sd[i]
        vn += sv[i] * sn[i]
        nd += sn[i] * sd[i]
    loss = margin - vu - ud + vn + nd
    if loss <= 0.0:
        return 0.0
    for i in range(p):
        gu[i] = -sv[i] - sd[i]
        gv[i] = -su[i] + sn[i]
        gd[i] = -su[i] + sn[i]
        gn[i] = sv[i] + sd[i]
    _rsgd_row(U[u], su, gu, eta, False)
    _rsgd_row(V[v], sv, gv, eta, False)
    _rsgd_row(D[d], sd, gd, eta, False)
    _rsgd_row(U[n], sn, gn, eta, True)
    return loss


@njit(nogil=True, cache=True)
def run_worker(
    U, V, D, tokens, offsets, doc_lo, doc_hi, keep, cum,
    window, fixed_window, negatives, neg_scale, margin,
    lr0, lr_floor, expected_total, progress, state, stats,
):
    """Train on paragraphs ``[doc_lo, doc_hi)`` for one epoch.

    ``progress[0]`` is the shared processed-tuple counter driving the linear
    learning-rate decay; ``stats`` receives (loss sum, tuples, active pairs,
    final eta).
    """
    p = U.shape[1]
    dt = np.float64
    su = np.empty(p, dt)
    sv = np.empty(p, dt)
    sd = np.empty(p, dt)
    sn = np.empty(p, dt)
    gu = np.empty(p, dt)
    gv = np.empty(p, dt)
    gd = np.empty(p, dt)
    gn = np.empty(p, dt)
    maxlen = 0
    for d in range(doc_lo, doc_hi):
        L = offsets[d + 1] - offsets[d]
        if L > maxlen:
            maxlen = L
    kept = np.empty(maxlen, np.int64)
    negs = np.empty(max(negatives, 1), np.int64)

    frac = 1.0 - progress[0] / expected_total
    eta = lr0 * max(frac, lr_floor)
    local = 0
    loss_sum = 0.0
    tuples = 0
    active = 0
    for d in range(doc_lo, doc_hi):
        n = 0
        for j in range(offsets[d], offsets[d + 1]):
            w = tokens[j]
            kp = keep[w]
            if kp < 1.0:
                if uniform(state) >= kp:
                    continue
            kept[n] = w
            n += 1
        for t in range(n):
            if fixed_window:
                b = window
            else:
                b = 1 + np.int64(next_u64(state) % np.uint64(window))
            lo = max(0, t - b)
            hi = min(n, t + b + 1)
            for c in range(lo, hi):
                if c == t:
                    continue
                for k in range(negatives):
                    negs[k] = _sample(cum, state)
                u = kept[t]
                v = kept[c]
                for k in range(negatives):
                    l = pair_step(U, V, D, u, v, d, negs[k], eta * neg_scale, margin,
                                  su, sv, sd, sn, gu, gv, gd, gn)
                    if l > 0.0:
                        loss_sum += l * neg_scale
                        active += 1
                tuples += 1
                local += 1
                if local >= LR_BLOCK:
                    progress[0] += local
                    local = 0
                    frac = 1.0 - progress[0] / expected_total
                    eta = lr0 * max(frac, lr_floor)
    progress[0] += local
    stats[0] = loss_sum
    stats[1] = tuples
    stats[2] = active
    stats[3] = eta


@njit(nogil=True, cache=True)
def renormalize_rows(X):
    for r in range(X.shape[0]):
        n2 = 0.0
        for i in range(X.shape[1]):
            n2 += np.float64(X[r, i]) * X[r, i]
        if n2 > 0.0:
            inv = 1.0 / math.sqrt(n2)
            for i in range(X.shape[1]):
                X[r, i] = X[r, i] * inv
