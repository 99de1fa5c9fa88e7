"""Geometry of the unit hypersphere S^{p-1}.

Points are plain 1-D float arrays with unit norm. Tangent vectors carry their
base point so that ``exp_map`` and ``retract`` know where they live.

All routines here work in double precision and are pure; the training kernels
inline the same arithmetic for speed (see ``sphembed._kernels``).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

UNIT_TOL = 1e-6
ZERO_NORM = 1e-12


class TangentVector(NamedTuple):
    """A vector ``delta`` in the tangent hyperplane at ``base``."""

    base: np.ndarray
    delta: np.ndarray


def as_unit_vector(coords, tol: float = UNIT_TOL) -> np.ndarray:
    """Validate ``coords`` as a point on the sphere and return it as float64."""
    x = np.asarray(coords, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ValueError(f"unit vector needs shape (p,) with p >= 2, got {x.shape}")
    n = np.linalg.norm(x)
    if abs(n - 1.0) > tol:
        raise ValueError(f"vector is not unit-norm (|x| = {n!r})")
    return x


def normalize(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n = np.linalg.norm(x)
    if n < ZERO_NORM:
        raise ValueError("cannot normalize a zero vector")
    return x / n


def geodesic_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Arc length between two unit vectors, in radians.

    Equal to ``arccos(clip(x.y, -1, 1))`` but evaluated as
    ``2 atan2(|x - y|, |x + y|)``, which keeps full precision near 0 and pi.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(2.0 * np.arctan2(np.linalg.norm(x - y), np.linalg.norm(x + y)))


def project_to_tangent(x: np.ndarray, g: np.ndarray) -> TangentVector:
    """Apply ``I - x x^T`` to ``g``.

    Applied to a Euclidean gradient this gives the Riemannian gradient at ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    delta = g - np.dot(x, g) * x
    return TangentVector(x, delta)


def exp_map(z: TangentVector) -> np.ndarray:
    base, delta = z
    n = np.linalg.norm(delta)
    if n < ZERO_NORM:
        return np.array(base, dtype=np.float64)
    return np.cos(n) * base + np.sin(n) * (delta / n)


def retract(z: TangentVector) -> np.ndarray:
    """First-order stand-in for ``exp_map``: step in ambient space, renormalize."""
    y = np.asarray(z.base, dtype=np.float64) + z.delta
    n = np.linalg.norm(y)
    # |base + delta|^2 = 1 + |delta|^2 for tangent delta, so this cannot trigger
    # unless the caller passed a non-tangent delta.
    if n < ZERO_NORM:
        raise ValueError("degenerate retraction: base + delta is the zero vector")
    return y / n


def angular_multiplier(x: np.ndarray, g: np.ndarray, negative_sample: bool = False) -> float:
    """Step-size multiplier that accounts for the angle between ``x`` and ``-g``.

    Positive rows get the cosine distance to the descent direction,
    ``1 + x.g/|g|`` in [0, 2]. Negative samples get the negative cosine
    similarity to the descent direction, ``x.g/|g|`` in [-1, 1], which vanishes
    when the row is orthogonal to ``g`` instead of pushing it to the antipode.
    """
    gn = float(np.linalg.norm(g))
    if gn <= ZERO_NORM:
        return 0.0
    c = float(np.dot(x, g)) / gn
    return c if negative_sample else 1.0 + c


def update_point(
    x: np.ndarray, g: np.ndarray, eta: float, negative_sample: bool = False
) -> np.ndarray:
    """One modified Riemannian SGD step from ``x`` given Euclidean gradient ``g``."""
    if eta <= 0:
        raise ValueError(f"learning rate must be positive, got {eta}")
    x = np.asarray(x, dtype=np.float64)
    mult = angular_multiplier(x, g, negative_sample)
    if mult == 0.0:
        return x.copy()
    base, delta = project_to_tangent(x, g)
    return retract(TangentVector(base, -eta * mult * delta))
