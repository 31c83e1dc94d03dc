"""Homogeneous pair potential and the force law it generates.

``V = (1/alpha) sum_{i<j} m_i m_j r_ij**alpha`` for ``alpha != 0`` and
``sum_{i<j} m_i m_j log r_ij`` for ``alpha == 0``.  Every value of alpha
gives an attractive force ``m_i m_j r_ij**(alpha - 2) (q_j - q_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CollisionSingularity

PAIRS = ((0, 1), (1, 2), (2, 0))
"""Pairs ordered as (12, 23, 31); pair ``n`` is opposite body ``(n + 2) % 3``."""

CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


@dataclass(frozen=True)
class PotentialSpec:
    alpha: float
    masses: "Masses"  # noqa: F821  (core.Masses; kept loose to avoid an import cycle)

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise ValueError("alpha must be finite")


def pair_distances(q):
    """Mutual distances ``(r12, r23, r31)`` for positions of shape (..., 3, 2)."""
    q = np.asarray(q, dtype=float)
    d = q[..., [1, 2, 0], :] - q[..., [0, 1, 2], :]
    return np.hypot(d[..., 0], d[..., 1])


def _check_separated(r, alpha):
    if alpha < 2 and np.any(r == 0.0):
        pair = PAIRS[int(np.argmin(r))]
        raise CollisionSingularity(
            f"collision singularity: bodies {pair[0] + 1} and {pair[1] + 1} coincide (alpha={alpha})"
        )


def potential_energy(q, masses, alpha):
    m = np.asarray(masses.array if hasattr(masses, "array") else masses, dtype=float)
    r = pair_distances(q)
    _check_separated(r, alpha)
    mm = m[[0, 1, 2]] * m[[1, 2, 0]]
    if alpha == 0:
        V = np.sum(mm * np.log(r), axis=-1)
    else:
        V = np.sum(mm * r**alpha, axis=-1) / alpha
    return float(V) if np.ndim(V) == 0 else V


def pair_weights(r, alpha):
    """``r**(alpha - 2)`` per pair, the factor shared by force and area dynamics."""
    if alpha == 2:
        return np.ones_like(r)
    return r ** (alpha - 2.0)


def acceleration(q, masses, alpha):
    """Accelerations ``a_i = sum_j m_j r_ij**(alpha-2) (q_j - q_i)``.

    Parameters
    ----------
    q : array_like, shape (..., 3, 2)
    masses : Masses or array_like of 3 floats
    alpha : float

    Returns
    -------
    ndarray, shape (..., 3, 2)
    """
    q = np.asarray(q, dtype=float)
    m = np.asarray(masses.array if hasattr(masses, "array") else masses, dtype=float)
    d = q[..., [1, 2, 0], :] - q[..., [0, 1, 2], :]  # q_j - q_i for pairs 12, 23, 31
    r = np.hypot(d[..., 0], d[..., 1])
    _check_separated(r, alpha)
    g = pair_weights(r, alpha)[..., None] * d
    a = np.empty_like(q)
    # pair 31 stores q1 - q3, hence the sign flips
    a[..., 0, :] = m[1] * g[..., 0, :] - m[2] * g[..., 2, :]
    a[..., 1, :] = m[2] * g[..., 1, :] - m[0] * g[..., 0, :]
    a[..., 2, :] = m[0] * g[..., 2, :] - m[1] * g[..., 1, :]
    return a
