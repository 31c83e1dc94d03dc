"""Positions scaled by sqrt(I) and their velocities.

Scaling fixes the moment of inertia at one, so the similarity results for
constant-I motion apply to the scaled variables of any zero angular
momentum motion, whatever ``I(t)`` does.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Masses, dot, wedge
from .errors import HypothesisViolated, TripleCollision
from .geometry import HYPOTHESIS_TOL, AlgebraicTriplet, check_hypotheses, verify_triplet
from .potential import CYCLIC


@dataclass(frozen=True)
class ScaledState:
    qt: np.ndarray
    vt: np.ndarray
    Kt: float

    def invariant_residuals(self, masses):
        """Scaled moment minus one, and the four constraint sums (absolute)."""
        m = Masses.of(masses).array
        return {
            "moment": float(np.sum(m * dot(self.qt, self.qt)) - 1.0),
            "sum_q": float(np.hypot(*(m @ self.qt))),
            "sum_v": float(np.hypot(*(m @ self.vt))),
            "outer": float(np.sum(m * wedge(self.qt, self.vt))),
            "inner": float(np.sum(m * dot(self.qt, self.vt))),
        }


def scale_state(state, masses, potential=None, eps=0.0):
    """Scaled positions ``q / sqrt(I)`` and velocities ``d/dt (q / sqrt(I))``.

    The velocity uses the closed form ``v / sqrt(I) - q dI/dt / (2 I**1.5)``
    with ``dI/dt = 2 sum q.p``.  ``potential`` is accepted for signature
    symmetry with the other state functions and is not needed.
    """
    m = Masses.of(masses).array
    q = state.q
    v = state.p / m[:, None]
    I = float(np.sum(m * dot(q, q)))
    if I <= eps:
        raise TripleCollision("triple collision, scaling undefined")
    dIdt = 2.0 * float(np.sum(dot(q, state.p)))
    sq = np.sqrt(I)
    qt = q / sq
    vt = v / sq - q * dIdt / (2.0 * I * sq)
    return ScaledState(qt, vt, float(np.sum(m * dot(vt, vt))))


def general_area_residual(state, masses, pair, relative=False, hyp_tol=HYPOTHESIS_TOL):
    """``K q_i ^ q_j + I v_i ^ v_j - (1/2) dI/dt d/dt(q_i ^ q_j)`` for a zero angular momentum state.

    With ``relative=True`` the residual is divided by the sum of the
    magnitudes of the three terms (zero stays zero).
    """
    m = Masses.of(masses).array
    try:
        check_hypotheses(state, masses, ("angular",), hyp_tol)
    except HypothesisViolated:
        raise HypothesisViolated("zero angular momentum required") from None
    i, j = pair
    q = state.q
    v = state.p / m[:, None]
    I = float(np.sum(m * dot(q, q)))
    K = float(np.sum(m * dot(v, v)))
    dIdt = 2.0 * float(np.sum(m * dot(q, v)))
    dlam = wedge(v[i], q[j]) + wedge(q[i], v[j])
    terms = np.array([K * wedge(q[i], q[j]), I * wedge(v[i], v[j]), -0.5 * dIdt * dlam])
    res = float(terms.sum())
    if relative:
        scale = float(np.sum(np.abs(terms)))
        return res / scale if scale > 0 else 0.0
    return res


def scaled_triplet(scaled, masses):
    """The dual triplet ``(masses, qt, vt)``."""
    return AlgebraicTriplet(Masses.of(masses).array, scaled.qt, scaled.vt)


def scaled_similarity_report(scaled, masses, hyp_tol=HYPOTHESIS_TOL):
    """Similarity residuals of the scaled position triangle and scaled momentum triangle.

    Contains everything :func:`tribody.geometry.verify_triplet` returns
    plus ``scaled_area``: ``qt_i ^ qt_j + vt_i ^ vt_j / Kt``.
    """
    out = verify_triplet(scaled_triplet(scaled, masses), hyp_tol)
    qt, vt = scaled.qt, scaled.vt
    out["scaled_area"] = np.array([wedge(qt[i], qt[j]) + wedge(vt[i], vt[j]) / scaled.Kt for i, j, _ in CYCLIC])
    return out


def congruent_triangles(scaled, masses):
    """Vertices of the scaled position triangle and of the matching momentum triangle.

    The second triangle has vertices ``(m_i vt_i - m_j vt_j) / (3 kappa)``
    for cyclic ``(i, j, k)`` at slot ``k``, with ``kappa`` the scaled ratio
    of magnification, so its sides equal the scaled mutual distances and
    the two triangles are congruent with opposite orientation.
    """
    masses = Masses.of(masses)
    m = masses.array
    pt = m[:, None] * scaled.vt
    kappa = np.sqrt(masses.product * scaled.Kt / masses.total)
    tri = np.empty((3, 2))
    for i, j, k in CYCLIC:
        tri[k] = (pt[i] - pt[j]) / (3.0 * kappa)
    return scaled.qt.copy(), tri
