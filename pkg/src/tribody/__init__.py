"""Planar three-body motion under homogeneous potentials.

Integrates the equations of motion for ``V = (1/alpha) sum m_i m_j r_ij**alpha``
(logarithmic at alpha = 0), builds constrained initial conditions, checks
the kinematic equalities that hold on zero angular momentum orbits,
detects syzygies and finds figure-eight orbits by shooting.

Modules
-------
core        states, derived scalars, constraint projection
dynamics    force law, integration, trajectory export
geometry    tangent/normal concurrency, circumcircle, similar triangles, dual triplets
scaling     scaled variables and the general area identity
conserved   momentum constant, energy partition, momentum/force similarity
syzygy      oriented-area dynamics, zero detection, zero-gap certificate
orbits      figure-eight shooting, certification, orbit library
cli         command-line driver
"""
from .core import (
    Masses, PhaseState, derived_quantities, feasible_state, parse_state_literal,
    project_constraints,
)
from .dynamics import Trajectory, integrate
from .errors import (
    CollisionSingularity, HypothesisViolated, ShootingError, ThreeBodyError, TripleCollision,
)
from .potential import PotentialSpec, acceleration

__version__ = "0.1.0"

__all__ = [
    "Masses", "PhaseState", "PotentialSpec", "Trajectory", "acceleration", "derived_quantities",
    "feasible_state", "integrate", "parse_state_literal", "project_constraints",
    "CollisionSingularity", "HypothesisViolated", "ShootingError", "ThreeBodyError", "TripleCollision",
]
