"""Gaussian-state simulation of SU(1,1) displacement detection and in-situ network characterization.

Units: hbar = 1, ``a = (x + i p)/sqrt(2)``, vacuum covariance ``I/2``,
quadratures ordered ``(x_1, p_1, x_2, p_2, ...)``.
"""

from .gaussian import (
    EprVariables,
    GaussianState,
    InvalidStateError,
    SymplecticOp,
    beamsplit,
    coherent,
    displace,
    epr_variables,
    quadratic_moments,
    rotate,
    squeeze1,
    squeeze2,
    symplectic_eigenvalues,
    thermal,
    vacuum,
)
from .measurement import epr_measure, heterodyne, homodyne_bae, squeezed_heterodyne, vacuum_condition
from .rng import TrialStreams

__all__ = [
    "EprVariables",
    "GaussianState",
    "InvalidStateError",
    "SymplecticOp",
    "TrialStreams",
    "beamsplit",
    "coherent",
    "displace",
    "epr_measure",
    "epr_variables",
    "heterodyne",
    "homodyne_bae",
    "quadratic_moments",
    "rotate",
    "squeeze1",
    "squeeze2",
    "squeezed_heterodyne",
    "symplectic_eigenvalues",
    "thermal",
    "vacuum",
    "vacuum_condition",
]

__version__ = "0.1.0"
