"""Dissipative preparation of pure Gaussian states with quasilocal couplings."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .gaussian import (  # noqa: F401
    ComplexCoupling,
    GaussianState,
    build_cbar,
    purity,
    symplectic_eigenvalues,
    symplectic_form,
    symplectic_from_unitary,
)
from .lyapunov import integrate_covariance, is_hurwitz, solve_lyapunov  # noqa: F401
