"""Covariance-matrix algebra for n-mode Gaussian states.

Conventions used throughout the package:

* quadratures are ordered ``x = [q_1 .. q_n, p_1 .. p_n]``;
* ``[q_i, p_j] = i delta_ij`` so the symplectic form is ``[[0, I], [-I, 0]]``;
* ``V = <{dx, dx^T}>/2``, hence the vacuum covariance is ``I/2``;
* ``a_j = (q_j + i p_j)/sqrt(2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import block_diag
from scipy.stats import unitary_group

from .errors import InvalidCovariance, InvalidInput

SYMMETRY_REJECT_TOL = 1e-8
PHYSICALITY_TOL = 1e-9
LOOSE_PHYSICALITY_TOL = 1e-6
UNITARITY_TOL = 1e-9


def symplectic_form(n: int) -> np.ndarray:
    """Return the ``2n x 2n`` symplectic form in (q-block, p-block) ordering."""
    if n < 0:
        raise InvalidInput(f"mode count must be non-negative, got {n}")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def extended_symplectic_form(n: int, m: int) -> np.ndarray:
    """Symplectic form for a target+auxiliary vector ordered ``[x; x~]``."""
    return block_diag(symplectic_form(n), symplectic_form(m))


def mode_count(V: np.ndarray) -> int:
    V = np.asarray(V)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise InvalidInput(f"expected a square matrix of even size, got shape {V.shape}")
    return V.shape[0] // 2


def _finite(M, name="matrix"):
    M = np.asarray(M)
    if not np.all(np.isfinite(M)):
        raise InvalidInput(f"{name} has non-finite entries")
    return M


def symmetrize(V: np.ndarray, tol: float = SYMMETRY_REJECT_TOL) -> np.ndarray:
    """Return ``(V + V^T)/2`` after rejecting asymmetry larger than ``tol``."""
    V = np.asarray(_finite(V, "covariance"), dtype=float)
    mode_count(V)
    asym = np.max(np.abs(V - V.T)) if V.size else 0.0
    if asym > tol:
        raise InvalidCovariance(f"covariance asymmetric by {asym:.3e} (> {tol:.1e})")
    return (V + V.T) / 2


def ladder_to_quadrature(alpha, beta) -> np.ndarray:
    """Quadrature coefficients ``c`` with ``c . x = sum_j alpha_j a_j + beta_j a_j^dag``.

    Returns a complex vector of length ``2n`` (q-coefficients then p-coefficients).
    """
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    if alpha.shape != beta.shape or alpha.ndim != 1:
        raise InvalidInput("alpha and beta must be 1-d vectors of equal length")
    s = np.sqrt(2.0)
    return np.concatenate([(alpha + beta) / s, 1j * (alpha - beta) / s])


def build_cbar(C) -> np.ndarray:
    """Real image ``sqrt(2) [Re(iC); Im(iC)]`` of a complex ``m x 2n`` coupling matrix."""
    C = np.atleast_2d(np.asarray(_finite(C, "coupling C"), dtype=complex))
    iC = 1j * C
    return np.sqrt(2.0) * np.vstack([iC.real, iC.imag])


@dataclass(frozen=True)
class ComplexCoupling:
    """Coupling operators ``L = C x`` stored with their real image ``cbar``."""

    C: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.array(_finite(self.C, "coupling C"), dtype=complex))
        if C.shape[1] % 2:
            raise InvalidInput(f"coupling must have an even number of columns, got {C.shape}")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def n(self) -> int:
        return self.C.shape[1] // 2

    @cached_property
    def cbar(self) -> np.ndarray:
        cb = build_cbar(self.C)
        cb.setflags(write=False)
        return cb

    def __add__(self, other):
        return ComplexCoupling(self.C + other.C)

    def scaled(self, s) -> "ComplexCoupling":
        return ComplexCoupling(s * self.C)

    @classmethod
    def zeros(cls, m: int, n: int) -> "ComplexCoupling":
        return cls(np.zeros((m, 2 * n), dtype=complex))

    @classmethod
    def from_ladder(cls, alphas, betas, prefactor=1.0) -> "ComplexCoupling":
        """Rows ``prefactor * (sum_j alpha_ij a_j + beta_ij a_j^dag)``."""
        rows = [ladder_to_quadrature(a, b) for a, b in zip(np.atleast_2d(alphas), np.atleast_2d(betas))]
        return cls(prefactor * np.array(rows))


def symplectic_eigenvalues(V: np.ndarray, form: np.ndarray = None) -> np.ndarray:
    """Williamson spectrum of a positive-definite covariance, ascending, length n.

    ``form`` overrides the symplectic form (default: q-block/p-block ordering).
    """
    V = np.asarray(_finite(V, "covariance"), dtype=float)
    n = mode_count(V)
    try:
        np.linalg.cholesky((V + V.T) / 2)
    except np.linalg.LinAlgError:
        raise InvalidCovariance("covariance is not positive definite") from None
    J = symplectic_form(n) if form is None else np.asarray(form, dtype=float)
    ev = np.linalg.eigvals(1j * J @ V)
    nus = np.sort(np.abs(ev))
    # eigenvalues come in +/- pairs
    return nus[::2].copy()


def purity(V: np.ndarray) -> float:
    """Purity ``1/sqrt(2^(2n) det V)`` of a Gaussian state."""
    V = np.asarray(_finite(V, "covariance"), dtype=float)
    n = mode_count(V)
    sign, logdet = np.linalg.slogdet(V)
    if sign <= 0:
        raise InvalidCovariance("det V <= 0")
    return float(np.exp(-0.5 * (2 * n * np.log(2.0) + logdet)))


def is_physical(V: np.ndarray, tol: float = PHYSICALITY_TOL, form: np.ndarray = None) -> bool:
    """Uncertainty principle ``V + i Sigma/2 >= 0`` via the symplectic spectrum."""
    try:
        nus = symplectic_eigenvalues(V, form)
    except InvalidCovariance:
        return False
    return bool(nus.size == 0 or nus[0] >= 0.5 - tol)


def is_unitary(U, tol: float = UNITARITY_TOL) -> bool:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return bool(np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0])), initial=0.0) <= tol)


def symplectic_from_unitary(U) -> np.ndarray:
    """Orthogonal symplectic matrix ``[[Re U, -Im U], [Im U, Re U]]`` induced by ``a' = U a``."""
    U = np.asarray(_finite(U, "U"), dtype=complex)
    if not is_unitary(U):
        raise InvalidInput("U is not unitary")
    return np.block([[U.real, -U.imag], [U.imag, U.real]])


def vacuum(n: int) -> np.ndarray:
    return np.eye(2 * n) / 2


def squeezed_covariance(xi) -> np.ndarray:
    """Product of single-mode squeezed vacua, q squeezed: ``diag(e^-2xi, e^2xi)/2`` per mode."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return np.diag(np.concatenate([np.exp(-2 * xi), np.exp(2 * xi)])) / 2


def two_mode_squeezed_covariance(xi: float) -> np.ndarray:
    """Two-mode squeezed vacuum with q-anticorrelation / p-correlation, (q1, q2, p1, p2) order."""
    ch, sh = np.cosh(2 * xi), np.sinh(2 * xi)
    return 0.5 * np.array([
        [ch, -sh, 0, 0],
        [-sh, ch, 0, 0],
        [0, 0, ch, sh],
        [0, 0, sh, ch],
    ])


def random_symplectic(n: int, rng=None, max_squeezing: float = 1.0) -> np.ndarray:
    """Random symplectic matrix ``O1 D O2`` (Bloch-Messiah form)."""
    rng = np.random.default_rng(rng)
    u1 = unitary_group.rvs(n, random_state=rng) if n > 1 else np.exp(2j * np.pi * rng.random((1, 1)))
    u2 = unitary_group.rvs(n, random_state=rng) if n > 1 else np.exp(2j * np.pi * rng.random((1, 1)))
    r = rng.uniform(0.0, max_squeezing, size=n)
    D = np.diag(np.concatenate([np.exp(-r), np.exp(r)]))
    return symplectic_from_unitary(u1) @ D @ symplectic_from_unitary(u2)


@dataclass(frozen=True)
class GaussianState:
    """Zero-or-nonzero-mean Gaussian state in (q-block, p-block) ordering.

    The covariance is symmetrised on construction; asymmetry above ``1e-8`` and
    unphysical covariances are rejected.  ``physicality_tol`` can be loosened
    (``LOOSE_PHYSICALITY_TOL``) for covariances produced by long integrations.
    """

    cov: np.ndarray
    mean: np.ndarray = None
    physicality_tol: float = PHYSICALITY_TOL

    def __post_init__(self):
        cov = symmetrize(self.cov)
        n = mode_count(cov)
        if not is_physical(cov, self.physicality_tol):
            raise InvalidCovariance("covariance violates the uncertainty principle")
        mean = np.zeros(2 * n) if self.mean is None else np.array(_finite(self.mean, "mean"), dtype=float)
        if mean.shape != (2 * n,):
            raise InvalidInput(f"mean must have length {2 * n}, got {mean.shape}")
        cov.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", mean)

    @property
    def n(self) -> int:
        return self.cov.shape[0] // 2

    @property
    def purity(self) -> float:
        return purity(self.cov)

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.cov)

    @classmethod
    def vacuum(cls, n: int) -> "GaussianState":
        return cls(vacuum(n))
