"""From a cluster-state adjacency matrix to the unitary that squeezes it out of vacuum.

For ``N = -(i I + A)`` any factorisation ``N = R U`` with ``R`` real and ``U``
unitary gives a pure state ``S^T diag(e^-2xi I, e^2xi I) S / 2`` whose
nullifiers ``p - A q`` have covariance ``(I + A^2) e^(-2 xi) / 2``.  Two such
factorisations are provided: polar and Gram-Schmidt (RQ).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DecompositionViolation, InvalidInput, NumericalFailure
from .gaussian import GaussianState, is_unitary, symplectic_from_unitary

WITNESS_TOL = 1e-9

SQUARE_CLUSTER = np.array([
    [0, 0, 1, 1],
    [0, 0, 1, 1],
    [1, 1, 0, 0],
    [1, 1, 0, 0],
], dtype=float)

# row premix that makes the square-cluster Gram-Schmidt tractable by hand
SQUARE_PREMIX = np.array([
    [1, -1, 0, 0],
    [0, 0, 1, -1],
    [1, 0, 0, 0],
    [0, 0, 1, 0],
], dtype=float)


@dataclass(frozen=True)
class ClusterGraph:
    """Weighted graph given by a real symmetric adjacency matrix."""

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidInput(f"adjacency must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidInput("adjacency has non-finite entries")
        A = (A + A.T) / 2
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def has_self_loops(self) -> bool:
        return bool(np.any(np.diag(self.A) != 0))

    @property
    def N(self) -> np.ndarray:
        return -(1j * np.eye(self.n) + self.A)

    @classmethod
    def from_edges(cls, n: int, edges) -> "ClusterGraph":
        A = np.zeros((n, n))
        for i, j, *w in edges:
            w = float(w[0]) if w else 1.0
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidInput(f"edge ({i}, {j}) out of range for n = {n}")
            A[i, j] = A[j, i] = w
        return cls(A)

    @classmethod
    def square(cls) -> "ClusterGraph":
        return cls(SQUARE_CLUSTER)


@dataclass(frozen=True)
class ClusterUnitary:
    """Unitary ``U`` with real witness ``R`` such that ``R U = -(i I + A)``."""

    U: np.ndarray
    method: str
    R: np.ndarray
    graph: ClusterGraph

    def __post_init__(self):
        U = np.array(self.U, dtype=complex)
        R = np.array(self.R, dtype=complex)
        if not is_unitary(U, WITNESS_TOL):
            raise DecompositionViolation("U is not unitary")
        if np.max(np.abs(R.imag), initial=0.0) > WITNESS_TOL:
            raise DecompositionViolation("witness R is not real")
        if np.max(np.abs(R @ U - self.graph.N), initial=0.0) > WITNESS_TOL:
            raise DecompositionViolation("R U does not reproduce N")
        U.setflags(write=False)
        R = R.real.copy()
        R.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "R", R)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def S(self) -> np.ndarray:
        return symplectic_from_unitary(self.U)

    @classmethod
    def from_matrix(cls, U, graph: ClusterGraph, method: str = "explicit") -> "ClusterUnitary":
        """Wrap a given unitary, deriving the witness ``R = N U^dag``."""
        U = np.asarray(U, dtype=complex)
        if U.shape != (graph.n, graph.n):
            raise InvalidInput("U and graph sizes differ")
        return cls(U, method, graph.N @ U.conj().T, graph)


def _warn_self_loops(g: ClusterGraph):
    if g.has_self_loops:
        warnings.warn("adjacency has non-zero diagonal (self-loops)", stacklevel=3)


def unitary_polar(g: ClusterGraph) -> ClusterUnitary:
    """Polar route: ``R = (I + A^2)^(1/2)``, ``U = R^-1 N``."""
    _warn_self_loops(g)
    A = g.A
    w, Q = np.linalg.eigh(np.eye(g.n) + A @ A)
    R = (Q * np.sqrt(w)) @ Q.T
    Rinv = (Q / np.sqrt(w)) @ Q.T
    U = Rinv @ g.N
    return ClusterUnitary(U, "polar", R, g)


def unitary_gram_schmidt(g: ClusterGraph, row_premix: Optional[np.ndarray] = None) -> ClusterUnitary:
    """Gram-Schmidt route on the rows of ``N' = P N``.

    Each orthonormalised row is left with a real positive pivot, so
    ``N' U^dag`` is real lower-triangular with positive diagonal.
    """
    _warn_self_loops(g)
    n = g.n
    P = np.eye(n) if row_premix is None else np.asarray(row_premix, dtype=float)
    if P.shape != (n, n) or not np.all(np.isfinite(P)):
        raise InvalidInput("row premix must be a finite real n x n matrix")
    if abs(np.linalg.det(P)) < 1e-12:
        raise InvalidInput("row premix is singular")
    Np = P @ g.N
    U = np.zeros((n, n), dtype=complex)
    for k in range(n):
        v = Np[k].copy()
        # modified Gram-Schmidt, two passes for stability
        for _ in range(2):
            for j in range(k):
                v = v - (v @ U[j].conj()) * U[j]
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise NumericalFailure(f"rank deficiency at row {k}")
        U[k] = v / norm
    L = Np @ U.conj().T
    if np.max(np.abs(L.imag), initial=0.0) > WITNESS_TOL:
        raise DecompositionViolation("Gram-Schmidt factor is not real")
    if np.max(np.abs(np.triu(L, 1)), initial=0.0) > WITNESS_TOL:
        raise DecompositionViolation("Gram-Schmidt factor is not lower-triangular")
    R = np.linalg.solve(P, L.real)
    return ClusterUnitary(U, "gram-schmidt", R, g)


def cluster_covariance(u: ClusterUnitary, xi: float) -> GaussianState:
    """Covariance ``S^T diag(e^-2xi I, e^2xi I) S / 2`` of the approximate cluster state."""
    if not (np.isfinite(xi) and xi >= 0):
        raise InvalidInput(f"squeezing must be non-negative, got {xi}")
    n = u.n
    S = u.S
    d = np.concatenate([np.full(n, np.exp(-2 * xi)), np.full(n, np.exp(2 * xi))])
    V = (S.T * d) @ S / 2
    return GaussianState((V + V.T) / 2)


def nullifier_covariance(state, g: ClusterGraph) -> np.ndarray:
    """Covariance of ``p - A q``: ``[-A, I] V [-A, I]^T``."""
    V = state.cov if isinstance(state, GaussianState) else np.asarray(state, dtype=float)
    if V.shape != (2 * g.n, 2 * g.n):
        raise InvalidInput(f"state has {V.shape[0] // 2} modes, graph has {g.n}")
    M = np.hstack([-g.A, np.eye(g.n)])
    return M @ V @ M.T


def expected_nullifier_covariance(g: ClusterGraph, xi: float) -> np.ndarray:
    return (np.eye(g.n) + g.A @ g.A) * np.exp(-2 * xi) / 2
