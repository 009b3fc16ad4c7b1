"""Drift/diffusion models and pure-steady-state certification.

A *target* system is ``H = x^T G x / 2`` with coupling operators ``L = C x``.
Its *extended* counterpart replaces ``L`` by ``m`` auxiliary modes damped at
rate ``kappa`` and coupled through ``i(a~^dag C x - x^T C^dag a~)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInput, NoUniqueSteadyState, TheoremHypothesisViolated
from .gaussian import (
    ComplexCoupling,
    GaussianState,
    ladder_to_quadrature,
    purity,
    random_symplectic,
    symplectic_form,
)
from .lyapunov import HurwitzReport, is_hurwitz, solve_lyapunov

KERNEL_EIG_TOL = 1e-9


def _maxabs(M) -> float:
    return float(np.max(np.abs(M), initial=0.0))


@dataclass(frozen=True)
class TargetSystem:
    """Quadratic Hamiltonian ``G`` (``2n x 2n`` real symmetric) plus coupling ``C``."""

    G: np.ndarray
    coupling: ComplexCoupling

    def __post_init__(self):
        coupling = self.coupling
        if not isinstance(coupling, ComplexCoupling):
            coupling = ComplexCoupling(coupling)
        G = np.array(self.G, dtype=float)
        n2 = coupling.C.shape[1]
        if G.shape != (n2, n2):
            raise InvalidInput(f"G has shape {G.shape}, coupling implies {(n2, n2)}")
        if not np.all(np.isfinite(G)):
            raise InvalidInput("G has non-finite entries")
        if _maxabs(G - G.T) > 1e-10:
            raise InvalidInput("G is not symmetric")
        G = (G + G.T) / 2
        G.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "coupling", coupling)

    @property
    def n(self) -> int:
        return self.coupling.n

    @property
    def m(self) -> int:
        return self.coupling.m

    @property
    def C(self) -> np.ndarray:
        return self.coupling.C

    @classmethod
    def from_coupling(cls, C, G=None) -> "TargetSystem":
        cp = C if isinstance(C, ComplexCoupling) else ComplexCoupling(C)
        if G is None:
            G = np.zeros((2 * cp.n, 2 * cp.n))
        return cls(G, cp)


@dataclass(frozen=True)
class ExtendedSystem:
    """Target (with ``L = 0``) coupled to ``m`` auxiliary modes damped at ``kappa``.

    ``gamma`` adds amplitude damping ``sqrt(gamma) a_j`` on every target mode;
    it is zero in the ideal construction.
    """

    target: TargetSystem
    kappa: float
    gamma: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise InvalidInput(f"kappa must be positive, got {self.kappa}")
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise InvalidInput(f"gamma must be non-negative, got {self.gamma}")

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def m(self) -> int:
        return self.target.m


@dataclass(frozen=True)
class EprParams:
    """Two atomic ensembles in a two-mode cavity.

    Rates are in the same (arbitrary) unit as ``mu``; :meth:`normalized`
    divides them by ``mu``.  ``epsilon = sqrt(N2/N1)``.
    """

    r: float
    kappa: float = 1.0
    gamma: float = 0.0
    epsilon: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        vals = (self.r, self.kappa, self.gamma, self.epsilon, self.mu)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidInput("EPR parameters must be finite")
        if not 0 <= self.r < 1:
            raise InvalidInput(f"r must lie in [0, 1), got {self.r}")
        if self.kappa <= 0:
            raise InvalidInput(f"kappa must be positive, got {self.kappa}")
        if self.gamma < 0:
            raise InvalidInput(f"gamma must be non-negative, got {self.gamma}")
        if self.epsilon <= 0:
            raise InvalidInput(f"epsilon must be positive, got {self.epsilon}")
        if self.mu <= 0:
            raise InvalidInput(f"mu must be positive, got {self.mu}")

    @property
    def xi(self) -> float:
        return float(np.arctanh(self.r))

    def normalized(self) -> "EprParams":
        return EprParams(self.r, self.kappa / self.mu, self.gamma / self.mu, self.epsilon, 1.0)


def build_target_drift(sys: TargetSystem):
    """``A1 = Sigma (G + cbar^T Sigma_m cbar / 2)`` and ``B1 = Sigma cbar^T``."""
    n, m = sys.n, sys.m
    Sn, Sm = symplectic_form(n), symplectic_form(m)
    cb = sys.coupling.cbar
    A1 = Sn @ (sys.G + cb.T @ Sm @ cb / 2)
    B1 = Sn @ cb.T
    return A1, B1


def build_extended_drift(ext: ExtendedSystem):
    """Block drift/diffusion of target plus auxiliary modes.

    With ``gamma = 0`` the diffusion is ``-[0; sqrt(kappa) I_2m]``; otherwise it
    is ``diag(sqrt(gamma) I_2n, sqrt(kappa) I_2m)`` and the target block of the
    drift gains ``-gamma/2 I``.
    """
    n, m = ext.n, ext.m
    Sn, Sm = symplectic_form(n), symplectic_form(m)
    cb = ext.target.coupling.cbar
    A = np.block([
        [Sn @ ext.target.G - ext.gamma / 2 * np.eye(2 * n), Sn @ cb.T],
        [Sm @ cb, -ext.kappa / 2 * np.eye(2 * m)],
    ])
    if ext.gamma == 0:
        B = -np.vstack([np.zeros((2 * n, 2 * m)), np.sqrt(ext.kappa) * np.eye(2 * m)])
    else:
        B = np.zeros((2 * (n + m), 2 * (n + m)))
        B[: 2 * n, : 2 * n] = np.sqrt(ext.gamma) * np.eye(2 * n)
        B[2 * n:, 2 * n:] = np.sqrt(ext.kappa) * np.eye(2 * m)
    return A, B


def with_damping(sys: TargetSystem, gamma: float) -> TargetSystem:
    """Append amplitude-damping channels ``sqrt(gamma) a_j`` to the coupling."""
    if gamma < 0:
        raise InvalidInput("gamma must be non-negative")
    if gamma == 0:
        return sys
    n = sys.n
    damp = ComplexCoupling.from_ladder(np.eye(n), np.zeros((n, n)), np.sqrt(gamma))
    return TargetSystem(sys.G, ComplexCoupling(np.vstack([sys.C, damp.C])))


def target_steady_state(sys: TargetSystem, method: str = "schur") -> np.ndarray:
    A1, B1 = build_target_drift(sys)
    return solve_lyapunov(A1, B1 @ B1.T / 2, method=method)


@dataclass(frozen=True)
class Theorem1Certificate:
    kernel_residual: float
    hamiltonian_residual: float
    purity: float
    tol: float
    hurwitz: HurwitzReport

    @property
    def passed(self) -> bool:
        return self.kernel_residual <= self.tol and self.hamiltonian_residual <= self.tol

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "kernel_residual": self.kernel_residual,
            "hamiltonian_residual": self.hamiltonian_residual,
            "purity": self.purity,
            "tol": self.tol,
        }


def check_theorem1(V, sys: TargetSystem, tol: float = 1e-8) -> Theorem1Certificate:
    """Evaluate the pure-steady-state conditions for covariance ``V``.

    Reports ``|(V + i Sigma/2) C^T|`` and ``|Sigma G V + V (Sigma G)^T|`` (max-abs
    entries); passes iff both are ``<= tol``.  ``V=None`` uses the steady state
    of the target drift.

    Raises:
        NoUniqueSteadyState: the target drift is not Hurwitz.
    """
    A1, B1 = build_target_drift(sys)
    report = is_hurwitz(A1)
    if not report:
        lam = report.worst_eigenvalue
        raise NoUniqueSteadyState(f"drift not Hurwitz: eigenvalue {lam:.6g}", eigenvalue=lam)
    if V is None:
        V = solve_lyapunov(A1, B1 @ B1.T / 2)
    V = np.asarray(V, dtype=float)
    n = sys.n
    if V.shape != (2 * n, 2 * n):
        raise InvalidInput(f"V has shape {V.shape}, expected {(2 * n, 2 * n)}")
    Sn = symplectic_form(n)
    k_res = _maxabs((V + 0.5j * Sn) @ sys.C.T)
    SG = Sn @ sys.G
    h_res = _maxabs(SG @ V + V @ SG.T)
    return Theorem1Certificate(k_res, h_res, purity(V), tol, report)


@dataclass(frozen=True)
class Theorem2Certificate:
    theorem1: Theorem1Certificate
    hurwitz: Optional[HurwitzReport]
    V: Optional[np.ndarray]
    V1: np.ndarray
    offdiag_residual: float = np.nan
    auxiliary_residual: float = np.nan
    target_residual: float = np.nan
    target_purity: float = np.nan
    tol: float = 1e-8
    notes: tuple = field(default=())

    @property
    def applicable(self) -> bool:
        return self.theorem1.passed

    @property
    def passed(self) -> bool:
        return (
            self.applicable
            and self.offdiag_residual <= self.tol
            and self.auxiliary_residual <= self.tol
            and self.target_residual <= self.tol
        )

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "applicable": self.applicable,
            "offdiag_residual": self.offdiag_residual,
            "auxiliary_residual": self.auxiliary_residual,
            "target_residual": self.target_residual,
            "target_purity": self.target_purity,
            "tol": self.tol,
            "notes": list(self.notes),
        }


def _block_report(V, V1, n, m):
    Vt = V[: 2 * n, : 2 * n]
    V12 = V[: 2 * n, 2 * n:]
    V2 = V[2 * n:, 2 * n:]
    return _maxabs(V12), _maxabs(V2 - np.eye(2 * m) / 2), _maxabs(Vt - V1)


def check_theorem2(ext: ExtendedSystem, tol: float = 1e-8) -> Theorem2Certificate:
    """Certify that the extended system reproduces the target's pure steady state.

    Solves the target problem, checks the pure-state conditions, then solves
    the extended Lyapunov equation and compares it block-wise with
    ``diag(V1, I/2)``.  If the target state is not certified pure the returned
    certificate is marked not applicable (and does not pass); the extended
    solve is still carried out when its drift is Hurwitz.

    Raises:
        NoUniqueSteadyState: the target drift is not Hurwitz.
        TheoremHypothesisViolated: target certified pure but extended drift not Hurwitz.
    """
    sys = ext.target
    t1 = check_theorem1(None, sys, tol)
    A1, B1 = build_target_drift(sys)
    V1 = solve_lyapunov(A1, B1 @ B1.T / 2)
    A, B = build_extended_drift(ext)
    report = is_hurwitz(A)
    notes = []
    if not report:
        if t1.passed and ext.gamma == 0:
            raise TheoremHypothesisViolated(
                f"extended drift not Hurwitz (eigenvalue {report.worst_eigenvalue:.6g}) "
                "although the target steady state is pure"
            )
        notes.append("extended drift not Hurwitz")
        return Theorem2Certificate(t1, report, None, V1, tol=tol, notes=tuple(notes))
    V = solve_lyapunov(A, B @ B.T / 2)
    off, aux, tgt = _block_report(V, V1, ext.n, ext.m)
    if not t1.passed:
        notes.append("target steady state is not pure; theorem not applicable")
    return Theorem2Certificate(
        t1, report, V, V1, off, aux, tgt, purity(V[: 2 * ext.n, : 2 * ext.n]), tol, tuple(notes)
    )


def build_epr_coupling(p: EprParams) -> ComplexCoupling:
    """Two-ensemble coupling; ``epsilon`` scales every ensemble-2 coefficient.

    Rows are ``-i mu (a1 + eps r a2^dag)`` and ``-i mu (r a1^dag + eps a2)``,
    which for ``epsilon = 1`` equals ``iC = mu/sqrt2 [[1, r, i, -ir], [r, 1, -ir, i]]``.
    """
    r, e = p.r, p.epsilon
    alphas = np.array([[1.0, 0.0], [0.0, e]])
    betas = np.array([[0.0, e * r], [r, 0.0]])
    return ComplexCoupling.from_ladder(alphas, betas, -1j * p.mu)


def epr_target(p: EprParams) -> TargetSystem:
    return TargetSystem.from_coupling(build_epr_coupling(p))


def epr_extended(p: EprParams) -> ExtendedSystem:
    q = p.normalized()
    return ExtendedSystem(epr_target(q), q.kappa, q.gamma)


def build_perturbed_epr(p: EprParams):
    """``(A', B')`` of the 8-dim atom-cavity model with atomic decoherence.

    Rates are normalised by ``mu``.  ``B' = diag(sqrt(gamma) I4, sqrt(kappa) I4)``.
    """
    q = p.normalized()
    A, _ = build_extended_drift(ExtendedSystem(epr_target(q), q.kappa, q.gamma))
    B = np.diag(np.concatenate([np.full(4, np.sqrt(q.gamma)), np.full(4, np.sqrt(q.kappa))]))
    return A, B


def build_adiabatic_target(sys: TargetSystem, kappa: float) -> TargetSystem:
    """Target model after eliminating the auxiliary modes: ``C -> 2 C / sqrt(kappa)``."""
    if not (np.isfinite(kappa) and kappa > 0):
        raise InvalidInput(f"kappa must be positive, got {kappa}")
    return TargetSystem(sys.G, sys.coupling.scaled(2 / np.sqrt(kappa)))


def kernel_coupling(V) -> ComplexCoupling:
    """Rows spanning ``ker(V + i Sigma/2)`` for a pure covariance ``V``.

    Such a ``C`` (with ``G = 0``) stabilises ``V`` as the unique steady state.
    """
    V = np.asarray(V, dtype=float)
    n = V.shape[0] // 2
    M = V + 0.5j * symplectic_form(n)
    w, vecs = np.linalg.eigh(M)
    idx = np.flatnonzero(np.abs(w) < KERNEL_EIG_TOL)
    if idx.size != n:
        raise InvalidInput(f"kernel has dimension {idx.size}, expected {n}; V is not pure")
    return ComplexCoupling(vecs[:, idx].T)


def random_pure_target(n: int, rng=None, max_squeezing: float = 1.0):
    """Random pure covariance and a kernel-constructed target stabilising it.

    Returns ``(TargetSystem, V)``.
    """
    rng = np.random.default_rng(rng)
    S = random_symplectic(n, rng, max_squeezing)
    V = S @ S.T / 2
    V = (V + V.T) / 2
    return TargetSystem.from_coupling(kernel_coupling(V)), V


def epr_state(p: EprParams) -> GaussianState:
    """Target block of the steady state of the (possibly perturbed) EPR model."""
    A, B = build_perturbed_epr(p)
    V = solve_lyapunov(A, B @ B.T / 2)
    return GaussianState(V[:4, :4])
