"""Stability test, algebraic Lyapunov solvers and covariance time integration.

All routines treat the continuous Lyapunov equation in the form

    A V + V A^T + Q = 0,      Q = B B^T / 2,

whose unique solution exists iff ``A`` is Hurwitz.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import schur, solve_triangular

from .errors import (
    InvalidInput,
    InvalidPolicy,
    NoUniqueSteadyState,
    NumericalFailure,
    UnstableIntegration,
)
from .gaussian import LOOSE_PHYSICALITY_TOL, is_physical

HURWITZ_TOL = 1e-9
RESIDUAL_TOL = 1e-9
KRON_MAX_N = 32
DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class HurwitzReport:
    hurwitz: bool
    eigenvalues: np.ndarray
    tol: float

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real)) if self.eigenvalues.size else -np.inf

    @property
    def worst_eigenvalue(self) -> complex:
        return complex(self.eigenvalues[np.argmax(self.eigenvalues.real)])

    def __bool__(self):
        return self.hurwitz


def _square(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInput(f"{name} has non-finite entries")
    return M


def is_hurwitz(A, tol: float = HURWITZ_TOL) -> HurwitzReport:
    """Report whether every eigenvalue of ``A`` has real part below ``-tol``.

    Eigenvalues inside ``[-tol, 0]`` count as unstable so that near-critical
    drifts fail loudly instead of producing huge, inaccurate covariances.
    """
    A = _square(A, "A")
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from exc
    ok = bool(ev.size == 0 or np.max(ev.real) < -tol)
    return HurwitzReport(ok, ev, tol)


def lyapunov_residual(A, V, Q) -> float:
    """Max-abs entry of ``A V + V A^T + Q``."""
    R = A @ V + V @ A.T + Q
    return float(np.max(np.abs(R), initial=0.0))


def _solve_schur(A, Q):
    # complex Schur form keeps the triangular sweep free of 2x2 blocks
    T, Z = schur(A, output="complex")
    F = -(Z.conj().T @ Q @ Z)
    N = A.shape[0]
    Y = np.zeros((N, N), dtype=complex)
    Th = T.conj()
    for j in range(N - 1, -1, -1):
        rhs = F[:, j] - Y[:, j + 1:] @ Th[j, j + 1:]
        M = T + Th[j, j] * np.eye(N)
        Y[:, j] = solve_triangular(M, rhs, lower=False, check_finite=False)
    V = (Z @ Y @ Z.conj().T).real
    return (V + V.T) / 2


def _solve_kron(A, Q):
    N = A.shape[0]
    eye = np.eye(N)
    # row-major vec: vec(A V) = (A kron I) v, vec(V A^T) = (I kron A) v
    K = np.kron(A, eye) + np.kron(eye, A)
    v = np.linalg.solve(K, -Q.reshape(-1))
    V = v.reshape(N, N)
    return (V + V.T) / 2


def solve_lyapunov(A, Q, method: str = "schur", check: bool = True) -> np.ndarray:
    """Unique symmetric ``V`` with ``A V + V A^T + Q = 0``.

    Args:
        A: Hurwitz drift matrix, ``N x N``.
        Q: symmetric inhomogeneity (usually ``B B^T / 2``).
        method: ``"schur"`` (Bartels-Stewart on the complex Schur form) or
            ``"kron"`` (dense vectorised solve, ``N <= 32``).
        check: verify the residual ``<= 1e-9 (1 + |Q|)`` before returning.

    Raises:
        NoUniqueSteadyState: ``A`` is not Hurwitz.
        NumericalFailure: residual check failed.
    """
    A = _square(A, "A")
    Q = _square(Q, "Q")
    if A.shape != Q.shape:
        raise InvalidInput(f"A {A.shape} and Q {Q.shape} differ in shape")
    if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-10:
        raise InvalidInput("Q is not symmetric")
    report = is_hurwitz(A)
    if not report:
        lam = report.worst_eigenvalue
        raise NoUniqueSteadyState(f"drift not Hurwitz: eigenvalue {lam:.6g}", eigenvalue=lam)
    if method == "schur":
        V = _solve_schur(A, Q)
    elif method == "kron":
        if A.shape[0] > KRON_MAX_N:
            raise InvalidInput(f"kron solver limited to N <= {KRON_MAX_N}")
        V = _solve_kron(A, Q)
    else:
        raise InvalidInput(f"unknown method {method!r}")
    if check:
        res = lyapunov_residual(A, V, Q)
        bound = RESIDUAL_TOL * (1 + np.max(np.abs(Q), initial=0.0))
        if not res <= bound:
            raise NumericalFailure(f"Lyapunov residual {res:.3e} exceeds {bound:.3e}")
    return V


def steady_covariance(A, B, method: str = "schur") -> np.ndarray:
    """Steady state of ``dV/dt = A V + V A^T + B B^T / 2``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return solve_lyapunov(A, B @ B.T / 2, method=method)


@dataclass(frozen=True)
class IntegrationPolicy:
    """Fixed-step RK4 settings.

    ``step`` and ``horizon`` are in units of ``1/mu``; ``step=None`` picks
    ``0.1 / rho(A)`` at run time.  ``sample_every`` thins the stored trajectory.
    """

    step: Optional[float] = None
    horizon: float = 100.0
    convergence_tol: float = 1e-10
    sample_every: int = 1

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise InvalidPolicy("step must be positive")
        if not self.horizon > 0:
            raise InvalidPolicy("horizon must be positive")
        if not self.convergence_tol > 0:
            raise InvalidPolicy("convergence_tol must be positive")
        if self.sample_every < 1:
            raise InvalidPolicy("sample_every must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    covariances: np.ndarray
    final: np.ndarray
    final_time: float
    converged: bool
    derivative_norm: float
    stopped_by: str = field(default="horizon")

    def to_csv(self, path) -> None:
        """Write ``t`` followed by the upper triangle of every sampled ``V``."""
        N = self.final.shape[0]
        iu = np.triu_indices(N)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"v_{i}_{j}" for i, j in zip(*iu)])
            for t, V in zip(self.times, self.covariances):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in V[iu]])


def max_stable_step(A) -> float:
    rho = np.max(np.abs(np.linalg.eigvals(A)), initial=0.0)
    return np.inf if rho == 0 else 0.1 / rho


def integrate_covariance(
    A,
    B,
    V0,
    policy: IntegrationPolicy = IntegrationPolicy(),
    stop: Optional[Callable[[np.ndarray, np.ndarray], bool]] = None,
    check_initial: bool = True,
    form: Optional[np.ndarray] = None,
) -> Trajectory:
    """Integrate the Lyapunov differential equation with classic RK4.

    Stops at ``policy.horizon``, when ``|dV/dt|_max < policy.convergence_tol``,
    or when ``stop(V, dV/dt)`` returns true (checked before every step, so a state
    already satisfying ``stop`` costs no time).  ``form`` is the symplectic
    form used for the initial physicality check; pass
    ``extended_symplectic_form(n, m)`` for ``[x; x~]``-ordered covariances.
    """
    A = _square(A, "A")
    B = np.atleast_2d(np.asarray(B, dtype=float))
    V = np.array(_square(V0, "V0"), dtype=float)
    if B.shape[0] != A.shape[0] or V.shape != A.shape:
        raise InvalidInput("A, B, V0 dimensions are inconsistent")
    if check_initial and not is_physical(V, LOOSE_PHYSICALITY_TOL, form):
        raise InvalidInput("initial covariance is not physical")
    Q = B @ B.T / 2
    hmax = max_stable_step(A)
    h = min(hmax, policy.horizon) if policy.step is None else policy.step
    if h > hmax * (1 + 1e-12):
        raise InvalidPolicy(f"step {h:.4g} exceeds 0.1/rho(A) = {hmax:.4g}")

    def f(X):
        return A @ X + X @ A.T + Q

    t = 0.0
    times, covs = [0.0], [V.copy()]
    steps = 0
    stopped_by = "horizon"
    dV = f(V)
    while True:
        dnorm = float(np.max(np.abs(dV), initial=0.0))
        if stop is not None and stop(V, dV):
            stopped_by = "stop"
            break
        if dnorm < policy.convergence_tol:
            stopped_by = "converged"
            break
        if t >= policy.horizon - 1e-12 * policy.horizon:
            break
        dt = min(h, policy.horizon - t)
        k1 = dV
        k2 = f(V + 0.5 * dt * k1)
        k3 = f(V + 0.5 * dt * k2)
        k4 = f(V + dt * k3)
        V = V + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        V = (V + V.T) / 2
        t += dt
        steps += 1
        if not np.all(np.isfinite(V)) or np.max(np.abs(V)) > DIVERGENCE_LIMIT:
            raise UnstableIntegration(f"covariance diverged at t = {t:.4g}")
        dV = f(V)
        if steps % policy.sample_every == 0:
            times.append(t)
            covs.append(V.copy())
    if times[-1] != t:
        times.append(t)
        covs.append(V.copy())
    return Trajectory(
        times=np.array(times),
        covariances=np.array(covs),
        final=V,
        final_time=t,
        converged=stopped_by != "horizon",
        derivative_norm=dnorm,
        stopped_by=stopped_by,
    )
