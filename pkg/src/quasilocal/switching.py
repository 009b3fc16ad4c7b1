"""Single-auxiliary-mode switching protocol.

Stage ``k`` couples the cavity mode to ``a'_k = sum_j U_kj a_j`` through
``mu (a~^dag (a'_k + r a'_k^dag) + h.c.)``, which squeezes the primed mode ``k``
to ``diag(e^-2xi, e^2xi)/2`` (``xi = artanh r``) and leaves the other primed
modes alone.  Running stages ``1..n`` from vacuum yields the cluster covariance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .cluster import ClusterUnitary
from .errors import InvalidInput, InvalidPolicy, StageTimeout
from .gaussian import (
    ComplexCoupling,
    extended_symplectic_form,
    is_unitary,
    mode_count,
    purity,
    squeezed_covariance,
    symplectic_from_unitary,
)
from .lyapunov import IntegrationPolicy, integrate_covariance, max_stable_step
from .systems import ExtendedSystem, TargetSystem, build_extended_drift

DEFAULT_KAPPA = 1.0


def _as_unitary(u) -> np.ndarray:
    U = u.U if isinstance(u, ClusterUnitary) else np.asarray(u, dtype=complex)
    if not is_unitary(U):
        raise InvalidInput("generating matrix is not unitary")
    return U


@dataclass(frozen=True)
class SwitchingStage:
    k: int
    alpha: np.ndarray
    beta: np.ndarray
    r: float
    mu: float = 1.0

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=complex)
        beta = np.array(self.beta, dtype=complex)
        if alpha.shape != beta.shape or alpha.ndim != 1:
            raise InvalidInput("alpha and beta must be vectors of equal length")
        if not 0 <= self.r < 1:
            raise InvalidInput(f"r must lie in [0, 1), got {self.r}")
        if np.max(np.abs(beta - self.r * alpha.conj()), initial=0.0) > 1e-12:
            raise InvalidInput("beta must equal r * conj(alpha)")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n(self) -> int:
        return self.alpha.size

    @property
    def xi(self) -> float:
        return float(np.arctanh(self.r))

    def coupling(self) -> ComplexCoupling:
        """``C`` (``1 x 2n``) with ``i C x = mu sum_j (alpha_j a_j + beta_j a_j^dag)``."""
        return ComplexCoupling.from_ladder(self.alpha[None, :], self.beta[None, :], -1j * self.mu)

    def primed_projector(self) -> np.ndarray:
        """Rows ``(q'_k, p'_k)`` of the orthogonal symplectic change of basis."""
        a = self.alpha
        return np.array([
            np.concatenate([a.real, -a.imag]),
            np.concatenate([a.imag, a.real]),
        ])

    def target_block(self) -> np.ndarray:
        return squeezed_covariance(self.xi)


@dataclass(frozen=True)
class SwitchingSchedule:
    U: np.ndarray
    r: float
    mu: float
    stages: tuple

    @property
    def n(self) -> int:
        return self.U.shape[0]

    def __len__(self):
        return len(self.stages)

    def __iter__(self):
        return iter(self.stages)

    def expected_covariance(self, stages: Optional[Sequence[int]] = None) -> np.ndarray:
        """Covariance reached from vacuum after running ``stages`` (default: all of them)."""
        ks = [s.k for s in self.stages] if stages is None else list(stages)
        n = self.n
        xi = np.arctanh(self.r)
        d = np.full(2 * n, 0.5)
        for k in ks:
            d[k - 1] = np.exp(-2 * xi) / 2
            d[n + k - 1] = np.exp(2 * xi) / 2
        S = symplectic_from_unitary(self.U)
        V = (S.T * d) @ S
        return (V + V.T) / 2


def make_schedule(u, r: float, mu: float = 1.0, stages: Optional[Sequence[int]] = None) -> SwitchingSchedule:
    """Stage ``k`` uses ``alpha_j = U_kj`` and ``beta_j = r conj(U_kj)``."""
    U = _as_unitary(u)
    if not 0 <= r < 1:
        raise InvalidInput(f"r must lie in [0, 1), got {r}")
    ks = range(1, U.shape[0] + 1) if stages is None else stages
    out = tuple(SwitchingStage(k, U[k - 1], r * U[k - 1].conj(), r, mu) for k in ks)
    return SwitchingSchedule(U.copy(), float(r), float(mu), out)


@dataclass(frozen=True)
class LaserSchedule:
    """Rabi magnitudes and phases, arrays of shape ``(stages, ensembles)``."""

    Omega_u: np.ndarray
    phi_u: np.ndarray
    Omega_s: np.ndarray
    phi_s: np.ndarray
    Omega: float
    r: float

    def reconstruct(self) -> np.ndarray:
        """Rebuild ``U`` from the ``u`` lasers."""
        return self.Omega_u * np.exp(1j * self.phi_u) / self.Omega

    def reconstruct_s(self) -> np.ndarray:
        """``r conj(U)`` rebuilt from the ``s`` lasers, divided by ``Omega``."""
        return self.Omega_s * np.exp(1j * self.phi_s) / self.Omega

    def rows(self):
        n_st, n_ens = self.Omega_u.shape
        for k in range(n_st):
            for j in range(n_ens):
                yield (k + 1, j + 1, self.Omega_u[k, j], self.phi_u[k, j], self.Omega_s[k, j], self.phi_s[k, j])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stage", "ensemble", "Omega_u", "phi_u", "Omega_s", "phi_s"])
            for k, j, ou, pu, os_, ps in self.rows():
                w.writerow([k, j, repr(float(ou)), repr(float(pu)), repr(float(os_)), repr(float(ps))])


def _phase(z, zero_tol=1e-14):
    ph = np.mod(np.angle(z), 2 * np.pi)
    ph = np.where(np.abs(z) <= zero_tol, 0.0, ph)
    # fold values that rounded up to 2 pi back to 0
    return np.where(ph >= 2 * np.pi, 0.0, ph)


def realize_lasers(u, Omega: float, r: float) -> LaserSchedule:
    """Laser settings ``Omega_u e^(i phi_u) = Omega U_kj``, ``Omega_s e^(i phi_s) = r Omega conj(U_kj)``."""
    if not (np.isfinite(Omega) and Omega > 0):
        raise InvalidInput(f"Omega must be positive, got {Omega}")
    if not 0 <= r < 1:
        raise InvalidInput(f"r must lie in [0, 1), got {r}")
    U = _as_unitary(u)
    mag = np.abs(U)
    return LaserSchedule(
        Omega_u=Omega * mag,
        phi_u=_phase(U),
        Omega_s=r * Omega * mag,
        phi_s=_phase(U.conj()),
        Omega=float(Omega),
        r=float(r),
    )


@dataclass(frozen=True)
class StagePolicy:
    convergence_tol: float = 1e-6
    max_duration: float = 500.0
    step: Optional[float] = None

    def __post_init__(self):
        if not self.convergence_tol > 0:
            raise InvalidPolicy("convergence_tol must be positive")
        if not self.max_duration > 0:
            raise InvalidPolicy("max_duration must be positive")


@dataclass(frozen=True)
class StageResult:
    k: int
    cov: np.ndarray
    duration: float
    residual: float
    steps: int


def stage_residual(V, stage: SwitchingStage) -> float:
    P = stage.primed_projector()
    return float(np.linalg.norm(P @ V @ P.T - stage.target_block()))


def run_stage(V, stage: SwitchingStage, kappa: float = DEFAULT_KAPPA, policy: StagePolicy = StagePolicy()) -> StageResult:
    """Evolve the target covariance under one stage with a fresh vacuum cavity.

    The stage ends once primed mode ``k`` is within ``convergence_tol``
    (Frobenius) of its squeezed target and the extended covariance is
    stationary to the same tolerance (max-abs of ``dV/dt``).

    Raises:
        StageTimeout: primed mode ``k`` is not within ``policy.convergence_tol``
            (Frobenius) of its squeezed target after ``policy.max_duration``.
    """
    V = np.asarray(V, dtype=float)
    n = mode_count(V)
    if n != stage.n:
        raise InvalidInput(f"covariance has {n} modes, stage acts on {stage.n}")
    if not kappa > 0:
        raise InvalidInput("kappa must be positive")
    ext = ExtendedSystem(TargetSystem.from_coupling(stage.coupling()), kappa)
    A, B = build_extended_drift(ext)
    W0 = np.zeros((2 * n + 2, 2 * n + 2))
    W0[: 2 * n, : 2 * n] = V
    W0[2 * n:, 2 * n:] = np.eye(2) / 2

    P = stage.primed_projector()
    target = stage.target_block()
    tol = policy.convergence_tol

    # a passing oscillation can dip below tol; also demand stationarity
    def done(W, dW):
        Vt = W[: 2 * n, : 2 * n]
        return np.linalg.norm(P @ Vt @ P.T - target) <= tol and np.max(np.abs(dW)) <= tol

    step = policy.step if policy.step is not None else max_stable_step(A)
    ipol = IntegrationPolicy(step=min(step, policy.max_duration), horizon=policy.max_duration,
                             convergence_tol=1e-300, sample_every=10**9)
    traj = integrate_covariance(A, B, W0, ipol, stop=done, form=extended_symplectic_form(n, 1))
    Vout = traj.final[: 2 * n, : 2 * n]
    Vout = (Vout + Vout.T) / 2
    res = stage_residual(Vout, stage)
    converged = traj.stopped_by == "stop"
    n_steps = int(round(traj.final_time / ipol.step)) if ipol.step else 0
    if not converged or res > tol:
        raise StageTimeout(
            f"stage {stage.k} not converged after t = {traj.final_time:.4g} (residual {res:.3e})",
            stage=stage.k,
            residual=res,
        )
    return StageResult(stage.k, Vout, traj.final_time, res, n_steps)


@dataclass(frozen=True)
class ScheduleResult:
    cov: np.ndarray
    log: List[StageResult]
    expected: np.ndarray
    distance: float
    purity: float = field(default=np.nan)

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.log))


def run_schedule(V0, schedule: SwitchingSchedule, kappa: float = DEFAULT_KAPPA,
                 policy: StagePolicy = StagePolicy()) -> ScheduleResult:
    """Run the stages in order; compare the outcome with the ideal covariance.

    ``expected`` is the covariance the executed stages produce from vacuum, so
    for a complete schedule it is the cluster covariance.
    """
    V = np.array(V0, dtype=float)
    log = []
    for stage in schedule:
        res = run_stage(V, stage, kappa, policy)
        log.append(res)
        V = res.cov
    expected = schedule.expected_covariance()
    dist = float(np.max(np.abs(V - expected), initial=0.0))
    return ScheduleResult(V, log, expected, dist, purity(V))
