"""Logarithmic negativity of the two-ensemble steady state and its optimisation.

All rates are in units of the coupling ``mu``.  Natural logarithms throughout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    InvalidInput,
    NoInteriorOptimum,
    NoUniqueSteadyState,
    OutOfModel,
)
from .gaussian import symplectic_eigenvalues
from .systems import (
    EprParams,
    build_adiabatic_target,
    build_perturbed_epr,
    epr_target,
    target_steady_state,
    with_damping,
)
from .lyapunov import HURWITZ_TOL, solve_lyapunov


@dataclass(frozen=True)
class NegativityReport:
    nu: float
    E_N: float


def negativity_from_nu(nu):
    """``max(0, -ln(2 nu))``, vectorised."""
    nu = np.asarray(nu, dtype=float)
    out = np.maximum(0.0, -np.log(2 * nu))
    return float(out) if out.ndim == 0 else out


def log_negativity(V) -> NegativityReport:
    """Logarithmic negativity of a two-mode covariance in (q1, q2, p1, p2) order.

    Partial transposition of mode 2 is the sign flip ``p2 -> -p2``.
    """
    V = np.asarray(V, dtype=float)
    if V.shape != (4, 4):
        raise InvalidInput(f"expected a 4x4 two-mode covariance, got {V.shape}")
    flip = np.array([1.0, 1.0, 1.0, -1.0])
    Vpt = V * np.outer(flip, flip)
    nu = float(symplectic_eigenvalues(Vpt)[0])
    return NegativityReport(nu, negativity_from_nu(nu))


def _check_rates(kappa, gamma, r):
    kappa, gamma, r = (np.asarray(v, dtype=float) for v in (kappa, gamma, r))
    if np.any(kappa <= 0) or np.any(gamma < 0) or np.any(r < 0) or np.any(r >= 1):
        raise InvalidInput("require kappa > 0, gamma >= 0, 0 <= r < 1")
    return kappa, gamma, r


def nu_closed_form(kappa, gamma, r):
    """Smallest partial-transpose symplectic eigenvalue of the decohered EPR steady state."""
    kappa, gamma, r = _check_rates(kappa, gamma, r)
    num = kappa * gamma**2 + 4 * kappa * (1 - r) ** 2 + gamma * (kappa**2 + 4 * (1 - r**2))
    den = 2 * (kappa + gamma) * (kappa * gamma + 4 * (1 - r**2))
    if np.any(den <= 0):
        raise InvalidInput("non-positive denominator")
    out = num / den
    return float(out) if out.ndim == 0 else out


def closed_form_c(kappa, gamma, r):
    kappa, gamma, r = _check_rates(kappa, gamma, r)
    out = 4 * r * kappa / ((kappa + gamma) * (kappa * gamma + 4 * (1 - r**2)))
    return float(out) if out.ndim == 0 else out


def closed_form_steady(kappa: float, gamma: float, r: float) -> np.ndarray:
    """Atomic block of the decohered EPR steady state, (q1, q2, p1, p2) order."""
    c = closed_form_c(kappa, gamma, r)
    d = r * c + 0.5
    return np.array([
        [d, -c, 0, 0],
        [-c, d, 0, 0],
        [0, 0, d, c],
        [0, 0, c, d],
    ])


def epr_max_real_eigenvalue(kappa, r):
    """Largest real part of the ideal (``gamma = 0``) atom-cavity drift spectrum."""
    kappa = np.asarray(kappa, dtype=float)
    r = np.asarray(r, dtype=float)
    disc = np.sqrt((kappa**2 - 16 * (1 - r**2)).astype(complex))
    return -kappa / 4 + disc.real / 4


def closed_form_negativity(kappa, gamma, r):
    return negativity_from_nu(nu_closed_form(kappa, gamma, r))


def numeric_steady(kappa: float, gamma: float, r: float, epsilon: float = 1.0, method: str = "schur") -> np.ndarray:
    """Atomic block of the full 8x8 Lyapunov solution."""
    A, B = build_perturbed_epr(EprParams(r, kappa, gamma, epsilon))
    V = solve_lyapunov(A, B @ B.T / 2, method=method)
    return V[:4, :4]


def numeric_negativity(kappa: float, gamma: float, r: float, epsilon: float = 1.0) -> float:
    return log_negativity(numeric_steady(kappa, gamma, r, epsilon)).E_N


def adiabatic_negativity(kappa: float, gamma: float, r: float, epsilon: float = 1.0) -> float:
    """E_N of the target-only model with the cavity eliminated (``C -> 2C/sqrt(kappa)``)."""
    sys = build_adiabatic_target(epr_target(EprParams(r, kappa, gamma, epsilon)), kappa)
    V = target_steady_state(with_damping(sys, gamma))
    return log_negativity(V).E_N


def optimal_params(gamma: float, verify: bool = True) -> Tuple[float, float]:
    """Closed-form ``(r_star, kappa_star)`` maximising E_N at decoherence ``gamma``.

    With ``verify`` the point is checked to dominate its ``+-1e-3`` grid neighbours.

    Raises:
        NoInteriorOptimum: ``gamma <= 0``.
        OutOfModel: ``gamma >= 2`` (the radicand changes sign).
    """
    if not np.isfinite(gamma) or gamma <= 0:
        raise NoInteriorOptimum("E_N increases monotonically in r when gamma = 0")
    if gamma >= 2:
        raise OutOfModel("closed form valid only for gamma < 2")
    g2 = gamma * gamma
    d = np.cbrt(-g2**3 + 5 * g2**2 - 2 * g2 + (g2 + 1) * g2 * np.sqrt(4 - g2))
    r_star = (2 + d + g2 * (g2 - 3) / d) / (2 * (g2 + 1))
    if not 0 <= r_star < 1:
        raise OutOfModel(f"closed form gives r = {r_star}")
    kappa_star = 2 * np.sqrt(1 - r_star**2)
    if verify:
        e0 = closed_form_negativity(kappa_star, gamma, r_star)
        h = 1e-3
        for dr in (-h, 0.0, h):
            for dk in (-h, 0.0, h):
                rr, kk = r_star + dr, kappa_star + dk
                if (dr or dk) and 0 <= rr < 1 and kk > 0:
                    if closed_form_negativity(kk, gamma, rr) > e0 + 1e-12:
                        raise OutOfModel("closed-form point is not a local maximum")
    return float(r_star), float(kappa_star)


def grid_optimum(gamma: float, r_range=(0.5, 0.999), kappa_range=(0.05, 3.0), steps=(400, 400)):
    """Brute-force closed-form maximum over a rectangular ``(r, kappa)`` grid.

    Returns ``(r, kappa, E_N, dr, dkappa)`` where the last two are the cell sizes.
    """
    rs = np.linspace(*r_range, steps[0])
    ks = np.linspace(*kappa_range, steps[1])
    R, K = np.meshgrid(rs, ks, indexing="ij")
    E = closed_form_negativity(K, gamma, R)
    i, j = np.unravel_index(np.argmax(E), E.shape)
    return float(rs[i]), float(ks[j]), float(E[i, j]), float(rs[1] - rs[0]), float(ks[1] - ks[0])


@dataclass(frozen=True)
class OptimumResult:
    r: float
    kappa: float
    E_N: float
    grid_r: float
    grid_kappa: float
    grid_E_N: float
    iterations: int

    @property
    def xi(self) -> float:
        return float(np.arctanh(self.r))


def _safe_numeric_negativity(kappa, gamma, r, epsilon):
    try:
        return numeric_negativity(kappa, gamma, r, epsilon)
    except NoUniqueSteadyState:
        return -np.inf


def optimize_negativity(
    gamma: float,
    epsilon: float = 1.0,
    r_range=(0.5, 0.999),
    kappa_range=(0.05, 3.0),
    steps=(60, 60),
    tol: float = 1e-6,
    max_iter: int = 100,
) -> OptimumResult:
    """Maximise the numerically computed E_N over ``(r, kappa)``.

    Coarse grid search followed by coordinate descent (bounded 1-d searches
    within one grid cell on each side) until both coordinates move less than ``tol``.
    """
    rs = np.linspace(*r_range, steps[0])
    ks = np.linspace(*kappa_range, steps[1])
    best = (-np.inf, rs[0], ks[0])
    for r in rs:
        for k in ks:
            e = _safe_numeric_negativity(k, gamma, r, epsilon)
            if e > best[0]:
                best = (e, r, k)
    e0, r0, k0 = best
    dr, dk = rs[1] - rs[0], ks[1] - ks[0]
    r_lo, r_hi = max(r_range[0], r0 - dr), min(r_range[1], r0 + dr)
    k_lo, k_hi = max(kappa_range[0], k0 - dk), min(kappa_range[1], k0 + dk)
    r, k, e = r0, k0, e0
    it = 0
    for it in range(1, max_iter + 1):
        res_r = minimize_scalar(lambda x: -_safe_numeric_negativity(k, gamma, x, epsilon),
                                bounds=(r_lo, r_hi), method="bounded", options={"xatol": tol / 10})
        r_new = res_r.x if -res_r.fun >= e else r
        e = max(e, -res_r.fun)
        res_k = minimize_scalar(lambda x: -_safe_numeric_negativity(x, gamma, r_new, epsilon),
                                bounds=(k_lo, k_hi), method="bounded", options={"xatol": tol / 10})
        k_new = res_k.x if -res_k.fun >= e else k
        e = max(e, -res_k.fun)
        moved = max(abs(r_new - r), abs(k_new - k))
        r, k = r_new, k_new
        if moved < tol:
            break
    e = _safe_numeric_negativity(k, gamma, r, epsilon)
    return OptimumResult(float(r), float(k), float(e), float(r0), float(k0), float(e0), it)


def _parse_range(rng):
    lo, hi, steps = rng
    steps = int(steps)
    if steps < 2:
        raise InvalidInput("a sweep range needs at least 2 steps")
    if not (lo > 0 and hi > 0 and hi >= lo):
        raise InvalidInput(f"sweep range must be positive and ordered, got {rng}")
    return float(lo), float(hi), steps


@dataclass(frozen=True)
class SweepGrid:
    """Inclusive ``(min, max, steps)`` ranges for ``xi = artanh r`` and ``kappa``."""

    xi_range: tuple
    kappa_range: tuple
    gamma: float = 0.0
    epsilon: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "xi_range", _parse_range(self.xi_range))
        object.__setattr__(self, "kappa_range", _parse_range(self.kappa_range))
        if self.gamma < 0 or self.epsilon <= 0:
            raise InvalidInput("need gamma >= 0 and epsilon > 0")

    @property
    def xis(self) -> np.ndarray:
        return np.linspace(*self.xi_range)

    @property
    def kappas(self) -> np.ndarray:
        return np.linspace(*self.kappa_range)


@dataclass(frozen=True)
class SweepTable:
    xi: np.ndarray
    kappa: np.ndarray
    E_N: np.ndarray
    status: np.ndarray

    def __len__(self):
        return self.xi.size

    def argmax(self) -> int:
        E = np.where(np.isnan(self.E_N), -np.inf, self.E_N)
        return int(np.argmax(E))

    def max_row(self):
        i = self.argmax()
        return float(self.xi[i]), float(self.kappa[i]), float(self.E_N[i]), str(self.status[i])

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["xi", "kappa", "E_N", "status"])
            for x, k, e, s in zip(self.xi, self.kappa, self.E_N, self.status):
                w.writerow([repr(float(x)), repr(float(k)), "nan" if np.isnan(e) else repr(float(e)), s])
        finally:
            if own:
                fh.close()


def sweep(grid: SweepGrid, method: Optional[str] = None) -> SweepTable:
    """E_N on every ``(xi, kappa)`` grid point, rows ordered xi-major.

    ``method`` is ``"closed"`` or ``"numeric"``; by default the closed form is
    used when ``epsilon == 1`` and the full Lyapunov solve otherwise.
    Non-Hurwitz points become NaN rows with status ``unstable``.
    """
    if method is None:
        method = "closed" if grid.epsilon == 1 else "numeric"
    if method == "closed" and grid.epsilon != 1:
        raise InvalidInput("closed form holds only for epsilon = 1")
    X, K = np.meshgrid(grid.xis, grid.kappas, indexing="ij")
    X, K = X.ravel(), K.ravel()
    R = np.tanh(X)
    E = np.full(X.size, np.nan)
    status = np.full(X.size, "ok", dtype=object)
    unstable = (R >= 1) | ((grid.gamma == 0) & (epr_max_real_eigenvalue(K, np.minimum(R, 1.0)) >= -HURWITZ_TOL))
    status[unstable] = "unstable"
    ok = ~unstable
    if method == "closed":
        E[ok] = closed_form_negativity(K[ok], grid.gamma, R[ok])
    elif method == "numeric":
        for i in np.flatnonzero(ok):
            try:
                E[i] = numeric_negativity(K[i], grid.gamma, R[i], grid.epsilon)
            except NoUniqueSteadyState:
                status[i] = "unstable"
    else:
        raise InvalidInput(f"unknown method {method!r}")
    return SweepTable(X, K, E, status.astype(str))
