"""Position estimators built on the shared squared-range linear system.

Averaging each anchor's RSSI row gives a range estimate d_i; squaring the
range equations and subtracting the common quadratic term yields a linear
system A u = b in u = (t_x, t_y, t_x^2 + t_y^2).  LS solves it unweighted,
WLS weights rows by the inverse variance of the squared range, and SWLS first
eliminates anchors whose per-packet range variance implies an inflated noise
level.  ML, LMdS and Grad-Desc are the nonlinear baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    LN10,
    PathLossParams,
    distance_from_rssi,
    distance_sq_variance,
    estimate_noise_sigma,
)
from .attacks import MeasurementMatrix
from .exceptions import (
    DegenerateGeometryError,
    DomainError,
    InsufficientAnchorsError,
    InsufficientSurvivorsError,
)

COND_LIMIT = 1e12


@dataclass(frozen=True)
class LinearSystem:
    """The (A, b) pair shared by every least-squares style estimator.

    Row i of A is (-2*a_i_x, -2*a_i_y, 1); b_i = d_i^2 - ||a_i||^2.
    """

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).ravel()
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if A.ndim != 2 or A.shape[1] != 3:
            raise DomainError("A must be an (N, 3) matrix")
        if A.shape[0] != b.shape[0]:
            raise DomainError("A and b row counts differ")
        if A.shape[0] < 3:
            raise InsufficientAnchorsError(f"need at least 3 rows, got {A.shape[0]}")

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def subset(self, indices) -> "LinearSystem":
        idx = np.asarray(sorted(indices), dtype=int)
        return LinearSystem(A=self.A[idx], b=self.b[idx])


@dataclass(frozen=True)
class Estimate:
    """A 2-D position plus per-estimator diagnostics."""

    position: np.ndarray
    auxiliary: float | None = None
    eliminated: frozenset = frozenset()
    iterations: int = 0
    converged: bool = True

    def __post_init__(self) -> None:
        pos = np.asarray(self.position, dtype=float).reshape(2)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "eliminated", frozenset(int(i) for i in self.eliminated))
        if self.converged and not np.all(np.isfinite(pos)):
            raise DomainError("a converged estimate must be finite")


def build_linear_system(anchors, mean_distances) -> LinearSystem:
    """Assemble (A, b) from anchor positions and P-averaged range estimates.

    The ranges must come from the row-mean RSSI (one inversion per anchor),
    not from averaging per-packet ranges.
    """
    a = np.atleast_2d(np.asarray(anchors, dtype=float))
    d = np.asarray(mean_distances, dtype=float).ravel()
    if a.shape[0] != d.shape[0]:
        raise DomainError("anchor and distance counts differ")
    if a.shape[0] < 3:
        raise InsufficientAnchorsError(f"need at least 3 anchors, got {a.shape[0]}")
    A = np.column_stack([-2.0 * a[:, 0], -2.0 * a[:, 1], np.ones(a.shape[0])])
    b = d**2 - a[:, 0] ** 2 - a[:, 1] ** 2
    return LinearSystem(A=A, b=b)


def _solve_rows(A: np.ndarray, b: np.ndarray, weights=None) -> np.ndarray:
    """Solve the (optionally weighted) normal equations via an orthogonal
    decomposition, guarding against near-singular geometry."""
    if weights is not None:
        sw = np.sqrt(weights)
        A = A * sw[:, None]
        b = b * sw
    sol, _, rank, svals = np.linalg.lstsq(A, b, rcond=None)
    if rank < 3 or svals[-1] <= svals[0] / COND_LIMIT:
        raise DegenerateGeometryError("anchor geometry is rank deficient")
    return sol


def _mean_distances(measurements: MeasurementMatrix, params: PathLossParams) -> np.ndarray:
    return distance_from_rssi(params, measurements.rssi.mean(axis=1))


def ls_estimate(system: LinearSystem) -> Estimate:
    """Unweighted least-squares solution of the shared linear system."""
    sol = _solve_rows(system.A, system.b)
    return Estimate(position=sol[:2], auxiliary=float(sol[2]))


def _squared_range_weights(params: PathLossParams, mean_d: np.ndarray) -> np.ndarray:
    """Row weights 1/Var(d^2); uniform when sigma = 0 (the system is then
    exactly consistent and any weighting gives the same solution)."""
    if params.sigma == 0:
        return np.ones_like(mean_d)
    return 1.0 / distance_sq_variance(params, mean_d)


def wls_estimate(
    measurements: MeasurementMatrix, anchors, params: PathLossParams
) -> Estimate:
    """Weighted least squares with rows weighted by 1/Var(d^2), which favors
    anchors close to the target."""
    mean_d = _mean_distances(measurements, params)
    system = build_linear_system(anchors, mean_d)
    sol = _solve_rows(system.A, system.b, _squared_range_weights(params, mean_d))
    return Estimate(position=sol[:2], auxiliary=float(sol[2]))


def swls_estimate(
    measurements: MeasurementMatrix,
    anchors,
    params: PathLossParams,
    zeta: float = 1.5,
) -> Estimate:
    """WLS preceded by malicious-anchor elimination.

    Each anchor's per-packet range samples give a sample variance; inverting
    the range-variance law turns it into a noise-level estimate, and anchors
    whose estimate reaches zeta * sigma are dropped before the WLS solve.
    """
    if zeta <= 0:
        raise DomainError("zeta must be positive")
    if measurements.packets < 2:
        raise DomainError("sample variance needs at least 2 packets")
    per_packet_d = distance_from_rssi(params, measurements.rssi)
    sample_var = np.var(per_packet_d, axis=1, ddof=1)
    mean_d = _mean_distances(measurements, params)
    sigma_est = estimate_noise_sigma(params, sample_var, mean_d)
    threshold = zeta * params.sigma
    kept = sigma_est < threshold
    if threshold == 0.0:
        # Degenerate noiseless channel: any measured variance marks an attack.
        kept = sigma_est == 0.0
    kept_idx = np.flatnonzero(kept)
    if kept_idx.size < 3:
        raise InsufficientSurvivorsError(
            f"elimination left {kept_idx.size} anchors, need at least 3"
        )
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    system = build_linear_system(anchors[kept_idx], mean_d[kept_idx])
    weights = _squared_range_weights(params, mean_d[kept_idx])
    sol = _solve_rows(system.A, system.b, weights)
    eliminated = frozenset(int(i) for i in np.flatnonzero(~kept))
    return Estimate(position=sol[:2], auxiliary=float(sol[2]), eliminated=eliminated)


def _rssi_cost_grad(t, anchors, rssi, params):
    """Sum of squared RSSI residuals over all packets, and its gradient."""
    diff = t - anchors
    d2 = np.maximum(np.einsum("ij,ij->i", diff, diff), 1e-24)
    mu = params.p0 - 5.0 * params.n * np.log10(d2)
    err = rssi - mu[:, None]
    cost = float(np.sum(err * err))
    coef = 10.0 * params.n / LN10
    grad = 2.0 * coef * ((err.sum(axis=1) / d2) @ diff)
    return cost, grad


def ml_estimate(
    measurements: MeasurementMatrix,
    anchors,
    params: PathLossParams,
    init,
    gtol: float = 1e-8,
    max_iters: int = 500,
) -> Estimate:
    """Quasi-Newton local minimizer of the RSSI log-likelihood cost.

    BFGS with Armijo backtracking; steps landing within 1e-9 m of an anchor
    are damped.  Stops when the gradient norm drops below ``gtol`` or after
    ``max_iters`` iterations (then converged=False).
    """
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    rssi = measurements.rssi
    t = np.asarray(init, dtype=float).reshape(2).copy()
    if not np.all(np.isfinite(t)):
        raise DomainError("init must be finite")
    f, g = _rssi_cost_grad(t, anchors, rssi, params)
    hess_inv = np.eye(2)
    iterations = 0
    stalled = 0
    converged = float(np.linalg.norm(g)) < gtol

    def at_noise_floor() -> bool:
        # The summed cost resolves objective changes only down to ~eps*f, so
        # a vanishing-gradient stop below that resolution counts as converged.
        return float(np.linalg.norm(g)) <= 1e-9 * (1.0 + abs(f))

    while not converged and iterations < max_iters:
        iterations += 1
        p = -hess_inv @ g
        if p @ g >= 0.0:  # safeguard against a non-descent direction
            hess_inv = np.eye(2)
            p = -g
        alpha, accepted = 1.0, False
        for _ in range(60):
            t_new = t + alpha * p
            if np.min(np.linalg.norm(t_new - anchors, axis=1)) < 1e-9:
                alpha *= 0.5  # damp steps that collide with an anchor
                continue
            f_new, g_new = _rssi_cost_grad(t_new, anchors, rssi, params)
            if f_new <= f + 1e-4 * alpha * float(g @ p):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # Persistent collision, or no representable decrease along p.
            converged = at_noise_floor()
            break
        stalled = stalled + 1 if abs(f_new - f) <= 1e-14 * (1.0 + abs(f)) else 0
        s = t_new - t
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            rho = 1.0 / sy
            left = np.eye(2) - rho * np.outer(s, y)
            hess_inv = left @ hess_inv @ left.T + rho * np.outer(s, s)
        else:
            hess_inv = np.eye(2)
        t, f, g = t_new, f_new, g_new
        converged = float(np.linalg.norm(g)) < gtol
        if not converged and stalled >= 3:
            converged = at_noise_floor()
            break
    return Estimate(position=t, iterations=iterations, converged=converged)


def lmds_estimate(
    measurements: MeasurementMatrix,
    anchors,
    params: PathLossParams,
    n_subsets: int = 20,
    subset_size: int = 4,
    seed=None,
) -> Estimate:
    """Least-median-of-squares baseline.

    LS-solves random anchor subsets and keeps the candidate position whose
    squared range residuals over all anchors have the smallest median.
    """
    if subset_size < 3:
        raise DomainError("subset_size must be at least 3")
    if n_subsets < 1:
        raise DomainError("n_subsets must be at least 1")
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    n = anchors.shape[0]
    if subset_size > n:
        raise DomainError("subset_size exceeds the anchor count")
    mean_d = _mean_distances(measurements, params)
    system = build_linear_system(anchors, mean_d)
    rng = np.random.default_rng(seed)
    best_median = math.inf
    best: np.ndarray | None = None
    best_aux = 0.0
    produced = 0
    retries = 20 * n_subsets
    while produced < n_subsets and retries >= 0:
        idx = rng.choice(n, size=subset_size, replace=False)
        try:
            sol = _solve_rows(system.A[idx], system.b[idx])
        except DegenerateGeometryError:
            retries -= 1
            continue
        produced += 1
        residuals = (mean_d - np.linalg.norm(sol[:2] - anchors, axis=1)) ** 2
        med = float(np.median(residuals))
        if med < best_median:
            best_median = med
            best = sol[:2]
            best_aux = float(sol[2])
    if best is None:
        raise DegenerateGeometryError("every candidate subset was rank deficient")
    return Estimate(position=best, auxiliary=best_aux, iterations=produced)


def grad_desc_estimate(
    measurements: MeasurementMatrix,
    anchors,
    params: PathLossParams,
    step: float = 0.4,
    max_iters: int = 200,
    keep_fraction: float = 0.5,
    init=None,
    callback=None,
) -> Estimate:
    """Constant-step gradient descent on the RSSI cost with residual pruning.

    Each iteration keeps the ceil(keep_fraction * N) anchors with the
    smallest absolute mean RSSI residual at the current iterate and descends
    the mean squared residual over that subset.  ``callback(iteration,
    position, kept_indices, cost)`` is invoked once per iteration.
    """
    if step <= 0:
        raise DomainError("step must be positive")
    if not 0.0 < keep_fraction <= 1.0:
        raise DomainError("keep_fraction must be in (0, 1]")
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    rssi = measurements.rssi
    n, packets = rssi.shape
    n_keep = max(3, math.ceil(keep_fraction * n))
    t = anchors.mean(axis=0) if init is None else np.asarray(init, dtype=float).reshape(2).copy()
    coef = 10.0 * params.n / LN10
    kept = np.arange(n)
    converged = True
    iterations = 0
    for iterations in range(1, max_iters + 1):
        diff = t - anchors
        d2 = np.maximum(np.einsum("ij,ij->i", diff, diff), 1e-24)
        mu = params.p0 - 5.0 * params.n * np.log10(d2)
        err = rssi - mu[:, None]
        row_mean = err.mean(axis=1)
        order = np.argsort(np.abs(row_mean), kind="stable")
        kept = np.sort(order[:n_keep])
        scale = 1.0 / (n_keep * packets)
        if callback is not None:
            cost = float(np.sum(err[kept] ** 2)) * scale
            callback(iterations, t.copy(), kept.copy(), cost)
        grad = 2.0 * coef * scale * ((err[kept].sum(axis=1) / d2[kept]) @ diff[kept])
        t_new = t - step * grad
        if not np.all(np.isfinite(t_new)) or np.linalg.norm(t_new) > 1e6:
            converged = False
            break
        moved = float(np.linalg.norm(t_new - t))
        t = t_new
        if moved < 1e-12:
            break
    eliminated = frozenset(int(i) for i in np.setdiff1d(np.arange(n), kept))
    return Estimate(
        position=t, eliminated=eliminated, iterations=iterations, converged=converged
    )
