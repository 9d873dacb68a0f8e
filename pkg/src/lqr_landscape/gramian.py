"""Trajectory Gramians and the static-policy optimality sandwich.

A closed-loop trajectory ``x(t) = exp((A+BK) t) x0``, ``u = K x`` is summarized
by ``Z = int_0^inf [x; u][x; u]' dt``. Gramians of static gains satisfy the
affine constraint ``A Z11 + B Z12' + Z11 A' + Z12 B' + x0 x0' = 0`` and are PSD,
which is the SDP outer set used to certify that static feedback is optimal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .duality import affine_residual, lift_primal
from .errors import DimensionError
from .lti_model import Plant, as_gain, spectral_abscissa
from .lyap_riccati import cost, solve_care, solve_lyapunov

_T_CAP = 1e4
_DT_DEFAULT = 1e-2
_REFINE_TOL = 1e-8
_MAX_REFINE = 3
_BLOCK = 256


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (N+1, n)
    inputs: np.ndarray  # (N+1, m)
    gramian: np.ndarray  # Simpson estimate of the integral over [0, T]
    tail_gramian: np.ndarray  # exact integral over [T, inf) from x(T)
    quadrature_error: float
    tail_bound: float

    @property
    def total_gramian(self):
        return self.gramian + self.tail_gramian

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def _x0_vector(plant: Plant, x0):
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size == 1 and plant.n > 1:
        raise DimensionError(f"x0 must have {plant.n} entries")
    if x0.size != plant.n:
        raise DimensionError(f"x0 has {x0.size} entries, expected {plant.n}")
    return x0


def _propagate(F, x0, dt, N):
    """States ``x(i dt)`` for ``i = 0..N`` by exact exponential stepping, blockwise."""
    n = F.shape[0]
    E = sla.expm(F * dt)
    b = min(_BLOCK, N + 1)
    powers = np.empty((b, n, n))
    powers[0] = np.eye(n)
    for i in range(1, b):
        powers[i] = E @ powers[i - 1]
    jump = E @ powers[-1]  # E^b
    out = np.empty((N + 1, n))
    x = x0.copy()
    for start in range(0, N + 1, b):
        stop = min(start + b, N + 1)
        out[start:stop] = powers[: stop - start] @ x
        x = jump @ x
    return out


def _simpson(Zs, dt):
    N = Zs.shape[0] - 1
    w = np.ones(N + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return (Zs * (w * dt / 3.0)[:, None]).T @ Zs


def _horizon(F, x0):
    alpha = spectral_abscissa(F)
    # time for the slowest mode to decay by 1e-8, padded for non-normal transients
    return min(_T_CAP, 2.0 * np.log(1e8) / -alpha)


def _run(F, K, x0, T, dt):
    N = max(2, int(np.ceil(T / dt)))
    N += N % 2
    dt = T / N
    states = _propagate(F, x0, dt, N)
    inputs = states @ K.T
    Zs = np.hstack([states, inputs])
    return np.linspace(0.0, T, N + 1), states, inputs, _simpson(Zs, dt)


def simulate_closed_loop(plant: Plant, K, x0, T: float | None = None,
                         dt: float | None = None) -> Trajectory:
    """Simulate ``dx/dt = (A + BK) x`` from ``x0`` and accumulate its Gramian.

    Without ``T`` the horizon is chosen from the spectral abscissa (capped at
    1e4). Without ``dt`` the step starts at 1e-2 and is halved until the
    Gramian changes by less than 1e-8, at most three times. The returned
    ``tail_bound`` adds a Richardson estimate of the quadrature error to the
    trace of the exact tail Gramian beyond ``T``.
    """
    K = as_gain(K, plant)
    x0 = _x0_vector(plant, x0)
    F = plant.A + plant.B @ K
    # reuse the stability gate of the Lyapunov solver
    solve_lyapunov(F, np.eye(plant.n))
    if T is None:
        T = _horizon(F, x0)
    if T <= 0 or (dt is not None and not 0 < dt < T):
        raise ValueError(f"need 0 < dt < T, got dt={dt!r}, T={T!r}")

    if dt is not None:
        times, states, inputs, Z = _run(F, K, x0, T, dt)
        _, _, _, Z_half = _run(F, K, x0, T, dt / 2)
        quad_err = float(np.linalg.norm(Z_half - Z)) / 15.0
    else:
        h = _DT_DEFAULT
        times, states, inputs, Z = _run(F, K, x0, T, h)
        quad_err = np.inf
        for _ in range(_MAX_REFINE):
            h /= 2
            new = _run(F, K, x0, T, h)
            change = float(np.linalg.norm(new[3] - Z))
            times, states, inputs, Z = new
            quad_err = change / 15.0
            if change < _REFINE_TOL:
                break

    xT = states[-1]
    X_tail = solve_lyapunov(F, np.outer(xT, xT))
    IK = np.vstack([np.eye(plant.n), K])
    tail = IK @ X_tail @ IK.T
    tail = 0.5 * (tail + tail.T)
    return Trajectory(
        times=times,
        states=states,
        inputs=inputs,
        gramian=0.5 * (Z + Z.T),
        tail_gramian=tail,
        quadrature_error=quad_err,
        tail_bound=float(quad_err + np.trace(tail)),
    )


def trajectory_cost(plant: Plant, traj: Trajectory) -> float:
    """``tr(diag(Q, R) Z)`` over the full horizon."""
    n = plant.n
    Z = traj.total_gramian
    return float(np.sum(plant.Q * Z[:n, :n]) + np.sum(plant.R * Z[n:, n:]))


@dataclass(frozen=True)
class TrajectoryGap:
    gap: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.gap <= self.tolerance


def trajectory_gramian_vs_lyapunov(plant: Plant, K, x0, T: float | None = None,
                                   dt: float | None = None) -> TrajectoryGap:
    """Distance between the simulated Gramian and the lifted Lyapunov solution with ``W = x0 x0'``."""
    x0 = _x0_vector(plant, x0)
    traj = simulate_closed_loop(plant, K, x0, T, dt)
    ref = lift_primal(plant.with_W(np.outer(x0, x0)), K).Z
    gap = float(np.linalg.norm(traj.total_gramian - ref))
    return TrajectoryGap(gap=gap, tolerance=max(1e-6, traj.tail_bound))


@dataclass(frozen=True)
class GramianMembership:
    Z: np.ndarray
    sdp_residual: float
    psd_min_eig: float
    in_V_sdp: bool
    static_structure_gap: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "Z": self.Z.tolist(),
            "sdp_residual": self.sdp_residual,
            "psd_min_eig": self.psd_min_eig,
            "in_V_sdp": self.in_V_sdp,
            "static_structure_gap": self.static_structure_gap,
            "tolerance": self.tolerance,
        }


def v_sdp_membership(Z, plant: Plant, x0, tol: float | None = None) -> GramianMembership:
    """Affine residual and PSD margin of ``Z`` against the SDP outer set.

    ``static_structure_gap`` measures how far ``Z`` is from the rank-``n``
    form ``[[X, XK'], [KX, KXK']]`` for the least-squares ``K``.
    """
    n, m = plant.n, plant.m
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape != (n + m, n + m):
        raise DimensionError(f"Z has shape {Z.shape}, expected {(n + m, n + m)}")
    x0 = _x0_vector(plant, x0)
    Z = 0.5 * (Z + Z.T)
    if tol is None:
        tol = 1e-9 * (1.0 + np.linalg.norm(Z))
    res = affine_residual(plant, Z, np.outer(x0, x0))
    lam = float(np.linalg.eigvalsh(Z)[0])
    Z11, Z12, Z22 = Z[:n, :n], Z[:n, n:], Z[n:, n:]
    Kt = np.linalg.lstsq(Z11, Z12, rcond=None)[0]  # K'
    K = Kt.T
    structure = float(np.linalg.norm(Z12 - Z11 @ Kt) + np.linalg.norm(Z22 - K @ Z11 @ Kt))
    return GramianMembership(
        Z=Z,
        sdp_residual=res,
        psd_min_eig=lam,
        in_V_sdp=bool(res <= tol and lam >= -tol),
        static_structure_gap=structure,
        tolerance=float(tol),
    )


@dataclass(frozen=True)
class Sandwich:
    J1: float
    J2: float
    gap: float
    degenerate: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def optimality_sandwich(plant: Plant, x0) -> Sandwich:
    """``x0' P* x0`` against the optimal static-gain cost with ``W = x0 x0'``."""
    x0 = _x0_vector(plant, x0)
    care = solve_care(plant)
    if not np.any(x0):
        return Sandwich(J1=0.0, J2=0.0, gap=0.0, degenerate=True)
    J1 = float(x0 @ care.P_star @ x0)
    J2 = cost(plant.with_W(np.outer(x0, x0)), care.K_star)
    return Sandwich(J1=J1, J2=J2, gap=abs(J1 - J2), degenerate=False)
