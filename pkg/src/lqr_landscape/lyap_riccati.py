"""Lyapunov and Riccati solvers, LQR cost and gradient.

For a stabilizing gain ``K`` the LQR cost is ``J(K) = tr((Q + K'RK) X)`` with
``X`` the closed-loop Gramian, ``(A+BK) X + X (A+BK)' + W = 0``. Equivalently
``J(K) = tr(P W)`` with ``P`` the value matrix solving the dual equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .config import get_tolerances
from .errors import AssumptionError, IllConditionedError, NumericalError, StabilityError
from .lti_model import Plant, as_gain, assumption1, spectral_abscissa

_KRON_MAX_N = 32


def _sym(M):
    return 0.5 * (M + M.T)


def _complex_schur(F):
    return sla.schur(F.astype(complex), output="complex", check_finite=False)


def _bartels_stewart(T, U, S):
    # with F = U T U^H solve T Y + Y T^H = -U^H S U column by column
    C = -(U.conj().T @ S @ U)
    n = T.shape[0]
    Y = np.zeros((n, n), dtype=complex)
    Tc = T.conj()
    eye = np.eye(n)
    for j in range(n - 1, -1, -1):
        rhs = C[:, j] - Y[:, j + 1:] @ Tc[j, j + 1:]
        Y[:, j] = sla.solve_triangular(T + Tc[j, j] * eye, rhs, check_finite=False)
    return (U @ Y @ U.conj().T).real


def _kronecker(F, S):
    n = F.shape[0]
    I = np.eye(n)
    L = np.kron(I, F) + np.kron(F, I)
    lu = sla.lu_factor(L)
    # column-major vec, plus one step of iterative refinement
    x = sla.lu_solve(lu, -S.reshape(-1, order="F"))
    X = x.reshape(n, n, order="F")
    r = F @ X + X @ F.T + S
    return X - sla.lu_solve(lu, r.reshape(-1, order="F")).reshape(n, n, order="F")


def solve_lyapunov(F, S, method: str = "schur"):
    """Solve ``F X + X F' + S = 0`` for stable ``F``.

    ``method="schur"`` uses a Bartels-Stewart sweep over the complex Schur
    form; ``"kron"`` solves the vectorized ``n^2`` system directly
    (``n <= 32``).
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if F.shape[0] != F.shape[1] or S.shape != F.shape:
        raise ValueError(f"incompatible shapes F{F.shape}, S{S.shape}")
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(S))):
        raise ValueError("non-finite entries in Lyapunov data")
    tol = get_tolerances()
    if method == "schur":
        T, U = _complex_schur(F)
        alpha = float(np.max(np.diag(T).real))
    elif method == "kron":
        if F.shape[0] > _KRON_MAX_N:
            raise ValueError(f"kron method limited to n <= {_KRON_MAX_N}")
        alpha = spectral_abscissa(F)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not alpha < -tol.stab:
        raise StabilityError(f"F is not stable (spectral abscissa {alpha:.3e})", abscissa=alpha)
    X = _bartels_stewart(T, U, S) if method == "schur" else _kronecker(F, S)
    if np.max(np.abs(S - S.T)) <= 1e-14 * (1 + np.max(np.abs(S))):
        X = _sym(X)
    res = np.linalg.norm(F @ X + X @ F.T + S)
    if not np.isfinite(res) or res > tol.lyap_residual * (1 + np.linalg.norm(X)):
        raise NumericalError(f"Lyapunov residual {res:.3e} exceeds tolerance")
    return X


@dataclass(frozen=True)
class GramianSolution:
    X: np.ndarray
    K: np.ndarray
    residual: float

    @property
    def lambda_min_X(self) -> float:
        return float(np.linalg.eigvalsh(self.X)[0])


@dataclass(frozen=True)
class RiccatiSolution:
    P_star: np.ndarray
    K_star: np.ndarray
    are_residual: float
    closed_loop_abscissa: float


@dataclass(frozen=True)
class ValueMatrix:
    P: np.ndarray
    residual: float


def _closed_loop(plant: Plant, K):
    K = as_gain(K, plant)
    return K, plant.A + plant.B @ K


def _lyap_closed_loop(F, S):
    try:
        return solve_lyapunov(F, S)
    except StabilityError as exc:
        raise StabilityError(
            f"gain is not stabilizing (closed-loop abscissa {exc.abscissa:.3e})",
            abscissa=exc.abscissa,
        ) from None


def closed_loop_gramian(plant: Plant, K) -> GramianSolution:
    K, F = _closed_loop(plant, K)
    X = _lyap_closed_loop(F, plant.W)
    res = float(np.linalg.norm(F @ X + X @ F.T + plant.W))
    return GramianSolution(X=X, K=K, residual=res)


def cost(plant: Plant, K) -> float:
    """``J(K) = tr((Q + K'RK) X)``; raises StabilityError off the stabilizing set."""
    K, F = _closed_loop(plant, K)
    X = _lyap_closed_loop(F, plant.W)
    return float(np.sum((plant.Q + K.T @ plant.R @ K) * X))


def dual_value_matrix(plant: Plant, K) -> ValueMatrix:
    """``P`` with ``(A+BK)'P + P(A+BK) + K'RK + Q = 0``."""
    K, F = _closed_loop(plant, K)
    S = plant.Q + K.T @ plant.R @ K
    P = _lyap_closed_loop(F.T, S)
    return ValueMatrix(P=P, residual=float(np.linalg.norm(F.T @ P + P @ F + S)))


def gradient(plant: Plant, K):
    """Exact gradient ``2 (R K + B' P) X`` of the LQR cost."""
    K, F = _closed_loop(plant, K)
    X = _lyap_closed_loop(F, plant.W)
    P = _lyap_closed_loop(F.T, plant.Q + K.T @ plant.R @ K)
    return 2.0 * (plant.R @ K + plant.B.T @ P) @ X


def cost_and_gradient(plant: Plant, K):
    K, F = _closed_loop(plant, K)
    X = _lyap_closed_loop(F, plant.W)
    P = _lyap_closed_loop(F.T, plant.Q + K.T @ plant.R @ K)
    J = float(np.trace((plant.Q + K.T @ plant.R @ K) @ X))
    return J, 2.0 * (plant.R @ K + plant.B.T @ P) @ X


def riccati_residual(plant: Plant, P):
    A, B, Q, R = plant.A, plant.B, plant.Q, plant.R
    return A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q


def optimal_gain(plant: Plant, P_star):
    """``K* = -R^{-1} B' P*``."""
    return -np.linalg.solve(plant.R, plant.B.T @ P_star)


def _kleinman_step(plant: Plant, K):
    F = plant.A + plant.B @ K
    return _sym(solve_lyapunov(F.T, plant.Q + K.T @ plant.R @ K))


def solve_care(plant: Plant, check_assumptions: bool = True) -> RiccatiSolution:
    """Stabilizing PSD solution of ``A'P + PA - P B R^{-1} B' P + Q = 0``.

    The stable invariant subspace of the Hamiltonian
    ``[[A, -B R^{-1} B'], [-Q, -A']]`` is extracted by an ordered real Schur
    decomposition. One Newton-Kleinman step polishes the result when it
    lowers the residual.
    """
    tol = get_tolerances()
    if check_assumptions and not assumption1(plant):
        raise AssumptionError("(A, B) must be stabilizable and (Q^1/2, A) detectable")
    A, B, Q, R = plant.A, plant.B, plant.Q, plant.R
    n = plant.n
    G = B @ np.linalg.solve(R, B.T)
    H = np.block([[A, -G], [-Q, -A.T]])
    eigs = np.linalg.eigvals(H)
    scale = max(1.0, np.abs(eigs).max())
    if np.min(np.abs(eigs.real)) < tol.hamiltonian_gap * scale:
        raise IllConditionedError("Hamiltonian has eigenvalues on or near the imaginary axis")
    T, U, sdim = sla.schur(H, output="real", sort="lhp")
    if sdim != n:
        raise NumericalError(f"stable subspace has dimension {sdim}, expected {n}")
    U11, U21 = U[:n, :n], U[n:, :n]
    if np.linalg.cond(U11) > 1e12:
        raise IllConditionedError("stable subspace basis is not a graph over the state space")
    P = _sym(np.linalg.solve(U11.T, U21.T).T)

    res = np.linalg.norm(riccati_residual(plant, P))
    try:
        P_new = _kleinman_step(plant, optimal_gain(plant, P))
        res_new = np.linalg.norm(riccati_residual(plant, P_new))
        if res_new < res:
            P, res = P_new, res_new
    except (StabilityError, NumericalError):
        pass

    K = optimal_gain(plant, P)
    alpha = spectral_abscissa(A + B @ K)
    if res > tol.care_residual * (1 + np.linalg.norm(P)):
        raise NumericalError(f"Riccati residual {res:.3e} exceeds tolerance")
    if not alpha < 0:
        raise NumericalError(f"Riccati solution is not stabilizing (abscissa {alpha:.3e})")
    return RiccatiSolution(P_star=P, K_star=K, are_residual=float(res), closed_loop_abscissa=alpha)


def initial_stabilizing_gain(plant: Plant):
    """A stabilizing gain that does not use the Riccati solution.

    Zero when A is already stable, otherwise Bass's construction from the
    controllability Gramian of the shifted pair ``(A + beta I, B)``.
    """
    A, B = plant.A, plant.B
    tol = get_tolerances()
    alpha = spectral_abscissa(A)
    if alpha < -tol.stab:
        return np.zeros((plant.m, plant.n))
    # -(A + beta I) must be stable; the closed loop then has every eigenvalue at real part -beta
    beta = max(0.0, -float(np.min(np.linalg.eigvals(A).real))) + 1.0
    F = -(A + beta * np.eye(plant.n))
    Z = solve_lyapunov(F, 2.0 * B @ B.T)
    K = -B.T @ np.linalg.pinv(Z, rcond=1e-12)
    if spectral_abscissa(A + B @ K) >= -tol.stab:
        raise NumericalError("could not construct a stabilizing initial gain")
    return K


def newton_kleinman(plant: Plant, K0=None, max_iter: int = 100, rtol: float = 1e-14):
    """Riccati solution by repeated Lyapunov solves from a stabilizing ``K0``.

    Stops when successive iterates agree to ``rtol`` or, once they agree to
    1e-9, when the update stops shrinking (the roundoff floor is reached).
    """
    K = initial_stabilizing_gain(plant) if K0 is None else as_gain(K0, plant)
    P_prev, step_prev = None, np.inf
    for _ in range(max_iter):
        P = _kleinman_step(plant, K)
        K = optimal_gain(plant, P)
        if P_prev is not None:
            scale = 1 + np.linalg.norm(P)
            step = np.linalg.norm(P - P_prev)
            if step <= rtol * scale or (step <= 1e-9 * scale and step >= step_prev):
                return P
            step_prev = step
        P_prev = P
    raise NumericalError("Newton-Kleinman did not converge")


@dataclass(frozen=True)
class CostGap:
    lhs: float
    rhs: float
    gap: float


def cost_gap_identity(plant: Plant, K, care: RiccatiSolution | None = None) -> CostGap:
    """Both sides of ``J(K) - J(K*) = tr((K-K*)' R (K-K*) X)``."""
    care = solve_care(plant) if care is None else care
    g = closed_loop_gramian(plant, K)
    lhs = cost(plant, g.K) - cost(plant, care.K_star)
    D = g.K - care.K_star
    rhs = float(np.trace(D.T @ plant.R @ D @ g.X))
    return CostGap(lhs=lhs, rhs=rhs, gap=abs(lhs - rhs))
