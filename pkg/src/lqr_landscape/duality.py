"""Primal lift, dual LMI and KKT certificates for the LQR SDP pair.

The dual problem maximizes ``tr(W P)`` subject to ``M(P) >= 0`` with

    M(P) = [[A'P + PA + Q, PB], [B'P, R]].

Its primal is the relaxation over ``Z = [[Z11, Z12], [Z12', Z22]] >= 0`` with
``A Z11 + B Z12' + Z11 A' + Z12 B' + W = 0``. No SDP solver is involved: the
optimal dual is the stabilizing Riccati solution and the optimal primal is
recovered from it through complementary slackness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import get_tolerances
from .errors import DimensionError
from .lti_model import Plant, as_gain
from .lyap_riccati import RiccatiSolution, closed_loop_gramian, cost, solve_care, solve_lyapunov


def _sym(M):
    return 0.5 * (M + M.T)


def _matrix_rank(M, rtol):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def lmi_matrix(plant: Plant, P):
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape != (plant.n, plant.n):
        raise DimensionError(f"P has shape {P.shape}, expected {(plant.n, plant.n)}")
    A, B = plant.A, plant.B
    top = np.hstack([A.T @ P + P @ A + plant.Q, P @ B])
    bottom = np.hstack([B.T @ P, plant.R])
    return _sym(np.vstack([top, bottom]))


def affine_residual(plant: Plant, Z, W=None):
    """Frobenius norm of ``A Z11 + B Z12' + Z11 A' + Z12 B' + W``."""
    n = plant.n
    W = plant.W if W is None else W
    Z11, Z12 = Z[:n, :n], Z[:n, n:]
    A, B = plant.A, plant.B
    return float(np.linalg.norm(A @ Z11 + B @ Z12.T + Z11 @ A.T + Z12 @ B.T + W))


@dataclass(frozen=True)
class DualCertificate:
    P: np.ndarray
    dual_value: float
    lmi_min_eig: float
    feasible: bool

    def to_dict(self) -> dict:
        return {
            "P": self.P.tolist(),
            "dual_value": self.dual_value,
            "lmi_min_eig": self.lmi_min_eig,
            "feasible": self.feasible,
        }


@dataclass(frozen=True)
class PrimalLift:
    Z: np.ndarray
    n: int
    objective: float
    affine_residual: float

    @property
    def Z11(self):
        return self.Z[: self.n, : self.n]

    @property
    def Z12(self):
        return self.Z[: self.n, self.n:]

    @property
    def Z22(self):
        return self.Z[self.n:, self.n:]

    def to_dict(self) -> dict:
        return {
            "Z": self.Z.tolist(),
            "Z11": self.Z11.tolist(),
            "Z12": self.Z12.tolist(),
            "Z22": self.Z22.tolist(),
            "objective": self.objective,
            "affine_residual": self.affine_residual,
        }


@dataclass(frozen=True)
class ComplementarityReport:
    rank_M: int
    rank_Z: int
    rank_sum: int
    slackness: float
    slackness_ok: bool
    strict: bool
    sv_threshold: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def dual_certificate(plant: Plant, P) -> DualCertificate:
    P = _sym(np.atleast_2d(np.asarray(P, dtype=float)))
    M = lmi_matrix(plant, P)
    eigs = np.linalg.eigvalsh(M)
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    feasible = lam_min >= -get_tolerances().lmi_feas * (1 + lam_max)
    return DualCertificate(
        P=P, dual_value=float(np.trace(plant.W @ P)), lmi_min_eig=lam_min, feasible=bool(feasible)
    )


def _make_lift(plant: Plant, Z11, Z12, Z22) -> PrimalLift:
    Z = _sym(np.block([[Z11, Z12], [Z12.T, Z22]]))
    n = plant.n
    obj = float(np.trace(plant.Q @ Z[:n, :n]) + np.trace(plant.R @ Z[n:, n:]))
    return PrimalLift(Z=Z, n=n, objective=obj, affine_residual=affine_residual(plant, Z))


def lift_primal(plant: Plant, K) -> PrimalLift:
    """Rank-``n`` point ``Z11 = X, Z12 = X K', Z22 = K X K'`` of a stabilizing gain."""
    g = closed_loop_gramian(plant, K)
    X, K = g.X, g.K
    return _make_lift(plant, X, X @ K.T, K @ X @ K.T)


def kkt_primal_from_dual(plant: Plant, P_star) -> PrimalLift:
    """Recover the optimal primal ``Z*`` from the Riccati solution.

    Slackness forces ``Z12 = -Z11 P* B R^{-1}`` and ``Z22 = R^{-1} B' P* Z11 P* B R^{-1}``;
    primal feasibility then leaves a Lyapunov equation for ``Z11`` in the
    optimal closed loop.
    """
    P_star = np.atleast_2d(np.asarray(P_star, dtype=float))
    A, B, R = plant.A, plant.B, plant.R
    L = np.linalg.solve(R, B.T @ P_star)  # R^{-1} B' P*
    Z11 = solve_lyapunov(A - B @ L, plant.W)
    Z12 = -Z11 @ L.T
    Z22 = L @ Z11 @ L.T
    return _make_lift(plant, Z11, Z12, Z22)


@dataclass(frozen=True)
class DualityGap:
    p_star: float
    d_star: float
    gap: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def duality_gap(plant: Plant, care: RiccatiSolution | None = None) -> DualityGap:
    """Primal value ``J(K*)`` against dual value ``tr(W P*)``."""
    care = solve_care(plant) if care is None else care
    p = cost(plant, care.K_star)
    d = float(np.trace(plant.W @ care.P_star))
    return DualityGap(p_star=p, d_star=d, gap=p - d)


def complementarity(plant: Plant, P_star, Z_star) -> ComplementarityReport:
    tol = get_tolerances()
    Z = Z_star.Z if isinstance(Z_star, PrimalLift) else np.asarray(Z_star, dtype=float)
    M = lmi_matrix(plant, P_star)
    slack = float(np.sum(Z * M))
    bound = tol.slackness * (1 + np.linalg.norm(Z) * np.linalg.norm(M))
    rM = _matrix_rank(M, tol.cert_rank_rtol)
    rZ = _matrix_rank(Z, tol.cert_rank_rtol)
    return ComplementarityReport(
        rank_M=rM,
        rank_Z=rZ,
        rank_sum=rM + rZ,
        slackness=slack,
        slackness_ok=bool(abs(slack) <= bound),
        strict=(rM + rZ == plant.n + plant.m),
        sv_threshold=tol.cert_rank_rtol,
    )


@dataclass(frozen=True)
class CertificateBundle:
    dual: DualCertificate
    primal: PrimalLift
    complementarity: ComplementarityReport
    gap: DualityGap
    K_star: np.ndarray
    are_residual: float

    @property
    def ok(self) -> bool:
        tol = get_tolerances()
        gap_ok = abs(self.gap.gap) <= tol.duality_gap * (1 + abs(self.gap.p_star))
        return bool(gap_ok and self.complementarity.slackness_ok and self.dual.feasible)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "K_star": self.K_star.tolist(),
            "are_residual": self.are_residual,
            "duality_gap": self.gap.to_dict(),
            "dual_certificate": self.dual.to_dict(),
            "primal_lift": self.primal.to_dict(),
            "complementarity": self.complementarity.to_dict(),
        }


def certify(plant: Plant) -> CertificateBundle:
    """Full strong-duality / complementarity certificate for one instance."""
    care = solve_care(plant)
    dual = dual_certificate(plant, care.P_star)
    primal = kkt_primal_from_dual(plant, care.P_star)
    return CertificateBundle(
        dual=dual,
        primal=primal,
        complementarity=complementarity(plant, care.P_star, primal),
        gap=duality_gap(plant, care),
        K_star=care.K_star,
        are_residual=care.are_residual,
    )
