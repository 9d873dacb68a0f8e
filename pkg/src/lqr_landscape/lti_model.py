"""Problem data and structural tests for continuous-time LQR instances.

A :class:`Plant` bundles the dynamics ``dx/dt = A x + B u`` with the weights
``Q``, ``R`` and the initial-state covariance ``W``. The structural tests here
(stability, PBH stabilizability/detectability, Kalman controllability, image
inclusion) gate every downstream computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import get_tolerances
from .errors import DimensionError, PlantError


def _as_matrix(name, value, shape=None):
    arr = np.array(value, dtype=float, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        # a bare vector is read as a column
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got ndim={arr.ndim}")
    if shape is not None and arr.shape != shape:
        raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise PlantError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _psd_tol(eigs, rtol):
    return rtol * max(float(np.max(np.abs(eigs))), 1.0) if eigs.size else 0.0


def is_psd(M, rtol=None) -> bool:
    rtol = get_tolerances().psd_rtol if rtol is None else rtol
    eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
    return bool(eigs.min() >= -_psd_tol(eigs, rtol))


def is_pd(M, rtol=None) -> bool:
    rtol = get_tolerances().psd_rtol if rtol is None else rtol
    eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
    return bool(eigs.min() > _psd_tol(eigs, rtol))


def psd_sqrt(M):
    """Symmetric PSD square root; negative eigenvalues are clamped to zero."""
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


@dataclass(frozen=True, eq=False)
class Plant:
    """An LQR instance ``(A, B, Q, R, W)``.

    Arrays are copied and frozen on construction. ``Q`` must be PSD and
    nonzero, ``R`` PD and ``W`` PSD, up to a relative eigenvalue tolerance.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        A = _as_matrix("A", self.A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = _as_matrix("B", self.B)
        if B.shape[0] != n:
            raise DimensionError(f"B has {B.shape[0]} rows, expected {n}")
        m = B.shape[1]
        Q = _as_matrix("Q", self.Q, (n, n))
        R = _as_matrix("R", self.R, (m, m))
        W = _as_matrix("W", self.W, (n, n))
        for name, M in (("Q", Q), ("R", R), ("W", W)):
            if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
                raise PlantError(f"{name} is not symmetric")
        if not is_psd(Q) or not np.any(Q):
            raise PlantError("Q must be positive semidefinite and nonzero")
        if not is_pd(R):
            raise PlantError("R must be positive definite")
        if not is_psd(W):
            raise PlantError("W must be positive semidefinite")
        for name, M in (("A", A), ("B", B), ("Q", Q), ("R", R), ("W", W)):
            object.__setattr__(self, name, M)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def with_W(self, W) -> "Plant":
        return Plant(self.A, self.B, self.Q, self.R, W)

    def closed_loop(self, K):
        return self.A + self.B @ as_gain(K, self)

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("A", "B", "Q", "R", "W")}


@dataclass(frozen=True)
class FeedbackGain:
    """A static gain ``u = K x``; stability is not a type invariant."""

    K: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "K", _as_matrix("K", self.K))


def as_gain(K, plant: Plant) -> np.ndarray:
    """Coerce ``K`` (array, scalar or FeedbackGain) to an ``m x n`` array."""
    if isinstance(K, FeedbackGain):
        K = K.K
    K = np.asarray(K, dtype=float)
    if K.ndim < 2:
        K = K.reshape(plant.m, plant.n)
    if K.shape != (plant.m, plant.n):
        raise DimensionError(f"gain has shape {K.shape}, expected {(plant.m, plant.n)}")
    if not np.all(np.isfinite(K)):
        raise PlantError("gain contains non-finite entries")
    return K


def spectral_abscissa(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if M.size == 0:
        return -np.inf
    return float(np.max(np.linalg.eigvals(M).real))


def is_stable(M) -> bool:
    """True iff every eigenvalue has real part below ``-tol.stab``."""
    return spectral_abscissa(M) < -get_tolerances().stab


def _rank(M, rtol=None) -> int:
    rtol = get_tolerances().rank_rtol if rtol is None else rtol
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def pbh_stabilizable(A, B) -> bool:
    """PBH test: ``rank [A - lam I, B] = n`` for every non-stable eigenvalue."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n = A.shape[0]
    margin = get_tolerances().stab
    for lam in np.linalg.eigvals(A):
        if lam.real >= -margin:
            if _rank(np.hstack([A - lam * np.eye(n), B])) < n:
                return False
    return True


def pbh_detectable(C, A) -> bool:
    """Dual PBH test on ``(A', C')``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.asarray(C, dtype=float).reshape(-1, A.shape[0])
    return pbh_stabilizable(A.T, C.T)


def is_controllable(A, B) -> bool:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return _rank(np.hstack(blocks)) == n


def image_inclusion(B, B1) -> bool:
    """True iff ``Im B`` is contained in ``Im B1``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    B1 = np.asarray(B1, dtype=float).reshape(B.shape[0], -1)
    return _rank(np.hstack([B1, B])) == _rank(B1)


def assumption1(plant: Plant) -> bool:
    """Stabilizable (A, B) and detectable (Q^{1/2}, A); weight definiteness holds by construction."""
    return pbh_stabilizable(plant.A, plant.B) and pbh_detectable(psd_sqrt(plant.Q), plant.A)


@dataclass(frozen=True)
class StructuralReport:
    stable: bool
    stabilizable: bool
    detectable: bool
    controllable: bool
    spectral_abscissa: float
    assumption1_holds: bool
    sufficient_condition: str  # one of "a", "b", "unknown", "none"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def structural_report(plant: Plant, B1=None) -> StructuralReport:
    """Assumption checks plus the compactness sufficient condition that applies.

    Condition (c) involves a limit along unbounded gains and is never claimed;
    ``"unknown"`` means its finitely checkable parts hold.
    """
    tol = get_tolerances()
    stabilizable = pbh_stabilizable(plant.A, plant.B)
    detectable = pbh_detectable(psd_sqrt(plant.Q), plant.A)
    controllable = is_controllable(plant.A, plant.B)
    holds = stabilizable and detectable

    cond = "none"
    if holds:
        if is_pd(plant.W):
            cond = "a"
        elif B1 is not None:
            B1 = np.asarray(B1, dtype=float)
            if B1.ndim == 1:
                B1 = B1.reshape(-1, 1)
            if B1.ndim != 2 or B1.shape[0] != plant.n:
                raise DimensionError(f"B1 must have {plant.n} rows, got shape {B1.shape}")
            factor_ok = np.max(np.abs(plant.W - B1 @ B1.T)) <= tol.factor_match
            finite_parts = controllable and factor_ok and image_inclusion(plant.B, B1)
            if finite_parts and is_pd(plant.Q):
                cond = "b"
            elif finite_parts:
                cond = "unknown"
    return StructuralReport(
        stable=is_stable(plant.A),
        stabilizable=stabilizable,
        detectable=detectable,
        controllable=controllable,
        spectral_abscissa=spectral_abscissa(plant.A),
        assumption1_holds=holds,
        sufficient_condition=cond,
    )


def random_plant(n: int, m: int, seed: int, *, W_pd: bool = True, max_tries: int = 100) -> Plant:
    """Random instance satisfying the standard assumptions, deterministic per seed.

    Q, R (and W when ``W_pd``) are well-conditioned PD matrices; draws that fail
    stabilizability or detectability are discarded.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        A = rng.standard_normal((n, n)) / np.sqrt(n)
        B = rng.standard_normal((n, m))
        G = rng.standard_normal((n, n))
        Q = G @ G.T / n + 0.1 * np.eye(n)
        H = rng.standard_normal((m, m))
        R = H @ H.T / m + 0.5 * np.eye(m)
        V = rng.standard_normal((n, n))
        if W_pd:
            W = V @ V.T / n + 0.1 * np.eye(n)
        else:
            v = V[:, :1]
            W = v @ v.T
        plant = Plant(A, B, 0.5 * (Q + Q.T), 0.5 * (R + R.T), 0.5 * (W + W.T))
        if assumption1(plant):
            return plant
    raise PlantError(f"no admissible instance found for seed {seed}")
