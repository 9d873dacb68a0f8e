"""Policy gradient descent and the gradient-dominance machinery of LQR.

Covers smoothness and PL-constant estimation over a sublevel set
``K_nu = {K stabilizing : J(K) <= nu}``, the convex lift
``(K, X) -> (Y, X) = ((K - K*) X, X)`` with its convex objective ``f_cvx``,
quadratic-growth and Cauchy-direction checks, and 1-d/2-d landscape slices.
"""

from __future__ import annotations

import contextvars
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from .config import get_tolerances
from .errors import NumericalError, SamplingError, SingularLiftError, StabilityError
from .lti_model import Plant, as_gain, is_pd, spectral_abscissa
from .lyap_riccati import (
    RiccatiSolution,
    closed_loop_gramian,
    cost,
    cost_and_gradient,
    solve_care,
)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LQR_LANDSCAPE_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    """Order-preserving map, fanned out over threads when the env var allows it."""
    items = list(items)
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    # worker threads start with a fresh context; carry the active tolerances over
    ctx = contextvars.copy_context()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda x: ctx.copy().run(fn, x), items))


def _safe_cost(plant: Plant, K) -> float:
    try:
        return cost(plant, K)
    except (StabilityError, NumericalError):
        return np.inf


# ---------------------------------------------------------------------------
# sublevel sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SublevelSample:
    """Accepted gains from ``K_nu`` plus diagnostics of the sampling run.

    Iterating over the object yields the gains, so it can be passed wherever
    a list of gains is expected.
    """

    gains: list
    nu: float
    seed: int
    attempts: int
    unbounded_directions: int
    kappa_lo_vanishing: bool

    def __iter__(self):
        return iter(self.gains)

    def __len__(self):
        return len(self.gains)

    def __getitem__(self, i):
        return self.gains[i]

    @property
    def acceptance_rate(self) -> float:
        return len(self.gains) / max(self.attempts, 1)


_BOUNDARY_SHRINK = 1.0 - 1e-6
_BISECT_STEPS = 32
_MAX_ATTEMPTS_PER_SAMPLE = 1000


def _ray_extent(plant, K_star, V, nu, cap):
    """Largest ``t`` (up to ``cap``) with ``J(K* + tV) <= nu``, by doubling then bisection."""
    lo, hi = 0.0, 1.0
    while _safe_cost(plant, K_star + hi * V) <= nu:
        lo = hi
        hi *= 2.0
        if hi > cap:
            return cap, True
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if _safe_cost(plant, K_star + mid * V) <= nu:
            lo = mid
        else:
            hi = mid
    return lo, False


def sample_sublevel(plant: Plant, nu: float, count: int, seed: int = 0,
                    care: RiccatiSolution | None = None) -> SublevelSample:
    """Draw ``count`` gains with ``J(K) <= nu``, deterministic per seed.

    Each sample uses its own random stream. A Gaussian direction from ``K*``
    is followed to the sublevel boundary; roughly a quarter of the samples
    sit just inside the boundary and the rest are spread over the segment
    with density matched to the gain dimension. Directions along which the
    sublevel set does not end before a cap are counted as unbounded.
    """
    care = solve_care(plant) if care is None else care
    K_star = care.K_star
    J_star = cost(plant, K_star)
    if not nu > J_star:
        raise SamplingError(f"nu={nu!r} must exceed the optimal cost {J_star!r}")
    dim = plant.m * plant.n
    cap = 1e3 * (1.0 + np.linalg.norm(K_star))
    streams = np.random.SeedSequence(seed).spawn(count)

    def draw(i):
        rng = np.random.default_rng(streams[i])
        boundary = rng.random() < 0.25
        unbounded = 0
        for attempt in range(1, _MAX_ATTEMPTS_PER_SAMPLE + 1):
            V = rng.standard_normal((plant.m, plant.n))
            V /= np.linalg.norm(V)
            t_max, hit_cap = _ray_extent(plant, K_star, V, nu, cap)
            unbounded += hit_cap
            if boundary:
                t = t_max * _BOUNDARY_SHRINK
            else:
                t = t_max * rng.random() ** (1.0 / dim)
            K = K_star + t * V
            if _safe_cost(plant, K) <= nu:
                return K, attempt, unbounded
        return None, _MAX_ATTEMPTS_PER_SAMPLE, unbounded

    results = _map(draw, range(count))
    gains = [K for K, _, _ in results if K is not None]
    attempts = sum(a for _, a, _ in results)
    unbounded = sum(u for _, _, u in results)
    if len(gains) < count or len(gains) < 1e-3 * attempts:
        raise SamplingError(
            f"sublevel sampling accepted {len(gains)} of {attempts} draws at nu={nu!r}"
        )

    # flat directions of the Hessian at K* (v u' with X* u = 0) are probed explicitly,
    # since random rays almost never align with them
    X_star = closed_loop_gramian(plant, K_star).X
    w, U = np.linalg.eigh(X_star)
    flat = U[:, w <= 1e-8 * max(1.0, float(w[-1]))]
    for u in flat.T:
        for j in range(plant.m):
            V = np.zeros((plant.m, plant.n))
            V[j] = u
            for sign in (1.0, -1.0):
                unbounded += _ray_extent(plant, K_star, sign * V, nu, cap)[1]

    lam = [float(w[0])] + [closed_loop_gramian(plant, K).lambda_min_X for K in gains]
    vanishing = unbounded > 0 or min(lam) <= 1e-8 * max(1.0, float(np.max(np.abs(lam))))
    return SublevelSample(
        gains=gains,
        nu=float(nu),
        seed=seed,
        attempts=attempts,
        unbounded_directions=unbounded,
        kappa_lo_vanishing=bool(vanishing),
    )


# ---------------------------------------------------------------------------
# smoothness
# ---------------------------------------------------------------------------


def _second_difference(f, h):
    d1 = (f(h) - 2.0 * f(0.0) + f(-h)) / h**2
    d2 = (f(h / 2) - 2.0 * f(0.0) + f(-h / 2)) / (h / 2) ** 2
    return (4.0 * d2 - d1) / 3.0


def _directional_curvature(plant, K, V, h0=1e-3):
    h = h0 * max(1.0, np.linalg.norm(K))
    for _ in range(20):
        try:
            return _second_difference(lambda t: cost(plant, K + t * V), h)
        except StabilityError:
            h *= 0.5
    raise NumericalError("no stabilizing stencil around sample point")


def estimate_smoothness(plant: Plant, nu: float, samples=None, *, count: int = 50,
                        directions: int = 8, seed: int = 0, safety: float = 1.5,
                        care: RiccatiSolution | None = None) -> float:
    """Largest sampled directional curvature of ``J`` over ``K_nu``, times ``safety``."""
    care = solve_care(plant) if care is None else care
    J_star = cost(plant, care.K_star)
    if samples is None:
        if nu <= J_star * (1 + 1e-12) + 1e-15:
            samples = []
        else:
            samples = sample_sublevel(plant, nu, count, seed, care=care)
    points = [care.K_star] + [as_gain(K, plant) for K in samples]
    if not points:
        raise SamplingError("no sample points for smoothness estimate")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    dirs = rng.standard_normal((directions, plant.m, plant.n))
    dirs /= np.linalg.norm(dirs.reshape(directions, -1), axis=1)[:, None, None]
    if plant.m * plant.n == 1:
        dirs = dirs[:1]

    def worst(K):
        return max(abs(_directional_curvature(plant, K, V)) for V in dirs)

    L = safety * max(_map(worst, points))
    if not L > 0:
        raise NumericalError("smoothness estimate is not positive")
    return float(L)


# ---------------------------------------------------------------------------
# gradient descent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PgdConfig:
    """Gradient-descent settings; ``step_size=None`` selects ``1/L``.

    ``L`` and ``mu`` are estimated on the sublevel set of ``K0`` when not given.
    """

    step_size: float | None = None
    max_iters: int = 200
    grad_tol: float = 1e-10
    L: float | None = None
    mu: float | None = None
    samples: int = 50
    seed: int = 0


@dataclass(frozen=True)
class PgdTrace:
    gains: list
    costs: np.ndarray
    grad_norms: np.ndarray
    dist_to_Kstar: np.ndarray
    converged: bool
    step_size: float
    L: float
    mu: float
    J_star: float
    empirical_rate: float
    guaranteed_rate: float

    @property
    def iterates(self):
        return list(zip(self.gains, self.costs, self.grad_norms))

    @property
    def iterations(self) -> int:
        return len(self.gains) - 1


def _rate_floor(J_star):
    return 1e-10 * (1.0 + abs(J_star))


def pgd_run(plant: Plant, K0, config: PgdConfig | None = None) -> PgdTrace:
    """Fixed-step gradient descent ``K <- K - alpha grad J(K)`` from a stabilizing ``K0``.

    Every iterate is checked for stability and monotone cost; a violation is
    a hard failure since a valid step size cannot produce one.
    """
    config = PgdConfig() if config is None else config
    care = solve_care(plant)
    K = as_gain(K0, plant)
    J, G = cost_and_gradient(plant, K)  # raises StabilityError for an unstable K0
    J_star = cost(plant, care.K_star)

    L = config.L
    if L is None:
        L = estimate_smoothness(plant, J, count=config.samples, seed=config.seed, care=care)
    alpha = 1.0 / L if config.step_size is None else float(config.step_size)
    if not 0 < alpha < 2.0 / L:
        raise ValueError(f"step size {alpha!r} outside (0, 2/L) with L={L!r}")
    mu = config.mu
    if mu is None:
        if J > J_star * (1 + 1e-12) + 1e-15:
            mu = pl_constant(plant, J, count=config.samples, seed=config.seed, care=care).mu
        else:
            mu = 0.0
    gamma = 1.0 - mu * alpha * (2.0 - L * alpha)

    gains, costs, norms = [K], [J], [np.linalg.norm(G)]
    for it in range(config.max_iters):
        if norms[-1] <= config.grad_tol:
            break
        K_next = K - alpha * G
        try:
            J_next, G_next = cost_and_gradient(plant, K_next)
        except StabilityError as exc:
            raise StabilityError(
                f"iterate {it + 1} left the stabilizing set (alpha={alpha:.3e}, L={L:.3e})",
                abscissa=exc.abscissa,
            ) from exc
        if J_next > J + 1e-12 * (1.0 + abs(J)):
            raise NumericalError(
                f"cost increased at iterate {it + 1}: {J!r} -> {J_next!r} (alpha={alpha:.3e})"
            )
        K, J, G = K_next, J_next, G_next
        gains.append(K)
        costs.append(J)
        norms.append(np.linalg.norm(G))

    costs = np.array(costs)
    gaps = costs - J_star
    floor = _rate_floor(J_star)
    ratios = [gaps[i + 1] / gaps[i] for i in range(len(gaps) - 1) if gaps[i] > floor]
    return PgdTrace(
        gains=gains,
        costs=costs,
        grad_norms=np.array(norms),
        dist_to_Kstar=np.array([np.linalg.norm(Ki - care.K_star) for Ki in gains]),
        converged=bool(norms[-1] <= config.grad_tol),
        step_size=alpha,
        L=float(L),
        mu=float(mu),
        J_star=J_star,
        empirical_rate=float(max(ratios)) if ratios else 0.0,
        guaranteed_rate=float(gamma),
    )


# ---------------------------------------------------------------------------
# PL constant
# ---------------------------------------------------------------------------


def _commutation(m, n):
    """Permutation ``T`` with ``T vec(Y) = vec(Y')`` for ``Y`` of shape ``m x n``."""
    T = np.zeros((m * n, m * n))
    for i in range(m):
        for j in range(n):
            T[i * n + j, j * m + i] = 1.0
    return T


def operator_norm_Astar_inv_B(plant: Plant, K_star) -> float:
    """Spectral norm of ``Y -> X`` where ``F X + X F' = B Y + Y' B'`` and ``F = A + B K*``.

    Both linear maps are assembled explicitly on column-major vectorizations.
    """
    n, m = plant.n, plant.m
    F = plant.A + plant.B @ as_gain(K_star, plant)
    if not np.any(plant.B):
        return 0.0
    I = np.eye(n)
    A_op = np.kron(I, F) + np.kron(F, I)
    B_op = np.kron(I, plant.B) + np.kron(plant.B, I) @ _commutation(m, n)
    return float(np.linalg.norm(np.linalg.solve(A_op, B_op), 2))


@dataclass(frozen=True)
class PLEstimate:
    nu: float
    J_star: float
    kappa_lo: float
    kappa_hi: float
    op_norm: float
    mu_qg: float
    c_lqr: float
    mu: float
    kappa_closed_form: float | None
    sample_count: int
    seed: int | None
    kappa_lo_vanishing: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def pl_constant(plant: Plant, nu: float, samples=None, *, count: int = 200, seed: int = 0,
                care: RiccatiSolution | None = None) -> PLEstimate:
    """Gradient-dominance constant ``mu = mu_qg * c_lqr**2`` on ``K_nu``.

    The Gramian eigenvalue extremes ``kappa_lo``, ``kappa_hi`` are taken over
    the samples together with ``K*``. Pass ``samples`` to use a fixed set
    (for instance an exact grid); otherwise ``count`` gains are drawn.
    """
    care = solve_care(plant) if care is None else care
    J_star = cost(plant, care.K_star)
    vanishing = False
    if samples is None:
        drawn = sample_sublevel(plant, nu, count, seed, care=care)
        vanishing = drawn.kappa_lo_vanishing
        samples = drawn.gains
    else:
        seed = None
    points = [care.K_star] + [as_gain(K, plant) for K in samples]
    eigs = [np.linalg.eigvalsh(closed_loop_gramian(plant, K).X) for K in points]
    kappa_lo = float(min(e[0] for e in eigs))
    kappa_hi = float(max(e[-1] for e in eigs))

    lam_R = float(np.linalg.eigvalsh(plant.R)[0])
    op = operator_norm_Astar_inv_B(plant, care.K_star)
    mu_qg = lam_R / kappa_hi if op == 0 else min(lam_R / kappa_hi, lam_R / (kappa_hi * op**2))
    gap = max(nu - J_star, 0.0)
    c = (kappa_lo * np.sqrt(plant.n) / 2.0) / (1.0 + np.sqrt(gap / (kappa_lo * lam_R)))

    kappa_cf = None
    if is_pd(plant.Q) and is_pd(plant.W):
        lq = np.linalg.eigvalsh(plant.Q)[0]
        lw = np.linalg.eigvalsh(plant.W)[0]
        s = np.linalg.norm(plant.A, 2) / np.sqrt(lq) + np.linalg.norm(plant.B, 2) / np.sqrt(lam_R)
        kappa_cf = float(lw**2 / 4.0 / s**2)

    return PLEstimate(
        nu=float(nu),
        J_star=J_star,
        kappa_lo=kappa_lo,
        kappa_hi=kappa_hi,
        op_norm=op,
        mu_qg=float(mu_qg),
        c_lqr=float(c),
        mu=float(mu_qg * c**2),
        kappa_closed_form=kappa_cf,
        sample_count=len(samples),
        seed=seed,
        kappa_lo_vanishing=vanishing,
    )


@dataclass(frozen=True)
class CheckReport:
    """Per-sample outcome of an inequality check; ``ratio > 1`` is a violation."""

    violations: int
    worst_ratio: float
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"violations": self.violations, "worst_ratio": self.worst_ratio}


_VIOLATION_RTOL = 1e-6


def pl_check(plant: Plant, nu: float, mu: float, samples,
             care: RiccatiSolution | None = None) -> CheckReport:
    """Check ``mu (J - J*) <= ||grad J||_F^2 / 2`` on each sample.

    Rows are ``(sample_id, J, grad_norm_sq, ratio)``.
    """
    care = solve_care(plant) if care is None else care
    J_star = cost(plant, care.K_star)

    def row(item):
        i, K = item
        J, G = cost_and_gradient(plant, K)
        g2 = float(np.sum(G * G))
        gap = J - J_star
        if gap <= 1e-12 * (1.0 + abs(J_star)):
            ratio = 0.0
        else:
            ratio = mu * gap / (0.5 * g2) if g2 > 0 else np.inf
        return (i, J, g2, float(ratio))

    rows = _map(row, enumerate(samples))
    worst = max((r[3] for r in rows), default=0.0)
    return CheckReport(
        violations=sum(r[3] > 1 + _VIOLATION_RTOL for r in rows), worst_ratio=worst, rows=rows
    )


# ---------------------------------------------------------------------------
# convex lift
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ECLPoint:
    K: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    gamma: float
    fcvx: float


def _check_lift_pd(X):
    eigs = np.linalg.eigvalsh(0.5 * (X + X.T))
    if eigs[0] <= get_tolerances().lift_singular * max(1.0, eigs[-1]):
        raise SingularLiftError(
            f"Gramian is singular (lambda_min={eigs[0]:.3e}); the lift is undefined"
        )


def _star_weight(plant, K_star):
    return plant.Q + K_star.T @ plant.R @ K_star


def lifted_constraint_residual(plant: Plant, Y, X, K_star) -> float:
    """Frobenius residual of ``(A + B K*) X + B Y + X (A + B K*)' + Y' B' + W = 0``."""
    F = plant.A + plant.B @ K_star
    BY = plant.B @ Y
    return float(np.linalg.norm(F @ X + X @ F.T + BY + BY.T + plant.W))


def f_cvx_eval(plant: Plant, Y, X, K_star) -> float:
    """``tr(Q* X + X^{-1} Y' R Y + K*' R Y + Y' R K*)`` with ``Q* = Q + K*' R K*``."""
    K_star = as_gain(K_star, plant)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = as_gain(Y, plant)
    _check_lift_pd(X)
    res = lifted_constraint_residual(plant, Y, X, K_star)
    if res > 1e-8 * (1.0 + np.linalg.norm(X)):
        warnings.warn(f"lifted point violates the affine constraint (residual {res:.3e})",
                      stacklevel=2)
    R = plant.R
    # tr(Y' R Y X^{-1}) = tr(R V' V) with V = L^{-1} Y', X = L L'; avoids forming X^{-1}
    V = sla.solve_triangular(np.linalg.cholesky(X), Y.T, lower=True)
    return float(
        np.trace(_star_weight(plant, K_star) @ X)
        + np.trace(R @ V.T @ V)
        + 2.0 * np.trace(K_star.T @ R @ Y)
    )


def f_cvx_grad(plant: Plant, Y, X, K_star):
    """Gradient of ``f_cvx`` as the pair ``(d/dY, d/dX)``."""
    K_star = as_gain(K_star, plant)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = as_gain(Y, plant)
    _check_lift_pd(X)
    Xi = np.linalg.inv(X)
    R = plant.R
    gY = 2.0 * R @ Y @ Xi + 2.0 * R @ K_star
    gX = _star_weight(plant, K_star) - Xi @ Y.T @ R @ Y @ Xi
    return gY, 0.5 * (gX + gX.T)


def ecl_forward(plant: Plant, K, K_star) -> ECLPoint:
    K_star = as_gain(K_star, plant)
    g = closed_loop_gramian(plant, K)
    _check_lift_pd(g.X)
    Y = (g.K - K_star) @ g.X
    J = float(np.trace((plant.Q + g.K.T @ plant.R @ g.K) @ g.X))
    return ECLPoint(K=g.K, X=g.X, Y=Y, gamma=J, fcvx=f_cvx_eval(plant, Y, g.X, K_star))


def ecl_inverse(Y, X, K_star):
    """``K = Y X^{-1} + K*``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_lift_pd(X)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    return sla.cho_solve(sla.cho_factor(X), Y.T).T + np.atleast_2d(K_star)


def quadratic_growth_check(plant: Plant, nu: float, samples, mu_qg: float | None = None,
                           care: RiccatiSolution | None = None) -> CheckReport:
    """Check ``f_cvx - f* >= (mu_qg/2)(||Y||^2 + ||X - X*||^2)`` on lifted samples.

    Rows are ``(sample_id, gap, distance_sq, ratio)`` with ratio = bound / gap.
    """
    care = solve_care(plant) if care is None else care
    K_star = care.K_star
    if mu_qg is None:
        mu_qg = pl_constant(plant, nu, samples, care=care).mu_qg
    X_star = closed_loop_gramian(plant, K_star).X
    f_star = f_cvx_eval(plant, np.zeros_like(K_star), X_star, K_star)
    tol = 1e-9 * (1.0 + abs(f_star))

    def row(item):
        i, K = item
        p = ecl_forward(plant, K, K_star)
        d2 = float(np.sum(p.Y**2) + np.sum((p.X - X_star) ** 2))
        gap = p.fcvx - f_star
        bound = 0.5 * mu_qg * d2
        if bound <= tol:
            ratio = 0.0
        else:
            ratio = bound / max(gap + tol, 1e-300)
        return (i, gap, d2, float(ratio))

    rows = _map(row, enumerate(samples))
    worst = max((r[3] for r in rows), default=0.0)
    return CheckReport(violations=sum(r[3] > 1.0 for r in rows), worst_ratio=worst, rows=rows)


@dataclass(frozen=True)
class CauchyDirection:
    g_c: tuple
    norm: float
    lower_bound: float | None


def _flatten(parts):
    if isinstance(parts, (tuple, list)):
        return np.concatenate([np.ravel(np.asarray(p, dtype=float)) for p in parts])
    return np.ravel(np.asarray(parts, dtype=float))


def _unflatten(vec, like):
    if not isinstance(like, (tuple, list)):
        return np.asarray(vec).reshape(np.shape(like))
    out, k = [], 0
    for p in like:
        size = np.size(p)
        out.append(np.asarray(vec[k:k + size]).reshape(np.shape(p)))
        k += size
    return tuple(out)


def cauchy_direction(grad_at_zeta, zeta, zeta_star, gap: float | None = None) -> CauchyDirection:
    """Projection of the gradient onto the unit direction from ``zeta*`` to ``zeta``.

    Arguments may be arrays or tuples of arrays (one per block). With ``gap``
    given as ``h(zeta) - h(zeta*)`` the bound ``gap / ||zeta - zeta*||`` is
    also returned.
    """
    g = _flatten(grad_at_zeta)
    d = _flatten(zeta) - _flatten(zeta_star)
    dist = np.linalg.norm(d)
    if dist == 0.0:
        return CauchyDirection(g_c=_unflatten(np.zeros_like(g), grad_at_zeta), norm=0.0,
                               lower_bound=0.0 if gap is not None else None)
    u = d / dist
    s = float(g @ u)
    return CauchyDirection(
        g_c=_unflatten(s * u, grad_at_zeta),
        norm=abs(s),
        lower_bound=None if gap is None else float(gap / dist),
    )


def cauchy_bridge_check(plant: Plant, nu: float, samples, c_lqr: float | None = None,
                        care: RiccatiSolution | None = None) -> CheckReport:
    """Check ``2 c_lqr ||g_c|| <= ||grad J(K)||_F`` with ``g_c`` taken on ``f_cvx``.

    Rows are ``(sample_id, lhs, rhs, ratio)``.
    """
    care = solve_care(plant) if care is None else care
    K_star = care.K_star
    if c_lqr is None:
        c_lqr = pl_constant(plant, nu, samples, care=care).c_lqr
    X_star = closed_loop_gramian(plant, K_star).X
    zeta_star = (np.zeros_like(K_star), X_star)

    def row(item):
        i, K = item
        p = ecl_forward(plant, K, K_star)
        cd = cauchy_direction(f_cvx_grad(plant, p.Y, p.X, K_star), (p.Y, p.X), zeta_star)
        _, G = cost_and_gradient(plant, K)
        lhs = 2.0 * c_lqr * cd.norm
        rhs = float(np.linalg.norm(G))
        if lhs <= 1e-12:
            ratio = 0.0
        else:
            ratio = lhs / rhs if rhs > 0 else np.inf
        return (i, lhs, rhs, float(ratio))

    rows = _map(row, enumerate(samples))
    worst = max((r[3] for r in rows), default=0.0)
    return CheckReport(
        violations=sum(r[3] > 1 + _VIOLATION_RTOL for r in rows), worst_ratio=worst, rows=rows
    )


# ---------------------------------------------------------------------------
# slices
# ---------------------------------------------------------------------------


def _slice_gain(b, k):
    return np.array([[k, -b - k]])


def hessian_slice(plant: Plant, b: float, k: float, h: float = 1e-4) -> float:
    """``d^2/dk^2 J([k, -b-k])`` by a Richardson-extrapolated central difference.

    The step is ``h * max(1, |k|)``: far out on the slice the curvature is
    tiny and an absolute step of 1e-4 would be dominated by roundoff in ``J``.
    """
    step = h * max(1.0, abs(k))
    return float(_second_difference(lambda t: cost(plant, _slice_gain(b, k + t)), step))


def slice_minimizer(plant: Plant, b: float, half_width: float = 5.0) -> float:
    """Minimizer of ``k -> J([k, -b-k])`` on ``[-b/2 - w, -b/2 + w]`` (bounded Brent)."""
    lo, hi = -b / 2 - half_width, -b / 2 + half_width
    res = minimize_scalar(lambda k: _safe_cost(plant, _slice_gain(b, k)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-10})
    return float(res.x)


def landscape_grid(plant: Plant, k1_values, k2_values=None, *, b: float | None = None):
    """Cost table over a gain grid, row-major, with NaN where the gain is unstable.

    For ``m x n = 1`` pass only ``k1_values``. For a 2-d gain either pass both
    axes, or pass ``b`` to walk the slice ``K = [k, -b-k]``. Rows are
    ``(k1, k2, J)`` with ``k2`` NaN in the scalar case.
    """
    k1_values = np.asarray(k1_values, dtype=float)
    if k2_values is None and b is None:
        pts = [(k, np.nan, np.array([[k]])) for k in k1_values]
    elif b is not None:
        pts = [(k, -b - k, _slice_gain(b, k)) for k in k1_values]
    else:
        pts = [(k1, k2, np.array([[k1, k2]])) for k1 in k1_values for k2 in k2_values]

    def value(p):
        K = p[2].reshape(plant.m, plant.n)
        if spectral_abscissa(plant.A + plant.B @ K) >= -get_tolerances().stab:
            return np.nan
        return cost(plant, K)

    Js = _map(value, pts)
    return [(float(k1), float(k2), float(J)) for (k1, k2, _), J in zip(pts, Js)]
