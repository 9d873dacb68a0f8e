"""Acceptance criteria, one function per criterion.

Each ``criterion_N`` returns ``(passed, detail)``. Under pytest every
criterion is a separate test and the session summary prints one PASS/FAIL
line per criterion; run this file directly for the same table without pytest.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg as sla

sys.path.insert(0, str(Path(__file__).parent))

from conftest import fd_gradient, perturbed_gain, suite_plant  # noqa: E402
from lqr_landscape.duality import certify, duality_gap, lmi_matrix  # noqa: E402
from lqr_landscape.errors import SingularLiftError  # noqa: E402
from lqr_landscape.gramian import (  # noqa: E402
    optimality_sandwich,
    simulate_closed_loop,
    v_sdp_membership,
)
from lqr_landscape.landscape import (  # noqa: E402
    PgdConfig,
    cauchy_bridge_check,
    ecl_forward,
    ecl_inverse,
    f_cvx_eval,
    hessian_slice,
    pgd_run,
    pl_check,
    pl_constant,
    quadratic_growth_check,
    sample_sublevel,
    slice_minimizer,
)
from lqr_landscape.lti_model import spectral_abscissa  # noqa: E402
from lqr_landscape.lyap_riccati import (  # noqa: E402
    closed_loop_gramian,
    cost,
    cost_and_gradient,
    newton_kleinman,
    solve_care,
    solve_lyapunov,
)
from lqr_landscape.registry import (  # noqa: E402
    example_3_1,
    example_4_3,
    example_5_1,
    single_integrator,
)

SEEDS = range(100)
RESULTS = {}


def _interval(lo=0.5, hi=2.0, count=301):
    return [np.array([[-k]]) for k in np.linspace(lo, hi, count)]


def _ranks(M, rtol):
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0


def criterion_1():
    plant = single_integrator().plant
    cost_err = max(abs(cost(plant, -k) - (k + 1 / k)) for k in (0.5, 1.0, 2.0, 4.0))
    care = solve_care(plant)
    care_err = max(abs(care.P_star[0, 0] - 2.0), abs(care.K_star[0, 0] + 1.0))
    g = duality_gap(plant)
    gap_err = max(abs(g.p_star - 2.0), abs(g.d_star - 2.0), abs(g.gap))
    ok = cost_err <= 1e-10 and care_err <= 1e-12 and gap_err <= 1e-10
    return ok, f"cost err {cost_err:.1e}, CARE err {care_err:.1e}, gap err {gap_err:.1e}"


def criterion_2():
    plant = single_integrator().plant

    def ratio(k):
        J, G = cost_and_gradient(plant, -k)
        return (J - 2.0) / float(np.sum(G**2))

    growth = ratio(1e3) / ratio(10.0)
    return growth > 100, f"ratio(1e3) / ratio(10) = {growth:.4g}"


def criterion_3():
    plant = example_3_1(0.1).plant
    ks = (-1.0, -2.0, -5.0)
    J_err = max(abs(cost(plant, [[k, k]]) - 1 / 1.1) for k in ks)
    Xs = [closed_loop_gramian(plant, [[k, k]]).X for k in ks]
    X_err = max(np.abs(X - Xs[0]).max() for X in Xs)
    K = solve_care(plant).K_star
    K_err = abs(K[0, 0] - K[0, 1])
    ok = max(J_err, X_err, K_err) <= 1e-8
    return ok, f"J err {J_err:.1e}, X spread {X_err:.1e}, K* entry diff {K_err:.1e}"


def criterion_4():
    bad = []
    worst = [0.0, 0.0]
    for s in SEEDS:
        plant = suite_plant(s)
        n, m = plant.n, plant.m
        b = certify(plant)
        P, Z = b.dual.P, b.primal.Z
        J = cost(plant, b.K_star)
        strong = abs(J - np.sum(plant.W * P))
        M = lmi_matrix(plant, P)
        slack = abs(np.sum(Z * M))
        rank_sum = _ranks(M, 1e-7) + _ranks(Z, 1e-7)
        worst[0] = max(worst[0], strong / (1 + J))
        worst[1] = max(worst[1], slack / (1 + np.linalg.norm(Z) * np.linalg.norm(M)))
        if (strong > 1e-7 * (1 + J)
                or slack > 1e-7 * (1 + np.linalg.norm(Z) * np.linalg.norm(M))
                or rank_sum != n + m):
            bad.append(s)
    return not bad, (f"{100 - len(bad)}/100 certified, worst relative gap {worst[0]:.1e},"
                     f" slackness {worst[1]:.1e}, exceptions {bad}")


def criterion_5():
    worst = 0.0
    for s in SEEDS:
        plant = suite_plant(s)
        K_star = solve_care(plant).K_star
        rng = np.random.default_rng(1000 + s)
        for scale in (0.2, 0.5, 1.0):
            K = perturbed_gain(plant, K_star, rng, scale)
            _, G = cost_and_gradient(plant, K)
            fd = fd_gradient(lambda Kp: cost(plant, Kp), K, h=1e-5)
            worst = max(worst, np.linalg.norm(G - fd) / np.linalg.norm(fd))
    return worst <= 1e-5, f"300 gains, worst relative error {worst:.2e}"


def criterion_6():
    plant = example_4_3(0.1).plant
    care = solve_care(plant)
    nu = 2 * cost(plant, care.K_star)
    samples = sample_sublevel(plant, nu, 500, seed=0, care=care)
    est = pl_constant(plant, nu, samples.gains, care=care)
    reps = (pl_check(plant, nu, est.mu, samples, care=care),
            quadratic_growth_check(plant, nu, samples, est.mu_qg, care=care),
            cauchy_bridge_check(plant, nu, samples, est.c_lqr, care=care))
    v = [r.violations for r in reps]
    return sum(v) == 0, (f"mu = {est.mu:.4g}, violations pl/qg/cauchy = {v},"
                         f" worst ratios {[round(r.worst_ratio, 4) for r in reps]}")


def criterion_7():
    e = pl_constant(single_integrator().plant, 2.5, _interval())
    want = {"kappa_lo": 0.5, "kappa_hi": 2.0, "op_norm": 1.0, "mu_qg": 0.5,
            "c_lqr": 0.125, "mu": 0.0078125}
    err = {k: abs(getattr(e, k) - v) for k, v in want.items()}
    return max(err.values()) <= 1e-9, f"max error {max(err.values()):.1e}"


def criterion_8():
    plant = single_integrator().plant
    care = solve_care(plant)
    J_star = cost(plant, care.K_star)
    mu = pl_constant(plant, 2.5, _interval(), care=care).mu
    tr = pgd_run(plant, -0.5, PgdConfig(mu=mu))
    gamma = 1 - mu / tr.L
    costs = np.asarray(tr.costs)
    stable = all(spectral_abscissa(plant.A + plant.B @ K) < 0 for K in tr.gains)
    monotone = bool(np.all(np.diff(costs) <= 1e-12 * (1 + costs[:-1])))
    gaps = costs - J_star
    live = gaps[:-1] > 1e-10 * (1 + J_star)
    rates = gaps[1:][live] / gaps[:-1][live]
    dist = float(np.abs(tr.gains[-1] - care.K_star).max())
    ok = (abs(tr.step_size - 1 / tr.L) <= 1e-15 and dist <= 1e-6 and tr.iterations <= 200
          and stable and monotone and bool(np.all(rates <= gamma)))
    return ok, (f"L = {tr.L:.4g}, {tr.iterations} iterations, |K-K*| = {dist:.1e},"
                f" max step rate {rates.max():.4f} <= gamma {gamma:.6f}")


def criterion_9():
    plant = example_3_1(0.1).plant
    bs = (1, 10, 100, 1000)
    mins = [slice_minimizer(plant, b) for b in bs]
    vals = [hessian_slice(plant, b, k) for b, k in zip(bs, mins)]
    formula = [5 * (304 + 84 * b) / (11 * (10 * b * b + 29 * b + 18)) for b in bs]
    ok = all(x > y for x, y in zip(vals, vals[1:])) and vals[-1] < 0.01
    return ok, (f"curvatures {[float(f'{v:.4g}') for v in vals]};"
                f" diagnostic rational formula {[float(f'{v:.4g}') for v in formula]}")


def criterion_10():
    inst = example_5_1()
    tr = simulate_closed_loop(inst.plant, -1.0, inst.x0, T=40.0, dt=0.01)
    g_err = float(np.abs(tr.gramian - 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]])).max())
    worst_gap, outside = 0.0, []
    for s in SEEDS:
        plant = suite_plant(s)
        x0 = np.random.default_rng(2000 + s).standard_normal(plant.n)
        x0 /= np.linalg.norm(x0)
        sw = optimality_sandwich(plant, x0)
        worst_gap = max(worst_gap, sw.gap / (1 + sw.J1))
        traj = simulate_closed_loop(plant, solve_care(plant).K_star, x0)
        mem = v_sdp_membership(traj.total_gramian, plant, x0, tol=max(1e-6, traj.tail_bound))
        if not mem.in_V_sdp:
            outside.append(s)
    ok = g_err <= 1e-6 and worst_gap <= 1e-8 and not outside
    return ok, (f"example-5-1 Gramian err {g_err:.1e}, worst sandwich gap {worst_gap:.1e},"
                f" V_sdp failures {outside}")


def _lift_points():
    pts = []
    si = single_integrator().plant
    for k in np.linspace(0.3, 5.0, 100):
        pts.append((si, np.array([[-1.0]]), np.array([[-k]])))
    ex = example_4_3(0.1).plant
    K_star = solve_care(ex).K_star
    rng = np.random.default_rng(3000)
    for _ in range(100):
        pts.append((ex, K_star, perturbed_gain(ex, K_star, rng, rng.uniform(0.05, 1.0))))
    for s in SEEDS:
        plant = suite_plant(s)
        K_star = solve_care(plant).K_star
        pts.append((plant, K_star, perturbed_gain(plant, K_star, np.random.default_rng(4000 + s))))
    return pts


def criterion_11():
    rt, val = 0.0, 0.0
    for plant, K_star, K in _lift_points():
        p = ecl_forward(plant, K, K_star)
        rt = max(rt, float(np.abs(ecl_inverse(p.Y, p.X, K_star) - K).max()))
        val = max(val, abs(f_cvx_eval(plant, p.Y, p.X, K_star) - cost(plant, K)))
    plant = example_3_1(0.1).plant
    try:
        ecl_forward(plant, [[-1.0, -1.0]], solve_care(plant).K_star)
        singular = False
    except SingularLiftError:
        singular = True
    ok = rt <= 1e-12 and val <= 1e-9 and singular
    return ok, (f"300 points, round trip {rt:.1e}, f_cvx vs J {val:.1e},"
                f" singular lift raised {singular}")


def criterion_12():
    worst = 0.0
    for s in SEEDS:
        plant = suite_plant(s)
        K_star = solve_care(plant).K_star
        K = perturbed_gain(plant, K_star, np.random.default_rng(5000 + s))
        X = closed_loop_gramian(plant, K).X
        D = K - K_star
        worst = max(worst, abs(cost(plant, K) - cost(plant, K_star) - np.trace(D.T @ plant.R @ D @ X)))
    return worst <= 1e-8, f"worst identity error {worst:.1e}"


def _kronecker_lyapunov(F, S):
    n = F.shape[0]
    lu = sla.lu_factor(np.kron(np.eye(n), F) + np.kron(F, np.eye(n)))
    X = sla.lu_solve(lu, -S.reshape(-1, order="F")).reshape(n, n, order="F")
    # one refinement step removes the oracle's own roundoff on ill-conditioned systems
    R = F @ X + X @ F.T + S
    return X - sla.lu_solve(lu, R.reshape(-1, order="F")).reshape(n, n, order="F")


def criterion_13():
    lyap, care_gap = 0.0, 0.0
    for s in SEEDS:
        plant = suite_plant(s)
        care = solve_care(plant)
        F = plant.A + plant.B @ care.K_star
        lyap = max(lyap, float(np.abs(solve_lyapunov(F, plant.W) - _kronecker_lyapunov(F, plant.W)).max()))
        P_nk = newton_kleinman(plant)
        care_gap = max(care_gap, float(np.linalg.norm(care.P_star - P_nk)))
    ok = lyap <= 1e-10 and care_gap <= 1e-8
    return ok, f"Lyapunov vs Kronecker {lyap:.1e}, Schur vs Newton-Kleinman {care_gap:.1e}"


CRITERIA = [globals()[f"criterion_{i}"] for i in range(1, 14)]


@pytest.mark.parametrize("fn", CRITERIA, ids=[f.__name__ for f in CRITERIA])
def test_criterion(fn):
    try:
        ok, detail = fn()
    except Exception as exc:
        RESULTS[fn.__name__] = (False, f"{type(exc).__name__}: {exc}")
        raise
    RESULTS[fn.__name__] = (ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for fn in CRITERIA:
        ok, detail = fn()
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {fn.__name__:<12}  {detail}")
    sys.exit(1 if failures else 0)
