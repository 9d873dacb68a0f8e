"""Named pass/fail checks over the built-in instances.

Each check returns a :class:`CheckResult`. Checks carry a group tag so a
subset can be run, and a default tolerance that a caller may replace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .duality import certify
from .errors import LQRError, SingularLiftError
from .gramian import optimality_sandwich, simulate_closed_loop, v_sdp_membership
from .landscape import (
    PgdConfig,
    cauchy_bridge_check,
    ecl_forward,
    hessian_slice,
    pgd_run,
    pl_check,
    pl_constant,
    quadratic_growth_check,
    sample_sublevel,
    slice_minimizer,
)
from .lyap_riccati import closed_loop_gramian, cost, cost_and_gradient, solve_care
from .registry import example_3_1, example_4_3, example_5_1, single_integrator


@dataclass(frozen=True)
class CheckResult:
    name: str
    group: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class Check:
    name: str
    group: str
    tol: float
    fn: Callable[[float], tuple]

    def run(self, tol: float | None = None) -> CheckResult:
        t = self.tol if tol is None else tol
        try:
            ok, detail = self.fn(t)
        except LQRError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        return CheckResult(self.name, self.group, bool(ok), detail)


def _interval(lo, hi, count=301):
    return [np.array([[-k]]) for k in np.linspace(lo, hi, count)]


def _solve_single_integrator(tol):
    care = solve_care(single_integrator().plant)
    err = max(abs(care.P_star[0, 0] - 2.0), abs(care.K_star[0, 0] + 1.0))
    return err <= tol, f"P*={care.P_star[0, 0]:.15g} K*={care.K_star[0, 0]:.15g}"


def _cost_closed_form(tol):
    plant = single_integrator().plant
    err = max(abs(cost(plant, -k) - (k + 1 / k)) for k in (0.5, 1.0, 2.0, 4.0))
    return err <= tol, f"max error {err:.3e}"


def _nonunique_optima(tol):
    plant = example_3_1(0.1).plant
    Js = [cost(plant, [[k, k]]) for k in (-1.0, -2.0, -5.0)]
    Xs = [closed_loop_gramian(plant, [[k, k]]).X for k in (-1.0, -2.0, -5.0)]
    K = solve_care(plant).K_star
    err = max(max(abs(J - 1 / 1.1) for J in Js), max(np.abs(X - Xs[0]).max() for X in Xs),
              abs(K[0, 0] - K[0, 1]))
    return err <= tol, f"J={Js[0]:.12g} K*={K.ravel().round(10).tolist()} max error {err:.3e}"


def _singular_lift(_tol):
    plant = example_3_1(0.1).plant
    try:
        ecl_forward(plant, [[-1.0, -1.0]], solve_care(plant).K_star)
    except SingularLiftError:
        return True, "SingularLiftError raised"
    return False, "lift accepted a singular Gramian"


def _certify_single_integrator(tol):
    b = certify(single_integrator().plant)
    ok = abs(b.gap.gap) <= tol and b.complementarity.strict
    return ok, f"gap={b.gap.gap:.3e} strict={b.complementarity.strict}"


def _certify_example_3_1(tol):
    b = certify(example_3_1(0.1).plant)
    return abs(b.gap.gap) <= tol, f"gap={b.gap.gap:.3e}"


def _pl_closed_forms(tol):
    e = pl_constant(single_integrator().plant, 2.5, _interval(0.5, 2.0))
    want = {"kappa_lo": 0.5, "kappa_hi": 2.0, "op_norm": 1.0, "mu_qg": 0.5, "c_lqr": 0.125,
            "mu": 0.0078125}
    err = max(abs(getattr(e, k) - v) for k, v in want.items())
    return err <= tol, f"mu={e.mu:.12g} c_lqr={e.c_lqr:.12g} max error {err:.3e}"


def _pl_fails_globally(_tol):
    plant = single_integrator().plant

    def ratio(k):
        J, G = cost_and_gradient(plant, -k)
        return (J - 2.0) / float(np.sum(G**2))

    growth = ratio(1000.0) / ratio(10.0)
    return growth > 100, f"ratio growth {growth:.4g}"


def _pgd_single_integrator(tol):
    plant = single_integrator().plant
    mu = pl_constant(plant, 2.5, _interval(0.5, 2.0)).mu
    tr = pgd_run(plant, -0.5, PgdConfig(mu=mu))
    dist = tr.dist_to_Kstar[-1]
    monotone = bool(np.all(np.diff(tr.costs) <= 1e-12 * (1 + tr.costs[:-1])))
    ok = dist <= tol and monotone and tr.empirical_rate <= tr.guaranteed_rate
    return ok, (f"{tr.iterations} iterations, |K-K*|={dist:.3e}, rate {tr.empirical_rate:.4f}"
                f" <= {tr.guaranteed_rate:.6f}")


def _flattening(tol):
    plant = example_3_1(0.1).plant
    vals = [hessian_slice(plant, b, slice_minimizer(plant, b)) for b in (1, 10, 100, 1000)]
    ref = 5 * (304 + 84) / (11 * (10 + 29 + 18))
    ok = all(x > y for x, y in zip(vals, vals[1:])) and vals[-1] < 0.01
    return ok, f"curvatures {[float(f'{v:.6g}') for v in vals]}; rational formula at b=1: {ref:.6g}"


def _gradient_dominance_example_4_3(tol):
    inst = example_4_3(0.1)
    plant = inst.plant
    care = solve_care(plant)
    nu = 2 * cost(plant, care.K_star)
    samples = sample_sublevel(plant, nu, 500, seed=0, care=care)
    est = pl_constant(plant, nu, samples.gains, care=care)
    reports = (
        pl_check(plant, nu, est.mu, samples, care=care),
        quadratic_growth_check(plant, nu, samples, est.mu_qg, care=care),
        cauchy_bridge_check(plant, nu, samples, est.c_lqr, care=care),
    )
    v = [r.violations for r in reports]
    return sum(v) == 0, f"violations pl/qg/cauchy = {v}, mu={est.mu:.4g}"


def _trajectory_gramian(tol):
    inst = example_5_1()
    tr = simulate_closed_loop(inst.plant, -1.0, inst.x0, T=40.0, dt=0.01)
    err = np.abs(tr.gramian - np.array([[0.5, -0.5], [-0.5, 0.5]])).max()
    return err <= tol, f"max error {err:.3e}"


def _v_sdp_element(tol):
    inst = example_5_1()
    mem = v_sdp_membership([[1.0, -0.5], [-0.5, 0.5]], inst.plant, inst.x0, tol=tol)
    return mem.in_V_sdp, f"residual {mem.sdp_residual:.3e}, min eig {mem.psd_min_eig:.4g}"


def _sandwich(tol):
    s = optimality_sandwich(single_integrator().plant, [1.0])
    return s.gap <= tol * (1 + s.J1) and abs(s.J1 - 2.0) <= tol, f"J1={s.J1:.12g} J2={s.J2:.12g}"


CHECKS = [
    Check("single-integrator Riccati solution", "solve", 1e-12, _solve_single_integrator),
    Check("single-integrator cost k + 1/k", "solve", 1e-10, _cost_closed_form),
    Check("example-3-1 non-unique optima", "solve", 1e-8, _nonunique_optima),
    Check("single-integrator strong duality", "duality", 1e-10, _certify_single_integrator),
    Check("example-3-1 strong duality", "duality", 1e-8, _certify_example_3_1),
    Check("single-integrator PL constants", "landscape", 1e-9, _pl_closed_forms),
    Check("single-integrator no global PL", "landscape", 0.0, _pl_fails_globally),
    Check("single-integrator gradient descent", "landscape", 1e-6, _pgd_single_integrator),
    Check("example-3-1 flattening curvature", "landscape", 0.0, _flattening),
    Check("example-3-1 singular lift", "landscape", 0.0, _singular_lift),
    Check("example-4-3 gradient dominance", "landscape", 0.0, _gradient_dominance_example_4_3),
    Check("example-5-1 trajectory Gramian", "gramian", 1e-6, _trajectory_gramian),
    Check("example-5-1 SDP outer set element", "gramian", 1e-9, _v_sdp_element),
    Check("single-integrator optimality sandwich", "gramian", 1e-8, _sandwich),
]


def run_checks(only: str | None = None, tol: float | None = None) -> list[CheckResult]:
    selected = [c for c in CHECKS if only is None or c.group == only]
    return [c.run(tol) for c in selected]
