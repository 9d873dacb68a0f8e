"""Command-line front end: ``lqr-landscape <subcommand> [instance] [options]``.

Exit codes: 0 ok, 1 bad input, 2 standing assumptions fail, 3 numerical
failure, 4 a check or certificate did not pass.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .checks import run_checks
from .config import get_tolerances, override
from .duality import certify
from .errors import AssumptionError, LQRError, PlantError
from .gramian import (
    optimality_sandwich,
    simulate_closed_loop,
    trajectory_cost,
    trajectory_gramian_vs_lyapunov,
    v_sdp_membership,
)
from .landscape import (
    PgdConfig,
    cauchy_bridge_check,
    landscape_grid,
    pgd_run,
    pl_check,
    pl_constant,
    quadratic_growth_check,
    sample_sublevel,
)
from .lti_model import random_plant, structural_report
from .lyap_riccati import cost, solve_care
from .registry import BUILTINS, Instance, builtin, load_instance

EXIT_OK, EXIT_INPUT, EXIT_ASSUMPTION, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


class Output:
    """Writes the manifest first, then stamps its hash on every artifact."""

    def __init__(self, out_dir: str, config: dict):
        self.dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        manifest = {"config": config, "version": __version__}
        text = _dumps(manifest)
        self.hash = hashlib.sha256(text.encode("utf-8")).hexdigest()
        self._write("manifest.json", _dumps({**manifest, "manifest_hash": self.hash}))

    def _write(self, name, text):
        with open(os.path.join(self.dir, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    def json(self, name, payload: dict):
        self._write(name, _dumps({"manifest_hash": self.hash, **payload}))

    def csv(self, name, header, rows):
        lines = [f"# manifest_hash={self.hash}", ",".join(header)]
        for row in rows:
            lines.append(",".join("%.12g" % v for v in row))
        self._write(name, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _key_values(text: str) -> dict:
    out = {}
    for tok in text.replace(",", " ").split():
        if "=" not in tok:
            raise InputError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        try:
            out[k] = float(v) if "." in v or "e" in v.lower() else int(v)
        except ValueError:
            raise InputError(f"bad number in {tok!r}") from None
    return out


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"expected a list of numbers, got {text!r}") from None


def _resolve_instance(args) -> Instance:
    name = args.builtin or args.name
    if args.instance and name:
        raise InputError("give either --instance or a builtin name, not both")
    if args.instance:
        return load_instance(args.instance)
    if not name:
        raise InputError(f"no instance given; builtins: {', '.join(sorted(BUILTINS))}")
    return builtin(name, a=args.a)


def _add_common(p, instance=True):
    if instance:
        p.add_argument("name", nargs="?", help="builtin instance name")
        p.add_argument("--instance", metavar="PATH", help="JSON instance file")
        p.add_argument("--builtin", metavar="NAME", help="builtin instance name")
        p.add_argument("--a", type=float, default=None, help="coupling parameter of the examples")
    p.add_argument("--out", default="lqr_out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None, help="override check tolerances")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lqr-landscape", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="Riccati solution and optimal gain")
    _add_common(p)

    p = sub.add_parser("certify", help="strong-duality certificate")
    _add_common(p)
    p.add_argument("--random", metavar="SPEC", help="random suite, e.g. 'n=4 m=2 seeds=100'")

    p = sub.add_parser("landscape", help="cost over a gain grid or slice")
    _add_common(p)
    p.add_argument("--slice", metavar="b=B", help="walk K = [k, -b-k]")
    p.add_argument("--range", default=None, help="k range 'lo,hi'")
    p.add_argument("--points", type=int, default=201)

    p = sub.add_parser("pgd", help="policy gradient descent trace")
    _add_common(p)
    p.add_argument("--k0", required=True, help="initial gain entries, row-major")
    p.add_argument("--step", type=float, default=None, help="step size (default 1/L)")
    p.add_argument("--max-iters", type=int, default=200)

    p = sub.add_parser("pl", help="gradient-dominance constant and checks")
    _add_common(p)
    p.add_argument("--nu-mult", type=float, default=2.0, help="sublevel value as a multiple of J*")
    p.add_argument("--samples", type=int, default=500)

    p = sub.add_parser("gramian", help="trajectory Gramian and optimality sandwich")
    _add_common(p)
    p.add_argument("--x0", default=None, help="initial state entries")
    p.add_argument("--k", default=None, help="gain entries (default K*)")
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)

    p = sub.add_parser("examples", help="run the built-in example checks")
    _add_common(p, instance=False)
    p.add_argument("--only", choices=["solve", "duality", "landscape", "gramian"], default=None)
    return parser


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "out"}
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_solve(args, out: Output, inst: Instance) -> int:
    care = solve_care(inst.plant)
    report = {
        "instance": inst.to_dict(),
        "K_star": care.K_star,
        "P_star": care.P_star,
        "J_star": cost(inst.plant, care.K_star),
        "are_residual": care.are_residual,
        "closed_loop_abscissa": care.closed_loop_abscissa,
        "structure": structural_report(inst.plant, inst.B1).to_dict(),
    }
    out.json("solve.json", report)
    print(f"J* = {report['J_star']:.12g}")
    print(f"K* = {np.array2string(care.K_star, precision=10)}")
    print(f"P* = {np.array2string(care.P_star, precision=10)}")
    return EXIT_OK


def cmd_certify(args, out: Output, inst: Instance | None) -> int:
    if args.random:
        spec = _key_values(args.random)
        n, m, seeds = int(spec.get("n", 4)), int(spec.get("m", 2)), int(spec.get("seeds", 100))
        bundles = []
        for s in range(seeds):
            b = certify(random_plant(n, m, args.seed + s))
            bundles.append({"seed": args.seed + s, **b.to_dict()})
        passed = sum(b["ok"] for b in bundles)
        out.json("certify.json", {"bundles": bundles, "passed": passed, "total": seeds})
        print(f"{passed}/{seeds} certificates pass")
        return EXIT_OK if passed == seeds else EXIT_CHECK
    b = certify(inst.plant)
    out.json("certify.json", {"instance": inst.to_dict(), **b.to_dict()})
    c = b.complementarity
    print(f"gap = {b.gap.gap:.3e}  slackness = {c.slackness:.3e}  "
          f"ranks {c.rank_M}+{c.rank_Z}  strict = {c.strict}")
    return EXIT_OK if b.ok else EXIT_CHECK


def cmd_landscape(args, out: Output, inst: Instance) -> int:
    plant = inst.plant
    if args.points < 2:
        raise InputError("--points must be at least 2")
    b = None
    if args.slice:
        b = float(_key_values(args.slice).get("b", 0.0))
    if args.range:
        lo, hi = _floats(args.range)
    elif b is not None:
        lo, hi = -b / 2 - 5.0, -b / 2 + 5.0
    else:
        K_star = solve_care(plant).K_star.ravel()
        lo, hi = float(K_star.min()) - 3.0, float(K_star.max()) + 3.0
    ks = np.linspace(lo, hi, args.points)
    if plant.m * plant.n == 1:
        rows = landscape_grid(plant, ks)
    elif plant.m * plant.n == 2 and b is not None:
        rows = landscape_grid(plant, ks, b=b)
    elif plant.m * plant.n == 2:
        rows = landscape_grid(plant, ks, ks)
    else:
        raise InputError("landscape grids need a gain with one or two entries")
    out.csv("landscape.csv", ["k1", "k2", "J"], rows)
    finite = [r[2] for r in rows if np.isfinite(r[2])]
    summary = {"points": len(rows), "stable_points": len(finite),
               "J_min": min(finite) if finite else None, "slice_b": b, "range": [lo, hi]}
    out.json("landscape.json", summary)
    print(f"{len(finite)}/{len(rows)} stabilizing grid points")
    return EXIT_OK


def cmd_pgd(args, out: Output, inst: Instance) -> int:
    K0 = np.array(_floats(args.k0)).reshape(inst.plant.m, inst.plant.n)
    cfg = PgdConfig(step_size=args.step, max_iters=args.max_iters, seed=args.seed)
    tr = pgd_run(inst.plant, K0, cfg)
    rows = [(i, J, g, d) for i, (J, g, d) in
            enumerate(zip(tr.costs, tr.grad_norms, tr.dist_to_Kstar))]
    out.csv("pgd.csv", ["iter", "J", "grad_norm", "dist_to_Kstar"], rows)
    out.json("pgd.json", {
        "iterations": tr.iterations, "converged": tr.converged, "step_size": tr.step_size,
        "L": tr.L, "mu": tr.mu, "J_star": tr.J_star, "empirical_rate": tr.empirical_rate,
        "guaranteed_rate": tr.guaranteed_rate, "K_final": tr.gains[-1],
    })
    print(f"{tr.iterations} iterations, J = {tr.costs[-1]:.12g}, "
          f"|K-K*| = {tr.dist_to_Kstar[-1]:.3e}")
    ok = tr.empirical_rate <= tr.guaranteed_rate
    return EXIT_OK if ok else EXIT_CHECK


def cmd_pl(args, out: Output, inst: Instance) -> int:
    plant = inst.plant
    care = solve_care(plant)
    nu = args.nu_mult * cost(plant, care.K_star)
    samples = sample_sublevel(plant, nu, args.samples, args.seed, care=care)
    est = pl_constant(plant, nu, samples.gains, care=care)
    pl = pl_check(plant, nu, est.mu, samples, care=care)
    qg = quadratic_growth_check(plant, nu, samples, est.mu_qg, care=care)
    cb = cauchy_bridge_check(plant, nu, samples, est.c_lqr, care=care)
    out.csv("pl.csv", ["sample_id", "J", "grad_norm_sq", "ratio"], pl.rows)
    out.json("pl.json", {
        "estimate": {**est.to_dict(), "seed": args.seed},
        "structure": structural_report(plant, inst.B1).to_dict(),
        "sampling": {"attempts": samples.attempts,
                     "unbounded_directions": samples.unbounded_directions,
                     "kappa_lo_vanishing": samples.kappa_lo_vanishing},
        "pl_check": pl.to_dict(),
        "quadratic_growth": qg.to_dict(),
        "cauchy_bridge": cb.to_dict(),
    })
    v = (pl.violations, qg.violations, cb.violations)
    print(f"mu = {est.mu:.6g}, violations pl/qg/cauchy = {v[0]}/{v[1]}/{v[2]}")
    return EXIT_OK if sum(v) == 0 else EXIT_CHECK


def cmd_gramian(args, out: Output, inst: Instance) -> int:
    plant = inst.plant
    if args.x0 is not None:
        x0 = np.array(_floats(args.x0))
    elif inst.x0 is not None:
        x0 = inst.x0
    else:
        x0 = np.ones(plant.n) / np.sqrt(plant.n)
    K = solve_care(plant).K_star if args.k is None else \
        np.array(_floats(args.k)).reshape(plant.m, plant.n)
    traj = simulate_closed_loop(plant, K, x0, args.T, args.dt)
    tol = max(1e-6, traj.tail_bound)
    mem = v_sdp_membership(traj.total_gramian, plant, x0, tol=tol)
    gap = trajectory_gramian_vs_lyapunov(plant, K, x0, args.T, args.dt)
    sw = optimality_sandwich(plant, x0)
    rows = np.hstack([traj.times[:, None], traj.states, traj.inputs])
    header = ["t"] + [f"x_{i + 1}" for i in range(plant.n)] + [f"u_{j + 1}" for j in range(plant.m)]
    out.csv("trajectory.csv", header, rows)
    out.json("gramian.json", {
        "K": K, "x0": x0, "T": traj.T, "dt": traj.dt,
        "gramian": traj.total_gramian, "tail_bound": traj.tail_bound,
        "trajectory_cost": trajectory_cost(plant, traj),
        "lyapunov_gap": gap.gap, "membership": mem.to_dict(), "sandwich": sw.to_dict(),
    })
    print(f"in V_sdp: {mem.in_V_sdp}, Lyapunov gap {gap.gap:.3e}, "
          f"sandwich J1={sw.J1:.12g} J2={sw.J2:.12g}")
    ok = mem.in_V_sdp and gap.ok and sw.gap <= 1e-8 * (1 + sw.J1)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_examples(args, out: Output) -> int:
    results = run_checks(args.only, args.tol)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    out.json("examples.json", {"results": [r.__dict__ for r in results]})
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "certify": cmd_certify,
    "landscape": cmd_landscape,
    "pgd": cmd_pgd,
    "pl": cmd_pl,
    "gramian": cmd_gramian,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = Output(args.out, _config(args))
        if args.command == "examples":
            return cmd_examples(args, out)
        inst = None
        if not (args.command == "certify" and args.random):
            inst = _resolve_instance(args)
        overrides = {}
        if args.tol is not None and args.command != "examples":
            overrides = {"duality_gap": args.tol, "slackness": args.tol}
        with override(**overrides):
            return COMMANDS[args.command](args, out, inst)
    except (InputError, PlantError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssumptionError as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except LQRError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
