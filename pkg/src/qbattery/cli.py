"""Command-line front end: steady-state sweeps, trajectories, memory scans.

All rates are expressed in units of kappa (fixed to 1 internally) and all
energies in units of omega0 (fixed to 1), matching the natural axes of the
model. Range-valued flags accept ``min:max:n`` (linear), ``log:min:max:n``
(log-spaced) or a single number. Output is CSV with a header row, floats at
17 significant digits and a trailing status column; plotting is external.

Exit codes: 0 success (including non-converged grid points, which are
flagged in the status column), 2 usage error, 3 internal numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .engine import (
    DEFAULT_MAX_COLLISIONS,
    DEFAULT_TOL,
    ModelParams,
    continuous_mode_params,
    run_to_steady,
    trajectory,
)
from .lindblad import DegenerateSteadyStateError
from .nonmarkov import nonmarkovianity, propagate_map
from .opalg import NumericalConsistencyError

MAX_ERGOTROPY = (math.sqrt(2.0) - 1.0) / 2.0  # steady-state ceiling, omega0 units
MIN_P_GRID_STEP = 0.01
ALPHA_OPT_RELATIVE_TOL = 1e-4
ALPHA_OPT_BRACKET = (0.25, 4.0)  # in units of g


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def parse_range(text: str) -> list[float]:
    """Parse ``min:max:n``, ``log:min:max:n`` or a single value."""
    try:
        parts = text.split(":")
        if parts[0] == "log":
            if len(parts) != 4:
                raise ValueError
            lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
            if n < 1 or lo <= 0 or hi <= 0:
                raise ValueError
            return list(np.geomspace(lo, hi, n))
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ValueError
            return list(np.linspace(lo, hi, n))
        raise ValueError
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(
            f"expected NUMBER, MIN:MAX:N or log:MIN:MAX:N, got {text!r}") from None


def parse_alpha(text: str):
    if text == "opt":
        return "opt"
    return parse_range(text)


def golden_section_max(f, lo: float, hi: float,
                       rel_tol: float = ALPHA_OPT_RELATIVE_TOL) -> tuple[float, float]:
    """Maximize a unimodal function on [lo, hi]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > rel_tol * max(abs(lo) + abs(hi), 1e-30):
        if fc < fd:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
        else:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
    x = 0.5 * (lo + hi)
    return x, max(fc, fd)


def optimal_alpha(g: float, p: float, gamma: float, tol: float,
                  max_collisions: int) -> float:
    """Drive amplitude maximizing steady-state ergotropy at fixed g and p."""
    if g <= 0:
        return 0.0

    def value(alpha: float) -> float:
        params = ModelParams(g=g, alpha=alpha, gamma=gamma, p=p)
        return run_to_steady(params, tol=tol, max_collisions=max_collisions).report.ergotropy

    lo, hi = ALPHA_OPT_BRACKET[0] * g, ALPHA_OPT_BRACKET[1] * g
    return golden_section_max(value, lo, hi)[0]


def _resolve_alpha(alpha_spec, alpha_rel, g: float, p: float, gamma: float,
                   tol: float, max_collisions: int) -> float:
    if alpha_rel is not None:
        return alpha_rel * g
    if alpha_spec == "opt":
        return optimal_alpha(g, p, gamma, tol, max_collisions)
    return alpha_spec


def _steady_task(task: dict) -> dict:
    alpha = _resolve_alpha(task["alpha_spec"], task["alpha_rel"], task["g"],
                           task["p"], task["gamma"], task["tol"],
                           task["max_collisions"])
    if task.get("memory_rate") is not None:
        params = continuous_mode_params(1.0, task["g"], alpha, 1.0,
                                        task["gamma"], task["memory_rate"])
    else:
        params = ModelParams(g=task["g"], alpha=alpha, gamma=task["gamma"],
                             p=task["p"])
    result = run_to_steady(params, tol=task["tol"],
                           max_collisions=task["max_collisions"])
    row = dict(task["axes"])
    row["alpha"] = alpha
    row.update(
        energy=result.report.energy,
        ergotropy=result.report.ergotropy,
        purity=result.report.purity,
        n_collisions=result.n_collisions,
        status="ok" if result.converged else "nonconverged",
    )
    if task.get("measures"):
        for sub, column in (("battery", "nb_battery"), ("joint", "nb_joint")):
            if sub in task["measures"]:
                series = propagate_map(params, sub,
                                       max_collisions=task["map_cap"])
                row[column] = nonmarkovianity(series)
                if not series.converged:
                    row["status"] = "nonconverged"
    return row


def run_grid(tasks: list[dict], workers: int) -> list[dict]:
    """Evaluate grid points, preserving grid order regardless of workers."""
    if workers <= 1:
        return [_steady_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_steady_task, tasks, chunksize=1))


def write_csv(rows: list[dict], columns: list[str], out_path: str | None) -> None:
    handle = open(out_path, "w", newline="") if out_path else sys.stdout
    try:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] if isinstance(row[c], str) else fmt(row[c])
                             for c in columns])
    finally:
        if out_path:
            handle.close()


def _report_nonconverged(rows: list[dict]) -> None:
    bad = sum(1 for r in rows if r["status"] != "ok")
    if bad:
        print(f"warning: {bad} of {len(rows)} grid points did not converge",
              file=sys.stderr)


def _axis_product(axes: list[tuple[str, list[float]]]) -> list[dict]:
    grids = [[(name, v) for v in values] for name, values in axes]
    points = [{}]
    for grid in grids:
        points = [dict(pt, **{name: value}) for pt in points for name, value in grid]
    return points


def _check_axis_count(axes: list[tuple[str, list[float]]], parser) -> None:
    varying = [name for name, values in axes if len(values) > 1]
    if len(varying) > 2:
        parser.error(f"at most 2 axes may vary, got {varying}")


def _build_tasks(args, axes, parser, measures=()) -> list[dict]:
    _check_axis_count(axes, parser)
    if args.alpha is None and args.alpha_rel is None:
        parser.error("one of --alpha or --alpha-rel is required")
    if args.alpha is not None and args.alpha_rel is not None:
        parser.error("--alpha and --alpha-rel are mutually exclusive")
    tasks = []
    for point in _axis_product(axes):
        alpha_spec = args.alpha
        if isinstance(alpha_spec, list):
            alpha_spec = point.pop("alpha")
        axes_out = dict(point)
        task = dict(
            g=point.get("g", 0.0),
            p=point.get("p", 0.0),
            gamma=args.gamma,
            alpha_spec=alpha_spec,
            alpha_rel=args.alpha_rel,
            tol=args.tol,
            max_collisions=args.max_collisions,
            axes=axes_out,
            measures=tuple(measures),
            map_cap=getattr(args, "map_cap", 2_000_000),
        )
        if "memory_rate" in point:
            task["memory_rate"] = point["memory_rate"]
            task["p"] = math.exp(-point["memory_rate"] / args.gamma)
        tasks.append(task)
    return tasks


def _collect_axes(args, names) -> list[tuple[str, list[float]]]:
    axes = []
    for name in names:
        values = getattr(args, name, None)
        if isinstance(values, list):
            axes.append((name, values))
    return axes


def cmd_steady(args, parser) -> int:
    axes = _collect_axes(args, ("p", "g", "alpha"))
    tasks = _build_tasks(args, axes, parser)
    rows = run_grid(tasks, args.workers)
    axis_names = [n for n, v in axes if n != "alpha"]
    columns = axis_names + ["alpha"] + args.outputs + ["status"]
    write_csv(rows, columns, args.out)
    _report_nonconverged(rows)
    return 0


def cmd_continuous(args, parser) -> int:
    axes = _collect_axes(args, ("memory_rate", "g", "alpha"))
    tasks = _build_tasks(args, axes, parser)
    rows = run_grid(tasks, args.workers)
    axis_names = [n for n, v in axes if n != "alpha"]
    columns = axis_names + ["alpha"] + args.outputs + ["status"]
    write_csv(rows, columns, args.out)
    _report_nonconverged(rows)
    return 0


def cmd_nonmarkov(args, parser) -> int:
    measures = {"battery": ("battery",), "joint": ("joint",),
                "both": ("battery", "joint")}[args.subsystem]
    axes = _collect_axes(args, ("p", "g", "alpha"))
    tasks = _build_tasks(args, axes, parser, measures=measures)
    rows = run_grid(tasks, args.workers)
    axis_names = [n for n, v in axes if n != "alpha"]
    nb_cols = [f"nb_{s}" for s in measures]
    columns = axis_names + ["alpha"] + nb_cols + ["ergotropy", "status"]
    write_csv(rows, columns, args.out)
    _report_nonconverged(rows)
    return 0


def minimal_p_for_max_ergotropy(g: float, alpha_rel: float, gamma: float,
                                tol: float, max_collisions: int,
                                grid_step: float = MIN_P_GRID_STEP):
    """Smallest p on the grid {0, step, ...} within 1% of the ergotropy ceiling.

    Falls back to the grid maximizer when no point reaches the target (the
    steady-state ergotropy saturates below the ceiling for large g/kappa).
    Returns (p, ergotropy, target_met).
    """
    target = 0.99 * MAX_ERGOTROPY
    best = (0.0, -1.0)
    for p in np.arange(0.0, 1.0, grid_step):
        params = ModelParams(g=g, alpha=alpha_rel * g, gamma=gamma, p=float(p))
        result = run_to_steady(params, tol=tol, max_collisions=max_collisions)
        value = result.report.ergotropy
        if result.converged and value >= target:
            return float(p), value, True
        if value > best[1]:
            best = (float(p), value)
    return best[0], best[1], False


def cmd_trajectory(args, parser) -> int:
    if args.alpha is None and args.alpha_rel is None:
        parser.error("one of --alpha or --alpha-rel is required")
    g = args.g[0] if isinstance(args.g, list) else args.g
    if args.min_p_for_max:
        if args.alpha_rel is None:
            parser.error("--min-p-for-max requires --alpha-rel")
        p, value, met = minimal_p_for_max_ergotropy(
            g, args.alpha_rel, args.gamma, args.tol, args.max_collisions)
        row = {"g": g, "alpha": args.alpha_rel * g, "p": p, "ergotropy_ss": value,
               "target_met": met, "status": "ok"}
        write_csv([row], ["g", "alpha", "p", "ergotropy_ss", "target_met",
                          "status"], args.out)
        return 0
    alpha = args.alpha_rel * g if args.alpha_rel is not None else args.alpha[0]
    p = args.p[0] if isinstance(args.p, list) else args.p
    params = ModelParams(g=g, alpha=alpha, gamma=args.gamma, p=p)
    traj = trajectory(params, args.n_collisions, args.stride)
    rows = [{"t": traj.t[i], "energy": traj.energy[i],
             "ergotropy": traj.ergotropy[i], "purity": traj.purity[i],
             "bloch_x": traj.bloch_x[i], "bloch_y": traj.bloch_y[i],
             "bloch_z": traj.bloch_z[i], "status": "ok"}
            for i in range(len(traj))]
    write_csv(rows, ["t", "energy", "ergotropy", "purity", "bloch_x",
                     "bloch_y", "bloch_z", "status"], args.out)
    return 0


def cmd_selftest(args, parser) -> int:
    from . import selftest

    return selftest.run()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbattery",
        description="Collision-model simulator for a dissipatively charged "
                    "two-qubit quantum battery (rates in units of kappa, "
                    "energies in units of omega0).")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, gamma_default=100.0):
        p.add_argument("--gamma", type=float, default=gamma_default,
                       help="collision rate (collision duration 1/gamma)")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                       help="steady-state detection tolerance")
        p.add_argument("--max-collisions", type=int,
                       default=DEFAULT_MAX_COLLISIONS)
        p.add_argument("--workers", type=int, default=1,
                       help="parallel grid workers (output order is fixed)")
        p.add_argument("--out", default=None, help="CSV output file (default stdout)")

    def alpha_flags(p):
        p.add_argument("--alpha", type=parse_alpha, default=None,
                       help="drive amplitude: value, range, or 'opt' for a "
                            "golden-section scan maximizing ergotropy")
        p.add_argument("--alpha-rel", type=float, default=None,
                       help="set alpha = ALPHA_REL * g at each grid point")

    ps = sub.add_parser("steady", help="steady-state observables over a grid")
    ps.add_argument("--p", type=parse_range, default=[0.0])
    ps.add_argument("--g", type=parse_range, required=True)
    alpha_flags(ps)
    ps.add_argument("--outputs", default="energy,ergotropy,purity,n_collisions",
                    type=lambda s: s.split(","))
    common(ps)
    ps.set_defaults(func=cmd_steady)

    pt = sub.add_parser("trajectory", help="battery observables vs time")
    pt.add_argument("--p", type=parse_range, default=[0.0])
    pt.add_argument("--g", type=parse_range, required=True)
    alpha_flags(pt)
    pt.add_argument("--n-collisions", type=int, default=10_000)
    pt.add_argument("--stride", type=int, default=1)
    pt.add_argument("--min-p-for-max", action="store_true",
                    help="report the smallest p (0.01 grid) whose steady state "
                         "is within 1%% of the ergotropy ceiling")
    common(pt)
    pt.set_defaults(func=cmd_trajectory)

    pn = sub.add_parser("nonmarkov", help="geometric memory measures over a grid")
    pn.add_argument("--p", type=parse_range, default=[0.0])
    pn.add_argument("--g", type=parse_range, required=True)
    alpha_flags(pn)
    pn.add_argument("--subsystem", choices=("battery", "joint", "both"),
                    default="both")
    pn.add_argument("--map-cap", type=int, default=2_000_000,
                    help="collision cap for the map tomography")
    common(pn)
    pn.set_defaults(func=cmd_nonmarkov)

    pc = sub.add_parser("continuous",
                        help="continuous-memory limit, p = exp(-memory_rate/gamma)")
    pc.add_argument("--memory-rate", dest="memory_rate", type=parse_range,
                    required=True)
    pc.add_argument("--g", type=parse_range, required=True)
    alpha_flags(pc)
    pc.add_argument("--outputs", default="energy,ergotropy,purity,n_collisions",
                    type=lambda s: s.split(","))
    common(pc, gamma_default=1000.0)
    pc.set_defaults(func=cmd_continuous)

    pself = sub.add_parser("selftest", help="run internal consistency checks")
    pself.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (NumericalConsistencyError, DegenerateSteadyStateError,
            FloatingPointError) as exc:
        print(f"numerical consistency failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
