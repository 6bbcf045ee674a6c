"""Command-line interface: ``annulus-euler <subcommand> [options]``.

Exit codes: 0 success (or all verdicts pass), 1 the run finished but a
verdict failed, 2 usage or configuration error. Every subcommand accepts
``--config FILE`` with flat ``key = value`` lines; flags on the command line
win over the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as aio
from .exceptions import AnnulusError, CFLViolation, ConstraintViolation, ValidationError

log = logging.getLogger("annulus_euler")

TWO_PI = 2.0 * np.pi
FIELD_PRESETS = ("uniform", "radial", "mode", "gaussian", "xi")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_grid(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 64x256, got {text!r}") from None


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; keys use ``-`` or ``_``."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _field_from_args(args):
    from .geometry import ScalarField, make_grid

    if args.input:
        return aio.read_field_csv(args.input)
    g = make_grid(*args.grid)
    p = args.preset
    if p == "uniform":
        return ScalarField.from_function(g, lambda R, TH: np.ones_like(R))
    if p == "radial":
        return ScalarField.from_function(g, lambda R, TH: np.cos(np.pi * R))
    if p == "mode":
        return ScalarField.from_function(g, lambda R, TH: np.sin(np.pi * (R - 1)) ** 2 * np.cos(TH))
    if p == "gaussian":
        return ScalarField.from_function(
            g, lambda R, TH: np.exp(-((R * np.cos(TH) - 1.5) ** 2 + (R * np.sin(TH)) ** 2) / 0.02)
        )
    from .recurrence_lab import XiSpec, build_xi

    return build_xi(XiSpec(args.amplitude / 2.5 if args.amplitude else 0.1), g)


def _add_field_args(p, default_preset="xi"):
    p.add_argument("--input", help="ScalarField CSV (r,theta,value); overrides --preset")
    p.add_argument("--preset", choices=FIELD_PRESETS, default=default_preset, help="built-in initial field")
    p.add_argument("--grid", type=parse_grid, default=(64, 256), help="n_r x n_theta (default 64x256)")
    p.add_argument("--amplitude", type=float, default=None, help="amplitude of the xi preset (default 0.25)")


def _print_json(obj):
    sys.stdout.write(aio.dumps_json(obj))


# --- subcommands -----------------------------------------------------------


def cmd_solve_velocity(args) -> int:
    from .biot_savart import VelocityReconstructor

    omega = _field_from_args(args)
    if args.points:
        rows = np.loadtxt(args.points, delimiter=",", skiprows=1, ndmin=2)
        pts = rows[:, :2]
    else:
        pts = omega.grid.nodes
    est = VelocityReconstructor(sigma1=args.sigma1, n_jobs=args.jobs).fit(omega)
    samples = est.decompose(pts)
    header = ("x", "y", "vhat_x", "vhat_y", "vtilde_x", "vtilde_y", "gphi_x", "gphi_y", "total_x", "total_y")
    aio.write_csv(args.out, header, samples.as_table())
    if args.density_out:
        d = est.density_
        rows = [(1, float(t), float(f)) for t, f in zip(d.quad1.theta, d.f1)]
        rows += [(2, float(t), float(f)) for t, f in zip(d.quad2.theta, d.f2)]
        aio.write_csv(args.density_out, ("circle", "theta", "f"), rows)
    _print_json(
        {
            "points": int(pts.shape[0]),
            "sigma1": args.sigma1,
            "neumann_residual": est.neumann_residual_,
            "sup_v": float(np.max(np.hypot(*samples.v.T))),
            "out": str(args.out),
        }
    )
    return 0


def cmd_simulate(args) -> int:
    from .euler_sim import SimConfig, conservation_report, run

    omega = _field_from_args(args)
    cfg = SimConfig(
        omega.grid.n_r, omega.grid.n_theta, dt=args.dt, t_end=args.t_end, sigma1=args.sigma1,
        output_interval=args.output_interval, monotone=args.monotone, range_limit=args.range_limit,
    )
    snaps = run(cfg, omega)
    out = Path(args.out_dir)
    for k, s in enumerate(snaps):
        aio.write_field_csv(out / f"snapshot_{k:05d}.csv", s.omega)
        aio.write_json(out / f"snapshot_{k:05d}.json", s.to_json_dict())
    report = {"params": cfg.as_dict(), "snapshots": len(snaps)}
    if len(snaps) >= 2:
        report["conservation"] = conservation_report(snaps)
    aio.write_json(out / "run.json", report)
    _print_json(report)
    return 0


def cmd_track_line(args) -> int:
    from .geometry import make_grid
    from .lagrangian import MaterialLine, RotationVelocity, advect_line, winding_separation

    line = MaterialLine.segment(args.threshold, args.max_markers)
    rows = []

    def emit(t):
        for idx, x, y, th in line.to_table():
            rows.append((float(t), int(idx), x, y, th))

    emit(0.0)
    summary = []
    if args.flow == "rotation":
        u = RotationVelocity(args.sigma1)
        n_out = int(round(args.t_end / args.output_interval))
        t = 0.0
        for k in range(1, n_out + 1):
            t1 = min(args.t_end, k * args.output_interval)
            advect_line(line, u, t, t1, args.dt)
            t = t1
            emit(t)
            summary.append({"t": t, "winding": winding_separation(line), "n_markers": len(line)})
    else:
        from .euler_sim import EulerSimulator, SimConfig
        from .lagrangian import GridVelocitySeries

        omega = _field_from_args(args)
        g = omega.grid
        cfg = SimConfig(g.n_r, g.n_theta, dt=args.dt, t_end=args.t_end, sigma1=args.sigma1,
                        output_interval=args.output_interval)
        sim = EulerSimulator(cfg)
        state = sim.initial_state(omega)
        sup = GridVelocitySeries(make_grid(g.n_r, g.n_theta), args.sigma1)
        sup.append(state.t, state.velocity)
        every = cfg.steps_per_output
        for k, new in sim.iterate(state):
            sup.append(new.t, new.velocity)
            line.step(sup, state.t, new.t - state.t)
            state = new
            if k % every == 0 or k == cfg.n_steps:
                line.refine()
                emit(state.t)
                summary.append({"t": state.t, "winding": winding_separation(line), "n_markers": len(line)})
    aio.write_csv(args.out, ("t", "marker_index", "x", "y", "theta_unwrapped"), rows)
    _print_json({"flow": args.flow, "sigma1": args.sigma1, "final": summary[-1] if summary else None})
    return 0


def cmd_nonrecurrence(args) -> int:
    from .euler_sim import SimConfig
    from .geometry import make_grid
    from .recurrence_lab import XiSpec, nonrecurrence_experiment, random_perturbation

    cfg = SimConfig(*args.grid, dt=args.dt, t_end=args.t_end, output_interval=args.output_interval,
                    monotone=args.monotone, range_limit=args.range_limit)
    pert = None
    if args.perturbation > 0:
        pert = random_perturbation(make_grid(*args.grid), args.perturbation * args.epsilon, args.seed)
    spec = XiSpec(args.epsilon, args.amplitude, args.plateau, args.support)
    report = nonrecurrence_experiment(
        args.epsilon, pert, cfg, xi_spec=spec, negative_control=args.negative_control,
        line_threshold=args.line_threshold, marker_cap=args.marker_cap, track_patch=args.track_patch,
        svg_dir=args.svg_dir,
    )
    report.params["seed"] = args.seed
    report.params["perturbation_fraction"] = args.perturbation
    report.write(args.out)
    if args.series_csv:
        keys = ("t", "c1_distance", "winding", "sup_v", "enstrophy", "energy", "intersects_mminus", "n_markers")
        aio.write_csv(args.series_csv, keys, ([r[k] for k in keys] for r in report.series))
    if args.line_out and report.final_line is not None:
        t = report.series[-1]["t"]
        aio.write_csv(args.line_out, ("t", "marker_index", "x", "y", "theta_unwrapped"),
                      ((t, int(i), x, y, th) for i, x, y, th in report.final_line.to_table()))
    _print_json({"verdicts": report.verdicts, "warnings": report.warnings, "out": str(args.out)})
    return 0 if report.passed else 1


def cmd_pendulum(args) -> int:
    from .pendulum import (
        PendulumState, classify_orbit, energy_drift, final_state, phase_portrait, recurrence_time, trajectory,
    )

    s0 = PendulumState(args.x0, args.y0)
    summary = {
        "x0": args.x0, "y0": args.y0, "dt": args.dt, "t_max": args.t_max,
        "energy": float(s0.energy), "orbit": classify_orbit(s0).value,
    }
    if args.out:
        traj = trajectory(s0, args.dt, args.t_max, args.stride)
        h = 0.5 * traj[:, 2] ** 2 - np.cos(traj[:, 1])
        aio.write_csv(args.out, ("t", "x", "y", "H"), np.column_stack([traj, h]))
    end = final_state(s0, args.dt, args.t_max)
    summary["x_final"] = end.x
    summary["y_final"] = end.y
    summary["energy_drift"] = energy_drift(s0, args.dt, args.t_max)
    if args.recurrence:
        t = recurrence_time(s0, args.delta, args.t_max, dt=args.dt, metric=args.metric)
        summary["recurrence"] = "not_found" if t is None else t
        summary["delta"] = args.delta
        summary["metric"] = args.metric
    if args.portrait:
        from .svg import line_plot_svg

        curves = {}
        for k, tr in enumerate(phase_portrait()):
            x = np.mod(tr[:, 1] + np.pi, 2 * np.pi) - np.pi
            # break the polyline where x wraps
            jumps = np.flatnonzero(np.abs(np.diff(x)) > np.pi) + 1
            for j, (xs, ys) in enumerate(zip(np.split(x, jumps), np.split(tr[:, 2], jumps))):
                if xs.size > 1:
                    curves[f"orbit {k}.{j}"] = (xs, ys)
        svg = line_plot_svg(curves, "x (mod 2 pi)", "y", "pendulum phase portrait")
        svg = svg.replace('font-size="12" fill=', 'font-size="0" fill=')  # legend off: too many curves
        aio.atomic_write_text(args.portrait, svg)
    _print_json(summary)
    return 0


def cmd_recurrence_demo(args) -> int:
    from .measure_recurrence import (
        FiniteSystem, an_set_check, brute_force_return_times, parse_subset, recurrence_statistics,
    )

    sys_ = FiniteSystem.random(args.n, args.seed)
    E = parse_subset(args.set)
    stats = recurrence_statistics(sys_, E)
    brute = brute_force_return_times(sys_, E)
    cyc_len = {x: len(c) for c in sys_.cycles() for x in c}
    rows = [(x, stats[x], brute[x], cyc_len[x]) for x in sorted(stats)]
    aio.write_csv(args.out, ("point", "return_time", "brute_force", "cycle_length"), rows)
    rep = an_set_check(sys_, E, args.n_max)
    ok = rep.ok and stats == brute and all(v <= args.n for v in stats.values())
    _print_json(
        {
            "n": args.n, "seed": args.seed, "set_size": len(E),
            "max_return_time": max(stats.values()),
            "matches_brute_force": stats == brute,
            "measures": sorted({str(m) for m in rep.measures}),
            "an_check": rep.ok,
        }
    )
    return 0 if ok else 1


def read_torus_csv(path):
    from .besov import TorusField

    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape[1] != 3:
        raise ValidationError(f"{path}: expected columns i1,i2,value")
    n = int(round(np.sqrt(rows.shape[0])))
    vals = np.full((n, n), np.nan)
    vals[rows[:, 0].astype(int), rows[:, 1].astype(int)] = rows[:, 2]
    return TorusField(n, vals)


def cmd_besov_norm(args) -> int:
    from .besov import embedding_check, random_trig_polynomial

    w = read_torus_csv(args.input) if args.input else random_trig_polynomial(args.n, args.seed)
    rep = embedding_check(w, args.s, args.eps)
    d = rep.to_json_dict()
    d["n"] = w.n
    if args.out:
        aio.write_json(args.out, d)
    _print_json(d)
    return 0


def cmd_convergence_study(args) -> int:
    from .convergence import bound_study, self_convergence, transport_study, velocity_error

    grids = [parse_grid(g) for g in args.grids.split(",")]
    report = {"grids": [f"{a}x{b}" for a, b in grids]}
    studies = {"velocity", "bound", "transport"} if args.study == "all" else {args.study}
    if "velocity" in studies:
        report["velocity"] = {
            k: [{"grid": f"{a}x{b}", "max_rel_error": velocity_error(a, b, k)} for a, b in grids]
            for k in ("uniform", "quadratic", "cosine")
        }
        report["velocity"]["mode_self_convergence"] = self_convergence(grids)
    if "bound" in studies:
        ratios = bound_study(grids, args.n_fields, args.seed)
        report["bound"] = {g: {"min": min(v), "max": max(v)} for g, v in ratios.items()}
        report["bound_ratios"] = ratios
    if "transport" in studies:
        report["transport"] = transport_study(grids, args.t_end, args.dt)
    if args.svg and "velocity" in studies:
        from .svg import line_plot_svg

        h = [1.0 / (a - 1) for a, _ in grids]
        curves = {k: (np.log10(h), [r["max_rel_error"] for r in report["velocity"][k]]) for k in ("uniform", "quadratic", "cosine")}
        aio.atomic_write_text(args.svg, line_plot_svg(curves, "log10 dr", "max rel error", "velocity convergence", log_y=True))
    aio.write_json(args.out, report)
    _print_json(report)
    return 0


# --- parser ----------------------------------------------------------------


def _add_limiter_args(p):
    p.add_argument("--monotone", action=argparse.BooleanOptionalAction, default=False,
                   help="clip foot values to the enclosing cell range")
    p.add_argument("--range-limit", action=argparse.BooleanOptionalAction, default=True,
                   help="clip foot values to the current vorticity range (default on)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="annulus-euler", description=__doc__.split("\n")[0])
    ap.add_argument("--log-level", default="WARNING", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="flat key = value file; command-line flags take precedence")
        p.set_defaults(func=func)
        return p

    p = add("solve-velocity", cmd_solve_velocity, "reconstruct u = vhat + vtilde + grad phi from a vorticity field")
    _add_field_args(p, "mode")
    p.add_argument("--sigma1", type=float, default=0.0, help="circulation on the inner circle")
    p.add_argument("--points", help="CSV with x,y columns (default: all grid nodes)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for the direct sum")
    p.add_argument("--out", default="velocity.csv")
    p.add_argument("--density-out", help="write the boundary density as circle,theta,f")

    p = add("simulate", cmd_simulate, "integrate the vorticity equation and write snapshots")
    _add_field_args(p)
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--sigma1", type=float, default=TWO_PI)
    p.add_argument("--output-interval", type=float, default=0.1)
    _add_limiter_args(p)
    p.add_argument("--out-dir", default="snapshots")

    p = add("track-line", cmd_track_line, "advect the ray {x2 = 0, 1 <= x1 <= 2} and record it")
    _add_field_args(p)
    p.add_argument("--flow", choices=("rotation", "coupled"), default="rotation")
    p.add_argument("--sigma1", type=float, default=TWO_PI)
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--t-end", type=float, default=8 * np.pi / 3)
    p.add_argument("--output-interval", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=0.02, help="maximum gap between markers")
    p.add_argument("--max-markers", type=int, default=10**6)
    p.add_argument("--out", default="line.csv")

    p = add("nonrecurrence", cmd_nonrecurrence, "run the non-recurrence experiment and write a verdict report")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--grid", type=parse_grid, default=(64, 256))
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--t-end", type=float, default=25.1)
    p.add_argument("--output-interval", type=float, default=0.1)
    p.add_argument("--amplitude", type=float, default=None, help="xi value on the ray (default 2.5 epsilon)")
    p.add_argument("--plateau", type=float, default=0.1)
    p.add_argument("--support", type=float, default=1.5)
    p.add_argument("--perturbation", type=float, default=0.0, help="C1 size of a seeded perturbation, as a fraction of epsilon")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negative-control", action="store_true", help="set sigma1 = 0")
    p.add_argument("--line-threshold", type=float, default=0.02)
    p.add_argument("--marker-cap", type=int, default=10**6)
    p.add_argument("--track-patch", action="store_true", help="also advect a test patch to t = 10")
    _add_limiter_args(p)
    p.add_argument("--out", default="report.json")
    p.add_argument("--series-csv", help="also write the series as CSV")
    p.add_argument("--line-out", help="final material line CSV")
    p.add_argument("--svg-dir", help="write annulus snapshots with the line overlaid")

    p = add("pendulum", cmd_pendulum, "integrate the pendulum and test recurrence")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--y0", type=float, default=0.5)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--stride", type=int, default=10, help="write every k-th step")
    p.add_argument("--out", help="trajectory CSV t,x,y,H")
    p.add_argument("--recurrence", action="store_true")
    p.add_argument("--delta", type=float, default=1e-2)
    p.add_argument("--metric", choices=("wrapped", "unwrapped"), default="wrapped")
    p.add_argument("--portrait", help="phase portrait SVG path")

    p = add("recurrence-demo", cmd_recurrence_demo, "return times on a seeded random permutation")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--set", default="0..99", help="e.g. 0..99 or 1,4,9")
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--out", default="stats.csv")

    p = add("besov-norm", cmd_besov_norm, "Besov and Sobolev norms of a torus field")
    p.add_argument("--input", help="CSV i1,i2,value on an n x n grid (n a power of two)")
    p.add_argument("--n", type=int, default=64, help="size of the seeded random field when --input is absent")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--out")

    p = add("convergence-study", cmd_convergence_study, "grid-refinement studies")
    p.add_argument("--study", choices=("velocity", "bound", "transport", "all"), default="velocity")
    p.add_argument("--grids", default="16x64,32x128,64x256")
    p.add_argument("--n-fields", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-end", type=float, default=2.0)
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--out", default="convergence.json")
    p.add_argument("--svg")
    return ap


def _apply_config(parser, argv):
    """Re-parse with values from ``--config`` as defaults of the chosen subparser."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    cfg = read_config(args.config)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[args.command]
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for k, v in cfg.items():
        if k not in known or k in ("help", "config"):
            raise UsageError(f"{args.config}: unknown key {k!r} for {args.command}")
        act = known[k]
        if isinstance(act, (argparse._StoreTrueAction, argparse.BooleanOptionalAction)):
            defaults[k] = v.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            try:
                defaults[k] = act.type(v)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{args.config}: bad value for {k}: {exc}") from None
        else:
            defaults[k] = v
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ConstraintViolation, CFLViolation, UsageError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except AnnulusError as exc:
        # the run started but broke down numerically
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
