"""Command-line surface.

Subcommands: sample, traverse, ell, separations, largedev, converge, render.
Exit codes: 0 success, 2 validation error, 3 runtime/compute error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import classes, ell, experiments, geodesic, grid, largedev
from .errors import ValidationError


def _parse_vector(text: str, label: str = "vector") -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise ValidationError(f"cannot parse {label} {text!r}: {exc}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusobs",
        description="Random checkerboards and geodesic occupation times on the d-torus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a random checkerboard")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("traverse", help="traverse a geodesic over a board's grid")
    p.add_argument("--board", required=True)
    p.add_argument("--origin", required=True, help="x,y[,z]")
    p.add_argument("--dir", required=True, help="x,y[,z]")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ell", help="estimate the occupation infimum")
    p.add_argument("--board", required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--dense", action="store_true")
    p.add_argument("--steps", type=int, default=128)
    p.add_argument("--angles", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("separations", help="enumerate line-separable bipartitions")
    p.add_argument("--points", required=True)
    p.add_argument("--bruteforce", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("largedev", help="weighted Bernoulli tail experiment")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--exact", action="store_true")

    p = sub.add_parser("converge", help="run the convergence-in-probability study")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("render", help="render a board (and geodesics) as SVG")
    p.add_argument("--board", required=True)
    p.add_argument("--geodesic", action="append", default=[], help="x,y,dx,dy")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--out", required=True)

    return parser


def _cmd_sample(args) -> None:
    g = grid.make_grid(args.d, args.n)
    cb = grid.sample_checkerboard(g, args.eps, args.seed)
    grid.write_board(cb, args.out)


def _cmd_traverse(args) -> None:
    cb = grid.read_board(args.board)
    g = geodesic.make_geodesic(_parse_vector(args.origin, "origin"), _parse_vector(args.dir, "direction"))
    tr = geodesic.traverse(g, cb.grid, args.T)
    out = Path(args.out)
    out.write_text(geodesic.segments_to_csv(tr), encoding="ascii")
    crossings_path = out.with_name(out.stem + ".crossings.csv")
    crossings_path.write_text(geodesic.crossings_to_csv(tr), encoding="ascii")


def _cmd_ell(args) -> None:
    cb = grid.read_board(args.board)
    if args.dense:
        est = ell.dense_sweep(cb, args.T, steps_origin=args.steps, steps_angle=args.angles)
    else:
        est = ell.estimate_ell(cb, args.T, seed=args.seed)
    Path(args.out).write_text(est.to_json() + "\n", encoding="ascii")


def _cmd_separations(args) -> None:
    points = classes.parse_points_csv(Path(args.points).read_text(encoding="ascii"))
    if args.bruteforce:
        family = classes.separations_bruteforce(points)
    else:
        family = classes.enumerate_separations(points)
    lines = classes.family_to_lines(family)
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="ascii")


def _cmd_largedev(args) -> None:
    spec = largedev.WeightedSumSpec.uniform(args.m, args.eps, c=args.c)
    est = largedev.tail_probability(spec, args.delta, args.trials, args.seed)
    exact = f"{largedev.tail_exact(spec, args.delta):.17g}" if args.exact else ""
    print("m,c,epsilon,delta,trials,empirical_tail,exact_tail_or_blank,envelope")
    print(
        f"{args.m},{args.c:.17g},{args.eps:.17g},{args.delta:.17g},{args.trials},"
        f"{est.empirical:.17g},{exact},{est.envelope:.17g}"
    )


def _cmd_converge(args) -> None:
    cfg = experiments.ConvergenceConfig.from_json(Path(args.config).read_text(encoding="ascii"))
    report = experiments.run_convergence(cfg, workers=args.workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.csv").write_text(experiments.report_to_csv(report), encoding="ascii")
    (out_dir / "histogram.csv").write_text(
        experiments.histogram_to_csv(report), encoding="ascii"
    )
    sys.stdout.write(experiments.report_to_csv(report))
    total = sum(row.wall_time for row in report.rows)
    print(f"total wall time: {total:.2f} s", file=sys.stderr)


def _cmd_render(args) -> None:
    cb = grid.read_board(args.board)
    rays = []
    for spec in args.geodesic:
        parts = _parse_vector(spec, "geodesic")
        if len(parts) != 4:
            raise ValidationError(f"--geodesic needs x,y,dx,dy, got {spec!r}")
        rays.append(geodesic.make_geodesic(parts[:2], parts[2:]))
    svg = experiments.render_board(cb, rays, args.T)
    Path(args.out).write_text(svg, encoding="ascii")


_COMMANDS = {
    "sample": _cmd_sample,
    "traverse": _cmd_traverse,
    "ell": _cmd_ell,
    "separations": _cmd_separations,
    "largedev": _cmd_largedev,
    "converge": _cmd_converge,
    "render": _cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
