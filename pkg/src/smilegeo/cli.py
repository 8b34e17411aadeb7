"""Command-line interface over surface CSV files.

Subcommands: represent, fit-circle, fit-ellipse, density, curvature,
complete-surface, compare.  Exit codes: 0 on success, 2 on input/parse
errors, 3 on numeric failures (inadmissible shapes, out-of-band prices).
"""
from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .analysis import curvature_profile
from .bsm import DeltaConvention
from .emit import RepresentationScene, TableArtifact, render_csv, render_json, render_svg
from .errors import MissingAnchor, ParseError, SmileGeoError
from .georep import RepresentationConfig, flat_context, represent, represent_anchors
from .shapes import circumcircle, conic_through_5
from .smile import density_from_smile
from .surface import (
    LABELS,
    complete_expiry,
    discrepancy_table,
    label_strike,
    parse_surface,
)

GRID_POINTS_ENV = "SMILEGEO_GRID_POINTS"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smilegeo",
        description="Geometric smile completion, densities, and diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("surface", help="surface CSV file")
    common.add_argument(
        "--radius-scale",
        default="auto",
        help="radial scale R, or 'auto' (default) for the delta-window rule",
    )
    common.add_argument(
        "--grid-points",
        type=int,
        default=int(os.environ.get(GRID_POINTS_ENV, "2001")),
        help=f"points per evaluation grid (default 2001, env {GRID_POINTS_ENV})",
    )
    common.add_argument(
        "--delta-convention",
        choices=["spot-pips", "forward-n"],
        default="spot-pips",
        help="how delta labels are read (default spot-pips)",
    )
    common.add_argument(
        "--method",
        choices=["circle", "ellipse", "vanna-volga"],
        default="circle",
        help="completion method (default circle)",
    )
    common.add_argument(
        "--vv-variant",
        choices=["market", "first"],
        default="market",
        help="vanna-volga flavour (default market)",
    )
    common.add_argument(
        "--output-format", choices=["csv", "json", "svg"], default="csv"
    )
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--expiry", default=None, help="expiry label (default first row)")
    for name in (
        "represent",
        "fit-circle",
        "fit-ellipse",
        "density",
        "curvature",
        "complete-surface",
        "compare",
    ):
        sub.add_parser(name, parents=[common])
    return parser


def _config(args) -> RepresentationConfig:
    if args.radius_scale == "auto":
        return RepresentationConfig()
    try:
        return RepresentationConfig(radius_scale=float(args.radius_scale))
    except ValueError:
        raise ParseError("--radius-scale must be a positive number or 'auto'") from None


def _convention(args) -> DeltaConvention:
    return (
        DeltaConvention.SPOT_PIPS
        if args.delta_convention == "spot-pips"
        else DeltaConvention.FORWARD_N
    )


def _pick_row(rows, args):
    if args.expiry is None:
        return rows[0]
    for row in rows:
        if row.expiry_label == args.expiry:
            return row
    raise ParseError(f"expiry {args.expiry!r} not found in surface")


def _write(artifact, args) -> None:
    fmt = args.output_format
    payload = {"csv": render_csv, "json": render_json, "svg": render_svg}[fmt](artifact)
    if args.out is None:
        sys.stdout.buffer.write(payload)
    else:
        with open(args.out, "wb") as fh:
            fh.write(payload)


def _completed_row(rows, args, method=None):
    row = _pick_row(rows, args)
    return complete_expiry(
        row,
        method or args.method,
        _convention(args),
        _config(args),
        vv_variant=args.vv_variant,
    )


def _representation_points_table(rows, args) -> TableArtifact:
    row = _pick_row(rows, args)
    conv = _convention(args)
    ctx = flat_context(row.market(), row.vols["ATM"], _config(args))
    out = []
    for lab in LABELS:
        if lab not in row.vols:
            continue
        k = label_strike(row, lab, conv)
        vol = row.vols[lab]
        x_coord = math.log(k / ctx.atm_rn) / ctx.radius_scale
        phi = 2.0 * math.atan(x_coord) - 0.5 * math.pi
        rho = ctx.radius_scale + vol
        out.append(
            (lab, k, vol, x_coord, phi, rho, rho * math.cos(phi), rho * math.sin(phi))
        )
    return TableArtifact(
        kind="representation-points",
        columns=("label", "strike", "vol", "X", "angle", "radius", "x", "y"),
        rows=tuple(out),
    )


def _density_grid(completed, n: int) -> np.ndarray:
    ks = sorted(completed.label_strikes.values())
    return np.exp(np.linspace(math.log(ks[0]), math.log(ks[-1]), n))


def _scene(completed) -> RepresentationScene:
    curve = represent(completed.smile, completed.ctx)
    pts = represent_anchors(completed.anchors, completed.ctx)
    circle = None
    if completed.method == "circle":
        circle = circumcircle(pts[0], pts[1], pts[2])
    return RepresentationScene(curve=curve, circle=circle, anchor_points=pts)


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    rows = parse_surface(open(args.surface, "rb").read())
    if not rows:
        raise ParseError("surface file has no data rows")

    if args.command == "represent":
        _write(_representation_points_table(rows, args), args)
    elif args.command in ("fit-circle", "fit-ellipse"):
        method = "circle" if args.command == "fit-circle" else "ellipse"
        completed = _completed_row(rows, args, method=method)
        if args.output_format == "svg":
            _write(_scene(completed), args)
        else:
            if method == "circle":
                pts = represent_anchors(completed.anchors, completed.ctx)
                shape = circumcircle(pts[0], pts[1], pts[2])
                art = TableArtifact(
                    kind="fitted-circle",
                    columns=("cx", "cy", "radius", "atm_rn", "radius_scale"),
                    rows=(
                        (
                            shape.center[0],
                            shape.center[1],
                            shape.radius,
                            completed.ctx.atm_rn,
                            completed.ctx.radius_scale,
                        ),
                    ),
                )
            else:
                pts = represent_anchors(completed.anchors, completed.ctx)
                shape = conic_through_5(pts)
                art = TableArtifact(
                    kind="fitted-ellipse",
                    columns=("A", "B", "C", "D", "E", "F", "atm_rn", "radius_scale"),
                    rows=(
                        shape.coefficients
                        + (completed.ctx.atm_rn, completed.ctx.radius_scale),
                    ),
                )
            _write(art, args)
    elif args.command == "density":
        completed = _completed_row(rows, args)
        grid = _density_grid(completed, args.grid_points)
        _write(density_from_smile(completed.smile, grid), args)
    elif args.command == "curvature":
        completed = _completed_row(rows, args, method="circle")
        curve = represent(
            completed.smile, completed.ctx, completed.smile.default_grid(args.grid_points)
        )
        pts = represent_anchors(completed.anchors, completed.ctx)
        profile = curvature_profile(curve, circle=circumcircle(pts[0], pts[1], pts[2]))
        _write(profile, args)
    elif args.command == "complete-surface":
        conv = _convention(args)
        out_rows = []
        for row in rows:
            completed = complete_expiry(
                row, args.method, conv, _config(args), vv_variant=args.vv_variant
            )
            vols = tuple(
                float(completed.smile.vol(completed.label_strikes[lab]))
                if lab in completed.label_strikes
                else None
                for lab in LABELS
            )
            out_rows.append((row.expiry_label,) + vols)
        _write(
            TableArtifact(
                kind=f"completed-{args.method}",
                columns=("expiry",) + LABELS,
                rows=tuple(out_rows),
            ),
            args,
        )
    elif args.command == "compare":
        table = discrepancy_table(
            rows, args.method, _convention(args), _config(args), vv_variant=args.vv_variant
        )
        _write(table, args)
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except (ParseError, MissingAnchor) as exc:
        print(f"smilegeo: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"smilegeo: {exc}", file=sys.stderr)
        return 2
    except SmileGeoError as exc:
        print(f"smilegeo: {exc}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
