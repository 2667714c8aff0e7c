"""Command-line surface: transforms, sky images, causal queries, verification.

Exit codes: 0 on success, 1 on a domain or verification failure, 2 on a
usage or configuration error.  All randomness is seeded; reports with the
same configuration and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import causality as ca
from . import frames as fr
from . import manifold as mf
from . import verify as vf
from . import errors, minkowski, sky, spinor
from .minkowski import GraphFrame

USAGE_ERROR, DOMAIN_ERROR = 2, 1


def _parse_vec(text, length=4):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != length:
        raise ValueError(f"expected {length} components, got {len(parts)}")
    return np.array([float(p) for p in parts])


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _setting(args, cfg, key, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    return cfg.get(key, default)


def _metric_from(args, cfg):
    merged = dict(cfg)
    for key in ("metric", "p", "a_expr"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key if key != "metric" else "kind"] = val
    merged.setdefault("kind", "minkowski")
    return mf.metric_from_config(merged)


def _target_from(args, cfg):
    text = _setting(args, cfg, "target", "singularity")
    if text == "singularity":
        return fr.Singularity()
    if text.startswith("cauchy"):
        _, _, t0 = text.partition(":")
        return fr.CauchySurface(float(t0 or 0.0))
    raise ValueError(f"unknown target {text!r}")


def _frame_spec(args, cfg):
    metric = _metric_from(args, cfg)
    if metric.kind == "minkowski" and _setting(args, cfg, "target") is None:
        target = fr.CauchySurface(0.0)
    else:
        target = _target_from(args, cfg)
    step = _setting(args, cfg, "step")
    extra = {} if step is None else {"step": float(step)}
    return fr.FrameSpec(metric=metric, target=target, **extra)


def _write_json(path, payload):
    text = json.dumps(payload, sort_keys=True, indent=2)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def cmd_pauli(args, cfg):
    vec = _parse_vec(args.vec)
    h = spinor.pauli_transform(vec)
    norm = float(spinor.minkowski_norm(vec))
    print("matrix:")
    for row in h:
        print("  [" + ", ".join(f"{z.real:+.12g}{z.imag:+.12g}j" for z in row) + "]")
    print(f"norm: {norm:.12g}")
    if args.factor:
        psi = spinor.factor_null(vec)
        print(f"spinor: [{psi[0]:.12g}, {psi[1]:.12g}]")
    return 0


def cmd_sky_image(args, cfg):
    n = int(_setting(args, cfg, "n", 500))
    seed = _setting(args, cfg, "seed")
    sample = sky.sample_sky(n, seed=seed)
    event = _parse_vec(args.event)
    fmt = _setting(args, cfg, "format", "json")
    out = _setting(args, cfg, "out")

    if _setting(args, cfg, "frame", "geodesic") == "graph":
        metric = _metric_from(args, cfg)
        if metric.kind != "minkowski":
            raise ValueError("the graph frame is defined over the flat metric")
        image = minkowski.sky_image_minkowski(event, sample)
        payload = image.to_json_dict()
        heights = image.heights
        print(
            f"samples: {sample.n}  height range: "
            f"[{heights.min():.6g}, {heights.max():.6g}]"
        )
        if fmt == "csv":
            _graph_csv(out or "sky_image.csv", image)
        else:
            _write_json(out, payload)
        return 0

    spec = _frame_spec(args, cfg)
    image = fr.sky_image(spec, event, sample)
    regular = float(np.mean(image.regular_mask))
    pts = image.m_points[image.ok_mask]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    print(
        f"samples: {sample.n}  regular fraction: {regular:.3f}  bounding box: "
        f"[{lo[0]:.6g}, {lo[1]:.6g}, {lo[2]:.6g}] .. [{hi[0]:.6g}, {hi[1]:.6g}, {hi[2]:.6g}]"
    )
    if fmt == "csv":
        image.write_csv(out or "sky_image.csv")
    else:
        _write_json(out, image.to_json_dict())
    return 0


def _graph_csv(path, image):
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["d1", "d2", "d3", "height"])
        for d, h in zip(image.sample.directions(), image.heights):
            writer.writerow([repr(float(c)) for c in d] + [repr(float(h))])


def cmd_causal(args, cfg):
    x = _parse_vec(args.x)
    y = _parse_vec(args.y)
    metric = _metric_from(args, cfg)
    if metric.kind == "minkowski" and _setting(args, cfg, "frame") == "graph":
        order = minkowski.causal_compare(x, y)
        print(order.value)
        return 0
    spec = _frame_spec(args, cfg)
    ball_x = ca.analytic_region(spec, x)
    ball_y = ca.analytic_region(spec, y)
    y_past = ca.in_causal_past(spec, y, x)
    x_past = ca.in_causal_past(spec, x, y)
    if y_past and x_past:
        verdict = "equal"
    elif y_past:
        verdict = "y_past_of_x"
    elif x_past:
        verdict = "x_past_of_y"
    else:
        verdict = "spacelike"
    print(verdict)
    if ball_x is not None and ball_y is not None:
        gap = float(np.linalg.norm(ball_x.center - ball_y.center))
        print(
            f"radius_x: {ball_x.radius:.12g}  radius_y: {ball_y.radius:.12g}  "
            f"separation: {gap:.12g}"
        )
        print(
            f"margin_y_in_x: {ball_x.radius - ball_y.radius - gap:.12g}  "
            f"margin_x_in_y: {ball_y.radius - ball_x.radius - gap:.12g}"
        )
    return 0


def cmd_verify(args, cfg):
    seed = int(_setting(args, cfg, "seed", 0))
    n = int(_setting(args, cfg, "n", 200))
    frame_kind = _setting(args, cfg, "frame", "geodesic")
    metric = _metric_from(args, cfg)
    suite = args.suite

    if frame_kind == "graph":
        frame = GraphFrame()
    else:
        frame = fr.GeodesicFrame(_frame_spec(args, cfg))

    tol = _setting(args, cfg, "tol")
    reports = []
    if suite in ("twistor", "all"):
        reports += vf.suite_twistor(seed, n=n)
    if suite in ("contact", "all"):
        reports += vf.suite_contact(seed, n=min(n, 25), metric=metric)
    if suite in ("theorem1", "all"):
        reports += vf.suite_kernel(seed, n=min(n, 25), frame=frame, tol=tol)
    if suite in ("flow", "all"):
        reports += vf.suite_flow(seed, n_sky=min(n, 25), frame=frame, tol=tol)

    payload = {
        "suite": suite,
        "seed": seed,
        "reports": [r.to_json_dict() for r in reports],
        "passed": all(r.passed for r in reports),
    }
    out = _setting(args, cfg, "out", "verify_report.json")
    _write_json(out, payload)
    for r in reports:
        flag = "pass" if r.passed else "FAIL"
        print(f"{flag}  {r.name}: max residual {r.max_residual:.3e} <= {r.tolerance:.1e}")
    return 0 if payload["passed"] else DOMAIN_ERROR


def build_parser():
    parser = argparse.ArgumentParser(prog="skyframes")
    parser.add_argument("--config", help="JSON config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--metric", choices=["minkowski", "flrw", "custom"])
    common.add_argument("--p", type=float, help="power-law scale-factor exponent")
    common.add_argument("--a-expr", dest="a_expr", help="scale factor a(t) expression")
    common.add_argument("--target", help="cauchy:t0 or singularity")
    common.add_argument("--frame", choices=["geodesic", "graph"])
    common.add_argument("--n", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--step", type=float)
    common.add_argument("--out")
    common.add_argument("--format", choices=["json", "csv"])

    p = sub.add_parser("pauli", parents=[common], help="transform a 4-vector")
    p.add_argument("--vec", required=True, help="four comma-separated components")
    p.add_argument("--factor", action="store_true", help="also factor a null vector")
    p.set_defaults(func=cmd_pauli)

    p = sub.add_parser("sky-image", parents=[common], help="project a sky to M")
    p.add_argument("--event", required=True)
    p.set_defaults(func=cmd_sky_image)

    p = sub.add_parser("causal", parents=[common], help="order two events")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.set_defaults(func=cmd_causal)

    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument(
        "--suite",
        required=True,
        choices=["contact", "theorem1", "flow", "twistor", "all"],
    )
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except (errors.BadCountError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except errors.SkyframesError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
