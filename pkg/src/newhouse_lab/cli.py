"""Batch front end.

Every subcommand resolves its parameters as defaults < ``--config`` JSON <
explicit flags, writes its outputs atomically under ``--out`` and finishes
with a ``manifest.json`` echoing the resolved parameters.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .cantor import (
    affine_image,
    refine,
    system_from_config,
    thickness,
)
from .certificate import CERTIFIED, certify_nonhyperbolic
from .critical import box_absorption, flatten, quasi_critical_returns
from .errors import NewhouseLabError
from .gaplemma import Outcome, gap_lemma_decide, intersect_refine
from .hyperbolicity import (
    cone_check,
    cone_config,
    growth_check,
    in_basin,
    orbit,
    sample_lambda_eps,
    sink_census,
    stable_direction_check,
)
from .skew import (
    SkewPoint,
    line_of_tangencies,
    side_code,
    side_name,
    skew_from_config,
    stable_projection,
    unstable_projection,
    vertical_cover,
)

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2

DEFAULT_FAMILY = {"kind": "explicit_bc", "t": 0.6, "m": 5, "c_rho": 1.05, "rho_mode": "scaled"}


# ------------------------------------------------------------------ output

def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become
    Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


class Run:
    """Collects outputs of one command and writes the manifest last."""

    def __init__(self, command: str, out: str, params: dict):
        self.command = command
        self.out = Path(out)
        self.params = params
        self.outputs = []
        self.derived = {}

    def write(self, name: str, text: str) -> Path:
        p = self.out / name
        atomic_write(p, text)
        self.outputs.append(name)
        return p

    def finish(self, status: str = "ok", **extra) -> None:
        man = {
            "command": self.command,
            "params": self.params,
            "derived": self.derived,
            "outputs": sorted(self.outputs),
            "status": status,
            "version": __version__,
            "backend": kernels.BACKEND,
        }
        man.update(extra)
        atomic_write(self.out / "manifest.json", dump_json(man))


def _threads() -> int:
    raw = os.environ.get("NEWHOUSE_LAB_THREADS", "").strip()
    try:
        return max(1, int(raw)) if raw else 0
    except ValueError:
        return 0


def _apply_threads() -> None:
    n = _threads()
    if n and kernels.BACKEND == "numba":
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ------------------------------------------------------------------ config

def _load_config(path):
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return cfg


def _resolve(args, defaults: dict, keys) -> dict:
    params = dict(defaults)
    params.update(_load_config(args.config))
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            params[k] = v
    return params


def _family(params: dict) -> dict:
    fam = dict(DEFAULT_FAMILY)
    fam.update(params.get("family", {}))
    for k in ("t", "m", "c_rho", "rho_mode"):
        if params.get(k) is not None:
            fam[k] = params[k]
    return fam


def _derived(F):
    return F.params.to_json() if F.params is not None else {}


def _parse_system(text: str) -> dict:
    """``preset:key=val,key=val`` shorthand for a Markov system spec."""
    name, _, rest = text.partition(":")
    spec = {"preset": name}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        try:
            spec[k] = json.loads(v)
        except json.JSONDecodeError:
            spec[k] = v
    return spec


def _approx(spec: dict, g: int):
    spec = dict(spec)
    scale = float(spec.pop("scale", 1.0))
    shift = float(spec.pop("shift", 0.0))
    a = refine(system_from_config(spec), g)
    if scale != 1.0 or shift != 0.0:
        a = affine_image(a, scale, shift)
    return a


# ------------------------------------------------------------------ svg

def _svg(width, height, body, title=""):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n')
    t = f"<title>{title}</title>\n" if title else ""
    bg = f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
    return head + t + bg + "".join(body) + "</svg>\n"


def _cover_rows(covers, lo, hi, width=800, row=28, pad=20):
    """Horizontal bars, one row per cover, on the common range [lo, hi]."""
    sx = (width - 2 * pad) / (hi - lo) if hi > lo else 1.0
    body = []
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    for r, (name, a) in enumerate(covers):
        y = pad + r * row
        body.append(f'<text x="{pad}" y="{y - 4:.1f}" font-size="10">{name}</text>\n')
        for x0, x1 in zip(a.lo, a.hi):
            X0 = pad + (x0 - lo) * sx
            w = max((x1 - x0) * sx, 0.5)
            body.append(f'<rect x="{X0:.3f}" y="{y:.1f}" width="{w:.3f}" height="{row / 2:.1f}" '
                        f'fill="{colors[r % len(colors)]}"/>\n')
    return body, pad + len(covers) * row + pad


# ------------------------------------------------------------------ commands

def cmd_thickness(args) -> int:
    params = _resolve(args, {"system": {"preset": "middle_thirds"}, "generations": [10], "svg": False},
                      ["generations", "svg"])
    if args.system:
        params["system"] = _parse_system(args.system)
    params["generations"] = [int(g) for g in params["generations"]]
    run = Run("thickness", args.out, params)
    system = system_from_config(params["system"])
    reports = []
    for g in params["generations"]:
        rep = thickness(refine(system, g))
        reports.append(rep.to_json())
    run.write("thickness.json", dump_json({"system": system.label, "reports": reports}))
    if params["svg"]:
        a = refine(system, max(params["generations"]))
        body, h = _cover_rows([(f"{system.label} g={a.generation}", a)], float(a.lo[0]), float(a.hi[-1]))
        run.write("thickness.svg", _svg(800, h, body, "cover"))
    run.finish()
    return EXIT_OK


def cmd_gaplemma(args) -> int:
    params = _resolve(args, {"first": {"preset": "middle_thirds"}, "second": {"preset": "middle_thirds"},
                             "generation": 10, "tol": 1e-10, "max_depth": 200},
                      ["generation", "tol", "max_depth"])
    if args.first:
        params["first"] = _parse_system(args.first)
    if args.second:
        params["second"] = _parse_system(args.second)
    run = Run("gaplemma", args.out, params)
    g = int(params["generation"])
    A, B = _approx(params["first"], g), _approx(params["second"], g)
    dec = gap_lemma_decide(A, B)
    out = dec.to_json()
    if dec.certificate is Outcome.INTERSECT:
        try:
            w = intersect_refine(A, B, float(params["tol"]), int(params["max_depth"]))
            out["witness"] = w.to_json()
        except NewhouseLabError as exc:
            out["witness_error"] = f"{type(exc).__name__}: {exc}"
    run.write("gaplemma.json", dump_json(out))
    run.finish()
    return EXIT_OK


def cmd_certify(args) -> int:
    params = _resolve(args, {"t": 0.6, "m": 5, "c_rho": 1.05, "rho_mode": "scaled", "g": 12,
                             "tol": 1e-6, "N": 1000, "witness_tol": 1e-10, "max_depth": 400},
                      ["t", "m", "c_rho", "rho_mode", "g", "tol", "N", "witness_tol", "max_depth"])
    run = Run("certify", args.out, params)
    cert = certify_nonhyperbolic(float(params["t"]), int(params["m"]), float(params["c_rho"]),
                                 int(params["g"]), float(params["tol"]), int(params["N"]),
                                 params["rho_mode"], float(params["witness_tol"]),
                                 int(params["max_depth"]))
    if cert.params is not None:
        run.derived = cert.params.to_json()
    run.write("certificate.json", dump_json(cert.to_json()))
    run.finish(status=cert.status)
    return EXIT_OK if cert.status == CERTIFIED else EXIT_INCONCLUSIVE


def cmd_hyper(args) -> int:
    params = _resolve(args, {"eps": 0.05, "grid": 100, "N": 60, "N_backward": 10,
                             "max_period": 12, "flatten": False, "seed": 0},
                      ["eps", "grid", "N", "N_backward", "max_period", "flatten", "seed", "t", "m"])
    params["family"] = _family(params)
    run = Run("hyper", args.out, params)
    F = skew_from_config(params["family"])
    run.derived = _derived(F)
    eps = float(params["eps"])
    if params["flatten"]:
        F = flatten(F, F.eps if F.eps > 0 else eps)
    xs, ys = sample_lambda_eps(F, eps, int(params["grid"]), int(params["N"]), int(params["N_backward"]))
    sinks = sink_census(F, max_period=int(params["max_period"]))
    report = {"n_samples": int(xs.size), "sinks": [s.to_json() for s in sinks]}
    if xs.size:
        cfg = cone_config(F, eps)
        cone = cone_check(F, eps, cfg, (xs, ys), int(params["N"]))
        viol = cone.violations
        if viol and sinks:
            vx = np.array([v.x for v in viol])
            vy = np.array([v.y for v in viol])
            basin = in_basin(F, sinks, vx, vy)
            outside = [v for v, b in zip(viol, basin) if not b]
        else:
            outside = list(viol)
        growth = growth_check(F, (xs, ys), int(params["N"]), cfg.lambda1, cfg.n0)
        report.update(cone=cone.to_json(), cone_violations_outside_basins=len(outside),
                      growth=growth.to_json(),
                      stable_ratio=stable_direction_check(F, (xs, ys), int(params["N"]), cfg.gamma0))
    else:
        report.update(cone=None, cone_violations_outside_basins=0, growth=None, stable_ratio=None,
                      vacuous=True)
    run.write("hyper.json", dump_json(report))
    run.finish()
    return EXIT_OK


def cmd_returns(args) -> int:
    params = _resolve(args, {"g": 6, "budget": 200, "strip_tol": 0.0, "eps": None, "boxes": None},
                      ["g", "budget", "strip_tol", "eps", "boxes", "t", "m"])
    params["family"] = _family(params)
    F = skew_from_config(params["family"])
    eps = float(params["eps"]) if params["eps"] is not None else F.eps
    if not eps > 0:
        raise ValueError("eps must be > 0")
    params["eps"] = eps
    run = Run("returns", args.out, params)
    run.derived = _derived(F)
    rep = quasi_critical_returns(F, eps, int(params["g"]), int(params["budget"]),
                                 strip_tol=float(params["strip_tol"]))
    header = ["x", "y", "verdict", "m", "sink_id", "trace_length"]
    rows = [[o.to_row()[h] for h in header] for o in rep.outcomes]
    run.write("returns.csv", dump_csv(header, rows))
    summary = rep.to_json()
    if params["boxes"] is not None:
        G = flatten(F, eps)
        ba = box_absorption(G, eps, int(params["boxes"]), budget=max(int(params["budget"]), 1))
        run.write("boxes.json", dump_json(ba.to_json()))
        summary["boxes"] = {"n": len(ba.edges), "cycles": len(ba.cycles), "unresolved": len(ba.unresolved)}
    run.write("returns.json", dump_json(summary))
    run.finish()
    return EXIT_OK


def cmd_orbit(args) -> int:
    params = _resolve(args, {"x0": 1.0, "y0": 0.0, "side": "none", "n": 20},
                      ["x0", "y0", "side", "n", "t", "m"])
    params["family"] = _family(params)
    run = Run("orbit", args.out, params)
    F = skew_from_config(params["family"])
    run.derived = _derived(F)
    n = int(params["n"])
    header = ["n", "x", "y", "side", "A", "B", "D"]
    p0 = SkewPoint(float(params["x0"]), float(params["y0"]), side_code(params["side"]))
    if n == 0:
        run.write("orbit.csv", dump_csv(header, []))
        run.finish()
        return EXIT_OK
    tr = orbit(F, p0, n)
    rows = []
    for k in range(n + 1):
        side = p0.side if k == 0 else (0 if tr.x[k] == 0.0 else (1 if tr.x[k] > 0 else -1))
        rows.append([k, float(tr.x[k]), float(tr.y[k]), side_name(side),
                     float(tr.A[k]), float(tr.B[k]), float(tr.D[k])])
    run.write("orbit.csv", dump_csv(header, rows))
    run.finish()
    return EXIT_OK


def cmd_plot(args) -> int:
    params = _resolve(args, {"kind": "lplus", "g": 6, "x0": 0.3, "y0": 0.4, "n": 200,
                             "system": {"preset": "middle_thirds"}},
                      ["kind", "g", "x0", "y0", "n", "t", "m"])
    if args.system:
        params["system"] = _parse_system(args.system)
    params["family"] = _family(params)
    run = Run("plot", args.out, params)
    kind, g = params["kind"], int(params["g"])
    if kind == "cover":
        a = refine(system_from_config(params["system"]), g)
        body, h = _cover_rows([(f"{a.parent.label} g={g}", a)], float(a.lo[0]), float(a.hi[-1]))
        run.write("cover.svg", _svg(800, h, body, "cover"))
    elif kind in ("lplus", "witness"):
        F = skew_from_config(params["family"])
        run.derived = _derived(F)
        ks, ku = stable_projection(F, g), unstable_projection(F, g)
        line = line_of_tangencies(F)
        (x0, _), (x1, _) = line.endpoints()
        lo, hi = min(x0, float(ks.lo[0]), float(ku.lo[0])), max(x1, float(ks.hi[-1]), float(ku.hi[-1]))
        body, h = _cover_rows([("stable", ks), ("unstable", ku)], lo, hi)
        sx = (800 - 40) / (hi - lo)
        body.append(f'<line x1="{20 + (x0 - lo) * sx:.3f}" y1="{h - 10}" x2="{20 + (x1 - lo) * sx:.3f}" '
                    f'y2="{h - 10}" stroke="black" stroke-width="2"/>\n')
        body.append(f'<text x="20" y="{h + 6}" font-size="10">L+ [{x0:.6g}, {x1:.6g}]</text>\n')
        name = "lplus.svg"
        if kind == "witness":
            cert = certify_nonhyperbolic(F.params.t, F.params.m, F.params.c_rho, g=max(g, 8), N=0)
            if cert.witness is not None:
                X = 20 + (cert.witness.point - lo) * sx
                body.append(f'<line x1="{X:.3f}" y1="10" x2="{X:.3f}" y2="{h}" stroke="orange"/>\n')
            name = "witness.svg"
        run.write(name, _svg(800, h + 14, body, kind))
    elif kind == "orbit":
        F = skew_from_config(params["family"])
        run.derived = _derived(F)
        tr = orbit(F, SkewPoint(float(params["x0"]), float(params["y0"]), "none"), int(params["n"]))
        W = H = 500
        pts = [f'<circle cx="{(x + 1) / 2 * (W - 40) + 20:.3f}" cy="{(1 - y) * (H - 40) + 20:.3f}" '
               f'r="1.5" fill="#1f77b4"/>\n' for x, y in zip(tr.x, tr.y)]
        axis = f'<rect x="20" y="20" width="{W - 40}" height="{H - 40}" fill="none" stroke="gray"/>\n'
        run.write("orbit.svg", _svg(W, H, [axis] + pts, "orbit"))
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    run.finish()
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _common(p):
    p.add_argument("--config", help="JSON file with parameters")
    p.add_argument("--out", default=".", help="output directory")


def _family_flags(p):
    p.add_argument("--t", type=float)
    p.add_argument("--m", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="newhouse-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thickness", help="thickness of a dynamically defined Cantor set")
    _common(p)
    p.add_argument("--system", help="preset shorthand, e.g. kt:t=0.5 or tent:m=5")
    p.add_argument("--generations", type=lambda s: [int(v) for v in s.split(",")])
    p.add_argument("--svg", action="store_true", default=None)
    p.set_defaults(func=cmd_thickness)

    p = sub.add_parser("gaplemma", help="gap-lemma decision and intersection witness")
    _common(p)
    p.add_argument("--first")
    p.add_argument("--second")
    p.add_argument("--generation", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p.set_defaults(func=cmd_gaplemma)

    p = sub.add_parser("certify", help="non-hyperbolicity certificate for the explicit family")
    _common(p)
    _family_flags(p)
    p.add_argument("--c-rho", dest="c_rho", type=float)
    p.add_argument("--rho-mode", dest="rho_mode", choices=["scaled", "paper"])
    p.add_argument("--g", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--witness-tol", dest="witness_tol", type=float)
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("hyper", help="cone, growth and sink diagnostics")
    _common(p)
    _family_flags(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--N-backward", dest="N_backward", type=int)
    p.add_argument("--max-period", dest="max_period", type=int)
    p.add_argument("--flatten", action="store_true", default=None)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_hyper)

    p = sub.add_parser("returns", help="quasi-critical return classification")
    _common(p)
    _family_flags(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--g", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--strip-tol", dest="strip_tol", type=float)
    p.add_argument("--boxes", type=int, help="also run box absorption at this Markov level")
    p.set_defaults(func=cmd_returns)

    p = sub.add_parser("orbit", help="orbit trace with cocycle entries")
    _common(p)
    _family_flags(p)
    p.add_argument("--x0", type=float)
    p.add_argument("--y0", type=float)
    p.add_argument("--side", choices=["+", "-", "none"])
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("plot", help="SVG plots")
    _common(p)
    _family_flags(p)
    p.add_argument("--kind", choices=["cover", "lplus", "witness", "orbit"])
    p.add_argument("--system")
    p.add_argument("--g", type=int)
    p.add_argument("--x0", type=float)
    p.add_argument("--y0", type=float)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_threads()
    try:
        return args.func(args)
    except (NewhouseLabError, ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
