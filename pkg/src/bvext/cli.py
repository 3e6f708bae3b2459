"""Batch front end: ``bvext <command> [options]`` prints a JSON report on stdout.

Exit status is 0 on success, 2 on usage or input errors and 1 when a
module reports a violated invariant.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import math
import os
import sys

import numpy as np

from . import __version__
from . import coarea, gallery, grid, planar, whitney
from .errors import BVError, ContractViolation
from .io import dump_json, load_mask, to_layers, to_pbm, write_png

COMMANDS = ("gallery", "decompose", "jordan", "smooth", "coarea", "extend", "verify", "sweep")


class UsageError(Exception):
    pass


def _threads():
    try:
        return max(1, int(os.environ.get("GMT_THREADS", "1")))
    except ValueError:
        raise UsageError("GMT_THREADS must be an integer") from None


def _load(args):
    if args.mask:
        omega = load_mask(args.mask, level=args.level)
        if omega.grid.dim == 2:
            # images put the largest y on the top row; undo that so axis 0 is x
            omega = grid.CellSet(grid.Grid(2, omega.grid.level, omega.mask.shape[::-1]),
                                 np.flipud(omega.mask).T)
        return omega, {}, {"mask": args.mask}
    if not args.domain:
        raise UsageError("give --domain or --mask")
    params = {}
    for item in args.param or []:
        k, _, v = item.partition("=")
        try:
            params[k] = float(v)
        except ValueError:
            raise UsageError(f"--param expects key=number, got {item!r}") from None
    d = gallery.build_domain(gallery.DomainSpec(args.domain, args.level, params, args.seed))
    return d.omega, d.features, d.metadata


def _world_center(g):
    return [o + 0.5 * n * g.spacing for o, n in zip(g.origin, g.shape)]


def _pick_set(name, omega):
    g = omega.grid
    mesh = g.mesh()
    c = _world_center(g)
    if name == "omega":
        return omega
    if name == "left-half":
        return grid.CellSet(g, omega.mask & (mesh[0] < c[0]))
    if name == "lower-half":
        return grid.CellSet(g, omega.mask & (mesh[1] < c[1]))
    raise UsageError(f"unknown set {name!r}")


def _function(name, g, seed):
    mesh = g.mesh()
    if name == "ramp":
        lo, hi = mesh[0].min(), mesh[0].max()
        return grid.GridFunction(g, (mesh[0] - lo) / (hi - lo))
    if name == "checkerboard":
        idx = np.indices(g.shape).sum(axis=0)
        return grid.GridFunction(g, (idx % 2).astype(float))
    if name == "random":
        rng = np.random.default_rng(seed)
        return grid.GridFunction(g, rng.integers(0, 16, size=g.shape).astype(float))
    if name == "smooth":
        return grid.GridFunction(g, np.sin(math.pi * mesh[0]) * np.cos(math.pi * mesh[1]))
    raise UsageError(f"unknown function {name!r}")


def _prepare_out(args):
    if not args.out:
        return None
    if os.path.isdir(args.out) and os.listdir(args.out) and not args.force:
        raise UsageError(f"output directory {args.out} is not empty; pass --force to overwrite")
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write_mask(out, name, mask, artifacts):
    if mask.ndim == 2:
        path = os.path.join(out, name + ".pbm")
        # rows of the image run along y, top row = largest y
        with open(path, "wb") as fh:
            fh.write(to_pbm(np.flipud(mask.T)))
    else:
        path = os.path.join(out, name + ".txt")
        with open(path, "w") as fh:
            fh.write(to_layers(mask))
    artifacts.append(path)


# -- commands ----------------------------------------------------------------

def cmd_gallery(args, out):
    omega, feats, meta = _load(args)
    g = omega.grid
    metrics = {"cells": len(omega), "measure": omega.measure,
               "perimeter": grid.perimeter(omega), "h": g.spacing}
    if g.dim == 2:
        metrics["components"] = len(grid.complement_components(omega))
    for k in ("i_star", "cantor_depth"):
        if k in meta:
            metrics[k] = meta[k]
    arts = []
    if out:
        _write_mask(out, "omega", omega.mask, arts)
        for name, f in feats.items():
            _write_mask(out, name, f.mask, arts)
        if g.dim == 2:
            path = os.path.join(out, "omega.png")
            write_png(np.flipud(omega.mask.T), path)
            arts.append(path)
        path = os.path.join(out, "metadata.json")
        dump_json(meta, path)
        arts.append(path)
    return metrics, arts


def cmd_decompose(args, out):
    omega, _, _ = _load(args)
    W = whitney.whitney_decompose(omega)
    P = whitney.partition_of_unity(W)
    metrics = {"cubes": len(W), "floor_cubes": W.floor_count,
               "floor_area_fraction": W.floor_area / omega.measure,
               "neighbor_pairs": int(len(W.neighbors)),
               "gradient_constant": P.gradient_bound_constant}
    arts = []
    if out:
        path = os.path.join(out, "whitney.json")
        dump_json(W.to_json(), path)
        arts.append(path)
        if omega.grid.dim == 2:
            lab = W.labels
            edge = np.zeros(lab.shape, dtype=bool)
            edge[:-1] |= lab[:-1] != lab[1:]
            edge[:, :-1] |= lab[:, :-1] != lab[:, 1:]
            img = np.where(edge & omega.mask, 128, np.where(omega.mask, 255, 0)).astype(np.uint8)
            path = os.path.join(out, "whitney.png")
            from PIL import Image
            Image.fromarray(np.flipud(img.T)).save(path)
            arts.append(path)
    return metrics, arts


def cmd_jordan(args, out):
    omega, _, _ = _load(args)
    E = _pick_set(args.set, omega)
    J = planar.jordan_decompose(E)
    metrics = {"plus_cycles": len(J.plus_cycles), "minus_cycles": len(J.minus_cycles),
               "perimeter": grid.perimeter(E),
               "cycle_length_sum": sum(c.length for c in J.cycles),
               "parts": len(J.part_windows)}
    arts = []
    if out:
        for name, text in (("cycles.json", dump_json(J.to_json())), ("cycles.svg", J.to_svg())):
            path = os.path.join(out, name)
            with open(path, "w") as fh:
                fh.write(text)
            arts.append(path)
    return metrics, arts


def _inner_box(omega, half):
    g = omega.grid
    mesh = g.mesh()
    c = _world_center(g)
    ext = [0.5 * n * g.spacing for n in g.shape]
    box = np.ones(g.shape, dtype=bool)
    for a in range(g.dim):
        box &= np.abs(mesh[a] - c[a]) < half * ext[a]
    return grid.CellSet(g, omega.mask & box)


def cmd_smooth(args, out):
    omega, _, _ = _load(args)
    A = _inner_box(omega, args.inner)
    u = _function(args.function, omega.grid, args.seed)
    P = whitney.partition_of_unity(whitney.whitney_decompose(A))
    S = whitney.smooth_bv(u, omega, A, partition=P)
    ratio = whitney.bv_norm(S, omega) / whitney.bv_norm(u, omega)
    h = omega.grid.spacing
    widths = [w for w in (2.0 ** -k for k in range(2, 6)) if w >= 2 * h]
    prof = whitney.collar_variation_profile(S - u, A, widths)
    vals = u.values[A.mask]
    metrics = {"norm_ratio": ratio, "gradient_constant": P.gradient_bound_constant,
               "max_principle": int(S.values[A.mask].min() >= vals.min() - 1e-12
                                    and S.values[A.mask].max() <= vals.max() + 1e-12)}
    for w, v in prof:
        metrics[f"collar_{w:g}"] = v
    return metrics, []


def cmd_coarea(args, out):
    omega, _, _ = _load(args)
    u = _function(args.function, omega.grid, args.seed)
    tv, integral, err = coarea.coarea_check(u, omega)
    arts = []
    if out:
        path = os.path.join(out, "profile.csv")
        with open(path, "w") as fh:
            fh.write(coarea.level_profile(u, omega).to_csv())
        arts.append(path)
    return {"tv": tv, "integral": integral, "rel_err": err}, arts


_BASELINES = {"zero": lambda E, om: E, "fill": planar.hole_fill_baseline, "ring": planar.ring_baseline}


def cmd_extend(args, out):
    omega, _, _ = _load(args)
    E = _pick_set(args.set, omega)
    lab = grid.complement_components(omega)
    base = _BASELINES[args.baseline](E, omega)
    r = planar.strong_perimeter_extend_set(E, omega, base, labeling=lab)
    _, hlen = planar.hset_report(omega, lab)
    metrics = {"constant": r.constant if math.isfinite(r.constant) else -1.0,
               "overlap_length": r.overlap_length,
               "hset_overlap_length": r.hset_overlap_length,
               "baseline_overlap_length": r.baseline_overlap_length,
               "perimeter_in": r.perimeter_in, "perimeter_out": r.perimeter_out,
               "hset_length": hlen}
    arts = []
    if out:
        _write_mask(out, "extended", r.extended.mask, arts)
        path = os.path.join(out, "extension.json")
        dump_json(r.to_json(), path)
        arts.append(path)
    return metrics, arts


def cmd_verify(args, out):
    omega, _, _ = _load(args)
    g = omega.grid
    metrics = {}
    W = whitney.whitney_decompose(omega)
    metrics["whitney"] = int(W.check())
    P = whitney.partition_of_unity(W)
    metrics["partition"] = int(whitney.check_partition(P))
    u = _function("random", g, args.seed)
    metrics["coarea_rel_err"] = coarea.coarea_check(u, omega)[2]
    if metrics["coarea_rel_err"] > 1e-9:
        raise ContractViolation(f"coarea identity off by {metrics['coarea_rel_err']}")
    v = _function("ramp", g, args.seed)
    S = whitney.smooth_bv(v, omega, omega, partition=P)
    if (S.values[omega.mask].min() < v.values[omega.mask].min() - 1e-12
            or S.values[omega.mask].max() > v.values[omega.mask].max() + 1e-12):
        raise ContractViolation("smoothing leaves [min u, max u]")
    metrics["max_principle"] = 1
    if g.dim == 2:
        metrics["jordan"] = int(planar.check_jordan(planar.jordan_decompose(omega)))
    return metrics, []


HANDLERS = {"gallery": cmd_gallery, "decompose": cmd_decompose, "jordan": cmd_jordan,
            "smooth": cmd_smooth, "coarea": cmd_coarea, "extend": cmd_extend, "verify": cmd_verify}


def _sweep_one(payload):
    argv, level = payload
    args = build_parser().parse_args(argv + ["--level", str(level)])
    metrics, _ = HANDLERS[args.command](args, None)
    return level, metrics


def cmd_sweep(args, out, rest):
    try:
        levels = [int(v) for v in args.levels.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--levels expects comma-separated integers, got {args.levels!r}") from None
    if not levels:
        raise UsageError("--levels is empty")
    if args.cmd not in HANDLERS:
        raise UsageError(f"cannot sweep {args.cmd!r}")
    base = [args.cmd] + rest
    jobs = [(base, L) for L in levels]
    n = min(_threads(), len(jobs))
    if n > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    keys = sorted({k for _, m in results for k in m})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level"] + keys)
    for L, m in results:
        w.writerow([L] + [repr(float(m[k])) if k in m else "" for k in keys])
    arts = []
    if out:
        path = os.path.join(out, "sweep.csv")
        with open(path, "w") as fh:
            fh.write(buf.getvalue())
        arts.append(path)
    metrics = {f"L{L}.{k}": v for L, m in results for k, v in m.items()}
    return metrics, arts, buf.getvalue()


# -- parser ------------------------------------------------------------------

def _common(p):
    p.add_argument("--domain", choices=gallery.KINDS)
    p.add_argument("--mask", help="PBM/PNG/layered-text mask file instead of a gallery domain")
    p.add_argument("--level", type=int)
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="domain parameter")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for masks, overlays and tables")
    p.add_argument("--force", action="store_true", help="allow writing into a non-empty --out")


def build_parser():
    parser = argparse.ArgumentParser(prog="bvext", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("gallery", "decompose", "verify"):
        _common(sub.add_parser(name))
    p = sub.add_parser("jordan")
    _common(p)
    p.add_argument("--set", default="omega", choices=("omega", "left-half", "lower-half"))
    p = sub.add_parser("smooth")
    _common(p)
    p.add_argument("--function", default="smooth", choices=("ramp", "checkerboard", "random", "smooth"))
    p.add_argument("--inner", type=float, default=0.5, help="A = omega within this fraction of the half-width")
    p = sub.add_parser("coarea")
    _common(p)
    p.add_argument("--function", default="ramp", choices=("ramp", "checkerboard", "random", "smooth"))
    p = sub.add_parser("extend")
    _common(p)
    p.add_argument("--set", default="left-half", choices=("omega", "left-half", "lower-half"))
    p.add_argument("--baseline", default="fill", choices=tuple(_BASELINES))
    p = sub.add_parser("sweep")
    p.add_argument("--cmd", required=True, choices=tuple(HANDLERS))
    p.add_argument("--levels", required=True)
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")
    return parser


def run(argv=None, stdout=None):
    """Run one command; returns ``(exit_code, report_or_None)``."""
    stdout = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv and argv[0] == "sweep":
            args, rest = parser.parse_known_args(argv)
        else:
            args, rest = parser.parse_args(argv), []
    except SystemExit as exc:
        return int(exc.code or 0), None
    try:
        out = _prepare_out(args)
        if args.command == "sweep":
            metrics, arts, _ = cmd_sweep(args, out, rest)
            inputs = {"cmd": args.cmd, "levels": args.levels, "args": rest}
        else:
            if args.level is None:
                if not args.mask:
                    raise UsageError("--level is required with --domain")
            metrics, arts = HANDLERS[args.command](args, out)
            inputs = {k: v for k, v in sorted(vars(args).items()) if k not in ("force",)}
    except UsageError as exc:
        print(f"bvext: error: {exc}", file=sys.stderr)
        return 2, None
    except ContractViolation as exc:
        print(f"bvext: invariant violated: {exc}", file=sys.stderr)
        return 1, None
    except BVError as exc:
        print(f"bvext: error: {exc}", file=sys.stderr)
        return 2, None
    except OSError as exc:
        print(f"bvext: error: {exc}", file=sys.stderr)
        return 2, None
    for k, v in metrics.items():
        if not math.isfinite(float(v)):
            print(f"bvext: invariant violated: metric {k} is not finite", file=sys.stderr)
            return 1, None
    report = {"command": args.command, "inputs": inputs,
              "metrics": {k: (int(v) if isinstance(v, (bool, np.bool_)) else
                              v.item() if hasattr(v, "item") else v) for k, v in metrics.items()},
              "artifacts": arts, "version": __version__}
    stdout.write(dump_json(report) + "\n")
    return 0, report


def main(argv=None):
    code, _ = run(argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
