"""Command-line front end: ``persamp amp|dist|check|rips|gen|inspect``.

Exit codes: 0 success, 1 failed checks or invalid input data, 2 usage
errors, 3 an inexact result under ``--require-exact``.
"""

import argparse
import json
import math
import os
import sys

from . import __version__
from .amplitude import COUNTING, LEBESGUE, c_tau_rank, evaluate, format_spec, parse_spec, to_float
from .barcode import Barcode, BarcodeParseError, format_barcode, parse_barcode
from .distance import (
    MAX,
    SUM,
    DistanceReport,
    InstanceTooLarge,
    LpFold,
    abs_distance,
    interleaving_1param,
    lp_hilbert_distance,
    path_metric_1param,
    wasserstein_report,
)
from .gridmod import (
    Face,
    GridModule,
    HilbertGrid,
    InvalidModuleError,
    grid_barcode,
    hilbert_from_dict,
    hilbert_to_dict,
    module_from_dict,
    module_to_dict,
    morphism_from_dict,
    morphism_to_dict,
    random_module,
    random_ses,
    validate,
)
from .rips import bifiltration_hilbert, distance_matrix, load_matrix_csv, load_points_csv, vr_barcodes
from .stability import COUNTEREXAMPLES, CATALOG, random_barcode, run_catalog, run_counterexamples

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INEXACT = 0, 1, 2, 3
CONTENTS = {"lebesgue": LEBESGUE, "counting": COUNTING}


class CliError(Exception):
    def __init__(self, message, code=EXIT_FAIL):
        super().__init__(message)
        self.code = code


def fmt(x):
    """12 significant digits; ``inf`` for infinity."""
    x = to_float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _json_num(x):
    x = to_float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def load_input(path):
    """A barcode (text), grid module, Hilbert grid or morphism (JSON)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: invalid JSON: {exc}") from None
        kind = doc.get("kind", "module")
        try:
            if kind == "hilbert":
                return hilbert_from_dict(doc)
            if kind == "morphism":
                return morphism_from_dict(doc)
            return module_from_dict(doc)
        except InvalidModuleError as exc:
            raise CliError(f"{path}: invalid module: {exc}") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"{path}: {exc}") from None
    try:
        return parse_barcode(text)
    except BarcodeParseError as exc:
        raise CliError(f"{path}: {exc}") from None


def _spec(text):
    try:
        return parse_spec(text)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None


def _fold(text, p):
    t = text.lower()
    if t == "sum":
        return SUM
    if t == "max":
        return MAX
    if t == "lp":
        return LpFold(p)
    if t.startswith("lp:"):
        return LpFold(float(t[3:]))
    raise CliError(f"unknown fold {text!r}", EXIT_USAGE)


def _barcode_of(obj, what):
    if isinstance(obj, Barcode):
        return obj
    if isinstance(obj, GridModule) and obj.n == 1:
        return grid_barcode(obj)
    raise CliError(f"{what} needs a barcode or a 1-parameter module")


# ---------------------------------------------------------------- commands

def cmd_amp(args):
    obj = load_input(args.input)
    content = CONTENTS[args.content or "lebesgue"]
    if args.spec.lower().startswith("ctau:"):
        if not isinstance(obj, GridModule):
            raise CliError("ctau needs a grid module")
        try:
            axes = [int(a) - 1 for a in args.spec.split(":", 1)[1].split(",")]
            tau = Face(axes)
        except ValueError as exc:
            raise CliError(f"bad face in {args.spec!r}: {exc}", EXIT_USAGE) from None
        value = c_tau_rank(obj, tau, content, exact=True)
        name = args.spec
    else:
        spec = _spec(args.spec)
        if args.content and hasattr(spec, "content"):
            spec = type(spec)(spec.p, content)
        try:
            value = evaluate(spec, obj, exact=True)
        except (TypeError, ValueError) as exc:
            raise CliError(str(exc)) from None
        name = format_spec(spec)
    if args.json:
        print(json.dumps({"spec": name, "value": _json_num(value)}))
    else:
        print(fmt(value))
    return EXIT_OK


def _dist_report(args, A, B):
    metric = args.metric
    if metric in ("bottleneck", "wasserstein"):
        p = math.inf if metric == "bottleneck" else args.p
        return wasserstein_report(p, _barcode_of(A, metric), _barcode_of(B, metric), args.ground)
    if metric == "interleaving":
        A, B = _barcode_of(A, metric), _barcode_of(B, metric)
        return DistanceReport("interleaving", interleaving_1param(A, B), "exact", None)
    if metric == "abs":
        spec = _spec(args.spec or "p1")
        return DistanceReport(f"abs[{format_spec(spec)}]", abs_distance(spec, A, B), "exact", None)
    if metric == "lp":
        spec = _spec(args.spec or f"hilbert:{args.p:g}")
        if not hasattr(spec, "content"):
            raise CliError("--metric lp needs a hilbert:p spec", EXIT_USAGE)
        content = CONTENTS[args.content] if args.content else spec.content
        value = lp_hilbert_distance(spec.p, A, B, content)
        return DistanceReport(f"lp[{format_spec(spec)}]", value, "exact", None)
    if metric == "path":
        spec = _spec(args.spec or "p1")
        fold = _fold(args.fold, args.p)
        try:
            return path_metric_1param(spec, _barcode_of(A, metric), _barcode_of(B, metric), fold,
                                      method=args.method, max_bars=args.max_bars)
        except InstanceTooLarge as exc:
            raise CliError(str(exc)) from None
    raise CliError(f"unknown metric {metric!r}", EXIT_USAGE)


def cmd_dist(args):
    A, B = load_input(args.a), load_input(args.b)
    try:
        rep = _dist_report(args, A, B)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CliError):
            raise
        raise CliError(str(exc)) from None
    if args.require_exact and rep.exactness != "exact":
        print(json.dumps({"error": "inexact result", "report": rep.to_dict()}), file=sys.stderr)
        return EXIT_INEXACT
    if args.json:
        print(rep.to_json())
    else:
        print(f"{fmt(rep.value)} {rep.exactness}")
    return EXIT_OK


def cmd_check(args):
    ids = [i.strip().upper() for i in args.ids.split(",")] if args.ids else None
    if ids is None:
        cat_ids, cx_ids = list(CATALOG), list(COUNTEREXAMPLES)
    else:
        unknown = [i for i in ids if i not in CATALOG and i not in COUNTEREXAMPLES]
        if unknown:
            raise CliError(f"unknown check ids: {', '.join(unknown)}", EXIT_USAGE)
        cat_ids = [i for i in ids if i in CATALOG]
        cx_ids = [i for i in ids if i in COUNTEREXAMPLES]
    reports = run_catalog(cat_ids, seed=args.seed, samples=args.samples, jobs=args.jobs)
    reports += run_counterexamples(cx_ids)
    ok = all(r.passed for r in reports)
    if args.json:
        doc = json.dumps({"passed": ok, "seed": args.seed, "samples": args.samples,
                          "reports": [r.to_dict() for r in reports]}, indent=1)
        _write(args.json, doc + "\n")
    else:
        for r in reports:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status} {r.id} ({r.kind}, {r.samples} samples, {len(r.failures)} failures)")
    if not ok and not args.json:
        failures = [f for r in reports for f in r.failures]
        print(json.dumps({"failures": failures}), file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_rips(args):
    density = None
    try:
        if args.matrix:
            d = load_matrix_csv(args.input)
            if args.density_col:
                raise CliError("--density-col is not available with --matrix", EXIT_USAGE)
        else:
            pts, density = load_points_csv(args.input, args.density_col)
            d = distance_matrix(pts)
    except (OSError, ValueError) as exc:
        if isinstance(exc, CliError):
            raise
        raise CliError(f"{args.input}: {exc}") from None
    if args.radius_bps or args.density_bps:
        if density is None or not (args.radius_bps and args.density_bps):
            raise CliError("bifiltration needs --density-col, --radius-bps and --density-bps",
                           EXIT_USAGE)
        try:
            H = bifiltration_hilbert(d, density, _floats(args.radius_bps), _floats(args.density_bps),
                                     args.degree or 0, jobs=args.jobs)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        print(json.dumps(hilbert_to_dict(H)))
        return EXIT_OK
    try:
        bcs = vr_barcodes(d, args.maxdim, args.max_radius)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    degrees = [args.degree] if args.degree is not None else range(len(bcs))
    for k in degrees:
        if not 0 <= k < len(bcs):
            raise CliError(f"degree {k} not computed (maxdim {args.maxdim})", EXIT_USAGE)
        if args.degree is None:
            print(f"# H{k}")
        for bar in bcs[k]:
            print(f"{fmt(bar.birth)} {fmt(bar.death)}")
    return EXIT_OK


def _floats(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise CliError(f"bad number list {text!r}", EXIT_USAGE) from None


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_gen(args):
    if args.kind == "barcode":
        bc = random_barcode(args.seed, args.max_bars)
        _write(args.out, format_barcode(bc))
    elif args.kind == "module":
        M = random_module(args.seed, n=args.n, gen_count=1)
        _write(args.out, json.dumps(module_to_dict(M), indent=1) + "\n")
    else:
        ses = random_ses(args.seed, n=args.n)
        out = args.out or "."
        os.makedirs(out, exist_ok=True)
        docs = {"A.json": module_to_dict(ses.A), "B.json": module_to_dict(ses.B),
                "C.json": module_to_dict(ses.C), "incl.json": morphism_to_dict(ses.incl),
                "proj.json": morphism_to_dict(ses.proj)}
        for name, doc in docs.items():
            _write(os.path.join(out, name), json.dumps(doc, indent=1) + "\n")
        print(" ".join(os.path.join(out, n) for n in docs))
    return EXIT_OK


def cmd_inspect(args):
    obj = load_input(args.input)
    if isinstance(obj, Barcode):
        info = {"kind": "barcode", "bars": len(obj), "finite": len(obj.finite_part()),
                "infinite": len(obj.infinite_part())}
    elif isinstance(obj, HilbertGrid):
        info = {"kind": "hilbert", "n": obj.n, "shape": list(obj.geometry.shape),
                "dims": obj.dims.reshape(-1).tolist()}
    elif isinstance(obj, GridModule):
        v = validate(obj)
        info = {"kind": "module", "n": obj.n, "prime": obj.prime, "shape": list(obj.geometry.shape),
                "dims": obj.dims.reshape(-1).tolist(), "total_dim": int(obj.total_dim()),
                "valid": v is None}
    else:
        info = {"kind": "morphism", "prime": obj.prime, "valid": True,
                "source_dims": obj.source.dims.reshape(-1).tolist(),
                "target_dims": obj.target.dims.reshape(-1).tolist()}
    print(json.dumps(info))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser():
    ap = argparse.ArgumentParser(prog="persamp", description="Amplitudes and distances for "
                                 "persistence modules.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("amp", help="evaluate an amplitude")
    p.add_argument("input")
    p.add_argument("--spec", required=True)
    p.add_argument("--content", choices=sorted(CONTENTS), default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_amp)

    p = sub.add_parser("dist", help="distance between two inputs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--metric", required=True,
                   choices=["bottleneck", "wasserstein", "interleaving", "abs", "lp", "path"])
    p.add_argument("--spec")
    p.add_argument("--fold", default="sum")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--ground", choices=["linf", "l1"], default="linf")
    p.add_argument("--content", choices=sorted(CONTENTS), default=None)
    p.add_argument("--method", choices=["auto", "exhaustive", "assignment"], default="auto")
    p.add_argument("--max-bars", type=int, default=8)
    p.add_argument("--require-exact", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("check", help="run the inequality catalog and counterexamples")
    p.add_argument("--ids", help="comma-separated ids (default: all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", nargs="?", const="-", metavar="OUT",
                   help="JSON report to OUT (stdout when OUT is omitted)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("rips", help="Vietoris-Rips barcodes from a CSV")
    p.add_argument("input")
    p.add_argument("--maxdim", type=int, default=1)
    p.add_argument("--degree", type=int)
    p.add_argument("--max-radius", type=float, default=math.inf)
    p.add_argument("--matrix", action="store_true", help="input is a square distance matrix")
    p.add_argument("--density-col", action="store_true", help="last column holds densities")
    p.add_argument("--radius-bps", help="comma-separated radius breakpoints (bifiltration)")
    p.add_argument("--density-bps", help="comma-separated density breakpoints (bifiltration)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_rips)

    p = sub.add_parser("gen", help="write random inputs")
    p.add_argument("--kind", choices=["barcode", "module", "ses"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--max-bars", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("inspect", help="describe and validate an input file")
    p.add_argument("input")
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
