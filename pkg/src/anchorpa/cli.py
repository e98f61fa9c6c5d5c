"""Command-line surface.

Commands:
  validate   <cat.json|preset>
  trace      <cat.json|preset> --module regular|PATH --object LABEL
  coherence  <cat.json|preset> --check all|NAME [--module ...]
  apa-check  <cat.json|preset> --generator LABEL --max-n N
  tangle-eval <cat.json|preset> <prog.tangle> --generator LABEL

Exit codes: 0 all residuals within tolerance, 1 check failures, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .core import DataError
from .modcat import endofunctor_from_object
from .trace import adjunction_data, biadjunction_zigzags, trace
from .coherence import CHECK_NAMES, coherence_check, pairing_report
from .apa import build_apa, check_axioms
from .tangle import TangleError, evaluate, parse_file
from .presets import CATEGORY_PRESETS, resolve_category, resolve_module


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="anchorpa",
        description="categorified traces and anchored planar algebras on skeletal data",
    )
    p.add_argument("--tol", type=float, default=1e-9, help="residual tolerance (default 1e-9)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="validate a category file or preset")
    v.add_argument("category")

    t = sub.add_parser("trace", help="compute Tr(y) for a module endofunctor")
    t.add_argument("category")
    t.add_argument("--module", default="regular")
    t.add_argument("--object", dest="object_label", required=True)

    c = sub.add_parser("coherence", help="run named coherence checks")
    c.add_argument("category")
    c.add_argument("--module", default="regular")
    c.add_argument("--check", default="all")

    a = sub.add_parser("apa-check", help="build the APA and verify the nine axioms")
    a.add_argument("category")
    a.add_argument("--module", default="regular")
    a.add_argument("--generator", required=True)
    a.add_argument("--max-n", type=int, default=3, dest="max_n")

    g = sub.add_parser("tangle-eval", help="evaluate a .tangle program")
    g.add_argument("category")
    g.add_argument("program")
    g.add_argument("--module", default="regular")
    g.add_argument("--generator", required=True)
    g.add_argument("--max-n", type=int, default=4, dest="max_n")
    return p


HARD_CAP = 4


def run(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _dispatch(args)
    except (DataError, TangleError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _emit(args, payload: dict, failed: bool) -> int:
    if args.format == "json":
        print(json.dumps(payload, indent=1, sort_keys=True, default=_jsonable))
    else:
        _print_text(payload)
    return 1 if failed else 0


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer)):
        return float(x)
    raise TypeError(str(type(x)))


def _print_text(payload, indent=0):
    pad = " " * indent
    for k, v in payload.items():
        if isinstance(v, dict):
            print(f"{pad}{k}:")
            _print_text(v, indent + 2)
        else:
            print(f"{pad}{k}: {v}")


def _dispatch(args) -> int:
    tol = args.tol
    if tol <= 0:
        print("error: tolerance must be positive", file=sys.stderr)
        return 2

    if args.command == "validate":
        cat, rep = resolve_category(args.category)
        payload = {"category": args.category, "residuals": rep.as_dict(), "tol": tol}
        failed = rep.max_residual() > tol
        payload["pass"] = not failed
        return _emit(args, payload, failed)

    cat, rep = resolve_category(args.category)
    cat.tol = max(cat.tol, tol) if False else cat.tol
    mod, mres = resolve_module(cat, args.module)

    if args.command == "trace":
        y = _generator(mod, args.object_label)
        T = trace(mod, (y,))
        adj = adjunction_data(mod)
        zz = biadjunction_zigzags(adj)
        worst = max(zz.values())
        payload = {
            "object": args.object_label,
            "carrier": dict(T.carrier),
            "trace_multiplicities": dict(T.multiplicity_vector()),
            "dim_hom_unit": T.dim_hom_from_unit(),
            "zigzag_residuals": {k: float(v) for k, v in zz.items()},
            "pass": worst <= tol,
        }
        return _emit(args, payload, worst > tol)

    if args.command == "coherence":
        names = CHECK_NAMES if args.check == "all" else (args.check,)
        adj = adjunction_data(mod)
        payload = {}
        failed = False
        for name in names:
            out = coherence_check(mod, name, adj=adj)
            elapsed = out.pop("elapsed_ms")
            worst = max((float(v) for v in out.values()), default=0.0)
            payload[name] = {
                "residual": worst,
                "pass": worst <= tol,
                "instances": len(out),
                "elapsed_ms": elapsed,
            }
            failed = failed or worst > tol
        return _emit(args, payload, failed)

    if args.command == "apa-check":
        if args.max_n > HARD_CAP:
            print(f"error: --max-n exceeds the hard cap {HARD_CAP}", file=sys.stderr)
            return 2
        x = _generator(mod, args.generator)
        apa = build_apa(mod, x, args.max_n)
        repazione = check_axioms(apa, tol=tol)
        payload = repazione.as_dict()
        payload["boxes"] = [
            {"n": n, "multiplicities": dict(apa.box(n).multiplicity_vector())}
            for n in range(args.max_n + 1)
        ]
        failed = any(not entry["pass"] for entry in payload["axioms"])
        return _emit(args, payload, failed)

    if args.command == "tangle-eval":
        if args.max_n > HARD_CAP:
            print(f"error: --max-n exceeds the hard cap {HARD_CAP}", file=sys.stderr)
            return 2
        x = _generator(mod, args.generator)
        term = parse_file(args.program)
        apa = build_apa(mod, x, min(args.max_n, HARD_CAP))
        val = evaluate(term, apa)
        payload = {
            "term": term.show(),
            "source_strands": term.src,
            "target_strands": term.tgt,
            "blocks": {
                c: [[_fmt(z) for z in row] for row in b.tolist()] for c, b in sorted(val.blocks.items())
            },
            "norm": val.norm(),
        }
        return _emit(args, payload, False)

    return 2


def _fmt(z):
    return [round(z.real, 12), round(z.imag, 12)]


def _generator(mod, label):
    if mod.regular:
        if label not in mod.cat.labels:
            raise DataError(f"unknown label {label!r}")
        return endofunctor_from_object(mod, label)
    if label in mod.endofunctors:
        return mod.endofunctors[label]
    raise DataError(f"unknown endofunctor {label!r}; module supplies {sorted(mod.endofunctors)}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
