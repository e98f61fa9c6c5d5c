"""Build the bundled preset JSON files (data pre-solved offline, then verified)."""

import json
import math
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from anchorpa.core import category_from_dict
from anchorpa.modcat import module_from_dict

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "anchorpa", "data")


def f_entries(labels, n, fmat):
    """Emit all nonzero F entries; fmat(a,b,c,d) -> matrix over (lbasis, rbasis)."""
    out = []
    for a in labels:
        for b in labels:
            for c in labels:
                for d in labels:
                    lb = [(e, mu, nu) for e in labels for mu in range(n(a, b, e)) for nu in range(n(e, c, d))]
                    rb = [(f, rho, sg) for f in labels for rho in range(n(b, c, f)) for sg in range(n(a, f, d))]
                    if not lb or not rb:
                        continue
                    m = fmat(a, b, c, d, lb, rb)
                    for i, (e, mu, nu) in enumerate(lb):
                        for j, (f, rho, sg) in enumerate(rb):
                            v = m[i][j]
                            if abs(v) > 1e-15:
                                out.append(
                                    {
                                        "labels": [a, b, c, d, e, f],
                                        "indices": [mu, nu, rho, sg],
                                        "value": [float(np.real(v)), float(np.imag(v))],
                                    }
                                )
    return out


def r_entries(labels, n, rval):
    out = []
    for a in labels:
        for b in labels:
            for c in labels:
                if n(a, b, c) and n(b, a, c):
                    v = rval(a, b, c)
                    out.append({"labels": [a, b, c], "indices": [0, 0], "value": [float(np.real(v)), float(np.imag(v))]})
    return out


def make_vec():
    labels = ["1"]
    n = lambda a, b, c: 1
    fmat = lambda a, b, c, d, lb, rb: [[1.0]]
    return {
        "labels": labels,
        "unit": "1",
        "dual": {"1": "1"},
        "fusion": [["1", "1", "1", 1]],
        "F": f_entries(labels, n, fmat),
        "R": r_entries(labels, n, lambda a, b, c: 1.0),
        "pivotal": {"1": [1.0, 0.0]},
        "tol": 1e-9,
    }


def make_vecz2(sign):
    labels = ["1", "g"]
    mult = {("1", "1"): "1", ("1", "g"): "g", ("g", "1"): "g", ("g", "g"): "1"}
    n = lambda a, b, c: 1 if mult[(a, b)] == c else 0
    fusion = [[a, b, mult[(a, b)], 1] for a in labels for b in labels]
    fmat = lambda a, b, c, d, lb, rb: [[1.0]]

    def rval(a, b, c):
        if a == "g" and b == "g":
            return sign
        return 1.0

    return {
        "labels": labels,
        "unit": "1",
        "dual": {"1": "1", "g": "g"},
        "fusion": fusion,
        "F": f_entries(labels, n, fmat),
        "R": r_entries(labels, n, rval),
        "pivotal": {"1": [1.0, 0.0], "g": [1.0, 0.0]},
        "tol": 1e-9,
    }


def make_fib():
    labels = ["1", "tau"]
    phi = (1 + math.sqrt(5)) / 2
    N = {}
    for a in labels:
        for b in labels:
            N[(a, b, "1")] = 0
            N[(a, b, "tau")] = 0
    N[("1", "1", "1")] = 1
    N[("1", "tau", "tau")] = 1
    N[("tau", "1", "tau")] = 1
    N[("tau", "tau", "1")] = 1
    N[("tau", "tau", "tau")] = 1
    n = lambda a, b, c: N.get((a, b, c), 0)
    fusion = [[a, b, c, N[(a, b, c)]] for a in labels for b in labels for c in labels if N[(a, b, c)]]

    Fm = {
        ("1", "1"): 1 / phi,
        ("1", "tau"): 1 / math.sqrt(phi),
        ("tau", "1"): 1 / math.sqrt(phi),
        ("tau", "tau"): -1 / phi,
    }

    def fmat(a, b, c, d, lb, rb):
        if (a, b, c, d) == ("tau", "tau", "tau", "tau"):
            return [[Fm[(e, f)] for (f, _, _) in rb] for (e, _, _) in lb]
        return np.eye(len(lb)).tolist()

    def rval(a, b, c):
        if a == b == "tau":
            return np.exp(-4j * np.pi / 5) if c == "1" else np.exp(3j * np.pi / 5)
        return 1.0

    return {
        "labels": labels,
        "unit": "1",
        "dual": {"1": "1", "tau": "tau"},
        "fusion": fusion,
        "F": f_entries(labels, n, fmat),
        "R": r_entries(labels, n, rval),
        "pivotal": {"1": [1.0, 0.0], "tau": [1.0, 0.0]},
        "tol": 1e-9,
    }


def make_ising():
    labels = ["1", "sigma", "psi"]
    pairs = {
        ("1", "1"): {"1": 1},
        ("1", "sigma"): {"sigma": 1},
        ("1", "psi"): {"psi": 1},
        ("sigma", "1"): {"sigma": 1},
        ("sigma", "sigma"): {"1": 1, "psi": 1},
        ("sigma", "psi"): {"sigma": 1},
        ("psi", "1"): {"psi": 1},
        ("psi", "sigma"): {"sigma": 1},
        ("psi", "psi"): {"1": 1},
    }
    n = lambda a, b, c: pairs[(a, b)].get(c, 0)
    fusion = [[a, b, c, m] for (a, b), cs in pairs.items() for c, m in cs.items()]
    s2 = 1 / math.sqrt(2)

    def fmat(a, b, c, d, lb, rb):
        if (a, b, c, d) == ("sigma", "sigma", "sigma", "sigma"):
            Fm = {
                ("1", "1"): s2,
                ("1", "psi"): s2,
                ("psi", "1"): s2,
                ("psi", "psi"): -s2,
            }
            return [[Fm[(e, f)] for (f, _, _) in rb] for (e, _, _) in lb]
        if (a, b, c, d) in (("psi", "sigma", "psi", "sigma"), ("sigma", "psi", "sigma", "psi")):
            return [[-1.0]]
        return np.eye(len(lb)).tolist()

    nu = 1

    def rval(a, b, c):
        if (a, b) == ("sigma", "sigma"):
            return np.exp(-1j * nu * np.pi / 8) if c == "1" else np.exp(3j * nu * np.pi / 8)
        if (a, b) in (("sigma", "psi"), ("psi", "sigma")):
            return (-1j) ** nu
        if (a, b) == ("psi", "psi"):
            return -1.0
        return 1.0

    return {
        "labels": labels,
        "unit": "1",
        "dual": {"1": "1", "sigma": "sigma", "psi": "psi"},
        "fusion": fusion,
        "F": f_entries(labels, n, fmat),
        "R": r_entries(labels, n, rval),
        "pivotal": {"1": [1.0, 0.0], "sigma": [1.0, 0.0], "psi": [1.0, 0.0]},
        "tol": 1e-9,
    }


def make_vecz2_on_vec():
    """Vec as a module over Vec(Z/2): one simple m, both simples act by m."""
    return {
        "module_labels": ["m"],
        "action": [["1", "m", "m", 1], ["g", "m", "m", 1]],
        "module_associator": [
            {"labels": [a, b, "m", "m", e, "m"], "indices": [0, 0, 0, 0], "value": [1.0, 0.0]}
            for a in ["1", "g"]
            for b in ["1", "g"]
            for e in ["1", "g"]
            if {("1", "1"): "1", ("1", "g"): "g", ("g", "1"): "g", ("g", "g"): "1"}[(a, b)] == e
        ],
        "endofunctors": [
            {
                "name": "id",
                "object_map": {"m": {"m": 1}},
                "coherence": [
                    {"labels": [a, "m", "m", "m", "m"], "indices": [0, 0, 0, 0], "value": [1.0, 0.0]}
                    for a in ["1", "g"]
                ],
            },
            {
                "name": "chi",
                "object_map": {"m": {"m": 1}},
                "coherence": [
                    {"labels": [a, "m", "m", "m", "m"], "indices": [0, 0, 0, 0], "value": [v, 0.0]}
                    for a, v in [("1", 1.0), ("g", -1.0)]
                ],
            },
        ],
    }


def main():
    os.makedirs(OUT, exist_ok=True)
    cats = {
        "vec": make_vec(),
        "vecz2-plus": make_vecz2(+1.0),
        "vecz2-minus": make_vecz2(-1.0),
        "fib": make_fib(),
        "ising": make_ising(),
    }
    for name, raw in cats.items():
        cat, rep = category_from_dict(raw)
        print(f"{name}: pentagon={rep.pentagon:.2e} hexagon={rep.hexagon:.2e} snake={rep.snake:.2e}")
        with open(os.path.join(OUT, name + ".json"), "w", encoding="utf-8") as fh:
            json.dump(raw, fh, indent=1)
    z2cat, _ = category_from_dict(cats["vecz2-plus"])
    modraw = make_vecz2_on_vec()
    mod, res = module_from_dict(modraw, z2cat)
    print(f"vecz2-on-vec: mixed pentagon={res:.2e} endofunctors={sorted(mod.endofunctors)}")
    with open(os.path.join(OUT, "vecz2-on-vec.json"), "w", encoding="utf-8") as fh:
        json.dump(modraw, fh, indent=1)
    # twist sanity
    fib, _ = category_from_dict(cats["fib"])
    print("fib twist tau:", fib.twist("tau"), "expect exp(-4 pi i/5) =", np.exp(-4j * np.pi / 5))
    print("fib twist diagram:", fib.twist_diagram("tau"))
    ising, _ = category_from_dict(cats["ising"])
    print("ising twist sigma:", ising.twist("sigma"), "expect exp(-i pi/8)?", np.exp(-1j * np.pi / 8))
    print("ising twist diagram sigma:", ising.twist_diagram("sigma"))
    print("qdims fib:", {a: fib.qdim(a) for a in fib.labels})
    print("qdims ising:", {a: ising.qdim(a) for a in ising.labels})


if __name__ == "__main__":
    main()
