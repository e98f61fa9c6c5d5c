"""Module categories over a fusion category, internal homs, module endofunctors.

A module is skeletal: simple module labels, action multiplicities n_{a,s}^t and
a module associator (a (x) b) |> s  ->  a |> (b |> s) stored blockwise exactly
like F-symbols.  The regular module copies the fusion data.  Module
endofunctors carry an object map on simples plus coherence tensors
w_{a,s}: y(a |> s) -> a |> y(s); the action on morphisms, composites, duals and
natural-transformation spaces are derived linear algebra.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DataError,
    FusionCategory,
    Morphism,
    Vec,
    chain,
    compose,
    mid,
    mor_to_flat,
    flat_to_mor,
    mzero,
    residual,
    simple,
    vec,
    veq,
)


@dataclass
class ModuleData:
    cat: FusionCategory
    labels: tuple[str, ...]
    nact: dict[tuple[str, str, str], int]
    assoc: dict[tuple[str, str, str, str], np.ndarray]
    endofunctors: dict[str, "EndofunctorData"] = field(default_factory=dict)
    regular: bool = False

    # -- combinatorics ------------------------------------------------------

    def n(self, a: str, s: str, t: str) -> int:
        return self.nact.get((a, s, t), 0)

    def act_obj(self, A: Vec, m: Vec) -> Vec:
        out: Vec = {}
        for a, i in A.items():
            for s, j in m.items():
                for t in self.labels:
                    k = self.n(a, s, t)
                    if k:
                        out[t] = out.get(t, 0) + i * j * k
        return out

    def act_basis(self, A: Vec, m: Vec, t: str) -> list[tuple[str, int, str, int, int]]:
        out = []
        for a in self.cat.labels:
            for i in range(A.get(a, 0)):
                for s in self.labels:
                    for j in range(m.get(s, 0)):
                        for mu in range(self.n(a, s, t)):
                            out.append((a, i, s, j, mu))
        return out

    # -- elementary module morphisms -----------------------------------------

    def act_mor(self, f: Morphism, g: Morphism) -> Morphism:
        """f |> g for f a base morphism and g a module morphism."""
        src = self.act_obj(f.src, g.src)
        tgt = self.act_obj(f.tgt, g.tgt)
        blocks = {}
        for t in self.labels:
            sb = self.act_basis(f.src, g.src, t)
            tb = self.act_basis(f.tgt, g.tgt, t)
            if not sb or not tb:
                continue
            m = np.zeros((len(tb), len(sb)), dtype=complex)
            for col, (a, i, s, j, mu) in enumerate(sb):
                fa = f.blocks.get(a)
                gs = g.blocks.get(s)
                if fa is None or gs is None:
                    continue
                for row, (a2, i2, s2, j2, mu2) in enumerate(tb):
                    if a2 == a and s2 == s and mu2 == mu:
                        m[row, col] = fa[i2, i] * gs[j2, j]
            blocks[t] = m
        return Morphism(src, tgt, blocks)

    def vertex(self, a: str, s: str, t: str, mu: int = 0) -> Morphism:
        src = self.act_obj(simple(a), simple(s))
        m = np.zeros((1, src.get(t, 0)), dtype=complex)
        m[0, mu] = 1.0
        return Morphism(src, simple(t), {t: m})

    def covertex(self, a: str, s: str, t: str, mu: int = 0) -> Morphism:
        tgt = self.act_obj(simple(a), simple(s))
        m = np.zeros((tgt.get(t, 0), 1), dtype=complex)
        m[mu, 0] = 1.0
        return Morphism(simple(t), tgt, {t: m})

    def _lbasis(self, a, b, s, t):
        return [
            (e, mu, nu)
            for e in self.cat.labels
            for mu in range(self.cat.n(a, b, e))
            for nu in range(self.n(e, s, t))
        ]

    def _rbasis(self, a, b, s, t):
        return [
            (u, ka, la)
            for u in self.labels
            for ka in range(self.n(b, s, u))
            for la in range(self.n(a, u, t))
        ]

    def massoc(self, A: Vec, B: Vec, m: Vec, inverse: bool = False) -> Morphism:
        """(A (x) B) |> m -> A |> (B |> m) in canonical bases."""
        AB = self.cat.fuse(A, B)
        Bm = self.act_obj(B, m)
        src = self.act_obj(AB, m)
        tgt = self.act_obj(A, Bm)
        blocks = {}
        for t in self.labels:
            left = []
            for (e, ij, s, k, nu) in self.act_basis(AB, m, t):
                a, i, b, j, mu = self.cat.tens_basis(A, B, e)[ij]
                left.append((a, i, b, j, s, k, e, mu, nu))
            right = []
            for (a, i, u, jk, la) in self.act_basis(A, Bm, t):
                b, j, s, k, ka = self.act_basis(B, m, u)[jk]
                right.append((a, i, b, j, s, k, u, ka, la))
            if not left or not right:
                continue
            mat = np.zeros((len(right), len(left)), dtype=complex)
            for col, (a, i, b, j, s, k, e, mu, nu) in enumerate(left):
                fm = self.assoc.get((a, b, s, t))
                if fm is None:
                    continue
                lb = self._lbasis(a, b, s, t)
                rb = self._rbasis(a, b, s, t)
                ci = lb.index((e, mu, nu))
                for row, (a2, i2, b2, j2, s2, k2, u, ka, la) in enumerate(right):
                    if (a2, i2, b2, j2, s2, k2) == (a, i, b, j, s, k):
                        mat[row, col] = fm[rb.index((u, ka, la)), ci]
            blocks[t] = mat
        mor = Morphism(src, tgt, blocks)
        if inverse:
            return self.cat.invert(mor)
        return mor

    # -- validation ------------------------------------------------------------

    def mixed_pentagon_residual(self) -> float:
        return self.worst_mixed_pentagon()[0]

    def worst_mixed_pentagon(self):
        worst, arg = 0.0, None
        cat = self.cat
        for a in cat.labels:
            for b in cat.labels:
                for c in cat.labels:
                    for s in self.labels:
                        A, B, C, S = simple(a), simple(b), simple(c), simple(s)
                        r = residual(
                            chain(
                                self.massoc(cat.fuse(A, B), C, S),
                                self.massoc(A, B, self.act_obj(C, S)),
                            ),
                            chain(
                                self.act_mor(cat.associator(A, B, C), mid(S)),
                                self.massoc(A, cat.fuse(B, C), S),
                                self.act_mor(mid(A), self.massoc(B, C, S)),
                            ),
                        )
                        if r >= worst:
                            worst, arg = r, (a, b, c, s)
        return worst, arg

    def action_dim_residual(self) -> float:
        """|sum_t n_{a,s}^t d_t - d_a d_s| with module dims from the Perron vector."""
        dm = self.pf_module_dims()
        worst = 0.0
        for a in self.cat.labels:
            da = self.cat.pf_dim(a)
            for s in self.labels:
                lhs = sum(self.n(a, s, t) * dm[t] for t in self.labels)
                worst = max(worst, abs(lhs - da * dm[s]))
        return float(worst)

    def pf_module_dims(self) -> dict[str, float]:
        n = len(self.labels)
        mat = np.zeros((n, n))
        for j, s in enumerate(self.labels):
            for i, t in enumerate(self.labels):
                mat[i, j] = sum(self.cat.pf_dim(a) * self.n(a, s, t) for a in self.cat.labels)
        w, v = np.linalg.eig(mat)
        k = int(np.argmax(w.real))
        vk = np.abs(v[:, k].real)
        return {s: float(vk[i] / vk[0]) for i, s in enumerate(self.labels)}


# ---------------------------------------------------------------------------
# loading / presets


def regular_module(cat: FusionCategory) -> ModuleData:
    """The category acting on itself: labels, action and associator copied."""
    return ModuleData(
        cat=cat,
        labels=cat.labels,
        nact=dict(cat.N),
        assoc=dict(cat.F),
        regular=True,
    )


def module_from_dict(raw: dict, cat: FusionCategory) -> tuple[ModuleData, float]:
    try:
        labels = tuple(raw["module_labels"])
        action = raw["action"]
    except KeyError as exc:
        raise DataError(f"missing module field {exc}") from exc
    nact = {}
    for a, s, t, m in action:
        if a not in cat.labels or s not in labels or t not in labels:
            raise DataError(f"action entry names unknown label: {(a, s, t)}")
        nact[(a, s, t)] = int(m)
    for s in labels:
        for t in labels:
            if nact.get((cat.unit, s, t), 0) != (1 if s == t else 0):
                raise DataError("unit does not act trivially")

    mod = ModuleData(cat=cat, labels=labels, nact=nact, assoc={})
    assoc: dict[tuple[str, str, str, str], np.ndarray] = {}
    for a in cat.labels:
        for b in cat.labels:
            for s in labels:
                for t in labels:
                    lb = mod._lbasis(a, b, s, t)
                    rb = mod._rbasis(a, b, s, t)
                    if lb and rb:
                        assoc[(a, b, s, t)] = np.zeros((len(rb), len(lb)), dtype=complex)
    for entry in raw.get("module_associator", []):
        a, b, s, t, e, u = entry["labels"]
        mu, nu, ka, la = entry["indices"]
        re, im = entry["value"]
        key = (a, b, s, t)
        if key not in assoc:
            raise DataError(f"module associator entry on empty block {key}")
        lb = mod._lbasis(*key)
        rb = mod._rbasis(*key)
        assoc[key][rb.index((u, ka, la)), lb.index((e, mu, nu))] = re + 1j * im
    mod.assoc = assoc

    res, arg = mod.worst_mixed_pentagon()
    if res > cat.tol:
        raise DataError(f"mixed pentagon residual {res:.3e} > tol at {arg}")

    for entry in raw.get("endofunctors", []):
        eff = _endofunctor_from_dict(entry, mod)
        mod.endofunctors[eff.name] = eff
    return mod, res


def load_module(path: str, cat: FusionCategory) -> tuple[ModuleData, float]:
    with open(path, encoding="utf-8") as fh:
        return module_from_dict(json.load(fh), cat)


# ---------------------------------------------------------------------------
# internal hom


def internal_hom(mod: ModuleData, m: str, n: str) -> Vec:
    """[m, n]_X as a multiplicity vector over the base labels."""
    if m not in mod.labels or n not in mod.labels:
        raise DataError(f"unknown module labels ({m}, {n})")
    return vec({x: mod.n(x, m, n) for x in mod.cat.labels})


def internal_hom_obj(mod: ModuleData, m: Vec, n: Vec) -> Vec:
    out: Vec = {}
    for s, i in m.items():
        for t, j in n.items():
            for x, k in internal_hom(mod, s, t).items():
                out[x] = out.get(x, 0) + i * j * k
    return vec(out)


# ---------------------------------------------------------------------------
# module endofunctors


@dataclass
class EndofunctorData:
    mod: ModuleData
    name: str
    obj: dict[str, Vec]  # s -> y(s)
    coh: dict[tuple[str, str], Morphism]  # (a, s) -> w_{a,s}: y(a|>s) -> a|>y(s)

    # slot convention: y(V) at u has ordered basis (s, i < V[s], j < obj[s][u])

    def of_obj(self, V: Vec) -> Vec:
        out: Vec = {}
        for s, i in V.items():
            for u, j in self.obj.get(s, {}).items():
                out[u] = out.get(u, 0) + i * j
        return vec(out)

    def slot_basis(self, V: Vec, u: str) -> list[tuple[str, int, int]]:
        return [
            (s, i, j)
            for s in self.mod.labels
            for i in range(V.get(s, 0))
            for j in range(self.obj.get(s, {}).get(u, 0))
        ]

    def of_mor(self, f: Morphism) -> Morphism:
        src = self.of_obj(f.src)
        tgt = self.of_obj(f.tgt)
        blocks = {}
        for u in self.mod.labels:
            sb = self.slot_basis(f.src, u)
            tb = self.slot_basis(f.tgt, u)
            if not sb or not tb:
                continue
            m = np.zeros((len(tb), len(sb)), dtype=complex)
            for col, (s, i, j) in enumerate(sb):
                fs = f.blocks.get(s)
                if fs is None:
                    continue
                for row, (s2, i2, j2) in enumerate(tb):
                    if s2 == s and j2 == j:
                        m[row, col] = fs[i2, i]
            blocks[u] = m
        return Morphism(src, tgt, blocks)

    def include(self, s: str, t: str, j: int) -> Morphism:
        """Copy inclusion t -> y(s) onto the j-th t-summand."""
        tgt = self.obj[s]
        m = np.zeros((tgt.get(t, 0), 1), dtype=complex)
        m[j, 0] = 1.0
        return Morphism(simple(t), tgt, {t: m})

    def project(self, s: str, t: str, j: int) -> Morphism:
        src = self.obj[s]
        m = np.zeros((1, src.get(t, 0)), dtype=complex)
        m[0, j] = 1.0
        return Morphism(src, simple(t), {t: m})

    def coherence(self, A: Vec, m: Vec) -> Morphism:
        """w_{A,m}: y(A |> m) -> A |> y(m) for composite arguments."""
        mod = self.mod
        Am = mod.act_obj(A, m)
        src_obj = self.of_obj(Am)
        tgt_obj = mod.act_obj(A, self.of_obj(m))
        blocks = {}
        for u in mod.labels:
            sb = self.slot_basis(Am, u)
            tb = mod.act_basis(A, self.of_obj(m), u)
            if not sb or not tb:
                continue
            mat = np.zeros((len(tb), len(sb)), dtype=complex)
            for col, (t, idx, j) in enumerate(sb):
                a, i, s, k, mu = mod.act_basis(A, m, t)[idx]
                w = self.coh[(a, s)]
                wb = w.blocks.get(u)
                if wb is None:
                    continue
                wsrc = self.slot_basis(mod.act_obj(simple(a), simple(s)), u)
                wtgt = mod.act_basis(simple(a), self.of_obj(simple(s)), u)
                ci = wsrc.index((t, mu, j))
                for row, (a2, i2, up, jk, nup) in enumerate(tb):
                    if a2 != a or i2 != i:
                        continue
                    s3, k3, j3 = self.slot_basis(m, up)[jk]
                    if s3 != s or k3 != k:
                        continue
                    ri = wtgt.index((a, 0, up, self.slot_basis(simple(s), up).index((s, 0, j3)), nup))
                    mat[row, col] = wb[ri, ci]
            blocks[u] = mat
        return Morphism(src_obj, tgt_obj, blocks)

    def validate(self) -> float:
        """Max residual of w_{1,s} = id and the coherence squares."""
        mod = self.mod
        cat = mod.cat
        worst = 0.0
        for s in mod.labels:
            w1 = self.coh[(cat.unit, s)]
            worst = max(worst, residual(w1, mid(self.of_obj(simple(s)))))
        for a in cat.labels:
            for b in cat.labels:
                for s in mod.labels:
                    A, B, S = simple(a), simple(b), simple(s)
                    lhs = chain(
                        self.of_mor(mod.massoc(A, B, S)),
                        self.coherence(A, mod.act_obj(B, S)),
                        mod.act_mor(mid(A), self.coherence(B, S)),
                    )
                    rhs = chain(
                        self.coherence(cat.fuse(A, B), S),
                        mod.massoc(A, B, self.of_obj(S)),
                    )
                    worst = max(worst, residual(lhs, rhs))
        return worst


def endofunctor_from_object(mod: ModuleData, y0: Vec | str) -> EndofunctorData:
    """s |-> s (x) y0 on the regular module, coherence from the associator."""
    if not mod.regular:
        raise DataError("endofunctor_from_object requires the regular module")
    if isinstance(y0, str):
        y0 = simple(y0)
    cat = mod.cat
    obj = {s: cat.fuse(simple(s), y0) for s in mod.labels}
    name = "(-)x(" + "+".join(f"{m}.{l}" for l, m in sorted(y0.items())) + ")"
    eff = EndofunctorData(mod, name, obj, {})
    for a in cat.labels:
        for s in mod.labels:
            eff.coh[(a, s)] = cat.associator(simple(a), simple(s), y0)
    return eff


def identity_endofunctor(mod: ModuleData) -> EndofunctorData:
    obj = {s: simple(s) for s in mod.labels}
    eff = EndofunctorData(mod, "id", obj, {})
    for a in mod.cat.labels:
        for s in mod.labels:
            eff.coh[(a, s)] = mid(mod.act_obj(simple(a), simple(s)))
    return eff


def compose_perm(y: EndofunctorData, z: EndofunctorData, comp: EndofunctorData, V: Vec) -> Morphism:
    """Permutation comp(V) -> z(y(V)) between composite and nested slot orders."""
    mod = y.mod
    obj = comp.of_obj(V)
    W = y.of_obj(V)
    blocks = {}
    for u in mod.labels:
        sb = comp.slot_basis(V, u)  # (s, i, j) with j indexing z(y(s)) at u
        tb = z.slot_basis(W, u)  # (t, iW, l) with iW indexing W = y(V) at t
        if not sb:
            continue
        m = np.zeros((len(tb), len(sb)), dtype=complex)
        for col, (s, i, j) in enumerate(sb):
            # unfold j through z(y(s)) at u: (t, k < y.obj[s][t], l < z.obj[t][u])
            t, k, l = z.slot_basis(y.obj[s], u)[j]
            iW = y.slot_basis(V, t).index((s, i, k))
            m[tb.index((t, iW, l)), col] = 1.0
        blocks[u] = m
    return Morphism(obj, obj, blocks)  # same multiplicity vector, permuted basis


def efun_compose(y: EndofunctorData, z: EndofunctorData) -> EndofunctorData:
    """The endofunctor "apply y first, then z"."""
    mod = y.mod
    obj = {s: z.of_obj(y.obj[s]) for s in mod.labels}
    eff = EndofunctorData(mod, f"({z.name}*{y.name})", obj, {})
    for a in mod.cat.labels:
        for s in mod.labels:
            A, S = simple(a), simple(s)
            aS = mod.act_obj(A, S)
            p_src = compose_perm(y, z, eff, aS)
            p_tgt = compose_perm(y, z, eff, S)
            core = chain(
                z.of_mor(y.coh[(a, s)]),
                z.coherence(A, y.obj[s]),
            )
            eff.coh[(a, s)] = chain(p_src, core, mod.act_mor(mid(A), _perm_inv(p_tgt)))
    return eff


def _perm_inv(p: Morphism) -> Morphism:
    return Morphism(p.tgt, p.src, {c: b.T.conj() for c, b in p.blocks.items()})


def _endofunctor_from_dict(entry: dict, mod: ModuleData) -> EndofunctorData:
    name = entry["name"]
    obj = {s: vec({u: int(k) for u, k in entry["object_map"].get(s, {}).items()}) for s in mod.labels}
    eff = EndofunctorData(mod, name, obj, {})
    mats: dict[tuple[str, str], Morphism] = {}
    for a in mod.cat.labels:
        for s in mod.labels:
            src = eff.of_obj(mod.act_obj(simple(a), simple(s)))
            tgt = mod.act_obj(simple(a), eff.of_obj(simple(s)))
            mats[(a, s)] = mzero(src, tgt)
    for item in entry.get("coherence", []):
        a, s, t, u2, u = item["labels"]
        mu, j, k, nu = item["indices"]
        re, im = item["value"]
        m = mats[(a, s)]
        wsrc = eff.slot_basis(mod.act_obj(simple(a), simple(s)), u)
        wtgt = mod.act_basis(simple(a), eff.of_obj(simple(s)), u)
        blk = m.blocks.setdefault(u, np.zeros((len(wtgt), len(wsrc)), dtype=complex))
        ri = wtgt.index((a, 0, u2, eff.slot_basis(simple(s), u2).index((s, 0, k)), nu))
        blk[ri, wsrc.index((t, mu, j))] = re + 1j * im
    eff.coh = mats
    bad = eff.validate()
    if bad > mod.cat.tol:
        raise DataError(f"endofunctor {name}: coherence residual {bad:.3e} > tol")
    return eff


# ---------------------------------------------------------------------------
# natural transformations between endofunctors


def nt_component(table: dict[str, Morphism], yf: EndofunctorData, zf: EndofunctorData, V: Vec) -> Morphism:
    """Extend a simple-indexed family nu_s: y(s) -> z(s) to y(V) -> z(V)."""
    mod = yf.mod
    src = yf.of_obj(V)
    tgt = zf.of_obj(V)
    blocks = {}
    for u in mod.labels:
        sb = yf.slot_basis(V, u)
        tb = zf.slot_basis(V, u)
        if not sb or not tb:
            continue
        m = np.zeros((len(tb), len(sb)), dtype=complex)
        for col, (s, i, j) in enumerate(sb):
            blk = table[s].blocks.get(u)
            if blk is None:
                continue
            ys = yf.slot_basis(simple(s), u)
            zs = zf.slot_basis(simple(s), u)
            for row, (s2, i2, j2) in enumerate(tb):
                if s2 == s and i2 == i:
                    m[row, col] = blk[zs.index((s, 0, j2)), ys.index((s, 0, j))]
        blocks[u] = m
    return Morphism(src, tgt, blocks)


def nat_residual(table: dict[str, Morphism], yf: EndofunctorData, zf: EndofunctorData) -> float:
    """Max deviation of the module-naturality squares for the family."""
    mod = yf.mod
    worst = 0.0
    for a in mod.cat.labels:
        for s in mod.labels:
            A, S = simple(a), simple(s)
            lhs = chain(yf.coh[(a, s)], mod.act_mor(mid(A), table[s]))
            rhs = chain(nt_component(table, yf, zf, mod.act_obj(A, S)), zf.coh[(a, s)])
            worst = max(worst, residual(lhs, rhs))
    return worst


def nat_transf_space(yf: EndofunctorData, zf: EndofunctorData) -> list[dict[str, Morphism]]:
    """Basis of the space of module natural transformations y => z."""
    mod = yf.mod
    labels = mod.labels
    comp_dims = [(s, yf.obj[s], zf.obj[s]) for s in labels]
    dim = sum(sum(zv.get(u, 0) * yv.get(u, 0) for u in labels) for _, yv, zv in comp_dims)
    if dim == 0:
        return []

    def unflat(xv) -> dict[str, Morphism]:
        out = {}
        k = 0
        for s, yv, zv in comp_dims:
            n = sum(zv.get(u, 0) * yv.get(u, 0) for u in labels)
            out[s] = flat_to_mor(xv[k : k + n], yv, zv, labels)
            k += n
        return out

    cols = []
    basis = np.eye(dim, dtype=complex)
    for icol in range(dim):
        table = unflat(basis[icol])
        parts = []
        for a in mod.cat.labels:
            for s in labels:
                A, S = simple(a), simple(s)
                lhs = chain(yf.coh[(a, s)], mod.act_mor(mid(A), table[s]))
                rhs = chain(nt_component(table, yf, zf, mod.act_obj(A, S)), zf.coh[(a, s)])
                parts.append(mor_to_flat(lhs + (-1.0) * rhs, labels))
        cols.append(np.concatenate(parts))
    M = np.array(cols).T
    if M.shape[0] == 0:
        null = np.eye(dim, dtype=complex)
    else:
        _, sv, vh = np.linalg.svd(M)
        rank = int((sv > 1e-9).sum())
        null = vh[rank:].conj()
    return [unflat(x) for x in null]


def nat_transf_dim(yf: EndofunctorData, zf: EndofunctorData) -> int:
    return len(nat_transf_space(yf, zf))


# ---------------------------------------------------------------------------
# duals of endofunctors


@dataclass
class EndofunctorDual:
    """Adjoint data: ev: (y* after y) => id and coev: id => (y after y*)."""

    y: EndofunctorData
    ystar: EndofunctorData
    ev: dict[str, Morphism]  # y*(y(s)) -> s
    coev: dict[str, Morphism]  # s -> y(y*(s))
    comp_ev: EndofunctorData = None
    comp_coev: EndofunctorData = None

    def __post_init__(self):
        if self.comp_ev is None:
            self.comp_ev = efun_compose(self.y, self.ystar)
        if self.comp_coev is None:
            self.comp_coev = efun_compose(self.ystar, self.y)

    def ev_at(self, V: Vec) -> Morphism:
        return nt_component(self.ev, self.comp_ev, identity_endofunctor(self.y.mod), V)

    def coev_at(self, V: Vec) -> Morphism:
        return nt_component(self.coev, identity_endofunctor(self.y.mod), self.comp_coev, V)

    def snake_residual(self) -> float:
        y, ys = self.y, self.ystar
        worst = 0.0
        for s in y.mod.labels:
            V = y.of_obj(simple(s))
            lhs = chain(
                self.coev_at(V),
                compose_perm(ys, y, self.comp_coev, V),
                y.of_mor(self.ev[s]),
            )
            worst = max(worst, residual(lhs, mid(V)))
            W = ys.of_obj(simple(s))
            rhs = chain(
                ys.of_mor(self.coev[s]),
                _perm_inv(compose_perm(y, ys, self.comp_ev, W)),
                self.ev_at(W),
            )
            worst = max(worst, residual(rhs, mid(W)))
        return worst


def endofunctor_dual(y: EndofunctorData) -> EndofunctorDual:
    """Adjoint endofunctor with ev/coev satisfying the snake equations."""
    mod = y.mod
    if mod.regular and y.name.startswith("(-)x("):
        return _regular_dual(y)
    if y.name == "id":
        ident = identity_endofunctor(mod)
        table = {s: mid(simple(s)) for s in mod.labels}
        return EndofunctorDual(y, ident, table, dict(table))
    obj = {s: vec({u: y.obj.get(u, {}).get(s, 0) for u in mod.labels}) for s in mod.labels}
    cands = [
        eff for eff in mod.endofunctors.values() if all(veq(eff.obj[s], obj[s]) for s in mod.labels)
    ]
    errs = []
    for ystar in cands:
        try:
            return _solve_dual(y, ystar)
        except DataError as exc:
            errs.append(str(exc))
    raise DataError(f"no adjoint found for {y.name}: {errs or 'no candidate object map'}")


def obj_ev_r(cat: FusionCategory, V: Vec) -> Morphism:
    """Right evaluation V (x) dual(V) -> 1 of a multiplicity vector, summandwise."""
    DV = cat.dual_vec(V)
    src = cat.fuse(V, DV)
    blocks = {}
    sb = cat.tens_basis(V, DV, cat.unit)
    m = np.zeros((1, len(sb)), dtype=complex)
    for col, (a, i, b, j, mu) in enumerate(sb):
        if b == cat.dual[a] and i == j:
            m[0, col] = cat.pivotal[a] * cat.ev_coeff[cat.dual[a]]
    if sb:
        blocks[cat.unit] = m
    return Morphism(src, simple(cat.unit), blocks)


def obj_coev_r(cat: FusionCategory, V: Vec) -> Morphism:
    """Right coevaluation 1 -> dual(V) (x) V, summandwise."""
    DV = cat.dual_vec(V)
    tgt = cat.fuse(DV, V)
    blocks = {}
    tb = cat.tens_basis(DV, V, cat.unit)
    m = np.zeros((len(tb), 1), dtype=complex)
    for row, (ad, i, a, j, mu) in enumerate(tb):
        if ad == cat.dual[a] and i == j:
            m[row, 0] = 1.0 / cat.pivotal[a]
    if tb:
        blocks[cat.unit] = m
    return Morphism(simple(cat.unit), tgt, blocks)


def _regular_dual(y: EndofunctorData) -> EndofunctorDual:
    """Dual of (-) (x) y0 is (-) (x) dual(y0), with summandwise evaluations."""
    mod = y.mod
    cat = mod.cat
    y0 = y.obj[cat.unit]
    y0d = cat.dual_vec(y0)
    ystar = endofunctor_from_object(mod, y0d)
    ev, coev = {}, {}
    for s in mod.labels:
        S = simple(s)
        ev[s] = chain(
            cat.associator(S, y0, y0d),
            cat.tensor(mid(S), obj_ev_r(cat, y0)),
        )
        coev[s] = chain(
            cat.tensor(mid(S), obj_coev_r(cat, y0)),
            cat.associator(S, y0d, y0, inverse=True),
        )
    dual = EndofunctorDual(y, ystar, ev, coev)
    bad = dual.snake_residual()
    if bad > cat.tol:
        raise DataError(f"regular dual snakes fail: {bad:.3e}")
    return dual


def _solve_dual(y: EndofunctorData, ystar: EndofunctorData) -> EndofunctorDual:
    """Solve for (co)ev of a supplied dual candidate from naturality + snakes."""
    mod = y.mod
    ident = identity_endofunctor(mod)
    sy = efun_compose(y, ystar)
    ys_ = efun_compose(ystar, y)
    evs = nat_transf_space(sy, ident)
    coevs = nat_transf_space(ident, ys_)
    if not evs or not coevs:
        raise DataError("no natural (co)evaluation candidates")
    # pick ev = first basis vector; solve the snake for coev coefficients
    ev = evs[0]
    nco = len(coevs)
    rows = []
    rhs = []
    for s in mod.labels:
        V = y.of_obj(simple(s))
        dual0 = EndofunctorDual(y, ystar, ev, coevs[0], comp_ev=sy, comp_coev=ys_)
        target = mor_to_flat(mid(V), mod.labels)
        cols = []
        for c in coevs:
            d = EndofunctorDual(y, ystar, ev, c, comp_ev=sy, comp_coev=ys_)
            lhs = chain(d.coev_at(V), y.of_mor(ev[s]))
            cols.append(mor_to_flat(lhs, mod.labels))
        rows.append(np.array(cols).T)
        rhs.append(target)
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    coev = {}
    for s in mod.labels:
        acc = coevs[0][s] * complex(sol[0])
        for k in range(1, nco):
            acc = acc + coevs[k][s] * complex(sol[k])
        coev[s] = acc
    dual = EndofunctorDual(y, ystar, ev, coev, comp_ev=sy, comp_coev=ys_)
    bad = dual.snake_residual()
    if bad > mod.cat.tol:
        raise DataError(f"dual candidate snakes fail: {bad:.3e}")
    return dual
