"""The relative Deligne product M^op x_A M in the ladder model.

Objects are ordered lists of slot pairs (s, t); a morphism component between a
source slot (s, t) and a target slot (u, v) over a rung label a is a block in
Hom(u, a |> s) (x) Hom(a |> t, v), stored in "mate form" (the op-side leg is the
left-duality mate of the spec's Hom(a* |> u, s), recovered by `to_std_legs`).
Composition stacks rungs and resplits b (x) a through the fusion vertex bases;
with composition-orthonormal bases the idempotent e carries the closed-form
weights d_a / sum d^2, certified at build time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import DataError, Morphism, Vec, chain, mid, simple, vec
from .modcat import EndofunctorData, ModuleData

Slot = tuple[str, str]
LadderObject = tuple[Slot, ...]


@dataclass
class LadderMorphism:
    mod: ModuleData
    src: LadderObject
    tgt: LadderObject
    comps: dict[tuple[int, int, str], np.ndarray] = field(default_factory=dict)

    def comp(self, qi: int, pi: int, a: str) -> np.ndarray:
        m = self.comps.get((qi, pi, a))
        if m is not None:
            return m
        s, t = self.src[pi]
        u, v = self.tgt[qi]
        mod = self.mod
        return np.zeros((mod.n(a, s, u), mod.n(a, t, v)), dtype=complex)

    def __add__(self, other: "LadderMorphism") -> "LadderMorphism":
        if self.src != other.src or self.tgt != other.tgt:
            raise DataError("ladder addition: object mismatch")
        keys = set(self.comps) | set(other.comps)
        return LadderMorphism(
            self.mod, self.src, self.tgt, {k: self.comp(*k) + other.comp(*k) for k in keys}
        )

    def __mul__(self, z: complex) -> "LadderMorphism":
        return LadderMorphism(self.mod, self.src, self.tgt, {k: z * m for k, m in self.comps.items()})

    __rmul__ = __mul__

    def norm(self) -> float:
        return max((float(np.abs(m).max()) for m in self.comps.values() if m.size), default=0.0)

    def prune(self, eps: float = 1e-14) -> "LadderMorphism":
        comps = {k: m for k, m in self.comps.items() if m.size and np.abs(m).max() > eps}
        return LadderMorphism(self.mod, self.src, self.tgt, comps)


def lzero(mod: ModuleData, src: LadderObject, tgt: LadderObject) -> LadderMorphism:
    return LadderMorphism(mod, src, tgt, {})


def lid(mod: ModuleData, obj: LadderObject) -> LadderMorphism:
    unit = mod.cat.unit
    comps = {}
    for i, (s, t) in enumerate(obj):
        comps[(i, i, unit)] = np.eye(1, dtype=complex)
    return LadderMorphism(mod, obj, obj, comps)


def lresidual(f: LadderMorphism, g: LadderMorphism) -> float:
    if f.src != g.src or f.tgt != g.tgt:
        raise DataError("ladder residual: object mismatch")
    keys = set(f.comps) | set(g.comps)
    return max((float(np.abs(f.comp(*k) - g.comp(*k)).max()) for k in keys), default=0.0)


# ---------------------------------------------------------------------------
# composition (stacking)

_STACK_CACHE: dict = {}


def _stack_tensors(mod: ModuleData, a: str, b: str, c: str, s: str, u: str, w: str, t: str, v: str, z: str):
    """Recoupling tensors for stacking rung a (lower) then rung b (upper).

    Returns (A, B) with
      A[j, k2, k, kout]: op legs,  j < N(b,a,c), k2 < n(b,u,w), k < n(a,s,u), kout < n(c,s,w)
      B[j, l2, l, lout]: module legs, l2 < n(b,v,z), l < n(a,t,v), lout < n(c,t,z)
    """
    key = (id(mod), a, b, c, s, u, w, t, v, z)
    hit = _STACK_CACHE.get(key)
    if hit is not None:
        return hit
    cat = mod.cat
    nj = cat.n(b, a, c)
    A = np.zeros((nj, mod.n(b, u, w), mod.n(a, s, u), mod.n(c, s, w)), dtype=complex)
    B = np.zeros((nj, mod.n(b, v, z), mod.n(a, t, v), mod.n(c, t, z)), dtype=complex)
    if 0 in A.shape or 0 in B.shape:
        _STACK_CACHE[key] = (A, B)
        return A, B
    Bs, As, Ss, Ts = simple(b), simple(a), simple(s), simple(t)
    K1 = mod.massoc(Bs, As, Ss, inverse=True)  # b|>(a|>s) -> (ba)|>s
    src_basis = mod.act_basis(Bs, mod.act_obj(As, Ss), w)
    for j in range(nj):
        M = chain(K1, mod.act_mor(cat.vertex(b, a, c, j), mid(Ss)))
        blk = M.blocks.get(w)
        if blk is not None:
            for k2 in range(mod.n(b, u, w)):
                for k in range(mod.n(a, s, u)):
                    col = src_basis.index((b, 0, u, _as_index(mod, As, Ss, u, k), k2))
                    A[j, k2, k, :] = blk[:, col]
    K2 = mod.massoc(Bs, As, Ts)  # (ba)|>t -> b|>(a|>t)
    tgt_basis = mod.act_basis(Bs, mod.act_obj(As, Ts), z)
    for j in range(nj):
        M = chain(mod.act_mor(cat.covertex(b, a, c, j), mid(Ts)), K2)
        blk = M.blocks.get(z)
        if blk is not None:
            for l2 in range(mod.n(b, v, z)):
                for l in range(mod.n(a, t, v)):
                    row = tgt_basis.index((b, 0, v, _as_index(mod, As, Ts, v, l), l2))
                    B[j, l2, l, :] = blk[row, :]
    _STACK_CACHE[key] = (A, B)
    return A, B


def _as_index(mod: ModuleData, As: Vec, Ss: Vec, u: str, k: int) -> int:
    basis = mod.act_basis(As, Ss, u)
    (a,) = As
    (s,) = Ss
    return basis.index((a, 0, s, 0, k))


def lcompose(f: LadderMorphism, g: LadderMorphism) -> LadderMorphism:
    """Stack f (lower) then g (upper); requires tgt(f) = src(g)."""
    if f.tgt != g.src:
        raise DataError("ladder compose: object mismatch")
    mod = f.mod
    cat = mod.cat
    out = lzero(mod, f.src, g.tgt)
    acc: dict[tuple[int, int, str], np.ndarray] = {}
    for (qi, pi, a), X in f.comps.items():
        s, t = f.src[pi]
        u, v = f.tgt[qi]
        for (ri, qi2, b), Y in g.comps.items():
            if qi2 != qi:
                continue
            w, z = g.tgt[ri]
            for c in cat.labels:
                if not cat.n(b, a, c):
                    continue
                A, B = _stack_tensors(mod, a, b, c, s, u, w, t, v, z)
                if 0 in A.shape or 0 in B.shape:
                    continue
                # out[kout, lout] = X[k,l] Y[k2,l2] A[j,k2,k,kout] B[j,l2,l,lout]
                m = np.einsum("kl,mn,jmkp,jnlq->pq", X, Y, A, B, optimize=True)
                if np.abs(m).max() < 1e-300:
                    continue
                key = (ri, pi, c)
                if key in acc:
                    acc[key] = acc[key] + m
                else:
                    acc[key] = m
    out.comps = {k: m for k, m in acc.items() if np.abs(m).max() > 0}
    return out


def lchain(*fs: LadderMorphism) -> LadderMorphism:
    out = fs[0]
    for f in fs[1:]:
        out = lcompose(out, f)
    return out


# ---------------------------------------------------------------------------
# conversion to the spec's component convention (and debug dump)


def mate_matrix(mod: ModuleData, a: str, u: str, s: str) -> np.ndarray:
    """Matrix of Hom(a*|>u, s) -> Hom(u, a|>s), phi -> (a|>phi).massoc.(coev|>u)."""
    cat = mod.cat
    ad = cat.dual[a]
    As, Ads, Us = simple(a), simple(ad), simple(u)
    n_std = mod.n(ad, u, s)
    n_mate = mod.n(a, s, u)
    out = np.zeros((n_mate, n_std), dtype=complex)
    pre = chain(
        mod.act_mor(cat.coev(a), mid(Us)),
        mod.massoc(As, Ads, Us),
    )  # u -> a |> (a* |> u)
    for i in range(n_std):
        m = chain(pre, mod.act_mor(mid(As), mod.vertex(ad, u, s, i)))
        blk = m.blocks.get(u)
        if blk is None:
            continue
        basis = mod.act_basis(As, simple(s), u)
        for k in range(n_mate):
            out[k, i] = blk[basis.index((a, 0, s, 0, k)), 0]
    return out


def to_std_legs(f: LadderMorphism) -> dict:
    """Components re-expressed over Hom(a*|>u, s) (x) Hom(a|>t, v) bases."""
    mod = f.mod
    out = {}
    for (qi, pi, a), m in f.comps.items():
        s, t = f.src[pi]
        u, v = f.tgt[qi]
        C = mate_matrix(mod, a, u, s)
        std = np.linalg.lstsq(C, m, rcond=None)[0] if C.size else m
        out[(qi, pi, a)] = std
    return out


def dump_json(f: LadderMorphism) -> str:
    std = to_std_legs(f)
    items = []
    for (qi, pi, a), m in sorted(std.items()):
        items.append(
            {
                "source_pair": list(f.src[pi]),
                "target_pair": list(f.tgt[qi]),
                "rung": a,
                "block": [[[float(z.real), float(z.imag)] for z in row] for row in m],
            }
        )
    return json.dumps({"components": items}, indent=1)


# ---------------------------------------------------------------------------
# the idempotent e and its splitting


def diagonal_object(mod: ModuleData) -> LadderObject:
    return tuple((s, s) for s in mod.labels)


@dataclass
class IdempotentReport:
    weights: dict[str, complex]
    residual: float
    refined: bool


def build_idempotent_e(mod: ModuleData, report: bool = False):
    """e on (+)_s (s, s): canonical dual-basis element with certified weights."""
    cat = mod.cat
    D2 = cat.global_dim2()
    weights = {a: cat.qdim(a) / D2 for a in cat.labels}
    e = _e_from_weights(mod, weights)
    res = lresidual(lcompose(e, e), e)
    refined = False
    if res > cat.tol:
        weights, res = _refine_weights(mod, weights)
        e = _e_from_weights(mod, weights)
        refined = True
        if res > cat.tol:
            raise DataError(f"idempotent normalization search failed: residual {res:.3e}")
    if report:
        return e, IdempotentReport(weights, res, refined)
    return e


def _e_from_weights(mod: ModuleData, weights) -> LadderMorphism:
    obj = diagonal_object(mod)
    comps = {}
    for pi, (s, _s) in enumerate(obj):
        for qi, (t, _t) in enumerate(obj):
            for a in mod.cat.labels:
                n = mod.n(a, s, t)
                if n:
                    comps[(qi, pi, a)] = weights[a] * np.eye(n, dtype=complex)
    return LadderMorphism(mod, obj, obj, comps)


def _refine_weights(mod: ModuleData, seed):
    from scipy.optimize import least_squares

    labels = list(mod.cat.labels)

    def unpack(x):
        return {a: x[2 * i] + 1j * x[2 * i + 1] for i, a in enumerate(labels)}

    def fun(x):
        w = unpack(x)
        e = _e_from_weights(mod, w)
        d = lcompose(e, e) + (-1.0) * e
        parts = []
        for m in d.comps.values():
            parts.append(np.concatenate([m.real.ravel(), m.imag.ravel()]))
        return np.concatenate(parts) if parts else np.zeros(1)

    x0 = np.zeros(2 * len(labels))
    for i, a in enumerate(labels):
        x0[2 * i] = np.real(seed[a])
        x0[2 * i + 1] = np.imag(seed[a])
    sol = least_squares(fun, x0, xtol=1e-15, ftol=1e-15)
    w = unpack(sol.x)
    e = _e_from_weights(mod, w)
    return w, lresidual(lcompose(e, e), e)


@dataclass
class KaroubiObject:
    """Formal splitting of an idempotent ladder endomorphism."""

    carrier: LadderObject
    idem: LadderMorphism

    def check(self, tol: float) -> float:
        r = lresidual(lcompose(self.idem, self.idem), self.idem)
        if r > tol:
            raise DataError(f"not idempotent: residual {r:.3e}")
        return r


def karoubi_split(e: LadderMorphism, tol: float | None = None) -> KaroubiObject:
    tol = e.mod.cat.tol if tol is None else tol
    k = KaroubiObject(e.src, e)
    k.check(tol)
    return k


# ---------------------------------------------------------------------------
# ladder hom spaces (flattening, compression dimensions)


def hom_keys(mod: ModuleData, src: LadderObject, tgt: LadderObject):
    keys = []
    for qi, (u, v) in enumerate(tgt):
        for pi, (s, t) in enumerate(src):
            for a in mod.cat.labels:
                n1, n2 = mod.n(a, s, u), mod.n(a, t, v)
                if n1 and n2:
                    keys.append(((qi, pi, a), (n1, n2)))
    return keys


def hom_dim(mod: ModuleData, src: LadderObject, tgt: LadderObject) -> int:
    return sum(n1 * n2 for _, (n1, n2) in hom_keys(mod, src, tgt))


def lflatten(f: LadderMorphism) -> np.ndarray:
    keys = hom_keys(f.mod, f.src, f.tgt)
    parts = [f.comp(*k).ravel() for k, _ in keys]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def lunflatten(mod: ModuleData, src: LadderObject, tgt: LadderObject, x: np.ndarray) -> LadderMorphism:
    keys = hom_keys(mod, src, tgt)
    comps = {}
    k0 = 0
    for k, (n1, n2) in keys:
        n = n1 * n2
        if n:
            comps[k] = x[k0 : k0 + n].reshape(n1, n2)
        k0 += n
    return LadderMorphism(mod, src, tgt, comps)


def split_hom_dim_out(K: KaroubiObject, tgt: LadderObject) -> int:
    """dim { f: carrier -> tgt with f.e = f } via the rank of precomposition."""
    mod = K.idem.mod
    d = hom_dim(mod, K.carrier, tgt)
    if d == 0:
        return 0
    cols = []
    eye = np.eye(d, dtype=complex)
    for i in range(d):
        f = lunflatten(mod, K.carrier, tgt, eye[i])
        cols.append(lflatten(lcompose(K.idem, f)))
    P = np.array(cols).T
    tr = np.trace(P)
    n = int(round(tr.real))
    if abs(tr - n) > 1e-6:
        raise DataError(f"precomposition operator not idempotent-like: trace {tr}")
    return n


def split_hom_dim_in(K: KaroubiObject, src: LadderObject) -> int:
    """dim { f: src -> carrier with e.f = f }."""
    mod = K.idem.mod
    d = hom_dim(mod, src, K.carrier)
    if d == 0:
        return 0
    cols = []
    eye = np.eye(d, dtype=complex)
    for i in range(d):
        f = lunflatten(mod, src, K.carrier, eye[i])
        cols.append(lflatten(lcompose(f, K.idem)))
    P = np.array(cols).T
    tr = np.trace(P)
    n = int(round(tr.real))
    if abs(tr - n) > 1e-6:
        raise DataError(f"postcomposition operator not idempotent-like: trace {tr}")
    return n


# ---------------------------------------------------------------------------
# functor images on ladder objects/morphisms


def m_apply_obj(y: EndofunctorData, obj: LadderObject):
    """(M^op x y)(obj): expand each slot's module leg through y.

    Returns (new object, slot map list of (orig slot index, channel t', copy j)).
    """
    mod = y.mod
    slots = []
    smap = []
    for i, (s, t) in enumerate(obj):
        for tp in mod.labels:
            for j in range(y.obj.get(t, {}).get(tp, 0)):
                slots.append((s, tp))
                smap.append((i, tp, j))
    return tuple(slots), smap


def m_apply(y: EndofunctorData, f: LadderMorphism) -> LadderMorphism:
    """(M^op x y)(f): process module legs through y with its coherence."""
    mod = y.mod
    src, smap = m_apply_obj(y, f.src)
    tgt, tmap = m_apply_obj(y, f.tgt)
    out = lzero(mod, src, tgt)
    cat = mod.cat
    for (qi, pi, a), X in f.comps.items():
        s, t = f.src[pi]
        u, v = f.tgt[qi]
        As, Ts = simple(a), simple(t)
        base = chain(
            y.coherence(As, Ts),  # y(a|>t) -> a|>y(t)  (we use the inverse)
        )
        base_inv = _minv(base)
        for pi2, (i2, tp, j) in enumerate(smap):
            if i2 != pi:
                continue
            for qi2, (i3, vp, k) in enumerate(tmap):
                if i3 != qi:
                    continue
                m = np.zeros((mod.n(a, s, u), mod.n(a, tp, vp)), dtype=complex)
                for l in range(X.shape[1]):
                    leg2 = chain(
                        mod.act_mor(mid(As), y.include(t, tp, j)),
                        base_inv,  # a|>y(t) -> y(a|>t)
                        y.of_mor(mod.vertex(a, t, v, l)),
                        _project_mor(y, v, vp, k),
                    )
                    blk = leg2.blocks.get(vp)
                    if blk is None:
                        continue
                    basis = mod.act_basis(As, simple(tp), vp)
                    for lp in range(mod.n(a, tp, vp)):
                        m[:, lp] += X[:, l] * blk[0, basis.index((a, 0, tp, 0, lp))]
                if m.size and np.abs(m).max() > 0:
                    key = (qi2, pi2, a)
                    out.comps[key] = out.comps.get(key, 0) + m
    return out


def _minv(m: Morphism) -> Morphism:
    blocks = {c: np.linalg.inv(b) for c, b in m.blocks.items()}
    return Morphism(m.tgt, m.src, blocks)


def _project_mor(y: EndofunctorData, v: str, vp: str, k: int) -> Morphism:
    return y.project(v, vp, k)


def op_apply(y: EndofunctorData, f: LadderMorphism) -> LadderMorphism:
    """(y^op x M)(f): process op legs through y with its coherence."""
    mod = y.mod
    src, smap = op_apply_obj(y, f.src)
    tgt, tmap = op_apply_obj(y, f.tgt)
    out = lzero(mod, src, tgt)
    for (qi, pi, a), X in f.comps.items():
        s, t = f.src[pi]
        u, v = f.tgt[qi]
        As = simple(a)
        for pi2, (i2, sp, j) in enumerate(smap):
            if i2 != pi:
                continue
            for qi2, (i3, up, k) in enumerate(tmap):
                if i3 != qi:
                    continue
                m = np.zeros((mod.n(a, sp, up), mod.n(a, t, v)), dtype=complex)
                for kk in range(X.shape[0]):
                    leg1 = chain(
                        y.include(u, up, k),
                        y.of_mor(mod.covertex(a, s, u, kk)),
                        y.coherence(As, simple(s)),  # y(a|>s) -> a|>y(s)
                        mod.act_mor(mid(As), y.project(s, sp, j)),
                    )
                    blk = leg1.blocks.get(up)
                    if blk is None:
                        continue
                    basis = mod.act_basis(As, simple(sp), up)
                    for kp in range(mod.n(a, sp, up)):
                        m[kp, :] += X[kk, :] * blk[basis.index((a, 0, sp, 0, kp)), 0]
                if m.size and np.abs(m).max() > 0:
                    key = (qi2, pi2, a)
                    out.comps[key] = out.comps.get(key, 0) + m
    return out


def op_apply_obj(y: EndofunctorData, obj: LadderObject):
    mod = y.mod
    slots = []
    smap = []
    for i, (s, t) in enumerate(obj):
        for sp in mod.labels:
            for j in range(y.obj.get(s, {}).get(sp, 0)):
                slots.append((sp, t))
                smap.append((i, sp, j))
    return tuple(slots), smap
