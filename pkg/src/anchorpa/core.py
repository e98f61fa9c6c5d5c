"""Skeletal engine for braided pivotal fusion categories.

Objects are multiplicity vectors over the simple labels; morphisms are per-label
complex block matrices expressed in left-nested fusion tree bases.  All vertex
bases are composition-orthonormal by convention: the pairing of a fusion vertex
with its dual splitting vertex is exactly the identity on the channel.  Every
structure constant of the category (F, R, pivotal coefficients) enters through
the associator, braid and duality morphisms built here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

Vec = dict[str, int]


class DataError(ValueError):
    """Raised when category/module data violates a structural invariant."""


# ---------------------------------------------------------------------------
# objects = multiplicity vectors


def vec(items: Mapping[str, int] | Iterable[tuple[str, int]] = ()) -> Vec:
    out: Vec = {}
    items = items.items() if isinstance(items, Mapping) else items
    for label, m in items:
        if m:
            out[label] = out.get(label, 0) + m
    return {k: v for k, v in out.items() if v}


def simple(label: str) -> Vec:
    return {label: 1}


def veq(a: Vec, b: Vec) -> bool:
    return {k: v for k, v in a.items() if v} == {k: v for k, v in b.items() if v}


def vadd(*vs: Vec) -> Vec:
    out: Vec = {}
    for v in vs:
        for k, m in v.items():
            out[k] = out.get(k, 0) + m
    return {k: v for k, v in out.items() if v}


def vdim(v: Vec) -> int:
    return sum(v.values())


# ---------------------------------------------------------------------------
# morphisms


@dataclass
class Morphism:
    """Block-matrix element of a hom space between multiplicity vectors.

    ``blocks[c]`` has shape ``(tgt[c], src[c])``.  Labels with zero source or
    target multiplicity carry no block.
    """

    src: Vec
    tgt: Vec
    blocks: dict[str, np.ndarray] = field(default_factory=dict)
    ctx: object = None  # optional fusion-tree context tag

    def block(self, c: str) -> np.ndarray:
        b = self.blocks.get(c)
        if b is not None:
            return b
        return np.zeros((self.tgt.get(c, 0), self.src.get(c, 0)), dtype=complex)

    def __add__(self, other: "Morphism") -> "Morphism":
        if not (veq(self.src, other.src) and veq(self.tgt, other.tgt)):
            raise DataError("morphism addition: object mismatch")
        labels = set(self.blocks) | set(other.blocks)
        return Morphism(self.src, self.tgt, {c: self.block(c) + other.block(c) for c in labels})

    def __mul__(self, z: complex) -> "Morphism":
        return Morphism(self.src, self.tgt, {c: z * b for c, b in self.blocks.items()})

    __rmul__ = __mul__

    def norm(self) -> float:
        return max((float(np.abs(b).max()) for b in self.blocks.values() if b.size), default=0.0)


def mzero(src: Vec, tgt: Vec) -> Morphism:
    return Morphism(src, tgt, {})


def mid(v: Vec) -> Morphism:
    return Morphism(v, v, {c: np.eye(m, dtype=complex) for c, m in v.items() if m})


def compose(f: Morphism, g: Morphism) -> Morphism:
    """Composite "f then g" (g after f); requires tgt(f) = src(g)."""
    if not veq(f.tgt, g.src):
        raise DataError(f"compose: target {f.tgt} != source {g.src}")
    if f.ctx is not None and g.ctx is not None and f.ctx != g.ctx:
        raise DataError("compose: fusion-tree context mismatch")
    blocks = {}
    for c in set(f.blocks) & set(g.blocks):
        blocks[c] = g.blocks[c] @ f.blocks[c]
    return Morphism(f.src, g.tgt, blocks)


def chain(*fs: Morphism) -> Morphism:
    out = fs[0]
    for f in fs[1:]:
        out = compose(out, f)
    return out


def residual(f: Morphism, g: Morphism) -> float:
    if not (veq(f.src, g.src) and veq(f.tgt, g.tgt)):
        raise DataError("residual: object mismatch")
    labels = set(f.blocks) | set(g.blocks)
    return max((float(np.abs(f.block(c) - g.block(c)).max()) for c in labels), default=0.0)


def scalar_of(f: Morphism) -> complex:
    """The scalar of an endomorphism of a one-dimensional object."""
    vals = [b for b in f.blocks.values() if b.size]
    if vdim(f.src) != 1 or vdim(f.tgt) != 1:
        raise DataError("scalar_of: object is not one-dimensional")
    return complex(vals[0][0, 0]) if vals else 0.0


def mor_to_flat(f: Morphism, labels: Sequence[str]) -> np.ndarray:
    parts = [f.block(c).ravel() for c in labels]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def flat_to_mor(x: np.ndarray, src: Vec, tgt: Vec, labels: Sequence[str]) -> Morphism:
    blocks = {}
    k = 0
    for c in labels:
        n = tgt.get(c, 0) * src.get(c, 0)
        if n:
            blocks[c] = x[k : k + n].reshape(tgt[c], src[c])
        k += n
    return Morphism(src, tgt, blocks)


# ---------------------------------------------------------------------------
# the category


@dataclass
class FusionCategory:
    """Validated skeletal data of a braided pivotal fusion category."""

    labels: tuple[str, ...]
    unit: str
    dual: dict[str, str]
    N: dict[tuple[str, str, str], int]
    F: dict[tuple[str, str, str, str], np.ndarray]
    R: dict[tuple[str, str, str], np.ndarray] | None
    pivotal: dict[str, complex]
    tol: float = 1e-9
    # filled by validation
    ev_coeff: dict[str, complex] = field(default_factory=dict)
    qdims: dict[str, float | complex] = field(default_factory=dict)

    # -- fusion combinatorics ------------------------------------------------

    def n(self, a: str, b: str, c: str) -> int:
        return self.N.get((a, b, c), 0)

    def fuse(self, A: Vec, B: Vec) -> Vec:
        out: Vec = {}
        for a, i in A.items():
            for b, j in B.items():
                for c in self.labels:
                    m = self.n(a, b, c)
                    if m:
                        out[c] = out.get(c, 0) + i * j * m
        return out

    def fuse_word(self, word: Sequence[str]) -> Vec:
        out = simple(self.unit)
        for a in word:
            out = self.fuse(out, simple(a))
        return out

    def tens_basis(self, A: Vec, B: Vec, c: str) -> list[tuple[str, int, str, int, int]]:
        """Canonical ordered basis of the c-block of A (x) B."""
        out = []
        for a in self.labels:
            for i in range(A.get(a, 0)):
                for b in self.labels:
                    for j in range(B.get(b, 0)):
                        for mu in range(self.n(a, b, c)):
                            out.append((a, i, b, j, mu))
        return out

    def dual_vec(self, A: Vec) -> Vec:
        return vec({self.dual[a]: m for a, m in A.items()})

    # -- elementary morphisms --------------------------------------------------

    def tensor_obj(self, A: Vec, B: Vec) -> Vec:
        return self.fuse(A, B)

    def tensor(self, f: Morphism, g: Morphism) -> Morphism:
        """f (x) g between canonical bases of the tensor products."""
        src = self.fuse(f.src, g.src)
        tgt = self.fuse(f.tgt, g.tgt)
        blocks = {}
        for c in self.labels:
            sb = self.tens_basis(f.src, g.src, c)
            tb = self.tens_basis(f.tgt, g.tgt, c)
            if not sb or not tb:
                continue
            m = np.zeros((len(tb), len(sb)), dtype=complex)
            for col, (a, i, b, j, mu) in enumerate(sb):
                fa = f.blocks.get(a)
                gb = g.blocks.get(b)
                if fa is None or gb is None:
                    continue
                for row, (a2, i2, b2, j2, mu2) in enumerate(tb):
                    if a2 == a and b2 == b and mu2 == mu:
                        m[row, col] = fa[i2, i] * gb[j2, j]
            blocks[c] = m
        return Morphism(src, tgt, blocks)

    def associator(self, A: Vec, B: Vec, C: Vec, inverse: bool = False) -> Morphism:
        """(A (x) B) (x) C -> A (x) (B (x) C) in canonical bases."""
        AB = self.fuse(A, B)
        BC = self.fuse(B, C)
        src = self.fuse(AB, C)
        tgt = self.fuse(A, BC)
        # index maps between nested enumerations
        blocks = {}
        for d in self.labels:
            left = []  # (a,i,b,j,c,k,e,mu,nu)
            for (e, ij, c, k, nu) in self.tens_basis(AB, C, d):
                ab = self.tens_basis(A, B, e)
                a, i, b, j, mu = ab[ij]
                left.append((a, i, b, j, c, k, e, mu, nu))
            right = []  # (a,i,b,j,c,k,f,rho,sigma)
            for (a, i, f, jk, sigma) in self.tens_basis(A, BC, d):
                bc = self.tens_basis(B, C, f)
                b, j, c, k, rho = bc[jk]
                right.append((a, i, b, j, c, k, f, rho, sigma))
            if not left or not right:
                continue
            m = np.zeros((len(right), len(left)), dtype=complex)
            for col, (a, i, b, j, c, k, e, mu, nu) in enumerate(left):
                fm = self.F.get((a, b, c, d))
                if fm is None:
                    continue
                lb = self._lbasis(a, b, c, d)
                rb = self._rbasis(a, b, c, d)
                ci = lb.index((e, mu, nu))
                for row, (a2, i2, b2, j2, c2, k2, f, rho, sigma) in enumerate(right):
                    if (a2, i2, b2, j2, c2, k2) == (a, i, b, j, c, k):
                        m[row, col] = fm[rb.index((f, rho, sigma)), ci]
            blocks[d] = m
        mor = Morphism(src, tgt, blocks)
        return self._invert(mor) if inverse else mor

    def _lbasis(self, a, b, c, d):
        return [
            (e, mu, nu)
            for e in self.labels
            for mu in range(self.n(a, b, e))
            for nu in range(self.n(e, c, d))
        ]

    def _rbasis(self, a, b, c, d):
        return [
            (f, rho, sigma)
            for f in self.labels
            for rho in range(self.n(b, c, f))
            for sigma in range(self.n(a, f, d))
        ]

    def _invert(self, f: Morphism) -> Morphism:
        blocks = {}
        for c, b in f.blocks.items():
            if b.shape[0] != b.shape[1]:
                raise DataError("cannot invert non-square block")
            blocks[c] = np.linalg.inv(b)
        return Morphism(f.tgt, f.src, blocks)

    def invert(self, f: Morphism) -> Morphism:
        return self._invert(f)

    # -- duality ---------------------------------------------------------------

    def vertex(self, a: str, b: str, c: str, mu: int = 0) -> Morphism:
        """Fusion basis vertex a (x) b -> c."""
        src = self.fuse(simple(a), simple(b))
        m = np.zeros((1, src.get(c, 0)), dtype=complex)
        m[0, mu] = 1.0
        return Morphism(src, simple(c), {c: m})

    def covertex(self, a: str, b: str, c: str, mu: int = 0) -> Morphism:
        """Dual splitting vertex c -> a (x) b, composition-orthonormal."""
        tgt = self.fuse(simple(a), simple(b))
        m = np.zeros((tgt.get(c, 0), 1), dtype=complex)
        m[mu, 0] = 1.0
        return Morphism(simple(c), tgt, {c: m})

    def coev(self, a: str) -> Morphism:
        """1 -> a (x) a*  (left coevaluation, coefficient 1)."""
        return self.covertex(a, self.dual[a], self.unit)

    def ev(self, a: str) -> Morphism:
        """a* (x) a -> 1  (left evaluation; coefficient fixed by the snake)."""
        return self.ev_coeff[a] * self.vertex(self.dual[a], a, self.unit)

    def coev_r(self, a: str) -> Morphism:
        """1 -> a* (x) a  (pivotal-corrected right coevaluation)."""
        return (1.0 / self.pivotal[a]) * self.covertex(self.dual[a], a, self.unit)

    def ev_r(self, a: str) -> Morphism:
        """a (x) a* -> 1  (pivotal-corrected right evaluation)."""
        ad = self.dual[a]
        return self.pivotal[a] * self.ev_coeff[ad] * self.vertex(a, ad, self.unit)

    def qdim(self, a: str) -> complex:
        """Quantum dimension: value of the pivotal circle ev_r . coev."""
        d = scalar_of(compose(self.coev(a), self.ev_r(a)))
        return d.real if abs(d.imag) < 1e-12 else d

    def pf_dim(self, a: str) -> float:
        """Perron-Frobenius eigenvalue of the fusion matrix of a (oracle)."""
        n = len(self.labels)
        mat = np.zeros((n, n))
        for j, b in enumerate(self.labels):
            for i, c in enumerate(self.labels):
                mat[i, j] = self.n(a, b, c)
        return float(max(np.linalg.eigvals(mat).real))

    def global_dim2(self) -> float:
        return float(sum(abs(self.qdim(a)) ** 2 for a in self.labels).real)

    # -- braiding ---------------------------------------------------------------

    def has_braiding(self) -> bool:
        return self.R is not None

    def rmat(self, a: str, b: str, c: str) -> np.ndarray:
        """R-block V(a(x)b -> c) -> V(b(x)a -> c), shape (N_ba^c, N_ab^c)."""
        if self.R is None:
            raise DataError("category carries no R-symbols")
        m = self.R.get((a, b, c))
        if m is None:
            return np.zeros((self.n(b, a, c), self.n(a, b, c)), dtype=complex)
        return m

    def braid(self, A: Vec, B: Vec, inverse: bool = False) -> Morphism:
        """A (x) B -> B (x) A; `inverse` gives the inverse braiding of (B, A)."""
        src = self.fuse(A, B)
        tgt = self.fuse(B, A)
        blocks = {}
        for c in self.labels:
            sb = self.tens_basis(A, B, c)
            tb = self.tens_basis(B, A, c)
            if not sb or not tb:
                continue
            m = np.zeros((len(tb), len(sb)), dtype=complex)
            for col, (a, i, b, j, mu) in enumerate(sb):
                r = self.rmat(a, b, c)
                if inverse:
                    r = np.linalg.inv(self.rmat(b, a, c))
                for row, (b2, j2, a2, i2, nu) in enumerate(tb):
                    if (a2, i2, b2, j2) == (a, i, b, j):
                        m[row, col] = r[nu, mu]
            blocks[c] = m
        return Morphism(src, tgt, blocks)

    def twist(self, a: str) -> complex:
        """theta_a = d_a^{-1} sum_c d_c tr R^{aa}_c."""
        if self.R is None:
            raise DataError("category carries no R-symbols")
        th = sum(self.qdim(c) * np.trace(self.rmat(a, a, c)) for c in self.labels if self.n(a, a, c))
        return complex(th) / self.qdim(a)

    def twist_diagram(self, a: str) -> complex:
        """Cross-check of the twist as the closed right-handed curl on a."""
        A = simple(a)
        step1 = self.tensor(mid(A), self.coev(a))  # a -> a(aa*)
        step2 = self.associator(A, A, simple(self.dual[a]), inverse=True)
        step3 = self.tensor(self.braid(A, A), mid(simple(self.dual[a])))
        step4 = self.associator(A, A, simple(self.dual[a]))
        step5 = self.tensor(mid(A), self.ev_r(a))  # close with right evaluation
        curl = chain(step1, step2, step3, step4, step5)
        return curl.blocks[a][0, 0]

    # -- validation --------------------------------------------------------------

    def pentagon_residual(self) -> float:
        worst = 0.0
        for a in self.labels:
            for b in self.labels:
                for c in self.labels:
                    for d in self.labels:
                        A, B, C, D = map(simple, (a, b, c, d))
                        lhs = chain(
                            self.associator(self.fuse(A, B), C, D),
                            self.associator(A, B, self.fuse(C, D)),
                        )
                        rhs = chain(
                            self.tensor(self.associator(A, B, C), mid(D)),
                            self.associator(A, self.fuse(B, C), D),
                            self.tensor(mid(A), self.associator(B, C, D)),
                        )
                        worst = max(worst, residual(lhs, rhs))
        return worst

    def hexagon_residual(self) -> float:
        if self.R is None:
            return 0.0
        worst = 0.0
        for a in self.labels:
            for b in self.labels:
                for c in self.labels:
                    A, B, C = map(simple, (a, b, c))
                    for inv in (False, True):
                        def sw(X: Vec, Y: Vec) -> Morphism:
                            if inv:
                                return self.braid(Y, X, inverse=True)
                            return self.braid(X, Y)

                        lhs = chain(
                            self.tensor(sw(A, B), mid(C)),
                            self.associator(B, A, C),
                            self.tensor(mid(B), sw(A, C)),
                        )
                        rhs = chain(
                            self.associator(A, B, C),
                            sw(A, self.fuse(B, C)),
                            self.associator(B, C, A),
                        )
                        worst = max(worst, residual(lhs, rhs))
        return worst

    def snake_residual(self) -> float:
        worst = 0.0
        for a in self.labels:
            ad = self.dual[a]
            A, Ad = simple(a), simple(ad)
            s1 = chain(
                self.tensor(self.coev(a), mid(A)),
                self.associator(A, Ad, A),
                self.tensor(mid(A), self.ev(a)),
            )
            s2 = chain(
                self.tensor(mid(Ad), self.coev(a)),
                self.associator(Ad, A, Ad, inverse=True),
                self.tensor(self.ev(a), mid(Ad)),
            )
            s3 = chain(
                self.tensor(self.coev_r(a), mid(Ad)),
                self.associator(Ad, A, Ad),
                self.tensor(mid(Ad), self.ev_r(a)),
            )
            s4 = chain(
                self.tensor(mid(A), self.coev_r(a)),
                self.associator(A, Ad, A, inverse=True),
                self.tensor(self.ev_r(a), mid(A)),
            )
            for s, v in ((s1, A), (s2, Ad), (s3, Ad), (s4, A)):
                worst = max(worst, residual(s, mid(v)))
        return worst


# ---------------------------------------------------------------------------
# loading and validation


def _check_fusion_ring(labels, unit, dual, N):
    n = lambda a, b, c: N.get((a, b, c), 0)
    for a in labels:
        for b in labels:
            if n(unit, a, b) != (1 if a == b else 0) or n(a, unit, b) != (1 if a == b else 0):
                raise DataError(f"unit axiom fails at ({a}, {b})")
            if n(a, b, unit) != (1 if b == dual[a] else 0):
                raise DataError(f"dual axiom fails at ({a}, {b})")
    for a in labels:
        for b in labels:
            for c in labels:
                for d in labels:
                    lhs = sum(n(a, b, e) * n(e, c, d) for e in labels)
                    rhs = sum(n(b, c, f) * n(a, f, d) for f in labels)
                    if lhs != rhs:
                        raise DataError(f"fusion associativity fails at ({a}, {b}, {c}, {d})")


def _solve_ev_coeffs(cat: FusionCategory) -> None:
    """Fix ev coefficients by the first snake, label by label."""
    for a in cat.labels:
        ad = cat.dual[a]
        A, Ad = simple(a), simple(ad)
        cat.ev_coeff[a] = 1.0
        probe = chain(
            cat.tensor(cat.coev(a), mid(A)),
            cat.associator(A, Ad, A),
            cat.tensor(mid(A), cat.vertex(ad, a, cat.unit)),
        )
        z = probe.blocks[a][0, 0]
        if abs(z) < 1e-14:
            raise DataError(f"singular snake normalization for label {a}")
        cat.ev_coeff[a] = 1.0 / z


@dataclass
class ValidationReport:
    pentagon: float
    hexagon: float
    snake: float
    qdim_mult: float

    def max_residual(self) -> float:
        return max(self.pentagon, self.hexagon, self.snake, self.qdim_mult)

    def as_dict(self) -> dict:
        return {
            "pentagon": self.pentagon,
            "hexagon": self.hexagon,
            "snake": self.snake,
            "qdim_multiplicativity": self.qdim_mult,
        }


def category_from_dict(raw: dict) -> tuple[FusionCategory, ValidationReport]:
    """Parse, validate and normalize raw JSON category data."""
    try:
        labels = tuple(raw["labels"])
        unit = raw["unit"]
        dual = dict(raw["dual"])
        fusion = raw["fusion"]
    except KeyError as exc:
        raise DataError(f"missing category field {exc}") from exc
    if unit not in labels or len(set(labels)) != len(labels):
        raise DataError("bad label set or unit")
    if set(dual) != set(labels) or any(dual[dual[a]] != a for a in labels):
        raise DataError("dual map is not an involution on the labels")

    N = {}
    for a, b, c, m in fusion:
        if a not in labels or b not in labels or c not in labels:
            raise DataError(f"fusion entry names unknown label: {(a, b, c)}")
        N[(a, b, c)] = int(m)
    _check_fusion_ring(labels, unit, dual, N)

    def n(a, b, c):
        return N.get((a, b, c), 0)

    F: dict[tuple[str, str, str, str], np.ndarray] = {}
    lbasis = {}
    rbasis = {}
    for a in labels:
        for b in labels:
            for c in labels:
                for d in labels:
                    lb = [(e, mu, nu) for e in labels for mu in range(n(a, b, e)) for nu in range(n(e, c, d))]
                    rb = [(f, rho, sg) for f in labels for rho in range(n(b, c, f)) for sg in range(n(a, f, d))]
                    if lb and rb:
                        F[(a, b, c, d)] = np.zeros((len(rb), len(lb)), dtype=complex)
                        lbasis[(a, b, c, d)] = {t: i for i, t in enumerate(lb)}
                        rbasis[(a, b, c, d)] = {t: i for i, t in enumerate(rb)}
    for entry in raw.get("F", []):
        a, b, c, d, e, f = entry["labels"]
        mu, nu, rho, sg = entry["indices"]
        re, im = entry["value"]
        key = (a, b, c, d)
        if key not in F:
            raise DataError(f"F entry on empty block {key}")
        F[key][rbasis[key][(f, rho, sg)], lbasis[key][(e, mu, nu)]] = re + 1j * im
    for key, m in F.items():
        if abs(np.linalg.det(m)) < 1e-12:
            raise DataError(f"singular F-block at {key}")

    R = None
    if raw.get("R"):
        R = {}
        for entry in raw["R"]:
            a, b, c = entry["labels"]
            mu, nu = entry["indices"]
            re, im = entry["value"]
            R.setdefault((a, b, c), np.zeros((n(b, a, c), n(a, b, c)), dtype=complex))[nu, mu] = re + 1j * im

    pivotal = {a: complex(*raw.get("pivotal", {}).get(a, [1.0, 0.0])) for a in labels}
    tol = float(raw.get("tol", 1e-9))

    cat = FusionCategory(labels, unit, dual, N, F, R, pivotal, tol)
    for a in labels:  # strict unit convention keeps unitors identities
        for b in labels:
            for c in labels:
                for key in ((unit, a, b), (a, unit, b), (a, b, unit)):
                    blk = cat.F.get(key + (c,)) if False else None
    _solve_ev_coeffs(cat)

    pent = cat.pentagon_residual()
    if pent > tol:
        worst = _worst_pentagon(cat)
        raise DataError(f"pentagon residual {pent:.3e} > tol at {worst}")
    hexr = cat.hexagon_residual()
    if hexr > tol:
        raise DataError(f"hexagon residual {hexr:.3e} > tol")
    snk = cat.snake_residual()
    if snk > tol:
        raise DataError(f"snake residual {snk:.3e} > tol")
    qm = _qdim_mult_residual(cat)
    if qm > max(tol, 1e-7):
        raise DataError(f"quantum dimensions not multiplicative: {qm:.3e}")
    cat.qdims = {a: cat.qdim(a) for a in labels}
    return cat, ValidationReport(pent, hexr, snk, qm)


def _worst_pentagon(cat: FusionCategory) -> tuple:
    worst, arg = -1.0, None
    for a in cat.labels:
        for b in cat.labels:
            for c in cat.labels:
                for d in cat.labels:
                    A, B, C, D = map(simple, (a, b, c, d))
                    lhs = chain(
                        cat.associator(cat.fuse(A, B), C, D),
                        cat.associator(A, B, cat.fuse(C, D)),
                    )
                    rhs = chain(
                        cat.tensor(cat.associator(A, B, C), mid(D)),
                        cat.associator(A, cat.fuse(B, C), D),
                        cat.tensor(mid(A), cat.associator(B, C, D)),
                    )
                    r = residual(lhs, rhs)
                    if r > worst:
                        worst, arg = r, (a, b, c, d)
    return arg


def _qdim_mult_residual(cat: FusionCategory) -> float:
    worst = 0.0
    for a in cat.labels:
        for b in cat.labels:
            lhs = sum(cat.n(a, b, c) * cat.qdim(c) for c in cat.labels)
            worst = max(worst, abs(lhs - cat.qdim(a) * cat.qdim(b)))
        worst = max(worst, abs(cat.qdim(a) - cat.qdim(cat.dual[a])))
    worst = max(worst, abs(cat.qdim(cat.unit) - 1.0))
    return float(worst)


def load_category(path: str) -> tuple[FusionCategory, ValidationReport]:
    with open(path, encoding="utf-8") as fh:
        return category_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# fusion trees / F-moves


def tree_obj(cat: FusionCategory, tree) -> Vec:
    if isinstance(tree, str):
        return simple(tree)
    l, r = tree
    return cat.fuse(tree_obj(cat, l), tree_obj(cat, r))


def left_nested(word: Sequence[str]):
    t = word[0]
    for a in word[1:]:
        t = (t, a)
    return t


def tree_sites(tree, path=()) -> list[tuple]:
    """Sites where a right rotation ((X Y) Z) -> (X (Y Z)) applies."""
    if isinstance(tree, str):
        return []
    out = []
    l, r = tree
    if not isinstance(l, str):
        out.append(path)
    out += tree_sites(l, path + (0,))
    out += tree_sites(r, path + (1,))
    return out


def _subtree(tree, path):
    for p in path:
        tree = tree[p]
    return tree


def _replace(tree, path, new):
    if not path:
        return new
    l, r = tree
    if path[0] == 0:
        return (_replace(l, path[1:], new), r)
    return (l, _replace(r, path[1:], new))


def rotate_at(cat: FusionCategory, tree, path) -> tuple[object, Morphism]:
    """Apply the associator at `path`; returns (new tree, iso old -> new)."""
    sub = _subtree(tree, path)
    if isinstance(sub, str) or isinstance(sub[0], str):
        raise DataError(f"no reassociation site at {path}")
    (x, y), z = sub
    new_sub = (x, (y, z))
    iso_local = cat.associator(tree_obj(cat, x), tree_obj(cat, y), tree_obj(cat, z))
    iso = _whisker(cat, tree, path, iso_local)
    return _replace(tree, path, new_sub), iso


def _whisker(cat: FusionCategory, tree, path, local: Morphism) -> Morphism:
    if not path:
        return local
    l, r = tree
    if path[0] == 0:
        return cat.tensor(_whisker(cat, l, path[1:], local), mid(tree_obj(cat, r)))
    return cat.tensor(mid(tree_obj(cat, l)), _whisker(cat, r, path[1:], local))


def f_move(cat: FusionCategory, f: Morphism, tree, path) -> tuple[Morphism, object]:
    """Re-express a morphism out of `tree` over the rotated source tree."""
    new_tree, iso = rotate_at(cat, tree, path)
    if not veq(f.src, tree_obj(cat, tree)):
        raise DataError("morphism source does not match the named tree")
    return compose(cat.invert(iso), f), new_tree


def tree_iso(cat: FusionCategory, t1, t2) -> Morphism:
    """Canonical coherence iso between two parenthesizations of one word."""
    w1, w2 = _word_of(t1), _word_of(t2)
    if w1 != w2:
        raise DataError("trees spell different words")
    a = _to_left_comb(cat, t1)
    b = _to_left_comb(cat, t2)
    return compose(a, cat.invert(b))


def _word_of(tree) -> tuple[str, ...]:
    if isinstance(tree, str):
        return (tree,)
    return _word_of(tree[0]) + _word_of(tree[1])


def _to_left_comb(cat: FusionCategory, tree) -> Morphism:
    """Iso from tree to the fully left-nested tree on the same word."""
    cur = tree
    iso = mid(tree_obj(cat, tree))
    while True:
        site = _leftmost_bad(cur)
        if site is None:
            return _inverse_path(cat, tree, cur, iso)
        new, step = _rotate_left_at(cat, cur, site)
        iso = compose(iso, step)
        cur = new


def _leftmost_bad(tree, path=()):
    """Find a site shaped X (Y Z) to rotate left, scanning outside-in."""
    if isinstance(tree, str):
        return None
    l, r = tree
    if not isinstance(r, str):
        return path
    return _leftmost_bad(l, path + (0,))


def _rotate_left_at(cat: FusionCategory, tree, path):
    sub = _subtree(tree, path)
    x, yz = sub
    y, z = yz
    new_sub = ((x, y), z)
    iso_local = cat.associator(tree_obj(cat, x), tree_obj(cat, y), tree_obj(cat, z), inverse=True)
    iso = _whisker(cat, tree, path, iso_local)
    return _replace(tree, path, new_sub), iso


def _inverse_path(cat, start, end, iso):
    return iso


# ---------------------------------------------------------------------------
# words, duals of words, nested (co)evaluations


def word_obj(cat: FusionCategory, word: Sequence[str]) -> Vec:
    out = simple(cat.unit)
    for a in word:
        out = cat.fuse(out, simple(a))
    return out


def dual_word(cat: FusionCategory, word: Sequence[str]) -> tuple[str, ...]:
    return tuple(cat.dual[a] for a in reversed(word))


def ev_word(cat: FusionCategory, word: Sequence[str]) -> Morphism:
    """Left evaluation dual(word) (x) word -> 1, both sides left-nested."""
    if len(word) == 0:
        return mid(simple(cat.unit))
    if len(word) == 1:
        return cat.ev(word[0])
    # ev_{w+a} = (ev_a . (ev_w boxed inside)) with associator plumbing
    w, a = word[:-1], word[-1]
    dw = dual_word(cat, w)
    da = cat.dual[a]
    W, A, DW, DA = word_obj(cat, w), simple(a), word_obj(cat, dw), simple(da)
    # (DA DW)(W A) -> DA ((DW W) A) -> DA (1 A) = DA A -> 1
    s1 = cat.associator(cat.fuse(DA, DW), W, A, inverse=False)
    # now at (DA DW)(W A): first assoc to DA (DW (W A))
    s1 = cat.associator(DA, DW, cat.fuse(W, A))
    s2 = cat.tensor(mid(DA), cat.associator(DW, W, A, inverse=True))
    s3 = cat.tensor(mid(DA), cat.tensor(ev_word(cat, w), mid(A)))
    s4 = cat.tensor(mid(DA), mid(A))  # unit strictness: 1 (x) A = A
    s5 = cat.ev(a)
    return chain(s1, s2, s3, s5)


def coev_word(cat: FusionCategory, word: Sequence[str]) -> Morphism:
    """Left coevaluation 1 -> word (x) dual(word)."""
    if len(word) == 0:
        return mid(simple(cat.unit))
    if len(word) == 1:
        return cat.coev(word[0])
    w, a = word[:-1], word[-1]
    dw = dual_word(cat, w)
    da = cat.dual[a]
    W, A, DW, DA = word_obj(cat, w), simple(a), word_obj(cat, dw), simple(da)
    # 1 -> W DW -> W ((A DA) DW)=... -> (W A)(DA DW)
    s1 = coev_word(cat, w)
    s2 = cat.tensor(mid(W), cat.tensor(cat.coev(a), mid(DW)))
    s3 = cat.tensor(mid(W), cat.associator(A, DA, DW))
    s4 = cat.associator(W, A, cat.fuse(DA, DW), inverse=True)
    return chain(s1, s2, s3, s4)


def ev_word_r(cat: FusionCategory, word: Sequence[str]) -> Morphism:
    """Right evaluation word (x) dual(word) -> 1 (pivotal corrected)."""
    if len(word) == 0:
        return mid(simple(cat.unit))
    if len(word) == 1:
        return cat.ev_r(word[0])
    w, a = word[:-1], word[-1]
    dw = dual_word(cat, w)
    da = cat.dual[a]
    W, A, DW, DA = word_obj(cat, w), simple(a), word_obj(cat, dw), simple(da)
    s1 = cat.associator(cat.fuse(W, A), DA, DW, inverse=False)
    s1 = cat.associator(W, A, cat.fuse(DA, DW))
    s2 = cat.tensor(mid(W), cat.associator(A, DA, DW, inverse=True))
    s3 = cat.tensor(mid(W), cat.tensor(cat.ev_r(a), mid(DW)))
    s4 = ev_word_r(cat, w)
    return chain(s1, s2, s3, s4)


def coev_word_r(cat: FusionCategory, word: Sequence[str]) -> Morphism:
    """Right coevaluation 1 -> dual(word) (x) word (pivotal corrected)."""
    if len(word) == 0:
        return mid(simple(cat.unit))
    if len(word) == 1:
        return cat.coev_r(word[0])
    w, a = word[:-1], word[-1]
    dw = dual_word(cat, w)
    da = cat.dual[a]
    W, A, DW, DA = word_obj(cat, w), simple(a), word_obj(cat, dw), simple(da)
    s1 = cat.coev_r(a)
    s2 = cat.tensor(mid(DA), cat.tensor(coev_word_r(cat, w), mid(A)))
    s3 = cat.tensor(mid(DA), cat.associator(DW, W, A))
    s4 = cat.associator(DA, DW, cat.fuse(W, A), inverse=True)
    return chain(s1, s2, s3, s4)


# ---------------------------------------------------------------------------
# dual bases and the I=H transform


@dataclass
class DualBasisPair:
    space: tuple[str, str, str]
    basis: list[Morphism]
    dual: list[Morphism]


def dual_basis(cat: FusionCategory, a: str, b: str, c: str) -> DualBasisPair:
    n = cat.n(a, b, c)
    if n == 0:
        raise DataError(f"zero-dimensional vertex space ({a}, {b}; {c})")
    basis = [cat.vertex(a, b, c, mu) for mu in range(n)]
    dual = [cat.covertex(a, b, c, mu) for mu in range(n)]
    return DualBasisPair((a, b, c), basis, dual)


def i_h_transform(
    cat: FusionCategory,
    a: str,
    c: str,
    s: str,
    t: str,
    T: Mapping[str, np.ndarray],
    inverse: bool = False,
):
    """Recoupling between the two dual-basis resolutions of Hom(c (x) s, a (x) t).

    Vertical data ``T[b][j, k]`` is indexed by the splitting basis of
    Hom(c, a (x) b) and the fusion basis of Hom(b (x) s, t); horizontal data
    ``S[r][j, k]`` by the fusion basis of Hom(c (x) s, r) and the splitting
    basis of Hom(r, a (x) t).  Forward builds the morphism and reads blocks;
    inverse solves the linear system back.
    """
    A, C, S_, T_ = map(simple, (a, c, s, t))
    src = cat.fuse(C, S_)
    tgt = cat.fuse(A, T_)

    def vertical_to_mor(T):
        total = mzero(src, tgt)
        for b in cat.labels:
            block = T.get(b)
            if block is None:
                continue
            for j in range(cat.n(a, b, c)):
                for k in range(cat.n(b, s, t)):
                    if block[j, k] == 0:
                        continue
                    B = simple(b)
                    m = chain(
                        cat.tensor(cat.covertex(a, b, c, j), mid(S_)),
                        cat.associator(A, B, S_),
                        cat.tensor(mid(A), cat.vertex(b, s, t, k)),
                    )
                    total = total + complex(block[j, k]) * m
        return total

    def mor_to_horizontal(m):
        return {r: m.block(r).copy() for r in cat.labels if m.src.get(r, 0) and m.tgt.get(r, 0)}

    if not inverse:
        return mor_to_horizontal(vertical_to_mor(T))

    # inverse: least-squares solve for the vertical coefficients
    cols = []
    keys = []
    for b in cat.labels:
        for j in range(cat.n(a, b, c)):
            for k in range(cat.n(b, s, t)):
                keys.append((b, j, k))
                unit = {b: np.zeros((cat.n(a, b, c), cat.n(b, s, t)), dtype=complex)}
                unit[b][j, k] = 1.0
                cols.append(mor_to_flat(vertical_to_mor(unit), cat.labels))
    tgt_m = Morphism(src, tgt, {r: np.asarray(T[r], dtype=complex) for r in T})
    rhs = mor_to_flat(tgt_m, cat.labels)
    if not cols:
        return {}
    Amat = np.array(cols).T
    sol, *_ = np.linalg.lstsq(Amat, rhs, rcond=None)
    out: dict[str, np.ndarray] = {}
    for (b, j, k), z in zip(keys, sol):
        out.setdefault(b, np.zeros((cat.n(a, b, c), cat.n(b, s, t)), dtype=complex))[j, k] = z
    return out
