"""Parser, boundary typechecker and evaluator for anchored-tangle terms.

Grammar:  term := atom | term ";" term | term "*" term | "(" term ")"
          atom := id[n] | eta | cap(i,n) | cup(i,n) | mult(i,j,n) | rotate(k,n)
";" (vertical composition) binds looser than "*" (juxtaposition).  Files use
the extension .tangle with "#" line comments; one term per file.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import DataError, Morphism, chain, compose, mid


class TangleError(ValueError):
    """Syntax or boundary error with position information."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        if line is not None:
            msg = f"{msg} (line {line}, column {col})"
        super().__init__(msg)
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# AST


@dataclass
class Term:
    kind: str  # id, eta, cap, cup, mult, rotate, seq, par
    args: tuple = ()
    kids: tuple = ()
    src: int | None = None  # strand counts, filled by typecheck
    tgt: int | None = None

    def show(self) -> str:
        if self.kind == "id":
            return f"id[{self.args[0]}]"
        if self.kind == "eta":
            return "eta"
        if self.kind in ("cap", "cup"):
            return f"{self.kind}({self.args[0]},{self.args[1]})"
        if self.kind == "mult":
            return f"mult({self.args[0]},{self.args[1]},{self.args[2]})"
        if self.kind == "rotate":
            return f"rotate({self.args[0]},{self.args[1]})"
        if self.kind == "seq":
            return " ; ".join(
                f"({k.show()})" if k.kind == "seq" else k.show() for k in self.kids
            )
        if self.kind == "par":
            return " * ".join(
                f"({k.show()})" if k.kind in ("seq", "par") else k.show() for k in self.kids
            )
        raise TangleError(f"unknown node {self.kind}")


# ---------------------------------------------------------------------------
# tokenizer / parser


class _Tok:
    def __init__(self, kind, value, line, col):
        self.kind, self.value, self.line, self.col = kind, value, line, col


def _tokens(text: str):
    out = []
    line = 1
    col = 1
    i = 0
    while i < len(text):
        c = text[i]
        if c == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c in ";*()[],":
            out.append(_Tok(c, c, line, col))
            i += 1
            col += 1
            continue
        if c.isalpha():
            j = i
            while j < len(text) and text[j].isalnum():
                j += 1
            out.append(_Tok("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isdigit() or (c == "-" and i + 1 < len(text) and text[i + 1].isdigit()):
            j = i + 1
            while j < len(text) and text[j].isdigit():
                j += 1
            out.append(_Tok("int", int(text[i:j]), line, col))
            col += j - i
            i = j
            continue
        raise TangleError(f"unexpected character {c!r}", line, col)
    out.append(_Tok("eof", None, line, col))
    return out


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def eat(self, kind):
        t = self.toks[self.pos]
        if t.kind != kind:
            raise TangleError(f"expected {kind!r}, found {t.value!r}", t.line, t.col)
        self.pos += 1
        return t

    def parse(self) -> Term:
        t = self.seq()
        e = self.peek()
        if e.kind != "eof":
            raise TangleError(f"unexpected token {e.value!r}", e.line, e.col)
        return t

    def seq(self) -> Term:
        parts = [self.par()]
        while self.peek().kind == ";":
            self.eat(";")
            parts.append(self.par())
        return parts[0] if len(parts) == 1 else Term("seq", (), tuple(parts))

    def par(self) -> Term:
        parts = [self.atom()]
        while self.peek().kind == "*":
            self.eat("*")
            parts.append(self.atom())
        return parts[0] if len(parts) == 1 else Term("par", (), tuple(parts))

    def atom(self) -> Term:
        t = self.peek()
        if t.kind == "(":
            self.eat("(")
            inner = self.seq()
            self.eat(")")
            return inner
        if t.kind != "name":
            raise TangleError(f"expected an atom, found {t.value!r}", t.line, t.col)
        self.eat("name")
        name = t.value
        if name == "eta":
            return Term("eta")
        if name == "id":
            self.eat("[")
            n = self.eat("int").value
            self.eat("]")
            if n < 0:
                raise TangleError("id[n] needs n >= 0", t.line, t.col)
            return Term("id", (n,))
        if name in ("cap", "cup", "rotate"):
            self.eat("(")
            a = self.eat("int").value
            self.eat(",")
            b = self.eat("int").value
            self.eat(")")
            return Term(name, (a, b))
        if name == "mult":
            self.eat("(")
            a = self.eat("int").value
            self.eat(",")
            b = self.eat("int").value
            self.eat(",")
            c = self.eat("int").value
            self.eat(")")
            return Term("mult", (a, b, c))
        raise TangleError(f"unknown atom {name!r}", t.line, t.col)


def parse(text: str) -> Term:
    return _Parser(_tokens(text)).parse()


def parse_file(path: str) -> Term:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# ---------------------------------------------------------------------------
# boundary typechecking


@dataclass
class BoundarySignature:
    src: int
    tgt: int


def typecheck(term: Term) -> BoundarySignature:
    k = term.kind
    if k == "eta":
        term.src, term.tgt = 0, 0
    elif k == "id":
        n = term.args[0]
        term.src = term.tgt = n
    elif k == "cap":
        i, n = term.args
        if not (0 <= i <= n):
            raise TangleError(f"cap({i},{n}) needs 0 <= i <= n")
        term.src, term.tgt = n + 2, n
    elif k == "cup":
        i, n = term.args
        if not (0 <= i <= n):
            raise TangleError(f"cup({i},{n}) needs 0 <= i <= n")
        term.src, term.tgt = n, n + 2
    elif k == "rotate":
        kk, n = term.args
        if n < 0:
            raise TangleError(f"rotate({kk},{n}) needs n >= 0")
        term.src = term.tgt = n
    elif k == "mult":
        i, j, n = term.args
        if not (0 <= i <= n) or j < 0:
            raise TangleError(f"mult({i},{j},{n}) needs 0 <= i <= n and j >= 0")
        term.src, term.tgt = n + j, n + j
    elif k == "seq":
        for kid in term.kids:
            typecheck(kid)
        for a, b in zip(term.kids, term.kids[1:]):
            if a.tgt != b.src:
                raise TangleError(
                    f"boundary mismatch: {a.show()} ends with {a.tgt} strands, "
                    f"{b.show()} starts with {b.src}"
                )
        term.src = term.kids[0].src
        term.tgt = term.kids[-1].tgt
    elif k == "par":
        for kid in term.kids:
            typecheck(kid)
        term.src = sum(kid.src for kid in term.kids)
        term.tgt = sum(kid.tgt for kid in term.kids)
    else:
        raise TangleError(f"unknown node {k}")
    return BoundarySignature(term.src, term.tgt)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(term: Term, apa) -> Morphism:
    """Structural recursion into the APA generators.

    ";" is composition, "*" is the multiplication-mediated juxtaposition: a
    parallel pair (s, t) evaluates as the pants multiplication of the factors.
    """
    typecheck(term)
    return _eval(term, apa)


def _eval(term: Term, apa) -> Morphism:
    from .coherence import mu_pants

    mod, adj, x = apa.mod, apa.adj, apa.x
    k = term.kind
    if k == "eta":
        return apa.eta()
    if k == "id":
        n = term.args[0]
        _need(apa, n)
        return apa.box(n).idem
    if k == "cap":
        i, n = term.args
        _need(apa, n + 2)
        return apa.cap(i, n)
    if k == "cup":
        i, n = term.args
        _need(apa, n + 2)
        return apa.cup(i, n)
    if k == "rotate":
        kk, n = term.args
        _need(apa, n)
        return apa.rotate(kk, n)
    if k == "mult":
        i, j, n = term.args
        _need(apa, n + j)
        return apa.mult(i, j, n)
    if k == "seq":
        out = _eval(term.kids[0], apa)
        for kid in term.kids[1:]:
            out = compose(out, _eval(kid, apa))
        return out
    if k == "par":
        out = _eval(term.kids[0], apa)
        for kid in term.kids[1:]:
            out = mod.cat.tensor(out, _eval(kid, apa))
        return out
    raise TangleError(f"unknown node {k}")


def _need(apa, n):
    if n > apa.n_max + 2:
        raise TangleError(f"term needs P[{n}] but the instance caps at n_max={apa.n_max}")


def print_term(term: Term) -> str:
    return term.show()
