"""Text formats: system documents, control files and bracket specs.

Both file formats share one polynomial syntax::

    system jouet dim 3
    param alpha = 1
    f0:
      x3' += x1^2 + x2^2 + alpha*x1*x2
    f1:
      x1' += 1
    f2:
      x2' += 1

Control files use the time variable ``s``::

    horizon 1
    u:
      piece 0..1/2: 1 - 2*s
      piece 1/2..1: 0
    v:
      piece 0..1: s^2

Only rational literals are accepted; ``0.5`` is rejected with a hint.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .. import freelie
from ..signals import ControlPair, PiecewisePoly
from ..vectorfields import Poly, PolySystem, PolyVectorField, VectorFieldError


class DslError(ValueError):
    """Parse or semantic error with a source location."""

    def __init__(self, message: str, line: int = 0, col: int = 0, expected: Sequence[str] = (), source: str = "<input>"):
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(sorted(set(expected)))
        self.source = source
        text = f"{source}:{line}:{col}: {message}"
        if self.expected:
            text += " (expected one of: " + ", ".join(self.expected) + ")"
        super().__init__(text)


# ---------------------------------------------------------------------------
# lexer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # INT, NAME, PRIME, OP, NEWLINE, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)"
    r"|(?P<dec>\d+\.(?!\.)\d*|(?<!\.)\.\d+|\d+[eE][+-]?\d+)"
    r"|(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\+=|\.\.|[-+*/^():=',])"
)


def tokenize(text: str, source: str = "<input>") -> List[Token]:
    out: List[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise DslError(f"unexpected character {text[pos]!r}", line, col, source=source)
        kind = m.lastgroup
        lex = m.group()
        if kind == "dec":
            raise DslError(f"decimal literal {lex!r} is not exact; write a rational such as "
                           f"{_decimal_hint(lex)}", line, col, source=source)
        if kind == "nl":
            out.append(Token("NEWLINE", "\\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "int":
            out.append(Token("INT", lex, line, col))
        elif kind == "name":
            out.append(Token("NAME", lex, line, col))
        elif kind == "op":
            out.append(Token("PRIME" if lex == "'" else "OP", lex, line, col))
        pos = m.end()
    out.append(Token("NEWLINE", "\\n", line, pos - line_start + 1))
    out.append(Token("EOF", "end of input", line, pos - line_start + 1))
    return out


def _decimal_hint(lex: str) -> str:
    try:
        f = Fraction(lex)
    except ValueError:
        return "1/2"
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


class _Parser:
    def __init__(self, text: str, source: str):
        self.toks = tokenize(text, source)
        self.i = 0
        self.source = source

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, expected: Sequence[str] = (), tok: Optional[Token] = None) -> DslError:
        tok = tok or self.tok
        return DslError(message, tok.line, tok.col, expected, self.source)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: Optional[str] = None, what: Optional[str] = None) -> Token:
        if self.at(kind, text):
            return self.advance()
        label = what or (repr(text) if text else kind.lower())
        found = self.tok.text if self.tok.kind != "NEWLINE" else "end of line"
        raise self.error(f"unexpected {found!r}", [label])

    def skip_newlines(self):
        while self.at("NEWLINE"):
            self.advance()

    def end_line(self):
        if not self.at("NEWLINE"):
            raise self.error(f"unexpected {self.tok.text!r}", ["end of line"])
        self.skip_newlines()

    def rational(self) -> Fraction:
        neg = False
        if self.at("OP", "-"):
            self.advance()
            neg = True
        n = Fraction(int(self.expect("INT", what="integer").text))
        if self.at("OP", "/"):
            self.advance()
            t = self.expect("INT", what="integer")
            if int(t.text) == 0:
                raise self.error("division by zero", tok=t)
            n /= int(t.text)
        return -n if neg else n

    # polynomial expressions; ``names`` maps identifiers to variable indices
    def expr(self, names: Dict[str, int], nvars: int) -> Poly:
        acc = self.term(names, nvars)
        while self.at("OP", "+") or self.at("OP", "-"):
            op = self.advance().text
            rhs = self.term(names, nvars)
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self, names, nvars) -> Poly:
        acc = self.factor(names, nvars)
        while self.at("OP", "*") or self.at("OP", "/"):
            op = self.advance()
            rhs = self.factor(names, nvars)
            if op.text == "*":
                acc = acc * rhs
            else:
                if rhs.degree() > 0:
                    raise self.error("division by a non-constant expression", tok=op)
                c = rhs.constant_term()
                if c == 0:
                    raise self.error("division by zero", tok=op)
                acc = acc.scale(1 / c)
        return acc

    def factor(self, names, nvars) -> Poly:
        if self.at("OP", "-"):
            self.advance()
            return -self.factor(names, nvars)
        if self.at("OP", "+"):
            self.advance()
            return self.factor(names, nvars)
        base = self.atom(names, nvars)
        if self.at("OP", "^"):
            self.advance()
            t = self.expect("INT", what="integer exponent")
            return base ** int(t.text)
        return base

    def atom(self, names, nvars) -> Poly:
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return Poly.const(nvars, int(t.text))
        if t.kind == "NAME":
            self.advance()
            if t.text not in names:
                if re.fullmatch(r"x\d+", t.text):
                    raise self.error(f"unknown coordinate {t.text}", tok=t)
                raise self.error(f"unknown name {t.text!r}", tok=t)
            return Poly.var(nvars, names[t.text])
        if self.at("OP", "("):
            self.advance()
            e = self.expr(names, nvars)
            self.expect("OP", ")")
            return e
        found = t.text if t.kind != "NEWLINE" else "end of line"
        raise self.error(f"unexpected {found!r}", ["integer", "name", "'('", "'-'"])


# ---------------------------------------------------------------------------
# system documents
# ---------------------------------------------------------------------------

BLOCKS = ("f0", "f1", "f2")


@dataclass
class SystemDocument:
    """Parsed system.  Parameters are extra polynomial variables after
    x1..xd, substituted only in :meth:`to_system`."""

    name: str
    dim: int
    params: Dict[str, Fraction]
    blocks: Dict[str, Dict[int, Poly]]
    locations: Dict[Tuple[str, int], Tuple[int, int]] = field(default_factory=dict, compare=False)
    source: str = field(default="<input>", compare=False)

    @property
    def names(self) -> List[str]:
        return [f"x{i + 1}" for i in range(self.dim)] + list(self.params)

    def to_system(self, overrides: Optional[Dict[str, Fraction]] = None) -> PolySystem:
        values = dict(self.params)
        for k, v in (overrides or {}).items():
            if k not in values:
                raise DslError(f"unknown parameter {k!r}", source=self.source)
            values[k] = Fraction(v)
        fixed = {self.dim + i: values[p] for i, p in enumerate(self.params)}
        keep = list(range(self.dim))
        fields = []
        for b in BLOCKS:
            comps = []
            for i in range(self.dim):
                p = self.blocks[b].get(i)
                comps.append(p.substitute(fixed, keep) if p is not None else Poly(self.dim))
            fields.append(PolyVectorField(comps))
        for i, c in enumerate(fields[0].comps):
            if c.constant_term() != 0:
                line, col = self.locations.get(("f0", i), (0, 0))
                raise DslError("f0(0) must vanish", line, col, source=self.source)
        return PolySystem(*fields, name=self.name, params=values)

    def pretty(self) -> str:
        lines = [f"system {self.name} dim {self.dim}"]
        for p, v in self.params.items():
            lines.append(f"param {p} = {_frac(v)}")
        for b in BLOCKS:
            lines.append(f"{b}:")
            for i in sorted(self.blocks[b]):
                lines.append(f"  x{i + 1}' += {self.blocks[b][i].to_str(self.names)}")
        return "\n".join(lines) + "\n"


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def parse_system(text: str, source: str = "<input>") -> SystemDocument:
    p = _Parser(text, source)
    p.skip_newlines()
    if p.at("EOF"):
        raise p.error("empty document", ["'system'"])
    p.expect("NAME", "system")
    name = p.expect("NAME", what="system name").text
    p.expect("NAME", "dim")
    dt = p.expect("INT", what="dimension")
    dim = int(dt.text)
    if dim < 1:
        raise p.error("dimension must be positive", tok=dt)
    p.end_line()

    params: Dict[str, Fraction] = {}
    while p.at("NAME", "param"):
        p.advance()
        nt = p.expect("NAME", what="parameter name")
        if re.fullmatch(r"x\d+", nt.text) or nt.text in params or nt.text in ("s", "system", "dim", "param"):
            raise p.error(f"parameter name {nt.text!r} is reserved or already declared", tok=nt)
        p.expect("OP", "=")
        params[nt.text] = p.rational()
        p.end_line()

    names = {f"x{i + 1}": i for i in range(dim)}
    for i, q in enumerate(params):
        names[q] = dim + i
    nvars = dim + len(params)
    blocks: Dict[str, Dict[int, Poly]] = {b: {} for b in BLOCKS}
    locations: Dict[Tuple[str, int], Tuple[int, int]] = {}
    seen = set()
    while not p.at("EOF"):
        bt = p.tok
        if not (bt.kind == "NAME" and bt.text in BLOCKS):
            raise p.error(f"unexpected {bt.text!r}", ["'f0:'", "'f1:'", "'f2:'"] + ([] if seen else ["'param'"]))
        if bt.text in seen:
            raise p.error(f"block {bt.text} appears twice")
        seen.add(bt.text)
        p.advance()
        p.expect("OP", ":")
        p.end_line()
        while p.at("NAME") and re.fullmatch(r"x\d+", p.tok.text):
            ct = p.advance()
            idx = int(ct.text[1:]) - 1
            if not 0 <= idx < dim:
                raise p.error(f"unknown coordinate {ct.text}", tok=ct)
            p.expect("PRIME", what="\"'\"")
            p.expect("OP", "+=")
            poly = p.expr(names, nvars)
            p.end_line()
            cur = blocks[bt.text].get(idx)
            total = poly if cur is None else cur + poly
            if total.is_zero():
                blocks[bt.text].pop(idx, None)
            else:
                blocks[bt.text][idx] = total
            locations.setdefault((bt.text, idx), (ct.line, ct.col))
    doc = SystemDocument(name, dim, params, blocks, locations, source)
    doc.to_system()  # semantic checks, including f0(0) = 0
    return doc


# ---------------------------------------------------------------------------
# control files
# ---------------------------------------------------------------------------

@dataclass
class ControlDocument:
    horizon: Fraction
    pieces: Dict[str, List[Tuple[Fraction, Fraction, Poly]]]

    def to_controls(self) -> ControlPair:
        out = []
        for which in ("u", "v"):
            ps = self.pieces.get(which)
            if not ps:
                out.append(PiecewisePoly.constant(0, self.horizon))
                continue
            breaks = [ps[0][0]] + [b for _, b, _ in ps]
            polys = [tuple(q.terms.get((k,), Fraction(0)) for k in range(q.degree() + 1)) for _, _, q in ps]
            out.append(PiecewisePoly(breaks, polys))
        return ControlPair(*out)


def parse_controls(text: str, source: str = "<controls>") -> ControlDocument:
    p = _Parser(text, source)
    p.skip_newlines()
    p.expect("NAME", "horizon")
    ht = p.tok
    T = p.rational()
    if T <= 0:
        raise p.error("horizon must be positive", tok=ht)
    p.end_line()
    pieces: Dict[str, List[Tuple[Fraction, Fraction, Poly]]] = {}
    while not p.at("EOF"):
        bt = p.tok
        if not (bt.kind == "NAME" and bt.text in ("u", "v")):
            raise p.error(f"unexpected {bt.text!r}", ["'u:'", "'v:'"])
        if bt.text in pieces:
            raise p.error(f"block {bt.text} appears twice")
        p.advance()
        p.expect("OP", ":")
        p.end_line()
        rows: List[Tuple[Fraction, Fraction, Poly]] = []
        while p.at("NAME", "piece"):
            pt = p.advance()
            a = p.rational()
            p.expect("OP", "..")
            b = p.rational()
            p.expect("OP", ":")
            poly = p.expr({"s": 0}, 1)
            p.end_line()
            expect_a = rows[-1][1] if rows else Fraction(0)
            if a != expect_a or b <= a:
                raise p.error(f"piece {a}..{b} must start at {expect_a} and have positive length", tok=pt)
            rows.append((a, b, poly))
        if not rows:
            raise p.error("empty control block", ["'piece'"])
        if rows[-1][1] != T:
            raise DslError(f"pieces of {bt.text} end at {rows[-1][1]}, horizon is {T}", bt.line, bt.col, source=source)
        pieces[bt.text] = rows
    return ControlDocument(T, pieces)


# ---------------------------------------------------------------------------
# bracket specs
# ---------------------------------------------------------------------------

_SPEC_RE = re.compile(r"^\s*(M1|M2|W1|W2|C)((?:\s+[jl]\s*=\s*\d+)*)\s*$")


def parse_bracket_spec(text: str) -> freelie.Bracket:
    """``X0``, ``W1 j=1 l=0``, ``C j=2``, or a parenthesized bracket."""
    s = text.strip()
    if s in ("X0", "X1", "X2"):
        return freelie.generator(int(s[1]))
    if s.startswith("("):
        return freelie.parse_bracket(s)
    m = _SPEC_RE.match(s)
    if not m:
        raise freelie.FreeLieError(f"malformed bracket spec {text!r}")
    idx = {"j": None, "l": 0}
    for key, val in re.findall(r"([jl])\s*=\s*(\d+)", m.group(2)):
        idx[key] = int(val)
    if idx["j"] is None:
        raise freelie.FreeLieError(f"bracket spec {text!r} needs j=")
    kind = m.group(1)
    if kind.startswith("M") and idx["l"]:
        raise freelie.FreeLieError("M families take only j")
    return freelie.family(kind, idx["j"], idx["l"])
