"""Polynomial vector fields over Q^d, their Lie brackets, evaluation of
formal brackets and exact span arithmetic."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import freelie
from .freelie import Bracket, LieElement, ObstructionParams


class VectorFieldError(ValueError):
    pass


Exponent = Tuple[int, ...]


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

class Poly:
    """Sparse polynomial in ``nvars`` variables with rational coefficients.

    Terms are kept in a dict from exponent tuple to nonzero Fraction.
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Optional[Dict[Exponent, Fraction]] = None):
        self.nvars = nvars
        clean = {}
        if terms:
            for e, c in terms.items():
                if len(e) != nvars:
                    raise VectorFieldError(f"exponent {e} does not have {nvars} entries")
                c = Fraction(c)
                if c:
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def const(cls, nvars: int, c) -> "Poly":
        return cls(nvars, {(0,) * nvars: Fraction(c)})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        """The coordinate x_{i+1} (0-based index)."""
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def sorted_terms(self) -> List[Tuple[Exponent, Fraction]]:
        # graded lexicographic, highest first
        return sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-x for x in kv[0])))

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def _raw(self, terms):
        p = Poly.__new__(Poly)
        p.nvars = self.nvars
        p.terms = terms
        p._hash = None
        return p

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return self._raw(out)

    def __neg__(self):
        return self._raw({e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def scale(self, s) -> "Poly":
        s = Fraction(s)
        if not s:
            return self._raw({})
        return self._raw({e: c * s for e, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        out: Dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return self._raw({e: c for e, c in out.items() if c})

    __rmul__ = scale

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise VectorFieldError("negative power")
        out = Poly.const(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def diff(self, i: int) -> "Poly":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return self._raw(out)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def __call__(self, point: Sequence) -> Fraction:
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v *= Fraction(x) ** k
            total += v
        return total

    def substitute(self, values: Dict[int, Fraction], keep: Sequence[int]) -> "Poly":
        """Fix the variables in ``values`` and keep ``keep`` (in order) as the
        variables of the result."""
        out: Dict[Exponent, Fraction] = {}
        for e, c in self.terms.items():
            v = Fraction(c)
            for i, x in values.items():
                if e[i]:
                    v *= Fraction(x) ** e[i]
            ne = tuple(e[i] for i in keep)
            out[ne] = out.get(ne, 0) + v
        return Poly(len(keep), out)

    def to_str(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        out = []
        for e, c in self.sorted_terms():
            mono = []
            for name, k in zip(names, e):
                if k == 1:
                    mono.append(name)
                elif k > 1:
                    mono.append(f"{name}^{k}")
            mag = abs(c)
            if mono:
                body = "*".join(mono)
                text = body if mag == 1 else f"{_frac_str(mag)}*{body}"
            else:
                text = _frac_str(mag)
            if not out:
                out.append(text if c > 0 else f"-{text}")
            else:
                out.append(f" + {text}" if c > 0 else f" - {text}")
        return "".join(out)

    def __repr__(self):
        return f"Poly({self.to_str([f'x{i + 1}' for i in range(self.nvars)])})"


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------

class PolyVectorField:
    """d polynomial components in x1..xd."""

    __slots__ = ("dim", "comps", "_compiled")

    def __init__(self, comps: Sequence[Poly]):
        comps = tuple(comps)
        d = len(comps)
        for p in comps:
            if p.nvars != d:
                raise VectorFieldError(f"component in {p.nvars} variables for a field on Q^{d}")
        self.dim = d
        self.comps = comps
        self._compiled = None

    @classmethod
    def zero(cls, d: int) -> "PolyVectorField":
        return cls([Poly(d) for _ in range(d)])

    @classmethod
    def constant(cls, vec: Sequence) -> "PolyVectorField":
        d = len(vec)
        return cls([Poly.const(d, c) for c in vec])

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.comps)

    def __eq__(self, other):
        if not isinstance(other, PolyVectorField):
            return NotImplemented
        return self.comps == other.comps

    def __hash__(self):
        return hash(self.comps)

    def __add__(self, other):
        _same_dim(self, other)
        return PolyVectorField([a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        _same_dim(self, other)
        return PolyVectorField([a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self):
        return PolyVectorField([-a for a in self.comps])

    def scale(self, s) -> "PolyVectorField":
        return PolyVectorField([a.scale(s) for a in self.comps])

    def directional(self, g: "PolyVectorField") -> "PolyVectorField":
        """Dg . self."""
        _same_dim(self, g)
        d = self.dim
        out = []
        for gi in g.comps:
            acc = Poly(d)
            for j, fj in enumerate(self.comps):
                if fj.terms:
                    dg = gi.diff(j)
                    if dg.terms:
                        acc = acc + fj * dg
            out.append(acc)
        return PolyVectorField(out)

    def at(self, point: Sequence) -> Tuple[Fraction, ...]:
        return tuple(p(point) for p in self.comps)

    def at_zero(self) -> Tuple[Fraction, ...]:
        return tuple(p.constant_term() for p in self.comps)

    def compiled(self):
        """Float evaluator ``x -> f(x)`` using a monomial table."""
        if self._compiled is None:
            exps = sorted({e for p in self.comps for e in p.terms})
            if not exps:
                d = self.dim
                self._compiled = lambda x: np.zeros(d)
            else:
                E = np.array(exps, dtype=float).reshape(len(exps), self.dim)
                index = {e: i for i, e in enumerate(exps)}
                C = np.zeros((self.dim, len(exps)))
                for i, p in enumerate(self.comps):
                    for e, c in p.terms.items():
                        C[i, index[e]] = float(c)
                mask = E > 0

                def f(x, E=E, C=C, mask=mask):
                    powers = np.where(mask, np.power(x, E), 1.0)
                    return C @ powers.prod(axis=1)

                self._compiled = f
        return self._compiled

    def to_str(self) -> str:
        names = [f"x{i + 1}" for i in range(self.dim)]
        return "(" + ", ".join(p.to_str(names) for p in self.comps) + ")"

    def __repr__(self):
        return f"PolyVectorField{self.to_str()}"


def _same_dim(f: PolyVectorField, g: PolyVectorField):
    if f.dim != g.dim:
        raise VectorFieldError(f"dimension mismatch: {f.dim} vs {g.dim}")


def vf_bracket(f: PolyVectorField, g: PolyVectorField) -> PolyVectorField:
    """[f, g] = Dg.f - Df.g."""
    _same_dim(f, g)
    if f.is_zero() or g.is_zero():
        return PolyVectorField.zero(f.dim)
    return f.directional(g) - g.directional(f)


class PolySystem:
    """x' = f0(x) + u f1(x) + v f2(x) with f0(0) = 0.

    Evaluated brackets are memoized per instance.
    """

    def __init__(self, f0: PolyVectorField, f1: PolyVectorField, f2: PolyVectorField, name: str = "system",
                 params: Optional[dict] = None):
        if not (f0.dim == f1.dim == f2.dim):
            raise VectorFieldError("f0, f1, f2 must share the dimension")
        if any(f0.at_zero()):
            raise VectorFieldError("f0(0) must vanish")
        self.name = name
        self.params = dict(params or {})
        self.dim = f0.dim
        self.fields = (f0, f1, f2)
        self._cache: Dict[Bracket, PolyVectorField] = {}

    @property
    def f0(self):
        return self.fields[0]

    @property
    def f1(self):
        return self.fields[1]

    @property
    def f2(self):
        return self.fields[2]

    def field_of(self, b: Bracket) -> PolyVectorField:
        hit = self._cache.get(b)
        if hit is None:
            if b.gen is not None:
                hit = self.fields[b.gen]
            else:
                hit = vf_bracket(self.field_of(b.left), self.field_of(b.right))
            self._cache[b] = hit
        return hit

    def __repr__(self):
        return f"PolySystem({self.name}, d={self.dim})"


def evaluate_lie(system: PolySystem, a) -> PolyVectorField:
    """Image of a formal bracket or Lie element under X_i -> f_i."""
    if isinstance(a, Bracket):
        return system.field_of(a)
    if isinstance(a, LieElement):
        out = PolyVectorField.zero(system.dim)
        for b, c in a:
            out = out + system.field_of(b).scale(c)
        return out
    raise TypeError(f"expected Bracket or LieElement, got {type(a).__name__}")


def eval_at_zero(system: PolySystem, a) -> Tuple[Fraction, ...]:
    return evaluate_lie(system, a).at_zero()


# ---------------------------------------------------------------------------
# exact subspaces
# ---------------------------------------------------------------------------

class RationalSubspace:
    """Subspace of Q^d stored as reduced row-echelon rows with unit pivots."""

    __slots__ = ("dim", "rows", "pivots")

    def __init__(self, dim: int, rows=(), pivots=()):
        self.dim = dim
        self.rows: Tuple[Tuple[Fraction, ...], ...] = tuple(rows)
        self.pivots: Tuple[int, ...] = tuple(pivots)

    @classmethod
    def span(cls, dim: int, vectors: Iterable[Sequence]) -> "RationalSubspace":
        rows = []
        for v in vectors:
            if len(v) != dim:
                raise VectorFieldError(f"vector of length {len(v)} in Q^{dim}")
            rows.append(_integer_row(v))
        echelon, pivots = _bareiss(rows, dim)
        return cls(dim, *_normalize_echelon(echelon, pivots))

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _check(self, v):
        if len(v) != self.dim:
            raise VectorFieldError(f"vector of length {len(v)} in Q^{self.dim}")

    def reduce(self, v: Sequence) -> List[Fraction]:
        self._check(v)
        r = [Fraction(x) for x in v]
        for row, p in zip(self.rows, self.pivots):
            c = r[p]
            if c:
                for i in range(p, self.dim):
                    if row[i]:
                        r[i] -= c * row[i]
        return r

    def contains(self, v: Sequence) -> bool:
        return not any(self.reduce(v))

    __contains__ = contains

    def with_vector(self, v: Sequence) -> "RationalSubspace":
        self._check(v)
        if self.contains(v):
            return self
        return RationalSubspace.span(self.dim, list(self.rows) + [v])

    def complement_coords(self) -> List[int]:
        ps = set(self.pivots)
        return [i for i in range(self.dim) if i not in ps]

    def quotient_image(self, v: Sequence) -> Tuple[Fraction, ...]:
        """Coordinates of v modulo the subspace (non-pivot entries of the
        reduced vector)."""
        r = self.reduce(v)
        return tuple(r[i] for i in self.complement_coords())

    def lift_form(self, q: Sequence) -> Tuple[Fraction, ...]:
        """Row vector P on Q^d with P(x) = q . quotient_image(x)."""
        cc = self.complement_coords()
        if len(q) != len(cc):
            raise VectorFieldError("form does not match the quotient dimension")
        out = []
        for j in range(self.dim):
            e = [0] * self.dim
            e[j] = 1
            img = self.quotient_image(e)
            out.append(sum((a * b for a, b in zip(q, img)), Fraction(0)))
        return tuple(out)

    def __eq__(self, other):
        if not isinstance(other, RationalSubspace):
            return NotImplemented
        return self.dim == other.dim and self.rows == other.rows

    def __repr__(self):
        rows = ["(" + ", ".join(_frac_str(x) for x in r) + ")" for r in self.rows]
        return f"RationalSubspace(d={self.dim}, rows=[{', '.join(rows)}])"


def _integer_row(v: Sequence) -> List[int]:
    fr = [Fraction(x) for x in v]
    den = 1
    for x in fr:
        den = den * x.denominator // math.gcd(den, x.denominator)
    return [int(x * den) for x in fr]


def _bareiss(rows: List[List[int]], ncols: int) -> Tuple[List[List[int]], List[int]]:
    """Fraction-free row echelon form; every division is exact."""
    M = [list(r) for r in rows]
    r, prev, pivots = 0, 1, []
    for c in range(ncols):
        piv = next((i for i in range(r, len(M)) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        p = M[r][c]
        for i in range(r + 1, len(M)):
            a = M[i][c]
            for j in range(c + 1, ncols):
                num = p * M[i][j] - a * M[r][j]
                q, rem = divmod(num, prev)
                assert rem == 0, "Bareiss division must be exact"
                M[i][j] = q
            M[i][c] = 0
        prev = p
        pivots.append(c)
        r += 1
    return M[:r], pivots


def _normalize_echelon(rows: List[List[int]], pivots: List[int]):
    """Unit pivots and zeros above them."""
    out = [[Fraction(x, row[p]) for x in row] for row, p in zip(rows, pivots)]
    for i in range(len(out) - 1, -1, -1):
        p = pivots[i]
        for k in range(i):
            c = out[k][p]
            if c:
                out[k] = [a - c * b for a, b in zip(out[k], out[i])]
    return [tuple(r) for r in out], pivots


def standard_subspace(dim: int, indices: Iterable[int]) -> RationalSubspace:
    """span(e_i : i in indices), 1-based."""
    vecs = []
    for i in indices:
        e = [0] * dim
        e[i - 1] = 1
        vecs.append(e)
    return RationalSubspace.span(dim, vecs)


# ---------------------------------------------------------------------------
# horizons and spans
# ---------------------------------------------------------------------------

def nilpotency_horizon(system: PolySystem, length_cap: int) -> Optional[int]:
    """Smallest L <= length_cap such that every Hall element of length L
    evaluates to the zero field, or None.

    Sound because brackets of length > L are spanned by [x, c] with c of
    length L.
    """
    if length_cap < 1:
        raise VectorFieldError("length_cap must be positive")
    basis = freelie.build_hall_basis(length_cap, cap=max(length_cap, freelie.configured_cap()))
    by_len: Dict[int, List[Bracket]] = {}
    for b in basis:
        by_len.setdefault(b.length, []).append(b)
    for L in range(1, length_cap + 1):
        if all(system.field_of(b).is_zero() for b in by_len.get(L, [])):
            return L
    return None


def obstruction_span(system: PolySystem, params: ObstructionParams, length_cap: int):
    """(span of f_b(0) over Hall members of the compensating set, truncated).

    Lengths run up to horizon - 1 when a nilpotency horizon exists within
    ``length_cap``; otherwise up to ``length_cap`` and truncated is True.
    """
    if length_cap < 1:
        return RationalSubspace(system.dim), True
    horizon = nilpotency_horizon(system, length_cap)
    if horizon is None:
        top, truncated = length_cap, True
    else:
        top, truncated = horizon - 1, False
    vectors = []
    if top >= 1:
        basis = freelie.build_hall_basis(top, cap=max(top, freelie.configured_cap()))
        vectors = [system.field_of(b).at_zero() for b in basis if freelie.in_obstruction_set(b, params)]
    return RationalSubspace.span(system.dim, vectors), truncated


def span_below(system: PolySystem, predicate, length_cap: int) -> RationalSubspace:
    """Span of f_b(0) over Hall members up to ``length_cap`` with predicate(b)."""
    basis = freelie.build_hall_basis(length_cap, cap=max(length_cap, freelie.configured_cap()))
    return RationalSubspace.span(system.dim, [system.field_of(b).at_zero() for b in basis if predicate(b)])
