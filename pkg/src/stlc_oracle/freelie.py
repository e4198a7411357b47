"""Free Lie algebra over {X0, X1, X2}: formal brackets, a Hall basis and
normalization into it.

Brackets are interned binary trees, so structural equality is identity and
hashing is cheap.  The Hall order is

* X0 is the largest element;
* every other bracket is compared by ``n`` (number of X1/X2 letters), then
  by length, then structurally on (left, right), with X1 < X2.

With this order the degree-one layer is the chain
``X1 < X2 < X1 0 < X2 0 < X1 0^2 < ...`` and the degree-two layer consists
exactly of the W and C families.  Both facts are re-checked by the tests.

All coefficients are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import os
from fractions import Fraction
from functools import lru_cache
from math import ceil
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

DEFAULT_CAP = 10
_X0_RANK = 1 << 30


class FreeLieError(ValueError):
    pass


class BasisTooSmall(FreeLieError):
    pass


class CapacityError(FreeLieError):
    pass


def configured_cap() -> int:
    """Basis length cap, overridable with ``STLC_ORACLE_MAX_LEN``."""
    raw = os.environ.get("STLC_ORACLE_MAX_LEN")
    if raw is None or raw.strip() == "":
        return DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise CapacityError(f"STLC_ORACLE_MAX_LEN must be an integer, got {raw!r}")
    if cap < 1:
        raise CapacityError("STLC_ORACLE_MAX_LEN must be positive")
    return cap


# ---------------------------------------------------------------------------
# formal brackets
# ---------------------------------------------------------------------------

class Bracket:
    """Element of the free magma over X0, X1, X2.

    Never construct directly; use :data:`X0`, :data:`X1`, :data:`X2` and
    :func:`br`.  Instances are interned.
    """

    __slots__ = ("left", "right", "gen", "length", "n0", "n1", "n2", "key", "_hash", "__weakref__")

    def __init__(self, left, right, gen, length, n0, n1, n2, key):
        self.left = left
        self.right = right
        self.gen = gen
        self.length = length
        self.n0 = n0
        self.n1 = n1
        self.n2 = n2
        self.key = key
        self._hash = hash(key)

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def is_generator(self) -> bool:
        return self.gen is not None

    def counts(self) -> Tuple[int, int, int, int]:
        return (self.length, self.n0, self.n1, self.n2)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other

    def __lt__(self, other: "Bracket"):
        return self.key < other.key

    def __le__(self, other: "Bracket"):
        return self is other or self.key < other.key

    def __gt__(self, other: "Bracket"):
        return self.key > other.key

    def __ge__(self, other: "Bracket"):
        return self is other or self.key > other.key

    def __str__(self):
        if self.gen is not None:
            return f"X{self.gen}"
        return f"({self.left},{self.right})"

    def __repr__(self):
        return f"Bracket({self})"

    def __reduce__(self):
        if self.gen is not None:
            return (generator, (self.gen,))
        return (br, (self.left, self.right))


_INTERN: Dict[tuple, Bracket] = {}


def generator(i: int) -> Bracket:
    if i not in (0, 1, 2):
        raise FreeLieError(f"no generator X{i}")
    tag = ("g", i)
    b = _INTERN.get(tag)
    if b is None:
        if i == 0:
            key = (_X0_RANK,)
        else:
            key = (1, 1, (i,))
        b = Bracket(None, None, i, 1, int(i == 0), int(i == 1), int(i == 2), key)
        _INTERN[tag] = b
    return b


X0 = generator(0)
X1 = generator(1)
X2 = generator(2)


def br(left: Bracket, right: Bracket) -> Bracket:
    """The formal bracket (left, right)."""
    tag = (id(left), id(right))
    b = _INTERN.get(tag)
    if b is None:
        n1 = left.n1 + right.n1
        n2 = left.n2 + right.n2
        length = left.length + right.length
        key = (n1 + n2, length, (left.key, right.key))
        b = Bracket(left, right, None, length, left.n0 + right.n0, n1, n2, key)
        _INTERN[tag] = b
    return b


def counts(b: Bracket) -> Tuple[int, int, int, int]:
    """(length, n0, n1, n2)."""
    return b.counts()


def bracket_int(b, nu: int):
    """Right-iterated bracket with X0, ``b 0^nu``; works on brackets and
    Lie elements."""
    if nu < 0:
        raise FreeLieError("nu must be nonnegative")
    if isinstance(b, LieElement):
        out = b
        x0 = LieElement.of(X0)
        for _ in range(nu):
            out = lie_bracket(out, x0)
        return out
    for _ in range(nu):
        b = br(b, X0)
    return b


def parse_bracket(text: str) -> Bracket:
    """Parse the fully parenthesized form, e.g. ``((X1,X2),X0)``."""
    s = text.replace(" ", "")
    pos = 0

    def fail(msg):
        raise FreeLieError(f"bad bracket {text!r} at offset {pos}: {msg}")

    def node():
        nonlocal pos
        if pos < len(s) and s[pos] == "(":
            pos += 1
            a = node()
            if pos >= len(s) or s[pos] != ",":
                fail("expected ','")
            pos += 1
            b = node()
            if pos >= len(s) or s[pos] != ")":
                fail("expected ')'")
            pos += 1
            return br(a, b)
        if s[pos:pos + 1] == "X" and s[pos + 1:pos + 2] in ("0", "1", "2"):
            g = int(s[pos + 1])
            pos += 2
            return generator(g)
        fail("expected '(' or X0/X1/X2")

    if not s:
        fail("empty")
    out = node()
    if pos != len(s):
        fail("trailing input")
    return out


def swap_generators(b: Bracket) -> Bracket:
    """Tree obtained by exchanging X1 and X2."""
    if b.gen is not None:
        return generator({0: 0, 1: 2, 2: 1}[b.gen])
    return br(swap_generators(b.left), swap_generators(b.right))


# ---------------------------------------------------------------------------
# Hall membership, named families
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def is_hall(b: Bracket) -> bool:
    if b.gen is not None:
        return True
    l, r = b.left, b.right
    if not (is_hall(l) and is_hall(r) and l < r):
        return False
    return r.gen is not None or r.left <= l


def family(kind: str, j: int, l: int = 0) -> Bracket:
    """Named Hall elements.

    ``M1``/``M2``: ``X_i 0^j``.  ``W1``/``W2``: ``(M_{j-1}, M_j) 0^l`` with
    j >= 1.  ``C``: the mixed element, the pair being swapped when j is odd.
    """
    if j < 0 or l < 0:
        raise FreeLieError("family indices must be nonnegative")
    if kind in ("M1", "M2"):
        return bracket_int(generator(int(kind[1])), j + l)
    if kind in ("W1", "W2"):
        if j < 1:
            raise FreeLieError("W family needs j >= 1")
        g = generator(int(kind[1]))
        return bracket_int(br(bracket_int(g, j - 1), bracket_int(g, j)), l)
    if kind == "C":
        a = bracket_int(X1, (j + 1) // 2)
        b = bracket_int(X2, j // 2)
        core = br(b, a) if j % 2 else br(a, b)
        return bracket_int(core, l)
    raise FreeLieError(f"unknown family {kind!r}")


def degree_one_index(b: Bracket) -> Optional[Tuple[int, int]]:
    """(i, j) when b = X_i 0^j with i in {1, 2}."""
    j = 0
    while b.gen is None:
        if b.right is not X0:
            return None
        b = b.left
        j += 1
    if b.gen == 0:
        return None
    return (b.gen, j)


def identify_family(b: Bracket) -> Optional[Tuple[str, int, int]]:
    """Recognize M, W and C elements; returns (kind, j, l) or None."""
    d1 = degree_one_index(b)
    if d1 is not None:
        return (f"M{d1[0]}", d1[1], 0)
    if b.n != 2:
        return None
    l = 0
    core = b
    while core.gen is None and core.right is X0:
        core = core.left
        l += 1
    if core.gen is not None:
        return None
    a = degree_one_index(core.left)
    c = degree_one_index(core.right)
    if a is None or c is None:
        return None
    (ia, ja), (ic, jc) = a, c
    if ia == ic and jc == ja + 1:
        return (f"W{ia}", jc, l)
    if ia == 1 and ic == 2 and ja == jc:
        return ("C", 2 * ja, l)
    if ia == 2 and ic == 1 and jc == ja + 1:
        return ("C", 2 * ja + 1, l)
    return None


def hall_decompose(b: Bracket) -> Tuple[Bracket, Bracket, int]:
    """Unique (b1, b2, m) with b = ad_{b1}^m(b2), b1 < b2, m maximal."""
    if b.gen is not None:
        raise FreeLieError("generators have no Hall decomposition")
    b1 = b.left
    rest = b.right
    m = 1
    while rest.gen is None and rest.left is b1:
        rest = rest.right
        m += 1
    return b1, rest, m


# ---------------------------------------------------------------------------
# obstruction sets
# ---------------------------------------------------------------------------

def pi_order(k: int, m: int) -> int:
    """pi(k, m) = 1 + ceil(2k / m)."""
    if k < 1 or m < 1:
        raise FreeLieError("k and m must be positive")
    return 1 + ceil(Fraction(2 * k, m))


class ObstructionParams:
    """(k, m) for the symmetric sets, (k, k', m, m') for the asymmetric ones."""

    __slots__ = ("k", "m", "kprime", "mprime")

    def __init__(self, k: int, m: int, kprime: Optional[int] = None, mprime: Optional[int] = None):
        if k < 1 or m < 1:
            raise FreeLieError("k and m must be positive")
        if (kprime is None) != (mprime is None):
            raise FreeLieError("k' and m' must be given together")
        if kprime is not None:
            if kprime < 1 or mprime < 1:
                raise FreeLieError("k' and m' must be positive")
            if kprime > k:
                raise FreeLieError("asymmetric sets need k' <= k")
        self.k, self.m, self.kprime, self.mprime = k, m, kprime, mprime

    @property
    def symmetric(self) -> bool:
        return self.kprime is None

    @property
    def pi(self) -> int:
        return pi_order(self.k, self.m)

    @property
    def pi_prime(self) -> int:
        if self.symmetric:
            return self.pi
        return pi_order(self.kprime, self.mprime)

    def as_dict(self):
        if self.symmetric:
            return {"k": self.k, "m": self.m}
        return {"k": self.k, "m": self.m, "kprime": self.kprime, "mprime": self.mprime}

    def __repr__(self):
        return f"ObstructionParams({self.as_dict()})"


def in_obstruction_set(b: Bracket, params: ObstructionParams) -> bool:
    """Membership of a Hall element in the compensating set (symmetric or
    asymmetric), decided from its counts and family."""
    n = b.n
    pi = params.pi
    k = params.k
    if params.symmetric:
        if n != 2:
            return 1 <= n <= pi
        fam = identify_family(b)
        if fam is None:
            return False
        kind, j, _ = fam
        if kind == "C":
            return j <= 2 * k - 2
        return 1 <= j <= k - 1
    kp = params.kprime
    if n != 2:
        return 1 <= n <= pi and b.n1 <= pi and b.n2 <= params.pi_prime
    fam = identify_family(b)
    if fam is None:
        return False
    kind, j, _ = fam
    if kind == "C":
        return j <= k + kp - 2
    if kind == "W1":
        return 1 <= j <= k - 1
    return 1 <= j <= kp - 1


# ---------------------------------------------------------------------------
# Lie elements
# ---------------------------------------------------------------------------

class LieElement:
    """Sparse rational combination of Hall elements."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Optional[Dict[Bracket, Fraction]] = None):
        self._c: Dict[Bracket, Fraction] = {}
        if coeffs:
            for b, c in coeffs.items():
                c = Fraction(c)
                if c:
                    self._c[b] = c

    @classmethod
    def of(cls, b: Bracket, c=1) -> "LieElement":
        return cls({b: Fraction(c)})

    @classmethod
    def zero(cls) -> "LieElement":
        return cls()

    def items(self) -> List[Tuple[Bracket, Fraction]]:
        return sorted(self._c.items(), key=lambda kv: kv[0].key)

    def support(self) -> List[Bracket]:
        return [b for b, _ in self.items()]

    def coeff(self, b: Bracket) -> Fraction:
        return self._c.get(b, Fraction(0))

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self):
        return bool(self._c)

    def __len__(self):
        return len(self._c)

    def __iter__(self) -> Iterator[Tuple[Bracket, Fraction]]:
        return iter(self.items())

    def __eq__(self, other):
        if isinstance(other, LieElement):
            return self._c == other._c
        if other == 0:
            return not self._c
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def _combine(self, other: "LieElement", sign: int) -> "LieElement":
        out = dict(self._c)
        for b, c in other._c.items():
            v = out.get(b, 0) + sign * c
            if v:
                out[b] = v
            else:
                out.pop(b, None)
        res = LieElement()
        res._c = out
        return res

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        res = LieElement()
        res._c = {b: -c for b, c in self._c.items()}
        return res

    def __mul__(self, s):
        s = Fraction(s)
        if not s:
            return LieElement()
        res = LieElement()
        res._c = {b: c * s for b, c in self._c.items()}
        return res

    __rmul__ = __mul__

    def max_length(self) -> int:
        return max((b.length for b in self._c), default=0)

    def __str__(self):
        if not self._c:
            return "0"
        parts = []
        for b, c in self.items():
            parts.append(f"{c}*{b}" if c != 1 else str(b))
        return " + ".join(parts)

    def __repr__(self):
        return f"LieElement({self})"


_HB_CACHE: Dict[Tuple[Bracket, Bracket], LieElement] = {}


def _hall_bracket(h1: Bracket, h2: Bracket) -> LieElement:
    """[h1, h2] for Hall elements, expanded on the Hall basis."""
    if h1 is h2:
        return LieElement()
    memo = _HB_CACHE.get((h1, h2))
    if memo is not None:
        return memo
    if h1 > h2:
        out = -_hall_bracket(h2, h1)
    elif h2.gen is not None or h2.left <= h1:
        out = LieElement.of(br(h1, h2))
    else:
        # h2 = (x, y) with h1 < x: Jacobi
        # [h1, [x, y]] = [[h1, x], y] + [x, [h1, y]]
        x, y = h2.left, h2.right
        acc: Dict[Bracket, Fraction] = {}
        for a, ca in _hall_bracket(h1, x)._c.items():
            for t, ct in _hall_bracket(a, y)._c.items():
                acc[t] = acc.get(t, 0) + ca * ct
        for a, ca in _hall_bracket(h1, y)._c.items():
            for t, ct in _hall_bracket(x, a)._c.items():
                acc[t] = acc.get(t, 0) + ca * ct
        out = LieElement(acc)
    _HB_CACHE[(h1, h2)] = out
    return out


def lie_bracket(a: LieElement, b: LieElement, max_length: Optional[int] = None) -> LieElement:
    """Bilinear bracket of Lie elements."""
    if max_length is not None and a and b and a.max_length() + b.max_length() > max_length:
        raise BasisTooSmall(f"bracket of length {a.max_length() + b.max_length()} exceeds basis length {max_length}")
    acc: Dict[Bracket, Fraction] = {}
    for h1, c1 in a._c.items():
        for h2, c2 in b._c.items():
            for t, ct in _hall_bracket(h1, h2)._c.items():
                acc[t] = acc.get(t, 0) + c1 * c2 * ct
    return LieElement(acc)


_NORM_CACHE: Dict[Bracket, LieElement] = {}


def normalize(b: Bracket, max_length: Optional[int] = None) -> LieElement:
    """Expansion of E(b) on the Hall basis."""
    if max_length is not None and b.length > max_length:
        raise BasisTooSmall(f"bracket of length {b.length} exceeds basis length {max_length}")
    out = _NORM_CACHE.get(b)
    if out is None:
        if b.gen is not None or is_hall(b):
            out = LieElement.of(b)
        else:
            out = lie_bracket(normalize(b.left), normalize(b.right))
        _NORM_CACHE[b] = out
    return out


def as_element(a) -> LieElement:
    if isinstance(a, LieElement):
        return a
    if isinstance(a, Bracket):
        return normalize(a)
    raise TypeError(f"expected Bracket or LieElement, got {type(a).__name__}")


def swap_pi(a) -> LieElement:
    """Lie morphism exchanging X1 and X2."""
    acc = LieElement()
    for b, c in as_element(a):
        acc = acc + normalize(swap_generators(b)) * c
    return acc


def swap_sigma(b: Bracket) -> LieElement:
    """sigma(b) = E(b) + pi(E(b))."""
    e = normalize(b)
    return e + swap_pi(e)


# ---------------------------------------------------------------------------
# Hall basis
# ---------------------------------------------------------------------------

class HallBasis:
    """Hall elements up to ``max_length``, in Hall order."""

    def __init__(self, members: List[Bracket], max_length: int):
        self.members = members
        self.max_length = max_length
        self.index = {b: i for i, b in enumerate(members)}

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, b):
        return b in self.index

    @staticmethod
    def compare(a: Bracket, b: Bracket) -> int:
        return (a.key > b.key) - (a.key < b.key)

    def layer(self, length: int) -> List[Bracket]:
        return [b for b in self.members if b.length == length]

    def layer_dimensions(self) -> List[int]:
        dims = [0] * self.max_length
        for b in self.members:
            dims[b.length - 1] += 1
        return dims

    def normalize(self, b: Bracket) -> LieElement:
        return normalize(b, self.max_length)

    def lie_bracket(self, a: LieElement, b: LieElement) -> LieElement:
        return lie_bracket(a, b, self.max_length)

    def dump(self) -> str:
        """One Hall element per line, fully parenthesized."""
        return "".join(f"{b}\n" for b in self.members)

    def check_axioms(self) -> None:
        """Raise if any Hall axiom or the degree-one chain is violated."""
        for b in self.members:
            if b.gen is not None:
                continue
            l, r = b.left, b.right
            if l not in self.index or r not in self.index:
                raise FreeLieError(f"{b}: factors are not members")
            if not l < r:
                raise FreeLieError(f"{b}: left factor not smaller")
            if not (r.gen is not None or r.left <= l):
                raise FreeLieError(f"{b}: left(right) exceeds left")
            if not l < b:
                raise FreeLieError(f"{b}: not larger than its left factor")
        if max(self.members, key=lambda b: b.key) is not X0:
            raise FreeLieError("X0 is not maximal")
        chain = [b for b in self.members if b.n == 1]
        expect = []
        for j in range(self.max_length):
            expect += [family("M1", j), family("M2", j)]
        if chain != expect:
            raise FreeLieError("degree-one layer does not match the chain X1 0^k < X2 0^k < ...")
        for b in self.members:
            if b.n == 2 and identify_family(b) is None:
                raise FreeLieError(f"{b}: degree-two element outside the W/C families")


_BASES: Dict[int, HallBasis] = {}


def build_hall_basis(max_length: int, cap: Optional[int] = None) -> HallBasis:
    """All Hall elements of length <= max_length."""
    if max_length < 1:
        raise FreeLieError("max_length must be >= 1")
    cap = configured_cap() if cap is None else cap
    if max_length > cap:
        raise CapacityError(f"max_length {max_length} exceeds the configured cap {cap}")
    hit = _BASES.get(max_length)
    if hit is not None:
        return hit
    layers: List[List[Bracket]] = [[], [X1, X2, X0]]
    for length in range(2, max_length + 1):
        new = []
        for la in range(1, length):
            for b2 in layers[length - la]:
                for b1 in layers[la]:
                    if b1 < b2 and (b2.gen is not None or b2.left <= b1):
                        new.append(br(b1, b2))
        layers.append(new)
    members = sorted((b for layer in layers for b in layer), key=lambda b: b.key)
    basis = HallBasis(members, max_length)
    _BASES[max_length] = basis
    return basis


def hall_elements(max_length: int) -> Iterable[Bracket]:
    return iter(build_hall_basis(max_length))


# ---------------------------------------------------------------------------
# expansion coefficients
# ---------------------------------------------------------------------------

def expand_coefficients(kind: str, nu: int) -> Tuple[int, ...]:
    """Integer coefficients of the three bracket expansions.

    alpha: [b, b 0^nu] = sum_r alpha_r [b 0^r, b 0^(r+1)] 0^(nu-2r-1), r = 0..floor((nu-1)/2)
    beta:  [M1_p, M2_p 0^nu] = sum_r beta_r C_{2p+r, nu-r}, r = 0..nu
    gamma: [M2_p, M1_p 0^nu] = sum_r gamma_r C_{2p+r, nu-r}, r = 0..nu
    """
    if kind == "alpha":
        if nu < 1:
            raise FreeLieError("alpha needs nu >= 1")
        return _alpha(nu)
    if kind in ("beta", "gamma"):
        if nu < 0:
            raise FreeLieError("nu must be nonnegative")
        return _beta_gamma(kind, nu)
    raise FreeLieError(f"unknown coefficient family {kind!r}")


@lru_cache(maxsize=None)
def _alpha(nu: int) -> Tuple[int, ...]:
    if nu <= 2:
        return (1,)
    size = (nu - 1) // 2 + 1
    p1, p2 = _alpha(nu - 1), _alpha(nu - 2)
    get = lambda seq, r: seq[r] if 0 <= r < len(seq) else 0
    return tuple(get(p1, r) - get(p2, r - 1) for r in range(size))


@lru_cache(maxsize=None)
def _beta_gamma(kind: str, nu: int) -> Tuple[int, ...]:
    if nu == 0:
        return (1,) if kind == "beta" else (-1,)
    if nu == 1:
        return (1, 1) if kind == "beta" else (0, 1)
    p1, p2 = _beta_gamma(kind, nu - 1), _beta_gamma(kind, nu - 2)
    get = lambda seq, r: seq[r] if 0 <= r < len(seq) else 0
    return tuple(get(p1, r) - get(p2, r - 2) for r in range(nu + 1))
