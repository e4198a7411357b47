"""Exact calculus on piecewise-polynomial controls.

A :class:`PiecewisePoly` stores rational breakpoints ``0 = t0 < ... < tn = T``
and, on each piece, a polynomial in the absolute time variable ``s`` given
by its rational coefficients (lowest degree first).  Products, primitives
and derivatives stay in this class, so the coordinates of the second kind
are computed exactly.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from decimal import Decimal, localcontext
from fractions import Fraction
from math import factorial
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import freelie
from .freelie import Bracket

Coeffs = Tuple[Fraction, ...]
Number = Union[Fraction, float]


class SignalError(ValueError):
    pass


# ---------------------------------------------------------------------------
# univariate helpers (coefficient tuples, lowest degree first)
# ---------------------------------------------------------------------------

def _trim(c) -> Coeffs:
    c = list(c)
    while c and not c[-1]:
        c.pop()
    return tuple(c)


def padd(a: Coeffs, b: Coeffs) -> Coeffs:
    n = max(len(a), len(b))
    return _trim((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n))


def pscale(a: Coeffs, s) -> Coeffs:
    s = Fraction(s)
    return _trim(x * s for x in a)


def pmul(a: Coeffs, b: Coeffs) -> Coeffs:
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def pderiv(a: Coeffs) -> Coeffs:
    return _trim(a[i] * i for i in range(1, len(a)))


def pantideriv(a: Coeffs) -> Coeffs:
    """Antiderivative vanishing at 0."""
    if not a:
        return ()
    return _trim([Fraction(0)] + [x / (i + 1) for i, x in enumerate(a)])


def peval(a: Coeffs, t) -> Fraction:
    acc = Fraction(0)
    for x in reversed(a):
        acc = acc * t + x
    return acc


def kernel_poly(t, l: int) -> Coeffs:
    """Coefficients in s of (t - s)^l / l!."""
    t = Fraction(t)
    return _trim(Fraction(math.comb(l, i)) * t ** (l - i) * (-1) ** i / factorial(l) for i in range(l + 1))


# ---------------------------------------------------------------------------
# piecewise polynomials
# ---------------------------------------------------------------------------

class PiecewisePoly:
    """Piecewise polynomial on [0, T] with rational data."""

    __slots__ = ("breaks", "polys", "_float")

    def __init__(self, breaks: Sequence, polys: Sequence[Sequence], canonical: bool = True):
        breaks = tuple(Fraction(b) for b in breaks)
        polys = tuple(_trim(Fraction(c) for c in p) for p in polys)
        if len(breaks) < 2 or len(polys) != len(breaks) - 1:
            raise SignalError("need n+1 breakpoints for n pieces")
        if breaks[0] != 0:
            raise SignalError("the first breakpoint must be 0")
        if any(b <= a for a, b in zip(breaks, breaks[1:])):
            raise SignalError("breakpoints must be strictly increasing")
        if canonical:
            nb, npl = [breaks[0]], []
            for i, p in enumerate(polys):
                if npl and npl[-1] == p:
                    nb[-1] = breaks[i + 1]
                else:
                    npl.append(p)
                    nb.append(breaks[i + 1])
            breaks, polys = tuple(nb), tuple(npl)
        self.breaks = breaks
        self.polys = polys
        self._float = None

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, c, T) -> "PiecewisePoly":
        return cls((0, T), [(Fraction(c),)])

    @classmethod
    def polynomial(cls, coeffs: Sequence, T) -> "PiecewisePoly":
        return cls((0, T), [tuple(coeffs)])

    @classmethod
    def identity(cls, T) -> "PiecewisePoly":
        return cls((0, T), [(Fraction(0), Fraction(1))])

    @classmethod
    def steps(cls, breaks: Sequence, values: Sequence) -> "PiecewisePoly":
        return cls(breaks, [(Fraction(v),) for v in values])

    # basics ---------------------------------------------------------------
    @property
    def horizon(self) -> Fraction:
        return self.breaks[-1]

    @property
    def pieces(self) -> List[Tuple[Fraction, Fraction, Coeffs]]:
        return [(a, b, p) for a, b, p in zip(self.breaks, self.breaks[1:], self.polys)]

    def degree(self) -> int:
        return max((len(p) - 1 for p in self.polys), default=-1)

    def is_zero(self) -> bool:
        return all(not p for p in self.polys)

    def __eq__(self, other):
        if not isinstance(other, PiecewisePoly):
            return NotImplemented
        return self.breaks == other.breaks and self.polys == other.polys

    def __hash__(self):
        return hash((self.breaks, self.polys))

    def __repr__(self):
        parts = [f"[{a},{b}]:{list(map(str, p))}" for a, b, p in self.pieces]
        return "PiecewisePoly(" + " ".join(parts) + ")"

    def _piece_index(self, t, side: str = "right") -> int:
        t = Fraction(t)
        if t < 0 or t > self.horizon:
            raise SignalError(f"t = {t} outside [0, {self.horizon}]")
        if side == "left" and t > 0:
            i = bisect_right(self.breaks, t) - 1
            if self.breaks[i] == t:
                i -= 1
        else:
            i = bisect_right(self.breaks, t) - 1
        return min(max(i, 0), len(self.polys) - 1)

    def __call__(self, t, side: str = "right") -> Fraction:
        t = Fraction(t)
        return peval(self.polys[self._piece_index(t, side)], t)

    def left_limit(self, t) -> Fraction:
        return self(t, side="left")

    # algebra --------------------------------------------------------------
    def refine(self, breaks: Sequence[Fraction]) -> List[Coeffs]:
        """Polynomials on the (finer) partition ``breaks``."""
        out = []
        for a in breaks[:-1]:
            out.append(self.polys[self._piece_index(a)])
        return out

    def _binary(self, other: "PiecewisePoly", op) -> "PiecewisePoly":
        if not isinstance(other, PiecewisePoly):
            raise TypeError("expected PiecewisePoly")
        if self.horizon != other.horizon:
            raise SignalError("horizons differ")
        breaks = sorted(set(self.breaks) | set(other.breaks))
        pa, pb = self.refine(breaks), other.refine(breaks)
        return PiecewisePoly(breaks, [op(x, y) for x, y in zip(pa, pb)])

    def __add__(self, other):
        return self._binary(other, padd)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: padd(a, pscale(b, -1)))

    def __mul__(self, other):
        if isinstance(other, PiecewisePoly):
            return self._binary(other, pmul)
        return self.scale(other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1)

    def __pow__(self, k: int) -> "PiecewisePoly":
        out = PiecewisePoly.constant(1, self.horizon)
        for _ in range(k):
            out = out * self
        return out

    def scale(self, s) -> "PiecewisePoly":
        return PiecewisePoly(self.breaks, [pscale(p, s) for p in self.polys])

    def times_poly(self, coeffs: Sequence) -> "PiecewisePoly":
        c = _trim(Fraction(x) for x in coeffs)
        return PiecewisePoly(self.breaks, [pmul(p, c) for p in self.polys])

    def derivative(self) -> "PiecewisePoly":
        """Piecewise derivative (values on piece interiors)."""
        return PiecewisePoly(self.breaks, [pderiv(p) for p in self.polys])

    def primitive(self) -> "PiecewisePoly":
        """t -> int_0^t, continuous."""
        out = []
        acc = Fraction(0)
        for a, b, p in self.pieces:
            P = pantideriv(p)
            shift = acc - peval(P, a)
            out.append(padd(P, (shift,)))
            acc = peval(out[-1], b)
        return PiecewisePoly(self.breaks, out)

    def integral(self, a=0, b=None) -> Fraction:
        F = self.primitive()
        b = self.horizon if b is None else b
        return F(b) - F(a)

    def restrict(self, t) -> "PiecewisePoly":
        """Restriction to [0, t]."""
        t = Fraction(t)
        if t <= 0 or t > self.horizon:
            raise SignalError(f"cannot restrict to [0, {t}]")
        breaks = [b for b in self.breaks if b < t] + [t]
        return PiecewisePoly(breaks, self.refine(breaks))

    def is_continuous(self) -> bool:
        return all(peval(p, b) == peval(q, b) for b, p, q in zip(self.breaks[1:-1], self.polys, self.polys[1:]))

    # floats ---------------------------------------------------------------
    def float_pieces(self) -> List[Tuple[float, float, np.ndarray]]:
        """Pieces as (a, b, numpy coefficients highest degree first)."""
        if self._float is None:
            self._float = [(float(a), float(b), np.array([float(x) for x in reversed(p)] or [0.0]))
                           for a, b, p in self.pieces]
        return self._float


def iterated_primitive(u: PiecewisePoly, j: int) -> PiecewisePoly:
    """u_j with u_0 = u and u_{j+1} = int_0^t u_j."""
    if j < 0:
        raise SignalError("j must be nonnegative")
    for _ in range(j):
        u = u.primitive()
    return u


def kernel_integral(g: PiecewisePoly, l: int, t) -> Fraction:
    """int_0^t (t - s)^l / l! g(s) ds, integrating the product literally."""
    t = Fraction(t)
    if t == 0:
        return Fraction(0)
    return g.restrict(t).times_poly(kernel_poly(t, l)).integral()


class ControlPair:
    """Controls (u, v) on a common horizon, with a xi cache."""

    __slots__ = ("u", "v", "_session")

    def __init__(self, u: PiecewisePoly, v: PiecewisePoly):
        if u.horizon != v.horizon:
            raise SignalError("u and v must share the horizon")
        self.u = u
        self.v = v
        self._session = None

    @property
    def horizon(self) -> Fraction:
        return self.u.horizon

    def session(self) -> "XiSession":
        if self._session is None:
            self._session = XiSession(self)
        return self._session

    def __repr__(self):
        return f"ControlPair(u={self.u!r}, v={self.v!r})"


# ---------------------------------------------------------------------------
# coordinates of the second kind
# ---------------------------------------------------------------------------

class XiSession:
    """xi_b as piecewise polynomials in t for one control pair."""

    def __init__(self, controls: ControlPair):
        self.controls = controls
        T = controls.horizon
        self._cache: Dict[Bracket, PiecewisePoly] = {
            freelie.X0: PiecewisePoly.identity(T),
            freelie.X1: controls.u.primitive(),
            freelie.X2: controls.v.primitive(),
        }
        self._prims = {}

    def function(self, b: Bracket) -> PiecewisePoly:
        hit = self._cache.get(b)
        if hit is not None:
            return hit
        if not freelie.is_hall(b):
            raise SignalError(f"{b} is not a Hall element")
        b1, b2, m = freelie.hall_decompose(b)
        integrand = (self.function(b1) ** m) * self.function(b2).derivative()
        out = integrand.primitive().scale(Fraction(1, factorial(m)))
        self._cache[b] = out
        return out

    def primitive(self, which: str, j: int) -> PiecewisePoly:
        key = (which, j)
        hit = self._prims.get(key)
        if hit is None:
            base = self.controls.u if which == "u" else self.controls.v
            hit = base if j == 0 else self.primitive(which, j - 1).primitive()
            self._prims[key] = hit
        return hit

    def value(self, b: Bracket, t) -> Fraction:
        t = Fraction(t)
        if t < 0 or t > self.controls.horizon:
            raise SignalError(f"t = {t} outside [0, {self.controls.horizon}]")
        return self.function(b)(t)


def xi(b: Bracket, t, controls: ControlPair) -> Fraction:
    """Coordinate of the second kind xi_b(t, (u, v)), by the recursion."""
    return controls.session().value(b, t)


def xi_closed_form(kind: str, j: int, l: int, t, controls: ControlPair) -> Fraction:
    """Direct closed forms for the M, W and C families."""
    t = Fraction(t)
    if t < 0 or t > controls.horizon:
        raise SignalError(f"t = {t} outside [0, {controls.horizon}]")
    s = controls.session()
    if kind in ("M1", "M2"):
        return s.primitive("u" if kind == "M1" else "v", j + l + 1)(t)
    if kind in ("W1", "W2"):
        if j < 1:
            raise SignalError("W family needs j >= 1")
        g = s.primitive("u" if kind == "W1" else "v", j)
        return kernel_integral(g * g, l, t) / 2
    if kind == "C":
        g = s.primitive("u", j // 2 + 1) * s.primitive("v", (j + 1) // 2)
        return kernel_integral(g, l, t)
    raise SignalError(f"unknown family {kind!r}")


def xi_ipp(j: int, l: int, N: int, t, controls: ControlPair) -> Tuple[List[Fraction], Fraction]:
    """Integration-by-parts split of xi_{C_{j,l}}(t): N + 1 boundary terms
    and the integral remainder (N = -1 gives the plain integral)."""
    if N < -1 or N > (j + 1) // 2 - 1:
        raise SignalError(f"N = {N} outside [-1, floor((j+1)/2) - 1]")
    t = Fraction(t)
    if t <= 0 or t > controls.horizon:
        raise SignalError(f"t = {t} outside (0, {controls.horizon}]")
    s = controls.session()
    J = (j + 1) // 2
    g = s.primitive("v", J).restrict(t).times_poly(kernel_poly(t, l))
    boundary = []
    gd = g
    for mu in range(N + 1):
        boundary.append((-1) ** mu * s.primitive("u", j // 2 + mu + 2)(t) * gd.left_limit(t))
        gd = gd.derivative()
    # gd is now the (N+1)-th derivative of g
    rem = s.primitive("u", j // 2 + N + 2).restrict(t) * gd
    return boundary, (-1) ** (N + 1) * rem.integral()


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def _real_roots(p: Coeffs, a: Fraction, b: Fraction) -> Tuple[List[Number], bool]:
    """Real roots of p in the open interval (a, b); exact flag says whether
    they are all rational (then they are returned as Fractions)."""
    p = _trim(p)
    if len(p) <= 1:
        return [], True
    if len(p) == 2:
        r = -p[0] / p[1]
        return ([r] if a < r < b else []), True
    import sympy

    x = sympy.Symbol("x")
    P = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(p)], x, domain="QQ")
    roots: List[Number] = []
    exact = True
    rest = P
    for r in sorted(set(P.ground_roots().keys())):
        rf = Fraction(int(r.p), int(r.q))
        rest = sympy.quo(rest, sympy.Poly(x - r, x, domain="QQ"))
        while rest.eval(r) == 0:
            rest = sympy.quo(rest, sympy.Poly(x - r, x, domain="QQ"))
        if a < rf < b:
            roots.append(rf)
    if rest.degree() > 0:
        lo = sympy.Rational(a.numerator, a.denominator)
        hi = sympy.Rational(b.numerator, b.denominator)
        if rest.count_roots(lo, hi) > 0:
            exact = False
            roots = [float(r) for r in roots]
            for rn in rest.nroots(n=30):
                if rn.is_real and float(a) < float(rn) < float(b):
                    roots.append(float(rn))
    roots = sorted(set(roots), key=float)
    return roots, exact


def _abs_integral(p: Coeffs, a: Fraction, b: Fraction) -> Tuple[Number, bool]:
    P = pantideriv(p)
    roots, exact = _real_roots(p, a, b)
    pts = [a] + roots + [b]
    total: Number = Fraction(0) if exact else 0.0
    for x0, x1 in zip(pts, pts[1:]):
        if exact:
            total += abs(peval(P, x1) - peval(P, x0))
        else:
            F = np.polyval([float(c) for c in reversed(P)] or [0.0], [float(x0), float(x1)])
            total += abs(float(F[1] - F[0]))
    return total, exact


def _abs_max(p: Coeffs, a: Fraction, b: Fraction) -> Tuple[Number, bool]:
    crit, exact = _real_roots(pderiv(p), a, b)
    if exact:
        return max(abs(peval(p, x)) for x in [a, b] + crit), True
    vals = [abs(float(peval(p, a))), abs(float(peval(p, b)))]
    fp = [float(c) for c in reversed(p)]
    vals += [abs(float(np.polyval(fp, float(x)))) for x in crit]
    return max(vals), False


def sqrt_decimal(x: Fraction, digits: int = 40) -> Decimal:
    """Correctly rounded decimal square root of a nonnegative rational."""
    with localcontext() as ctx:
        ctx.prec = digits
        return (Decimal(x.numerator) / Decimal(x.denominator)).sqrt()


def l2_squared(u: PiecewisePoly) -> Fraction:
    return (u * u).integral()


def norm_info(u: PiecewisePoly, space: str, m: Optional[int] = None, p=None) -> Tuple[Number, bool]:
    """(value, exact).  ``space`` is one of L1, L2, Linf, Lp (with p) or
    Wmp (with m and p, p possibly ``inf``)."""
    if space == "L1":
        total: Number = Fraction(0)
        exact = True
        for a, b, q in u.pieces:
            v, ex = _abs_integral(q, a, b)
            exact = exact and ex
            total = total + v if (ex and exact) else float(total) + float(v)
        return total, exact
    if space == "L2":
        return float(sqrt_decimal(l2_squared(u))), True
    if space == "Linf":
        best: Number = Fraction(0)
        exact = True
        for a, b, q in u.pieces:
            v, ex = _abs_max(q, a, b)
            exact = exact and ex
            best = max(best, v) if exact else max(float(best), float(v))
        return best, exact
    if space == "Lp":
        if p is None:
            raise SignalError("Lp needs p")
        if p == math.inf or p == "inf":
            return norm_info(u, "Linf")
        p = float(p)
        if p == 1:
            return norm_info(u, "L1")
        if p == 2:
            return norm_info(u, "L2")
        from scipy.integrate import quad

        total = 0.0
        for a, b, q in u.float_pieces():
            val, _ = quad(lambda s: abs(np.polyval(q, s)) ** p, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
            total += val
        return total ** (1.0 / p), False
    if space == "Wmp":
        if m is None or p is None:
            raise SignalError("Wmp needs m and p")
        d = u
        for order in range(m):
            if not d.is_continuous():
                raise SignalError(f"derivative of order {order} jumps at a breakpoint; u is not in W^{{{m},p}}")
            d = d.derivative()
        total = 0.0
        exact = True
        d = u
        parts: List[Number] = []
        for order in range(m + 1):
            v, ex = norm_info(d, "Lp", p=p)
            parts.append(v)
            exact = exact and ex and not isinstance(v, float)
            d = d.derivative()
        if exact:
            return sum(parts, Fraction(0)), True
        return float(sum(float(x) for x in parts)), False
    raise SignalError(f"unknown space {space!r}")


def norm(u: PiecewisePoly, space: str, m: Optional[int] = None, p=None) -> Number:
    return norm_info(u, space, m=m, p=p)[0]


# ---------------------------------------------------------------------------
# scaling probe
# ---------------------------------------------------------------------------

class ScalingReport:
    def __init__(self, bracket, ts, values, exponent, bound_exponent, c_fit, min_ratio):
        self.bracket = bracket
        self.ts = ts
        self.values = values
        self.exponent = exponent
        self.bound_exponent = bound_exponent
        self.c_fit = c_fit
        self.min_ratio = min_ratio

    def as_dict(self):
        return {
            "bracket": str(self.bracket),
            "t": [str(t) for t in self.ts],
            "xi": [float(v) for v in self.values],
            "exponent": self.exponent,
            "bound_exponent": self.bound_exponent,
            "c_fit": self.c_fit,
            "min_ratio": self.min_ratio,
        }


def _estimate_rhs(estimate: dict, b: Bracket, t: Fraction, controls: ControlPair) -> Optional[float]:
    """Bound of the estimates proposition with c = 1."""
    kind = estimate["kind"]
    p = estimate.get("p", 1)
    inv_p = 0.0 if p in (math.inf, "inf") else 1.0 / float(p)
    s = controls.session()
    tf = float(t)
    L = b.length
    base = tf ** L / factorial(L)
    if kind in ("M1", "M2"):
        j0 = estimate["j0"]
        w = s.primitive("u" if kind == "M1" else "v", j0).restrict(t)
        return base * tf ** (-(j0 + 1)) * tf ** (1 - inv_p) * float(norm(w, "Lp", p=p))
    if kind in ("W1", "W2"):
        j0 = estimate["j0"]
        w = s.primitive("u" if kind == "W1" else "v", j0).restrict(t)
        q = math.inf if p in (math.inf, "inf") else 2 * float(p)
        return base * tf ** (-(2 * j0 + 1)) * tf ** (1 - inv_p) * float(norm(w, "Lp", p=q)) ** 2
    if kind == "C":
        k, kp = estimate["k"], estimate["kprime"]
        q = estimate.get("q", math.inf)
        inv_q = 0.0 if q in (math.inf, "inf") else 1.0 / float(q)
        wu = s.primitive("u", k).restrict(t)
        wv = s.primitive("v", kp).restrict(t)
        return (base * tf ** (-(1 + k + kp)) * tf ** (1 - inv_p - inv_q)
                * float(norm(wu, "Lp", p=p)) * float(norm(wv, "Lp", p=q)))
    raise SignalError(f"unknown estimate {kind!r}")


def scaling_probe(generator: Callable[[Fraction], ControlPair], b: Bracket, ts: Sequence,
                  estimate: Optional[dict] = None) -> ScalingReport:
    """Fit log|xi_b(t)| against log t over the sweep ``ts``.

    With ``estimate`` (e.g. ``{"kind": "W1", "j0": 1, "p": 1}``) the bound
    is evaluated with c = 1, its own exponent is fitted, and the smallest c
    making the bound hold on the sweep is reported.
    """
    ts = [Fraction(t) for t in ts]
    if len(ts) < 4:
        raise SignalError("scaling probe needs at least 4 sweep points")
    values = []
    rhs = []
    for t in ts:
        cp = generator(t)
        values.append(xi(b, t, cp))
        if estimate is not None:
            rhs.append(_estimate_rhs(estimate, b, t, cp))
    if any(v == 0 for v in values):
        raise SignalError("xi vanishes on the sweep; exponent undefined")
    lt = np.log([float(t) for t in ts])
    exponent = float(np.polyfit(lt, np.log([abs(float(v)) for v in values]), 1)[0])
    bound_exponent = c_fit = min_ratio = None
    if estimate is not None:
        bound_exponent = float(np.polyfit(lt, np.log(rhs), 1)[0])
        ratios = [abs(float(v)) / r for v, r in zip(values, rhs)]
        c_fit = max(ratios) ** (1.0 / b.length)
        min_ratio = min(ratios) / max(ratios)
    return ScalingReport(b, ts, values, exponent, bound_exponent, c_fit, min_ratio)
