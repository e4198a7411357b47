"""(BC) decision, theorem verdicts, the bounded S(theta) check and the
quartic variant."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

from . import freelie
from .freelie import Bracket, ObstructionParams, family, pi_order
from .vectorfields import (
    PolySystem,
    RationalSubspace,
    VectorFieldError,
    eval_at_zero,
    nilpotency_horizon,
    obstruction_span,
    span_below,
)

Vector = Tuple[Fraction, ...]

ZERO_IMAGE = "ZeroImage"
INDEPENDENT_HIGH_CROSS = "IndependentHighCross"
NEGATIVE_RATIO = "NegativeRatio"
RATIO_DOMINATED = "RatioDominatedBySquare"


class ObstructionError(ValueError):
    pass


def _vec(v) -> Vector:
    return tuple(Fraction(x) for x in v)


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class BcInput:
    e1: Vector
    e2: Vector
    e3: Vector
    N: RationalSubspace

    def __post_init__(self):
        object.__setattr__(self, "e1", _vec(self.e1))
        object.__setattr__(self, "e2", _vec(self.e2))
        object.__setattr__(self, "e3", _vec(self.e3))
        d = self.N.dim
        if not (len(self.e1) == len(self.e2) == len(self.e3) == d):
            raise ObstructionError("e1, e2, e3 and N must share the ambient dimension")


@dataclass(frozen=True)
class BcOutcome:
    holds: bool
    witness: Optional[Vector] = None
    blocking_case: Optional[str] = None
    parameters: Dict[str, Fraction] = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"holds": self.holds}
        if self.witness is not None:
            out["witness"] = [frac_str(x) for x in self.witness]
        if self.blocking_case is not None:
            out["blocking_case"] = self.blocking_case
            out["parameters"] = {k: frac_str(v) for k, v in sorted(self.parameters.items())}
        return out


# ---------------------------------------------------------------------------
# small exact solvers
# ---------------------------------------------------------------------------

def solve_linear(rows: Sequence[Sequence], rhs: Sequence) -> Optional[List[Fraction]]:
    """One solution x of rows . x = rhs (free variables set to 0), or None."""
    m = len(rows)
    if m == 0:
        return []
    n = len(rows[0])
    A = [[Fraction(x) for x in r] + [Fraction(b)] for r, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if A[i][c]), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(m):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if A[i][n]:
            return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = A[i][n]
    return x


def _combination(vectors: Sequence[Vector], target: Vector) -> Optional[List[Fraction]]:
    """Coefficients c with sum c_i vectors_i = target, or None."""
    if not vectors:
        return [] if not any(target) else None
    cols = list(zip(*vectors))
    return solve_linear(cols, target)


def _independent(vectors: Sequence[Vector]) -> bool:
    if not vectors:
        return True
    s = RationalSubspace.span(len(vectors[0]), vectors)
    return s.rank == len(vectors)


def primitive_form(P: Sequence[Fraction]) -> Vector:
    """Positive multiple of P with coprime integer entries."""
    P = [Fraction(x) for x in P]
    if not any(P):
        return tuple(P)
    den = 1
    for x in P:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in P]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    return tuple(Fraction(v // g) for v in ints)


# ---------------------------------------------------------------------------
# (BC)
# ---------------------------------------------------------------------------

def quadratic_form_pd(alpha, beta, gamma) -> bool:
    """(a1, a2) -> alpha a1^2/2 + beta a2^2/2 + gamma a1 a2 is positive definite."""
    alpha, beta, gamma = Fraction(alpha), Fraction(beta), Fraction(gamma)
    return alpha > 0 and gamma * gamma < alpha * beta


def witness_valid(inp: BcInput, P: Sequence) -> bool:
    """Exact check of the (BC) inequalities for a full-space form P."""
    P = _vec(P)
    if any(_dot(P, row) for row in inp.N.rows):
        return False
    p1, p2, p3 = _dot(P, inp.e1), _dot(P, inp.e2), _dot(P, inp.e3)
    return p1 > 0 and p2 > 0 and p3 * p3 < p1 * p2


def bc_classify(inp: BcInput) -> BcOutcome:
    """Exact case analysis deciding (BC), with a witness when it holds."""
    N = inp.N
    t1, t2, t3 = (N.quotient_image(v) for v in (inp.e1, inp.e2, inp.e3))
    if not any(t1) or not any(t2):
        return BcOutcome(False, blocking_case=ZERO_IMAGE)

    def form(vectors, targets):
        q = solve_linear(vectors, targets)
        if q is None:  # pragma: no cover - vectors are independent by construction
            raise ObstructionError("inconsistent witness system")
        P = primitive_form(N.lift_form(q))
        if not witness_valid(inp, P):  # pragma: no cover - guarded by the case analysis
            raise ObstructionError("constructed witness failed the exact check")
        return BcOutcome(True, witness=P)

    if _independent([t1, t2]):
        ab = _combination([t1, t2], t3)
        if ab is None:
            return form([t1, t2, t3], [1, 1, 0])
        a, b = ab
        if a * b >= Fraction(1, 4):
            return BcOutcome(False, blocking_case=INDEPENDENT_HIGH_CROSS, parameters={"a": a, "b": b})
        if a == 0:
            return form([t1, t2], [b * b + 1, 1])
        xstar = (1 - 2 * a * b) / (2 * a * a)
        return form([t1, t2], [xstar, 1])
    i = next(i for i, x in enumerate(t1) if x)
    beta = t2[i] / t1[i]
    if beta < 0:
        return BcOutcome(False, blocking_case=NEGATIVE_RATIO, parameters={"beta": beta})
    g = _combination([t1], t3)
    if g is None:
        return form([t1, t3], [1, 0])
    gamma = g[0]
    if beta <= gamma * gamma:
        return BcOutcome(False, blocking_case=RATIO_DOMINATED, parameters={"beta": beta, "gamma": gamma})
    return form([t1], [1])


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

@dataclass
class ObstructionVerdict:
    mode: str
    parameters: Dict[str, int]
    outcome: str
    bc: BcOutcome
    e1: Vector
    e2: Vector
    e3: Vector
    span: RationalSubspace
    truncated: bool
    horizon: Optional[int]
    length_cap: int
    direction: Optional[Vector] = None
    exponent: Optional[Fraction] = None
    exponent_prime: Optional[Fraction] = None
    strength: Optional[str] = None

    @property
    def is_obstruction(self) -> bool:
        return self.outcome == "Obstruction"

    @property
    def witness(self) -> Optional[Vector]:
        return self.bc.witness

    def as_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "parameters": dict(self.parameters),
            "outcome": self.outcome,
            "e1": [frac_str(x) for x in self.e1],
            "e2": [frac_str(x) for x in self.e2],
            "e3": [frac_str(x) for x in self.e3],
            "span": [[frac_str(x) for x in r] for r in self.span.rows],
            "truncated": self.truncated,
            "horizon": self.horizon,
            "length_cap": self.length_cap,
            "bc": self.bc.as_dict(),
        }
        if self.is_obstruction:
            out["drift"] = {
                "direction": [frac_str(x) for x in self.direction],
                "witness": [frac_str(x) for x in self.bc.witness],
                "exponent": frac_str(self.exponent),
                "strength": self.strength,
            }
            if self.exponent_prime is not None:
                out["drift"]["exponent_prime"] = frac_str(self.exponent_prime)
        return out


def regime_exponent(k: int, m: int) -> Fraction:
    """(pi - 2k) / (pi - 1)."""
    p = pi_order(k, m)
    return Fraction(p - 2 * k, p - 1)


def _cap(length_cap: Optional[int]) -> int:
    return freelie.configured_cap() if length_cap is None else length_cap


def _verdict(system, params: ObstructionParams, length_cap, mode):
    k = params.k
    kp = params.k if params.symmetric else params.kprime
    cap = _cap(length_cap)
    need = 2 * k
    if cap < need:
        raise ObstructionError(f"length_cap {cap} is below the mandatory bracket length {need}")
    e1 = eval_at_zero(system, family("W1", k))
    e2 = eval_at_zero(system, family("W2", kp))
    e3 = eval_at_zero(system, family("C", k + kp - 1))
    N, truncated = obstruction_span(system, params, cap)
    horizon = nilpotency_horizon(system, cap)
    bc = bc_classify(BcInput(e1, e2, e3, N))
    v = ObstructionVerdict(
        mode=mode,
        parameters=params.as_dict(),
        outcome="Obstruction" if bc.holds else "Inconclusive",
        bc=bc,
        e1=e1,
        e2=e2,
        e3=e3,
        span=N,
        truncated=truncated,
        horizon=horizon,
        length_cap=cap,
    )
    if bc.holds:
        v.direction = tuple(a + b for a, b in zip(e1, e2))
        v.exponent = regime_exponent(k, params.m)
        if not params.symmetric:
            v.exponent_prime = regime_exponent(params.kprime, params.mprime)
        v.strength = f"int_0^t (u_{k}^2 + v_{kp}^2)"
    return v


def stlc_verdict_symmetric(system: PolySystem, k: int, m: int, length_cap: Optional[int] = None) -> ObstructionVerdict:
    try:
        params = ObstructionParams(k, m)
    except freelie.FreeLieError as exc:
        raise ObstructionError(str(exc)) from None
    return _verdict(system, params, length_cap, "symmetric")


def stlc_verdict_asymmetric(system: PolySystem, k: int, kprime: int, m: int, mprime: int,
                            length_cap: Optional[int] = None) -> ObstructionVerdict:
    try:
        params = ObstructionParams(k, m, kprime, mprime)
    except freelie.FreeLieError as exc:
        raise ObstructionError(str(exc)) from None
    return _verdict(system, params, length_cap, "asymmetric")


# ---------------------------------------------------------------------------
# bounded S(theta)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SThetaResult:
    value: bool
    target: Vector
    span: RationalSubspace
    length_cap: int
    bounded: bool = True

    def __bool__(self):
        return self.value


def sussmann_stheta_check(system: PolySystem, theta, frak_b: Bracket, length_cap: Optional[int] = None) -> SThetaResult:
    """Is f_{sigma(frak_b)}(0) in the span of the f_b(0) with
    n(b) + theta n0(b) < n(frak_b) + theta n0(frak_b), |b| <= length_cap?"""
    theta = Fraction(theta)
    if not 0 <= theta <= 1:
        raise ObstructionError("theta must lie in [0, 1]")
    if frak_b.n0 % 2 != 1 or frak_b.n1 % 2 or frak_b.n2 % 2:
        raise ObstructionError("S(theta) needs n0 odd and n1, n2 even")
    cap = _cap(length_cap)
    target = eval_at_zero(system, freelie.swap_sigma(frak_b))
    level = frak_b.n + theta * frak_b.n0
    span = span_below(system, lambda b: b.n + theta * b.n0 < level, cap)
    return SThetaResult(span.contains(target), target, span, cap)


# ---------------------------------------------------------------------------
# quartic variant (heuristic)
# ---------------------------------------------------------------------------

def quartic_brackets() -> List[Bracket]:
    """ad_{X2}^i ad_{X1}^{4-i} X0 for i = 0..4."""
    out = []
    for i in range(5):
        b = freelie.X0
        for _ in range(4 - i):
            b = freelie.br(freelie.X1, b)
        for _ in range(i):
            b = freelie.br(freelie.X2, b)
        out.append(b)
    return out


def quartic_vectors(system: PolySystem) -> List[Vector]:
    return [system.field_of(b).at_zero() for b in quartic_brackets()]


@dataclass(frozen=True)
class QuarticOutcome:
    holds: bool
    witness: Optional[Vector] = None
    slack: float = 0.0
    heuristic: bool = True

    def as_dict(self):
        out = {"holds": self.holds, "heuristic": True, "slack": round(self.slack, 12)}
        if self.witness is not None:
            out["witness"] = [frac_str(x) for x in self.witness]
        return out


def quartic_conditions(P: Sequence, es: Sequence[Vector], N: RationalSubspace) -> bool:
    """Exact check: P|N = 0, 3|P e1| + |P e3| < P e0, |P e1| + 3|P e3| < P e4, P e2 >= 0."""
    P = _vec(P)
    if any(_dot(P, row) for row in N.rows):
        return False
    p = [_dot(P, e) for e in es]
    return (3 * abs(p[1]) + abs(p[3]) < p[0]
            and abs(p[1]) + 3 * abs(p[3]) < p[4]
            and p[2] >= 0)


def quartic_bc_check(es: Sequence[Sequence], N: RationalSubspace) -> QuarticOutcome:
    """Search a form for the quartic competition between five brackets.

    Each sign pattern of (P e1, P e3) gives a linear program in the quotient
    coordinates; the slack of the strict inequalities is maximized over a
    box and a positive optimum is rounded to rationals and re-checked
    exactly.
    """
    import numpy as np
    from scipy.optimize import linprog

    if len(es) != 5:
        raise ObstructionError("quartic check needs e0..e4")
    es = [_vec(e) for e in es]
    if any(len(e) != N.dim for e in es):
        raise ObstructionError("dimension mismatch")
    w = [N.quotient_image(e) for e in es]
    r = len(w[0])
    if r == 0:
        return QuarticOutcome(False)
    W = np.array([[float(x) for x in wi] for wi in w])
    best = QuarticOutcome(False)
    for s1 in (1, -1):
        for s3 in (1, -1):
            # variables (q_1..q_r, s); maximize s
            A, b = [], []
            A.append(list(-s1 * W[1]) + [0.0]); b.append(0.0)
            A.append(list(-s3 * W[3]) + [0.0]); b.append(0.0)
            A.append(list(3 * s1 * W[1] + s3 * W[3] - W[0]) + [1.0]); b.append(0.0)
            A.append(list(s1 * W[1] + 3 * s3 * W[3] - W[4]) + [1.0]); b.append(0.0)
            A.append(list(-W[2]) + [0.0]); b.append(0.0)
            c = [0.0] * r + [-1.0]
            bounds = [(-1.0, 1.0)] * r + [(None, 1.0)]
            res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
            if res.status != 0 or -res.fun <= 1e-9:
                continue
            q = res.x[:r]
            for den in (1, 10, 100, 1000, 10 ** 6):
                qr = [Fraction(float(x)).limit_denominator(den) for x in q]
                P = primitive_form(N.lift_form(qr))
                if quartic_conditions(P, es, N):
                    if -res.fun > best.slack:
                        best = QuarticOutcome(True, P, float(-res.fun))
                    break
    return best
