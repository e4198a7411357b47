"""Numerical trajectories and empirical probes.

The integrator is the Dormand--Prince 5(4) pair.  Every control breakpoint
is a forced step boundary, so the right-hand side is polynomial in t
within each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import corpus, freelie
from .freelie import family
from .signals import ControlPair, PiecewisePoly, iterated_primitive, l2_squared, norm, xi
from .vectorfields import PolySystem


class SimulationError(RuntimeError):
    pass


# Dormand--Prince tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    steps: int
    rejected: int
    evaluations: int
    max_error_estimate: float

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]

    def stats(self) -> dict:
        return {
            "steps": self.steps,
            "rejected": self.rejected,
            "evaluations": self.evaluations,
            "max_error_estimate": self.max_error_estimate,
        }


def integrate(system: PolySystem, controls: ControlPair, t_end=None, rel_tol: float = 1e-9,
              abs_tol: Optional[float] = None, max_steps: int = 1_000_000) -> Trajectory:
    """Solve x' = f0 + u f1 + v f2 from x(0) = 0 up to ``t_end``."""
    T = controls.horizon
    t_end = T if t_end is None else Fraction(t_end)
    if t_end <= 0 or t_end > T:
        raise SimulationError(f"t_end = {t_end} must lie in (0, {T}]")
    if not (1e-14 < rel_tol < 1e-3):
        raise SimulationError("rel_tol must lie in (1e-14, 1e-3)")
    atol = rel_tol * 1e-12 if abs_tol is None else abs_tol
    f0, f1, f2 = (f.compiled() for f in system.fields)
    d = system.dim
    breaks = sorted(set(b for b in controls.u.breaks + controls.v.breaks if b < t_end) | {t_end})
    upieces = controls.u.float_pieces()
    vpieces = controls.v.float_pieces()
    ub = [p[0] for p in upieces]
    vb = [p[0] for p in vpieces]

    ts = [0.0]
    xs = [np.zeros(d)]
    x = np.zeros(d)
    steps = rejected = nfev = 0
    max_err = 0.0
    for a, b in zip(breaks, breaks[1:]):
        a, b = float(a), float(b)
        mid = 0.5 * (a + b)
        uc = upieces[int(np.searchsorted(ub, mid, side="right") - 1)][2]
        vc = vpieces[int(np.searchsorted(vb, mid, side="right") - 1)][2]

        def rhs(t, y, uc=uc, vc=vc):
            return f0(y) + np.polyval(uc, t) * f1(y) + np.polyval(vc, t) * f2(y)

        t = a
        h = (b - a) / 4
        k0 = rhs(t, x)
        nfev += 1
        while t < b:
            if steps + rejected > max_steps:
                raise SimulationError("maximum number of steps exceeded")
            last = t + h >= b
            if last:
                h = b - t
            K = [k0]
            for i in range(1, 7):
                yi = x + h * sum(c * k for c, k in zip(_A[i], K))
                K.append(rhs(t + _C[i] * h, yi))
            nfev += 6
            xn = x + h * sum(c * k for c, k in zip(_B5[:6], K[:6]))
            errv = h * sum(c * k for c, k in zip(_E, K))
            scale = atol + rel_tol * np.maximum(np.abs(x), np.abs(xn))
            err = float(np.max(np.abs(errv) / scale)) if d else 0.0
            if err <= 1.0:
                t = b if last else t + h
                x = xn
                k0 = K[6]
                steps += 1
                max_err = max(max_err, float(np.max(np.abs(errv))) if d else 0.0)
                ts.append(t)
                xs.append(x.copy())
                fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            else:
                rejected += 1
                fac = max(0.2, 0.9 * err ** -0.2)
            h *= fac
            if h < 1e-14 * max(1.0, abs(t)) and t < b:
                raise SimulationError(f"step size underflow at t = {t}")
    return Trajectory(np.array(ts), np.array(xs), steps, rejected, nfev, max_err)


# ---------------------------------------------------------------------------
# exact states for the corpus
# ---------------------------------------------------------------------------

# each coordinate: list of (coefficient, [brackets]) meaning coef * prod xi_b
Combination = List[List[Tuple[Fraction, list]]]


def _m(i, j):
    return family(f"M{i}", j)


def _combination(name: str, params: dict) -> Combination:
    W1 = lambda j: family("W1", j)
    W2 = lambda j: family("W2", j)
    C = lambda j, l=0: family("C", j, l)
    X1, X2, X0, br = freelie.X1, freelie.X2, freelie.X0, freelie.br
    F = Fraction
    if name == "jouet":
        a = F(params.get("alpha", 1))
        return [[(F(1), [X1])], [(F(1), [X2])], [(F(2), [W1(1)]), (F(2), [W2(1)]), (a, [C(1)])]]
    if name == "excomplexe":
        return [
            [(F(1), [X1])],
            [(F(1), [_m(1, 1)])],
            [(F(1), [X2])],
            [(F(2), [W1(1)]), (F(4), [W2(1)]), (F(1, 2), [C(1)]), (F(-2056), [W1(2)]),
             (F(-1286), [br(X1, br(X1, X2))]), (F(-1), [X2, X2])],
        ]
    if name == "exf1f2":
        return [[(F(1), [X1])], [(F(1), [X2])], [(F(1), [C(0)])], [(F(1), [C(0, 1)])],
                [(F(1), [W1(1)]), (F(1), [W2(1)]), (F(1), [C(0, 2)])]]
    if name == "exquartic":
        q1 = q2 = X0
        for _ in range(4):
            q1, q2 = br(X1, q1), br(X2, q2)
        return [[(F(1), [X1])], [(F(1), [X2])], [(F(24), [q1]), (F(24), [q2])]]
    if name in ("exintegrateurintro", "exassym"):
        k = int(params.get("k", 2))
        kp = int(params.get("kprime", 1))
        a = F(params.get("alpha", 0 if name == "exassym" else 1))
        if a and kp not in (k, k - 1):
            raise SimulationError("cross term is a single coordinate only when k' is k or k - 1")
        out = [[(F(1), [_m(1, i)])] for i in range(k)] + [[(F(1), [_m(2, i)])] for i in range(kp)]
        z = [(F(2), [W1(k)]), (F(2), [W2(kp)])]
        if a:
            z.append((a, [C(k + kp - 1)]))
        return out + [z]
    raise SimulationError(f"no exact oracle registered for {name!r}")


def _reference(name: str, params: dict) -> Optional[PolySystem]:
    if name == "jouet":
        return corpus.jouet(params.get("alpha", 1))
    if name == "exintegrateurintro":
        return corpus.exintegrateurintro(int(params.get("k", 2)), int(params.get("kprime", 1)), params.get("alpha", 1))
    builder = corpus.BUILDERS.get(name)
    return builder() if builder else None


def exact_state_oracle(system: PolySystem, controls: ControlPair, t, params: Optional[dict] = None) -> Tuple[Fraction, ...]:
    """Exact state of a registered corpus system, assembled from xi values."""
    params = dict(getattr(system, "params", {}) or {}) if params is None else dict(params)
    ref = _reference(system.name, params)
    if ref is None or ref.fields != system.fields:
        raise SimulationError(f"system {system.name!r} with {params} is not a registered corpus entry")
    combo = _combination(system.name, params)
    t = Fraction(t)
    out = []
    for coord in combo:
        acc = Fraction(0)
        for c, bs in coord:
            term = c
            for b in bs:
                term *= xi(b, t, controls)
            acc += term
        out.append(acc)
    return tuple(out)


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------

@dataclass
class MagnusReport:
    scales: List[float]
    residuals: List[float]
    l1_sizes: List[float]
    decay_order: Optional[float]

    def as_dict(self):
        return {"scales": self.scales, "residuals": self.residuals, "l1_sizes": self.l1_sizes,
                "decay_order": self.decay_order}


def magnus_truncation_probe(system: PolySystem, family_fn: Callable[[Fraction], ControlPair], t,
                            scales: Sequence, rel_tol: float = 1e-11) -> MagnusReport:
    """Integrator against the exact oracle over control amplitudes ``scales``;
    the decay order of the residual in the L1 size of the controls is fitted."""
    res, sizes = [], []
    for eps in scales:
        cp = family_fn(Fraction(eps))
        exact = np.array([float(x) for x in exact_state_oracle(system, cp, t)])
        num = integrate(system, cp, t, rel_tol).final
        res.append(float(np.max(np.abs(num - exact))))
        sizes.append(float(norm(cp.u, "L1")) + float(norm(cp.v, "L1")))
    order = None
    pos = [(s, r) for s, r in zip(sizes, res) if r > 0 and s > 0]
    if len(pos) >= 2:
        order = float(np.polyfit(np.log([p[0] for p in pos]), np.log([p[1] for p in pos]), 1)[0])
    return MagnusReport([float(s) for s in scales], res, sizes, order)


@dataclass
class DriftProbeReport:
    family: str
    points: List[dict]
    beta: float
    constant: Optional[float]
    min_ratio: Optional[float]
    consistent: bool
    verdict: str

    def as_dict(self):
        return {
            "family": self.family,
            "beta": self.beta,
            "constant": self.constant,
            "min_ratio": self.min_ratio,
            "consistent": self.consistent,
            "verdict": self.verdict,
            "points": self.points,
        }

    def csv_rows(self) -> List[str]:
        rows = ["t,amplitude,Px,delta,x_norm_beta"]
        for p in self.points:
            rows.append(f"{p['t']},{p['amplitude']},{p['Px']!r},{p['delta']!r},{p['x_norm_beta']!r}")
        return rows


def drift_probe(system: PolySystem, witness: Sequence, family_fn: Callable[[Fraction, Fraction], ControlPair],
                sweep: Sequence[Tuple], k: int, kprime: Optional[int] = None, pi: int = 3,
                family_id: str = "family", rel_tol: float = 1e-10) -> DriftProbeReport:
    """Check P x(t) + C |x(t)|^beta >= C Delta(u, v) on a finite sweep,
    Delta = int (u_k^2 + v_k'^2), beta = 1 + 1/pi; the largest admissible C
    is fitted."""
    if not sweep:
        raise SimulationError("empty sweep")
    kprime = k if kprime is None else kprime
    beta = 1.0 + 1.0 / pi
    P = np.array([float(x) for x in witness])
    points = []
    upper, lower = math.inf, 0.0
    violated = False
    for t, amp in sweep:
        t, amp = Fraction(t), Fraction(amp)
        cp = family_fn(t, amp)
        x = integrate(system, cp, t, rel_tol).final
        uk = iterated_primitive(cp.u, k).restrict(t)
        vk = iterated_primitive(cp.v, kprime).restrict(t)
        delta = float(l2_squared(uk) + l2_squared(vk))
        px = float(P @ x)
        xb = float(np.linalg.norm(x)) ** beta
        points.append({"t": str(t), "amplitude": str(amp), "Px": px, "delta": delta, "x_norm_beta": xb})
        gap = delta - xb
        if gap > 0:
            if px <= 0:
                violated = True
            else:
                upper = min(upper, px / gap)
        elif gap < 0 and px < 0:
            lower = max(lower, px / gap)
    consistent = not violated and upper > lower and upper > 0
    C = None
    min_ratio = None
    if consistent:
        C = upper if math.isfinite(upper) else 1.0
        min_ratio = min((p["Px"] + C * p["x_norm_beta"]) / p["delta"] for p in points if p["delta"] > 0)
    verdict = "consistent with drift" if consistent else "drift violated by exhibited family"
    return DriftProbeReport(family_id, points, beta, C, min_ratio, consistent, verdict)


@dataclass
class GnReport:
    ts: List[str]
    ratios: List[float]
    max_min: float
    monotone_growth: bool
    bounded: bool

    def as_dict(self):
        return {"t": self.ts, "ratios": self.ratios, "max_min": self.max_min,
                "monotone_growth": self.monotone_growth, "bounded": self.bounded}


def gn_ratio(u: PiecewisePoly, k: int, m: int, p) -> float:
    """||u||_L1^(pi+1) / (t^(pi-2k) ||u||_{W^{m,p}}^(pi-1) ||u_k||_L2^2)."""
    pi = freelie.pi_order(k, m)
    t = float(u.horizon)
    uk2 = l2_squared(iterated_primitive(u, k))
    if uk2 == 0:
        raise SimulationError("u_k vanishes identically; the ratio is undefined")
    l1 = float(norm(u, "L1"))
    w = float(norm(u, "Wmp", m=m, p=p))
    return l1 ** (pi + 1) / (t ** (pi - 2 * k) * w ** (pi - 1) * float(uk2))


def gn_probe(family_fn: Callable[[Fraction], PiecewisePoly], ts: Sequence, k: int, m: int, p,
             max_spread: float = 10.0) -> GnReport:
    """Ratio of the interpolation inequality across a t sweep.

    Growth means the ratio rises at every step as t decreases and the
    increments do not shrink; a rise that levels off (increments
    contracting) is bounded.  ``bounded`` also needs max/min below
    ``max_spread``.
    """
    ts = sorted((Fraction(t) for t in ts), reverse=True)
    if len(ts) < 3:
        raise SimulationError("gn probe needs at least 3 sweep points")
    ratios = [gn_ratio(family_fn(t), k, m, p) for t in ts]
    steps = [b - a for a, b in zip(ratios, ratios[1:])]
    growth = all(d > 0 for d in steps) and steps[-1] >= steps[-2]
    spread = max(ratios) / min(ratios)
    return GnReport([str(t) for t in ts], ratios, spread, growth, (not growth) and spread < max_spread)
