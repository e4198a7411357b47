"""The worked example systems, built directly from polynomials.

The shipped ``corpus/*.sys`` files encode the same systems in the DSL; the
test-suite checks that both routes agree.
"""

from __future__ import annotations

from fractions import Fraction
from importlib import resources
from typing import Dict, List

from .vectorfields import Poly, PolySystem, PolyVectorField


def _fields(d: int, entries: Dict[int, Poly]) -> PolyVectorField:
    comps = [entries.get(i, Poly(d)) for i in range(d)]
    return PolyVectorField(comps)


def _x(d):
    return [Poly.var(d, i) for i in range(d)]


def _one(d):
    return Poly.const(d, 1)


def jouet(alpha=1) -> PolySystem:
    """x1' = u, x2' = v, x3' = x1^2 + x2^2 + alpha x1 x2."""
    d = 3
    x1, x2, _ = _x(d)
    f0 = _fields(d, {2: x1 * x1 + x2 * x2 + x1 * x2 * Fraction(alpha)})
    return PolySystem(f0, _fields(d, {0: _one(d)}), _fields(d, {1: _one(d)}), name="jouet", params={"alpha": Fraction(alpha)})


def excomplexe() -> PolySystem:
    """x1' = u, x2' = x1, x3' = v,
    x4' = x1^2 + 2x3^2 + x1x3/2 - 1028x2^2 - 643 v x1^2 - 2 v x3."""
    d = 4
    x1, x2, x3, _ = _x(d)
    q = x1 * x1 + (x3 * x3).scale(2) + (x1 * x3).scale(Fraction(1, 2)) - (x2 * x2).scale(1028)
    f0 = _fields(d, {1: x1, 3: q})
    f1 = _fields(d, {0: _one(d)})
    f2 = _fields(d, {2: _one(d), 3: -((x1 * x1).scale(643) + x3.scale(2))})
    return PolySystem(f0, f1, f2, name="excomplexe")


def exf1f2() -> PolySystem:
    """x1' = u, x2' = v, x3' = x1 v, x4' = x3, x5' = x1^2/2 + x2^2/2 + x4."""
    d = 5
    x1, x2, x3, x4, _ = _x(d)
    half = Fraction(1, 2)
    f0 = _fields(d, {3: x3, 4: (x1 * x1).scale(half) + (x2 * x2).scale(half) + x4})
    f1 = _fields(d, {0: _one(d)})
    f2 = _fields(d, {1: _one(d), 2: x1})
    return PolySystem(f0, f1, f2, name="exf1f2")


def exquartic() -> PolySystem:
    """x1' = u, x2' = v, x3' = x1^4 + x2^4."""
    d = 3
    x1, x2, _ = _x(d)
    f0 = _fields(d, {2: x1 ** 4 + x2 ** 4})
    return PolySystem(f0, _fields(d, {0: _one(d)}), _fields(d, {1: _one(d)}), name="exquartic")


def exintegrateurintro(k: int = 2, kprime: int = 1, alpha=1) -> PolySystem:
    """Integrator chains x1..xk (x1' = u) and y1..yk' (y1' = v), then
    z' = xk^2 + yk'^2 + alpha xk yk'.  Coordinates: (x, y, z)."""
    d = k + kprime + 1
    xs = _x(d)
    entries0 = {}
    for i in range(1, k):
        entries0[i] = xs[i - 1]
    for i in range(1, kprime):
        entries0[k + i] = xs[k + i - 1]
    xk, yk = xs[k - 1], xs[k + kprime - 1]
    entries0[d - 1] = xk * xk + yk * yk + (xk * yk).scale(Fraction(alpha))
    f1 = _fields(d, {0: _one(d)})
    f2 = _fields(d, {k: _one(d)})
    return PolySystem(_fields(d, entries0), f1, f2, name="exintegrateurintro",
                      params={"k": k, "kprime": kprime, "alpha": Fraction(alpha)})


def exassym() -> PolySystem:
    """x1' = u, x2' = x1, x3' = v, x4' = x2^2 + x3^2."""
    s = exintegrateurintro(2, 1, 0)
    s.name = "exassym"
    s.params = {}
    return s


BUILDERS = {
    "jouet": jouet,
    "excomplexe": excomplexe,
    "exf1f2": exf1f2,
    "exquartic": exquartic,
    "exassym": exassym,
    "exintegrateurintro": exintegrateurintro,
}


def corpus_files() -> List[str]:
    """Names of the shipped ``.sys`` files."""
    root = resources.files(__package__) / "corpus"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".sys"))


def corpus_text(name: str) -> str:
    return (resources.files(__package__) / "corpus" / name).read_text()
