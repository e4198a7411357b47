"""Ratio of the interpolation inequality over dyadic times.

Scale-free families level off at p = 1 and decay at p = 2; the constant
control grows like 1/t, so no uniform constant exists for it.
"""

from fractions import Fraction

from stlc_oracle.signals import PiecewisePoly
from stlc_oracle.simulate import gn_probe

F = Fraction
families = {
    "bump": lambda t: PiecewisePoly.polynomial([0, 4 / t, -4 / t ** 2], t),
    "ramp": lambda t: PiecewisePoly.polynomial([1, -1 / t], t),
    "offset bump": lambda t: PiecewisePoly.polynomial([1, 1 / t, -1 / t ** 2], t),
    "constant": lambda t: PiecewisePoly.constant(1, t),
}
ts = [F(1, 2 ** i) for i in range(5)]
for kmp in [(1, 1, 1), (1, 1, 2), (2, 1, 2)]:
    print(f"(k, m, p) = {kmp}")
    for name, fn in families.items():
        r = gn_probe(fn, ts, *kmp)
        print(f"  {name:<12} spread {r.max_min:9.2f}  growth {r.monotone_growth!s:<5}  "
              + " ".join(f"{x:.4g}" for x in r.ratios))
