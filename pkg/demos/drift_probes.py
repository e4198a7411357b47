"""Integrate the toy system with the compensating family phi = -(alpha/2) psi.

Below |alpha| = 2 the state is pushed along +e3 whatever the controls; above
it the family drives x3 negative, as the closed form predicts.
"""

from fractions import Fraction

from stlc_oracle import corpus
from stlc_oracle.signals import ControlPair, PiecewisePoly
from stlc_oracle.simulate import drift_probe

F = Fraction


def family(alpha):
    # psi(r) = r(1 - r) on [0, 1], rescaled to [0, t] with amplitude a
    def make(t, a):
        v = PiecewisePoly.polynomial([a, -2 * a / t], t)
        return ControlPair(v.scale(-F(alpha) / 2), v)
    return make


sweep = [(t, a) for t in (F(1, 2), F(1, 4), F(1, 8)) for a in (F(1), F(1, 4))]
for alpha in (1, 3):
    rep = drift_probe(corpus.jouet(alpha), (0, 0, 1), family(alpha), sweep, k=1, family_id="compensating")
    print(f"alpha = {alpha}: {rep.verdict}")
    for row in rep.csv_rows()[:4]:
        print("   ", row)
