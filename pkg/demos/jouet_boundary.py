"""Sweep alpha on the toy system and watch the verdict flip at |alpha| = 2."""

from fractions import Fraction

from stlc_oracle import corpus
from stlc_oracle.obstruction import stlc_verdict_symmetric

for alpha in [0, 1, Fraction(3, 2), Fraction(199, 100), 2, Fraction(201, 100), 3]:
    v = stlc_verdict_symmetric(corpus.jouet(alpha), 1, 1)
    detail = "witness " + " ".join(str(c) for c in v.bc.witness) if v.is_obstruction else v.bc.blocking_case
    print(f"alpha = {str(alpha):>8}: {v.outcome:<12} {detail}")
