"""Exact determinant moments against Monte Carlo.

Run:  python demos/exact_moments.py
"""

from wignerlogdet.ensembles import make_ensemble
from wignerlogdet.moments import first_moment_exact, moment_mc, second_moment_exact

for n in (2, 4, 6):
    print(f"E det, n={n}: exact {first_moment_exact(n)}")

for cls in ("gue", "goe"):
    for n in (2, 3, 4):
        exact = second_moment_exact(n, cls)
        est, se = moment_mc(make_ensemble(cls), n, "second", 20_000, seed=5)
        print(f"E|det|^2, {cls} n={n}: exact {exact}, Monte Carlo {est:.2f} +- {se:.2f}")
