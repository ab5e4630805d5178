"""Checking Hadamard-product spectral-radius inequality chains.

Each chain is a list of terms that should be non-increasing.  A pair of
neighbours is a violation only when the certified lower bound of the left
term exceeds the certified upper bound of the right one.

Run: python3 demos/inequality_chains.py
"""

from fractions import Fraction

import numpy as np

from hjsr import EnumerationBudget, MatrixSet, NonNegMatrix
from hjsr import chains as ch


def show(report):
    print(f"{report.id}: {report.verdict}")
    for seq in report.sequences:
        for t in seq:
            print(f"    {t.expr:<60} [{t.lower:.12g}, {t.upper:.12g}]")


# the permutation matrix and the all-ones matrix: terms 1, sqrt 2, 2
P, J = NonNegMatrix([[0, 1], [1, 0]]), NonNegMatrix.ones(2)
show(ch.evaluate_chain(ch.get_chain("C2"), {"A": P, "B": J}, exact=True))

# rank-one sets make the half-power bound an equality
u, v = np.array([1.0, 2.0, 0.5]), np.array([0.3, 1.0, 2.0])
R = MatrixSet([NonNegMatrix(np.outer(u, v))])
show(ch.evaluate_chain(ch.get_chain("C13"), {"Psi": R, "Sigma": R}))

# set chains on random sets, sweeping the interpolation parameter
rng = np.random.default_rng(0)
sets = {"Psi": ch.random_set(rng, 3, 2), "Sigma": ch.random_set(rng, 3, 2)}
budget = EnumerationBudget(max_depth=6, prune=True)
print("\nC14 on two random 3x3 sets of size 2")
for alpha in ch.ALPHA_GRID:
    r = ch.evaluate_chain(ch.get_chain("C14"), sets, budget, params=ch.default_params(alpha=alpha))
    third = r.sequences[1][2]
    print(f"  alpha={str(alpha):<4} {r.verdict:<11} third term of second sequence "
          f"[{third.lower:.8f}, {third.upper:.8f}]")

# a small seeded campaign over every chain
reports = ch.randomized_campaign(seed=1, trials=3, budget=EnumerationBudget(max_depth=5, prune=True))
counts = {}
for r in reports:
    counts[r.verdict] = counts.get(r.verdict, 0) + 1
print(f"\ncampaign, 3 trials x {len(ch.CHAIN_IDS)} chains: {counts}")

# weights need not be equal
params = ch.default_params(m=3, k=3, weights=(Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)))
trio = {f"Psi{i}": ch.random_set(rng, 2, 2) for i in (1, 2, 3)}
show(ch.evaluate_chain(ch.get_chain("C16"), trio, budget, params=params))
