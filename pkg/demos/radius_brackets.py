"""Certified spectral-radius brackets, first for single matrices and then
for finite sets of matrices.

Run: python3 demos/radius_brackets.py [--depth 8]
"""

import argparse

import numpy as np

from hjsr import (
    EnumerationBudget,
    MatrixSet,
    NonNegMatrix,
    enumerate_products,
    operator_norm,
    spectral_radius_bracket,
    spectral_radius_exact_small,
)


def single_matrices():
    print("single matrices: Collatz-Wielandt bracket vs closed-form oracle")
    cases = {
        "swap": [[0, 1], [1, 0]],
        "ones": [[1, 1], [1, 1]],
        "sqrt6": [[0, 2], [3, 0]],
        "jordan": [[1, 1], [0, 1]],
        "nilpotent": [[0, 5], [0, 0]],
        "cycle3": [[0, 1, 0], [0, 0, 1], [8, 0, 0]],
    }
    for name, rows in cases.items():
        A = NonNegMatrix(rows)
        b = spectral_radius_bracket(A)
        exact = spectral_radius_exact_small(A)
        print(f"  {name:<10} [{b.lower:.15g}, {b.upper:.15g}]  oracle {exact:.15g}  "
              f"norm {operator_norm(A):g}  ({b.method})")


def matrix_sets(depth):
    # two nilpotent shifts: every single member has radius 0, their product 4
    shifts = MatrixSet([[[0, 2], [0, 0]], [[0, 0], [2, 0]]])
    res = enumerate_products(shifts, EnumerationBudget(max_depth=depth))
    b = res.bracket
    print(f"\ntwo shifts, depth {depth}: [{b.lower}, {b.upper}] "
          f"(lower attained by word {b.lower_word})")

    rng = np.random.default_rng(1)
    S = MatrixSet([NonNegMatrix(rng.random((3, 3))) for _ in range(3)])
    for prune in (False, True):
        res = enumerate_products(S, EnumerationBudget(max_depth=depth, prune=prune))
        b = res.bracket
        print(f"random 3x3 set of 3, {'pruned' if prune else 'exhaustive':<10}: "
              f"[{b.lower:.10f}, {b.upper:.10f}] after {b.products} products")
    print("  per level (exhaustive):")
    res = enumerate_products(S, EnumerationBudget(max_depth=depth))
    for lv in res.levels:
        print(f"    depth {lv.depth}: {lv.products:>5} products, bracket [{lv.lower:.8f}, {lv.upper:.8f}]")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=6)
    args = ap.parse_args()
    single_matrices()
    matrix_sets(args.depth)
