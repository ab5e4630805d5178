"""Positive kernel operators on [0, 1] through midpoint discretisation.

Run: python3 demos/kernel_operators.py
"""

from hjsr import KernelSpec, discretize, spectral_radius_bracket, to_matrix
from hjsr.chains import evaluate_kernel_chain, get_chain
from hjsr.kernels import catalog

GRIDS = (16, 32, 64, 128)

# rank-one kernel (1 + x)(1/2 + y^2) has radius int (1 + t)(1/2 + t^2) dt = 4/3
sep = KernelSpec.separable(f=(1, 1), g=(0.5, 0, 1))
print("separable kernel, radius by grid (limit 4/3)")
for n in GRIDS:
    b = spectral_radius_bracket(to_matrix(discretize(sep, n)))
    print(f"  n={n:<4} {b.upper:.12f}  error {abs(b.upper - 4 / 3):.2e}")

specs = catalog()
print("\nsquare-root chain C7 on pairs of catalog kernels")
for a, b in (("exp_abs", "gaussian"), ("constant", "constant"), ("piecewise_constant", "separable")):
    row = []
    for n in GRIDS[:3]:
        r = evaluate_kernel_chain(get_chain("C7"), [discretize(specs[a], n), discretize(specs[b], n)])
        left, right = r.terms
        row.append(f"n={n}: {left.lower:.6f} <= {right.upper:.6f}")
    print(f"  {a} + {b}: " + "; ".join(row))

print("\nC9 and C10 on the seeded block kernel")
pc = specs["piecewise_constant"]
print("  block table:\n" + "\n".join("    " + " ".join(f"{x:.3f}" for x in r) for r in pc.block_table()))
for cid in ("C9", "C10"):
    verdicts = [evaluate_kernel_chain(get_chain(cid), [discretize(pc, n), discretize(specs["exp_abs"], n)]).verdict
                for n in GRIDS[:3]]
    print(f"  {cid}: {verdicts}")
