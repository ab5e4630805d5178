"""Acceptance criteria 1-7, one test each.

Every test records a ``criterion`` label and a ``detail`` string; the
terminal-summary hook in ``conftest.py`` turns them into one PASS/FAIL line
per criterion.
"""

import json
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from hjsr import (
    EnumerationBudget,
    MatrixSet,
    NonNegMatrix,
    column_sum_norm,
    hadamard_geometric_mean,
    operator_norm,
    radius_bracket,
    row_sum_norm,
    spectral_radius_bracket,
    spectral_radius_exact_small,
)
from hjsr import chains as ch
from hjsr.cli import main
from hjsr.io import deterministic_part
from hjsr.kernels import catalog

from conftest import FIXTURES, masked_matrix, masked_set


def label(record_property, key, detail):
    record_property("criterion", key)
    record_property("detail", detail)
    print(f"criterion {key}: {detail}")


@pytest.mark.slow
def test_criterion_1_zero_violation_campaign(tmp_path, record_property):
    out = tmp_path / "campaign.json"
    argv = ["verify", "--random", "42", "200", "--chains", "all", "--dims", "2..4",
            "--sizes", "1..3", "--depth", "6", "--tol", "1e-9", "--out", str(out)]
    t = time.perf_counter()
    res = subprocess.run([sys.executable, "-m", "hjsr", *argv], capture_output=True, text=True)
    secs = time.perf_counter() - t
    rep = json.loads(out.read_text()) if out.exists() else {}
    v = rep.get("summary", {}).get("verdicts", {})
    label(record_property, "1 zero-violation campaign",
          f"exit {res.returncode}, {rep.get('summary', {}).get('reports')} reports, "
          f"{v.get('violation')} violations, {v.get('inconclusive-budget')} inconclusive, {secs:.0f} s")
    assert res.returncode == 0, res.stderr[-2000:]
    assert v["violation"] == 0 and v["inconclusive-budget"] == 0
    assert rep["summary"]["reports"] == 200 * 19
    assert secs <= 600


def test_criterion_2_exact_single_operator_suite(record_property):
    rng = np.random.default_rng(2)
    verdicts = {c: 0 for c in ch.EXACT_CHAIN_IDS}
    bad = []
    for i in range(500):
        n = int(rng.integers(2, 4))
        mats = [ch.random_matrix(rng, n) for _ in range(3)]
        m = int(rng.integers(2, 4))
        raw = [int(x) for x in rng.integers(1, 5, size=m)]
        params = ch.default_params(m, ch.ALPHA_GRID[int(rng.integers(5))], int(rng.integers(1, 5)),
                                   tuple(Fraction(x, sum(raw)) for x in raw))
        inputs = {"A": mats[0], "B": mats[1], "A1": mats[0], "A2": mats[1], "A3": mats[2]}
        backend = ch.MatrixBackend(inputs, exact=True)
        for cid in ch.EXACT_CHAIN_IDS:
            r = ch.evaluate_chain(ch.get_chain(cid), params=params, backend=backend, tol=1e-9)
            if r.verdict == ch.CONSISTENT:
                verdicts[cid] += 1
            else:
                bad.append((i, cid, r.verdict))
    label(record_property, "2 exact single-operator suite",
          f"500 draws x {len(verdicts)} chains, {len(bad)} non-consistent")
    assert not bad, bad[:5]


def _lemma_instance(rng):
    n = int(rng.integers(2, 5))
    k = int(rng.integers(1, 4))
    m = int(rng.integers(2, 4))
    raw = rng.integers(1, 5, size=m)
    w = raw / raw.sum()
    w[-1] = 1.0 - w[:-1].sum()
    A = [[masked_matrix(rng, n) for _ in range(m)] for _ in range(k)]
    return n, k, m, w, A


def _chain_product(mats, n):
    out = np.eye(n)
    for M in mats:
        out = out @ M
    return out


def _le(lhs, rhs, rel=1e-10):
    return bool(np.all(lhs <= rhs * (1 + rel)))


def test_criterion_3_pointwise_lemmas(record_property):
    rng = np.random.default_rng(3)
    names = ("product-of-means", "cauchy-schwarz", "cauchy-schwarz-swapped", "AM-GM",
             "norm-bound", "norm-bound[row]", "norm-bound[col]")
    fails = dict.fromkeys(names, 0)
    for _ in range(1000):
        n, k, m, w, A = _lemma_instance(rng)
        rows = [hadamard_geometric_mean(A[i], w).entries for i in range(k)]
        lhs = _chain_product(rows, n)
        prods = [_chain_product([A[i][j].entries for i in range(k)], n) for j in range(m)]
        rhs = hadamard_geometric_mean([NonNegMatrix(P) for P in prods], w).entries
        fails["product-of-means"] += not _le(lhs, rhs)

        L = NonNegMatrix(lhs)
        Ps = [NonNegMatrix(P) for P in prods]
        for key, f in (("norm-bound", operator_norm), ("norm-bound[row]", row_sum_norm),
                       ("norm-bound[col]", column_sum_norm)):
            bound = np.prod([f(P) ** wj for P, wj in zip(Ps, w)])
            fails[key] += not (f(L) <= bound * (1 + 1e-10))

        a, b, c, d = (masked_matrix(rng, n).entries for _ in range(4))
        left = (np.sqrt(a) * np.sqrt(b)) @ (np.sqrt(c) * np.sqrt(d))
        fails["cauchy-schwarz"] += not _le(left, np.sqrt(a @ c) * np.sqrt(b @ d))
        fails["cauchy-schwarz-swapped"] += not _le(left, np.sqrt(a @ d) * np.sqrt(b @ c))

        G = hadamard_geometric_mean(A[0], w).entries
        arith = sum(wj * M.entries for wj, M in zip(w, A[0]))
        fails["AM-GM"] += not _le(G, arith)
    label(record_property, "3 pointwise lemma suite",
          "failures out of 1000: " + ", ".join(f"{k}={v}" for k, v in fails.items()))
    assert all(v == 0 for v in fails.values()), fails


def test_criterion_4_oracle_equivalence(record_property):
    rng = np.random.default_rng(4)
    outside = 0
    for _ in range(1000):
        M = masked_matrix(rng, int(rng.integers(2, 4)))
        v = spectral_radius_exact_small(M)
        b = spectral_radius_bracket(M)
        outside += not (b.lower - 1e-9 <= v <= b.upper + 1e-9)
    mismatched = 0
    for _ in range(100):
        S = masked_set(rng, int(rng.integers(2, 5)), int(rng.integers(1, 4)))
        depth = int(rng.integers(1, 7))
        ex = radius_bracket(S, EnumerationBudget(max_depth=depth))
        pr = radius_bracket(S, EnumerationBudget(max_depth=depth, prune=True))
        mismatched += not (abs(ex.lower - pr.lower) <= pr.delta and abs(ex.upper - pr.upper) <= pr.delta)
    label(record_property, "4 oracle equivalence",
          f"oracle outside bracket {outside}/1000, pruned off by more than delta {mismatched}/100")
    assert outside == 0 and mismatched == 0


def test_criterion_5_tightness_witnesses(record_property):
    rng = np.random.default_rng(5)
    worst = 0.0
    for n in (2, 3, 4):
        for _ in range(10):
            A = NonNegMatrix(np.outer(rng.random(n) + 0.05, rng.random(n) + 0.05))
            S = MatrixSet([A])
            left, right = ch.evaluate_chain(ch.get_chain("C13"), {"Psi": S, "Sigma": S}).terms
            vals = [left.lower, left.upper, right.lower, right.upper]
            worst = max(worst, (max(vals) - min(vals)) / max(vals))
    shifts = MatrixSet([[[0, 2], [0, 0]], [[0, 0], [2, 0]]])
    b = radius_bracket(shifts, EnumerationBudget(max_depth=2))
    label(record_property, "5 tightness witnesses",
          f"C13 rank-one worst relative spread {worst:.1e}; two-shift bracket [{b.lower}, {b.upper}]")
    assert worst <= 1e-8
    assert (b.lower, b.upper) == (2.0, 2.0)


def test_criterion_6_kernel_refinement(tmp_path, record_property, capsys):
    out, path = tmp_path / "kernel.json", tmp_path / "residuals.csv"
    code = main(["kernel", "--grids", "16,32,64", "--out", str(out), "--csv", str(path)])
    capsys.readouterr()
    rep = json.loads(out.read_text())
    v = rep["summary"]["verdicts"]
    n_rows = len(path.read_text().splitlines()) - 1
    kinds = sorted(k["kind"] for k in rep["kernels"].values())
    label(record_property, "6 kernel refinement",
          f"{rep['summary']['reports']} reports over {len(kinds)} kernels, {v['violation']} violations, "
          f"{len(rep['flips'])} flips, {n_rows} residual rows")
    assert code == 0
    assert kinds == sorted(catalog())
    assert v["violation"] == 0 and v["inconclusive-budget"] == 0 and not rep["flips"]
    assert n_rows > 0 and {(r["grid"], r["next_grid"]) for r in rep["residuals"]} == {(16, 32), (32, 64)}


def test_criterion_7_determinism_and_pruning(tmp_path, record_property, capsys):
    reps = []
    for w in (1, 4):
        out = tmp_path / f"verify{w}.json"
        main(["verify", "--random", "42", "4", "--depth", "6", "--workers", str(w), "--out", str(out)])
        reps.append(deterministic_part(json.loads(out.read_text())))
    radius = []
    for w in (1, 4):
        out = tmp_path / f"radius{w}.json"
        main(["radius", "--input", str(FIXTURES / "two_shift.json"), "--set", "S,I,Z", "--depth", "8",
              "--workers", str(w), "--out", str(out)])
        radius.append(deterministic_part(json.loads(out.read_text())))
    out = tmp_path / "bench.json"
    code = main(["bench", "--workers", "4", "--out", str(out)])
    capsys.readouterr()
    b = json.loads(out.read_text())
    ex = next(r for r in b["runs"] if not r["prune"])
    pr = next(r for r in b["runs"] if r["prune"])
    label(record_property, "7 determinism and performance",
          f"reports identical for 1 vs 4 workers: {reps[0] == reps[1] and radius[0] == radius[1]}; "
          f"bench |S|=2 dim=4 depth=10: {pr['products']}/{ex['products']} products "
          f"(ratio {b['product_ratio']:.3f}), delta-equal {b['delta_equal']}")
    assert reps[0] == reps[1] and radius[0] == radius[1]
    assert code == 0 and b["depth"] == 10
    assert b["product_ratio"] < 0.6 and b["delta_equal"] and b["worker_independent"]
