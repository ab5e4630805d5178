"""Finite matrix sets: products, Hadamard means, and radius brackets.

The bracket for the generalized / joint spectral radius of a finite set is
built from a level-synchronous enumeration of the product tree:

* lower bound: ``max_m max_{A in S^m} rho(A)^(1/m)`` using certified
  Collatz-Wielandt lower bounds;
* upper bound: for a fixed induced norm, the words at depth ``m`` together
  with every pruned shorter word form a complete prefix code, so
  ``max`` over that code of ``||A||^(1/|A|)`` bounds the joint spectral
  radius.  Several norms are tried and the smallest bound is kept.

With Gripenberg pruning a word is not extended once its norm bound is at
most ``lower + delta`` in every norm of the family; if the whole tree is
pruned the upper bound is at most ``lower + delta``, and in any case each
per-norm bound is at most ``max(lower + delta, exhaustive bound)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, DimensionError, DomainError
from .matrix import (
    NonNegMatrix,
    RadiusBracket,
    WeightVector,
    as_matrix,
    as_weights,
    collatz_wielandt_stack,
    geometric_mean_stack,
    perron_vector,
    weighted_norms_stack,
)

DEFAULT_MAX_PRODUCTS = 2_000_000
DEFAULT_RELATIVE_DELTA = 1e-3
NORM_NAMES = ("row-sum", "weighted-row", "column-sum", "weighted-column")

_CHUNK = 1 << 15
_CW_BATCH = 2048
_EXP_LIMIT = 200


class MatrixSet:
    """Finite, non-empty collection of non-negative matrices of one dimension.

    Members are stored as one read-only ``(size, dim, dim)`` array; duplicates
    are kept and order is significant (it defines product indices).
    """

    __slots__ = ("_stack", "label")

    def __init__(self, members, label: str | None = None):
        mats = [as_matrix(M) for M in members]
        if not mats:
            raise DimensionError("a matrix set needs at least one member")
        dims = {M.dim for M in mats}
        if len(dims) != 1:
            raise DimensionError(f"members have mixed dimensions {sorted(dims)}")
        stack = np.stack([M.entries for M in mats])
        stack.setflags(write=False)
        self._stack = stack
        self.label = label

    @classmethod
    def _from_stack(cls, stack: np.ndarray, label: str | None = None) -> "MatrixSet":
        obj = cls.__new__(cls)
        stack = np.array(stack, dtype=float, copy=True)
        if stack.ndim != 3 or stack.shape[0] == 0 or stack.shape[1] != stack.shape[2]:
            raise DimensionError(f"bad stack shape {stack.shape}")
        stack.setflags(write=False)
        obj._stack = stack
        obj.label = label
        return obj

    @classmethod
    def singleton(cls, A, label: str | None = None) -> "MatrixSet":
        return cls([A], label)

    @property
    def stack(self) -> np.ndarray:
        return self._stack

    @property
    def dim(self) -> int:
        return self._stack.shape[1]

    @property
    def members(self) -> tuple:
        return tuple(NonNegMatrix._trusted(a) for a in self._stack)

    def __len__(self):
        return self._stack.shape[0]

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i) -> NonNegMatrix:
        return NonNegMatrix._trusted(self._stack[i])

    def __eq__(self, other):
        if not isinstance(other, MatrixSet):
            return NotImplemented
        return self._stack.shape == other._stack.shape and bool(
            np.array_equal(self._stack, other._stack)
        )

    def __repr__(self):
        name = f" {self.label!r}" if self.label else ""
        return f"<MatrixSet{name} size={len(self)} dim={self.dim}>"


def as_set(S) -> MatrixSet:
    if isinstance(S, MatrixSet):
        return S
    if isinstance(S, NonNegMatrix):
        return MatrixSet([S])
    return MatrixSet(S)


@dataclass(frozen=True)
class EnumerationBudget:
    """Limits and options for product enumeration.

    ``delta`` is the absolute Gripenberg tolerance; when ``None`` and pruning
    is on it defaults to ``1e-3`` times the depth-1 upper bound.
    ``dedup`` drops exactly equal matrices (float equality) from each level.
    """

    max_depth: int = 6
    max_products: int = DEFAULT_MAX_PRODUCTS
    prune: bool = False
    delta: float | None = None
    dedup: bool = False
    workers: int = 1
    max_bytes: int = 1 << 29

    def __post_init__(self):
        if self.max_depth < 1:
            raise DomainError("max_depth must be at least 1")
        if self.max_products < 1:
            raise DomainError("max_products must be positive")
        if self.delta is not None and not self.delta > 0:
            raise DomainError("Gripenberg delta must be positive")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")


# ---------------------------------------------------------------------------
# set algebra
# ---------------------------------------------------------------------------

def _check_count(count: int, cap: int, what: str):
    if count > cap:
        raise BudgetError(f"{what} has {count} members, above the cap of {cap}", count, cap)


def set_power(S, m: int, max_products: int = DEFAULT_MAX_PRODUCTS) -> MatrixSet:
    """All ``|S|**m`` ordered products of length ``m``, in lexicographic order."""
    S = as_set(S)
    if m < 1:
        raise DomainError("set power needs m >= 1")
    _check_count(len(S) ** m, max_products, f"S^{m}")
    M = S.stack
    n = S.dim
    P = M
    for _ in range(m - 1):
        P = (P[:, None] @ M[None]).reshape(-1, n, n)
    return MatrixSet._from_stack(P)


def set_product(P, S, max_products: int = DEFAULT_MAX_PRODUCTS) -> MatrixSet:
    """``{A B : A in P, B in S}`` ordered by (index of A, index of B)."""
    P, S = as_set(P), as_set(S)
    if P.dim != S.dim:
        raise DimensionError(f"dimension mismatch: {P.dim} vs {S.dim}")
    _check_count(len(P) * len(S), max_products, "set product")
    n = P.dim
    return MatrixSet._from_stack((P.stack[:, None] @ S.stack[None]).reshape(-1, n, n))


def hadamard_mean_of_sets(sets, w, max_products: int = DEFAULT_MAX_PRODUCTS) -> MatrixSet:
    """Weighted Hadamard geometric mean of sets, one member per index tuple.

    Relaxed weights (sum at least one) are accepted only when ``w`` was
    constructed with ``mode="relaxed"``.
    """
    sets = [as_set(S) for S in sets]
    if not sets:
        raise DimensionError("Hadamard mean of an empty list of sets")
    dims = {S.dim for S in sets}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")
    w = as_weights(w, len(sets))
    sizes = [len(S) for S in sets]
    _check_count(math.prod(sizes), max_products, "Hadamard mean of sets")
    idx = np.indices(sizes).reshape(len(sizes), -1)
    stacks = [S.stack[i] for S, i in zip(sets, idx)]
    return MatrixSet._from_stack(geometric_mean_stack(stacks, w.weights))


# ---------------------------------------------------------------------------
# norms and single-depth bounds
# ---------------------------------------------------------------------------

def norm_weights(S) -> tuple[np.ndarray, np.ndarray]:
    """Right and left weight families used for induced norms of products of S.

    Column 0 is the all-ones vector (row-sum / column-sum norms); column 1 is
    the Perron vector of the sum of the members (or of its transpose).
    """
    S = as_set(S)
    total = S.stack.sum(axis=0)
    ones = np.ones(S.dim)
    right = np.column_stack([ones, perron_vector(total)])
    left = np.column_stack([ones, perron_vector(total.T)])
    return right, left


def _root(values: np.ndarray, exps: np.ndarray, d: int) -> np.ndarray:
    """``(values * 2**exps) ** (1/d)`` without overflow."""
    out = values ** (1.0 / d) if d > 1 else values.copy()
    nz = exps != 0
    if np.any(nz):
        out[nz] = out[nz] * np.exp2(exps[nz] / d)
    return out


def gsr_lower(S, m: int, max_products: int = DEFAULT_MAX_PRODUCTS,
              tol_rel: float = 1e-10) -> float:
    """``max_{A in S^m} lower(rho(A))^(1/m)``: a certified lower bound."""
    P = set_power(S, m, max_products).stack
    lo, _, _, _ = collatz_wielandt_stack(P, tol_rel)
    return float(lo.max() ** (1.0 / m))


def jsr_upper(S, m: int, max_products: int = DEFAULT_MAX_PRODUCTS,
              norms: str = "all") -> float:
    """``min_norm max_{A in S^m} ||A||^(1/m)``: a certified upper bound.

    ``norms="all"`` uses the row-sum, column-sum and Perron-weighted induced
    norms; ``"operator"`` restricts to the row-sum and column-sum norms.
    The minimum over norms is taken after the maximum over products, which
    keeps the bound valid for every set.
    """
    S = as_set(S)
    P = set_power(S, m, max_products).stack
    right, left = norm_weights(S)
    N = weighted_norms_stack(P, right, left)
    per_norm = N.max(axis=0) ** (1.0 / m)
    if norms == "operator":
        per_norm = per_norm[[0, 2]]
    elif norms != "all":
        raise DomainError(f"unknown norm family {norms!r}")
    return float(per_norm.min())


# ---------------------------------------------------------------------------
# enumeration engine
# ---------------------------------------------------------------------------

@dataclass
class LevelStats:
    depth: int
    products: int
    live: int
    lower: float
    upper: float
    pruned: int = 0


@dataclass
class EnumerationResult:
    bracket: RadiusBracket
    levels: list = field(default_factory=list)
    norm: str = ""


def _level_chunk(parents, pexp, M, right, left, d, cheap_floor):
    """Children of ``parents`` plus their norm roots and cheap lower roots."""
    n = M.shape[1]
    if parents is None:
        kids = M.copy()
        kexp = np.zeros(len(M), dtype=np.int64)
    else:
        kids = (parents[:, None] @ M[None]).reshape(-1, n, n)
        kexp = np.repeat(pexp, len(M))
    # right[:, 0] and left[:, 0] are all-ones, so column 0 of r / l holds the
    # row sums / column sums reused by the cheap lower bound
    r = kids @ right
    l = kids.transpose(0, 2, 1) @ left
    rows = r[:, :, 0]
    mx = rows.max(axis=1)
    big = (mx > 2.0 ** _EXP_LIMIT) | ((mx > 0) & (mx < 2.0 ** -_EXP_LIMIT))
    if np.any(big):
        _, e = np.frexp(mx[big])
        kids[big] = np.ldexp(kids[big], -e[:, None, None])
        r[big] = np.ldexp(r[big], -e[:, None, None])
        l[big] = np.ldexp(l[big], -e[:, None, None])
        kexp[big] += e
        rows = r[:, :, 0]
    N = np.concatenate([(r / right[None]).max(axis=1), (l / left[None]).max(axis=1)], axis=1)
    nroots = _root(N, kexp[:, None].repeat(N.shape[1], axis=1), d)
    cheap = np.maximum(np.maximum(rows.min(axis=1), l[:, :, 0].min(axis=1)),
                       np.diagonal(kids, axis1=1, axis2=2).max(axis=1))
    croots = _root(cheap, kexp, d)
    return kids, kexp, nroots, croots


def _lower_chunk(kids, kexp, nroots, croots, d, floor):
    """Per-node lower values; CW brackets only where they could beat ``floor``."""
    vals = croots.copy()
    best = max(floor, float(vals.max()) if len(vals) else 0.0)
    cap = nroots.min(axis=1)
    cand = np.flatnonzero(cap >= best)
    if cand.size:
        order = cand[np.argsort(-cap[cand], kind="stable")]
        for start in range(0, order.size, _CW_BATCH):
            batch = order[start:start + _CW_BATCH]
            batch = batch[cap[batch] >= best]
            if batch.size == 0:
                break
            lo, _, _, _ = collatz_wielandt_stack(kids[batch])
            r = _root(lo, kexp[batch], d)
            vals[batch] = np.maximum(vals[batch], r)
            best = max(best, float(r.max()))
    return vals


def _process_level(parents, pexp, pwords, M, right, left, d, floor, keep, workers):
    s = len(M)
    if parents is None:
        groups = [(None, None, None)]
    else:
        # split by first factor so each worker owns whole subtrees
        first = pwords[:, 0]
        cuts = np.flatnonzero(np.diff(first)) + 1
        bounds = np.split(np.arange(len(parents)), cuts)
        step = max(1, _CHUNK // s)
        pieces = []
        for b in bounds:
            for k in range(0, len(b), step):
                pieces.append(b[k:k + step])
        groups = [(parents[p], pexp[p], pwords[p]) for p in pieces]

    def work(g):
        par, pe, pw = g
        kids, kexp, nroots, croots = _level_chunk(par, pe, M, right, left, d, floor)
        vals = _lower_chunk(kids, kexp, nroots, croots, d, floor)
        if pw is None:
            words = np.arange(s)[:, None]
        else:
            words = np.concatenate(
                [np.repeat(pw, s, axis=0), np.tile(np.arange(s), len(pw))[:, None]], axis=1
            )
        return (kids if keep else None), kexp, words, nroots, vals

    if workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(work, groups))
    else:
        out = [work(g) for g in groups]
    kids = np.concatenate([o[0] for o in out]) if keep else None
    kexp = np.concatenate([o[1] for o in out])
    words = np.concatenate([o[2] for o in out])
    nroots = np.concatenate([o[3] for o in out])
    vals = np.concatenate([o[4] for o in out])
    return kids, kexp, words, nroots, vals


def _dedup(kids, kexp, words):
    flat = np.concatenate([kids.reshape(len(kids), -1), kexp[:, None].astype(float)], axis=1)
    _, first = np.unique(flat, axis=0, return_index=True)
    first.sort()
    return kids[first], kexp[first], words[first]


def enumerate_products(S, budget: EnumerationBudget | None = None) -> EnumerationResult:
    """Run the product-tree enumeration and return the bracket with per-level stats."""
    S = as_set(S)
    budget = budget or EnumerationBudget()
    M = S.stack
    s, n = len(S), S.dim
    if s > budget.max_products:
        raise BudgetError(f"set of size {s} exceeds the product cap {budget.max_products}",
                          s, budget.max_products)
    right, left = norm_weights(S)
    K = right.shape[1] + left.shape[1]

    lower, lower_depth, lower_word = 0.0, 1, (0,)
    upper, upper_depth, upper_word = math.inf, 1, (0,)
    pruned_max = np.full(K, -np.inf)
    pruned_word = [()] * K
    delta = budget.delta
    k0 = None
    evaluated = 0
    truncated = False
    levels = []
    parents = pexp = pwords = None

    for d in range(1, budget.max_depth + 1):
        size = s if parents is None else len(parents) * s
        if evaluated + size > budget.max_products:
            truncated = True
            break
        next_size = size * s
        keep = (
            d < budget.max_depth
            and (budget.prune or evaluated + size + next_size <= budget.max_products)
            and size * n * n * 8 <= budget.max_bytes
        )
        kids, kexp, words, nroots, vals = _process_level(
            parents, pexp, pwords, M, right, left, d, lower, keep, budget.workers
        )
        evaluated += size

        # lower bound with lexicographic tie-break
        lv = float(vals.max())
        if lv > lower:
            lower, lower_depth = lv, d
            lower_word = tuple(int(i) for i in words[int(np.argmax(vals))])

        # upper bound from the complete prefix code at this depth
        level_max = nroots.max(axis=0)
        U = np.maximum(pruned_max, level_max)
        k = int(np.argmin(U))
        if U[k] < upper:
            upper, upper_depth = float(U[k]), d
            if level_max[k] >= pruned_max[k]:
                upper_word = tuple(int(i) for i in words[int(np.argmax(nroots[:, k]))])
            else:
                upper_word = pruned_word[k]

        if d == 1 and budget.prune:
            k0 = int(np.argmin(level_max))
            if delta is None:
                delta = DEFAULT_RELATIVE_DELTA * float(level_max[k0])
                if delta <= 0:
                    delta = DEFAULT_RELATIVE_DELTA

        n_pruned = 0
        live = np.ones(len(vals), dtype=bool)
        if budget.prune:
            theta = lower + delta
            # a prefix is dropped only when it is below theta in every norm, so
            # each per-norm prefix-code bound stays within delta of exhaustive
            cut = nroots.max(axis=1) <= theta
            n_pruned = int(cut.sum())
            if n_pruned:
                for kk in range(K):
                    j = np.flatnonzero(cut)[int(np.argmax(nroots[cut, kk]))]
                    if nroots[j, kk] > pruned_max[kk]:
                        pruned_max[kk] = nroots[j, kk]
                        pruned_word[kk] = tuple(int(i) for i in words[j])
            live = ~cut
        levels.append(LevelStats(d, size, int(live.sum()), lv, float(U[k]), n_pruned))

        if not live.any():
            final = float(pruned_max.min())
            if final < upper:
                upper, upper_depth = final, d
                upper_word = pruned_word[int(np.argmin(pruned_max))]
            break
        if d == budget.max_depth:
            break
        if not keep:
            truncated = True
            break
        parents, pexp, pwords = kids[live], kexp[live], words[live]
        if budget.dedup:
            parents, pexp, pwords = _dedup(parents, pexp, pwords)

    method = "gripenberg" if budget.prune else "exhaustive"
    bracket = RadiusBracket(
        lower, upper,
        lower_depth=lower_depth, upper_depth=upper_depth, method=method,
        converged=not truncated, truncated=truncated, products=evaluated,
        delta=delta if budget.prune else None,
        lower_word=lower_word, upper_word=upper_word,
    )
    return EnumerationResult(bracket, levels, NORM_NAMES[k0] if k0 is not None else "")


def radius_bracket(S, budget: EnumerationBudget | None = None) -> RadiusBracket:
    """Certified bracket for the generalized (= joint) spectral radius of ``S``.

    A budget overrun past depth 1 does not raise: the enumeration stops and
    the bracket is flagged ``truncated``.  Only a set larger than the cap
    raises :class:`BudgetError`.
    """
    return enumerate_products(S, budget).bracket
