"""Spectral-radius inequality chains and their bracket-based verdicts.

A chain is a list of terms ``t_1 <= t_2 <= ... <= t_k``.  Each term is a
product of radii raised to rational exponents, ``prod r(E_j)^{e_j}``, where
``E_j`` is an expression over named inputs built from set products, set
powers and Hadamard weighted means.  Single matrices are singleton sets, so
one expression language serves matrix, set and kernel chains.

A pair ``t_i <= t_{i+1}`` is refuted only when the certified lower bound of
the left term exceeds the certified upper bound of the right term by more
than the relative tolerance.  Everything else is "consistent" (or
"inconclusive-budget" when a term could not be evaluated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetError, DomainError
from .kernels import KernelModel, kernel_hadamard_mean, kernel_product, to_matrix
from .matrix import (
    NonNegMatrix,
    RadiusBracket,
    WeightVector,
    spectral_radius_bracket,
    spectral_radius_exact_small,
)
from .sets import (
    DEFAULT_MAX_PRODUCTS,
    EnumerationBudget,
    MatrixSet,
    hadamard_mean_of_sets,
    radius_bracket,
    set_power,
    set_product,
)

CONSISTENT = "consistent"
VIOLATION = "violation"
INCONCLUSIVE = "inconclusive-budget"

DEFAULT_TOL = 1e-9
ZERO_MASK = 0.30
ALPHA_GRID = (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**6)


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

class Expr:
    def __mul__(self, other: "Expr") -> "Expr":
        return Prod((self, other))

    def __pow__(self, k: int) -> "Expr":
        return Pow(self, k)


@dataclass(frozen=True)
class Ref(Expr):
    name: str

    def __str__(self):
        return self.name

    def refs(self):
        return {self.name}


@dataclass(frozen=True)
class Prod(Expr):
    factors: tuple

    def __str__(self):
        return "(" + " ".join(str(f) for f in self.factors) + ")"

    def refs(self):
        return set().union(*(f.refs() for f in self.factors))


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    k: int

    def __str__(self):
        return str(self.base) if self.k == 1 else f"{self.base}^{self.k}"

    def refs(self):
        return self.base.refs()


@dataclass(frozen=True)
class Had(Expr):
    """Hadamard weighted mean ``E_1^(w_1) o ... o E_m^(w_m)``."""

    parts: tuple
    weights: tuple

    def __str__(self):
        bits = []
        for e, w in zip(self.parts, self.weights):
            s = f"({e})" if isinstance(e, Pow) and e.k != 1 else str(e)
            bits.append(s if w == 1 else f"{s}^({_fmt(w)})")
        return "[" + " o ".join(bits) + "]"

    def refs(self):
        return set().union(*(e.refs() for e in self.parts))

    @property
    def relaxed(self) -> bool:
        return sum(self.weights) != 1


def had(*parts, weights=None) -> Had:
    """Hadamard product (weights default to 1) or weighted mean."""
    weights = (Fraction(1),) * len(parts) if weights is None else tuple(_frac(w) for w in weights)
    return Had(tuple(parts), weights)


def half(*parts) -> Had:
    return had(*parts, weights=[Fraction(1, 2)] * len(parts))


@dataclass(frozen=True)
class Term:
    """``prod r(expr)^exponent``; factors with exponent 0 are dropped."""

    factors: tuple

    def __str__(self):
        out = []
        for e, q in self.factors:
            out.append(f"r{e}" if str(e).startswith(("(", "[")) else f"r({e})")
            if q != 1:
                out[-1] += f"^{_fmt(q)}"
        return " * ".join(out) if out else "1"

    def refs(self):
        return set().union(*(e.refs() for e, _ in self.factors)) if self.factors else set()


def term(*pairs) -> Term:
    """``term(E)`` or ``term((E1, q1), (E2, q2), ...)``."""
    if len(pairs) == 1 and isinstance(pairs[0], Expr):
        pairs = ((pairs[0], 1),)
    return Term(tuple((e, _frac(q)) for e, q in pairs if _frac(q) != 0))


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainSpec:
    id: str
    kind: str  # "matrix" (single operators) or "set"
    statement: str
    params: tuple  # subset of ("m", "alpha", "k", "weights")
    build: Callable = field(repr=False, compare=False)
    kernel: bool = False

    def sequences(self, params: dict) -> list:
        return self.build(**{p: params[p] for p in self.params})

    def roles(self, params: dict) -> set:
        out = set()
        for seq in self.sequences(params):
            for t in seq:
                out |= t.refs()
        return out


A, B = Ref("A"), Ref("B")
PSI, SIG = Ref("Psi"), Ref("Sigma")


def _indexed(prefix: str, m: int):
    return [Ref(f"{prefix}{i}") for i in range(1, m + 1)]


def _c1():
    return [[term(had(A, B)), term((had(A, A) * had(B, B), Fraction(1, 2))), term(A * B)]]


def _c2():
    return [[term(had(A, B)), term((had(A * B, B * A), Fraction(1, 2))), term(A * B)]]


def _c3(m):
    As = _indexed("A", m)
    return [[term(had(*As)), term(Prod(tuple(As)))]]


def _c4():
    return [[term(had(A, B)), term((had(A, A) * had(B, B), Fraction(1, 2))),
             term((had(A * B, A * B), Fraction(1, 2))), term(A * B)]]


def _c5(alpha):
    a = _frac(alpha)
    return [[term(had(A, B)), term((had(A, A) * had(B, B), Fraction(1, 2))),
             term((had(A * B, A * B), a / 2), (had(B * A, B * A), (1 - a) / 2)),
             term(A * B)]]


def _c6():
    q = Fraction(1, 4)
    return [[term(had(A, B)), term((had(A * B, B * A), Fraction(1, 2))),
             term((had(A * B, A * B), q), (had(B * A, B * A), q)), term(A * B)]]


def _c7():
    return [[term(half(A, B)), term((A * B, Fraction(1, 2)))]]


def _c8(m):
    As = _indexed("A", m)
    inv = Fraction(1, m)
    return [[term(had(*As, weights=[inv] * m)), term((Prod(tuple(As)), inv))]]


def _cyclic(As):
    m = len(As)
    return [Prod(tuple(As[j:] + As[:j])) for j in range(m)]


def _c9(m):
    As = _indexed("A", m)
    inv = Fraction(1, m)
    return [[term(had(*As, weights=[inv] * m)),
             term((had(*_cyclic(As), weights=[inv] * m), inv)),
             term((Prod(tuple(As)), inv))]]


def _c10():
    h = Fraction(1, 2)
    return [[term(half(A, B)), term((half(A * B, B * A), h)), term((A * B, h))]]


def _c11(m, weights):
    Ps = _indexed("Psi", m)
    return [[term(had(*Ps, weights=weights)), term(*zip(Ps, weights))]]


def _c12(m):
    Ps = _indexed("Psi", m)
    inv = Fraction(1, m)
    return [[term(had(*Ps, weights=[inv] * m)), term((Prod(tuple(Ps)), inv))]]


def _c13():
    return [[term(half(PSI, SIG)), term((PSI * SIG, Fraction(1, 2)))]]


def _c14(alpha):
    a = _frac(alpha)
    h, q = Fraction(1, 2), Fraction(1, 4)
    PS, SP = PSI * SIG, SIG * PSI
    first = [term(half(PSI, SIG)), term((half(PS, SP), h)),
             term((half(PS, PS), q), (half(SP, SP), q)), term((PS, h))]
    second = [term(half(PSI, SIG)), term((half(PSI, PSI) * half(SIG, SIG), h)),
              term((half(PS, PS), a / 2), (half(SP, SP), (1 - a) / 2)), term((PS, h))]
    return [first, second]


def _c15():
    return [[term((half(PSI * SIG, SIG * PSI), Fraction(1, 1))),
             term((PSI ** 2 * SIG ** 2, Fraction(1, 2)))]]


def _k_refined(prefix, m, k, weights):
    Ps = _indexed(prefix, m)
    return [[term(had(*Ps, weights=weights)),
             term((had(*[P ** k for P in Ps], weights=weights), Fraction(1, k))),
             term(*zip(Ps, weights))]]


def _c16(m, k, weights):
    return _k_refined("Psi", m, k, weights)


def _c17(k):
    h = Fraction(1, 2)
    return [[term(half(PSI, SIG)), term((half(PSI ** k, SIG ** k), Fraction(1, k))),
             term((PSI, h), (SIG, h))]]


def _c18(m, k, weights):
    return _k_refined("A", m, k, weights)


def _c19(alpha, k):
    a = _frac(alpha)
    PS, SP = PSI * SIG, SIG * PSI
    return [[term((half(PS, PS), a / 2), (half(SP, SP), (1 - a) / 2)),
             term((half(PS ** k, PS ** k), a / (2 * k)), (half(SP ** k, SP ** k), (1 - a) / (2 * k))),
             term((PS, Fraction(1, 2)))]]


CATALOG = (
    ChainSpec("C1", "matrix", "r(A o B) <= r((A o A)(B o B))^1/2 <= r(AB)", (), _c1),
    ChainSpec("C2", "matrix", "r(A o B) <= r(AB o BA)^1/2 <= r(AB)", (), _c2),
    ChainSpec("C3", "matrix", "r(A1 o ... o Am) <= r(A1 ... Am)", ("m",), _c3),
    ChainSpec("C4", "matrix", "r(A o B) <= r((A o A)(B o B))^1/2 <= r(AB o AB)^1/2 <= r(AB)", (), _c4),
    ChainSpec("C5", "matrix",
              "r(A o B) <= r((A o A)(B o B))^1/2 <= r(AB o AB)^(a/2) r(BA o BA)^((1-a)/2) <= r(AB)",
              ("alpha",), _c5),
    ChainSpec("C6", "matrix",
              "r(A o B) <= r(AB o BA)^1/2 <= r(AB o AB)^1/4 r(BA o BA)^1/4 <= r(AB)", (), _c6),
    ChainSpec("C7", "matrix", "r(A^(1/2) o B^(1/2)) <= r(AB)^1/2", (), _c7, kernel=True),
    ChainSpec("C8", "matrix", "r(A1^(1/m) o ... o Am^(1/m)) <= r(A1 ... Am)^(1/m)", ("m",), _c8,
              kernel=True),
    ChainSpec("C9", "matrix",
              "r(A1^(1/m) o ... o Am^(1/m)) <= r(P1^(1/m) o ... o Pm^(1/m))^(1/m) <= r(A1 ... Am)^(1/m)",
              ("m",), _c9, kernel=True),
    ChainSpec("C10", "matrix",
              "r(A^(1/2) o B^(1/2)) <= r((AB)^(1/2) o (BA)^(1/2))^1/2 <= r(AB)^1/2", (), _c10,
              kernel=True),
    ChainSpec("C11", "set", "r(Psi1^(a1) o ... o Psim^(am)) <= r(Psi1)^a1 ... r(Psim)^am",
              ("m", "weights"), _c11),
    ChainSpec("C12", "set", "r(Psi1^(1/m) o ... o Psim^(1/m)) <= r(Psi1 ... Psim)^(1/m)", ("m",), _c12),
    ChainSpec("C13", "set", "r(Psi^(1/2) o Sigma^(1/2)) <= r(Psi Sigma)^1/2", (), _c13),
    ChainSpec("C14", "set",
              "two four-term chains from r(Psi^(1/2) o Sigma^(1/2)) to r(Psi Sigma)^1/2",
              ("alpha",), _c14),
    ChainSpec("C15", "set", "r((Psi Sigma)^(1/2) o (Sigma Psi)^(1/2)) <= r(Psi^2 Sigma^2)^1/2", (), _c15),
    ChainSpec("C16", "set",
              "r(mean of Psi_i) <= r(mean of Psi_i^k)^(1/k) <= prod r(Psi_i)^(a_i)",
              ("m", "k", "weights"), _c16),
    ChainSpec("C17", "set",
              "r(Psi^(1/2) o Sigma^(1/2)) <= r((Psi^k)^(1/2) o (Sigma^k)^(1/2))^(1/k) <= r(Psi)^1/2 r(Sigma)^1/2",
              ("k",), _c17),
    ChainSpec("C18", "matrix",
              "r(mean of A_i) <= r(mean of A_i^k)^(1/k) <= prod r(A_i)^(a_i)",
              ("m", "k", "weights"), _c18),
    ChainSpec("C19", "set",
              "k-refined middle terms between the third and fourth terms of C14",
              ("alpha", "k"), _c19),
)

CHAIN_IDS = tuple(c.id for c in CATALOG)
KERNEL_CHAIN_IDS = tuple(c.id for c in CATALOG if c.kernel)
EXACT_CHAIN_IDS = tuple(c.id for c in CATALOG if c.kind == "matrix")


def chain_catalog() -> list:
    return list(CATALOG)


def get_chain(cid: str) -> ChainSpec:
    for c in CATALOG:
        if c.id == cid:
            return c
    raise DomainError(f"unknown chain id {cid!r}; expected one of {', '.join(CHAIN_IDS)}")


def select_chains(selector) -> list:
    """``"all"``, a comma-separated string, or a list of ids."""
    if selector is None or selector == "all" or selector == ["all"]:
        return list(CATALOG)
    if isinstance(selector, str):
        selector = [s.strip() for s in selector.split(",") if s.strip()]
    return [get_chain(s) for s in selector]


def default_params(m: int = 2, alpha=Fraction(1, 2), k: int = 2, weights=None) -> dict:
    weights = tuple(_frac(w) for w in weights) if weights is not None else (Fraction(1, m),) * m
    if len(weights) != m or sum(weights) != 1 or any(w <= 0 for w in weights):
        raise DomainError(f"chain weights must be {m} positive rationals summing to 1")
    a = _frac(alpha)
    if not 0 <= a <= 1:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if m < 2 or k < 1:
        raise DomainError("need m >= 2 and k >= 1")
    return {"m": m, "alpha": a, "k": k, "weights": weights}


# ---------------------------------------------------------------------------
# evaluation backends
# ---------------------------------------------------------------------------

class MatrixBackend:
    """Evaluates expressions over :class:`MatrixSet` inputs."""

    def __init__(self, inputs: dict, budget: EnumerationBudget | None = None, exact: bool = False,
                 tol_rel: float = 1e-10):
        self.inputs = {k: (MatrixSet.singleton(v) if isinstance(v, NonNegMatrix) else v)
                       for k, v in inputs.items()}
        self.budget = budget or EnumerationBudget()
        self.exact = exact
        self.tol_rel = tol_rel
        self._sets: dict = {}
        self._radii: dict = {}

    def build(self, e: Expr) -> MatrixSet:
        key = str(e)
        if key in self._sets:
            return self._sets[key]
        cap = self.budget.max_products
        if isinstance(e, Ref):
            out = self.inputs[e.name]
        elif isinstance(e, Prod):
            out = self.build(e.factors[0])
            for f in e.factors[1:]:
                out = set_product(out, self.build(f), cap)
        elif isinstance(e, Pow):
            out = set_power(self.build(e.base), e.k, cap)
        elif isinstance(e, Had):
            w = WeightVector(tuple(float(x) for x in e.weights), "relaxed" if e.relaxed else "strict")
            out = hadamard_mean_of_sets([self.build(p) for p in e.parts], w, cap)
        else:
            raise TypeError(f"not an expression: {e!r}")
        self._sets[key] = out
        return out

    def radius(self, e: Expr) -> RadiusBracket:
        key = str(e)
        if key not in self._radii:
            self._radii[key] = self._radius(self.build(e))
        return self._radii[key]

    def _radius(self, S: MatrixSet) -> RadiusBracket:
        if len(S) == 1:
            cw = spectral_radius_bracket(S[0], self.tol_rel)
            if self.exact and S.dim <= 3:
                v = spectral_radius_exact_small(S[0])
                # the closed form can lose digits near repeated roots; keep the
                # certified bracket whenever the two disagree
                if cw.contains(v, 1e-12 * max(1.0, v)):
                    return RadiusBracket(v, v, method="exact")
            return cw
        return radius_bracket(S, self.budget)


class KernelBackend:
    """Evaluates expressions over :class:`KernelModel` inputs on one grid."""

    def __init__(self, inputs: dict, tol_rel: float = 1e-12):
        self.inputs = inputs
        self.tol_rel = tol_rel
        self._models: dict = {}
        self._radii: dict = {}

    def build(self, e: Expr) -> KernelModel:
        key = str(e)
        if key in self._models:
            return self._models[key]
        if isinstance(e, Ref):
            out = self.inputs[e.name]
        elif isinstance(e, Prod):
            out = self.build(e.factors[0])
            for f in e.factors[1:]:
                out = kernel_product(out, self.build(f))
        elif isinstance(e, Pow):
            base = out = self.build(e.base)
            for _ in range(e.k - 1):
                out = kernel_product(out, base)
        elif isinstance(e, Had):
            if e.relaxed:
                raise DomainError("kernel chains only take weights summing to 1")
            out = kernel_hadamard_mean([self.build(p) for p in e.parts],
                                       tuple(float(w) for w in e.weights))
        else:
            raise TypeError(f"not an expression: {e!r}")
        self._models[key] = out
        return out

    def radius(self, e: Expr) -> RadiusBracket:
        key = str(e)
        if key not in self._radii:
            self._radii[key] = spectral_radius_bracket(to_matrix(self.build(e)), self.tol_rel)
        return self._radii[key]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class TermResult:
    expr: str
    factors: list  # [{"expr", "exponent", "bracket"}]
    lower: float | None
    upper: float | None

    def as_dict(self) -> dict:
        return {
            "expr": self.expr,
            "lower": self.lower,
            "upper": self.upper,
            "factors": [
                {"expr": f["expr"], "exponent": f["exponent"],
                 "bracket": f["bracket"].as_dict() if f["bracket"] is not None else None,
                 "error": f.get("error")}
                for f in self.factors
            ],
        }


@dataclass
class PairVerdict:
    sequence: int
    left: int
    right: int
    verdict: str
    lhs: float | None
    rhs: float | None

    def as_dict(self) -> dict:
        return {"sequence": self.sequence, "left": self.left, "right": self.right,
                "verdict": self.verdict, "lhs": self.lhs, "rhs": self.rhs}


@dataclass
class ChainReport:
    id: str
    digest: dict
    sequences: list  # list of list of TermResult
    pairs: list
    verdict: str

    @property
    def terms(self) -> list:
        return [t for seq in self.sequences for t in seq]

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "input": self.digest,
            "sequences": [[t.as_dict() for t in seq] for seq in self.sequences],
            "pairs": [p.as_dict() for p in self.pairs],
            "verdict": self.verdict,
        }


def pair_verdict(lhs: float | None, rhs: float | None, tol: float = DEFAULT_TOL) -> str:
    if lhs is None or rhs is None:
        return INCONCLUSIVE
    return VIOLATION if lhs > rhs * (1.0 + tol) else CONSISTENT


def _evaluate_term(t: Term, backend) -> TermResult:
    lo = hi = 1.0
    factors = []
    ok = True
    for e, q in t.factors:
        entry = {"expr": str(e), "exponent": _fmt(q), "bracket": None}
        try:
            br = backend.radius(e)
        except BudgetError as exc:
            entry["error"] = str(exc)
            ok = False
        else:
            entry["bracket"] = br
            lo *= br.lower ** float(q)
            hi *= br.upper ** float(q)
        factors.append(entry)
    if not ok:
        return TermResult(str(t), factors, None, None)
    return TermResult(str(t), factors, lo, hi)


def _overall(pairs) -> str:
    verdicts = {p.verdict for p in pairs}
    if VIOLATION in verdicts:
        return VIOLATION
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return CONSISTENT


def evaluate_chain(spec: ChainSpec, inputs=None, budget: EnumerationBudget | None = None,
                   tol: float = DEFAULT_TOL, params: dict | None = None, exact: bool = False,
                   backend=None, digest: dict | None = None) -> ChainReport:
    """Evaluate every adjacent pair of ``spec`` on ``inputs``.

    ``inputs`` maps role names (``A``, ``B``, ``A1``..., ``Psi``, ``Sigma``,
    ``Psi1``...) to matrices, matrix sets or kernel models.  Passing a shared
    ``backend`` reuses term brackets across chains on the same inputs.
    """
    params = params or default_params()
    if backend is None:
        if inputs and all(isinstance(v, KernelModel) for v in inputs.values()):
            backend = KernelBackend(inputs)
        else:
            backend = MatrixBackend(inputs or {}, budget, exact)
    missing = spec.roles(params) - set(backend.inputs)
    if missing:
        raise DomainError(f"chain {spec.id} needs inputs {sorted(missing)}")
    sequences, pairs = [], []
    for si, seq in enumerate(spec.sequences(params)):
        results = [_evaluate_term(t, backend) for t in seq]
        sequences.append(results)
        for i in range(len(results) - 1):
            lhs, rhs = results[i].lower, results[i + 1].upper
            pairs.append(PairVerdict(si, i, i + 1, pair_verdict(lhs, rhs, tol), lhs, rhs))
    d = dict(digest or {})
    d.setdefault("params", {p: _param_repr(params[p]) for p in spec.params})
    return ChainReport(spec.id, d, sequences, pairs, _overall(pairs))


def _param_repr(v):
    if isinstance(v, Fraction):
        return _fmt(v)
    if isinstance(v, tuple):
        return [_param_repr(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# randomized campaign
# ---------------------------------------------------------------------------

def random_matrix(rng: np.random.Generator, n: int, zero_mask: float = ZERO_MASK) -> NonNegMatrix:
    a = rng.random((n, n))
    a[rng.random((n, n)) < zero_mask] = 0.0
    return NonNegMatrix._trusted(a)


def random_set(rng: np.random.Generator, n: int, size: int, zero_mask: float = ZERO_MASK) -> MatrixSet:
    return MatrixSet([random_matrix(rng, n, zero_mask) for _ in range(size)])


def draw_trial(rng: np.random.Generator, dims: Sequence[int], set_sizes: Sequence[int],
               ks: Sequence[int] = (1, 2), ms: Sequence[int] = (2, 3)):
    """Draw one trial's inputs and chain parameters.

    Matrices ``A1 = A``, ``A2 = B`` and sets ``Psi1 = Psi``, ``Psi2 = Sigma``
    are shared so term brackets can be reused across chains.
    """
    lo, hi = dims
    n = int(rng.integers(lo, hi + 1))
    A_, B_, A3 = (random_matrix(rng, n) for _ in range(3))
    slo, shi = set_sizes
    Psi, Sig, Psi3 = (random_set(rng, n, int(rng.integers(slo, shi + 1))) for _ in range(3))
    m = int(rng.choice(list(ms)))
    alpha = ALPHA_GRID[int(rng.integers(len(ALPHA_GRID)))]
    k = int(rng.choice(list(ks)))
    raw = [int(x) for x in rng.integers(1, 5, size=m)]
    weights = tuple(Fraction(x, sum(raw)) for x in raw)
    inputs = {"A": A_, "B": B_, "A1": A_, "A2": B_, "A3": A3,
              "Psi": Psi, "Sigma": Sig, "Psi1": Psi, "Psi2": Sig, "Psi3": Psi3}
    return n, inputs, default_params(m, alpha, k, weights)


def randomized_campaign(seed: int, trials: int, dims=(2, 4), set_sizes=(1, 3),
                        budget: EnumerationBudget | None = None, tol: float = DEFAULT_TOL,
                        chains="all", ks=(1, 2), on_trial=None) -> list:
    """Run the selected chains on ``trials`` seeded random inputs.

    Reports are ordered trial-major, catalog order within a trial.  The
    optional ``on_trial(index, reports)`` callback sees each trial as it ends.
    """
    if trials < 1:
        raise DomainError("a campaign needs at least one trial")
    specs = select_chains(chains)
    budget = budget or EnumerationBudget()
    rng = np.random.default_rng(seed)
    out = []
    for t in range(trials):
        n, inputs, params = draw_trial(rng, dims, set_sizes, ks)
        backend = MatrixBackend(inputs, budget)
        sizes = {k: len(v) for k, v in backend.inputs.items() if k in ("Psi", "Sigma", "Psi3")}
        digest = {"seed": seed, "trial": t, "dim": n, "set_sizes": sizes,
                  "params": {k: _param_repr(v) for k, v in params.items()}}
        reports = [evaluate_chain(s, params=params, backend=backend, tol=tol, digest=digest)
                   for s in specs]
        out.extend(reports)
        if on_trial is not None:
            on_trial(t, reports)
    return out


def trial_inputs(seed: int, trial: int, dims=(2, 4), set_sizes=(1, 3), ks=(1, 2)):
    """Re-draw the inputs of one campaign trial (for counterexample dumps)."""
    rng = np.random.default_rng(seed)
    for _ in range(trial):
        draw_trial(rng, dims, set_sizes, ks)
    return draw_trial(rng, dims, set_sizes, ks)


# ---------------------------------------------------------------------------
# kernel chains
# ---------------------------------------------------------------------------

def kernel_roles(models: Sequence[KernelModel]) -> dict:
    """Map a list of kernel models to ``A``/``B`` and ``A1``... roles."""
    models = list(models)
    if len(models) == 1:
        models = models * 2
    out = {f"A{i + 1}": km for i, km in enumerate(models)}
    out["A"] = models[0]
    out["B"] = models[1] if len(models) > 1 else models[0]
    return out


def evaluate_kernel_chain(spec: ChainSpec, models: Sequence[KernelModel], tol: float = DEFAULT_TOL,
                          digest: dict | None = None) -> ChainReport:
    if not spec.kernel:
        raise DomainError(f"chain {spec.id} is not a kernel-operator chain")
    m = max(2, len(models))
    models = list(models)
    params = default_params(m=m)
    backend = KernelBackend(kernel_roles(models))
    return evaluate_chain(spec, params=params, backend=backend, tol=tol, digest=digest)
