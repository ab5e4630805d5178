"""Dense non-negative matrix algebra and certified spectral-radius brackets.

Every public function accepts either a :class:`NonNegMatrix` or anything
``numpy.asarray`` understands, validates it, and returns a new
:class:`NonNegMatrix`.  The batched helpers (names ending in ``_stack``) work
on raw ``(N, n, n)`` float arrays and skip validation; the set-level
enumeration engine is built on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError

WEIGHT_TOL = 1e-12

# Truncation levels for the Collatz-Wielandt lower certificate.  Zeroing the
# small components of a non-negative vector keeps the certificate valid and
# recovers tight lower bounds for reducible matrices.
_TRUNCATIONS = (0.0, 1e-14, 1e-10, 1e-6, 1e-3, 1e-1)
_EPS_RESTARTS = (1e-8, 1e-10, 1e-12)


class NonNegMatrix:
    """Square matrix with finite, entrywise non-negative real entries.

    Instances are immutable: the underlying array is a private read-only copy.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            i, j = np.argwhere(~np.isfinite(a))[0]
            raise DomainError(f"entry ({i}, {j}) is not finite: {a[i, j]!r}")
        if np.any(a < 0):
            i, j = np.argwhere(a < 0)[0]
            raise DomainError(f"entry ({i}, {j}) is negative: {a[i, j]!r}")
        a += 0.0  # normalise -0.0
        a.setflags(write=False)
        self._a = a

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "NonNegMatrix":
        obj = cls.__new__(cls)
        a = np.array(a, dtype=float, copy=True)
        a.setflags(write=False)
        obj._a = a
        return obj

    @classmethod
    def identity(cls, n: int) -> "NonNegMatrix":
        return cls._trusted(np.eye(n))

    @classmethod
    def ones(cls, n: int) -> "NonNegMatrix":
        return cls._trusted(np.ones((n, n)))

    @classmethod
    def zeros(cls, n: int) -> "NonNegMatrix":
        return cls._trusted(np.zeros((n, n)))

    @property
    def entries(self) -> np.ndarray:
        return self._a

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    def tolist(self):
        return self._a.tolist()

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._a
        return self._a.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, NonNegMatrix):
            return NotImplemented
        return self._a.shape == other._a.shape and bool(np.array_equal(self._a, other._a))

    def __hash__(self):
        return hash((self._a.shape, self._a.tobytes()))

    def __repr__(self):
        return f"NonNegMatrix({self._a.tolist()!r})"


def as_matrix(A) -> NonNegMatrix:
    return A if isinstance(A, NonNegMatrix) else NonNegMatrix(A)


def _same_dim(*mats: NonNegMatrix) -> int:
    dims = {m.dim for m in mats}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True)
class WeightVector:
    """Positive weights for a Hadamard weighted geometric mean.

    ``mode="strict"`` requires the weights to sum to one.  ``mode="relaxed"``
    only requires a sum of at least one; it is valid for non-negative matrices
    but not for general kernel operators, so kernel code rejects it.
    """

    weights: tuple
    mode: str = "strict"

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise DomainError("weight vector is empty")
        if any(not math.isfinite(x) or x <= 0 for x in w):
            raise DomainError(f"weights must be positive and finite, got {w}")
        total = math.fsum(w)
        if self.mode == "strict":
            if abs(total - 1.0) > WEIGHT_TOL:
                raise DomainError(f"strict weights must sum to 1, got {total!r}")
        elif self.mode == "relaxed":
            if total < 1.0 - WEIGHT_TOL:
                raise DomainError(f"relaxed weights must sum to at least 1, got {total!r}")
        else:
            raise DomainError(f"unknown weight mode {self.mode!r}")

    @classmethod
    def uniform(cls, m: int) -> "WeightVector":
        return cls((1.0 / m,) * m)

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)


def as_weights(w, m: int | None = None) -> WeightVector:
    if not isinstance(w, WeightVector):
        w = WeightVector(tuple(w))
    if m is not None and len(w) != m:
        raise DimensionError(f"expected {m} weights, got {len(w)}")
    return w


@dataclass(frozen=True)
class RadiusBracket:
    """Certified enclosure ``lower <= radius <= upper``.

    ``lower_word`` / ``upper_word`` record which product (as a tuple of member
    indices) attained each endpoint when the bracket comes from a set
    enumeration.  ``truncated`` is set when the product budget stopped the
    enumeration before ``max_depth``; the endpoints are still certified.
    """

    lower: float
    upper: float
    lower_depth: int = 1
    upper_depth: int = 1
    method: str = ""
    converged: bool = True
    truncated: bool = False
    products: int = 0
    delta: float | None = None
    lower_word: tuple = ()
    upper_word: tuple = ()
    notes: tuple = field(default=())

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if math.isnan(lo) or math.isnan(hi) or lo < 0:
            raise ValueError(f"invalid bracket [{lo}, {hi}]")
        if lo > hi + 1e-10 * max(1.0, hi):
            raise ValueError(f"contradictory bracket [{lo!r}, {hi!r}]")

    @property
    def width(self) -> float:
        return max(self.upper - self.lower, 0.0)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, value: float, margin: float = 0.0) -> bool:
        return self.lower - margin <= value <= self.upper + margin

    def scaled(self, c: float) -> "RadiusBracket":
        return replace(self, lower=self.lower * c, upper=self.upper * c)

    def as_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_depth": self.lower_depth,
            "upper_depth": self.upper_depth,
            "method": self.method,
            "converged": self.converged,
            "truncated": self.truncated,
            "products": self.products,
            "delta": self.delta,
            "lower_word": list(self.lower_word),
            "upper_word": list(self.upper_word),
        }


# ---------------------------------------------------------------------------
# Hadamard algebra
# ---------------------------------------------------------------------------

def _power(a: np.ndarray, alpha: float) -> np.ndarray:
    if alpha == 1.0:
        return a
    if alpha == 0.5:
        return np.sqrt(a)
    return np.power(a, alpha)


def hadamard_product(A, B) -> NonNegMatrix:
    A, B = as_matrix(A), as_matrix(B)
    _same_dim(A, B)
    return NonNegMatrix._trusted(A.entries * B.entries)


def hadamard_power(A, alpha: float) -> NonNegMatrix:
    """Entrywise power ``A^(alpha)``; zero entries stay zero."""
    A = as_matrix(A)
    alpha = float(alpha)
    if not alpha > 0 or not math.isfinite(alpha):
        raise DomainError(f"Hadamard exponent must be positive, got {alpha!r}")
    return NonNegMatrix._trusted(_power(A.entries, alpha))


def geometric_mean_stack(stacks: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """Entrywise ``prod_k stacks[k] ** weights[k]`` on aligned arrays.

    With equal weights the factors are multiplied first (mantissas and binary
    exponents separately, so nothing under- or overflows) and a single power
    is taken; ``sqrt(2 * 2)`` is exact where ``sqrt(2) * sqrt(2)`` is not.
    """
    if len(stacks) > 1 and len(set(weights)) == 1:
        w = float(weights[0])
        mant = np.ones_like(np.asarray(stacks[0], dtype=float))
        expo = np.zeros(mant.shape, dtype=np.int64)
        for s in stacks:
            m, e = np.frexp(np.asarray(s, dtype=float))
            mant = mant * m
            expo += e
            m, e = np.frexp(mant)
            mant = m
            expo += e
        q = round(1.0 / w)
        if q >= 1 and abs(q * w - 1.0) < 1e-15:
            # w = 1/q: move expo mod q into the mantissa so 2**(expo/q) is exact
            r = expo % q
            out = _power(np.ldexp(mant, r), w)
            return np.ldexp(out, (expo - r) // q)
        ew = expo * w
        whole = np.floor(ew)
        out = _power(mant, w) * np.exp2(ew - whole)
        return np.ldexp(out, whole.astype(np.int64))
    out = _power(np.asarray(stacks[0], dtype=float), weights[0]).copy()
    for s, a in zip(stacks[1:], weights[1:]):
        out *= _power(np.asarray(s, dtype=float), a)
    return out


def hadamard_geometric_mean(mats, w) -> NonNegMatrix:
    mats = [as_matrix(M) for M in mats]
    if not mats:
        raise DimensionError("Hadamard mean of an empty list")
    _same_dim(*mats)
    w = as_weights(w, len(mats))
    return NonNegMatrix._trusted(geometric_mean_stack([M.entries for M in mats], w.weights))


def mat_product(A, B) -> NonNegMatrix:
    A, B = as_matrix(A), as_matrix(B)
    _same_dim(A, B)
    return NonNegMatrix._trusted(A.entries @ B.entries)


def row_sum_norm(A) -> float:
    """Operator norm induced by the sup-norm (max row sum)."""
    return float(as_matrix(A).entries.sum(axis=1).max())


def column_sum_norm(A) -> float:
    """Operator norm induced by the 1-norm (max column sum)."""
    return float(as_matrix(A).entries.sum(axis=0).max())


def operator_norm(A) -> float:
    """``min(max row sum, max column sum)``; always an upper bound for rho(A).

    The minimum of two norms is not itself submultiplicative, so set-level
    upper bounds take the minimum only after maximising over products (see
    :func:`hjsr.sets.jsr_upper`).
    """
    A = as_matrix(A)
    return min(row_sum_norm(A), column_sum_norm(A))


def weighted_norms_stack(P: np.ndarray, right: np.ndarray, left: np.ndarray) -> np.ndarray:
    """Induced norms of every matrix in ``P`` for a family of weight vectors.

    ``right[:, k] > 0`` gives the weighted sup-norm ``max_i (P v)_i / v_i``;
    ``left[:, k] > 0`` gives the weighted 1-norm ``max_j (u^T P)_j / u_j``.
    Returns an ``(N, K_right + K_left)`` array.
    """
    r = (P @ right) / right[None, :, :]
    l = np.einsum("nij,ik->njk", P, left) / left[None, :, :]
    return np.concatenate([r.max(axis=1), l.max(axis=1)], axis=1)


# ---------------------------------------------------------------------------
# Spectral radius
# ---------------------------------------------------------------------------

def _cw_bounds(P: np.ndarray, x: np.ndarray):
    """Collatz-Wielandt bounds for each ``P[k]`` from the non-negative ``x[k]``."""
    N, n = x.shape
    Px = (P @ x[:, :, None])[:, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(x > 0, Px / x, np.inf)
    hi = ratio.max(axis=1)

    xmax = x.max(axis=1, keepdims=True)
    lo = np.zeros(N)
    for tau in _TRUNCATIONS:
        xs = np.where(x > tau * xmax, x, 0.0) if tau else x
        Pxs = (P @ xs[:, :, None])[:, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(xs > 0, Pxs / xs, np.inf)
        cand = r.min(axis=1)
        cand[~np.isfinite(cand)] = 0.0
        lo = np.maximum(lo, cand)
    return lo, hi


def _squaring_pass(P: np.ndarray, tol_rel: float, n_squarings: int):
    """Shifted power iteration by repeated squaring, with running CW bounds.

    Works on ``P + s I`` with ``s`` half the mean row sum: the shift breaks
    periodicity and keeps every iterate strictly positive, while the
    certificates are always evaluated against ``P`` itself.  Each matrix is
    frozen once its iterate reaches a fixed point, so a result never depends
    on which other matrices share the batch.
    """
    N, n, _ = P.shape
    scale = P.max(axis=(1, 2))
    lo = np.zeros(N)
    hi = P.sum(axis=2).max(axis=1)
    x = np.ones((N, n))
    conv = np.zeros(N, dtype=bool)
    live = scale > 0
    hi[~live] = 0.0
    conv[~live] = True
    if not live.any():
        return lo, hi, x, conv

    s = 0.5 * P.sum(axis=2).mean(axis=1)
    s[~live] = 1.0
    B = P + s[:, None, None] * np.eye(n)[None]
    B /= B.max(axis=(1, 2))[:, None, None]
    lo0, _ = _cw_bounds(P, x)
    lo = np.maximum(lo, lo0)

    active = np.flatnonzero(live)
    tiny = 1e-15 * scale
    for _ in range(n_squarings):
        if active.size == 0:
            break
        Ba = B[active]
        Ba = Ba @ Ba
        Ba /= Ba.max(axis=(1, 2))[:, None, None]
        B[active] = Ba
        xa = Ba.sum(axis=2)
        xa /= xa.max(axis=1, keepdims=True)
        l, h = _cw_bounds(P[active], xa)
        lo[active] = np.maximum(lo[active], l)
        hi[active] = np.minimum(hi[active], h)
        change = np.abs(xa - x[active]).max(axis=1)
        x[active] = xa
        c = (hi[active] - lo[active] <= tol_rel * hi[active]) | (hi[active] <= tiny[active])
        conv[active] = c
        active = active[change > 8 * np.finfo(float).eps]
    return lo, hi, x, conv


def _nilpotent(P: np.ndarray) -> np.ndarray:
    """Exact nilpotency test from the zero pattern (valid for non-negative P)."""
    N, n, _ = P.shape
    pat = (P > 0).astype(float)
    acc = pat.copy()
    for _ in range(n - 1):
        acc = np.minimum(acc @ pat, 1.0)
    return ~acc.any(axis=(1, 2))


def collatz_wielandt_stack(P: np.ndarray, tol_rel: float = 1e-10, max_iter: int = 100_000):
    """Certified brackets ``lo <= rho(P[k]) <= hi`` for a stack of matrices.

    ``max_iter`` caps the number of squaring rounds; round ``j`` corresponds
    to ``2**j`` steps of plain power iteration, and a matrix leaves the loop
    as soon as its iterate stops changing.  A zero pattern with a nilpotent
    power gives the exact bracket ``[0, 0]``.

    Returns ``(lo, hi, vectors, converged)``.  Matrices whose bracket does not
    close are retried on ``P + eps * max(P) * J`` for decreasing ``eps``; such
    a perturbation dominates ``P`` entrywise, so its upper bound remains an
    upper bound for ``rho(P)``, and its iterate is reused as a lower
    certificate against ``P``.
    """
    if tol_rel <= 0:
        raise DomainError("tol_rel must be positive")
    P = np.asarray(P, dtype=float)
    n_sq = max(1, int(max_iter))
    lo, hi, x, conv = _squaring_pass(P, tol_rel, n_sq)
    nil = _nilpotent(P)
    lo[nil] = 0.0
    hi[nil] = 0.0
    conv[nil] = True
    todo = np.flatnonzero(~conv)
    if todo.size:
        n = P.shape[1]
        Q = P[todo]
        scale = Q.max(axis=(1, 2))
        for eps in _EPS_RESTARTS:
            Qe = Q + (eps * scale)[:, None, None] * np.ones((1, n, n))
            _, he, xe, _ = _squaring_pass(Qe, tol_rel, n_sq)
            le, _ = _cw_bounds(Q, xe)
            lo[todo] = np.maximum(lo[todo], le)
            hi[todo] = np.minimum(hi[todo], he)
        conv[todo] = (hi[todo] - lo[todo] <= tol_rel * hi[todo]) | (hi[todo] <= 1e-15 * scale)
    return lo, hi, x, conv


def spectral_radius_bracket(A, tol_rel: float = 1e-10, max_iter: int = 100_000) -> RadiusBracket:
    """Collatz-Wielandt enclosure of the spectral radius of ``A``.

    If the bracket does not close to ``tol_rel`` the widest certified bracket
    is returned with ``converged=False``.
    """
    A = as_matrix(A)
    lo, hi, _, conv = collatz_wielandt_stack(A.entries[None], tol_rel, max_iter)
    return RadiusBracket(
        float(lo[0]), float(hi[0]), method="collatz-wielandt", converged=bool(conv[0])
    )


def perron_vector(A, tol_rel: float = 1e-10) -> np.ndarray:
    """Strictly positive approximate Perron vector (max-normalised).

    If the iterate for ``A`` itself has zero entries, ``A + 1e-10 max(A) J``
    is used instead.  The result is a weight for induced norms, not a
    certificate by itself.
    """
    a = np.asarray(A, dtype=float)
    n = a.shape[0]
    scale = a.max()
    if scale <= 0:
        return np.ones(n)
    _, _, x, _ = _squaring_pass(a[None], tol_rel, 60)
    v = x[0]
    if not np.all(v > 1e-150):
        q = a + 1e-10 * scale * np.ones((n, n))
        _, _, x, _ = _squaring_pass(q[None], tol_rel, 60)
        v = np.where(x[0] > 0, x[0], 1e-300)
    return v / v.max()


def _quadratic_roots(b: float, c: float):
    """Roots of ``z^2 + b z + c``."""
    disc = b * b - 4 * c
    if disc >= 0:
        r = math.sqrt(disc)
        # avoid cancellation
        q = -0.5 * (b + math.copysign(r, b)) if b != 0 else 0.5 * r
        if q == 0:
            return [0.0, 0.0]
        return [q, c / q]
    r = math.sqrt(-disc)
    return [complex(-b / 2, r / 2), complex(-b / 2, -r / 2)]


def _polish(t: float, m: float, d: float, z: float) -> float:
    for _ in range(3):
        p = ((z - t) * z + m) * z - d
        dp = (3 * z - 2 * t) * z + m
        if dp == 0:
            break
        step = p / dp
        z_new = z - step
        if not math.isfinite(z_new) or abs(step) > 1e-6 * max(abs(z), 1e-300):
            break
        z = z_new
    return z


def spectral_radius_exact_small(A) -> float:
    """Spectral radius of a matrix of dimension at most 3 by closed-form roots.

    Intended as an oracle independent of the iterative bracket.
    """
    a = np.asarray(A.entries if isinstance(A, NonNegMatrix) else A, dtype=float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if n > 3:
        raise DomainError(f"closed-form oracle supports dim <= 3, got {n}")
    if n == 1:
        return abs(float(a[0, 0]))
    if n == 2:
        p, q, r, s = (float(v) for v in a.ravel())
        half = 0.5 * (p - s)
        disc = half * half + q * r
        mid = 0.5 * (p + s)
        if disc >= 0:
            root = math.sqrt(disc)
            return max(abs(mid + root), abs(mid - root))
        return math.sqrt(mid * mid - disc)

    t = float(np.trace(a))
    m = float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
              + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
              + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
    d = float(
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )
    # depressed cubic y^3 + p y + q = 0 with z = y + t/3
    p = m - t * t / 3.0
    q = -2.0 * t ** 3 / 27.0 + t * m / 3.0 - d
    shift = t / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:
        sq = math.sqrt(disc)
        u = np.cbrt(-q / 2.0 + sq)
        v = np.cbrt(-q / 2.0 - sq)
        z1 = _polish(t, m, d, float(u + v + shift))
        # remaining pair from z^2 + (z1 - t) z + d / z1 (Vieta)
        if z1 != 0:
            others = _quadratic_roots(z1 - t, d / z1)
        else:
            others = _quadratic_roots(-t, m)
        return max([abs(z1)] + [abs(z) for z in others])
    if p == 0:
        z = _polish(t, m, d, shift)
        return abs(z)
    r = math.sqrt(-p / 3.0)
    arg = (3.0 * q) / (2.0 * p) * math.sqrt(-3.0 / p)
    theta = math.acos(max(-1.0, min(1.0, arg)))
    roots = [2 * r * math.cos(theta / 3.0 - 2 * math.pi * k / 3.0) + shift for k in range(3)]
    return max(abs(_polish(t, m, d, z)) for z in roots)
