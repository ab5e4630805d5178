"""Midpoint-rule discretisation of positive kernel operators on L2([0, 1]).

A kernel ``a(x, y)`` is sampled at the midpoints ``x_i = (i + 1/2) / n``.
The operator ``f -> int a(., y) f(y) dy`` becomes the matrix
``M = K diag(w)`` with ``w_j = 1/n``, so operator composition is matrix
multiplication and the Hadamard calculus acts on the samples ``K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DimensionError, DomainError
from .matrix import NonNegMatrix, WeightVector, as_weights, geometric_mean_stack

KINDS = ("constant", "exp_abs", "gaussian", "separable", "piecewise_constant")


@dataclass(frozen=True)
class KernelSpec:
    """One kernel from the closed catalog.

    Parameters by kind:

    ``constant``            ``value`` (>= 0)
    ``exp_abs``             ``scale``: ``exp(-scale |x - y|)``
    ``gaussian``            ``scale``: ``exp(-scale (x - y)^2)``
    ``separable``           ``f``, ``g``: ascending polynomial coefficients,
                            kernel ``f(x) g(y)``
    ``piecewise_constant``  ``blocks`` and ``seed`` (uniform [0, 1) block
                            values), or an explicit ``table``
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        p = dict(self.params)
        if self.kind == "constant":
            v = float(p.get("value", 1.0))
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"constant kernel needs a finite value >= 0, got {v!r}")
            p = {"value": v}
        elif self.kind in ("exp_abs", "gaussian"):
            s = float(p.get("scale", 1.0))
            if not (math.isfinite(s) and s >= 0):
                raise DomainError(f"{self.kind} kernel needs a finite scale >= 0, got {s!r}")
            p = {"scale": s}
        elif self.kind == "separable":
            f = tuple(float(c) for c in p.get("f", (1.0,)))
            g = tuple(float(c) for c in p.get("g", (1.0,)))
            if not f or not g or not all(math.isfinite(c) for c in f + g):
                raise DomainError("separable kernel needs finite, non-empty coefficient lists")
            # a polynomial that is negative somewhere on [0, 1] is rejected up front
            xs = np.linspace(0.0, 1.0, 1025)
            for name, c in (("f", f), ("g", g)):
                if npoly.polyval(xs, c).min() < 0:
                    raise DomainError(f"separable kernel: {name} is negative on [0, 1]")
            p = {"f": f, "g": g}
        else:
            if "table" in p:
                t = np.array(p["table"], dtype=float)
                if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 1:
                    raise DomainError("piecewise_constant table must be a non-empty square array")
                if not np.all(np.isfinite(t)) or np.any(t < 0):
                    raise DomainError("piecewise_constant table must be finite and >= 0")
                p = {"table": tuple(tuple(r) for r in t.tolist())}
            else:
                k = int(p.get("blocks", 4))
                if k < 1:
                    raise DomainError("piecewise_constant needs blocks >= 1")
                p = {"blocks": k, "seed": int(p.get("seed", 0))}
        object.__setattr__(self, "params", p)

    # catalog constructors
    @classmethod
    def constant(cls, value: float = 1.0):
        return cls("constant", {"value": value})

    @classmethod
    def exp_abs(cls, scale: float = 1.0):
        return cls("exp_abs", {"scale": scale})

    @classmethod
    def gaussian(cls, scale: float = 1.0):
        return cls("gaussian", {"scale": scale})

    @classmethod
    def separable(cls, f=(1.0,), g=(1.0,)):
        return cls("separable", {"f": tuple(f), "g": tuple(g)})

    @classmethod
    def piecewise_constant(cls, blocks: int = 4, seed: int = 0, table=None):
        if table is not None:
            return cls("piecewise_constant", {"table": table})
        return cls("piecewise_constant", {"blocks": blocks, "seed": seed})

    def block_table(self) -> np.ndarray:
        if self.kind != "piecewise_constant":
            raise DomainError("block_table is only defined for piecewise_constant kernels")
        if "table" in self.params:
            return np.array(self.params["table"], dtype=float)
        k = self.params["blocks"]
        return np.random.default_rng(self.params["seed"]).random((k, k))

    def __call__(self, x, y):
        """Evaluate the kernel on broadcast arrays ``x``, ``y`` in [0, 1]."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        p = self.params
        if self.kind == "constant":
            return np.full(x.shape, p["value"])
        if self.kind == "exp_abs":
            return np.exp(-p["scale"] * np.abs(x - y))
        if self.kind == "gaussian":
            return np.exp(-p["scale"] * (x - y) ** 2)
        if self.kind == "separable":
            return npoly.polyval(x, p["f"]) * npoly.polyval(y, p["g"])
        t = self.block_table()
        k = t.shape[0]
        i = np.minimum((x * k).astype(int), k - 1)
        j = np.minimum((y * k).astype(int), k - 1)
        return t[i, j]

    def to_payload(self) -> dict:
        out = {"kind": self.kind}
        for key, val in self.params.items():
            if isinstance(val, tuple):
                val = [list(r) if isinstance(r, tuple) else r for r in val]
            out[key] = val
        return out


@dataclass(frozen=True, eq=False)
class KernelModel:
    """Kernel samples on the midpoint grid together with quadrature weights."""

    samples: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        K = np.array(self.samples, dtype=float, copy=True)
        w = np.array(self.weights, dtype=float, copy=True)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or w.shape != (K.shape[0],):
            raise DimensionError(f"samples {K.shape} and weights {w.shape} do not match")
        if not np.all(np.isfinite(K)) or np.any(K < 0):
            raise DomainError("kernel samples must be finite and non-negative")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("quadrature weights must be positive and sum to 1")
        K.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "samples", K)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n


def discretize(spec: KernelSpec, n: int) -> KernelModel:
    if n < 2:
        raise DomainError(f"grid size must be at least 2, got {n}")
    x = (np.arange(n) + 0.5) / n
    K = spec(x[:, None], x[None, :])
    if np.any(K < 0) or not np.all(np.isfinite(K)):
        raise DomainError(f"{spec.kind} kernel produced negative or non-finite samples")
    return KernelModel(K, np.full(n, 1.0 / n))


def to_matrix(km: KernelModel) -> NonNegMatrix:
    """``M[i, j] = samples[i, j] * weights[j]``."""
    return NonNegMatrix._trusted(km.samples * km.weights[None, :])


def _same_grid(models: Sequence[KernelModel]):
    if len({m.n for m in models}) != 1 or any(
        not np.array_equal(m.weights, models[0].weights) for m in models
    ):
        raise DimensionError("kernel models live on different grids")


def kernel_hadamard_mean(models: Sequence[KernelModel], w) -> KernelModel:
    """Pointwise weighted geometric mean of kernel samples (strict weights only)."""
    models = list(models)
    if not models:
        raise DimensionError("Hadamard mean of an empty list of kernels")
    _same_grid(models)
    w = as_weights(w, len(models))
    if w.mode != "strict":
        raise DomainError("kernel Hadamard means need weights summing to 1")
    K = geometric_mean_stack([m.samples for m in models], w.weights)
    return KernelModel(K, models[0].weights)


def kernel_product(a: KernelModel, b: KernelModel) -> KernelModel:
    """Composition ``AB``: kernel ``int a(x, z) b(z, y) dz`` by the same rule."""
    _same_grid([a, b])
    K = (a.samples * a.weights[None, :]) @ b.samples
    return KernelModel(K, a.weights)


def catalog(seed: int = 7) -> dict:
    """One default-parameter kernel of each catalog kind."""
    return {
        "constant": KernelSpec.constant(1.0),
        "exp_abs": KernelSpec.exp_abs(1.0),
        "gaussian": KernelSpec.gaussian(4.0),
        "separable": KernelSpec.separable(f=(1.0, 1.0), g=(0.5, 0.0, 1.0)),
        "piecewise_constant": KernelSpec.piecewise_constant(blocks=4, seed=seed),
    }
