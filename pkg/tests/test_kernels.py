import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjsr import (
    DimensionError,
    DomainError,
    KernelModel,
    KernelSpec,
    discretize,
    kernel_hadamard_mean,
    kernel_product,
    spectral_radius_bracket,
    to_matrix,
)
from hjsr.chains import CONSISTENT, evaluate_kernel_chain, get_chain
from hjsr.kernels import catalog


def rho(km):
    return spectral_radius_bracket(to_matrix(km))


# --- specs and discretisation -----------------------------------------------

def test_exp_abs_two_point_grid():
    km = discretize(KernelSpec.exp_abs(1.0), 2)
    assert km.nodes.tolist() == [0.25, 0.75]
    assert km.samples[0, 0] == 1.0 and km.samples[1, 1] == 1.0
    assert km.samples[0, 1] == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert km.weights.tolist() == [0.5, 0.5]


def test_constant_kernel_is_scaled_ones():
    for n in (2, 5, 16):
        M = to_matrix(discretize(KernelSpec.constant(1.0), n))
        assert np.allclose(M.entries, np.full((n, n), 1.0 / n), rtol=1e-15)
        assert rho(discretize(KernelSpec.constant(1.0), n)).contains(1.0, 1e-12)


def test_gaussian_scale_zero_is_constant():
    km = discretize(KernelSpec.gaussian(0.0), 8)
    assert np.all(km.samples == 1.0)


def test_separable_radius_converges_to_integral():
    # rank-one kernel (1 + x)(1/2 + y^2): radius = int (1 + t)(1/2 + t^2) dt = 4/3
    spec = KernelSpec.separable(f=(1, 1), g=(0.5, 0, 1))
    errs = [abs(rho(discretize(spec, n)).upper - 4 / 3) for n in (16, 32, 64)]
    assert errs[-1] < 1e-4
    assert errs[0] > errs[1] > errs[2]


def test_piecewise_constant_is_seeded():
    a = KernelSpec.piecewise_constant(4, seed=7)
    b = KernelSpec.piecewise_constant(4, seed=7)
    assert np.array_equal(a.block_table(), b.block_table())
    assert np.array_equal(a.block_table(), np.random.default_rng(7).random((4, 4)))
    km = discretize(a, 8)
    # two grid points per block
    assert km.samples[0, 0] == km.samples[1, 1] == a.block_table()[0, 0]


def test_explicit_table():
    spec = KernelSpec.piecewise_constant(table=[[1, 2], [3, 4]])
    assert discretize(spec, 2).samples.tolist() == [[1, 2], [3, 4]]


def test_symmetric_kernels_give_symmetric_samples():
    for spec in (KernelSpec.exp_abs(2.0), KernelSpec.gaussian(4.0), KernelSpec.constant(3.0)):
        K = discretize(spec, 17).samples
        assert np.array_equal(K, K.T)


@pytest.mark.parametrize("make", [
    lambda: KernelSpec("bessel", {}),
    lambda: KernelSpec.constant(-1),
    lambda: KernelSpec.exp_abs(math.inf),
    lambda: KernelSpec.separable(f=(1, -2), g=(1,)),
    lambda: KernelSpec.separable(f=(), g=(1,)),
    lambda: KernelSpec.piecewise_constant(0),
    lambda: KernelSpec.piecewise_constant(table=[[1, -1], [0, 0]]),
])
def test_invalid_specs(make):
    with pytest.raises(DomainError):
        make()


def test_grid_and_model_validation():
    with pytest.raises(DomainError):
        discretize(KernelSpec.constant(), 1)
    with pytest.raises(DimensionError):
        KernelModel(np.ones((2, 2)), np.ones(3) / 3)
    with pytest.raises(DomainError):
        KernelModel(np.ones((2, 2)), np.array([0.7, 0.7]))
    km = discretize(KernelSpec.constant(), 4)
    with pytest.raises(ValueError):
        km.samples[0, 0] = 2.0


# --- algebra ------------------------------------------------------------------

def test_hadamard_mean_of_constants():
    a = discretize(KernelSpec.constant(4.0), 6)
    b = discretize(KernelSpec.constant(9.0), 6)
    assert np.all(kernel_hadamard_mean([a, b], (0.5, 0.5)).samples == 6.0)
    with pytest.raises(DomainError):
        kernel_hadamard_mean([a, b], (1.0, 1.0))
    with pytest.raises(DimensionError):
        kernel_hadamard_mean([a, discretize(KernelSpec.constant(), 8)], (0.5, 0.5))


def test_hadamard_mean_of_exponentials():
    # sqrt(e^{-|x-y|} e^{-3|x-y|}) = e^{-2|x-y|}
    a, b = discretize(KernelSpec.exp_abs(1), 8), discretize(KernelSpec.exp_abs(3), 8)
    got = kernel_hadamard_mean([a, b], (0.5, 0.5)).samples
    assert np.allclose(got, discretize(KernelSpec.exp_abs(2), 8).samples, rtol=1e-14)


def test_product_of_constants():
    J = discretize(KernelSpec.constant(1.0), 10)
    assert np.allclose(kernel_product(J, J).samples, 1.0, rtol=1e-14)
    with pytest.raises(DimensionError):
        kernel_product(J, discretize(KernelSpec.constant(1.0), 12))


def test_product_matches_matrix_product():
    specs = list(catalog().values())
    for a in specs:
        for b in specs:
            ka, kb = discretize(a, 12), discretize(b, 12)
            lhs = to_matrix(kernel_product(ka, kb)).entries
            rhs = to_matrix(ka).entries @ to_matrix(kb).entries
            assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 8), st.floats(0, 8), st.integers(2, 24))
def test_kernel_half_mean_bounded_by_product(s, t, n):
    a, b = discretize(KernelSpec.exp_abs(s), n), discretize(KernelSpec.gaussian(t), n)
    lhs = rho(kernel_hadamard_mean([a, b], (0.5, 0.5))).lower
    rhs = rho(kernel_product(a, b)).upper ** 0.5
    assert lhs <= rhs * (1 + 1e-9)


# --- chains on kernels ----------------------------------------------------------

def test_c7_constant_equality():
    for n in (16, 32, 64):
        J = discretize(KernelSpec.constant(1.0), n)
        rep = evaluate_kernel_chain(get_chain("C7"), [J])
        left, right = rep.terms
        assert left.lower == pytest.approx(1.0, rel=1e-9)
        assert right.upper == pytest.approx(1.0, rel=1e-9)
        assert rep.verdict == CONSISTENT


def test_c7_exp_and_gaussian():
    for n in (16, 32, 64):
        models = [discretize(KernelSpec.exp_abs(1.0), n), discretize(KernelSpec.gaussian(4.0), n)]
        assert evaluate_kernel_chain(get_chain("C7"), models).verdict == CONSISTENT


def test_piecewise_seed7_c9_c10():
    pc = KernelSpec.piecewise_constant(4, seed=7)
    other = KernelSpec.exp_abs(1.0)
    for n in (16, 32, 64):
        models = [discretize(pc, n), discretize(other, n)]
        for cid in ("C9", "C10"):
            assert evaluate_kernel_chain(get_chain(cid), models).verdict == CONSISTENT


def test_non_kernel_chain_rejected():
    with pytest.raises(DomainError):
        evaluate_kernel_chain(get_chain("C13"), [discretize(KernelSpec.constant(), 4)])
