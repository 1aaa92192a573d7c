import math

import numpy as np
import pytest

from symcy.errors import DomainError
from symcy.invariants import InvariantBasis, grad_rho, hess_rho, rho1, rho2
from symcy.ma_residual import (ChamberFunction, assembled_hessian_3_2, block_determinant, block_hessian_3_5,
                               compose_with_basis, residual_3_10, residual_3_6, residual_5_14)
from symcy.d_operator import apply_D
from symcy.radial_profile import RadialProfile
from symcy.root_data import RANK_TWO_TYPES, build_rank_one, build_rank_two, weyl_group
from symcy.verify import chamber_samples

MULTS = {"a2": 2, "b2": (2, 1, 2, 1), "bc2": ((2, 1), 2, (2, 1), 2), "d2": 3, "g2": 1}

RHO1 = ChamberFunction(lambda x: float(x @ x), lambda x: 2 * x, lambda x: 2 * np.eye(len(x)))
RADIAL = ChamberFunction(lambda x: float(x @ x) + float(x @ x) ** 2, lambda x: (2 + 4 * float(x @ x)) * x,
                         lambda x: (2 + 4 * float(x @ x)) * np.eye(len(x)) + 8 * np.outer(x, x))
Y1 = ChamberFunction(lambda y: y[0], lambda y: np.array([1.0, 0.0]), lambda y: np.zeros((2, 2)))
QUAD = ChamberFunction(lambda y: y[0] ** 2 / 2 + 0.3 * y[0] * y[1] + y[1] ** 2,
                       lambda y: np.array([y[0] + 0.3 * y[1], 0.3 * y[0] + 2 * y[1]]),
                       lambda y: np.array([[1.0, 0.3], [0.3, 2.0]]))


def mixed_rho(t):
    return ChamberFunction(lambda x: rho1(x) + 0.05 * rho2(t, x),
                           lambda x: grad_rho(t, 1, x) + 0.05 * grad_rho(t, 2, x),
                           lambda x: hess_rho(t, 1, x) + 0.05 * hess_rho(t, 2, x))


@pytest.mark.parametrize("t", RANK_TWO_TYPES)
def test_f_equal_y1_reduces_to_rho1(t):
    rrs = build_rank_two(t, MULTS[t])
    basis = InvariantBasis(t)
    for x in chamber_samples(t, 10, np.random.default_rng(1)):
        a = residual_3_10(Y1, rrs, basis, x)
        b = residual_3_6(rrs, RHO1, x)
        assert a.residual == pytest.approx(b.residual, rel=1e-12)
        assert a.det_factor == pytest.approx(4.0)


def test_rank_one_quadratic_potential():
    # rho = s**2 / 2 on a rank one space with n = 2, d = 0: D = (s/tanh s)**2, det Hess = 1
    rrs = build_rank_one(2, 0)
    rho = ChamberFunction(lambda x: 0.5 * float(x @ x), lambda x: x, lambda x: np.eye(1))
    for s in (1e-6, 0.3, 2.0):
        rep = residual_3_6(rrs, rho, [s])
        xc = 1.0 if s < 1e-5 else s / math.tanh(s)
        assert rep.residual == pytest.approx(xc ** 2 - 4, rel=1e-12)
        assert rep.det_factor == 1.0


@pytest.mark.parametrize("n,d,c", [(3, 0, 1.0), (4, 1, 1.0), (8, 3, 4.0)])
def test_radial_profile_residual(n, d, c):
    # D is a product of powers, so D(f o rho_1) = f'**n D(rho_1); with det Hess = 2 (f' + 2 u f'')
    # the residual is 2**n * (f'**(n-1) * (ODE left side) / 2**(n-1)) - 2**n
    prof = RadialProfile(n, d, c, C1=1.0)
    rrs = build_rank_one(n, d, c)
    rho = ChamberFunction(lambda x: prof.f_value(x[0] ** 2),
                          lambda x: np.array([2 * x[0] * prof.f_prime(x[0] ** 2)]),
                          lambda x: np.array([[prof.radial_second_derivative(x[0])]]))
    for s in (0.1, 1.0, 5.0):
        rep = residual_3_6(rrs, rho, [s])
        lhs = prof.ode_residual(s) + 2.0 ** (n - 1)
        expected = 2.0 ** n * prof.f_prime(s * s) ** (n - 1) * lhs / 2.0 ** (n - 1)
        assert rep.residual + 2.0 ** n == pytest.approx(expected, rel=1e-9)


def test_negative_determinant_flagged():
    rrs = build_rank_two("b2", 1)
    saddle = ChamberFunction(lambda x: x[0] ** 2 - 0.1 * x[1] ** 2 + 5 * (x[0] ** 2 + x[1] ** 2) ** 2)
    rep = residual_3_6(rrs, saddle, [0.01, 0.005])
    assert rep.negative_determinant
    assert math.isfinite(rep.residual)


@pytest.mark.parametrize("t", RANK_TWO_TYPES)
def test_residual_is_weyl_invariant(t):
    rrs = build_rank_two(t, MULTS[t])
    rho = mixed_rho(t)
    for v in chamber_samples(t, 5, np.random.default_rng(2)):
        base = residual_3_6(rrs, rho, v).residual
        for B in weyl_group(rrs):
            assert residual_3_6(rrs, rho, B @ v).residual == pytest.approx(base, rel=1e-10)


@pytest.mark.parametrize("t", RANK_TWO_TYPES)
def test_block_determinant_identity(t):
    rrs = build_rank_two(t, MULTS[t])
    rho = mixed_rho(t)
    for x in chamber_samples(t, 200, np.random.default_rng(3)):
        H, blocks = block_hessian_3_5(rrs, rho, x)
        lhs = block_determinant(H, blocks) * 4.0 ** rrs.block_dimension
        rhs = np.linalg.det(rho.hess(x)) * apply_D(rrs, rho.grad, x, rho.hess)
        assert lhs == pytest.approx(rhs, rel=1e-12)
        # strictly convex and radially increasing: every transversal block is positive
        _, radial_blocks = block_hessian_3_5(rrs, RADIAL, x)
        assert all(v > 0 for v, _ in radial_blocks)


def test_rank_one_blocks_at_origin():
    rrs = build_rank_one(5, 1)
    _, blocks = block_hessian_3_5(rrs, RHO1, [1e-9])
    assert [4 * v for v, _ in blocks] == pytest.approx([2.0, 2.0], rel=1e-12)


@pytest.mark.parametrize("t", RANK_TWO_TYPES)
def test_assembled_hessian(t):
    rrs = build_rank_two(t, MULTS[t])
    rho = mixed_rho(t)
    x = chamber_samples(t, 1, np.random.default_rng(4))[0]
    M = assembled_hessian_3_2(rrs, rho, x)
    assert M.shape == (rrs.block_dimension, rrs.block_dimension)
    assert np.allclose(M, M.T)
    assert np.linalg.det(M) == pytest.approx(np.linalg.det(rho.hess(x)) * apply_D(rrs, rho.grad, x), rel=1e-10)


@pytest.mark.parametrize("t", RANK_TWO_TYPES)
def test_chamber_and_image_forms_agree(t):
    rrs = build_rank_two(t, MULTS[t])
    basis = InvariantBasis(t)
    for x in chamber_samples(t, 50, np.random.default_rng(5), inversion=True):
        a = residual_3_10(QUAD, rrs, basis, x)
        b = residual_5_14(QUAD, rrs, basis, basis.values(x))
        assert a.residual == pytest.approx(b.residual, rel=1e-10, abs=1e-10)


def test_image_form_at_known_preimage():
    rrs = build_rank_two("b2", 1)
    basis = InvariantBasis("b2")
    a = residual_5_14(QUAD, rrs, basis, [5.0, 4.0])
    b = residual_3_10(QUAD, rrs, basis, [2.0, 1.0])
    assert a.residual == pytest.approx(b.residual, rel=1e-13)
    with pytest.raises(DomainError):
        residual_5_14(QUAD, rrs, basis, [2.0, 1.0])


@pytest.mark.parametrize("t", RANK_TWO_TYPES)
def test_difference_derivatives(t):
    rrs = build_rank_two(t, MULTS[t])
    basis = InvariantBasis(t)
    values_only = ChamberFunction(QUAD.value)
    x = chamber_samples(t, 1, np.random.default_rng(6), inversion=True)[0]
    exact = residual_3_10(QUAD, rrs, basis, x)
    approx = residual_3_10(values_only, rrs, basis, x)
    assert approx.residual == pytest.approx(exact.residual, rel=1e-5, abs=1e-5)


def test_compose_with_basis_chain_rule():
    basis = InvariantBasis("g2")
    composed = compose_with_basis(QUAD, basis)
    reference = ChamberFunction(composed.value)
    x = np.array([0.7, 0.2])
    assert np.allclose(composed.grad(x), reference.grad(x), rtol=1e-8)
    assert np.allclose(composed.hess(x), reference.hess(x), rtol=1e-5)
