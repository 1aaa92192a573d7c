import math

import numpy as np
import pytest

from symcy.d_operator import (D_rho1_rank_one, D_rho1_rank_two, D_rho1_wall_limit, D_rho2_rank_two,
                              WallRegularization, apply_D, D_factors)
from symcy.errors import DomainError, WallSingularityError
from symcy.invariants import grad_rho, hess_rho
from symcy.root_data import build_rank_one, build_rank_two, chamber_width

MULTS = {"a2": (1, 2, 3), "b2": (2, 1, 3, 1), "bc2": ((2, 1), 2, (3, 2), 2), "d2": (2, 3), "g2": (1, 2, 1, 2, 1, 2)}


def systems():
    return [build_rank_two(t, m) for t, m in MULTS.items()]


def direct_D(rrs, grad, x):
    """Product over roots of (X / tanh(lambda))**m, doubled roots with 2 X / tanh(2 lambda)."""
    value = 1.0
    for root in rrs.roots:
        lam = root(x)
        X = float(root.vector @ grad)
        value *= (X / math.tanh(lam)) ** root.multiplicity
        value *= (2 * X / math.tanh(2 * lam)) ** root.double_multiplicity
    return value


def interior_point(rrs, frac=0.37, r=1.4):
    th = frac * chamber_width(rrs.type_tag)
    return np.array([r * math.cos(th), r * math.sin(th)])


def test_xcoth_series_and_direct_agree_at_threshold():
    reg = WallRegularization()
    for x in (0.99e-4, 1.01e-4, 1e-3, 0.1):
        assert reg.xcoth_series(x) == pytest.approx(x / math.tanh(x), rel=1e-15)
    assert reg.xcoth(0.0) == 1.0
    assert np.allclose(reg.xcoth(np.array([-0.5, 0.5])), 0.5 / math.tanh(0.5), rtol=1e-15)


@pytest.mark.parametrize("kwargs", [{"taylor_threshold": 0.0}, {"taylor_threshold": 0.5}, {"series_order": 3},
                                    {"series_order": 14}])
def test_regularization_validation(kwargs):
    with pytest.raises(DomainError):
        WallRegularization(**kwargs)


@pytest.mark.parametrize("n,d,c", [(2, 0, 1.0), (5, 1, 2.0), (8, 3, 0.5), (16, 7, 1.0)])
@pytest.mark.parametrize("s", [1e-3, 0.3, 2.0, 9.0])
def test_rank_one_closed_form(n, d, c, s):
    a = math.sqrt(c) * s
    expected = (2 * a / math.tanh(a)) ** (n - d) * (4 * a / math.tanh(2 * a)) ** d
    assert float(D_rho1_rank_one(n, d, c, s)) == pytest.approx(expected, rel=1e-13)
    # the product operator applied to s**2 gives the same numbers
    rrs = build_rank_one(n, d, c)
    assert apply_D(rrs, lambda z: 2 * z, np.array([s])) == pytest.approx(expected, rel=1e-12)


def test_rank_one_geometric_convention():
    s = 0.7
    assert float(D_rho1_rank_one(6, 1, 1.0, s, convention="geometric")) == pytest.approx(
        float(D_rho1_rank_one(6, 1, 1.0, s)) / (2 * s / math.tanh(s)), rel=1e-14)


@pytest.mark.parametrize("rrs", systems(), ids=lambda r: r.type_tag)
def test_D_rho1_matches_product(rrs):
    x = interior_point(rrs)
    assert D_rho1_rank_two(rrs, x) == pytest.approx(direct_D(rrs, 2 * x, x), rel=1e-13)
    assert apply_D(rrs, lambda z: 2 * z, x) == pytest.approx(direct_D(rrs, 2 * x, x), rel=1e-13)


@pytest.mark.parametrize("rrs", systems(), ids=lambda r: r.type_tag)
def test_D_rho2_matches_product(rrs):
    x = interior_point(rrs)
    t = rrs.type_tag
    assert D_rho2_rank_two(rrs, x) == pytest.approx(direct_D(rrs, grad_rho(t, 2, x), x), rel=1e-12)


@pytest.mark.parametrize("rrs", systems(), ids=lambda r: r.type_tag)
def test_D_rho2_extends_across_walls(rrs):
    t = rrs.type_tag
    width = chamber_width(t)
    inward = np.array([math.cos(width / 2), math.sin(width / 2)])
    for a in (np.array([1.2, 0.0]), 1.2 * np.array([math.cos(width), math.sin(width)])):
        on_wall = D_rho2_rank_two(rrs, a)
        near = [D_rho2_rank_two(rrs, a + eps * inward) for eps in (1e-3, 1e-4, 1e-5)]
        assert math.isfinite(on_wall)
        # first-order approach to the wall value
        errs = [abs(v - on_wall) for v in near]
        assert errs[2] < 0.2 * errs[1] < 0.04 * errs[0] + 1e-9 * abs(on_wall)


def test_D_rho2_b2_wall_value():
    # on the wall x1 = x2 the factor X/tanh(lambda) of that line tends to c^T Hess(rho_2) c,
    # which is (2 - 8 + 2) / 2 = -2 at (1, 1)
    rrs = build_rank_two("b2", (1, 1, 1, 1))
    x = np.array([1.0, 1.0])
    g = grad_rho("b2", 2, x)
    expected = -2.0
    for j, root in enumerate(rrs.roots):
        if j != 1:
            expected *= float(root.vector @ g) / math.tanh(root(x))
    assert D_rho2_rank_two(rrs, x) == pytest.approx(expected, rel=1e-12)


def test_nonvanishing_derivative_on_wall_raises():
    rrs = build_rank_two("a2", 1)
    with pytest.raises(WallSingularityError) as info:
        apply_D(rrs, lambda z: np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    assert info.value.root_index == 0


@pytest.mark.parametrize("rrs", systems(), ids=lambda r: r.type_tag)
def test_wall_limit_formula(rrs):
    width = chamber_width(rrs.type_tag)
    a = 0.9 * np.array([math.cos(width), math.sin(width)])
    S = [i for i, root in enumerate(rrs.roots) if abs(root(a)) < 1e-12]
    assert len(S) == 1
    expected = 1.0
    for i, root in enumerate(rrs.roots):
        m, m2 = root.multiplicity, root.double_multiplicity
        if i in S:
            expected *= 2.0 ** (m + m2)
        else:
            lam = root(a)
            expected *= (2 * lam / math.tanh(lam)) ** m * (4 * lam / math.tanh(2 * lam)) ** m2
    assert D_rho1_wall_limit(rrs, S, a) == pytest.approx(expected, rel=1e-14)
    assert D_rho1_rank_two(rrs, a) == pytest.approx(expected, rel=1e-14)
    assert D_rho1_wall_limit(rrs, range(len(rrs.roots)), np.zeros(2)) == 2.0 ** rrs.total_multiplicity


def test_wall_limit_rejects_inconsistent_S():
    rrs = build_rank_two("a2", 1)
    with pytest.raises(DomainError):
        D_rho1_wall_limit(rrs, [1], np.array([1.0, 0.0]))


def test_factors_without_hessian_use_differences():
    rrs = build_rank_two("g2", 1)
    a = np.array([1.1, 0.0])
    with_h = D_factors(rrs, lambda z: grad_rho("g2", 2, z), a, lambda z: hess_rho("g2", 2, z))
    without = D_factors(rrs, lambda z: grad_rho("g2", 2, z), a)
    for (v1, m1), (v2, m2) in zip(with_h, without):
        assert m1 == m2
        assert v2 == pytest.approx(v1, rel=1e-8)
