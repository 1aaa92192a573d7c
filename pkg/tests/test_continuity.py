import math

import numpy as np
import pytest

from symcy.continuity import (D_hat, GridField, MAProblem, continuation_solve, ellipticity_certificate, linearize,
                              manufactured_problem, membership_U_eps, normalize_to_target, principal_symbol,
                              residual_floor)
from symcy.errors import CertificateViolation, DomainError
from symcy.ma_residual import ChamberFunction

ZERO = np.zeros((2, 2))


def simple_problem(shape=(9, 9), domain=((0.5, 1.5), (0.5, 1.5)), eps=0.1, **kw):
    return MAProblem(domain, shape, np.eye(2), [ZERO, ZERO], [1.0, 0.0], eps, **kw)


def study(shape=(17, 17), delta=0.02):
    A = np.array([[1.0, 0.2], [0.1, 1.0]])
    B = [np.array([[0.1, 0.02], [0.02, 0.05]]), np.array([[0.03, 0.0], [0.0, 0.04]])]
    f_star = ChamberFunction(
        lambda y: 0.5 * math.exp(0.5 * (y @ y)) + y[0],
        lambda y: 0.5 * math.exp(0.5 * (y @ y)) * y + np.array([1.0, 0.0]),
        lambda y: 0.5 * math.exp(0.5 * (y @ y)) * (np.eye(2) + np.outer(y, y)))
    problem, f0 = manufactured_problem(f_star, A, B, [1.0, 0.5], 0.1, delta=delta,
                                       domain=((0.2, 1.0), (0.2, 1.0)), shape=shape)
    return problem, f0, f_star


def test_difference_operators_exact_on_quadratics():
    problem = simple_problem(shape=(7, 9))
    y = problem.nodes
    vec = 1 + 2 * y[:, 0] - y[:, 1] + 0.5 * y[:, 0] ** 2 + 0.7 * y[:, 0] * y[:, 1] - 1.5 * y[:, 1] ** 2
    D1, D2, D11, D22, D12 = problem.operators
    assert np.allclose(D1 @ vec, 2 + y[:, 0] + 0.7 * y[:, 1], atol=1e-12)
    assert np.allclose(D2 @ vec, -1 + 0.7 * y[:, 0] - 3 * y[:, 1], atol=1e-12)
    assert np.allclose(D11 @ vec, 1.0, atol=1e-9)
    assert np.allclose(D22 @ vec, -3.0, atol=1e-9)
    assert np.allclose(D12 @ vec, 0.7, atol=1e-10)


def test_D_hat_hand_example():
    # A = I, B = 0, sigma = (1, 0), f = |y|^2 / 2: D_hat = det(I) * y1 and E = y1**2
    problem = simple_problem()
    f = problem.sample(lambda y: 0.5 * (y @ y))
    y1 = problem.nodes[:, 0].reshape(problem.shape)
    assert np.allclose(D_hat(problem, f).values, y1, atol=1e-10)
    cert = ellipticity_certificate(problem, f)
    assert np.allclose(cert.E, y1 ** 2, atol=1e-10)
    assert cert.ok
    E_min, ok = cert
    assert E_min == pytest.approx(0.25)


def test_constant_field():
    problem = simple_problem()
    f = problem.sample(lambda y: 3.0)
    assert np.allclose(D_hat(problem, f).values, 0.0, atol=1e-9)
    m = membership_U_eps(problem, f)
    assert not (m.integral_ok or m.dhat_ok or m.slope_ok)
    with pytest.raises(DomainError):
        normalize_to_target(problem, f)


def test_certificate_failure_reports_cells():
    # sum sigma_k f_k = y1 drops below eps = 0.6 on the left columns
    problem = simple_problem(eps=0.6)
    f = problem.sample(lambda y: 0.5 * (y @ y))
    cert = ellipticity_certificate(problem, f)
    assert not cert.ok
    assert cert.cells and all(i <= 1 for i, _ in cert.cells)
    assert cert.E_min == pytest.approx(0.25)


def test_principal_symbol_with_identity_coefficients():
    problem = simple_problem()
    f = problem.sample(lambda y: y[0] ** 2 + 0.25 * y[0] * y[1] + 2 * y[1] ** 2)
    M = principal_symbol(problem, f)
    slope = 2 * problem.nodes[:, 0] + 0.25 * problem.nodes[:, 1]
    cof = np.array([[4.0, -0.25], [-0.25, 2.0]])
    assert np.allclose(M, cof[None] * slope[:, None, None], atol=1e-8)


def test_linearization_annihilates_constants():
    problem, f0, _ = study((9, 9))
    L = linearize(problem, f0)
    assert np.max(np.abs(L @ np.ones(problem.size))) <= 1e-12 * np.max(np.abs(L.data))


def test_scaling_and_normalization():
    problem, f0, _ = study((9, 9))
    for c in (0.3, 1.7):
        assert np.allclose(D_hat(problem, f0 * c).values, c ** 3 * D_hat(problem, f0).values, rtol=1e-12)
    scaled = normalize_to_target(problem, f0 * 1.3)
    assert membership_U_eps(problem, scaled).integral_ok


def test_schedule_zero_returns_start():
    problem, f0, _ = study((9, 9))
    state = continuation_solve(problem, f0, [0.0])
    assert state.t == 0.0
    assert np.array_equal(state.f.values, f0.values)


def discrete_study(shape=(9, 9), delta=0.02):
    problem, _, f_star = study(shape)
    star = problem.sample(f_star)
    disc, f0 = manufactured_problem(star, problem.A, problem.B, problem.sigma, 0.1, delta=delta)
    return disc, f0, star


def test_unperturbed_start_converges_immediately():
    problem, f0, _ = discrete_study(delta=0.0)
    state = continuation_solve(problem, f0, [1.0])
    assert state.newton_iters <= 1


def test_discrete_solution_is_recovered_exactly():
    problem, f0, star = discrete_study()
    state = continuation_solve(problem, f0)
    assert np.max(np.abs(state.f.values - star.values)) < 1e-10


def test_large_perturbation_with_dominant_gradient_term():
    # start displaced by a tenth of the sup norm; the B terms keep the problem elliptic
    a = 5.0
    f_star = ChamberFunction(lambda y: a * (y[0] + y[1]) + 0.5 * (y @ y), lambda y: a + y, lambda y: np.eye(2))
    problem, f0 = manufactured_problem(f_star, np.eye(2), [3 * np.eye(2), 3 * np.eye(2)], [1.0, 1.0], 0.1,
                                       delta=0.1 * (2 * a + 1), domain=((0.0, 1.0), (0.0, 1.0)), shape=(17, 17))
    state = continuation_solve(problem, f0)
    exact = np.array([f_star(y) for y in problem.nodes])
    assert np.max(np.abs(state.f.ravel() - exact)) < 1e-9


def test_certificate_violation_is_reported():
    problem, f0, _ = study((17, 17), delta=0.05)
    with pytest.raises(CertificateViolation) as info:
        continuation_solve(problem, f0)
    assert info.value.cells


def test_convergence_and_newton_tail():
    errors = []
    for n in (9, 17):
        problem, f0, f_star = study((n, n))
        state = continuation_solve(problem, f0)
        exact = np.array([f_star(y) for y in problem.nodes])
        errors.append(np.max(np.abs(state.f.ravel() - exact)))
        assert state.t == 1.0
        assert 0 < state.residual_floor < 1e-8
        assert state.residual_floor == pytest.approx(residual_floor(problem, state.f))
        bound = float(np.min(problem.detA) ** 2) * problem.epsilon ** 3
        assert all(h["certificate_min"] >= bound for h in state.history)
    assert math.log2(errors[0] / errors[1]) > 1.8


def test_integral_multiplier():
    # consistent discrete data: the multiplier stays at zero
    problem, f0, star = discrete_study()
    state = continuation_solve(problem, f0, enforce_integral=True)
    assert abs(state.multiplier) < 1e-10
    assert np.max(np.abs(state.f.values - star.values)) < 1e-10
    # smooth target: the multiplier absorbs the boundary mismatch and the integral is met
    problem, f0, _ = study((9, 9))
    state = continuation_solve(problem, f0, enforce_integral=True)
    assert membership_U_eps(problem, state.f, rtol=1e-8).integral_ok


@pytest.mark.parametrize("schedule", [[0.5, 0.2], [0.0, 1.5]])
def test_bad_schedule(schedule):
    problem, f0, _ = study((9, 9))
    with pytest.raises(DomainError):
        continuation_solve(problem, f0, schedule)


@pytest.mark.parametrize("kwargs", [
    {"shape": (3, 9)},
    {"domain": ((1.0, 0.0), (0.0, 1.0))},
    {"eps": 0.0},
])
def test_problem_validation(kwargs):
    with pytest.raises(DomainError):
        simple_problem(**kwargs)


def test_singular_A_and_field_shape():
    with pytest.raises(DomainError):
        MAProblem(((0, 1), (0, 1)), (5, 5), np.zeros((2, 2)), [ZERO, ZERO], [1.0, 0.0], 0.1)
    problem = simple_problem()
    with pytest.raises(DomainError):
        D_hat(problem, GridField(np.zeros((5, 5)), (0.1, 0.1)))


def test_manufactured_rejects_inadmissible_solution():
    flat = ChamberFunction(lambda y: 0.0, lambda y: np.zeros(2), lambda y: np.zeros((2, 2)))
    with pytest.raises(DomainError):
        manufactured_problem(flat, np.eye(2), [ZERO, ZERO], [1.0, 0.0], 0.1,
                             domain=((0, 1), (0, 1)), shape=(9, 9))
