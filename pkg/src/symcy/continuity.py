"""Continuation solver for det(A Hf A^T + sum_k f_k B_k) * sum_k sigma_k f_k = target.

The unknown lives on a uniform N1 x N2 grid over a rectangle.  Derivatives
are second-order finite differences: central in the interior and one-sided
second-order on the boundary rows, assembled as Kronecker products so that
the Jacobian of the discrete operator is exact.

The continuation path joins a start field f0 (t = 0) to the target (t = 1):

    Dhat(f) = (1 - t) Dhat(f0) + t * target

and each t-step is solved by damped Newton with the boundary values of f
held at those of f0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CertificateViolation, DomainError, NewtonDivergence, ScheduleExhausted


def _first_difference(n: int, h: float) -> sp.csr_matrix:
    if n < 3:
        raise DomainError("each grid axis needs at least 3 points")
    D = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        D[i, i - 1] = -0.5 / h
        D[i, i + 1] = 0.5 / h
    D[0, 0:3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
    D[n - 1, n - 3:n] = np.array([1.0, -4.0, 3.0]) / (2 * h)
    return D.tocsr()


def _second_difference(n: int, h: float) -> sp.csr_matrix:
    if n < 4:
        raise DomainError("one-sided second differences need at least 4 points per axis")
    D = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        D[i, i - 1:i + 2] = np.array([1.0, -2.0, 1.0]) / h ** 2
    D[0, 0:4] = np.array([2.0, -5.0, 4.0, -1.0]) / h ** 2
    D[n - 1, n - 4:n] = np.array([-1.0, 4.0, -5.0, 2.0]) / h ** 2
    return D.tocsr()


@dataclass
class GridField:
    """Values on the grid ``origin + (i*h1, j*h2)``, indexed ``values[i, j]``."""

    values: np.ndarray
    spacing: tuple
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DomainError("GridField values must be a 2-D array")
        self.spacing = tuple(float(h) for h in self.spacing)
        self.origin = tuple(float(o) for o in self.origin)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def ravel(self) -> np.ndarray:
        return self.values.ravel()

    def like(self, values) -> "GridField":
        return GridField(np.asarray(values, dtype=float).reshape(self.shape), self.spacing, self.origin)

    def __add__(self, other):
        other = other.values if isinstance(other, GridField) else other
        return self.like(self.values + other)

    def __sub__(self, other):
        other = other.values if isinstance(other, GridField) else other
        return self.like(self.values - other)

    def __mul__(self, c):
        return self.like(self.values * c)

    __rmul__ = __mul__


def _coefficient_field(coef, nodes, shape):
    if callable(coef):
        return np.array([np.asarray(coef(y), dtype=float).reshape(shape) for y in nodes])
    arr = np.asarray(coef, dtype=float)
    return np.broadcast_to(arr.reshape(shape), (len(nodes),) + shape).copy()


@dataclass(eq=False)
class MAProblem:
    """Coefficient fields, grid and constants of the Monge-Ampere-type equation.

    ``A`` is a matrix or a callable y -> matrix, ``B`` two such symmetric
    matrices and ``sigma`` two scalars or callables.  ``target`` is a number
    (the constant 2**n) or a field on the grid.
    """

    domain: tuple
    shape: tuple
    A: object
    B: list
    sigma: list
    epsilon: float
    target: object = 4.0
    hessian_cap: float = 1e6
    l: int = 2

    def __post_init__(self):
        if self.l != 2:
            raise DomainError("only l = 2 is supported")
        (a1, b1), (a2, b2) = self.domain
        if not (b1 > a1 and b2 > a2):
            raise DomainError("domain must be a nondegenerate rectangle")
        self.domain = ((float(a1), float(b1)), (float(a2), float(b2)))
        self.shape = (int(self.shape[0]), int(self.shape[1]))
        if min(self.shape) < 4:
            raise DomainError("grid needs at least 4 points per axis")
        if len(self.B) != self.l or len(self.sigma) != self.l:
            raise DomainError(f"B and sigma need {self.l} entries")
        if self.epsilon <= 0:
            raise DomainError("epsilon must be positive")
        nodes = self.nodes
        self.A_field = _coefficient_field(self.A, nodes, (2, 2))
        self.B_field = np.array([_coefficient_field(Bk, nodes, (2, 2)) for Bk in self.B])
        self.sigma_field = np.array([_coefficient_field(s, nodes, ()) for s in self.sigma])
        self.detA = np.linalg.det(self.A_field)
        if np.any(self.detA == 0):
            raise DomainError("A is singular at some grid node")
        if np.max(np.abs(self.B_field - np.swapaxes(self.B_field, -1, -2))) > 1e-14:
            raise DomainError("B_k must be symmetric")
        target = np.asarray(self.target, dtype=float)
        if target.ndim == 0:
            self.target_field = np.full(self.size, float(target))
        else:
            if target.size != self.size:
                raise DomainError("target field does not match the grid")
            self.target_field = target.ravel().copy()

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def spacing(self) -> tuple:
        (a1, b1), (a2, b2) = self.domain
        return ((b1 - a1) / (self.shape[0] - 1), (b2 - a2) / (self.shape[1] - 1))

    @property
    def origin(self) -> tuple:
        return (self.domain[0][0], self.domain[1][0])

    @cached_property
    def axes(self):
        (a1, b1), (a2, b2) = self.domain
        return np.linspace(a1, b1, self.shape[0]), np.linspace(a2, b2, self.shape[1])

    @cached_property
    def nodes(self) -> np.ndarray:
        y1, y2 = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([y1.ravel(), y2.ravel()])

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask.ravel()

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        h1, h2 = self.spacing
        w1 = np.full(self.shape[0], h1)
        w1[[0, -1]] *= 0.5
        w2 = np.full(self.shape[1], h2)
        w2[[0, -1]] *= 0.5
        return np.outer(w1, w2).ravel()

    @property
    def volume(self) -> float:
        (a1, b1), (a2, b2) = self.domain
        return (b1 - a1) * (b2 - a2)

    @cached_property
    def operators(self):
        """(D1, D2, D11, D22, D12) acting on raveled fields."""
        n1, n2 = self.shape
        h1, h2 = self.spacing
        I1 = sp.identity(n1, format="csr")
        I2 = sp.identity(n2, format="csr")
        D1 = sp.kron(_first_difference(n1, h1), I2).tocsr()
        D2 = sp.kron(I1, _first_difference(n2, h2)).tocsr()
        D11 = sp.kron(_second_difference(n1, h1), I2).tocsr()
        D22 = sp.kron(I1, _second_difference(n2, h2)).tocsr()
        return D1, D2, D11, D22, (D1 @ D2).tocsr()

    def grid_field(self, values) -> GridField:
        return GridField(np.asarray(values, dtype=float).reshape(self.shape), self.spacing, self.origin)

    def sample(self, func) -> GridField:
        return self.grid_field([func(y) for y in self.nodes])

    def check_field(self, f: GridField) -> np.ndarray:
        if f.shape != self.shape:
            raise DomainError(f"field shape {f.shape} does not match grid {self.shape}")
        return f.ravel()


@dataclass
class _Parts:
    dhat: np.ndarray
    C: np.ndarray
    detC: np.ndarray
    S: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


def _parts(problem: MAProblem, vec: np.ndarray) -> _Parts:
    D1, D2, D11, D22, D12 = problem.operators
    g = np.stack([D1 @ vec, D2 @ vec])
    f12 = D12 @ vec
    H = np.empty((len(vec), 2, 2))
    H[:, 0, 0] = D11 @ vec
    H[:, 1, 1] = D22 @ vec
    H[:, 0, 1] = H[:, 1, 0] = f12
    A = problem.A_field
    C = A @ H @ np.swapaxes(A, 1, 2) + np.einsum("kp,kpij->pij", g, problem.B_field)
    detC = C[:, 0, 0] * C[:, 1, 1] - C[:, 0, 1] * C[:, 1, 0]
    S = np.einsum("kp,kp->p", problem.sigma_field, g)
    return _Parts(detC * S, C, detC, S, g, H)


def D_hat(problem: MAProblem, f: GridField) -> GridField:
    """det(A Hf A^T + sum_k f_k B_k) * sum_k sigma_k f_k at every grid node."""
    return problem.grid_field(_parts(problem, problem.check_field(f)).dhat)


def _cofactor(C):
    cof = np.empty_like(C)
    cof[:, 0, 0] = C[:, 1, 1]
    cof[:, 1, 1] = C[:, 0, 0]
    cof[:, 0, 1] = -C[:, 1, 0]
    cof[:, 1, 0] = -C[:, 0, 1]
    return cof


def principal_symbol(problem: MAProblem, f1: GridField) -> np.ndarray:
    """Second-order coefficients of the linearization, shape (nodes, 2, 2).

    Entry (k, l) is sum_ij a_ik cof(C)_ij a_jl * sum_i sigma_i f_i.
    """
    p = _parts(problem, problem.check_field(f1))
    A = problem.A_field
    return np.swapaxes(A, 1, 2) @ _cofactor(p.C) @ A * p.S[:, None, None]


def linearize(problem: MAProblem, f1: GridField) -> sp.csr_matrix:
    """Sparse Jacobian of the discrete D_hat at f1.

    L(g) = sum_kl M_kl d_kl g + sum_k (S * cof(C) : B_k + det C * sigma_k) d_k g,
    with M the principal symbol and S = sum sigma_k d_k f1.  There is no
    zeroth-order term.
    """
    vec = problem.check_field(f1)
    p = _parts(problem, vec)
    D1, D2, D11, D22, D12 = problem.operators
    A = problem.A_field
    cof = _cofactor(p.C)
    M = np.swapaxes(A, 1, 2) @ cof @ A * p.S[:, None, None]
    L = (sp.diags(M[:, 0, 0]) @ D11 + sp.diags(M[:, 1, 1]) @ D22
         + sp.diags(M[:, 0, 1] + M[:, 1, 0]) @ D12)
    for k, Dk in enumerate((D1, D2)):
        b = p.S * np.einsum("pij,pij->p", cof, problem.B_field[k]) + p.detC * problem.sigma_field[k]
        L = L + sp.diags(b) @ Dk
    return L.tocsr()


@dataclass
class Certificate:
    E_min: float
    ok: bool
    E: np.ndarray
    dhat_min: float
    slope_min: float
    cells: list = field(default_factory=list)
    bound: float = 0.0

    def __iter__(self):
        return iter((self.E_min, self.ok))


def ellipticity_certificate(problem: MAProblem, f1: GridField) -> Certificate:
    """E = (det A)**2 * D_hat**(l-1) * sum sigma_k f_k at every node.

    ``ok`` holds when D_hat >= eps**2 and sum sigma_k f_k >= eps at every
    node, which gives E >= (min det A)**2 * eps**(2l-1).
    """
    p = _parts(problem, problem.check_field(f1))
    eps = problem.epsilon
    E = problem.detA ** 2 * p.dhat ** (problem.l - 1) * p.S
    bad = (p.dhat < eps ** 2) | (p.S < eps)
    cells = [tuple(int(i) for i in np.unravel_index(k, problem.shape)) for k in np.flatnonzero(bad)]
    bound = float(np.min(problem.detA ** 2)) * eps ** (2 * problem.l - 1)
    return Certificate(float(E.min()), not cells, E.reshape(problem.shape),
                       float(p.dhat.min()), float(p.S.min()), cells, bound)


@dataclass
class Membership:
    integral: float
    target_integral: float
    integral_ok: bool
    dhat_ok: bool
    slope_ok: bool

    @property
    def ok(self) -> bool:
        return self.integral_ok and self.dhat_ok and self.slope_ok


def membership_U_eps(problem: MAProblem, f: GridField, rtol: float = 1e-8) -> Membership:
    """Integral and pointwise conditions of the admissible set, each reported."""
    p = _parts(problem, problem.check_field(f))
    w = problem.trapezoid_weights
    integral = float(w @ p.dhat)
    target = float(w @ problem.target_field)
    eps = problem.epsilon
    return Membership(integral, target,
                      abs(integral - target) <= rtol * abs(target),
                      bool(np.all(p.dhat >= eps ** 2)), bool(np.all(p.S >= eps)))


def normalize_to_target(problem: MAProblem, f: GridField) -> GridField:
    """c * f with c chosen from D_hat(c f) = c**(l+1) D_hat(f) to match the integral."""
    m = membership_U_eps(problem, f)
    if m.integral <= 0:
        raise DomainError("integral of D_hat(f) must be positive to normalize")
    return f * (m.target_integral / m.integral) ** (1.0 / (problem.l + 1))


@dataclass
class ContinuationState:
    t: float
    f: GridField
    certificate_min: float
    newton_iters: int
    residual_norm: float
    residual_history: list = field(default_factory=list)
    hessian_norm: float = 0.0
    boundary_mismatch: float = 0.0
    multiplier: float = 0.0
    hessian_cap_exceeded: bool = False
    residual_floor: float = 0.0
    history: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"t": self.t, "newton_iters": self.newton_iters, "residual_norm": self.residual_norm,
                "certificate_min": self.certificate_min, "hessian_norm": self.hessian_norm,
                "hessian_cap_exceeded": self.hessian_cap_exceeded, "boundary_mismatch": self.boundary_mismatch,
                "multiplier": self.multiplier, "residual_floor": self.residual_floor}


class _NewtonFailure(Exception):
    pass


def _newton(problem, f0_vec, dhat0, start, t, tol, max_iter, max_backtracks, enforce_integral):
    bnd = problem.boundary_mask
    interior = ~bnd
    rhs = (1 - t) * dhat0 + t * problem.target_field
    w = problem.trapezoid_weights
    scale = max(1.0, float(np.max(np.abs(rhs))))

    def residual(vec, mu):
        dh = _parts(problem, vec).dhat
        R = np.where(bnd, vec - f0_vec, dh - rhs - mu)
        if enforce_integral:
            R = np.append(R, w @ (dh - rhs))
        return R

    def norm(R):
        return float(np.max(np.abs(R)))

    vec, mu = start.copy(), 0.0
    R = residual(vec, mu)
    history = [norm(R)]
    it = 0
    while history[-1] > tol * scale:
        if it >= max_iter:
            raise _NewtonFailure(f"no convergence in {max_iter} Newton steps at t={t:.6g}")
        Jfull = linearize(problem, problem.grid_field(vec))
        J = sp.diags(interior.astype(float)) @ Jfull + sp.diags(bnd.astype(float))
        if enforce_integral:
            col = sp.csr_matrix(-interior.astype(float)[:, None])
            row = sp.csr_matrix(w @ Jfull)
            J = sp.bmat([[J, col], [row, None]])
        step = spla.spsolve(J.tocsc(), -R)
        if not np.all(np.isfinite(step)):
            raise _NewtonFailure(f"singular Newton system at t={t:.6g}")
        dvec, dmu = (step[:-1], step[-1]) if enforce_integral else (step, 0.0)
        lam = 1.0
        for _ in range(max_backtracks + 1):
            cand, cand_mu = vec + lam * dvec, mu + lam * dmu
            R_new = residual(cand, cand_mu)
            if norm(R_new) <= (1 - 1e-4 * lam) * history[-1]:
                break
            lam *= 0.5
        else:
            raise _NewtonFailure(f"residual did not decrease after {max_backtracks} backtracks at t={t:.6g}")
        vec, mu, R = cand, cand_mu, R_new
        history.append(norm(R))
        it += 1
    return vec, mu, it, history


def continuation_solve(problem: MAProblem, f0: GridField, schedule="adaptive", *,
                       initial_step: float = 0.1, min_step: float = 1e-4, max_steps: int = 10000,
                       tol: float = 1e-10, max_newton: int = 25, max_backtracks: int = 12,
                       enforce_integral: bool = False) -> ContinuationState:
    """Follow the path from f0 (t = 0) towards t = 1 by damped Newton.

    ``schedule`` is ``"adaptive"`` or an increasing list of t values.  The
    adaptive schedule halves the step after a failed step and stops with
    an error below ``min_step``.  A step is accepted only when the
    ellipticity certificate holds.  The returned state carries per-step
    summaries in ``history``.
    """
    f0_vec = problem.check_field(f0)
    cert0 = ellipticity_certificate(problem, f0)
    start = ContinuationState(0.0, f0, cert0.E_min, 0, 0.0, [0.0],
                              _hessian_norm(problem, f0_vec))
    if not cert0.ok:
        raise CertificateViolation("start field violates the ellipticity certificate",
                                   state=None, cells=cert0.cells)
    dhat0 = _parts(problem, f0_vec).dhat
    accepted = [start]
    start.history = [start.summary()]

    def attempt(t, from_state):
        vec, mu, iters, hist = _newton(problem, f0_vec, dhat0, from_state.f.ravel(), t, tol,
                                       max_newton, max_backtracks, enforce_integral)
        f = problem.grid_field(vec)
        cert = ellipticity_certificate(problem, f)
        dh = _parts(problem, vec).dhat
        bnd = problem.boundary_mask
        hnorm = _hessian_norm(problem, vec)
        state = ContinuationState(t, f, cert.E_min, iters, hist[-1], hist, hnorm,
                                  float(np.max(np.abs(dh[bnd] - dhat0[bnd]))), mu,
                                  hnorm > problem.hessian_cap, residual_floor(problem, f))
        return state, cert

    def record(state):
        accepted.append(state)
        return state.summary()

    history = [start.history[0]]
    if schedule == "adaptive":
        t, step, steps = 0.0, initial_step, 0
        while t < 1.0:
            steps += 1
            if steps > max_steps:
                raise ScheduleExhausted(f"more than {max_steps} continuation steps", state=accepted[-1])
            t_next = t + step
            if t_next > 1.0 - 1e-9:
                t_next = 1.0
            failure = None
            try:
                state, cert = attempt(t_next, accepted[-1])
                if not cert.ok:
                    failure = CertificateViolation(
                        f"certificate fails at t={t_next:.6g} on {len(cert.cells)} cells",
                        state=accepted[-1], cells=cert.cells)
            except _NewtonFailure as exc:
                failure = NewtonDivergence(str(exc), state=accepted[-1])
            if failure is None:
                history.append(record(state))
                t = t_next
                continue
            step *= 0.5
            if step < min_step:
                raise failure
    else:
        ts = [float(t) for t in schedule]
        if any(b <= a for a, b in zip(ts, ts[1:])) or any(not 0 <= t <= 1 for t in ts):
            raise DomainError("schedule must be increasing within [0, 1]")
        for t in ts:
            if t == 0.0:
                continue
            try:
                state, cert = attempt(t, accepted[-1])
            except _NewtonFailure as exc:
                raise NewtonDivergence(str(exc), state=accepted[-1]) from None
            if not cert.ok:
                raise CertificateViolation(f"certificate fails at t={t:.6g} on {len(cert.cells)} cells",
                                           state=accepted[-1], cells=cert.cells)
            history.append(record(state))
    final = accepted[-1]
    final.history = history
    return final


def residual_floor(problem: MAProblem, f: GridField) -> float:
    """First-order estimate of the rounding error in the interior residual at f.

    Each stencil application carries an error of about eps * |f| * (row sum of
    |stencil|); the linearization coefficients carry it into D_hat.
    """
    vec = problem.check_field(f)
    p = _parts(problem, vec)
    D1, D2, D11, D22, D12 = problem.operators
    A = problem.A_field
    cof = _cofactor(p.C)
    M = np.abs(np.swapaxes(A, 1, 2) @ cof @ A * p.S[:, None, None])

    def rows(D):
        return np.asarray(abs(D).sum(axis=1)).ravel()

    spread = M[:, 0, 0] * rows(D11) + M[:, 1, 1] * rows(D22) + (M[:, 0, 1] + M[:, 1, 0]) * rows(D12)
    for k, Dk in enumerate((D1, D2)):
        b = p.S * np.einsum("pij,pij->p", cof, problem.B_field[k]) + p.detC * problem.sigma_field[k]
        spread = spread + np.abs(b) * rows(Dk)
    interior = ~problem.boundary_mask
    return float(np.finfo(float).eps * np.max(np.abs(vec)) * np.max(spread[interior]))


def _hessian_norm(problem, vec) -> float:
    p = _parts(problem, vec)
    return float(np.max(np.abs(p.hess)))


def _bump(problem: MAProblem) -> np.ndarray:
    (a1, b1), (a2, b2) = problem.domain
    y = problem.nodes
    return (np.sin(math.pi * (y[:, 0] - a1) / (b1 - a1)) ** 2
            * np.sin(math.pi * (y[:, 1] - a2) / (b2 - a2)) ** 2)


def exact_D_hat(problem: MAProblem, f_star) -> np.ndarray:
    """D_hat of a smooth function from its analytic gradient and Hessian at the nodes."""
    out = np.empty(problem.size)
    for p, y in enumerate(problem.nodes):
        g = np.asarray(f_star.grad(y), dtype=float)
        H = np.asarray(f_star.hess(y), dtype=float)
        A = problem.A_field[p]
        C = A @ H @ A.T + np.tensordot(g, problem.B_field[:, p], axes=1)
        out[p] = np.linalg.det(C) * float(problem.sigma_field[:, p] @ g)
    return out


def manufactured_problem(f_star, A, B, sigma, epsilon: float, delta: float = 0.0,
                         domain=None, shape=None, hessian_cap: float = 1e6):
    """A problem whose t = 1 solution is ``f_star``, and a perturbed start field.

    ``f_star`` is either a GridField, in which case the target is its discrete
    D_hat and the discrete solution is ``f_star`` itself, or a smooth
    function with ``grad`` and ``hess`` (a ChamberFunction), in which case the
    target is its exact D_hat and ``domain``/``shape`` fix the grid.  The start
    field is f_star + delta * bump with a bump vanishing on the boundary.
    """
    if isinstance(f_star, GridField):
        n1, n2 = f_star.shape
        (o1, o2), (h1, h2) = f_star.origin, f_star.spacing
        dom = ((o1, o1 + (n1 - 1) * h1), (o2, o2 + (n2 - 1) * h2))
        problem = MAProblem(dom, (n1, n2), A, B, sigma, epsilon, 0.0, hessian_cap)
        star_vec = f_star.ravel()
        target = _parts(problem, star_vec).dhat
    else:
        if domain is None or shape is None:
            raise DomainError("a function-valued f_star needs domain and shape")
        problem = MAProblem(domain, shape, A, B, sigma, epsilon, 0.0, hessian_cap)
        star_vec = np.array([f_star(y) for y in problem.nodes])
        target = exact_D_hat(problem, f_star)
    star_parts = _parts(problem, star_vec)
    if np.any(star_parts.dhat < epsilon ** 2) or np.any(star_parts.S < epsilon):
        raise DomainError("f_star does not satisfy D_hat >= eps**2 and sum sigma_k f_k >= eps")
    problem.target = target
    problem.target_field = target.copy()
    f0 = problem.grid_field(star_vec + delta * _bump(problem))
    return problem, f0
