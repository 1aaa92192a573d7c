"""Weyl-invariant generators rho_1, rho_2 for the rank two root systems.

The closed forms below accept either a single point ``(x1, x2)`` or a pair
of equally shaped arrays, so grids can be evaluated without a Python loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .root_data import LINES_PER_TYPE, build_rank_two, chamber_width, weyl_group

_B_FAMILY = ("b2", "bc2", "d2")


def _check_type(type_tag):
    if type_tag not in LINES_PER_TYPE:
        raise DomainError(f"{type_tag!r} is not a rank two type")


def rho1(v):
    return v[0] ** 2 + v[1] ** 2


def rho2(type_tag, v):
    _check_type(type_tag)
    x1, x2 = v[0], v[1]
    if type_tag == "a2":
        return x1 * (x1 ** 2 - 3 * x2 ** 2)
    if type_tag in _B_FAMILY:
        return x1 ** 2 * x2 ** 2
    return 3 * x1 ** 6 - 9 * x1 ** 4 * x2 ** 2 + 21 * x1 ** 2 * x2 ** 4 + x2 ** 6


def _phi(type_tag, v):
    if type_tag == "a2":
        return v[0] * v[1] ** 2
    if type_tag in _B_FAMILY:
        return v[0] ** 2 * v[1] ** 2
    return v[0] ** 2 * v[1] ** 4


def symmetrize_phi(type_tag, v):
    """Sum of phi(Bv) over the Weyl group (the auxiliary invariant rho-hat_2)."""
    _check_type(type_tag)
    rrs = build_rank_two(type_tag, 1)
    v = np.asarray(v, dtype=float)
    return sum(_phi(type_tag, B @ v) for B in weyl_group(rrs))


def symmetrized_phi_closed_form(type_tag, v):
    _check_type(type_tag)
    x1, x2 = v[0], v[1]
    if type_tag == "a2":
        return -1.5 * x1 * (x1 ** 2 - 3 * x2 ** 2)
    if type_tag in ("b2", "bc2"):
        return 8 * x1 ** 2 * x2 ** 2
    if type_tag == "d2":
        return 4 * x1 ** 2 * x2 ** 2
    return 0.375 * (3 * x1 ** 6 - 9 * x1 ** 4 * x2 ** 2 + 21 * x1 ** 2 * x2 ** 4 + x2 ** 6)


def grad_rho(type_tag, a, v):
    x1, x2 = v[0], v[1]
    if a == 1:
        return np.array([2 * x1, 2 * x2])
    _check_type(type_tag)
    if type_tag == "a2":
        return np.array([3 * (x1 ** 2 - x2 ** 2), -6 * x1 * x2])
    if type_tag in _B_FAMILY:
        return np.array([2 * x1 * x2 ** 2, 2 * x1 ** 2 * x2])
    return np.array([6 * x1 * (3 * x1 ** 4 - 6 * x1 ** 2 * x2 ** 2 + 7 * x2 ** 4),
                     -6 * x2 * (3 * x1 ** 4 - 14 * x1 ** 2 * x2 ** 2 - x2 ** 4)])


def hess_rho(type_tag, a, v):
    x1, x2 = v[0], v[1]
    if a == 1:
        two = 2.0 + 0 * x1
        zero = 0 * x1
        return np.array([[two, zero], [zero, two]])
    _check_type(type_tag)
    if type_tag == "a2":
        h11, h22, h12 = 6 * x1, -6 * x1, -6 * x2
    elif type_tag in _B_FAMILY:
        h11, h22, h12 = 2 * x2 ** 2, 2 * x1 ** 2, 4 * x1 * x2
    else:
        h11 = 6 * (15 * x1 ** 4 - 18 * x1 ** 2 * x2 ** 2 + 7 * x2 ** 4)
        h22 = -6 * (3 * x1 ** 4 - 42 * x1 ** 2 * x2 ** 2 - 5 * x2 ** 4)
        h12 = -24 * x1 * x2 * (3 * x1 ** 2 - 7 * x2 ** 2)
    return np.array([[h11, h12], [h12, h22]])


def jacobian_rho(type_tag, v):
    """Matrix whose rows are grad(rho_1) and grad(rho_2)."""
    return np.array([grad_rho(type_tag, 1, v), grad_rho(type_tag, 2, v)])


def image_region_contains(type_tag, y, strict=False):
    """Membership of ``y`` in the image of the generator map (closed by default)."""
    _check_type(type_tag)
    y1, y2 = float(y[0]), float(y[1])
    if y1 < 0 or (strict and y1 == 0):
        return False
    if type_tag == "a2":
        bound = y1 ** 1.5
        return -bound < y2 < bound if strict else -bound <= y2 <= bound
    if type_tag in _B_FAMILY:
        top = y1 * y1 / 4
        return 0 < y2 < top if strict else 0 <= y2 <= top
    lo, hi = y1 ** 3, 3 * y1 ** 3
    return lo < y2 < hi if strict else lo <= y2 <= hi


def bracketed_newton(p, dp, lo, hi, x0=None, rtol=1e-13, maxiter=100):
    """Root of ``p`` in ``[lo, hi]`` by Newton steps kept inside a shrinking bracket.

    ``p(lo)`` and ``p(hi)`` must have opposite signs.  A Newton step that
    leaves the bracket, or fails to halve it, is replaced by bisection.
    """
    flo, fhi = p(lo), p(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise DomainError("root is not bracketed")
    x = 0.5 * (lo + hi) if x0 is None or not lo <= x0 <= hi else x0
    width = hi - lo
    for _ in range(maxiter):
        fx = p(x)
        if fx == 0:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi = x
        d = dp(x)
        step = fx / d if d != 0 else math.inf
        x_new = x - step
        if not lo < x_new < hi or abs(step) > 0.5 * width:
            x_new = 0.5 * (lo + hi)
            step = x - x_new
        width = hi - lo
        x = x_new
        if abs(step) <= rtol * abs(x) or width <= rtol * abs(x):
            return x
    raise DomainError("bracketed Newton did not converge")


def rho_inverse(type_tag, y, rtol=1e-13, maxiter=100):
    """Inverse of the generator map on the chamber (the half-chamber for d2).

    a2 and g2 take the largest root of the cubic / sextic relation satisfied
    by ``x1``; the b2 family uses the quadratic formula in ``x1**2``.
    """
    _check_type(type_tag)
    if not image_region_contains(type_tag, y, strict=True):
        raise DomainError(f"{tuple(y)} is not an interior point of the {type_tag} image region")
    y1, y2 = float(y[0]), float(y[1])
    r = math.sqrt(y1)
    if type_tag in _B_FAMILY:
        disc = y1 * y1 - 4 * y2
        if disc < 0:
            raise DomainError("negative discriminant y1^2 - 4 y2")
        x1 = math.sqrt(0.5 * (y1 + math.sqrt(disc)))
        # x1 * x2 = sqrt(y2) avoids cancellation in the smaller root
        return np.array([x1, math.sqrt(y2) / x1])
    if type_tag == "a2":
        def p(x):
            return 4 * x ** 3 - 3 * y1 * x - y2

        def dp(x):
            return 12 * x ** 2 - 3 * y1

        theta = math.acos(max(-1.0, min(1.0, y2 / r ** 3))) / 3
        sigma = bracketed_newton(p, dp, 0.5 * r, r, r * math.cos(theta), rtol, maxiter)
    else:
        def p(x):
            x2 = x * x
            return ((32 * x2 - 48 * y1) * x2 + 18 * y1 * y1) * x2 + y1 ** 3 - y2

        def dp(x):
            x2 = x * x
            return x * ((192 * x2 - 192 * y1) * x2 + 36 * y1 * y1)

        theta = math.acos(max(-1.0, min(1.0, y2 / r ** 6 - 2))) / 6
        sigma = bracketed_newton(p, dp, 0.5 * math.sqrt(3) * r, r, r * math.cos(theta), rtol, maxiter)
    x = np.array([sigma, math.sqrt(max(y1 - sigma * sigma, 0.0))])
    # one Newton step on the full map; the 1-D relation loses digits to cancellation
    J = jacobian_rho(type_tag, x)
    if np.linalg.cond(J) < 1e12:
        x = x - np.linalg.solve(J, np.array([rho1(x) - y1, rho2(type_tag, x) - y2]))
    return x


@dataclass(frozen=True)
class InvariantBasis:
    """The generator pair of a root system with its derivatives and inverse.

    For ``rank1`` there is a single generator ``rho_1 = x**2``.
    """

    type_tag: str
    rtol: float = 1e-13
    maxiter: int = 100

    @property
    def size(self) -> int:
        return 1 if self.type_tag == "rank1" else 2

    def values(self, x):
        if self.type_tag == "rank1":
            return np.array([x[0] ** 2])
        return np.array([rho1(x), rho2(self.type_tag, x)])

    def gradients(self, x):
        """Jacobian of the generator map; row a is grad(rho_a)."""
        if self.type_tag == "rank1":
            return np.array([[2 * x[0]]])
        return jacobian_rho(self.type_tag, x)

    def hessians(self, x):
        if self.type_tag == "rank1":
            return np.array([[[2.0]]])
        return np.array([hess_rho(self.type_tag, 1, x), hess_rho(self.type_tag, 2, x)])

    def gradient(self, a, x):
        return self.gradients(x)[a - 1]

    def inverse(self, y):
        if self.type_tag == "rank1":
            if y[0] <= 0:
                raise DomainError("rank one image is y1 > 0")
            return np.array([math.sqrt(y[0])])
        return rho_inverse(self.type_tag, y, self.rtol, self.maxiter)

    def region_contains(self, y, strict=True):
        if self.type_tag == "rank1":
            return y[0] > 0 if strict else y[0] >= 0
        return image_region_contains(self.type_tag, y, strict)

    def inversion_width(self) -> float:
        """Angular width of the sector on which ``inverse`` is the branch."""
        if self.type_tag == "rank1":
            return math.inf
        return chamber_width(self.type_tag, inversion=True)


def polar_rho2(type_tag, r, theta):
    """rho_2 in polar coordinates."""
    _check_type(type_tag)
    if type_tag == "a2":
        return r ** 3 * np.cos(3 * theta)
    if type_tag in _B_FAMILY:
        return r ** 4 / 4 * np.sin(2 * theta) ** 2
    return r ** 6 * (np.cos(6 * theta) + 2)
