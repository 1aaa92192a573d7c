"""The first-order product operator D and its closed-form specializations.

For a function rho on the maximal abelian subspace,

    D(rho)(Z) = prod_lambda (X_lambda(rho)(Z) / tanh(lambda(Z)))**m_lambda

over the positive roots, where ``X_lambda(rho) = <c_lambda, grad rho>``.  A
doubled root ``2*lambda`` contributes ``(2 X_lambda(rho) / tanh(2 lambda(Z)))**m_2lambda``.

Every factor is written as ``(X / lambda) * q*lambda / tanh(q*lambda)`` with
``q`` in {1, 2}, so the removable singularity on a wall only needs the
slope ``X / lambda`` and the even function ``x / tanh(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, WallSingularityError
from .invariants import grad_rho, hess_rho
from .root_data import RestrictedRootSystem

_EPS = np.finfo(float).eps

# x/tanh(x) = sum a_k x^(2k), a_k = 2^(2k) B_(2k) / (2k)!
_XCOTH_COEFFS = (1.0, 1.0 / 3, -1.0 / 45, 2.0 / 945, -1.0 / 4725,
                 2.0 / 93555, -1382.0 / 638512875)


@dataclass(frozen=True)
class WallRegularization:
    """Settings for the removable wall singularities of D.

    ``taylor_threshold`` is the argument size below which x/tanh(x) is
    summed from its even series of degree ``series_order``.  The same number
    scaled by ``1 + |Z|`` marks the band around a wall in which a factor is
    treated as a limit.
    """

    taylor_threshold: float = 1e-4
    series_order: int = 8

    def __post_init__(self):
        if not 0 < self.taylor_threshold <= 0.1:
            raise DomainError("taylor_threshold must lie in (0, 0.1]")
        if self.series_order % 2 or not 0 <= self.series_order <= 2 * (len(_XCOTH_COEFFS) - 1):
            raise DomainError(f"series_order must be even and at most {2 * (len(_XCOTH_COEFFS) - 1)}")

    def xcoth(self, x):
        """x / tanh(x), equal to 1 at x = 0."""
        x = np.asarray(x, dtype=float)
        small = np.abs(x) < self.taylor_threshold
        x2 = x * x
        series = np.zeros_like(x)
        for a in reversed(_XCOTH_COEFFS[: self.series_order // 2 + 1]):
            series = series * x2 + a
        with np.errstate(invalid="ignore", divide="ignore"):
            direct = x / np.tanh(x)
        out = np.where(small, series, direct)
        return out if out.ndim else float(out)

    def xcoth_series(self, x):
        x2 = float(x) ** 2
        out = 0.0
        for a in reversed(_XCOTH_COEFFS[: self.series_order // 2 + 1]):
            out = out * x2 + a
        return out


DEFAULT_REGULARIZATION = WallRegularization()


def _wall_slope(c, grad_eval, hess_eval, Z, lam, norm_z, band):
    """Limit of X_lambda(rho) / lambda at the wall point nearest to Z.

    Returns ``(None, X)`` when X_lambda(rho) does not vanish there.
    """
    cc = float(c @ c)
    Z0 = Z - lam * c / cc
    g0 = np.asarray(grad_eval(Z0), dtype=float)
    x0 = float(c @ g0)
    # the gradient itself may vanish on the wall, so its size is taken over a band-sized neighbourhood
    g_off = np.asarray(grad_eval(Z0 + band * c / math.sqrt(cc)), dtype=float)
    scale = max(float(np.linalg.norm(g0)), float(np.linalg.norm(g_off)))
    if abs(x0) > 1e-8 * math.sqrt(cc) * scale:
        return None, x0
    if hess_eval is not None:
        return float(c @ np.asarray(hess_eval(Z0), dtype=float) @ c) / cc, 0.0
    # lambda(Z0 +- h c/|c|^2) = +-h
    h = _EPS ** (1 / 3) * (1 + norm_z)
    xp = float(c @ np.asarray(grad_eval(Z0 + h * c / cc), dtype=float))
    xm = float(c @ np.asarray(grad_eval(Z0 - h * c / cc), dtype=float))
    return (xp - xm) / (2 * h), 0.0


def D_factors(rrs: RestrictedRootSystem, grad_eval, Z, hess_eval=None,
              reg: WallRegularization = DEFAULT_REGULARIZATION):
    """Per-root factors of D as a list of ``(value, multiplicity)`` pairs.

    A root with a doubled partner yields two entries, the second one for
    ``2*lambda``.
    """
    Z = np.atleast_1d(np.asarray(Z, dtype=float))
    norm_z = float(np.linalg.norm(Z))
    band = reg.taylor_threshold * (1 + norm_z)
    # below this size X/lambda is dominated by rounding in X
    tiny = math.sqrt(_EPS) * (1 + norm_z)
    grad = np.asarray(grad_eval(Z), dtype=float)
    out = []
    for idx, root in enumerate(rrs.roots):
        c = root.vector
        lam = float(c @ Z)
        X = float(c @ grad)
        if abs(lam) >= band:
            slope = X / lam
        else:
            slope, x0 = _wall_slope(c, grad_eval, hess_eval, Z, lam, norm_z, band)
            if slope is None:
                raise WallSingularityError(
                    f"X_lambda(rho) = {x0:.3e} does not vanish on the wall of root {idx}", root_index=idx)
            if abs(lam) >= tiny:
                slope = X / lam
        out.append((slope * reg.xcoth(lam), root.multiplicity))
        if root.double_multiplicity:
            out.append((slope * reg.xcoth(2 * lam), root.double_multiplicity))
    return out


def apply_D(rrs: RestrictedRootSystem, grad_eval, Z, hess_eval=None,
            reg: WallRegularization = DEFAULT_REGULARIZATION) -> float:
    """D(rho)(Z) for rho given through its gradient evaluator.

    ``hess_eval`` is optional and only consulted on a wall, where the limit
    of a factor is the second derivative of rho across the wall.  Without it
    that derivative is taken by central differences of the gradient.
    """
    value = 1.0
    for factor, m in D_factors(rrs, grad_eval, Z, hess_eval, reg):
        value *= factor ** m
    return value


def D_rho1_rank_one(n: int, d: int, c: float, s, convention: str = "paper",
                    reg: WallRegularization = DEFAULT_REGULARIZATION):
    """Closed form of D(rho_1) for rho_1 = s**2 on a rank one space.

    With the default ("paper") exponents this is
    (2 sqrt(c) s / tanh(sqrt(c) s))**(n-d) * (4 sqrt(c) s / tanh(2 sqrt(c) s))**d,
    whose value at s = 0 is 2**n.
    """
    if c <= 0:
        raise DomainError("curvature must be positive")
    m = n - d if convention == "paper" else n - 1 - d
    a = math.sqrt(c) * np.asarray(s, dtype=float)
    return 2.0 ** (m + d) * reg.xcoth(a) ** m * reg.xcoth(2 * a) ** d


def D_rho1_rank_two(rrs: RestrictedRootSystem, x,
                    reg: WallRegularization = DEFAULT_REGULARIZATION) -> float:
    """D(rho_1) from the closed form 2 lambda / tanh(lambda); finite on the walls."""
    x = np.asarray(x, dtype=float)
    value = 1.0
    for root in rrs.roots:
        lam = float(root.vector @ x)
        value *= (2 * reg.xcoth(lam)) ** root.multiplicity
        if root.double_multiplicity:
            value *= (2 * reg.xcoth(2 * lam)) ** root.double_multiplicity
    return value


def _rho2_numerator(type_tag, c, x):
    c1, c2 = c
    x1, x2 = x
    if type_tag == "a2":
        return 3 * c1 * (x1 ** 2 - x2 ** 2) - 6 * c2 * x1 * x2
    if type_tag in ("b2", "bc2", "d2"):
        return 2 * x1 * x2 * (c1 * x2 + c2 * x1)
    return (6 * c1 * x1 * (3 * x1 ** 4 - 6 * x1 ** 2 * x2 ** 2 + 7 * x2 ** 4)
            - 6 * c2 * x2 * (3 * x1 ** 4 - 14 * x1 ** 2 * x2 ** 2 - x2 ** 4))


def D_rho2_rank_two(rrs: RestrictedRootSystem, x,
                    reg: WallRegularization = DEFAULT_REGULARIZATION) -> float:
    """D(rho_2) from the tabulated numerators X_lambda(rho_2).

    Off the walls each factor is numerator / tanh(lambda).  On a wall the
    numerator vanishes with lambda and the factor is replaced by its limit.
    """
    if rrs.rank != 2:
        raise DomainError("D(rho_2) needs a rank two system")
    x = np.asarray(x, dtype=float)
    band = reg.taylor_threshold * (1 + float(np.linalg.norm(x)))
    value = 1.0
    for root in rrs.roots:
        lam = float(root.vector @ x)
        if abs(lam) < band:
            return apply_D(rrs, lambda z: grad_rho(rrs.type_tag, 2, z), x,
                           hess_eval=lambda z: hess_rho(rrs.type_tag, 2, z), reg=reg)
        num = _rho2_numerator(rrs.type_tag, root.covector, x)
        value *= (num / math.tanh(lam)) ** root.multiplicity
        if root.double_multiplicity:
            value *= (2 * num / math.tanh(2 * lam)) ** root.double_multiplicity
    return value


def D_rho1_wall_limit(rrs: RestrictedRootSystem, S, a,
                      reg: WallRegularization = DEFAULT_REGULARIZATION, atol: float = 1e-12) -> float:
    """Limit of D(rho_1) at a point ``a`` lying on exactly the walls of the roots in ``S``.

    ``S`` holds root indices.  Roots in ``S`` contribute 2**(m + m_2) and the
    others their ordinary factor.
    """
    a = np.asarray(a, dtype=float)
    S = set(int(i) for i in S)
    scale = atol * (1 + float(np.linalg.norm(a)))
    value = 1.0
    for idx, root in enumerate(rrs.roots):
        lam = float(root.vector @ a)
        on_wall = abs(lam) <= scale
        if (idx in S) != on_wall:
            where = "off" if idx in S else "on"
            raise DomainError(f"point is {where} the wall of root {idx}, inconsistent with S")
        if idx in S:
            value *= 2.0 ** (root.multiplicity + root.double_multiplicity)
        else:
            value *= (2 * lam / math.tanh(lam)) ** root.multiplicity
            if root.double_multiplicity:
                value *= (4 * lam / math.tanh(2 * lam)) ** root.double_multiplicity
    return value
