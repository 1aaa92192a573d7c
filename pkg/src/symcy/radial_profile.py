"""Rank one radial profile f with (2u f'' + f') f' D(rho_1) = 2**(n-1).

With u = s**2 and ``g(u) = tanh(a)**(n-d) * tanh(2a)**d / (2**(d+1) c**(n/2) u**(n/2))``,
``a = sqrt(c u)``, the profile is built from ``G(u) = int_0^u g``:

* ``inner`` reading: f'(u) = sqrt((G(u) + C1) / u)
* ``outer`` reading: f'(u) = sqrt(G(u) / u + C1)

and f(u) = C2 + int_0^u f'.  The two readings agree when C1 = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .d_operator import DEFAULT_REGULARIZATION, D_rho1_rank_one
from .errors import DomainError
from .quadrature import PrefixIntegral, QuadratureSettings, adaptive_simpson
from .root_data import RANK_ONE_D

READINGS = ("inner", "outer")


def _xtanh_ratio(x: float) -> float:
    """tanh(x)/x, equal to 1 at x = 0."""
    return 1.0 / DEFAULT_REGULARIZATION.xcoth_series(x) if abs(x) < 1e-4 else math.tanh(x) / x


@dataclass
class RadialProfile:
    n: int
    d: int
    c: float = 1.0
    C1: float = 1.0
    C2: float = 1.0
    reading: str = "inner"
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    knot_spacing: float = 0.5

    def __post_init__(self):
        if self.d not in RANK_ONE_D or self.d >= self.n or self.n < 2:
            raise DomainError(f"invalid rank one data n={self.n}, d={self.d}")
        if self.c <= 0:
            raise DomainError("curvature must be positive")
        if self.C1 < 0 or self.C2 < 0:
            raise DomainError("C1 and C2 must be nonnegative")
        if self.reading not in READINGS:
            raise DomainError(f"reading must be one of {READINGS}")
        self._G = PrefixIntegral(self.integrand_g, self.knot_spacing, self.quadrature)
        if self.reading == "inner":
            # u = v**2 removes the u**(-1/2) singularity of f'
            self._f = PrefixIntegral(self._f_integrand_inner, math.sqrt(self.knot_spacing), self.quadrature)
        else:
            self._f = PrefixIntegral(self.f_prime, self.knot_spacing, self.quadrature)

    def integrand_g(self, u: float) -> float:
        if u < 0:
            raise DomainError("g is defined for u >= 0")
        a = math.sqrt(self.c * u)
        return 0.5 * _xtanh_ratio(a) ** (self.n - self.d) * _xtanh_ratio(2 * a) ** self.d

    def G(self, u: float) -> float:
        return self._G(u)

    def F(self, s: float) -> float:
        """Mean value (1/s) int_0^s g; tends to 1/2 as s -> 0."""
        if s < 0:
            raise DomainError("F is defined for s >= 0")
        if s == 0:
            return self.integrand_g(0.0)
        return self._G(s) / s

    def _radicand(self, u: float) -> float:
        if self.reading == "inner":
            return (self._G(u) + self.C1) / u
        return self.F(u) + self.C1

    def f_prime(self, u: float) -> float:
        if u < 0 or (u == 0 and self.reading == "inner"):
            raise DomainError("f' needs u > 0 for the inner reading and u >= 0 for the outer one")
        rad = self._radicand(u)
        assert rad > 0, "radicand of f' must be positive"
        return math.sqrt(rad)

    def flux(self, u: float) -> float:
        """u * f'(u)**2, which is G(u) + C1 (inner) or G(u) + C1 * u (outer)."""
        if self.reading == "inner":
            return self._G(u) + self.C1
        return self._G(u) + self.C1 * u

    def flux_derivative(self, u: float) -> float:
        """d/du of u * f'(u)**2, read off the quadrature representation."""
        g = self.integrand_g(u)
        return g if self.reading == "inner" else g + self.C1

    def f_second(self, u: float) -> float:
        if u <= 0:
            raise DomainError("f'' is evaluated for u > 0")
        fp = self.f_prime(u)
        # (u f'^2)' = f'^2 + 2 u f' f''
        return (self.flux_derivative(u) - fp * fp) / (2 * u * fp)

    def _f_integrand_inner(self, v: float) -> float:
        return 2 * math.sqrt(self._G(v * v) + self.C1)

    def f_value(self, u: float) -> float:
        if u < 0:
            raise DomainError("f is defined for u >= 0")
        if self.reading == "inner":
            return self.C2 + self._f(math.sqrt(u))
        return self.C2 + self._f(u)

    def D(self, s: float) -> float:
        return float(D_rho1_rank_one(self.n, self.d, self.c, s))

    def ode_residual(self, s: float) -> float:
        """(2 u f''(u) + f'(u)) f'(u) D(rho_1)(s) - 2**(n-1) at u = s**2.

        The left factor equals d/du (u f'(u)**2) and is evaluated in that
        form.  Expanding it through f'' subtracts two numbers that agree to
        many digits once g(u) is small, which happens for large s and n.
        """
        if s <= 0:
            raise DomainError("ode_residual needs s > 0")
        return self.flux_derivative(s * s) * self.D(s) - 2.0 ** (self.n - 1)

    def ode_residual_expanded(self, s: float) -> float:
        """The same residual with 2 u f'' + f' formed term by term."""
        if s <= 0:
            raise DomainError("ode_residual needs s > 0")
        u = s * s
        fp = self.f_prime(u)
        return (2 * u * self.f_second(u) + fp) * fp * self.D(s) - 2.0 ** (self.n - 1)

    def radial_second_derivative(self, s: float) -> float:
        """d^2/ds^2 of f(s**2) = 2 (f' + 2 u f'')."""
        if s == 0:
            if self.reading == "inner":
                raise DomainError("f(s**2) is not twice differentiable at 0 for the inner reading")
            return 2 * self.f_prime(0.0)
        u = s * s
        return 2 * self.flux_derivative(u) / self.f_prime(u)

    def completeness_diagnostic(self, T_max: float, samples: int = 40):
        """Partial lengths L(T) = int_0^T (1/2) sqrt(d^2/ds^2 f(s**2)) ds.

        Returns ``(T, L)`` arrays on a geometric grid ending at ``T_max`` and
        the least-squares slope of log L against log T over the last decade.
        """
        if T_max <= 0:
            raise DomainError("T_max must be positive")
        T = np.geomspace(T_max * 1e-3, T_max, samples)

        def integrand(s):
            if s == 0 and self.reading == "inner":
                return 0.0
            return 0.5 * math.sqrt(self.radial_second_derivative(s))

        L = np.empty(samples)
        acc, lo = 0.0, 0.0
        for i, t in enumerate(T):
            piece, _ = adaptive_simpson(integrand, lo, float(t), self.quadrature)
            acc += piece
            L[i] = acc
            lo = float(t)
        tail = T >= T_max / 10
        slope = float(np.polyfit(np.log(T[tail]), np.log(L[tail]), 1)[0])
        return T, L, slope

    def evenness_diagnostic(self, s_max: float = 0.2, degree: int = 4, samples: int = 61):
        """Low-order coefficients of a polynomial fit of s -> f(s**2) on (0, s_max].

        The fit has degree ``2 * degree`` so that the higher even terms are not
        aliased into the reported ones; coefficients 0..degree are returned.
        An even extension across s = 0 shows up as vanishing odd coefficients.
        """
        k = np.arange(samples)
        s = 0.5 * s_max * (1 - np.cos(np.pi * (k + 0.5) / samples))
        vals = np.array([self.f_value(float(x) ** 2) for x in s])
        fit = np.polynomial.Polynomial.fit(s, vals, 2 * degree).convert()
        coeffs = np.zeros(degree + 1)
        m = min(degree + 1, len(fit.coef))
        coeffs[:m] = fit.coef[:m]
        return coeffs
