"""Adaptive Simpson quadrature and a thread-safe prefix-integral table."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

from .errors import DomainError, QuadratureError


@dataclass(frozen=True)
class QuadratureSettings:
    abstol: float = 1e-12
    reltol: float = 1e-10
    max_subdivisions: int = 20000

    def halved(self) -> "QuadratureSettings":
        return QuadratureSettings(self.abstol / 2, self.reltol / 2, self.max_subdivisions)


def adaptive_simpson(func, a: float, b: float, settings: QuadratureSettings = QuadratureSettings()):
    """Integral of ``func`` over [a, b] and an error estimate.

    Each panel is accepted once the two-level Simpson difference is within
    its share of the tolerance; the accepted value carries the Richardson
    correction (S2 - S1) / 15.  Panels are processed in a fixed order so the
    result depends only on the inputs.
    """
    if a == b:
        return 0.0, 0.0
    fa, fm, fb = func(a), func(0.5 * (a + b)), func(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    tol = max(settings.abstol, settings.reltol * abs(whole))
    span = abs(b - a)
    total = 0.0
    err = 0.0
    used = 0
    stack = [(a, b, fa, fm, fb, whole)]
    while stack:
        lo, hi, flo, fmid, fhi, coarse = stack.pop()
        mid = 0.5 * (lo + hi)
        fl = func(0.5 * (lo + mid))
        fr = func(0.5 * (mid + hi))
        left = (mid - lo) / 6 * (flo + 4 * fl + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * fr + fhi)
        fine = left + right
        diff = fine - coarse
        local_tol = tol * abs(hi - lo) / span
        if abs(diff) <= 15 * local_tol or abs(hi - lo) <= 1e-15 * span:
            total += fine + diff / 15
            err += abs(diff) / 15
            continue
        used += 1
        if used > settings.max_subdivisions:
            raise QuadratureError(
                f"no convergence on [{a}, {b}] after {settings.max_subdivisions} subdivisions")
        # right half pushed first so panels are summed left to right
        stack.append((mid, hi, fmid, fr, fhi, right))
        stack.append((lo, mid, flo, fl, fmid, left))
    if not math.isfinite(total):
        raise QuadratureError(f"non-finite integral on [{a}, {b}]")
    return total, err


class PrefixIntegral:
    """I(x) = integral of ``func`` from 0 to x, for x >= 0, with cached knots.

    Knots sit on the fixed lattice ``j * knot_spacing`` and each panel
    between consecutive knots is integrated once, so a value never depends
    on the order of earlier calls.  The table is guarded by a lock.
    """

    def __init__(self, func, knot_spacing: float = 0.5,
                 settings: QuadratureSettings = QuadratureSettings()):
        if knot_spacing <= 0:
            raise DomainError("knot_spacing must be positive")
        self.func = func
        self.knot_spacing = float(knot_spacing)
        self.settings = settings
        self._knots = [0.0]
        self._values = [0.0]
        self._lock = threading.Lock()

    def _extend_to(self, j: int) -> None:
        with self._lock:
            while len(self._knots) <= j:
                i = len(self._knots)
                lo, hi = (i - 1) * self.knot_spacing, i * self.knot_spacing
                piece, _ = adaptive_simpson(self.func, lo, hi, self.settings)
                self._knots.append(hi)
                self._values.append(self._values[-1] + piece)

    def __call__(self, x: float) -> float:
        if x < 0:
            raise DomainError("prefix integral is defined for x >= 0")
        j = int(math.floor(x / self.knot_spacing))
        self._extend_to(j)
        base = self._values[j]
        lo = self._knots[j]
        if x == lo:
            return base
        piece, _ = adaptive_simpson(self.func, lo, x, self.settings)
        return base + piece

    @property
    def knot_count(self) -> int:
        with self._lock:
            return len(self._knots)

    def knots(self) -> list:
        with self._lock:
            return list(zip(self._knots, self._values))
