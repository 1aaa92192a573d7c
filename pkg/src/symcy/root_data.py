"""Restricted root systems of rank one and rank two compact symmetric spaces.

Everything lives in orthonormal coordinates ``(x_1, ..., x_r)`` of the
maximal abelian subspace, so a root is stored as the coefficient vector of
the linear functional ``lambda(v) = <covector, v>`` and the parallel field
``X_lambda`` has the same coefficients.

Rank two systems follow the usual dihedral picture: the walls are the lines
through ``(cos(j*pi/k), sin(j*pi/k))`` for ``j = 0..k-1`` and the
fundamental chamber is the open sector ``0 < theta < pi/k``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

RANK_TWO_TYPES = ("a2", "b2", "bc2", "d2", "g2")
TYPE_TAGS = ("rank1",) + RANK_TWO_TYPES

# number of root lines per rank two type
LINES_PER_TYPE = {"d2": 2, "a2": 3, "b2": 4, "bc2": 4, "g2": 6}

RANK_ONE_D = (0, 1, 3, 7)

CONVENTIONS = ("paper", "geometric")


@dataclass(frozen=True)
class RootDatum:
    """One positive root together with its multiplicity data.

    ``double_multiplicity`` is the multiplicity of ``2*lambda`` when that is
    also a root; the doubled root is folded into this entry instead of being
    listed separately.
    """

    covector: tuple
    multiplicity: int
    double_multiplicity: int = 0

    def __post_init__(self):
        cov = tuple(float(c) for c in self.covector)
        object.__setattr__(self, "covector", cov)
        if not any(cov):
            raise DomainError("root covector must be nonzero")
        if int(self.multiplicity) < 1:
            raise DomainError(f"root multiplicity must be positive, got {self.multiplicity}")
        if int(self.double_multiplicity) < 0:
            raise DomainError("double multiplicity must be nonnegative")

    def __call__(self, v) -> float:
        return float(np.dot(self.covector, v))

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.covector)


@dataclass(frozen=True)
class RestrictedRootSystem:
    rank: int
    roots: tuple
    type_tag: str
    n: int
    k: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(self.roots))
        if self.type_tag not in TYPE_TAGS:
            raise DomainError(f"unknown root system type {self.type_tag!r}")
        if self.rank not in (1, 2):
            raise DomainError("only rank one and rank two systems are supported")
        for root in self.roots:
            if len(root.covector) != self.rank:
                raise DomainError("root covector has the wrong dimension")
            if root.double_multiplicity and self.type_tag not in ("rank1", "bc2"):
                raise DomainError(f"type {self.type_tag} does not admit doubled roots")

    @property
    def total_multiplicity(self) -> int:
        """Sum of m_lambda + m_2lambda over the positive roots."""
        return sum(r.multiplicity + r.double_multiplicity for r in self.roots)

    @property
    def block_dimension(self) -> int:
        """Size r + sum(m) of the block Hessian; equals n when dimensions are consistent."""
        return self.rank + self.total_multiplicity

    @property
    def covectors(self) -> np.ndarray:
        return np.array([r.covector for r in self.roots])

    def wall_angles(self) -> list[float]:
        if self.rank != 2:
            raise DomainError("wall angles are defined for rank two only")
        return [j * math.pi / self.k for j in range(self.k)]


def build_rank_one(n: int, d: int, c: float = 1.0, convention: str = "paper") -> RestrictedRootSystem:
    """Rank one system of S^n, CP^{n/2}, QP^{n/4} or the Cayley plane.

    The single root is ``sqrt(c) * <e, .>``.  Under the ``paper`` convention
    the multiplicities are ``(n - d, d)``, the exponents appearing in the
    closed form of D(rho_1); under ``geometric`` they are ``(n - 1 - d, d)``,
    which is what the dimension count ``n = 1 + m + m_2`` gives.
    """
    if d not in RANK_ONE_D:
        raise DomainError(f"d must be one of {RANK_ONE_D}, got {d}")
    if n < 2:
        raise DomainError("n must be at least 2")
    if d >= n:
        raise DomainError(f"d={d} must be smaller than n={n}")
    if c <= 0:
        raise DomainError("curvature must be positive")
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown multiplicity convention {convention!r}")
    m = n - d if convention == "paper" else n - 1 - d
    if m < 1:
        raise DomainError(f"degenerate multiplicity m={m} for n={n}, d={d} ({convention})")
    root = RootDatum((math.sqrt(c),), m, d)
    return RestrictedRootSystem(rank=1, roots=(root,), type_tag="rank1", n=n)


def _line_covector(j: int, k: int, scale: float) -> tuple:
    # normal to the line at angle j*pi/k; sign chosen so the root is positive on the chamber
    a = j * math.pi / k
    sign = 1.0 if j == 0 else -1.0
    return (-sign * scale * math.sin(a), sign * scale * math.cos(a))


def build_rank_two(type_tag: str, multiplicities, root_scales=None, n: int | None = None) -> RestrictedRootSystem:
    """Rank two system with one root per wall line.

    ``multiplicities`` has one entry per line ``j = 0..k-1``; an entry is either
    ``m`` or a pair ``(m, m_2)`` where ``m_2 > 0`` marks a line whose root also
    has its double as a root (``bc2`` only).  ``root_scales`` gives the length
    of each covector and defaults to 1.  ``n`` defaults to the dimension count
    ``2 + sum(m + m_2)``.
    """
    if type_tag not in LINES_PER_TYPE:
        raise DomainError(f"unknown rank two type {type_tag!r}; expected one of {RANK_TWO_TYPES}")
    k = LINES_PER_TYPE[type_tag]
    if isinstance(multiplicities, int):
        multiplicities = [multiplicities] * k
    multiplicities = list(multiplicities)
    if len(multiplicities) != k:
        raise DomainError(f"{type_tag} has {k} root lines, got {len(multiplicities)} multiplicities")
    if root_scales is None:
        root_scales = [1.0] * k
    root_scales = [float(s) for s in root_scales]
    if len(root_scales) != k or any(s <= 0 for s in root_scales):
        raise DomainError(f"{type_tag} needs {k} positive root scales")
    roots = []
    for j, (entry, scale) in enumerate(zip(multiplicities, root_scales)):
        m, m2 = (entry, 0) if np.isscalar(entry) else tuple(entry)
        roots.append(RootDatum(_line_covector(j, k, scale), int(m), int(m2)))
    total = sum(r.multiplicity + r.double_multiplicity for r in roots)
    return RestrictedRootSystem(rank=2, roots=tuple(roots), type_tag=type_tag,
                                n=2 + total if n is None else int(n), k=k)


def weyl_reflection(rrs: RestrictedRootSystem, j: int) -> np.ndarray:
    """Matrix of the reflection B_j in the wall line at angle j*pi/k."""
    if rrs.rank == 1:
        if j != 0:
            raise DomainError("rank one has a single reflection (j=0)")
        return -np.eye(1)
    if not 0 <= j < rrs.k:
        raise DomainError(f"reflection index {j} out of range 0..{rrs.k - 1}")
    a = 2 * j * math.pi / rrs.k
    return np.array([[math.cos(a), math.sin(a)], [math.sin(a), -math.cos(a)]])


def weyl_group(rrs: RestrictedRootSystem) -> list[np.ndarray]:
    """All 2k elements: identity, the k reflections and the rotations (B_0 B_1)^j."""
    if rrs.rank == 1:
        return [np.eye(1), -np.eye(1)]
    k = rrs.k
    reflections = [weyl_reflection(rrs, j) for j in range(k)]
    rot = reflections[0] @ reflections[1]
    rotations = [np.linalg.matrix_power(rot, j) for j in range(1, k)]
    return [np.eye(2)] + reflections + rotations


def _angle(v) -> float:
    return math.atan2(v[1], v[0])


def chamber_contains(rrs: RestrictedRootSystem, v, inversion: bool = False) -> bool:
    """True when ``v`` is in the open fundamental chamber.

    With ``inversion=True`` a d2 system uses the half-chamber 0 < theta < pi/4
    on which the generator map is injective.
    """
    v = np.asarray(v, dtype=float)
    if rrs.rank == 1:
        return bool(v[0] > 0)
    if not (v[0] or v[1]):
        return False
    width = chamber_width(rrs.type_tag, inversion)
    theta = _angle(v)
    return 0.0 < theta < width


def chamber_width(type_tag: str, inversion: bool = False) -> float:
    if inversion and type_tag == "d2":
        return math.pi / 4
    return math.pi / LINES_PER_TYPE[type_tag]


def chamber_representative(rrs: RestrictedRootSystem, v) -> np.ndarray:
    """The point of the Weyl orbit of ``v`` lying in the closed chamber."""
    v = np.asarray(v, dtype=float)
    if rrs.rank == 1:
        return np.abs(v)
    r = math.hypot(v[0], v[1])
    if r == 0.0:
        return np.zeros(2)
    k = rrs.k
    period = 2 * math.pi / k
    theta = math.fmod(_angle(v), period)
    if theta < 0:
        theta += period
    if theta > math.pi / k:
        theta = period - theta
    return np.array([r * math.cos(theta), r * math.sin(theta)])


@dataclass(frozen=True)
class SymmetricSpaceDescriptor:
    """A named compact symmetric space together with its root data."""

    name: str
    type_tag: str
    n: int
    r: int
    multiplicities: tuple = ()
    root_scales: tuple | None = None
    d: int | None = None
    curvature: float = 1.0
    multiplicity_convention: str = "paper"
    extra: dict = field(default_factory=dict, compare=False)

    def root_system(self) -> RestrictedRootSystem:
        if self.r == 1:
            return build_rank_one(self.n, self.d, self.curvature, self.multiplicity_convention)
        return build_rank_two(self.type_tag, self.multiplicities, self.root_scales, n=self.n)

    def dimension_defect(self) -> int:
        """n - (r + sum(m + m_2)); zero for a consistent rank two descriptor."""
        return self.n - self.root_system().block_dimension

    def to_json(self) -> dict:
        out = {"name": self.name, "type": self.type_tag, "n": self.n, "r": self.r,
               "multiplicities": [list(m) if not np.isscalar(m) else m for m in self.multiplicities],
               "root_scales": list(self.root_scales) if self.root_scales else None}
        if self.r == 1:
            out.update(d=self.d, curvature=self.curvature, convention=self.multiplicity_convention)
        return out


def descriptor_from_json(data: dict) -> SymmetricSpaceDescriptor:
    """Build a descriptor from ``{name, type, n, r, d?, curvature?, multiplicities, root_scales, convention?}``."""
    try:
        r = int(data["r"])
        desc = SymmetricSpaceDescriptor(
            name=str(data.get("name", "custom")),
            type_tag=str(data["type"]),
            n=int(data["n"]),
            r=r,
            multiplicities=tuple(tuple(m) if isinstance(m, (list, tuple)) else int(m)
                                 for m in data.get("multiplicities", ())),
            root_scales=tuple(data["root_scales"]) if data.get("root_scales") else None,
            d=int(data["d"]) if r == 1 else None,
            curvature=float(data.get("curvature", 1.0)),
            multiplicity_convention=data.get("convention", "paper"),
        )
    except KeyError as exc:
        raise DomainError(f"descriptor is missing field {exc.args[0]!r}") from None
    desc.root_system()
    return desc


# Built-in rank two spaces.  The type tags are the tabulated ones; the
# multiplicities are defaults chosen so that n = 2 + sum(m + m_2).
def _table_entry(name, type_tag, n, mults):
    return SymmetricSpaceDescriptor(name=name, type_tag=type_tag, n=n, r=2, multiplicities=tuple(mults))


def _su_family(m):
    if m == 2:
        return _table_entry("SU(4)/S(U(2)xU(2))", "d2", 8, (3, 3))
    return _table_entry(f"SU({m + 2})/S(U(2)xU({m}))", "bc2", 4 * m,
                        ((2 * (m - 2), 1), 2, (2 * (m - 2), 1), 2))


def _so_family(m):
    if m < 3:
        raise DomainError("SO(m+2)/(SO(2)xSO(m)) needs m >= 3 for positive multiplicities")
    return _table_entry(f"SO({m + 2})/(SO(2)xSO({m}))", "b2", 2 * m, (m - 2, 1, m - 2, 1))


def _sp_family(m):
    if m == 2:
        return _table_entry("Sp(4)/(Sp(2)xSp(2))", "d2", 16, (7, 7))
    return _table_entry(f"Sp({m + 2})/(Sp(2)xSp({m}))", "bc2", 8 * m,
                        ((4 * (m - 2), 3), 4, (4 * (m - 2), 3), 4))


_FIXED = {
    "SU(3)/SO(3)": _table_entry("SU(3)/SO(3)", "a2", 5, (1, 1, 1)),
    "SU(6)/Sp(3)": _table_entry("SU(6)/Sp(3)", "a2", 14, (4, 4, 4)),
    "SO(8)/U(4)": _table_entry("SO(8)/U(4)", "d2", 12, (5, 5)),
    "SO(10)/U(5)": _table_entry("SO(10)/U(5)", "bc2", 20, ((4, 1), 4, (4, 1), 4)),
    "Sp(2)/U(2)": _table_entry("Sp(2)/U(2)", "d2", 6, (2, 2)),
    "E6/SO(10)U(1)": _table_entry("E6/SO(10)U(1)", "bc2", 32, ((8, 1), 6, (8, 1), 6)),
    "E6/F4": _table_entry("E6/F4", "a2", 26, (8, 8, 8)),
    "G2/SO(4)": _table_entry("G2/SO(4)", "g2", 8, (1,) * 6),
}

_FAMILIES = {
    "SU(m+2)/S(U(2)xU(m))": (_su_family, re.compile(r"SU\((\d+)\)/S\(U\(2\)xU\((\d+)\)\)")),
    "SO(m+2)/(SO(2)xSO(m))": (_so_family, re.compile(r"SO\((\d+)\)/\(SO\(2\)xSO\((\d+)\)\)")),
    "Sp(m+2)/(Sp(2)xSp(m))": (_sp_family, re.compile(r"Sp\((\d+)\)/\(Sp\(2\)xSp\((\d+)\)\)")),
}

_RANK_ONE = {"S^n": 0, "CP^{n/2}": 1, "QP^{n/4}": 3, "OP^2": 7}

RANK_TWO_NAMES = tuple(_FIXED) + tuple(_FAMILIES)
BUILTIN_NAMES = RANK_TWO_NAMES + tuple(_RANK_ONE)


def _normalize(name: str) -> str:
    s = name.replace(" ", "").replace("×", "x").replace("·", "").replace("*", "x")
    s = s.replace("_", "")
    return s.replace("E6/SO(10)xU(1)", "E6/SO(10)U(1)").replace("G6/SO(4)", "G2/SO(4)")


def builtin_descriptor(name: str, m: int | None = None, n: int | None = None,
                       c: float = 1.0, convention: str = "paper") -> SymmetricSpaceDescriptor:
    """Look up a built-in space by its tabulated name or a rank one name.

    Parametric families accept either the template name plus ``m`` or a
    concrete name such as ``SU(5)/S(U(2)xU(3))``.  Rank one names need ``n``.
    """
    key = _normalize(name)
    if key in _FIXED:
        return _FIXED[key]
    for template, (build, pattern) in _FAMILIES.items():
        if key == _normalize(template):
            return build(3 if m is None else int(m))
        match = pattern.fullmatch(key)
        if match:
            big, small = int(match.group(1)), int(match.group(2))
            if big != small + 2:
                raise DomainError(f"{name}: expected the form {template}")
            return build(small)
    for rname, d in _RANK_ONE.items():
        if key == _normalize(rname):
            if rname == "OP^2":
                n = 16 if n is None else n
            if n is None:
                raise DomainError(f"rank one space {rname} needs n")
            build_rank_one(n, d, c, convention)
            return SymmetricSpaceDescriptor(name=rname, type_tag="rank1", n=int(n), r=1, d=d,
                                            curvature=float(c), multiplicity_convention=convention)
    raise DomainError(f"unknown space {name!r}; built-in names: {', '.join(BUILTIN_NAMES)}")
