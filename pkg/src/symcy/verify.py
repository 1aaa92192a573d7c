"""Invariant checks for a symmetric space descriptor, reported as a table.

Every check draws its sample points from a fixed seed, so two runs give the
same report byte for byte.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .d_operator import D_rho1_rank_one, D_rho1_rank_two, D_rho1_wall_limit, D_rho2_rank_two, apply_D
from .invariants import (InvariantBasis, grad_rho, hess_rho, polar_rho2, rho1, rho2, rho_inverse,
                         symmetrize_phi, symmetrized_phi_closed_form)
from .ma_residual import (ChamberFunction, block_determinant, block_hessian_3_5, residual_3_10,
                          residual_5_14)
from .radial_profile import RadialProfile
from .root_data import SymmetricSpaceDescriptor, chamber_width, weyl_group

SEED = 20240601


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def chamber_samples(type_tag: str, count: int, rng, r_range=(0.2, 2.0), inversion=False, margin=0.02):
    """Random points of the open chamber (the half-chamber for d2 when ``inversion``)."""
    width = chamber_width(type_tag, inversion)
    r = rng.uniform(*r_range, count)
    theta = width * rng.uniform(margin, 1 - margin, count)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _rel(a, b):
    return abs(a - b) / (1 + abs(b))


def rank_two_checks(desc: SymmetricSpaceDescriptor):
    rng = np.random.default_rng(SEED)
    rrs = desc.root_system()
    t = rrs.type_tag
    basis = InvariantBasis(t)
    W = weyl_group(rrs)
    out = [CheckResult("dimension identity |n - r - sum m|", abs(desc.dimension_defect()), 0)]

    closure = 0.0
    for P, Q in itertools.product(W, W):
        closure = max(closure, min(np.max(np.abs(P @ Q - R)) for R in W))
    out.append(CheckResult(f"Weyl group closure (|W| = {len(W)})", closure, 1e-12))

    lines = max(abs(root(np.array([math.cos(j * math.pi / rrs.k), math.sin(j * math.pi / rrs.k)])))
                for j, root in enumerate(rrs.roots))
    out.append(CheckResult("roots vanish on their lines", lines, 1e-14))

    pts = rng.normal(size=(200, 2)) * 1.2
    inv1 = inv2 = inv_phi = inv_d1 = inv_d2 = 0.0
    for v in pts:
        base = (rho1(v), rho2(t, v), symmetrize_phi(t, v))
        for B in W:
            w = B @ v
            inv1 = max(inv1, _rel(rho1(w), base[0]))
            inv2 = max(inv2, _rel(rho2(t, w), base[1]))
            inv_phi = max(inv_phi, _rel(symmetrize_phi(t, w), base[2]))
    for v in chamber_samples(t, 200, rng):
        d1, d2 = D_rho1_rank_two(rrs, v), D_rho2_rank_two(rrs, v)
        for B in W:
            w = B @ v
            inv_d1 = max(inv_d1, abs(D_rho1_rank_two(rrs, w) - d1) / (1 + abs(d1)))
            inv_d2 = max(inv_d2, abs(D_rho2_rank_two(rrs, w) - d2) / (1 + abs(d2)))
    out += [CheckResult("W-invariance rho_1", inv1, 1e-10),
            CheckResult("W-invariance rho_2", inv2, 1e-10),
            CheckResult("W-invariance symmetrized phi", inv_phi, 1e-10),
            CheckResult("W-invariance D(rho_1)", inv_d1, 1e-10),
            CheckResult("W-invariance D(rho_2)", inv_d2, 1e-10)]

    phi = max(_rel(symmetrize_phi(t, v), symmetrized_phi_closed_form(t, v)) for v in pts)
    out.append(CheckResult("symmetrized phi closed form", phi, 1e-10))

    polar = 0.0
    for r, th in itertools.product(np.linspace(0.1, 2, 7), np.linspace(0, 2 * math.pi, 13)):
        v = np.array([r * math.cos(th), r * math.sin(th)])
        polar = max(polar, _rel(rho1(v), r * r), _rel(rho2(t, v), polar_rho2(t, r, th)))
    out.append(CheckResult("polar forms", polar, 1e-12))

    back = fwd = 0.0
    for x in chamber_samples(t, 1000, rng, inversion=True, margin=1e-3):
        y = basis.values(x)
        xb = rho_inverse(t, y)
        back = max(back, np.linalg.norm(xb - x) / (1 + np.linalg.norm(x)))
        fwd = max(fwd, np.linalg.norm(basis.values(xb) - y) / (1 + np.linalg.norm(y)))
    out += [CheckResult("inverse(rho(x)) = x", back, 1e-9),
            CheckResult("rho(inverse(y)) = y", fwd, 1e-9)]

    fd = 0.0
    h = 1e-5
    for v in pts[:50]:
        for a in (1, 2):
            for i in range(2):
                e = np.zeros(2)
                e[i] = h
                g_fd = (basis.values(v + e)[a - 1] - basis.values(v - e)[a - 1]) / (2 * h)
                H_fd = (grad_rho(t, a, v + e) - grad_rho(t, a, v - e)) / (2 * h)
                scale = 1 + np.linalg.norm(grad_rho(t, a, v))
                fd = max(fd, abs(g_fd - grad_rho(t, a, v)[i]) / scale,
                         np.max(np.abs(H_fd - hess_rho(t, a, v)[:, i])) / (1 + np.abs(hess_rho(t, a, v)).max()))
    out.append(CheckResult("gradient/Hessian vs central differences", fd, 1e-6))

    wall = 0.0
    width = chamber_width(t)
    for j, a in enumerate((np.array([1.3, 0.0]), np.array([1.3 * math.cos(width), 1.3 * math.sin(width)]))):
        S = [i for i, root in enumerate(rrs.roots) if abs(root(a)) < 1e-12]
        lim = D_rho1_wall_limit(rrs, S, a)
        u = np.array([math.cos(width / 2), math.sin(width / 2)])
        approach = abs(D_rho1_rank_two(rrs, a + 1e-7 * u) - lim) / lim
        wall = max(wall, approach)
    lim0 = D_rho1_wall_limit(rrs, range(len(rrs.roots)), np.zeros(2))
    wall = max(wall, abs(D_rho1_rank_two(rrs, 1e-7 * np.array([0.6, 0.8])) - lim0) / lim0)
    out.append(CheckResult("wall limits of D(rho_1)", wall, 1e-6))

    f = ChamberFunction(lambda y: y[0] ** 2 / 2 + 0.1 * y[1] + y[0],
                        lambda y: np.array([y[0] + 1, 0.1]),
                        lambda y: np.array([[1.0, 0.0], [0.0, 0.0]]))
    chain = 0.0
    block = 0.0
    rho = ChamberFunction(lambda x: rho1(x) + 0.01 * rho2(t, x),
                          lambda x: grad_rho(t, 1, x) + 0.01 * grad_rho(t, 2, x),
                          lambda x: hess_rho(t, 1, x) + 0.01 * hess_rho(t, 2, x))
    for x in chamber_samples(t, 100, rng, inversion=True, margin=0.05):
        a = residual_3_10(f, rrs, basis, x)
        b = residual_5_14(f, rrs, basis, basis.values(x))
        chain = max(chain, abs(a.residual - b.residual) / (1 + abs(a.residual)))
        H, blocks = block_hessian_3_5(rrs, rho, x)
        lhs = block_determinant(H, blocks) * 4.0 ** rrs.block_dimension
        rhs = np.linalg.det(rho.hess(x)) * apply_D(rrs, rho.grad, x, rho.hess)
        block = max(block, abs(lhs - rhs) / abs(rhs))
    out += [CheckResult("chamber vs image-point residual", chain, 1e-10),
            CheckResult("block Hessian determinant identity", block, 1e-12)]
    return out


def rank_one_checks(desc: SymmetricSpaceDescriptor):
    n, d, c = desc.n, desc.d, desc.curvature
    out = [CheckResult("D(rho_1)(1e-6) / 2**n - 1", abs(float(D_rho1_rank_one(n, d, c, 1e-6)) / 2.0 ** n - 1), 1e-8)]
    rrs = desc.root_system()
    cross = max(abs(apply_D(rrs, lambda z: 2 * z, np.array([s])) - float(D_rho1_rank_one(n, d, c, s)))
                / float(D_rho1_rank_one(n, d, c, s)) for s in np.linspace(0.05, 5, 40))
    out.append(CheckResult("closed form vs product formula", cross, 1e-12))
    prof = RadialProfile(n, d, c, C1=1.0, C2=1.0)
    out.append(CheckResult("|F(1e-8) - 1/2|", abs(prof.F(1e-8) - 0.5), 1e-6))
    res = max(abs(prof.ode_residual(s)) for s in np.linspace(0.01, 25, 200))
    out.append(CheckResult("sup |ODE residual| on [0.01, 25]", res, 1e-6))
    return out


def run_checks(desc: SymmetricSpaceDescriptor):
    return rank_one_checks(desc) if desc.r == 1 else rank_two_checks(desc)


def format_report(desc: SymmetricSpaceDescriptor, results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"space: {desc.name}  type: {desc.type_tag}  n: {desc.n}", ""]
    lines.append(f"{'check'.ljust(width)}  {'value':>10}  {'tolerance':>10}  status")
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {r.value:10.3e}  {r.tolerance:10.3e}  {'PASS' if r.passed else 'FAIL'}")
    failed = sum(not r.passed for r in results)
    lines.append("")
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
