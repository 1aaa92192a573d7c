"""Residuals of the Calabi-Yau conditions on the chamber and in invariant coordinates.

``residual_3_6`` checks D(rho) * det(Hess rho) = 2**n for a function on the
maximal abelian subspace.  ``residual_3_10`` and ``residual_5_14`` check the
same condition for f o rho_vec written through a function f of the invariant
coordinates, the first at a chamber point x and the second at an image
point y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .d_operator import DEFAULT_REGULARIZATION, D_factors, apply_D
from .errors import DomainError
from .invariants import InvariantBasis
from .root_data import RestrictedRootSystem

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ChamberFunction:
    """A scalar function with optional analytic gradient and Hessian.

    Missing derivatives are synthesized by central differences with step
    eps**(1/3) * (1 + |x|) from the gradient, or eps**(1/4) * (1 + |x|) from
    values alone.
    """

    value: object
    gradient: object = None
    hessian: object = None

    def __call__(self, x) -> float:
        return float(self.value(np.asarray(x, dtype=float)))

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return np.asarray(self.gradient(x), dtype=float)
        h = _EPS ** (1 / 3) * (1 + np.linalg.norm(x))
        out = np.empty(x.size)
        for i in range(x.size):
            e = np.zeros(x.size)
            e[i] = h
            out[i] = (self.value(x + e) - self.value(x - e)) / (2 * h)
        return out

    def hess(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hessian is not None:
            return np.asarray(self.hessian(x), dtype=float)
        dim = x.size
        out = np.empty((dim, dim))
        if self.gradient is not None:
            h = _EPS ** (1 / 3) * (1 + np.linalg.norm(x))
            for j in range(dim):
                e = np.zeros(dim)
                e[j] = h
                out[:, j] = (self.grad(x + e) - self.grad(x - e)) / (2 * h)
            return 0.5 * (out + out.T)
        h = _EPS ** (1 / 4) * (1 + np.linalg.norm(x))
        f0 = self.value(x)
        for i in range(dim):
            ei = np.zeros(dim)
            ei[i] = h
            out[i, i] = (self.value(x + ei) - 2 * f0 + self.value(x - ei)) / h ** 2
            for j in range(i):
                ej = np.zeros(dim)
                ej[j] = h
                out[i, j] = out[j, i] = (self.value(x + ei + ej) - self.value(x + ei - ej)
                                         - self.value(x - ei + ej) + self.value(x - ei - ej)) / (4 * h * h)
        return out


def compose_with_basis(f: ChamberFunction, basis: InvariantBasis) -> ChamberFunction:
    """f o rho_vec on the chamber, with chain-rule derivatives."""

    def value(x):
        return f(basis.values(x))

    def gradient(x):
        return basis.gradients(x).T @ f.grad(basis.values(x))

    def hessian(x):
        y = basis.values(x)
        J = basis.gradients(x)
        df = f.grad(y)
        return J.T @ f.hess(y) @ J + np.tensordot(df, basis.hessians(x), axes=1)

    return ChamberFunction(value, gradient, hessian)


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    det_factor: float
    D_factor: float

    @property
    def negative_determinant(self) -> bool:
        return self.det_factor < 0

    def __float__(self) -> float:
        return self.residual


def residual_3_6(rrs: RestrictedRootSystem, rho: ChamberFunction, Z, reg=DEFAULT_REGULARIZATION) -> ResidualReport:
    """D(rho)(Z) * det(Hess rho)(Z) - 2**n in orthonormal coordinates."""
    Z = np.atleast_1d(np.asarray(Z, dtype=float))
    det_h = float(np.linalg.det(np.atleast_2d(rho.hess(Z))))
    d_val = apply_D(rrs, rho.grad, Z, hess_eval=rho.hess, reg=reg)
    return ResidualReport(d_val * det_h - 2.0 ** rrs.n, det_h, d_val)


def block_hessian_3_5(rrs: RestrictedRootSystem, rho: ChamberFunction, Z, reg=DEFAULT_REGULARIZATION):
    """The complex Hessian of rho^h at Exp(Z) in block form.

    Returns ``(H, blocks)`` with ``H = Hess(rho)(Z) / 4`` and ``blocks`` a list
    of ``(scalar, multiplicity)`` for the transversal scalar blocks
    ``X_lambda(rho) / (4 tanh(lambda(Z)))``.
    """
    Z = np.atleast_1d(np.asarray(Z, dtype=float))
    H = 0.25 * np.atleast_2d(rho.hess(Z))
    blocks = [(0.25 * v, m) for v, m in D_factors(rrs, rho.grad, Z, rho.hess, reg)]
    return H, blocks


def block_determinant(H, blocks) -> float:
    det = float(np.linalg.det(H))
    for v, m in blocks:
        det *= v ** m
    return det


def assembled_hessian_3_2(rrs: RestrictedRootSystem, rho: ChamberFunction, Z) -> np.ndarray:
    """Dense Hessian of rho^d at Exp(Z) assembled from the shape operator.

    The tangent block is Hess(rho); the normal block is -d rho(h(e_i, e_j))
    with the second fundamental form h(e, e) = -X_lambda / tanh(lambda(Z)) on
    a unit vector e of the root space of lambda (and of 2*lambda, where
    X_{2 lambda} = 2 X_lambda).
    """
    Z = np.atleast_1d(np.asarray(Z, dtype=float))
    r = rrs.rank
    size = rrs.block_dimension
    grad = rho.grad(Z)
    # h as an (n-r) x (n-r) array of vectors in the abelian subspace
    h = np.zeros((size - r, size - r, r))
    pos = 0
    for root in rrs.roots:
        lam = root(Z)
        for q, m in ((1, root.multiplicity), (2, root.double_multiplicity)):
            for _ in range(m):
                h[pos, pos] = -q * root.vector / math.tanh(q * lam)
                pos += 1
    out = np.zeros((size, size))
    out[:r, :r] = np.atleast_2d(rho.hess(Z))
    out[r:, r:] = -h @ grad
    return out


def _grad_hess_f(f: ChamberFunction, y):
    return f.grad(y), f.hess(y)


def _D_of_generators(rrs, basis, x, reg):
    return [apply_D(rrs, lambda z, a=a: basis.gradient(a, z), x,
                    hess_eval=lambda z, a=a: basis.hessians(z)[a - 1], reg=reg)
            for a in range(1, basis.size + 1)]


def residual_3_10(f: ChamberFunction, rrs: RestrictedRootSystem, basis: InvariantBasis, x,
                  reg=DEFAULT_REGULARIZATION) -> ResidualReport:
    """Residual of the invariant-coordinate equation at a chamber point x.

    Matrix entries are summed term by term:
    M_ij = sum_k (sum_kk f_{kk,k}(rho(x)) d_i rho_kk d_j rho_k + f_k(rho(x)) d_ij rho_k),
    and the D factor is sum_k f_k(rho(x)) D(rho_k)(x).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = basis.values(x)
    df, hf = _grad_hess_f(f, y)
    J = basis.gradients(x)
    Hr = basis.hessians(x)
    r = x.size
    l = basis.size
    M = np.zeros((r, r))
    for i in range(r):
        for j in range(r):
            acc = 0.0
            for k in range(l):
                for kk in range(l):
                    acc += hf[kk, k] * J[kk, i] * J[k, j]
                acc += df[k] * Hr[k, i, j]
            M[i, j] = acc
    det_m = float(np.linalg.det(M))
    d_sum = float(sum(df[k] * d for k, d in enumerate(_D_of_generators(rrs, basis, x, reg))))
    return ResidualReport(det_m * d_sum - 2.0 ** rrs.n, det_m, d_sum)


def residual_5_14(f: ChamberFunction, rrs: RestrictedRootSystem, basis: InvariantBasis, y,
                  reg=DEFAULT_REGULARIZATION) -> ResidualReport:
    """Residual of the same equation at an image point y, in matrix form.

    With J = (d rho_i / d x_j) and every generator-side factor evaluated at
    x = rho_vec^{-1}(y): det(J^T Hf J + sum_i f_i H rho_i) * sum_i f_i D(rho_i) - 2**n.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if not basis.region_contains(y, strict=True):
        raise DomainError(f"{tuple(y)} is not an interior image point")
    x = basis.inverse(y)
    df, hf = _grad_hess_f(f, y)
    J = basis.gradients(x)
    M = J.T @ hf @ J + np.tensordot(df, basis.hessians(x), axes=1)
    det_m = float(np.linalg.det(M))
    d_sum = float(np.dot(df, _D_of_generators(rrs, basis, x, reg)))
    return ResidualReport(det_m * d_sum - 2.0 ** rrs.n, det_m, d_sum)
