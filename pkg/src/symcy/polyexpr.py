"""Polynomial expressions in y1, y2 for coefficient fields read from JSON.

Grammar (a subset of Python expression syntax)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*      division only by constants
    factor := ('+' | '-') factor | atom ('**' | '^') int
    atom   := number | 'y1' | 'y2' | '(' expr ')'

The result is a Polynomial: a mapping from exponent pairs to coefficients,
callable on a point and differentiable exactly.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_VARS = {"y1": (1, 0), "y2": (0, 1)}


@dataclass(frozen=True)
class Polynomial:
    terms: tuple  # ((i, j), coefficient) pairs, sorted

    @classmethod
    def from_dict(cls, d: dict) -> "Polynomial":
        return cls(tuple(sorted((k, float(v)) for k, v in d.items() if v != 0)))

    @classmethod
    def constant(cls, c: float) -> "Polynomial":
        return cls.from_dict({(0, 0): c})

    def as_dict(self) -> dict:
        return dict(self.terms)

    def __call__(self, y) -> float:
        y1, y2 = float(y[0]), float(y[1])
        return sum(c * y1 ** i * y2 ** j for (i, j), c in self.terms)

    def derivative(self, var: int) -> "Polynomial":
        out = {}
        for (i, j), c in self.terms:
            e = (i, j)[var]
            if e:
                key = (i - 1, j) if var == 0 else (i, j - 1)
                out[key] = out.get(key, 0.0) + c * e
        return Polynomial.from_dict(out)

    def gradient(self, y) -> np.ndarray:
        return np.array([self.derivative(0)(y), self.derivative(1)(y)])

    def hessian(self, y) -> np.ndarray:
        d0, d1 = self.derivative(0), self.derivative(1)
        h01 = d0.derivative(1)(y)
        return np.array([[d0.derivative(0)(y), h01], [h01, d1.derivative(1)(y)]])


def _add(a, b, sign=1.0):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0.0) + sign * v
    return out


def _mul(a, b):
    out = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, 0.0) + c1 * c2
    return out


def _eval(node) -> dict:
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return {(0, 0): float(node.value)}
    if isinstance(node, ast.Name):
        if node.id not in _VARS:
            raise DomainError(f"unknown variable {node.id!r}; only y1 and y2 are allowed")
        return {_VARS[node.id]: 1.0}
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        inner = _eval(node.operand)
        return inner if isinstance(node.op, ast.UAdd) else {k: -v for k, v in inner.items()}
    if isinstance(node, ast.BinOp):
        left, right = _eval(node.left), _eval(node.right)
        if isinstance(node.op, ast.Add):
            return _add(left, right)
        if isinstance(node.op, ast.Sub):
            return _add(left, right, -1.0)
        if isinstance(node.op, ast.Mult):
            return _mul(left, right)
        if isinstance(node.op, ast.Div):
            if set(right) - {(0, 0)} or right.get((0, 0), 0.0) == 0.0:
                raise DomainError("division is only allowed by a nonzero constant")
            return {k: v / right[(0, 0)] for k, v in left.items()}
        if isinstance(node.op, ast.Pow):
            if set(right) - {(0, 0)}:
                raise DomainError("exponent must be a constant")
            e = right.get((0, 0), 0.0)
            if e != int(e) or e < 0:
                raise DomainError("exponent must be a nonnegative integer")
            out = {(0, 0): 1.0}
            for _ in range(int(e)):
                out = _mul(out, left)
            return out
    raise DomainError(f"unsupported syntax in polynomial expression: {ast.dump(node)[:60]}")


def parse_polynomial(text) -> Polynomial:
    """Parse a number or a polynomial string in y1, y2."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return Polynomial.constant(float(text))
    if not isinstance(text, str):
        raise DomainError(f"expected a number or a polynomial string, got {type(text).__name__}")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise DomainError(f"cannot parse {text!r}: {exc.msg}") from None
    return Polynomial.from_dict(_eval(tree))


def parse_matrix(text):
    """A 2x2 matrix of polynomials from a nested list of numbers or strings.

    Returns a callable y -> ndarray.
    """
    if isinstance(text, str):
        raise DomainError("a matrix must be given as a 2x2 nested list")
    rows = [[parse_polynomial(e) for e in row] for row in text]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise DomainError("matrix must be 2x2")

    def evaluate(y):
        return np.array([[p(y) for p in row] for row in rows])

    return evaluate
