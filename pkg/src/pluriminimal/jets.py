"""Forward propagation of second-order complex jets through expression trees.

A jet carries value, gradient and Hessian of a holomorphic function. All
arrays carry a leading batch axis so a single tree walk evaluates many points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import (
    Add,
    Const,
    Func,
    HoloExpr,
    Mul,
    Neg,
    Node,
    NumericDomainError,
    Pow,
    Var,
    _as_points,
)


def _outer(a, b):
    return a[:, :, None] * b[:, None, :]


def _sym_outer(a, b):
    # a_j b_k + b_j a_k, exactly symmetric in floating point
    return _outer(a, b) + _outer(b, a)


@dataclass(frozen=True)
class Jet2:
    """value: (N,), grad: (N, m), hess: (N, m, m) complex; hess symmetric."""

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    def __add__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.grad, -self.hess)

    def __mul__(self, other: "Jet2") -> "Jet2":
        a, b = self, other
        va, vb = a.value[:, None], b.value[:, None]
        return Jet2(
            a.value * b.value,
            va * b.grad + vb * a.grad,
            va[:, :, None] * b.hess + vb[:, :, None] * a.hess + _sym_outer(a.grad, b.grad),
        )

    def chain(self, f0, f1, f2) -> "Jet2":
        """Compose with a scalar function given its value and first two derivatives at self.value."""
        g = self.grad
        return Jet2(
            f0,
            f1[:, None] * g,
            f2[:, None, None] * _outer(g, g) + f1[:, None, None] * self.hess,
        )

    def power(self, k: int) -> "Jet2":
        u = self.value
        if k == 0:
            return _constant(np.ones_like(u), self.grad.shape[1])
        if k == 1:
            return self
        uk2 = u ** (k - 2)
        uk1 = uk2 * u
        return self.chain(uk1 * u, k * uk1, k * (k - 1) * uk2)

    def __getitem__(self, i) -> "Jet2":
        return Jet2(self.value[i], self.grad[i], self.hess[i])


def _constant(v: np.ndarray, m: int) -> Jet2:
    n = v.shape[0]
    return Jet2(v, np.zeros((n, m), complex), np.zeros((n, m, m), complex))


def _jet(node: Node, Z: np.ndarray) -> Jet2:
    n, m = Z.shape
    if isinstance(node, Const):
        return _constant(np.full(n, complex(node.value)), m)
    if isinstance(node, Var):
        g = np.zeros((n, m), complex)
        g[:, node.index] = 1.0
        return Jet2(Z[:, node.index].copy(), g, np.zeros((n, m, m), complex))
    if isinstance(node, Add):
        out = _jet(node.terms[0], Z)
        for t in node.terms[1:]:
            out = out + _jet(t, Z)
        return out
    if isinstance(node, Mul):
        out = _jet(node.factors[0], Z)
        for f in node.factors[1:]:
            out = out * _jet(f, Z)
        return out
    if isinstance(node, Pow):
        return _jet(node.base, Z).power(node.exponent)
    if isinstance(node, Neg):
        return -_jet(node.arg, Z)
    u = _jet(node.arg, Z)
    if node.name == "exp":
        e = np.exp(u.value)
        return u.chain(e, e, e)
    s, c = np.sin(u.value), np.cos(u.value)
    if node.name == "sin":
        return u.chain(s, c, -s)
    return u.chain(c, -s, -c)


def jet_batch(e: HoloExpr, Z) -> Jet2:
    """Jets at a batch of points Z with shape (N, m)."""
    Z, _ = _as_points(Z, e.arity)
    with np.errstate(all="ignore"):
        j = _jet(e.root, Z)
    if not (
        np.all(np.isfinite(j.value))
        and np.all(np.isfinite(j.grad))
        and np.all(np.isfinite(j.hess))
    ):
        raise NumericDomainError(f"non-finite jet evaluating {e}")
    return j


def eval_jet2(e: HoloExpr, z) -> Jet2:
    """Value, gradient and Hessian of ``e`` at a single point ``z`` (length m)."""
    Z, single = _as_points(z, e.arity)
    j = jet_batch(e, Z)
    return j[0] if single else j
