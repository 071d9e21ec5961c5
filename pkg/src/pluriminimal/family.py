"""Explicit pluriminimal maps C^2 -> R^6 from two entire functions f, g.

With x = z1, y = z2 and P1 = xy, P3 = x, P5 = y, the quadratic relation
dP1.dP2 = dP3.dP4 + dP5.dP6 reduces to a first-order linear system whose
general solution is

    P2 = -(g'(x) + f'(y)) / 2
    P4 = f(y) - y (g'(x) + f'(y)) / 2
    P6 = g(x) - x (g'(x) + f'(y)) / 2

Each pair of primitives (Q1, Q2) becomes the two real coordinates
Re(Q1 + Q2), Im(Q1 - Q2), whose forms contribute 4 dQ1.dQ2 to the
conformality tensor. Pairing (P1, -P2), (P3, P4), (P5, P6) makes the three
contributions cancel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .expr import ExprError, HoloExpr, compose, differentiate, evaluate_mp, parse
from .jets import jet_batch
from .weierstrass import (
    WeierstrassData,
    conformality_matrices,
    form_values,
    immerse_batch,
    real_jacobian,
    sample_polydisk,
)


class RelationError(ValueError):
    """The six functions do not satisfy the quadratic relation."""


@dataclass(frozen=True)
class FamilyInput:
    f: HoloExpr
    g: HoloExpr

    def __post_init__(self):
        if self.f.arity != 1 or self.g.arity != 1:
            raise ExprError("f and g must be functions of one variable")

    @classmethod
    def parse(cls, f: str, g: str) -> "FamilyInput":
        return cls(parse(f, 1), parse(g, 1))

    def to_json(self) -> dict:
        return {"f": str(self.f), "g": str(self.g)}

    @classmethod
    def from_json(cls, doc: dict) -> "FamilyInput":
        return cls.parse(doc["f"], doc["g"])


@dataclass(frozen=True)
class SixFunctions:
    P: Tuple[HoloExpr, ...]  # P[0] is P1

    def __post_init__(self):
        if len(self.P) != 6 or any(p.arity != 2 for p in self.P):
            raise ExprError("need six functions of two variables")

    def relation_residual(self, Z) -> float:
        """max over points of |dP1.dP2 - dP3.dP4 - dP5.dP6| (symmetric products)."""
        G = [jet_batch(p, np.atleast_2d(Z)).grad for p in self.P]

        def sym(a, b):
            return 0.5 * (a[:, :, None] * b[:, None, :] + b[:, :, None] * a[:, None, :])

        R = sym(G[0], G[1]) - sym(G[2], G[3]) - sym(G[4], G[5])
        return float(np.max(np.abs(R)))

    def system_residuals(self, Z) -> np.ndarray:
        """Residuals of y P2_x = P4_x, x P2_y = P6_y, y P2_y + x P2_x = P4_y + P6_x (N, 3)."""
        Z = np.atleast_2d(np.asarray(Z, complex))
        x, y = Z[:, 0], Z[:, 1]
        g2, g4, g6 = (jet_batch(self.P[i], Z).grad for i in (1, 3, 5))
        return np.stack(
            [
                y * g2[:, 0] - g4[:, 0],
                x * g2[:, 1] - g6[:, 1],
                y * g2[:, 1] + x * g2[:, 0] - g4[:, 1] - g6[:, 0],
            ],
            axis=1,
        )


def solve_family(inp: FamilyInput) -> SixFunctions:
    x, y = HoloExpr.var(0, 2), HoloExpr.var(1, 2)
    f_y = compose(inp.f, [y])
    g_x = compose(inp.g, [x])
    s = compose(differentiate(inp.g, 0), [x]) + compose(differentiate(inp.f, 0), [y])
    half = -0.5 * s
    P2 = half
    P4 = f_y + y * half
    P6 = g_x + x * half
    return SixFunctions((x * y, P2, x, P4, y, P6))


@dataclass(frozen=True)
class IsotropicPairs:
    """Pairs (Q1, Q2) realized as coordinates Re(Q1 + Q2), Im(Q1 - Q2)."""

    pairs: Tuple[Tuple[HoloExpr, HoloExpr], ...]

    def primitives(self) -> List[HoloExpr]:
        out = []
        for q1, q2 in self.pairs:
            out.append(q1 + q2)
            out.append(-1j * (q1 - q2))  # Im(w) = Re(-i w)
        return out

    def data(self, basepoint=None, constant=None) -> WeierstrassData:
        return WeierstrassData.from_primitives(self.primitives(), basepoint, constant)


def _relative_conformality(data: WeierstrassData, Z) -> float:
    W = form_values(data, Z)
    scale = np.max(np.sum(np.abs(W) ** 2, axis=1))
    res = np.max(np.abs(conformality_matrices(data, Z)))
    return float(res / max(scale, 1.0))


def validate_pairs(pairs: IsotropicPairs, samples: int = 50, tol: float = 1e-12, seed: int = 0):
    """Raise RelationError unless the paired data is conformal at random points."""
    data = pairs.data()
    Z = sample_polydisk(np.random.default_rng(seed), samples, data.m)
    res = _relative_conformality(data, Z)
    if res > tol:
        raise RelationError(f"paired forms are not conformal (relative residual {res:.3g})")
    return data


def split_pairs(six: SixFunctions, samples: int = 50, tol: float = 1e-12, seed: int = 0):
    """Isotropic pairs (P1, -P2), (P3, P4), (P5, P6) and their Weierstrass data."""
    Z = sample_polydisk(np.random.default_rng(seed), samples, 2)
    G = [jet_batch(p, Z).grad for p in six.P]
    scale = max(float(np.max(np.abs(np.stack(G)))) ** 2, 1.0)
    res = six.relation_residual(Z)
    if res > tol * scale:
        raise RelationError(f"quadratic relation fails (residual {res:.3g})")
    P = six.P
    pairs = IsotropicPairs(((P[0], -P[1]), (P[2], P[3]), (P[4], P[5])))
    return pairs, validate_pairs(pairs, samples, tol, seed)


def family_data(f: str, g: str) -> WeierstrassData:
    """Weierstrass data for the family member with the given f, g (text in z1)."""
    _, data = split_pairs(solve_family(FamilyInput.parse(f, g)))
    return data


# -- self-intersection search ------------------------------------------------------------


@dataclass
class SelfIntersection:
    p: np.ndarray
    q: np.ndarray
    distance: float  # image distance in double precision
    certified_distance: float  # re-evaluated at high precision
    separation: float  # |p - q|
    start: int

    def to_json(self) -> dict:
        def pt(z):
            return [[float(c.real), float(c.imag)] for c in z]

        return {
            "p": pt(self.p),
            "q": pt(self.q),
            "distance": self.distance,
            "certified_distance": self.certified_distance,
            "separation": self.separation,
            "start": self.start,
        }


def _residuals(data: WeierstrassData, X: np.ndarray, delta: float, weight: np.ndarray):
    """Residual vectors and jacobians for all starts; X has shape (S, 4m)."""
    S = X.shape[0]
    m = data.m
    p = X[:, :m] + 1j * X[:, m : 2 * m]
    q = X[:, 2 * m : 3 * m] + 1j * X[:, 3 * m :]
    pts = np.concatenate([p, q])
    jets = [jet_batch(P, pts) for P in data.primitives]
    vals = np.stack([j.value for j in jets], axis=1).real  # (2S, n)
    Df = real_jacobian(np.stack([j.grad for j in jets], axis=1))  # (2S, n, 2m)
    r_img = vals[:S] - vals[S:]
    J_img = np.concatenate([Df[:S], -Df[S:]], axis=2)
    d = X[:, : 2 * m] - X[:, 2 * m :]
    sep = np.linalg.norm(d, axis=1)
    active = sep < delta
    r_pen = np.where(active, weight * (delta - sep), 0.0)
    unit = d / np.maximum(sep, 1e-300)[:, None]
    g_pen = np.where(active[:, None], weight[:, None] * unit, 0.0)
    J_pen = np.concatenate([-g_pen, g_pen], axis=1)
    r = np.concatenate([r_img, r_pen[:, None]], axis=1)
    J = np.concatenate([J_img, J_pen[:, None, :]], axis=1)
    return r, J, sep


def _levenberg_marquardt(data, X, delta, weight, iters):
    S, k = X.shape
    lam = np.full(S, 1e-3)
    alive = np.ones(S, bool)
    r, J, _ = _residuals(data, X, delta, weight)
    cost = np.sum(r * r, axis=1)
    for _ in range(iters):
        JtJ = np.einsum("sik,sil->skl", J, J)
        g = np.einsum("sik,si->sk", J, r)
        A = JtJ + lam[:, None, None] * (np.eye(k) * (1.0 + np.einsum("skk->sk", JtJ)[:, :, None]))
        try:
            step = -np.linalg.solve(A, g[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            step = -g * 1e-3
        step[~alive] = 0.0
        Xn = X + step
        with np.errstate(all="ignore"):
            bad = ~np.all(np.isfinite(Xn), axis=1) | (np.max(np.abs(Xn), axis=1) > 1e3)
        Xn[bad] = X[bad]
        try:
            rn, Jn, _ = _residuals(data, Xn, delta, weight)
        except ArithmeticError:
            break
        cn = np.sum(rn * rn, axis=1)
        accept = (cn < cost) & alive & ~bad
        X = np.where(accept[:, None], Xn, X)
        r = np.where(accept[:, None], rn, r)
        J = np.where(accept[:, None, None], Jn, J)
        cost = np.where(accept, cn, cost)
        lam = np.where(accept, lam / 3.0, np.minimum(lam * 4.0, 1e12))
        alive &= cost > 1e-32
        if not alive.any():
            break
    return X, cost


def self_intersect(
    data: WeierstrassData,
    starts: int = 64,
    seed: int = 0,
    delta: float = 0.1,
    radius: float = 3.0,
    iters: int = 200,
    threshold: float = 1e-8,
    max_doublings: int = 8,
) -> Optional[SelfIntersection]:
    """Multistart search for p != q with f(p) = f(q).

    Minimizes |f(p) - f(q)|^2 plus a penalty on |p - q| < delta with a
    batched Levenberg-Marquardt iteration driven by exact jet jacobians. The
    penalty weight of a start is doubled while its solution violates the
    separation constraint. The best pair is re-evaluated at 50 digits and
    returned only if its image distance is below ``threshold``.
    """
    if data.primitives is None:
        raise ValueError("self_intersect needs primitives")
    m = data.m
    rng = np.random.default_rng(seed)
    P0 = sample_polydisk(rng, starts, m, radius)
    Q0 = sample_polydisk(rng, starts, m, radius)
    X = np.concatenate([P0.real, P0.imag, Q0.real, Q0.imag], axis=1)
    weight = np.ones(starts)
    for _ in range(max_doublings + 1):
        X, cost = _levenberg_marquardt(data, X, delta, weight, iters)
        sep = np.linalg.norm(X[:, : 2 * m] - X[:, 2 * m :], axis=1)
        violated = sep < delta
        if not violated.any():
            break
        weight = np.where(violated, 2.0 * weight, weight)
    p = X[:, :m] + 1j * X[:, m : 2 * m]
    q = X[:, 2 * m : 3 * m] + 1j * X[:, 3 * m :]
    dist = np.linalg.norm(immerse_batch(data, p) - immerse_batch(data, q), axis=1)
    dist = np.where(sep >= delta, dist, np.inf)
    best = int(np.argmin(dist))
    if not np.isfinite(dist[best]) or dist[best] >= threshold:
        return None
    cert = certified_distance(data, p[best], q[best])
    if cert >= threshold:
        return None
    return SelfIntersection(p[best], q[best], float(dist[best]), cert, float(sep[best]), best)


def certified_distance(data: WeierstrassData, p, q, dps: int = 50) -> float:
    """|f(p) - f(q)| with primitives evaluated in high precision."""
    import mpmath

    with mpmath.workdps(dps):
        total = mpmath.mpf(0)
        for P in data.primitives:
            d = evaluate_mp(P, p, dps) - evaluate_mp(P, q, dps)
            total += mpmath.re(d) ** 2
        return float(mpmath.sqrt(total))


def cauchy_riemann_residual(data: WeierstrassData, z) -> float:
    """How far the map is from holomorphic for the pairing (f1 + i f2, f3 + i f4, ...).

    Returns max |d/dzbar| of the paired complex coordinates at ``z``.
    """
    W = form_values(data, np.asarray(z, complex)[None, :])[0]
    Df = real_jacobian(W)  # (n, 2m)
    m = data.m
    F = Df[0::2] + 1j * Df[1::2]  # complex coordinates, derivatives along x then y
    dzbar = 0.5 * (F[:, :m] + 1j * F[:, m:])
    return float(np.max(np.abs(dzbar)))
