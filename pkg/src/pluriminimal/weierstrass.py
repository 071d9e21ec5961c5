"""Weierstrass data on C^m, the immersion it defines, and its local geometry.

Real coordinates are z_k = x_k + i y_k with frame order (x_1..x_m, y_1..y_m)
and complex structure J(d/dx_k) = d/dy_k. For a form with coefficient matrix
W (n x m), A = Re W^T and B = Im W^T (both m x n), so that the real jacobian
of the immersion is [A^T, -B^T] and the induced metric is
[[AA^T, -AB^T], [-BA^T, BB^T]].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .expr import ExprError, HoloExpr, differentiate, evaluate, parse
from .jets import jet_batch


class RankDeficientError(ValueError):
    """The tangent image at a point has dimension < 2m."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not converge."""


class DataFormatError(ValueError):
    """Malformed serialized Weierstrass data."""


@dataclass(frozen=True)
class OneForm:
    """sum_j coeffs[j] dz_j"""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if not self.coeffs:
            raise ExprError("a form needs at least one coefficient")
        if len({c.arity for c in self.coeffs}) != 1 or self.coeffs[0].arity != len(
            self.coeffs
        ):
            raise ExprError("coefficient arities must all equal the number of coefficients")

    @property
    def arity(self) -> int:
        return len(self.coeffs)

    @classmethod
    def exact(cls, primitive: HoloExpr) -> "OneForm":
        return cls(tuple(differentiate(primitive, j) for j in range(primitive.arity)))


@dataclass(frozen=True, eq=False)
class WeierstrassData:
    forms: tuple
    primitives: Optional[tuple] = None
    basepoint: np.ndarray = None
    constant: np.ndarray = None

    def __post_init__(self):
        forms = tuple(self.forms)
        if not forms:
            raise ExprError("no forms")
        m = forms[0].arity
        if any(f.arity != m for f in forms):
            raise ExprError("all forms must share one arity")
        object.__setattr__(self, "forms", forms)
        n = len(forms)
        if self.primitives is not None:
            prims = tuple(self.primitives)
            if len(prims) != n or any(p.arity != m for p in prims):
                raise ExprError("need one primitive of arity m per form")
            object.__setattr__(self, "primitives", prims)
        bp = np.zeros(m, complex) if self.basepoint is None else np.asarray(self.basepoint, complex)
        c = np.zeros(n) if self.constant is None else np.asarray(self.constant, float)
        if bp.shape != (m,) or c.shape != (n,):
            raise ExprError("basepoint must have m entries and constant n entries")
        object.__setattr__(self, "basepoint", bp)
        object.__setattr__(self, "constant", c)
        if n < 2 * m:
            warnings.warn(f"n={n} < 2m={2 * m}: the map cannot be an immersion", stacklevel=3)

    @property
    def m(self) -> int:
        return self.forms[0].arity

    @property
    def n(self) -> int:
        return len(self.forms)

    @classmethod
    def from_primitives(cls, primitives: Sequence[HoloExpr], basepoint=None, constant=None):
        prims = tuple(primitives)
        return cls(tuple(OneForm.exact(p) for p in prims), prims, basepoint, constant)

    def with_constant(self, constant) -> "WeierstrassData":
        return WeierstrassData(self.forms, self.primitives, self.basepoint, constant)

    def without_primitives(self) -> "WeierstrassData":
        return WeierstrassData(self.forms, None, self.basepoint, self.constant)

    def primitive_mismatch(self, Z) -> float:
        """max |d(primitive_i)/dz_j - coeff_ij| over the points; 0 without primitives."""
        if self.primitives is None:
            return 0.0
        W = form_values(self, Z)
        G = np.stack([jet_batch(p, np.atleast_2d(Z)).grad for p in self.primitives], axis=1)
        return float(np.max(np.abs(G - W)))


# -- evaluation helpers ------------------------------------------------------------


def sample_polydisk(rng: np.random.Generator, count: int, m: int, radius: float = 2.0):
    """Uniform samples from the polydisk of the given radius, shape (count, m)."""
    r = radius * np.sqrt(rng.random((count, m)))
    t = 2 * np.pi * rng.random((count, m))
    return r * np.exp(1j * t)


def form_values(data: WeierstrassData, Z) -> np.ndarray:
    """Coefficient matrices W[p, i, j] = omega_ij(Z[p]), shape (N, n, m)."""
    Z = np.atleast_2d(np.asarray(Z, complex))
    return np.stack(
        [np.stack([evaluate(c, Z) for c in f.coeffs], axis=-1) for f in data.forms], axis=1
    )


def form_jets(data: WeierstrassData, Z):
    """W (N, n, m) and dW[p, i, j, k] = d omega_ij / dz_k (N, n, m, m) from coefficient jets."""
    Z = np.atleast_2d(np.asarray(Z, complex))
    W, dW = [], []
    for f in data.forms:
        jets = [jet_batch(c, Z) for c in f.coeffs]
        W.append(np.stack([j.value for j in jets], axis=-1))
        dW.append(np.stack([j.grad for j in jets], axis=1))
    return np.stack(W, axis=1), np.stack(dW, axis=1)


def _second_order(data: WeierstrassData, Z):
    """W and complex Hessians H[p, i, j, k] of the primitives."""
    Z = np.atleast_2d(np.asarray(Z, complex))
    if data.primitives is not None:
        jets = [jet_batch(p, Z) for p in data.primitives]
        return np.stack([j.grad for j in jets], axis=1), np.stack([j.hess for j in jets], axis=1)
    return form_jets(data, Z)


def real_jacobian(W: np.ndarray) -> np.ndarray:
    """Columns d/dx_k -> Re W[:, k], d/dy_k -> -Im W[:, k]; shape (..., n, 2m)."""
    return np.concatenate([W.real, -W.imag], axis=-1)


def complex_structure(m: int) -> np.ndarray:
    """Matrix of J on the real frame (x_1..x_m, y_1..y_m)."""
    J = np.zeros((2 * m, 2 * m))
    J[m:, :m] = np.eye(m)
    J[:m, m:] = -np.eye(m)
    return J


# -- conformality, closedness, rank --------------------------------------------------


@dataclass
class ConformalityTensor:
    """Values Omega(d_j, d_k) = sum_i omega_ij omega_ik at a point."""

    entries: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.entries)))


def conformality_matrices(data: WeierstrassData, Z) -> np.ndarray:
    W = form_values(data, Z)
    return np.einsum("pij,pik->pjk", W, W)


def conformality(data: WeierstrassData, z) -> ConformalityTensor:
    return ConformalityTensor(conformality_matrices(data, np.asarray(z, complex)[None, :])[0])


def conformality_symbolic(data: WeierstrassData) -> List[HoloExpr]:
    """Upper-triangle entries sum_i omega_ij omega_ik as expressions, row-major j <= k."""
    m = data.m
    out = []
    for j in range(m):
        for k in range(j, m):
            e = HoloExpr.const(0, m)
            for f in data.forms:
                e = e + f.coeffs[j] * f.coeffs[k]
            out.append(e)
    return out


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst: float
    tolerance: float
    worst_point: Optional[np.ndarray] = None
    worst_form: Optional[int] = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "check": self.name,
            "passed": bool(self.passed),
            "worst": float(self.worst),
            "tolerance": float(self.tolerance),
        }
        if self.worst_point is not None:
            out["worst_point"] = [[float(z.real), float(z.imag)] for z in self.worst_point]
        if self.worst_form is not None:
            out["worst_form"] = int(self.worst_form)
        out.update(self.detail)
        return out


def check_conformal(data: WeierstrassData, Z, tol: float = 1e-12) -> CheckReport:
    Z = np.atleast_2d(np.asarray(Z, complex))
    res = np.max(np.abs(conformality_matrices(data, Z)), axis=(1, 2))
    p = int(np.argmax(res))
    return CheckReport("conformality", bool(res[p] < tol), float(res[p]), tol, Z[p])


def check_closed(data: WeierstrassData, Z, tol: float = 1e-10) -> CheckReport:
    """max over forms, j<k and points of |d omega_ij/dz_k - d omega_ik/dz_j|."""
    Z = np.atleast_2d(np.asarray(Z, complex))
    if len(Z) == 0:
        raise ValueError("need at least one sample point")
    _, dW = form_jets(data, Z)
    asym = np.abs(dW - np.swapaxes(dW, 2, 3)).max(axis=(2, 3))  # (N, n)
    p, i = np.unravel_index(int(np.argmax(asym)), asym.shape)
    worst = float(asym[p, i])
    return CheckReport("closed", worst < tol, worst, tol, Z[p], int(i))


def check_rank(data: WeierstrassData, Z, rel_tol: float = 1e-9) -> CheckReport:
    """Numerical rank of the complex jacobian (omega_ik) at each point."""
    Z = np.atleast_2d(np.asarray(Z, complex))
    if data.n < data.m:
        raise ValueError("need n >= m forms")
    s = np.linalg.svd(form_values(data, Z), compute_uv=False)  # (N, m) descending
    smax = s[:, 0]
    ratio = np.where(smax > 0, s[:, -1] / np.where(smax > 0, smax, 1.0), 0.0)
    ranks = np.sum(s > rel_tol * smax[:, None], axis=1)
    ranks[smax == 0] = 0
    p = int(np.argmin(ratio))
    return CheckReport(
        "rank",
        bool(np.all(ranks == data.m)),
        float(ratio[p]),
        rel_tol,
        Z[p],
        detail={"min_rank": int(ranks.min()), "smallest_singular_value": float(s[p, -1])},
    )


# -- the immersion ---------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def _gl(data, a, b, t0, t1):
    t = t0 + (t1 - t0) * _GL_NODES
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    W = form_values(data, pts)  # (K, n, m)
    return (t1 - t0) * np.einsum("k,kij,j->i", _GL_WEIGHTS, W, b - a)


def segment_integral(data, a, b, tol: float = 1e-12, max_depth: int = 40) -> np.ndarray:
    """Integral of (omega_1..omega_n) along the straight segment a -> b (complex n-vector).

    Adaptive bisection with a 10-point Gauss-Legendre rule; an interval is
    accepted when the rule and its two halves agree to within the interval's
    share of ``tol``, floored at the rounding level of the estimate.
    """
    a = np.asarray(a, complex)
    b = np.asarray(b, complex)
    total = np.zeros(data.n, complex)
    stack = [(0.0, 1.0, _gl(data, a, b, 0.0, 1.0), 0)]
    eps = np.finfo(float).eps
    while stack:
        t0, t1, whole, depth = stack.pop()
        mid = 0.5 * (t0 + t1)
        left = _gl(data, a, b, t0, mid)
        right = _gl(data, a, b, mid, t1)
        fine = left + right
        err = np.max(np.abs(fine - whole))
        share = tol * (t1 - t0)
        floor = 64 * eps * max(np.max(np.abs(fine)), 1.0)
        if err <= max(share, floor):
            total += fine
        elif depth >= max_depth:
            raise QuadratureError(f"no convergence on [{t0}, {t1}] (error {err:.3g})")
        else:
            stack.append((mid, t1, right, depth + 1))
            stack.append((t0, mid, left, depth + 1))
    return total


def immerse(
    data: WeierstrassData,
    Q,
    method: str = "auto",
    via: Optional[Sequence] = None,
    tol: float = 1e-12,
) -> np.ndarray:
    """f(Q) = Re int_P^Q (omega_1..omega_n) + const, P the basepoint.

    ``method`` is "primitive", "quadrature" or "auto" (primitive when present).
    Quadrature follows the polyline basepoint -> via... -> Q.
    """
    Q = np.asarray(Q, complex)
    if method == "auto":
        method = "primitive" if data.primitives is not None and via is None else "quadrature"
    if method == "primitive":
        if data.primitives is None:
            raise ValueError("data has no primitives")
        pts = np.stack([Q, data.basepoint])
        vals = np.array([evaluate(p, pts) for p in data.primitives])  # (n, 2)
        return (vals[:, 0] - vals[:, 1]).real + data.constant
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    path = [data.basepoint] + [np.asarray(v, complex) for v in (via or [])] + [Q]
    total = np.zeros(data.n, complex)
    for a, b in zip(path[:-1], path[1:]):
        total += segment_integral(data, a, b, tol=tol / (len(path) - 1))
    return total.real + data.constant


def immerse_batch(data: WeierstrassData, Q) -> np.ndarray:
    """Primitive-path immersion at many points, shape (N, n)."""
    if data.primitives is None:
        return np.stack([immerse(data, q) for q in np.atleast_2d(Q)])
    Q = np.atleast_2d(np.asarray(Q, complex))
    base = np.array([evaluate(p, data.basepoint) for p in data.primitives])
    vals = np.stack([evaluate(p, Q) for p in data.primitives], axis=1)
    return (vals - base[None, :]).real + data.constant[None, :]


# -- metric and second fundamental form --------------------------------------------------


@dataclass
class MetricBlocks:
    A: np.ndarray  # m x n, Re omega_jk transposed
    B: np.ndarray  # m x n, Im omega_jk transposed
    metric: np.ndarray  # 2m x 2m

    @property
    def AAt(self):
        return self.A @ self.A.T

    @property
    def ABt(self):
        return self.A @ self.B.T

    @property
    def BAt(self):
        return self.B @ self.A.T

    @property
    def BBt(self):
        return self.B @ self.B.T


def metric_blocks(data: WeierstrassData, z) -> MetricBlocks:
    W = form_values(data, np.asarray(z, complex)[None, :])[0]
    A, B = W.real.T, W.imag.T
    AAt, ABt, BAt, BBt = A @ A.T, A @ B.T, B @ A.T, B @ B.T
    metric = np.block([[AAt, -ABt], [-BAt, BBt]])
    return MetricBlocks(A, B, metric)


def j_invariance_residual(metric: np.ndarray) -> float:
    """max |g(JX, JY) - g(X, Y)| over frame vectors."""
    J = complex_structure(metric.shape[0] // 2)
    return float(np.max(np.abs(J.T @ metric @ J - metric)))


def _real_hessian(H: np.ndarray) -> np.ndarray:
    """Real second derivatives of Re P from complex Hessians H (n, m, m) -> (n, 2m, 2m)."""
    Ht = np.swapaxes(H, 1, 2)
    top = np.concatenate([Ht.real, -Ht.imag], axis=2)
    bottom = np.concatenate([-Ht.imag, -Ht.real], axis=2)
    return np.concatenate([top, bottom], axis=1)


def normal_frame(Df: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (n x (n - 2m)) of the normal space by Gram-Schmidt.

    Columns of the jacobian come first, then the standard basis completes.
    """
    n, k = Df.shape
    scale = max(np.max(np.abs(Df)), 1.0)
    basis: List[np.ndarray] = []
    candidates = [Df[:, c] for c in range(k)] + list(np.eye(n))
    tangent = 0
    for idx, v in enumerate(candidates):
        w = v.astype(float).copy()
        for _ in range(2):
            for b in basis:
                w -= (b @ w) * b
        nrm = np.linalg.norm(w)
        ref = scale if idx < k else 1.0
        if nrm > rel_tol * ref:
            basis.append(w / nrm)
            if idx < k:
                tangent += 1
        if len(basis) == n:
            break
    if tangent < k:
        raise RankDeficientError(f"tangent image has rank {tangent} < {k}")
    return np.stack(basis[k:], axis=1) if n > k else np.zeros((n, 0))


@dataclass
class SecondFundamentalForm:
    sff: np.ndarray  # (2m, 2m, n - 2m)
    circularity_residual: float
    mean_curvature_norms: np.ndarray
    metric: np.ndarray

    def __call__(self, X, Y) -> np.ndarray:
        return np.einsum("a,abr,b->r", X, self.sff, Y)


def second_fundamental_form(data: WeierstrassData, z, directions=()) -> SecondFundamentalForm:
    """B in the coordinate frame projected on a Gram-Schmidt normal frame.

    ``directions`` are complex tangent vectors v in C^m; for each the norm of
    B(v, v) + B(Jv, Jv) is reported with v normalized in the induced metric.
    """
    z = np.asarray(z, complex)
    W, H = _second_order(data, z[None, :])
    W, H = W[0], H[0]
    Df = real_jacobian(W)
    N = normal_frame(Df)
    hess = _real_hessian(H)  # (n, 2m, 2m)
    B = np.einsum("ir,iab->abr", N, hess)
    m = data.m
    J = complex_structure(m)
    BJ_right = np.einsum("acr,cb->abr", B, J)  # B(e_a, J e_b)
    BJ_left = np.einsum("ca,cbr->abr", J, B)  # B(J e_a, e_b)
    circ = float(np.max(np.linalg.norm(BJ_right - BJ_left, axis=2))) if B.size else 0.0
    G = Df.T @ Df
    norms = []
    for v in directions:
        v = np.asarray(v, complex)
        X = np.concatenate([v.real, v.imag])
        X = X / np.sqrt(X @ G @ X)
        JX = J @ X
        vec = np.einsum("a,abr,b->r", X, B, X) + np.einsum("a,abr,b->r", JX, B, JX)
        norms.append(float(np.linalg.norm(vec)))
    return SecondFundamentalForm(B, circ, np.array(norms), G)


def surface_mean_curvature_fd(fn, h: float = 1e-4) -> float:
    """Norm of the mean curvature vector (trace of B) at (0, 0) of a surface
    fn(s, u) -> R^n, from central finite differences."""
    f = {(a, b): fn(a * h, b * h) for a in (-1, 0, 1) for b in (-1, 0, 1)}
    fs = (f[1, 0] - f[-1, 0]) / (2 * h)
    fu = (f[0, 1] - f[0, -1]) / (2 * h)
    fss = (f[1, 0] - 2 * f[0, 0] + f[-1, 0]) / h**2
    fuu = (f[0, 1] - 2 * f[0, 0] + f[0, -1]) / h**2
    fsu = (f[1, 1] - f[1, -1] - f[-1, 1] + f[-1, -1]) / (4 * h * h)
    return _mean_curvature(fs, fu, fss, fsu, fuu)


def _mean_curvature(fs, fu, fss, fsu, fuu) -> float:
    T = np.stack([fs, fu], axis=1)
    g = T.T @ T
    ginv = np.linalg.inv(g)
    Qm, _ = np.linalg.qr(T)
    trace = ginv[0, 0] * fss + 2 * ginv[0, 1] * fsu + ginv[1, 1] * fuu
    normal_part = trace - Qm @ (Qm.T @ trace)
    return float(np.linalg.norm(normal_part))


def line_mean_curvature_fd(data: WeierstrassData, z, v, h: float = 1e-4) -> float:
    """Finite-difference mean curvature at t=0 of t -> f(z + t v), t = s + iu."""
    z = np.asarray(z, complex)
    v = np.asarray(v, complex)

    def fn(s, u):
        return immerse_batch(data, z + (s + 1j * u) * v)[0]

    return surface_mean_curvature_fd(fn, h)


# -- per-point report --------------------------------------------------------------------


@dataclass
class GeometryReport:
    point: np.ndarray
    conformality_residual: float
    jacobian_rank: int
    smallest_singular_value: float
    metric: np.ndarray
    blocks: dict
    sff: Optional[np.ndarray]
    mean_curvature_norms: np.ndarray
    circularity_residual: float


def geometry_report(data: WeierstrassData, z, directions=()) -> GeometryReport:
    z = np.asarray(z, complex)
    W = form_values(data, z[None, :])[0]
    s = np.linalg.svd(W, compute_uv=False)
    rank = int(np.sum(s > 1e-9 * s[0])) if s[0] > 0 else 0
    mb = metric_blocks(data, z)
    blocks = {"AAt": mb.AAt, "ABt": mb.ABt, "BAt": mb.BAt, "BBt": mb.BBt}
    if rank == data.m:
        sf = second_fundamental_form(data, z, directions)
        sff, mc, circ = sf.sff, sf.mean_curvature_norms, sf.circularity_residual
    else:
        sff, mc, circ = None, np.full(len(directions), np.nan), float("nan")
    return GeometryReport(
        z, conformality(data, z).residual, rank, float(s[-1]), mb.metric, blocks, sff, mc, circ
    )


# -- serialization ---------------------------------------------------------------------


def data_to_json(data: WeierstrassData) -> dict:
    return {
        "arity": data.m,
        "basepoint": [[float(z.real), float(z.imag)] for z in data.basepoint],
        "constant": [float(c) for c in data.constant],
        "forms": [{"coeffs": [str(c) for c in f.coeffs]} for f in data.forms],
        "primitives": None if data.primitives is None else [str(p) for p in data.primitives],
    }


def data_from_json(doc: dict) -> WeierstrassData:
    try:
        m = int(doc["arity"])
        forms = tuple(OneForm(tuple(parse(s, m) for s in f["coeffs"])) for f in doc["forms"])
        prims = doc.get("primitives")
        prims = None if prims is None else tuple(parse(s, m) for s in prims)
        bp = doc.get("basepoint")
        bp = None if bp is None else [complex(a, b) for a, b in bp]
        const = doc.get("constant")
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"malformed Weierstrass data: {exc}") from None
    return WeierstrassData(forms, prims, bp, const)


# -- full condition suite -------------------------------------------------------------------


@dataclass
class Tolerances:
    closed: float = 1e-10
    conformality: float = 1e-12
    rank: float = 1e-9
    mean_curvature: float = 1e-6
    primitive: float = 1e-10

    def __post_init__(self):
        for name, v in vars(self).items():
            if not v > 0:
                raise ValueError(f"tolerance {name} must be > 0")


def verify_data(
    data: WeierstrassData,
    rng: np.random.Generator,
    samples: int = 100,
    lines: int = 10,
    radius: float = 2.0,
    tol: Optional[Tolerances] = None,
) -> List[CheckReport]:
    """Closedness, conformality, rank and complex-line minimality at random points.

    The minimality probe only runs when the first three pass, since the
    restricted surface is otherwise either ill-defined or degenerate.
    """
    tol = tol or Tolerances()
    Z = sample_polydisk(rng, samples, data.m, radius)
    reports = [
        check_closed(data, Z, tol.closed),
        check_conformal(data, Z, tol.conformality),
    ]
    if data.n >= data.m:
        reports.append(check_rank(data, Z, tol.rank))
    else:
        reports.append(CheckReport("rank", False, 0.0, tol.rank, detail={"reason": "n < m"}))
    if data.primitives is not None:
        mis = data.primitive_mismatch(Z)
        reports.append(CheckReport("primitives", mis < tol.primitive, mis, tol.primitive))
    idx = rng.integers(0, samples, size=lines)
    V = sample_polydisk(rng, lines, data.m, 1.0)
    if all(r.passed for r in reports):
        mc = np.array(
            [line_mean_curvature_fd(data, Z[i], v / np.linalg.norm(v)) for i, v in zip(idx, V)]
        )
        p = int(np.argmax(mc)) if lines else 0
        worst = float(mc[p]) if lines else 0.0
        reports.append(
            CheckReport(
                "minimality",
                worst < tol.mean_curvature,
                worst,
                tol.mean_curvature,
                Z[idx[p]] if lines else None,
            )
        )
    else:
        reports.append(
            CheckReport(
                "minimality", True, 0.0, tol.mean_curvature, detail={"skipped": "earlier check failed"}
            )
        )
    return reports
