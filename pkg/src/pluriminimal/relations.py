"""Quadratic relations among exact polynomial 1-forms on the affine chart of CP^m.

V is spanned by the differentials of the monomials of degree 1..n. The map
mu sends a symmetric matrix gamma over that basis to the polynomial symmetric
2-tensor sum_ab gamma_ab dF_a dF_b; its kernel is computed exactly by
fraction-free integer elimination. A kernel element is split by congruence
into squares, sum_j dF_j dF_j = 0, which is Weierstrass data.

Column coordinates: c_aa = gamma_aa and c_ab = 2 gamma_ab for a < b. Row
(monomial, j <= k) holds twice the dz_j dz_k entry of the symmetric tensor,
which keeps every matrix entry an integer.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb, gcd
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exact import ZERO, GaussRational, Poly, poly_degree
from .expr import Const, HoloExpr, Mul, Pow, Var, fold, to_polynomial, Add
from .jets import jet_batch
from .weierstrass import WeierstrassData, check_rank, sample_polydisk


class SizeGuardError(RuntimeError):
    """Problem exceeds the configured size cap."""


def monomials(m: int, degree: int, low: int = 0) -> List[Tuple[int, ...]]:
    """Exponent tuples of total degree low..degree, by degree then x1-heavy first."""
    out = []
    for d in range(low, degree + 1):
        level = []
        for combo in combinations_with_replacement(range(m), d):
            e = [0] * m
            for j in combo:
                e[j] += 1
            level.append(tuple(e))
        out.extend(sorted(set(level), reverse=True))
    return out


@dataclass(frozen=True)
class PolyBasis:
    m: int
    n: int
    monomials: Tuple[Tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("need m >= 1 and n >= 1")
        mons = tuple(monomials(self.m, self.n, low=1))
        object.__setattr__(self, "monomials", mons)
        assert len(mons) == self.dimension

    @property
    def dimension(self) -> int:
        return comb(self.n + self.m, self.m) - 1

    @property
    def sym2_dimension(self) -> int:
        d = self.dimension
        return d * (d + 1) // 2

    def index(self) -> Dict[Tuple[int, ...], int]:
        return {e: i for i, e in enumerate(self.monomials)}

    def expr(self, a: int) -> HoloExpr:
        factors = [Pow(Var(j), k) for j, k in enumerate(self.monomials[a]) if k]
        return HoloExpr(fold(Mul(tuple(factors))), self.m)

    def pairs(self) -> List[Tuple[int, int]]:
        d = self.dimension
        return [(a, b) for a in range(d) for b in range(a, d)]


@dataclass(frozen=True)
class SymTensorSpace:
    """Polynomial symmetric 2-tensors of coefficient degree <= 2n - 2."""

    m: int
    n: int

    @property
    def degree(self) -> int:
        return 2 * self.n - 2

    @property
    def dimension(self) -> int:
        return self.m * (self.m + 1) // 2 * comb(self.degree + self.m, self.m)

    def rows(self) -> List[Tuple[Tuple[int, ...], int, int]]:
        slots = [(j, k) for j in range(self.m) for k in range(j, self.m)]
        return [(e, j, k) for e in monomials(self.m, self.degree) for j, k in slots]


@dataclass
class MuMatrix:
    basis: PolyBasis
    target: SymTensorSpace
    columns: List[Dict[int, int]]  # sparse integer columns, one per pair a <= b
    pairs: List[Tuple[int, int]]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.target.dimension, len(self.columns)

    def dense(self) -> List[List[int]]:
        nr, nc = self.shape
        rows = [[0] * nc for _ in range(nr)]
        for c, col in enumerate(self.columns):
            for r, v in col.items():
                rows[r][c] = v
        return rows

    def apply(self, vec: Sequence) -> List[GaussRational]:
        """Exact product mu . vec for a vector of Gauss rationals (or ints)."""
        out = [ZERO] * self.target.dimension
        for c, col in enumerate(self.columns):
            x = vec[c]
            if not x:
                continue
            for r, v in col.items():
                out[r] = out[r] + x * v
        return out

    def apply_float(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.target.dimension, complex)
        for c, col in enumerate(self.columns):
            if vec[c] != 0:
                for r, v in col.items():
                    out[r] += vec[c] * v
        return out


def build_mu(basis: PolyBasis, cap: int = 20000) -> MuMatrix:
    """Integer matrix of the cup product restricted to Sym^2 V."""
    if basis.sym2_dimension > cap:
        raise SizeGuardError(f"dim Sym^2 V = {basis.sym2_dimension} exceeds cap {cap}")
    target = SymTensorSpace(basis.m, basis.n)
    row_index = {key: i for i, key in enumerate(target.rows())}
    m = basis.m
    mons = basis.monomials

    def grad(e):
        out = []
        for j in range(m):
            if e[j]:
                d = list(e)
                d[j] -= 1
                out.append((j, e[j], tuple(d)))
        return out

    grads = [grad(e) for e in mons]
    columns = []
    pairs = basis.pairs()
    for a, b in pairs:
        col: Dict[int, int] = {}
        for j, cj, ea in grads[a]:
            for k, ck, eb in grads[b]:
                mono = tuple(x + y for x, y in zip(ea, eb))
                # dF_a_j dF_b_k contributes to slot (min, max); the slot row holds
                # twice the symmetric coefficient, so each ordered term adds once
                # and diagonal slots add twice.
                key = (mono, min(j, k), max(j, k))
                r = row_index[key]
                col[r] = col.get(r, 0) + cj * ck * (2 if j == k else 1)
        columns.append({r: v for r, v in col.items() if v})
    return MuMatrix(basis, target, columns, pairs)


# -- exact elimination -------------------------------------------------------------------


def _row_gcd(row: List[int]) -> int:
    g = 0
    for v in row:
        if v:
            g = gcd(g, v)
            if g == 1:
                break
    return g


def integer_nullspace(rows: List[List[int]], ncols: int) -> Tuple[int, List[List[int]]]:
    """Rank and an integer nullspace basis by fraction-free reduction.

    Pivots are taken in column order from the first row holding a nonzero,
    so the result is deterministic.
    """
    rows = [list(r) for r in rows if any(r)]
    pivot_cols: List[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        prow = rows[r]
        p = prow[c]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                new = [p * x - f * y for x, y in zip(rows[i], prow)]
                g = _row_gcd(new)
                if g > 1:
                    new = [x // g for x in new]
                rows[i] = new
        pivot_cols.append(c)
        r += 1
        if r == len(rows):
            break
    rank = len(pivot_cols)
    pivset = set(pivot_cols)
    lcm = 1
    for i, c in enumerate(pivot_cols):
        p = abs(rows[i][c])
        lcm = lcm * p // gcd(lcm, p)
    basis = []
    for f in range(ncols):
        if f in pivset:
            continue
        v = [0] * ncols
        v[f] = lcm
        for i, c in enumerate(pivot_cols):
            v[c] = -rows[i][f] * lcm // rows[i][c]
        g = _row_gcd(v)
        v = [x // g for x in v]
        if next(x for x in v if x) < 0:
            v = [-x for x in v]
        basis.append(v)
    return rank, basis


def exact_rank(matrix: Sequence[Sequence[GaussRational]]) -> int:
    """Rank over Q(i) by Gaussian elimination."""
    M = [[GaussRational.coerce(x) for x in row] for row in matrix]
    rank = 0
    ncols = len(M[0]) if M else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][c]), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        p = M[rank][c]
        for i in range(rank + 1, len(M)):
            if M[i][c]:
                f = M[i][c] / p
                M[i] = [x - f * y for x, y in zip(M[i], M[rank])]
        rank += 1
    return rank


# -- relations -------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticRelation:
    gamma: Tuple[Tuple[GaussRational, ...], ...]
    basis: PolyBasis

    def __post_init__(self):
        d = self.basis.dimension
        g = tuple(tuple(GaussRational.coerce(x) for x in row) for row in self.gamma)
        if len(g) != d or any(len(row) != d for row in g):
            raise ValueError("gamma must be dim V x dim V")
        if any(g[a][b] != g[b][a] for a in range(d) for b in range(a)):
            raise ValueError("gamma must be symmetric")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_vector(cls, vec: Sequence, basis: PolyBasis) -> "QuadraticRelation":
        d = basis.dimension
        g = [[ZERO] * d for _ in range(d)]
        for (a, b), x in zip(basis.pairs(), vec):
            x = GaussRational.coerce(x)
            if a == b:
                g[a][a] = x
            else:
                g[a][b] = g[b][a] = x / 2
        return cls(tuple(map(tuple, g)), basis)

    def vector(self) -> List[GaussRational]:
        return [
            self.gamma[a][a] if a == b else self.gamma[a][b] * 2 for a, b in self.basis.pairs()
        ]

    def is_relation(self, mu: Optional[MuMatrix] = None) -> bool:
        mu = mu or build_mu(self.basis)
        return not any(mu.apply(self.vector()))

    def rank(self) -> int:
        return exact_rank(self.gamma)

    def is_zero(self) -> bool:
        return not any(x for row in self.gamma for x in row)

    def to_json(self) -> dict:
        return {
            "m": self.basis.m,
            "n": self.basis.n,
            "gamma": [[x.to_json() for x in row] for row in self.gamma],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "QuadraticRelation":
        basis = PolyBasis(int(doc["m"]), int(doc["n"]))
        g = tuple(tuple(GaussRational.from_json(x) for x in row) for row in doc["gamma"])
        return cls(g, basis)


def kernel(mu: MuMatrix) -> List[QuadraticRelation]:
    """Exact basis of ker mu as quadratic relations."""
    _, vecs = integer_nullspace(mu.dense(), mu.shape[1])
    return [QuadraticRelation.from_vector(v, mu.basis) for v in vecs]


def mu_rank(mu: MuMatrix) -> int:
    return integer_nullspace(mu.dense(), mu.shape[1])[0]


def product_vector(basis: PolyBasis, p: Poly, q: Poly) -> List[GaussRational]:
    """Column coordinates of dp . dq for polynomials p, q of degree <= n."""
    idx = basis.index()
    pos = {pair: i for i, pair in enumerate(basis.pairs())}
    out = [ZERO] * len(pos)
    lin_p = {idx[e]: c for e, c in p.items() if sum(e) > 0}
    lin_q = {idx[e]: c for e, c in q.items() if sum(e) > 0}
    for a, x in lin_p.items():
        for b, y in lin_q.items():
            i = pos[(min(a, b), max(a, b))]
            out[i] = out[i] + x * y
    return out


def relation_from_terms(basis: PolyBasis, terms) -> QuadraticRelation:
    """Relation sum coef * dP.dQ for terms (coef, P, Q) with polynomial HoloExprs."""
    vec = [ZERO] * (basis.sym2_dimension)
    for coef, P, Q in terms:
        p, q = to_polynomial(P), to_polynomial(Q)
        if max(poly_degree(p), poly_degree(q)) > basis.n:
            raise ValueError(f"degree exceeds n = {basis.n}")
        for i, x in enumerate(product_vector(basis, p, q)):
            vec[i] = vec[i] + x * coef
    return QuadraticRelation.from_vector(vec, basis)


def relation_from_six(six, n: int) -> QuadraticRelation:
    """dP1.dP2 - dP3.dP4 - dP5.dP6 for polynomial family output."""
    P = six.P
    return relation_from_terms(PolyBasis(2, n), [(1, P[0], P[1]), (-1, P[2], P[3]), (-1, P[4], P[5])])


# -- congruence diagonalization ---------------------------------------------------------


@dataclass
class Diagonalization:
    rank: int
    columns: List[List[GaussRational]]  # exact c_j with gamma = sum c_j c_j^T / s_j
    pivots: List[GaussRational]  # exact s_j
    coeffs: np.ndarray  # (k, dim V) complex, F_j = sum_a coeffs[j, a] * monomial_a
    basis: PolyBasis
    coefficient_residual: float
    point_residual: float
    independent: bool
    certified: bool

    def primitives(self) -> List[HoloExpr]:
        out = []
        for row in self.coeffs:
            terms = []
            for a, c in enumerate(row):
                if c != 0:
                    mono = self.basis.expr(a).root
                    terms.append(Mul((Const(GaussRational.coerce(complex(c))), mono)))
            node = fold(Add(tuple(terms))) if terms else Const(ZERO)
            out.append(HoloExpr(node, self.basis.m))
        return out


def congruence_factor(gamma) -> Tuple[List[List[GaussRational]], List[GaussRational]]:
    """Exact gamma = sum_j c_j c_j^T / s_j with rank-many terms.

    Pivots on the largest-magnitude diagonal entry; when the diagonal of the
    remainder vanishes, uses w = e_i + e_j for the largest off-diagonal entry.
    """
    d = len(gamma)
    R = [list(map(GaussRational.coerce, row)) for row in gamma]
    cols, pivs = [], []
    while True:
        diag = [(R[i][i].abs2(), -i) for i in range(d) if R[i][i]]
        if diag:
            i = -max(diag)[1]
            c = [R[r][i] for r in range(d)]
            s = R[i][i]
        else:
            off = [(R[i][j].abs2(), -i, -j) for i in range(d) for j in range(i + 1, d) if R[i][j]]
            if not off:
                break
            _, i, j = max(off)
            i, j = -i, -j
            c = [R[r][i] + R[r][j] for r in range(d)]
            s = c[i] + c[j]
        inv = GaussRational(1) / s
        for r in range(d):
            if c[r]:
                f = c[r] * inv
                R[r] = [x - f * y for x, y in zip(R[r], c)]
        cols.append(c)
        pivs.append(s)
    return cols, pivs


def _scale(gamma) -> Fraction:
    top = max((max(abs(x.re), abs(x.im)) for row in gamma for x in row), default=Fraction(0))
    return Fraction(1) / top if top else Fraction(1)


def diagonalize(
    rel: QuadraticRelation, samples: int = 100, tol: float = 1e-10, seed: int = 0
) -> Diagonalization:
    """Forms dF_1..dF_k, k = rank gamma, with sum_j dF_j dF_j = 0.

    gamma is rescaled to unit max entry, factored exactly, and the square
    roots of the pivots are taken in floating point. The result is certified
    by the coefficient residual of sum_j dF_j dF_j and by its values at random
    points of the polydisk of radius 2.
    """
    basis = rel.basis
    scale = _scale(rel.gamma)
    gamma = [[x * scale for x in row] for row in rel.gamma]
    cols, pivs = congruence_factor(gamma)
    k = len(cols)
    d = basis.dimension
    L = np.zeros((k, d), complex)
    for j, (c, s) in enumerate(zip(cols, pivs)):
        L[j] = np.array([complex(x) for x in c]) / np.sqrt(complex(s))
    mu = build_mu(basis)
    G = L.T @ L
    vec = np.array([G[a, a] if a == b else 2 * G[a, b] for a, b in basis.pairs()])
    coef_res = float(np.max(np.abs(mu.apply_float(vec)))) if k else 0.0
    diag = Diagonalization(k, cols, pivs, L, basis, coef_res, 0.0, True, True)
    if k:
        Z = sample_polydisk(np.random.default_rng(seed), samples, basis.m)
        grads = np.stack([jet_batch(F, Z).grad for F in diag.primitives()], axis=1)
        T = np.einsum("pij,pik->pjk", grads, grads)
        diag.point_residual = float(np.max(np.abs(T)))
        diag.independent = bool(np.linalg.matrix_rank(L) == k)
    diag.certified = diag.independent and diag.point_residual < tol and coef_res < tol
    return diag


def emit_map(
    primitives: Sequence[HoloExpr],
    m: int,
    ensure_immersion: bool = False,
    samples: int = 100,
    seed: int = 0,
    rank_tol: float = 1e-9,
) -> WeierstrassData:
    """Weierstrass data Re(F_1, ..., F_k) (+ appended (z_j, i z_j) pairs if asked)."""
    prims = list(primitives)
    if any(p.arity != m for p in prims):
        raise ValueError("primitives must have arity m")
    Z = sample_polydisk(np.random.default_rng(seed), samples, m)

    def build(ps):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return WeierstrassData.from_primitives(ps)

    def immersed(ps):
        return len(ps) >= m and check_rank(build(ps), Z, rank_tol).passed

    if ensure_immersion:
        for j in range(m):
            if immersed(prims):
                break
            z = HoloExpr.var(j, m)
            prims += [z, 1j * z]
    if not prims:
        raise ValueError("no forms to emit")
    return build(prims)


# -- dimension report ----------------------------------------------------------------------


@dataclass
class DimensionRow:
    n: int
    dimV: int
    dimSym2V: int
    dimTarget: int
    rank: int
    kernel: int


def dimension_report(m: int, ns: Sequence[int], cap: int = 20000) -> List[DimensionRow]:
    rows = []
    for n in ns:
        basis = PolyBasis(m, n)
        mu = build_mu(basis, cap)
        r = mu_rank(mu)
        rows.append(
            DimensionRow(n, basis.dimension, basis.sym2_dimension, mu.target.dimension, r, mu.shape[1] - r)
        )
    return rows


def first_nontrivial(rows: Sequence[DimensionRow]) -> Optional[int]:
    return next((r.n for r in rows if r.kernel > 0), None)


def report_csv(rows: Sequence[DimensionRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "dimV", "dimSym2V", "dimTarget", "rank", "kernel"])
    for r in rows:
        w.writerow([r.n, r.dimV, r.dimSym2V, r.dimTarget, r.rank, r.kernel])
    return buf.getvalue()
