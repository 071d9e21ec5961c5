"""Sampling the image of a complex curve under the immersion into a quad mesh."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .expr import HoloExpr, evaluate, parse
from .weierstrass import WeierstrassData, immerse_batch, _mean_curvature


@dataclass(frozen=True)
class MeshSlice:
    """Curve t -> (c_1(t), ..., c_m(t)) sampled on a square grid inscribed in |t| <= radius."""

    curve: Tuple[HoloExpr, ...]
    resolution: int = 21
    projection: Tuple[int, int, int] = (0, 1, 2)  # 0-based coordinates of R^n
    radius: float = 1.0

    def __post_init__(self):
        if any(c.arity != 1 for c in self.curve):
            raise ValueError("curve components must be functions of one variable")
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        if len(set(self.projection)) != 3:
            raise ValueError("projection indices must be three distinct coordinates")

    @classmethod
    def parse(cls, curve: str, **kw) -> "MeshSlice":
        return cls(tuple(parse(s, 1) for s in curve.split(",")), **kw)

    def grid(self) -> np.ndarray:
        """Parameter values t, shape (resolution, resolution); rows vary Im t."""
        a = self.radius / np.sqrt(2.0)
        s = np.linspace(-a, a, self.resolution)
        return s[None, :] + 1j * s[:, None]


@dataclass
class Mesh:
    params: np.ndarray  # (r, r) complex
    points: np.ndarray  # (r, r, n) full image in R^n
    projection: Tuple[int, int, int]

    @property
    def vertices(self) -> np.ndarray:
        r = self.params.shape[0]
        return self.points[:, :, list(self.projection)].reshape(r * r, 3)

    @property
    def faces(self):
        r = self.params.shape[0]
        out = []
        for i in range(r - 1):
            for j in range(r - 1):
                a = i * r + j
                out.append((a, a + 1, a + r + 1, a + r))
        return out

    def to_obj(self) -> str:
        lines = [f"# quad mesh, {len(self.vertices)} vertices, projection {[p + 1 for p in self.projection]}"]
        for x, y, z in self.vertices:
            lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
        for f in self.faces:
            lines.append("f " + " ".join(str(k + 1) for k in f))
        return "\n".join(lines) + "\n"


def sample_mesh(data: WeierstrassData, sl: MeshSlice) -> Mesh:
    if len(sl.curve) != data.m:
        raise ValueError(f"curve needs {data.m} components")
    if max(sl.projection) >= data.n or min(sl.projection) < 0:
        raise IndexError(f"projection index out of range for n = {data.n}")
    T = sl.grid()
    t = T.reshape(-1, 1)
    Z = np.stack([evaluate(c, t) for c in sl.curve], axis=1)
    pts = immerse_batch(data, Z)
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite grid point")
    r = sl.resolution
    return Mesh(T, pts.reshape(r, r, data.n), sl.projection)


# Fourth-order central difference stencils.
_D1 = np.array([1, -8, 0, 8, -1]) / 12.0
_D2 = np.array([-1, 16, -30, 16, -1]) / 12.0


def grid_mean_curvature(points: np.ndarray, h: float) -> np.ndarray:
    """Mean curvature norms at interior grid points (two layers in) of a
    uniformly sampled surface in R^n, shape (r - 4, r - 4)."""
    r = points.shape[0]
    out = np.zeros((r - 4, r - 4))
    for i in range(2, r - 2):
        for j in range(2, r - 2):
            win = points[i - 2 : i + 3, j - 2 : j + 3]  # rows: v, cols: u
            fu = np.einsum("k,kn->n", _D1, win[2]) / h
            fv = np.einsum("k,kn->n", _D1, win[:, 2]) / h
            fuu = np.einsum("k,kn->n", _D2, win[2]) / h**2
            fvv = np.einsum("k,kn->n", _D2, win[:, 2]) / h**2
            fuv = np.einsum("a,b,abn->n", _D1, _D1, win) / h**2
            out[i - 2, j - 2] = _mean_curvature(fu, fv, fuu, fuv, fvv)
    return out
