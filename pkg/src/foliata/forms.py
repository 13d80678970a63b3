"""Discrete exterior calculus on the transversal complex.

Cochains take one value per cell (``layout="cell"``, the cubical complex on
which ``d`` acts) or one value per vertex and coordinate plane
(``layout="point"``, used for the clover curvature). In both layouts the
values attached to a vertex are the coordinate components of a form there,
so the transverse Hodge star and the inner product act vertex by vertex
through the metric matrices of that vertex.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import quaternion as quat
from .errors import DegreeError
from .presentation import NCOMB, SUBSETS, SUBSET_INDEX, FoliationPresentation, perm_sign


@dataclass(frozen=True, eq=False)
class Cochain:
    P: FoliationPresentation
    degree: int
    data: np.ndarray
    layout: str = "cell"

    def __post_init__(self):
        if not 0 <= self.degree <= 4:
            raise DegreeError(f"degree must be 0..4, got {self.degree}")
        data = np.asarray(self.data, dtype=float)
        n = self.P.n_cells(self.degree)
        if data.shape not in ((n,), (n, 3)):
            raise ValueError(f"degree-{self.degree} cochain needs {n} values, got shape {data.shape}")
        object.__setattr__(self, "data", data)
        if self.layout not in ("cell", "point"):
            raise ValueError("layout must be 'cell' or 'point'")

    @property
    def value_type(self):
        return "scalar" if self.data.ndim == 1 else "su2"

    def _new(self, data, degree=None):
        return Cochain(self.P, self.degree if degree is None else degree, data, self.layout)

    def __add__(self, other):
        _check_compatible(self, other)
        return self._new(self.data + other.data)

    def __sub__(self, other):
        _check_compatible(self, other)
        return self._new(self.data - other.data)

    def __mul__(self, s):
        return self._new(self.data * s)

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.data)

    def per_vertex(self):
        """View as (n_vertices, C(4, r)[, 3])."""
        return self.data.reshape((self.P.n_vertices, NCOMB[self.degree]) + self.data.shape[1:])


def _check_compatible(a, b):
    if a.P is not b.P:
        raise TypeError("cochains live on different presentations")
    if a.degree != b.degree or a.value_type != b.value_type or a.layout != b.layout:
        raise TypeError(f"cochain mismatch: degree {a.degree}/{b.degree}, "
                        f"{a.value_type}/{b.value_type}, {a.layout}/{b.layout}")


def zeros(P, r, value_type="scalar", layout="cell"):
    shape = (P.n_cells(r),) if value_type == "scalar" else (P.n_cells(r), 3)
    return Cochain(P, r, np.zeros(shape), layout)


def constant_form(P, subset, value=1.0, layout="cell"):
    """The constant form value * dx_subset."""
    r = len(subset)
    data = np.zeros(P.n_cells(r))
    data[SUBSET_INDEX[r][tuple(subset)]::NCOMB[r]] = value
    return Cochain(P, r, data, layout)


def random_cochain(P, r, rng, value_type="scalar", layout="cell"):
    shape = (P.n_cells(r),) if value_type == "scalar" else (P.n_cells(r), 3)
    return Cochain(P, r, rng.standard_normal(shape), layout)


# -- metric algebra -----------------------------------------------------------------
def _minors(a, r):
    """Matrix of r x r minors of each 4x4 matrix in ``a``."""
    subs = SUBSETS[r]
    out = np.empty(a.shape[:-2] + (len(subs), len(subs)))
    for i, si in enumerate(subs):
        for j, sj in enumerate(subs):
            if r == 0:
                out[..., i, j] = 1.0
            else:
                out[..., i, j] = np.linalg.det(a[..., list(si), :][..., list(sj)])
    return out


@lru_cache(maxsize=None)
def _complement_matrix(r):
    """E_r with (E_r)[I^c, I] = epsilon(I, I^c)."""
    e = np.zeros((NCOMB[4 - r], NCOMB[r]))
    for k, subset in enumerate(SUBSETS[r]):
        rest = tuple(i for i in range(4) if i not in subset)
        e[SUBSET_INDEX[4 - r][rest], k] = perm_sign(subset + rest)
    return e


def metric_matrices(P, r):
    """Per-vertex Gram matrices of the pointwise inner product on r-forms."""
    cache = P.__dict__.setdefault("_metric_cache", {})
    if r not in cache:
        g = P.metric
        vol = np.sqrt(np.linalg.det(g))
        cache[r] = vol[:, None, None] * _minors(np.linalg.inv(g), r)
    return cache[r]


def star_matrices(P, r):
    cache = P.__dict__.setdefault("_star_cache", {})
    if r not in cache:
        cache[r] = np.einsum("ij,vjk->vik", _complement_matrix(r), metric_matrices(P, r))
    return cache[r]


def _apply_pointwise(mats, c):
    x = c.per_vertex()
    if x.ndim == 2:
        return np.einsum("vij,vj->vi", mats, x)
    return np.einsum("vij,vjc->vic", mats, x)


def star(c: Cochain) -> Cochain:
    out = _apply_pointwise(star_matrices(c.P, c.degree), c)
    r = 4 - c.degree
    return Cochain(c.P, r, out.reshape((c.P.n_cells(r),) + c.data.shape[1:]), c.layout)


def split_selfdual(c: Cochain):
    if c.degree != 2:
        raise DegreeError("the self-dual split needs a 2-cochain")
    s = star(c)
    return 0.5 * (c + s), 0.5 * (c - s)


def inner_theta(a: Cochain, b: Cochain) -> float:
    """Sum over vertices of theta * <a, b>_metric; su2 values use -Tr(ab) = 2 a.b."""
    _check_compatible(a, b)
    mb = _apply_pointwise(metric_matrices(a.P, a.degree), b)
    ab = a.per_vertex() * mb
    factor = 1.0
    if a.value_type == "su2":
        ab = ab.sum(axis=-1)
        factor = 2.0
    return factor * float(np.dot(a.P.theta, ab.sum(axis=1)))


def volume_form(P) -> Cochain:
    """The transverse volume form as a top cochain."""
    return Cochain(P, 4, np.sqrt(np.linalg.det(P.metric)))


# -- coboundary ---------------------------------------------------------------------
def _shift(chart, coords, axes):
    y = coords.copy()
    for a in axes:
        y[:, a] += 1
    return chart.vertex_index(y)


def d_matrix(P, r):
    """Sparse cubical coboundary from r-cells to (r+1)-cells (integer entries)."""
    if not 0 <= r <= 3:
        raise DegreeError(f"d is defined on degrees 0..3, got {r}")
    cache = P.__dict__.setdefault("_d_cache", {})
    if r in cache:
        return cache[r]
    rows, cols, vals = [], [], []
    for ci, chart in enumerate(P.charts):
        x = chart.coords
        vi = np.arange(len(x))
        off_in, off_out = P.cell_offset(ci, r), P.cell_offset(ci, r + 1)
        for kk, J in enumerate(SUBSETS[r + 1]):
            out = off_out + vi * NCOMB[r + 1] + kk
            for pos, j in enumerate(J):
                I = J[:pos] + J[pos + 1:]
                k = SUBSET_INDEX[r][I]
                s = (-1) ** pos
                rows += [out, out]
                cols += [off_in + _shift(chart, x, [j]) * NCOMB[r] + k, off_in + vi * NCOMB[r] + k]
                vals += [np.full(len(x), s), np.full(len(x), -s)]
    m = sp.csr_matrix((np.concatenate(vals).astype(float), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(P.n_cells(r + 1), P.n_cells(r)))
    cache[r] = m
    return m


def _apply_matrix(m, c, degree):
    data = m @ c.data
    return Cochain(c.P, degree, data, c.layout)


def d(c: Cochain) -> Cochain:
    if c.layout != "cell":
        raise TypeError("d acts on cell-layout cochains")
    if c.degree == 4:
        raise DegreeError("d of a 4-cochain is not defined")
    return _apply_matrix(d_matrix(c.P, c.degree), c, c.degree + 1)


# -- wedge --------------------------------------------------------------------------
def wedge(a: Cochain, b: Cochain) -> Cochain:
    """Antisymmetrized cubical cup product of two scalar cell cochains."""
    P = a.P
    p, q = a.degree, b.degree
    if p + q > 4:
        raise DegreeError("wedge degree exceeds 4")
    if a.value_type != "scalar" or b.value_type != "scalar":
        raise TypeError("wedge is implemented for scalar cochains")
    out = np.zeros(P.n_cells(p + q))
    A, B = a.per_vertex(), b.per_vertex()
    for ci, chart in enumerate(P.charts):
        x = chart.coords
        v0 = int(P.vertex_offsets[ci])
        vi = np.arange(len(x))
        for kk, K in enumerate(SUBSETS[p + q]):
            acc = np.zeros(len(x))
            for I in SUBSETS[p]:
                if not set(I) <= set(K):
                    continue
                J = tuple(k for k in K if k not in I)
                s = perm_sign(I + J)
                ia, jb = SUBSET_INDEX[p][I], SUBSET_INDEX[q][J]
                xi = _shift(chart, x, I)
                xj = _shift(chart, x, J)
                acc += 0.5 * s * (A[v0 + vi, ia] * B[v0 + xi, jb] + A[v0 + xj, ia] * B[v0 + vi, jb])
            out[(v0 + vi) * NCOMB[p + q] + kk] = acc
    return Cochain(P, p + q, out)


def kappa_wedge_matrix(P, kappa, r):
    """Sparse matrix of f -> kappa ^ f for a scalar 1-cochain kappa and r-cochains f."""
    kappa = np.asarray(kappa.data if isinstance(kappa, Cochain) else kappa, dtype=float)
    K1 = kappa.reshape(P.n_vertices, 4)
    rows, cols, vals = [], [], []
    for ci, chart in enumerate(P.charts):
        x = chart.coords
        v0 = int(P.vertex_offsets[ci])
        vi = np.arange(len(x))
        for kk, K in enumerate(SUBSETS[r + 1]):
            out = (v0 + vi) * NCOMB[r + 1] + kk
            for pos, j in enumerate(K):
                J = K[:pos] + K[pos + 1:]
                s = (-1) ** pos
                jk = SUBSET_INDEX[r][J]
                xj = _shift(chart, x, [j])
                xJ = _shift(chart, x, J)
                rows += [out, out]
                cols += [(v0 + xj) * NCOMB[r] + jk, (v0 + vi) * NCOMB[r] + jk]
                vals += [0.5 * s * K1[v0 + vi, j], 0.5 * s * K1[v0 + xJ, j]]
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(P.n_cells(r + 1), P.n_cells(r)))


def twisted_d_matrix(P, r, kappa=None):
    kappa = P.kappa if kappa is None else kappa
    kd = np.asarray(kappa.data if isinstance(kappa, Cochain) else kappa)
    m = d_matrix(P, r)
    if np.any(kd != 0):
        m = (m - kappa_wedge_matrix(P, kd, r)).tocsr()
    return m


def gram_matrix(P, r):
    """Sparse block-diagonal matrix of the theta-weighted inner product on scalar r-cochains."""
    cache = P.__dict__.setdefault("_gram_cache", {})
    if r not in cache:
        m = P.theta[:, None, None] * metric_matrices(P, r)
        cache[r] = sp.block_diag(list(m), format="csr")
    return cache[r]


def codifferential_twisted(c: Cochain, kappa=None) -> Cochain:
    """Adjoint of (d - kappa^) from degree r-1 to r in the theta-weighted inner product."""
    if c.degree == 0:
        raise DegreeError("codifferential of a 0-cochain is not defined")
    P, r = c.P, c.degree
    a = twisted_d_matrix(P, r - 1, kappa)
    minv = np.linalg.inv(P.theta[:, None, None] * metric_matrices(P, r - 1))
    mc = P.theta[:, None] * _apply_pointwise(metric_matrices(P, r), c).reshape(P.n_vertices, -1)
    y = a.T @ mc.reshape(c.data.shape)
    yv = y.reshape((P.n_vertices, NCOMB[r - 1]) + c.data.shape[1:])
    if yv.ndim == 2:
        out = np.einsum("vij,vj->vi", minv, yv)
    else:
        out = np.einsum("vij,vjc->vic", minv, yv)
    return Cochain(P, r - 1, out.reshape((P.n_cells(r - 1),) + c.data.shape[1:]), c.layout)


# -- invariance ---------------------------------------------------------------------
def invariant_basis(P, r, value_type="scalar", layout="cell"):
    od = P.orbits(r, layout)
    return od.scalar_basis if value_type == "scalar" else od.su2_invariant_basis


def invariant_project(c: Cochain) -> Cochain:
    """Orbit average; su2 values are conjugated by the bundle lifts."""
    b = invariant_basis(c.P, c.degree, c.value_type, c.layout)
    flat = c.data.reshape(-1)
    out = b @ (b.T @ flat)
    return c._new(out.reshape(c.data.shape))


def invariance_residual(c: Cochain) -> float:
    return float(np.abs(invariant_project(c).data - c.data).max())


def point_to_cell(c: Cochain) -> Cochain:
    return Cochain(c.P, c.degree, c.data, "cell")


def cell_to_point(c: Cochain) -> Cochain:
    return Cochain(c.P, c.degree, c.data, "point")


def su2_adjoint_transport(q, c):
    """Apply Ad(q) vertexwise to an su2 cochain (q: one quaternion per vertex)."""
    v = c.per_vertex()
    out = quat.adjoint(q[:, None, :], v)
    return c._new(out.reshape(c.data.shape))
