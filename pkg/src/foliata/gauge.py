"""Equivariant SU(2) lattice gauge fields on the transversal.

Links U_mu(x) are unit quaternions on edges (x, x + e_mu). A field is stored
on edge-orbit representatives and reconstructed on every edge through the
pseudogroup and its bundle lifts, so equivariance holds by construction.

Curvature lives in the point layout: the clover F_{mu nu}(x) is the average
of the principal logarithms of the four plaquettes with a corner at x, each
taken with the orientation of the (mu, nu) plane.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import forms
from . import quaternion as quat
from .errors import BranchCutError, EquivarianceError
from .forms import Cochain
from .presentation import NCOMB, SUBSETS, FoliationPresentation

PLANES = SUBSETS[2]
BRANCH_TOL = 1e-9
KERNEL_THRESHOLD = 1e-8


# -- lattice helpers -----------------------------------------------------------------
def neighbours(P: FoliationPresentation) -> np.ndarray:
    """(n_vertices, 4, 2) global indices of x + e_mu and x - e_mu."""
    cache = P.__dict__.setdefault("_nbr_cache", {})
    if "nbr" not in cache:
        out = np.empty((P.n_vertices, 4, 2), dtype=np.int64)
        for ci, chart in enumerate(P.charts):
            x = chart.coords
            v0 = int(P.vertex_offsets[ci])
            for mu in range(4):
                for k, step in enumerate((1, -1)):
                    y = x.copy()
                    y[:, mu] += step
                    out[v0:v0 + len(x), mu, k] = v0 + chart.vertex_index(y)
        cache["nbr"] = out
    return cache["nbr"]


def edge_ends(P):
    """Base and head vertex of every edge."""
    nbr = neighbours(P)
    base = np.repeat(np.arange(P.n_vertices), 4)
    head = nbr[:, :, 0].reshape(-1)
    return base, head


def _unit(q):
    """Normalize quaternions unless already unit to rounding (keeps flows reproducible)."""
    q = np.array(q, dtype=float)
    dev = np.abs(np.linalg.norm(q, axis=-1) - 1.0)
    if np.any(dev > 1e-14):
        q = quat.normalize(q)
    return q


# -- field types -----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class EquivariantGaugeField:
    P: FoliationPresentation
    reps: np.ndarray

    def __post_init__(self):
        reps = _unit(self.reps)
        n = len(self.P.edge_orbits.reps)
        if reps.shape != (n, 4):
            raise ValueError(f"field needs {n} representative quaternions, got {reps.shape}")
        reps.setflags(write=False)
        object.__setattr__(self, "reps", reps)

    @classmethod
    def identity(cls, P):
        return cls(P, np.tile(quat.IDENTITY, (len(P.edge_orbits.reps), 1)))

    @classmethod
    def from_links(cls, P, links):
        """Field whose representatives are read off a full link array."""
        return cls(P, np.asarray(links)[P.edge_orbits.reps])

    @cached_property
    def links(self) -> np.ndarray:
        return reconstruct_links(self.P, self.reps)

    def with_reps(self, reps):
        return EquivariantGaugeField(self.P, reps)


def reconstruct_links(P, reps):
    """Full link array U_e = L W R^-1 with W = U_rep or its inverse."""
    eo = P.edge_orbits
    w = reps[eo.orbit_id]
    w = np.where(eo.reversed[:, None], quat.conj(w), w)
    return quat.mul(quat.mul(eo.left, w), quat.conj(eo.right))


@dataclass(frozen=True, eq=False)
class GaugeTransform:
    """SU(2) value per vertex-orbit representative, extended by g(y) = T g_rep T^-1."""
    P: FoliationPresentation
    reps: np.ndarray

    def __post_init__(self):
        reps = quat.normalize(np.asarray(self.reps, dtype=float))
        od = self.P.orbits(0)
        if reps.shape != (od.n_orbits, 4):
            raise ValueError(f"gauge transform needs {od.n_orbits} quaternions")
        # a stabilizer with a nontrivial lift constrains the value at the representative
        for k, basis in enumerate(od.su2_basis):
            if basis.shape[1] < 3:
                v = quat.log(reps[k])
                off = v - basis @ (basis.T @ v)
                if np.abs(off).max() > 1e-12:
                    raise EquivarianceError(f"gauge value at orbit {k} violates its stabilizer")
        object.__setattr__(self, "reps", reps)

    @classmethod
    def identity(cls, P):
        return cls(P, np.tile(quat.IDENTITY, (P.orbits(0).n_orbits, 1)))

    @cached_property
    def values(self):
        od = self.P.orbits(0)
        g = self.reps[od.orbit_id]
        if od.transport is None:
            return g
        t = od.transport
        return quat.normalize(quat.mul(quat.mul(t, g), quat.conj(t)))


def random_gauge(P, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    od = P.orbits(0)
    vecs = quat.random_su2(rng, (od.n_orbits,), scale)
    for k, basis in enumerate(od.su2_basis):
        vecs[k] = basis @ (basis.T @ vecs[k])
    return GaugeTransform(P, quat.exp(vecs))


def apply_gauge(P, U: EquivariantGaugeField, s: GaugeTransform) -> EquivariantGaugeField:
    """U_e -> g(base) U_e g(head)^-1, evaluated on representatives."""
    base, head = edge_ends(P)
    g = s.values
    r = P.edge_orbits.reps
    new = quat.mul(quat.mul(g[base[r]], U.reps), quat.conj(g[head[r]]))
    return EquivariantGaugeField(P, new)


def random_equivariant_field(P, seed, roughness=0.1) -> EquivariantGaugeField:
    """exp of roughness-scaled Gaussian su2 noise on every representative."""
    if not 0.0 <= roughness <= 1.0:
        raise ValueError("roughness must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n = len(P.edge_orbits.reps)
    return EquivariantGaugeField(P, quat.exp(quat.random_su2(rng, (n,), roughness)))


def perturb_field(U, seed, eps):
    """Left-multiply every representative by exp of eps-scaled Gaussian noise."""
    rng = np.random.default_rng(seed)
    noise = quat.exp(quat.random_su2(rng, (len(U.reps),), eps))
    return U.with_reps(quat.mul(noise, U.reps))


def equivariance_residual(P, links) -> float:
    """Largest deviation from U_{h e} = lift(a) U_e lift(b)^-1 over all generators."""
    res = 0.0
    for g in P.generators:
        src, dst, sgn, _ = P.cell_images(g, 1)
        chart = P.charts[g.source]
        v0 = P.vertex_offsets[g.source]
        base = P.cell_vertex(1)[src]
        head = edge_ends(P)[1][src]
        if g.lift is None:
            la = lb = np.tile(quat.IDENTITY, (len(src), 1))
        else:
            la, lb = g.lift[base - v0], g.lift[head - v0]
        img = quat.mul(quat.mul(la, links[src]), quat.conj(lb))
        img = np.where((sgn > 0)[:, None], img, quat.conj(img))
        res = max(res, float(np.abs(img - links[dst]).max()))
        del chart
    return res


def check_field(U: EquivariantGaugeField) -> dict:
    links = U.links
    return {"unit_norm": float(np.abs(np.linalg.norm(links, axis=-1) - 1).max()),
            "equivariance": equivariance_residual(U.P, links)}


# -- curvature ---------------------------------------------------------------------------
def _step(nbr, y, axis, direction):
    """Edge, orientation and endpoint of a unit step from vertices y."""
    if direction > 0:
        return y * 4 + axis, True, nbr[y, axis, 0]
    back = nbr[y, axis, 1]
    return back * 4 + axis, False, back


@dataclass
class _Leaf:
    plane: int
    s: int
    t: int
    edges: list
    forward: list
    prefix: list
    logq: np.ndarray


def _leaves(P, links, method="clover"):
    """All plaquettes entering the curvature, with their path data."""
    nbr = neighbours(P)
    x = np.arange(P.n_vertices)
    signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)] if method == "clover" else [(1, 1)]
    out = []
    for k, (mu, nu) in enumerate(PLANES):
        for s, t in signs:
            path = [(mu, s), (nu, t), (mu, -s), (nu, -t)]
            y = x
            edges, fwd, prefix = [], [], []
            acc = np.tile(quat.IDENTITY, (len(x), 1))
            for axis, direction in path:
                e, f, y = _step(nbr, y, axis, direction)
                prefix.append(acc)
                v = links[e] if f else quat.conj(links[e])
                acc = quat.mul(acc, v)
                edges.append(e)
                fwd.append(f)
            prefix.append(acc)
            bad = acc[:, 0] <= -1.0 + BRANCH_TOL / 2
            if np.any(bad):
                v = int(np.flatnonzero(bad)[0])
                chart, xv = P.locate(v)
                raise BranchCutError(
                    f"plaquette at chart {chart}, vertex {xv}, plane {mu + 1}{nu + 1} "
                    "sits on the logarithm branch cut", chart=chart, vertex=xv,
                    plane=(mu + 1, nu + 1))
            out.append(_Leaf(k, s, t, edges, fwd, prefix, quat.log(acc)))
    return out


@dataclass
class CurvatureField:
    F: Cochain
    method: str


def curvature(P, U, method="clover") -> CurvatureField:
    """su2 2-cochain of the field strength.

    ``method="clover"`` (default) returns point-layout values averaged over the
    four plaquettes at each vertex; ``method="plaquette"`` returns the raw
    plaquette logarithm on each face (cell layout).
    """
    if method not in ("clover", "plaquette"):
        raise ValueError("method must be 'clover' or 'plaquette'")
    links = U.links if isinstance(U, EquivariantGaugeField) else np.asarray(U)
    leaves = _leaves(P, links, method)
    F = np.zeros((P.n_vertices, NCOMB[2], 3))
    w = 0.25 if method == "clover" else 1.0
    for leaf in leaves:
        F[:, leaf.plane] += w * leaf.s * leaf.t * leaf.logq
    layout = "point" if method == "clover" else "cell"
    return CurvatureField(Cochain(P, 2, F.reshape(-1, 3), layout), method)


# -- energies ---------------------------------------------------------------------------
@dataclass
class EnergyReport:
    ym: float
    charge: float
    plus: float
    minus: float
    identity_residual: float

    def as_tuple(self):
        return (self.ym, self.charge, self.plus, self.minus, self.identity_residual)

    def as_dict(self):
        return {"ym": self.ym, "charge": self.charge, "plus_norm2": self.plus,
                "minus_norm2": self.minus, "identity_residual": self.identity_residual}


def charge_density(P, F: Cochain) -> np.ndarray:
    """Per-vertex theta-weighted charge; sums to the foliation charge.

    -Tr(F ^ F) / 8 pi^2 with the wedge pairing of complementary planes, which
    needs no metric.
    """
    e = forms._complement_matrix(2)
    x = F.per_vertex()
    dens = -2.0 * np.einsum("vic,ij,vjc->v", x, e, x)
    return P.theta * dens / (8 * np.pi ** 2)


def energy_charge(P, U, method="clover", F=None) -> EnergyReport:
    """(YM, charge, |F+|^2, |F-|^2, relative identity residual)."""
    if F is None:
        F = curvature(P, U, method).F
    ym = forms.inner_theta(F, F)
    k = float(charge_density(P, F).sum())
    plus, minus = forms.split_selfdual(F)
    p2, m2 = forms.inner_theta(plus, plus), forms.inner_theta(minus, minus)
    resid = abs(ym - 8 * np.pi ** 2 * k - 2 * p2) / max(ym, 1e-300) if ym > 0 else abs(k) + p2
    return EnergyReport(ym, k, p2, m2, resid)


def fasd_residual(P, U, method="clover") -> float:
    """|F+|^2 in the theta-weighted norm; zero exactly for FASD fields."""
    F = curvature(P, U, method).F
    plus, _ = forms.split_selfdual(F)
    return forms.inner_theta(plus, plus)


# -- abelian configurations ----------------------------------------------------------
def _string_family(P, plane, p):
    """Indicator of all faces of ``plane`` whose (x_mu, x_nu) equals ``p``."""
    mu, nu = PLANES[plane]
    out = np.zeros(P.n_cells(2))
    for ci, chart in enumerate(P.charts):
        x = chart.coords
        hit = (x[:, mu] == p[mu] % chart.extent[mu]) & (x[:, nu] == p[nu] % chart.extent[nu])
        out[(P.vertex_offsets[ci] + np.flatnonzero(hit)) * NCOMB[2] + plane] = 1.0
    return out


def plane_periods(P, f: np.ndarray, chart=0):
    """2 pi-normalized flux of a closed 2-cochain through each coordinate 2-torus."""
    c = P.charts[chart]
    v0 = P.vertex_offsets[chart]
    vals = f.reshape(P.n_vertices, NCOMB[2])[v0:v0 + c.n_vertices]
    out = np.zeros(NCOMB[2])
    for k, (mu, nu) in enumerate(PLANES):
        others = [a for a in range(4) if a not in (mu, nu)]
        sel = np.all(c.coords[:, others] == 0, axis=1)
        out[k] = vals[sel, k].sum() / (2 * np.pi)
    return out


def abelian_from_angles(P, f, tol=1e-9) -> EquivariantGaugeField:
    """Diagonal field whose plaquette angles are the closed invariant 2-cochain ``f``.

    Needs |f| < pi and integer fluxes. A Dirac string n (integer 2-cochain with
    the opposite fluxes) makes f + 2 pi n exact; an invariant string is
    searched among the families of faces sharing a position in each plane.
    The link angles then solve d a = f + 2 pi n within invariant 1-cochains.
    """
    f = np.asarray(f.data if isinstance(f, Cochain) else f, dtype=float)
    if np.abs(f).max() >= np.pi:
        raise ValueError("plaquette angles must lie strictly inside (-pi, pi)")
    for g in P.generators:
        if g.lift is not None and np.abs(g.lift[:, 1:3]).max() > 1e-12:
            raise EquivarianceError("bundle lifts must commute with the sigma_3 direction")
    fc = Cochain(P, 2, f)
    if forms.invariance_residual(fc) > tol:
        raise EquivarianceError("plaquette angles are not invariant under the pseudogroup")
    if np.abs(forms.d(fc).data).max() > tol:
        raise ValueError("plaquette angles must form a closed 2-cochain")
    m = plane_periods(P, f)
    if np.abs(m - np.round(m)).max() > 1e-8:
        raise ValueError(f"fluxes must be integers, got {m}")
    m = np.round(m)
    od = P.orbits(2)
    b2 = od.scalar_basis
    string = None
    chart = P.charts[0]
    for p in chart.coords:
        n = np.zeros(P.n_cells(2))
        for k in range(NCOMB[2]):
            if m[k]:
                n -= m[k] * _string_family(P, k, p)
        n_inv = b2 @ (b2.T @ n)
        if np.abs(n_inv - np.round(n_inv)).max() < 1e-9:
            string = np.round(n_inv)
            break
    if string is None:
        raise EquivarianceError(
            f"no invariant Dirac string exists for fluxes {m.astype(int).tolist()}; "
            "the flux is not compatible with the pseudogroup")
    target = f + 2 * np.pi * string
    b1 = forms.invariant_basis(P, 1)
    system = (b2.T @ forms.d_matrix(P, 1) @ b1).tocsr()
    rhs = b2.T @ target
    sol = spla.lsqr(system, rhs, atol=1e-15, btol=1e-15, iter_lim=20000)[0]
    a = b1 @ sol
    resid = np.abs(forms.d_matrix(P, 1) @ a - target).max()
    if resid > 1e-9:
        raise EquivarianceError(f"flux is not realizable by an invariant field (residual {resid:.2e})")
    links = np.zeros((P.n_cells(1), 4))
    links[:, 0] = np.cos(a)
    links[:, 3] = np.sin(a)
    U = EquivariantGaugeField.from_links(P, links)
    if np.abs(U.links - links).max() > 1e-9:
        raise EquivarianceError("abelian field does not satisfy the lifted equivariance")
    return U


def constant_flux_angles(P, fluxes):
    """Constant plaquette angles 2 pi m / (N_mu N_nu) for a flux per plane.

    ``fluxes`` maps plane tuples such as (0, 1) to integers m.
    """
    f = np.zeros((P.n_vertices, NCOMB[2]))
    for ci, chart in enumerate(P.charts):
        v0 = P.vertex_offsets[ci]
        for k, (mu, nu) in enumerate(PLANES):
            m = fluxes.get((mu, nu), 0)
            f[v0:v0 + chart.n_vertices, k] = 2 * np.pi * m / (chart.extent[mu] * chart.extent[nu])
    return f.reshape(-1)


def embed_abelian(P, m1, m2) -> EquivariantGaugeField:
    """Diagonal field with constant flux m1 through the 12-tori and m2 through the 34-tori."""
    if (m1, m2) == (0, 0):
        return EquivariantGaugeField.identity(P)
    return abelian_from_angles(P, constant_flux_angles(P, {(0, 1): m1, (2, 3): m2}))


# -- covariant coboundary and reducibility --------------------------------------------
def covariant_d0(P, links) -> sp.csr_matrix:
    """Sparse map u -> Ad(U_e) u(head) - u(base) from su2 0-cochains to 1-cochains."""
    base, head = edge_ends(P)
    ne = len(base)
    rot = quat.rotation(links)
    rows = np.repeat(3 * np.arange(ne)[:, None] + np.arange(3), 3, axis=1).reshape(-1)
    cols = (3 * head[:, None, None] + np.arange(3)[None, None, :]).repeat(3, axis=1).reshape(-1)
    vals = rot.reshape(-1)
    rows2 = (3 * np.arange(ne)[:, None] + np.arange(3)).reshape(-1)
    cols2 = (3 * base[:, None] + np.arange(3)).reshape(-1)
    m = sp.csr_matrix((np.concatenate([vals, -np.ones(3 * ne)]),
                       (np.concatenate([rows, rows2]), np.concatenate([cols, cols2]))),
                      shape=(3 * ne, 3 * P.n_vertices))
    return m


@dataclass
class ReducibilityReport:
    dimension: int
    basis: np.ndarray
    singular_values: np.ndarray
    flat: bool
    threshold: float

    def as_dict(self):
        return {"dimension": self.dimension, "flat": self.flat, "threshold": self.threshold,
                "smallest_singular_values": self.singular_values[-6:].tolist()}


def reducibility_kernel(P, U, threshold=KERNEL_THRESHOLD) -> ReducibilityReport:
    """Kernel of the covariant coboundary on invariant su2 0-cochains.

    The basis is returned as (3 n_vertices, dim), orthonormal columns.
    """
    links = U.links
    b0 = forms.invariant_basis(P, 0, "su2")
    m = (covariant_d0(P, links) @ b0).toarray()
    _, s, vt = sla.svd(m, full_matrices=False)
    rank = int(np.sum(s > threshold * s[0])) if s.size and s[0] > 0 else 0
    ker = vt[rank:].T
    basis = b0 @ ker
    flat = float(np.abs(curvature(P, U).F.data).max()) < 1e-12
    return ReducibilityReport(m.shape[1] - rank, np.asarray(basis), s, flat, threshold)
