"""Transversal presentations of codimension-4 Riemannian foliations.

A presentation is a disjoint union of flat periodic 4-d cubical lattices
(charts) together with finitely many lattice isometries (generators) that
play the role of the holonomy pseudogroup. Leafwise geometry enters only
through a positive per-vertex weight ``theta``.

Cells of degree r are indexed per chart as ``vertex * C(4, r) + k`` where the
vertex index is row-major in (x1, x2, x3, x4) with x4 fastest and ``k``
enumerates the r-subsets of the four axes lexicographically.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import quaternion as quat
from .errors import InvalidGenerator, UnsupportedHolonomy

SUBSETS = [list(itertools.combinations(range(4), r)) for r in range(5)]
SUBSET_INDEX = [{s: k for k, s in enumerate(subs)} for subs in SUBSETS]
NCOMB = [len(s) for s in SUBSETS]

MAX_ORBIT = 4096
MAX_GROUP_ORDER = 4096


def perm_sign(seq):
    """Sign of the permutation sorting ``seq`` (distinct entries)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def complement_sign(subset):
    """epsilon(I, I^c): sign of the permutation (I, I^c) of (0, 1, 2, 3)."""
    rest = tuple(i for i in range(4) if i not in subset)
    return perm_sign(subset + rest), rest


@dataclass(frozen=True)
class Chart:
    id: int
    extent: tuple
    metric: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        extent = tuple(int(n) for n in self.extent)
        metric = tuple(float(g) for g in self.metric)
        if len(extent) != 4 or min(extent) < 2:
            raise ValueError(f"chart extents must be four integers >= 2, got {extent}")
        if len(metric) != 4 or min(metric) <= 0:
            raise ValueError(f"chart metric must be four positive numbers, got {metric}")
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "metric", metric)

    @property
    def n_vertices(self):
        return int(np.prod(self.extent))

    @cached_property
    def coords(self):
        grids = np.meshgrid(*[np.arange(n) for n in self.extent], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def vertex_index(self, x):
        x = np.mod(np.asarray(x), self.extent)
        return np.ravel_multi_index(tuple(np.moveaxis(x, -1, 0)), self.extent)


@dataclass(frozen=True, eq=False)
class Generator:
    """Affine lattice isometry x -> matrix @ x + translation between charts.

    ``lift`` holds one unit quaternion per source-chart vertex: the lifted
    action on the fibre of the foliated SU(2) bundle. ``None`` means trivial.
    """
    source: int
    target: int
    matrix: np.ndarray
    translation: np.ndarray
    lift: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (4, 4) or not np.allclose(m, np.round(m)):
            raise InvalidGenerator("generator matrix must be an integer 4x4 matrix")
        m = np.round(m).astype(int)
        if not (np.all(np.abs(m).sum(axis=0) == 1) and np.all(np.abs(m).sum(axis=1) == 1)):
            raise InvalidGenerator("generator matrix must be a signed permutation")
        t = np.asarray(self.translation)
        if t.shape != (4,) or not np.allclose(t, np.round(t)):
            raise InvalidGenerator("generator translation must be four integers")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "translation", np.round(t).astype(int))
        if self.lift is not None:
            object.__setattr__(self, "lift", np.asarray(self.lift, dtype=float))

    @property
    def perm(self):
        """perm[i] = image axis of axis i; signs[i] = orientation of that image."""
        perm = np.argmax(np.abs(self.matrix), axis=0)
        signs = self.matrix[perm, np.arange(4)]
        return perm, signs

    def apply(self, x, extent):
        return np.mod(np.asarray(x) @ self.matrix.T + self.translation, extent)

    def inverse(self, source_chart: Chart, target_chart: Chart) -> "Generator":
        minv = self.matrix.T
        tinv = -minv @ self.translation
        lift = None
        if self.lift is not None:
            # inverse lift at y is the conjugate of the lift at h^-1(y)
            pre = np.mod(target_chart.coords @ minv.T + tinv, source_chart.extent)
            lift = quat.conj(self.lift[source_chart.vertex_index(pre)])
        return Generator(self.target, self.source, minv, tinv, lift, name=self.name + "^-1")


@dataclass
class OrbitData:
    """Orbit structure of one family of cells under the pseudogroup.

    For each cell: the representative cell, the sign and quaternion transport
    from the representative (value = sign * Ad(transport) value_rep), and the
    orbit id. ``scalar_ok`` marks orbits whose scalar invariant space is
    nonzero; ``su2_basis`` holds per-orbit 3 x d fixed-space bases at the
    representative.
    """
    rep: np.ndarray
    sign: np.ndarray
    transport: np.ndarray | None
    orbit_id: np.ndarray
    reps: np.ndarray
    scalar_ok: np.ndarray
    su2_basis: list

    @property
    def n_orbits(self):
        return len(self.reps)

    def members(self, k):
        return np.flatnonzero(self.orbit_id == k)

    @cached_property
    def orbit_sizes(self):
        return np.bincount(self.orbit_id, minlength=self.n_orbits)

    @cached_property
    def scalar_basis(self):
        """Sparse matrix with orthonormal columns spanning invariant scalar cochains."""
        ok = self.scalar_ok[self.orbit_id]
        cols = np.cumsum(self.scalar_ok) - 1
        rows = np.flatnonzero(ok)
        vals = self.sign[rows] / np.sqrt(self.orbit_sizes[self.orbit_id[rows]])
        return sp.csr_matrix((vals, (rows, cols[self.orbit_id[rows]])),
                             shape=(len(self.rep), int(self.scalar_ok.sum())))

    @cached_property
    def su2_invariant_basis(self):
        """Sparse (3 n_cells) x n_inv orthonormal basis of invariant su2 cochains."""
        offsets = np.concatenate([[0], np.cumsum([b.shape[1] for b in self.su2_basis])])
        rot = (quat.rotation(self.transport) if self.transport is not None
               else np.broadcast_to(np.eye(3), (len(self.rep), 3, 3)))
        rows, cols, vals = [], [], []
        sizes = self.orbit_sizes
        for cell in range(len(self.rep)):
            k = self.orbit_id[cell]
            b = self.su2_basis[k]
            if b.shape[1] == 0:
                continue
            block = self.sign[cell] * rot[cell] @ b / np.sqrt(sizes[k])
            for j in range(b.shape[1]):
                rows.extend(3 * cell + np.arange(3))
                cols.extend([offsets[k] + j] * 3)
                vals.extend(block[:, j])
        return sp.csr_matrix((vals, (rows, cols)), shape=(3 * len(self.rep), int(offsets[-1])))


@dataclass
class EdgeOrbitData:
    """Equivariant reconstruction of links: U_e = L * W * R^-1.

    W is U_rep (``reversed`` False) or its inverse (``reversed`` True).
    """
    rep: np.ndarray
    reversed: np.ndarray
    left: np.ndarray
    right: np.ndarray
    reps: np.ndarray
    orbit_id: np.ndarray


@dataclass(frozen=True, eq=False)
class FoliationPresentation:
    charts: tuple
    generators: tuple
    theta: np.ndarray
    kappa: np.ndarray
    metric_field: np.ndarray | None = None
    name: str = ""
    max_orbit: int = MAX_ORBIT

    def __post_init__(self):
        object.__setattr__(self, "charts", tuple(self.charts))
        object.__setattr__(self, "generators", tuple(self.generators))
        ids = [c.id for c in self.charts]
        if ids != list(range(len(ids))):
            raise ValueError("chart ids must be 0..n-1 in order")
        theta = np.asarray(self.theta, dtype=float)
        kappa = np.asarray(self.kappa, dtype=float)
        if theta.shape != (self.n_cells(0),):
            raise ValueError("theta must hold one value per vertex")
        if kappa.shape != (self.n_cells(1),):
            raise ValueError("kappa must hold one value per edge")
        theta.setflags(write=False)
        kappa.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "kappa", kappa)
        for g in self.generators:
            src, dst = self.charts[g.source], self.charts[g.target]
            perm, _ = g.perm
            if any(dst.extent[perm[i]] != src.extent[i] for i in range(4)):
                raise InvalidGenerator(f"generator {g.name!r} does not map the lattice onto its target")
            if g.lift is not None and g.lift.shape != (src.n_vertices, 4):
                raise InvalidGenerator("bundle lift must hold one quaternion per source vertex")
        if self.metric_field is not None:
            mf = np.asarray(self.metric_field, dtype=float)
            if mf.shape != (self.n_cells(0), 4, 4):
                raise ValueError("metric_field must be (n_vertices, 4, 4)")
            mf.setflags(write=False)
            object.__setattr__(self, "metric_field", mf)
        # orbit enumeration doubles as the finiteness check
        self.orbits(0)

    # -- indexing -----------------------------------------------------------
    @property
    def taut(self):
        return bool(np.all(self.kappa == 0))

    def n_cells(self, r):
        return sum(c.n_vertices for c in self.charts) * NCOMB[r]

    @cached_property
    def vertex_offsets(self):
        return np.concatenate([[0], np.cumsum([c.n_vertices for c in self.charts])])

    def cell_offset(self, chart, r):
        return int(self.vertex_offsets[chart]) * NCOMB[r]

    @property
    def n_vertices(self):
        return int(self.vertex_offsets[-1])

    def vertex(self, chart, x):
        """Global index of vertex ``x`` in ``chart``."""
        return int(self.vertex_offsets[chart] + self.charts[chart].vertex_index(x))

    def locate(self, v):
        """(chart, coordinates) of global vertex ``v``."""
        chart = int(np.searchsorted(self.vertex_offsets, v, side="right") - 1)
        local = v - self.vertex_offsets[chart]
        return chart, tuple(int(c) for c in self.charts[chart].coords[local])

    def cell_vertex(self, r):
        """Global base vertex of each r-cell."""
        return np.repeat(np.arange(self.n_vertices), NCOMB[r])

    def cell_theta(self, r):
        return self.theta[self.cell_vertex(r)]

    @cached_property
    def metric(self):
        """Per-vertex 4x4 transverse metric."""
        if self.metric_field is not None:
            return self.metric_field
        return np.concatenate([np.broadcast_to(np.diag(c.metric), (c.n_vertices, 4, 4))
                               for c in self.charts])

    @property
    def trivial_lifts(self):
        return all(g.lift is None or np.allclose(g.lift, quat.IDENTITY, atol=1e-15)
                   for g in self.generators)

    @cached_property
    def all_generators(self):
        gens = list(self.generators)
        for g in self.generators:
            gens.append(g.inverse(self.charts[g.source], self.charts[g.target]))
        return gens

    # -- generator action on cells --------------------------------------------
    def cell_images(self, gen, r, layout="cell"):
        """Image of every source-chart r-cell: (src, dst, sign, lift quaternion)."""
        src_chart, dst_chart = self.charts[gen.source], self.charts[gen.target]
        x = src_chart.coords
        hx = gen.apply(x, dst_chart.extent)
        perm, signs = gen.perm
        n = len(x)
        srcs, dsts, sgns, anchors = [], [], [], []
        for k, subset in enumerate(SUBSETS[r]):
            image = [int(perm[i]) for i in subset]
            sign = perm_sign(image) * int(np.prod([signs[i] for i in subset]))
            base = hx.copy()
            anchor = x.copy()
            if layout == "cell":
                for i in subset:
                    if signs[i] < 0:
                        base[:, perm[i]] -= 1
                        anchor[:, i] += 1
            kk = SUBSET_INDEX[r][tuple(sorted(image))]
            srcs.append(self.cell_offset(gen.source, r) + np.arange(n) * NCOMB[r] + k)
            dsts.append(self.cell_offset(gen.target, r)
                        + dst_chart.vertex_index(base) * NCOMB[r] + kk)
            sgns.append(np.full(n, sign))
            anchors.append(src_chart.vertex_index(anchor))
        order = np.argsort(np.concatenate(srcs))
        src = np.concatenate(srcs)[order]
        dst = np.concatenate(dsts)[order]
        sgn = np.concatenate(sgns)[order]
        anchor = np.concatenate(anchors)[order]
        lift = None if gen.lift is None else gen.lift[anchor]
        return src, dst, sgn, lift

    def _transitions(self, r, layout):
        out = []
        for g in self.all_generators:
            src, dst, sgn, lift = self.cell_images(g, r, layout)
            out.append((src[0], dst, sgn, lift))
        return out

    def orbits(self, r, layout="cell") -> OrbitData:
        key = (r, layout if r > 0 else "cell")
        cache = self.__dict__.setdefault("_orbit_cache", {})
        if key not in cache:
            cache[key] = self._compute_orbits(r, key[1])
        return cache[key]

    def _compute_orbits(self, r, layout):
        n = self.n_cells(r)
        trans = self._transitions(r, layout)
        lifts = not self.trivial_lifts
        rep = np.full(n, -1)
        sign = np.zeros(n, dtype=int)
        orbit_id = np.full(n, -1)
        transport = np.tile(quat.IDENTITY, (n, 1)) if lifts else None
        reps, scalar_ok, su2_basis = [], [], []
        # transitions apply to cells of the generator's source chart only
        chart_lo = [self.cell_offset(g.source, r) for g in self.all_generators]
        chart_hi = [self.cell_offset(g.source, r) + self.charts[g.source].n_vertices * NCOMB[r]
                    for g in self.all_generators]
        for start in range(n):
            if rep[start] >= 0:
                continue
            k = len(reps)
            reps.append(start)
            rep[start], sign[start], orbit_id[start] = start, 1, k
            stack, members = [start], [start]
            ok = True
            constraints = []
            while stack:
                c = stack.pop()
                for (lo, dst, sgn, lift), clo, chi in zip(trans, chart_lo, chart_hi):
                    if not (clo <= c < chi):
                        continue
                    j = c - lo
                    d = dst[j]
                    s_new = sgn[j] * sign[c]
                    if lifts:
                        q_new = quat.mul(lift[j], transport[c]) if lift is not None else transport[c]
                    if rep[d] < 0:
                        rep[d], sign[d], orbit_id[d] = start, s_new, k
                        if lifts:
                            transport[d] = q_new
                        stack.append(d)
                        members.append(d)
                        if len(members) > self.max_orbit:
                            raise UnsupportedHolonomy(
                                f"orbit of cell {start} (degree {r}) exceeds {self.max_orbit} cells")
                        continue
                    loop_sign = s_new * sign[d]
                    if loop_sign < 0:
                        ok = False
                    if lifts:
                        loop = loop_sign * quat.rotation(quat.mul(quat.conj(transport[d]), q_new))
                        if not np.allclose(loop, np.eye(3), atol=1e-12):
                            constraints.append(loop - np.eye(3))
                    elif loop_sign < 0:
                        constraints.append(-2 * np.eye(3))
            scalar_ok.append(ok)
            if constraints:
                stacked = np.vstack(constraints)
                _, s, vt = np.linalg.svd(stacked)
                rank = int(np.sum(s > 1e-9))
                su2_basis.append(vt[rank:].T.copy())
            else:
                su2_basis.append(np.eye(3))
        return OrbitData(rep, sign, transport, orbit_id, np.array(reps),
                         np.array(scalar_ok, dtype=bool), su2_basis)

    @cached_property
    def edge_orbits(self) -> EdgeOrbitData:
        """Reconstruction data for equivariant link fields on edge-orbit representatives."""
        n = self.n_cells(1)
        data = []
        for g in self.all_generators:
            src, dst, sgn, _ = self.cell_images(g, 1, "cell")
            chart = self.charts[g.source]
            base = self.cell_vertex(1)[src] - self.vertex_offsets[g.source]
            mu = src % 4
            x = chart.coords[base]
            head = x.copy()
            head[np.arange(len(mu)), mu] += 1
            head_idx = chart.vertex_index(head)
            if g.lift is None:
                la = lb = None
            else:
                la, lb = g.lift[base], g.lift[head_idx]
            data.append((src[0], src[-1], dst, sgn, la, lb))
        rep = np.full(n, -1)
        rev = np.zeros(n, dtype=bool)
        left = np.tile(quat.IDENTITY, (n, 1))
        right = np.tile(quat.IDENTITY, (n, 1))
        orbit_id = np.full(n, -1)
        reps = []
        one = quat.IDENTITY
        for start in range(n):
            if rep[start] >= 0:
                continue
            k = len(reps)
            reps.append(start)
            rep[start], orbit_id[start] = start, k
            stack = [start]
            while stack:
                c = stack.pop()
                for lo, hi, dst, sgn, la, lb in data:
                    if not (lo <= c <= hi):
                        continue
                    j = c - lo
                    d = dst[j]
                    ga = one if la is None else la[j]
                    gb = one if lb is None else lb[j]
                    if sgn[j] > 0:
                        nl, nr, nrev = quat.mul(ga, left[c]), quat.mul(gb, right[c]), rev[c]
                    else:
                        nl, nr, nrev = quat.mul(gb, right[c]), quat.mul(ga, left[c]), not rev[c]
                    if rep[d] < 0:
                        rep[d], orbit_id[d], rev[d] = start, k, nrev
                        left[d], right[d] = nl, nr
                        stack.append(d)
                        continue
                    # a loop: the constraint must be automatically satisfied
                    same = (nrev == rev[d])
                    ql = quat.mul(quat.conj(left[d]), nl)
                    qr = quat.mul(quat.conj(right[d]), nr)
                    central = abs(abs(ql[0]) - 1) < 1e-12 and np.allclose(ql, qr, atol=1e-12)
                    if not (same and central):
                        raise UnsupportedHolonomy(
                            f"edge {d} carries a non-trivial stabilizer constraint; "
                            "equivariant links on it are not parametrizable")
        return EdgeOrbitData(rep, rev, left, right, np.array(reps), orbit_id)

    # -- group structure ----------------------------------------------------------
    @cached_property
    def group_order(self):
        """Order of the group generated by the vertex maps, or None for a pseudogroup."""
        if any(g.source != g.target for g in self.generators):
            return None
        n = self.n_vertices
        gens = []
        for g in self.generators:
            src, dst, _, _ = self.cell_images(g, 0)
            perm = np.arange(n)
            perm[src] = dst
            gens.append(perm)
        seen = {tuple(range(n))}
        frontier = [np.arange(n)]
        while frontier:
            nxt = []
            for p in frontier:
                for g in gens:
                    q = g[p]
                    t = tuple(q)
                    if t not in seen:
                        seen.add(t)
                        nxt.append(q)
                        if len(seen) > MAX_GROUP_ORDER:
                            raise UnsupportedHolonomy("group closure exceeds the configured bound")
            frontier = nxt
        return len(seen)

    def orbit_table(self):
        """Per-degree orbits as lists of (chart, local cell) with stabilizer orders."""
        table = []
        order = self.group_order
        for r in range(5):
            od = self.orbits(r)
            entries = []
            for k in range(od.n_orbits):
                mem = od.members(k)
                pairs = []
                for c in mem:
                    v = self.cell_vertex(r)[c]
                    chart = int(np.searchsorted(self.vertex_offsets, v, side="right") - 1)
                    pairs.append((chart, int(c - self.cell_offset(chart, r))))
                entries.append({
                    "representative": pairs[list(mem).index(od.reps[k])],
                    "members": pairs,
                    "stabilizer": None if order is None else order // len(mem),
                })
            table.append(entries)
        return table

    # -- misc ----------------------------------------------------------------------
    def to_dict(self):
        from .io import presentation_to_dict
        return presentation_to_dict(self)

    @cached_property
    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **changes):
        kw = dict(charts=self.charts, generators=self.generators, theta=self.theta,
                  kappa=self.kappa, metric_field=self.metric_field, name=self.name,
                  max_orbit=self.max_orbit)
        kw.update(changes)
        return FoliationPresentation(**kw)


# -- construction -------------------------------------------------------------------
def _as_chart(spec, idx):
    if isinstance(spec, Chart):
        return spec
    if isinstance(spec, int):
        return Chart(idx, (spec,) * 4)
    return Chart(spec.get("id", idx), spec["extent"], spec.get("metric", (1.0,) * 4))


def _as_generator(spec):
    if isinstance(spec, Generator):
        return spec
    return Generator(spec.get("source", 0), spec.get("target", 0), spec["matrix"],
                     spec.get("translation", (0, 0, 0, 0)), spec.get("lift"),
                     spec.get("name", ""))


def build_suspension(chart_spec, generator_specs=(), theta=None, kappa=None, name=""):
    """Presentation of a suspension foliation with unit leafwise fibre.

    ``chart_spec`` is a Chart, a side length, a dict, or a list of those.
    ``theta`` defaults to 1 and ``kappa`` to 0.
    """
    specs = chart_spec if isinstance(chart_spec, (list, tuple)) else [chart_spec]
    charts = [_as_chart(s, i) for i, s in enumerate(specs)]
    gens = [_as_generator(g) for g in generator_specs]
    nv = sum(c.n_vertices for c in charts)
    theta = np.ones(nv) if theta is None else np.asarray(theta, dtype=float)
    kappa = np.zeros(nv * 4) if kappa is None else np.asarray(kappa, dtype=float)
    return FoliationPresentation(charts, gens, theta, kappa, name=name)


def translation_generator(n, shift=None):
    shift = n // 2 if shift is None else shift
    return Generator(0, 0, np.eye(4, dtype=int), (shift, 0, 0, 0), name="sigma")


def rotation_generator():
    m = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    return Generator(0, 0, m, (0, 0, 0, 0), name="rho")


def preset(name, n=4, metric=(1.0, 1.0, 1.0, 1.0)):
    """Canonical instances: p0 (trivial), p2 (free order-2 translation), p4 (90-degree rotation)."""
    name = name.lower()
    chart = Chart(0, (n,) * 4, metric)
    if name == "p0":
        gens = []
    elif name == "p2":
        gens = [translation_generator(n)]
    elif name == "p4":
        gens = [rotation_generator()]
    else:
        raise ValueError(f"unknown preset {name!r}")
    return build_suspension(chart, gens, name=f"{name}_n{n}")


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks.values())

    def add(self, name, residual, tol):
        self.checks[name] = {"residual": float(residual), "tolerance": tol,
                             "passed": bool(residual <= tol)}

    def as_dict(self):
        return {"passed": self.passed, "checks": self.checks}


def validate(P: FoliationPresentation) -> ValidationReport:
    """Check metric invariance, lift unitarity and cocycles, theta and kappa."""
    report = ValidationReport()
    g = P.metric
    res = 0.0
    for gen in P.generators:
        src, dst, _, _ = P.cell_images(gen, 0)
        m = gen.matrix.astype(float)
        pushed = m @ g[src] @ m.T
        res = max(res, float(np.abs(g[dst] - pushed).max()))
    report.add("metric_invariance", res, 1e-12)
    unit = 0.0
    for gen in P.generators:
        if gen.lift is not None:
            unit = max(unit, float(np.abs(np.linalg.norm(gen.lift, axis=-1) - 1).max()))
    report.add("lift_unit_quaternion", unit, 1e-12)
    # cocycle: composing lifts around any closed word must act centrally
    cocycle = 0.0
    if not P.trivial_lifts and unit <= 1e-12:
        od = P.orbits(0)
        for b in od.su2_basis:
            cocycle = max(cocycle, 3 - b.shape[1])
    report.add("lift_cocycle", cocycle, 0)
    report.add("theta_positive", 0.0 if np.all(P.theta > 0) else float(-P.theta.min()), 0.0)
    from .forms import Cochain, invariant_project
    kappa = Cochain(P, 1, P.kappa)
    kres = float(np.abs(invariant_project(kappa).data - P.kappa).max()) if P.kappa.size else 0.0
    report.add("kappa_invariance", kres, 1e-12)
    return report


def leaf_volume(P: FoliationPresentation, vertex) -> float:
    """Sum of theta over the vertex orbit through ``vertex`` (global index or (chart, x))."""
    if not np.isscalar(vertex):
        chart, x = vertex
        vertex = P.vertex(chart, x)
    od = P.orbits(0)
    return float(P.theta[od.members(od.orbit_id[vertex])].sum())


def modified_integral(P: FoliationPresentation, top) -> float:
    """theta-weighted integral of a top-degree cochain (cell values are integrals over cells)."""
    from .errors import DegreeError
    if top.degree != 4:
        raise DegreeError(f"modified_integral needs a 4-cochain, got degree {top.degree}")
    data = top.data if top.value_type == "scalar" else top.data.sum(axis=-1)
    return float(np.dot(P.theta, data))
