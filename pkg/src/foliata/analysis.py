"""Deformation index at an FASD field, and bubbling analysis of field sequences."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import cohomology, forms, gauge
from . import flow as flowmod
from .cohomology import FoliationCycle
from .errors import InvarianceError
from .forms import Cochain
from .presentation import NCOMB, FoliationPresentation, leaf_volume

ON_SHELL = 1e-6


# -- deformation complex --------------------------------------------------------------
@dataclass
class DeformationReport:
    h0: int
    h1: int
    hplus: int
    index: int
    zeta_probe: float
    charge: float
    b1: int
    b2_plus: int
    on_shell: bool
    flat: bool
    dims: dict
    margins: dict = field(default_factory=dict)

    def as_dict(self):
        return {"h0": self.h0, "h1": self.h1, "hplus": self.hplus, "index": self.index,
                "zeta_probe": self.zeta_probe, "charge": self.charge, "b1": self.b1,
                "b2_plus": self.b2_plus, "on_shell": self.on_shell, "flat": self.flat,
                "dims": self.dims, "margins": self.margins}


def _plus_frames(P):
    """Per vertex, rows W_x (3 x 6) with W_x F = metric-orthonormal self-dual coordinates."""
    m = forms.metric_matrices(P, 2)
    s = forms.star_matrices(P, 2)
    proj = 0.5 * (np.eye(6) + s)
    chol = np.linalg.cholesky(m)
    lt = np.swapaxes(chol, 1, 2)
    # in Cholesky coordinates the projector is symmetric
    sym = lt @ proj @ np.linalg.inv(lt)
    sym = 0.5 * (sym + np.swapaxes(sym, 1, 2))
    _, vecs = np.linalg.eigh(sym)
    w = vecs[:, :, 3:]
    return np.swapaxes(w, 1, 2) @ lt


def plus_dimension(P) -> int:
    """Dimension of invariant self-dual su2 2-cochains (point layout)."""
    b = forms.invariant_basis(P, 2, "su2", "point").tocsc()
    s = forms.star_matrices(P, 2)
    proj = 0.5 * (np.eye(6)[None] + s)
    big = sp.block_diag([sp.kron(p, sp.eye(3)) for p in proj], format="csr")
    tr = float(b.multiply(big @ b).sum())
    return int(round(tr))


def _rank(m, threshold):
    if min(m.shape) == 0:
        return 0, np.zeros(0)
    s = sla.svdvals(m)
    if s[0] == 0:
        return 0, s
    return int(np.sum(s > threshold * s[0])), s


def b2_plus(P, threshold=cohomology.RANK_THRESHOLD) -> int:
    """Rank of the self-dual parts of invariant harmonic 2-cochains."""
    h = cohomology.harmonic_basis(P, 2)
    if h.shape[1] == 0:
        return 0
    plus = np.column_stack([forms.split_selfdual(forms.cell_to_point(Cochain(P, 2, h[:, j])))[0].data
                            for j in range(h.shape[1])])
    return _rank(plus, threshold)[0]


def numeric_index(P: FoliationPresentation, U, threshold=gauge.KERNEL_THRESHOLD) -> DeformationReport:
    """h0, h1, h+ of the complex d_A, d_A+ on invariant su2 cochains, and the probe value.

    The probe is index - (8 k - 3 (1 - b1 + b2+)).
    """
    red = gauge.reducibility_kernel(P, U, threshold)
    dim0 = forms.invariant_basis(P, 0, "su2").shape[1]
    dim1 = 3 * len(P.edge_orbits.reps)
    dimp = plus_dimension(P)
    h0 = red.dimension
    rank_da = dim0 - h0
    links = U.links
    J = flowmod.curvature_jacobian(P, links)
    E = flowmod.chain_matrix(P, U.reps)
    W = _plus_frames(P)
    wbig = sp.block_diag([sp.kron(w, sp.eye(3)) for w in W], format="csr")
    dplus = (wbig @ (J @ E)).toarray()
    rank_dp, sv = _rank(dplus, threshold)
    h1 = dim1 - rank_dp - rank_da
    hplus = dimp - rank_dp
    index = h1 - h0 - hplus
    en = gauge.energy_charge(P, U)
    betti = cohomology.basic_betti(P).betti
    bp = b2_plus(P)
    zeta = index - (8 * en.charge - 3 * (1 - betti[1] + bp))
    margins = {}
    if sv.size and sv[0] > 0:
        kept = sv[sv > threshold * sv[0]]
        dropped = sv[sv <= threshold * sv[0]]
        margins["dplus"] = {"largest": float(sv[0]),
                            "smallest_kept": float(kept.min()) if kept.size else None,
                            "largest_dropped": float(dropped.max()) if dropped.size else None}
    if red.singular_values.size:
        margins["d0"] = {"largest": float(red.singular_values[0]),
                         "smallest": float(red.singular_values[-1])}
    return DeformationReport(h0, h1, hplus, index, float(zeta), en.charge, betti[1], bp,
                             en.plus <= ON_SHELL, red.flat,
                             {"omega0": dim0, "omega1": dim1, "omega_plus": dimp}, margins)


# -- concentration --------------------------------------------------------------------
def _box_sum(P, values, radius):
    """Sum over the Chebyshev box of the given radius around every vertex (periodic)."""
    out = np.empty_like(values)
    for ci, chart in enumerate(P.charts):
        v0, v1 = P.vertex_offsets[ci], P.vertex_offsets[ci + 1]
        a = values[v0:v1].reshape(chart.extent)
        for axis, n in enumerate(chart.extent):
            shifts = sorted({k % n for k in range(-radius, radius + 1)})
            a = sum(np.roll(a, s, axis=axis) for s in shifts)
        out[v0:v1] = a.reshape(-1)
    return out


def _box_size(P, radius):
    c = P.charts[0]
    return int(np.prod([len({k % n for k in range(-radius, radius + 1)}) for n in c.extent]))


def _chebyshev(P, u, v):
    cu, xu = P.locate(u)
    cv, xv = P.locate(v)
    if cu != cv:
        return np.inf
    ext = P.charts[cu].extent
    return max(min(abs(a - b) % n, n - abs(a - b) % n) for a, b, n in zip(xu, xv, ext))


@dataclass
class Concentration:
    orbit: int
    vertices: list
    point_masses: list
    mass: float

    def as_dict(self, P=None):
        out = {"orbit": self.orbit, "mass": self.mass, "point_masses": self.point_masses}
        out["vertices"] = ([list(P.locate(v)[1]) for v in self.vertices] if P is not None
                           else self.vertices)
        return out


def _as_density(P, d):
    data = d.data if isinstance(d, Cochain) else np.asarray(d, dtype=float)
    if data.shape != (P.n_vertices,):
        raise ValueError("densities are scalar 0-cochains")
    res = forms.invariance_residual(Cochain(P, 0, data))
    if res > 1e-10 * max(1.0, float(np.abs(data).max())):
        raise InvarianceError(f"density is not invariant (residual {res:.2e})")
    return data


def concentration_detect(P, densities, eps=None, eps2=0.5, radius=1, tail=None):
    """Orbits where the ball mass stays at least eps^2 above the background on the tail.

    Ball mass is the density summed over the Chebyshev box of ``radius``
    lattice units; the background is the median density times the box size.
    The tail defaults to the second half of the sequence. Candidate orbits are
    taken in order of final point density, and one within Chebyshev distance
    2 * radius of an accepted point is suppressed. Returns a list of
    Concentration records (whole orbits, never partial ones).
    """
    if eps is not None:
        eps2 = eps * eps
    dens = [_as_density(P, d) for d in densities]
    if not dens:
        return []
    n = len(dens)
    tail = max(1, n - n // 2) if tail is None else tail
    size = _box_size(P, radius)
    excess = np.array([_box_sum(P, d, radius) - np.median(d) * size for d in dens[n - tail:]])
    final = excess[-1]
    cand = np.flatnonzero(np.all(excess >= eps2, axis=0))
    if cand.size == 0:
        return []
    od = P.orbits(0)
    last = dens[-1]
    # rank by point density: a box between two bumps can out-collect either centre
    score = {int(k): (float(last[od.members(k)].max()), float(final[od.members(k)].max()))
             for k in {int(od.orbit_id[v]) for v in cand}}
    orbit_ids = sorted(score, key=lambda k: (-score[k][0], -score[k][1], k))
    accepted, points = [], []
    for k in orbit_ids:
        mem = [int(v) for v in od.members(k)]
        if any(_chebyshev(P, v, w) <= 2 * radius for v in mem for w in points):
            continue
        accepted.append(k)
        points.extend(mem)
    out = []
    for k in accepted:
        mem = [int(v) for v in od.members(k)]
        pm = [float(final[v]) for v in mem]
        out.append(Concentration(k, mem, pm, float(sum(pm))))
    return out


def gaussian_density_sequence(P, vertex, widths, mass=1.0, background=0.0):
    """Invariant densities: background plus a vertex Gaussian of ``mass`` at each orbit point."""
    od = P.orbits(0)
    members = od.members(od.orbit_id[vertex])
    seq = []
    for w in widths:
        d = np.full(P.n_vertices, float(background))
        for m in members:
            c, x0 = P.locate(int(m))
            chart = P.charts[c]
            v0 = P.vertex_offsets[c]
            diff = np.abs(chart.coords - np.array(x0))
            diff = np.minimum(diff, np.array(chart.extent) - diff)
            g = np.exp(-0.5 * (diff ** 2).sum(axis=1) / (w * w))
            d[v0:v0 + chart.n_vertices] += mass * g / g.sum()
        seq.append(d)
    return seq


# -- synthetic lump sequences ---------------------------------------------------------
def lump_angles(P, bumps, width):
    """Plaquette angles of Gaussian flux bumps.

    ``bumps`` lists (plane, centre, flux): a plane such as (0, 1), a centre
    (c_mu, c_nu) in lattice units and the total flux. Each bump is spread over
    the faces of its plane by a periodic Gaussian in the distance from the
    face centre, so the angle on a face depends only on its two in-plane
    coordinates and the cochain is closed.
    """
    f = np.zeros((P.n_vertices, NCOMB[2]))
    for plane, centre, flux in bumps:
        k = gauge.PLANES.index(tuple(plane))
        mu, nu = plane
        for ci, chart in enumerate(P.charts):
            v0 = P.vertex_offsets[ci]
            x = chart.coords
            w = np.ones(len(x))
            for axis, c in zip((mu, nu), centre):
                n = chart.extent[axis]
                dd = np.abs(x[:, axis] + 0.5 - c) % n
                dd = np.minimum(dd, n - dd)
                w *= np.exp(-0.5 * dd ** 2 / (width * width))
            others = [a for a in range(4) if a not in (mu, nu)]
            plane_sum = w[np.all(x[:, others] == 0, axis=1)].sum()
            f[v0:v0 + chart.n_vertices, k] += flux * w / plane_sum
    return f.reshape(-1)


_PAIRS = [((0, 1), (2, 3), -1.0), ((0, 2), (1, 3), 1.0), ((0, 3), (1, 2), -1.0)]


def standard_bumps(P, multiplicity=1):
    """Bump list for a shrinking lump of charge 2 * multiplicity at each point of an orbit.

    p0: one point at the origin. p2: the orbit {0, (N/2, 0, 0, 0)} of the
    translation. p4: 12-flux at the four rotation-invariant positions in the
    12-plane (two fixed points and one orbit of size 2), the smallest flux the
    rotation admits; only multiplicity 1 is available there.
    """
    name = P.name.split("_")[0]
    n = P.charts[0].extent[0]
    h = n // 2
    if name == "p0":
        pts = [(0, 0, 0, 0)]
    elif name == "p2":
        pts = [(0, 0, 0, 0), (h, 0, 0, 0)]
    elif name == "p4":
        if multiplicity != 1:
            raise ValueError("the rotation instance only supports multiplicity 1")
        pts = [(0, 0, 0, 0), (h, h, 0, 0), (h, 0, 0, 0), (0, h, 0, 0)]
    else:
        raise ValueError(f"no standard lump layout for presentation {P.name!r}")
    if not 1 <= multiplicity <= 3:
        raise ValueError("multiplicity must be 1, 2 or 3")
    bumps = []
    for a, b, sign in _PAIRS[:multiplicity]:
        firsts = sorted({(p[a[0]], p[a[1]]) for p in pts})
        seconds = sorted({(p[b[0]], p[b[1]]) for p in pts})
        for c in firsts:
            bumps.append((a, c, 2 * np.pi))
        for c in seconds:
            bumps.append((b, c, sign * 2 * np.pi))
    return bumps


def lump_sequence(P, bumps=None, widths=None, multiplicity=1, background=None):
    """Abelian fields whose flux bumps shrink toward single vertices.

    Each lump point carries charge 2 (per plane pair) in the limit; the widths
    default to 1.5 * 2^-alpha for alpha = 0..5. ``background`` optionally adds
    constant integer fluxes per plane, e.g. {(0, 1): 2, (2, 3): -2}.
    """
    bumps = standard_bumps(P, multiplicity) if bumps is None else bumps
    widths = [1.5 * 2.0 ** -a for a in range(6)] if widths is None else widths
    base = 0.0 if not background else gauge.constant_flux_angles(P, background)
    return [gauge.abelian_from_angles(P, lump_angles(P, bumps, w) + base) for w in widths]


# -- bubbling -----------------------------------------------------------------------------
@dataclass
class BubblingReport:
    cycle: FoliationCycle | None
    charge_initial: float
    charge_limit: float
    mass: float
    budget_residual: float
    concentrations: list
    rounding: list
    unresolved: bool
    final_charge: float

    @property
    def relative_residual(self):
        return self.budget_residual / max(abs(self.charge_initial), 1e-300)

    def as_dict(self, P=None):
        return {
            "cycle": None if self.cycle is None else self.cycle.as_dict(P),
            "charge_initial": self.charge_initial, "charge_limit": self.charge_limit,
            "charge_final": self.final_charge, "mass": self.mass,
            "budget_residual": self.budget_residual, "relative_residual": self.relative_residual,
            "concentrations": [c.as_dict(P) for c in self.concentrations],
            "rounding_distance": self.rounding, "unresolved": self.unresolved,
            "ideal_pair": {"limit": "last field of the sequence",
                           "cycle": None if self.cycle is None else self.cycle.as_dict()},
        }


def bubble_analyze(P, fields, eps=None, eps2=0.5) -> BubblingReport:
    """Concentrated masses, the cycle T, and the charge budget k0 = k_limit + M(T).

    The last field stands in for the limit; k_limit is its charge with the
    concentrated masses removed. Multiplicities are the nearest integers to
    orbit mass / leaf volume; a rounding distance above 0.25 marks the report
    unresolved.
    """
    if len(fields) < 3:
        raise ValueError("bubbling analysis needs at least three fields")
    if any(U.P is not P for U in fields):
        raise ValueError("fields must share the presentation")
    dens = [gauge.charge_density(P, gauge.curvature(P, U).F) for U in fields]
    conc = concentration_detect(P, dens, eps=eps, eps2=eps2)
    k0 = float(dens[0].sum())
    kf = float(dens[-1].sum())
    orbits, mults, rounding = [], [], []
    mass_t = 0.0
    concentrated = 0.0
    for c in conc:
        vol = leaf_volume(P, c.vertices[0])
        ratio = c.mass / vol
        nj = int(np.round(ratio))
        rounding.append(float(abs(ratio - nj)))
        concentrated += c.mass
        if nj != 0:
            orbits.append(c.orbit)
            mults.append(nj)
            mass_t += nj * vol
    unresolved = any(r > 0.25 for r in rounding)
    cycle = FoliationCycle(tuple(orbits), tuple(mults)) if orbits else None
    k_limit = kf - concentrated
    resid = abs(k0 - k_limit - mass_t)
    return BubblingReport(cycle, k0, k_limit, mass_t, resid, conc, rounding, unresolved, kf)
