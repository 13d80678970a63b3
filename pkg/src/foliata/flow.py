"""Descent of |F+|^2 over equivariant fields, and invariant metric perturbations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import forms
from . import gauge
from . import quaternion as quat
from .errors import BranchCutError, PerturbationError
from .gauge import EquivariantGaugeField
from .presentation import NCOMB, FoliationPresentation


@dataclass
class FlowOptions:
    max_iters: int = 500
    gradient_tolerance: float = 1e-8
    energy_floor: float = 1e-12
    backtrack: float = 0.5
    armijo: float = 1e-4
    initial_step: float = 0.1
    min_step: float = 1e-14
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking factor must lie in (0, 1)")
        for name in ("max_iters", "gradient_tolerance", "energy_floor", "armijo",
                     "initial_step", "min_step"):
            if getattr(self, name) < 0 or (name != "max_iters" and getattr(self, name) == 0):
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class FlowResult:
    field: object
    iterations: int
    trajectory: list
    converged: bool
    reason: str
    reducibility: int | None = None
    info: dict = field(default_factory=dict)

    def as_dict(self):
        return {"iterations": self.iterations, "converged": self.converged,
                "stop_reason": self.reason, "reducibility_dimension": self.reducibility,
                "final": dict(zip(("ym", "plus_norm2", "grad_sup"), self.trajectory[-1])),
                "trajectory": [list(t) for t in self.trajectory], **self.info}

    def trajectory_csv(self):
        lines = ["iteration,ym,plus_norm2,grad_sup"]
        for i, (ym, p, g) in enumerate(self.trajectory):
            lines.append(f"{i},{ym!r},{p!r},{g!r}")
        return "\n".join(lines) + "\n"


# -- gradient --------------------------------------------------------------------------
def _plus_weight(P, F):
    """G = 4 theta M P+ F, so that d|F+|^2 = sum G . dF."""
    plus, _ = forms.split_selfdual(F)
    mp = forms._apply_pointwise(forms.metric_matrices(P, 2), plus)
    return 4.0 * P.theta[:, None, None] * mp


def _leaf_factors(leaf):
    """Per step: edge, sign, quaternion q with dQ-log = sign * Ad(q) xi."""
    out = []
    for i, (e, f) in enumerate(zip(leaf.edges, leaf.forward)):
        q = leaf.prefix[i] if f else leaf.prefix[i + 1]
        out.append((e, 1.0 if f else -1.0, q))
    return out


def link_gradient(P, links):
    """Gradient of |F+|^2 with respect to left perturbations of every link.

    Returns (energy, YM, gradient of shape (n_edges, 3)).
    """
    leaves = gauge._leaves(P, links)
    Fv = np.zeros((P.n_vertices, NCOMB[2], 3))
    for leaf in leaves:
        Fv[:, leaf.plane] += 0.25 * leaf.s * leaf.t * leaf.logq
    F = forms.Cochain(P, 2, Fv.reshape(-1, 3), "point")
    G = _plus_weight(P, F)
    plus, _ = forms.split_selfdual(F)
    energy = forms.inner_theta(plus, plus)
    ym = forms.inner_theta(F, F)
    grad = np.zeros((P.n_cells(1), 3))
    for leaf in leaves:
        a = quat.dlog_left(leaf.logq)
        h = 0.25 * leaf.s * leaf.t * np.einsum("vji,vj->vi", a, G[:, leaf.plane])
        for e, sgn, q in _leaf_factors(leaf):
            np.add.at(grad, e, sgn * quat.adjoint(quat.conj(q), h))
    return energy, ym, grad


def _chain_data(P, reps):
    """Per edge: sign and quaternion T with xi_e = sign * Ad(T) eta_rep."""
    eo = P.edge_orbits
    t = eo.left.copy()
    rev = eo.reversed
    if np.any(rev):
        t[rev] = quat.mul(eo.left[rev], quat.conj(reps[eo.orbit_id[rev]]))
    sign = np.where(rev, -1.0, 1.0)
    return sign, t


def chain_to_reps(P, reps, grad_links):
    sign, t = _chain_data(P, reps)
    per_edge = sign[:, None] * quat.adjoint(quat.conj(t), grad_links)
    out = np.zeros((len(reps), 3))
    np.add.at(out, P.edge_orbits.orbit_id, per_edge)
    return out


def grad_plus_energy(P, U: EquivariantGaugeField):
    """Gradient of |F+|^2 on representatives (left-logarithmic coordinates).

    Returns (gradient (n_reps, 3), energy, YM).
    """
    energy, ym, g = link_gradient(P, U.links)
    return chain_to_reps(P, U.reps, g), energy, ym


def curvature_jacobian(P, links) -> sp.csr_matrix:
    """Sparse Jacobian of the point-layout clover F with respect to link perturbations."""
    leaves = gauge._leaves(P, links)
    rows, cols, vals = [], [], []
    v = np.arange(P.n_vertices)
    for leaf in leaves:
        a = 0.25 * leaf.s * leaf.t * quat.dlog_left(leaf.logq)
        r0 = 3 * (v * NCOMB[2] + leaf.plane)
        for e, sgn, q in _leaf_factors(leaf):
            block = sgn * a @ quat.rotation(q)
            rr = np.broadcast_to(r0[:, None, None] + np.arange(3)[None, :, None], block.shape)
            cc = np.broadcast_to(3 * e[:, None, None] + np.arange(3)[None, None, :], block.shape)
            rows.append(rr.reshape(-1))
            cols.append(cc.reshape(-1))
            vals.append(block.reshape(-1))
    n_out = 3 * P.n_cells(2)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n_out, 3 * P.n_cells(1)))


def chain_matrix(P, reps) -> sp.csr_matrix:
    """Sparse map from representative perturbations eta to link perturbations xi."""
    sign, t = _chain_data(P, reps)
    rot = sign[:, None, None] * quat.rotation(t)
    ne = len(sign)
    oid = P.edge_orbits.orbit_id
    rr = np.broadcast_to(3 * np.arange(ne)[:, None, None] + np.arange(3)[None, :, None], rot.shape)
    cc = np.broadcast_to(3 * oid[:, None, None] + np.arange(3)[None, None, :], rot.shape)
    return sp.csr_matrix((rot.reshape(-1), (rr.reshape(-1), cc.reshape(-1))),
                         shape=(3 * ne, 3 * len(reps)))


def finite_difference_gradient(P, U, components, step=1e-5):
    """Central differences of |F+|^2 along chosen (representative, axis) pairs."""
    out = []
    for rep, axis in components:
        vals = []
        for sgn in (1, -1):
            eta = np.zeros((len(U.reps), 3))
            eta[rep, axis] = sgn * step
            V = U.with_reps(quat.mul(quat.exp(eta), U.reps))
            vals.append(gauge.fasd_residual(P, V))
        out.append((vals[0] - vals[1]) / (2 * step))
    return np.array(out)


# -- descent ---------------------------------------------------------------------------
def _descent(x0, evaluate, retract, opts: FlowOptions):
    """Armijo backtracking descent on a product of SU(2) factors.

    ``evaluate(x)`` returns (energy, ym, grad); ``retract(x, v)`` maps a
    tangent step to a new point. The first trial step of each iteration is
    a Barzilai-Borwein length, falling back to ``opts.initial_step``.
    """
    x = x0
    energy, ym, g = evaluate(x)
    traj = [(ym, energy, float(np.abs(g).max()))]
    step = opts.initial_step
    prev = None
    its = 0
    reason = "max_iters"
    converged = False
    while True:
        gsup = float(np.abs(g).max())
        if energy <= opts.energy_floor:
            reason, converged = "energy_floor", True
            break
        if gsup <= opts.gradient_tolerance:
            reason, converged = "gradient_tolerance", True
            break
        if its >= opts.max_iters:
            break
        if prev is not None:
            # alternate the two Barzilai-Borwein lengths
            s_prev, y_prev = prev
            sy = float(np.vdot(s_prev, y_prev))
            if sy > 0:
                step = (float(np.vdot(s_prev, s_prev)) / sy if its % 2
                        else sy / float(np.vdot(y_prev, y_prev)))
        t = step
        g2 = float(np.vdot(g, g))
        while True:
            try:
                xn = retract(x, -t * g)
                en, ymn, gn = evaluate(xn)
                ok = en <= energy - opts.armijo * t * g2
            except BranchCutError:
                ok = False
            if ok:
                break
            t *= opts.backtrack
            if t < opts.min_step:
                return x, its, traj, False, "line_search_failed"
        # tangent vectors at different points are compared in left coordinates
        prev = (-t * g, gn - g)
        x, energy, ym, g = xn, en, ymn, gn
        its += 1
        traj.append((ym, energy, float(np.abs(g).max())))
    return x, its, traj, converged, reason


def descend(P: FoliationPresentation, U0: EquivariantGaugeField, opts: FlowOptions | None = None,
            with_reducibility=True) -> FlowResult:
    """Minimize |F+|^2 over equivariant fields by retraction U_rep <- exp(-t g) U_rep."""
    opts = opts or FlowOptions()
    count = {"it": 0}

    def evaluate(reps):
        try:
            g, e, ym = grad_plus_energy(P, U0.with_reps(reps))
        except BranchCutError as err:
            err.iteration = count["it"]
            raise
        return e, ym, g

    def retract(reps, v):
        count["it"] += 1
        return quat.normalize(quat.mul(quat.exp(v), reps))

    reps, its, traj, conv, reason = _descent(U0.reps, evaluate, retract, opts)
    U = U0.with_reps(reps)
    red = gauge.reducibility_kernel(P, U).dimension if with_reducibility else None
    return FlowResult(U, its, traj, conv, reason, red)


def cool_links(P, links, opts: FlowOptions | None = None):
    """Plain lattice ASD cooling on all links, without any orbit bookkeeping.

    Returns (links, iterations, trajectory, converged, reason).
    """
    opts = opts or FlowOptions()

    def evaluate(x):
        e, ym, g = link_gradient(P, x)
        return e, ym, g

    def retract(x, v):
        return quat.normalize(quat.mul(quat.exp(v), x))

    return _descent(np.asarray(links, dtype=float), evaluate, retract, opts)


# -- metric perturbations ------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class MetricPerturbation:
    """Per-vertex symmetric positive-definite 4x4 matrices, invariant under the pseudogroup."""
    phi: np.ndarray

    @classmethod
    def constant(cls, P, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim == 1:
            m = np.diag(m)
        return cls(np.broadcast_to(m, (P.n_vertices, 4, 4)).copy())

    def check(self, P):
        phi = np.asarray(self.phi, dtype=float)
        if phi.shape != (P.n_vertices, 4, 4):
            raise PerturbationError(f"phi must be ({P.n_vertices}, 4, 4)")
        if np.abs(phi - np.swapaxes(phi, 1, 2)).max() > 1e-12:
            raise PerturbationError("phi must be symmetric")
        if np.linalg.eigvalsh(phi).min() <= 1e-10:
            raise PerturbationError("phi must be positive definite")
        res = 0.0
        for g in P.generators:
            src, dst, _, _ = P.cell_images(g, 0)
            r = g.matrix.astype(float)
            res = max(res, float(np.abs(phi[dst] - r @ phi[src] @ r.T).max()))
        if res > 1e-12:
            raise PerturbationError(f"phi is not invariant under the pseudogroup (residual {res:.2e})")
        return phi


def perturb_metric(P, phi: MetricPerturbation) -> FoliationPresentation:
    """Presentation with the transverse metric replaced by phi^T g phi; theta and kappa kept."""
    m = phi.check(P)
    g = P.metric
    new = np.einsum("vji,vjk,vkl->vil", m, g, m)
    return P.replace(metric_field=new, name=P.name + "+phi")


def _two_form_matrix(x):
    """(n, 6[, 3]) components -> (n, 4, 4[, 3]) antisymmetric matrices."""
    shape = x.shape[:1] + (4, 4) + x.shape[2:]
    out = np.zeros(shape)
    for k, (i, j) in enumerate(gauge.PLANES):
        out[:, i, j] = x[:, k]
        out[:, j, i] = -x[:, k]
    return out


def transport_two_form(P, F, phi):
    """sqrt(det phi) phi^-T F phi^-1 vertexwise, for comparing norms across metrics."""
    m = forms.Cochain(P, 2, F.data, F.layout).per_vertex()
    inv = np.linalg.inv(phi)
    mat = _two_form_matrix(m)
    moved = np.einsum("vai,vabc,vbj->vijc", inv, mat, inv)
    scale = np.sqrt(np.linalg.det(phi))
    out = np.stack([moved[:, i, j] for i, j in gauge.PLANES], axis=1) * scale[:, None, None]
    return forms.Cochain(P, 2, out.reshape(F.data.shape), F.layout)


def transport_residual(P, U, phi: MetricPerturbation) -> float:
    """|F+|^2 under phi^T g phi minus |(transported F)+|^2 under g."""
    Pp = perturb_metric(P, phi)
    F = gauge.curvature(P, U).F
    lhs = gauge.fasd_residual(Pp, EquivariantGaugeField(Pp, U.reps))
    moved = transport_two_form(P, F, phi.phi)
    plus, _ = forms.split_selfdual(moved)
    return abs(lhs - forms.inner_theta(plus, plus))
