"""Basic cohomology, the twisted duality pairing, and foliation cycles on Y."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import forms
from .errors import InvarianceError
from .forms import Cochain
from .presentation import SUBSETS, FoliationPresentation, leaf_volume

RANK_THRESHOLD = 1e-8
DENSE_LIMIT = 8000


def numerical_rank(m, threshold=RANK_THRESHOLD):
    """Rank from singular values above ``threshold`` times the largest one."""
    if min(m.shape) == 0:
        return 0, np.zeros(0)
    s = sla.svdvals(m.toarray() if sp.issparse(m) else m)
    if s[0] == 0:
        return 0, s
    return int(np.sum(s > threshold * s[0])), s


def null_space(m, threshold=RANK_THRESHOLD):
    """Orthonormal basis (columns) of the numerical null space."""
    m = m.toarray() if sp.issparse(m) else np.asarray(m)
    if m.shape[0] == 0:
        return np.eye(m.shape[1])
    _, s, vt = sla.svd(m, full_matrices=True)
    rank = int(np.sum(s > threshold * s[0])) if s.size and s[0] > 0 else 0
    return vt[rank:].T


def restricted_d(P, r, kappa=None):
    """(d - kappa^) on invariant r-cochains, in orthonormal invariant coordinates."""
    br = forms.invariant_basis(P, r)
    bn = forms.invariant_basis(P, r + 1)
    return (bn.T @ forms.twisted_d_matrix(P, r, kappa) @ br)


def _kernel_dim_sparse(lap, threshold):
    """Kernel dimension of a sparse PSD matrix via shift-invert Lanczos."""
    n = lap.shape[0]
    k = 8
    lam_max = spla.eigsh(lap, k=1, which="LA", return_eigenvectors=False)[0]
    while True:
        k = min(k, n - 1)
        vals = spla.eigsh(lap, k=k, sigma=-1e-3 * lam_max, which="LM", return_eigenvectors=False)
        small = int(np.sum(np.sqrt(np.clip(vals, 0, None)) <= threshold * np.sqrt(lam_max)))
        if small < k or k == n - 1:
            return small
        k *= 2


@dataclass
class CohomologyReport:
    betti: tuple
    threshold: float
    ranks: tuple
    dims: tuple
    margins: dict = field(default_factory=dict)
    twisted: bool = False

    def as_dict(self):
        return {"betti": list(self.betti), "rank_threshold": self.threshold,
                "ranks": list(self.ranks), "cochain_dims": list(self.dims),
                "twisted": self.twisted, "margins": self.margins}


def basic_betti(P: FoliationPresentation, threshold=RANK_THRESHOLD, kappa=None,
                twisted=False) -> CohomologyReport:
    """Betti numbers of the complex of invariant cochains.

    With ``twisted=True`` the differential is d - kappa^ (kappa defaults to
    the presentation's mean-curvature cochain).
    """
    kap = (P.kappa if kappa is None else kappa) if twisted else np.zeros(P.n_cells(1))
    dims = [forms.invariant_basis(P, r).shape[1] for r in range(5)]
    ranks, margins = [], {}
    big = max(dims) > DENSE_LIMIT
    if not big:
        for r in range(4):
            rk, s = numerical_rank(restricted_d(P, r, kap), threshold)
            ranks.append(rk)
            if s.size:
                above = s[s > threshold * s[0]] if s[0] > 0 else s[:0]
                below = s[s <= threshold * s[0]] if s[0] > 0 else s
                margins[f"d{r}"] = {"smallest_kept": float(above.min()) if above.size else None,
                                    "largest_dropped": float(below.max()) if below.size else None,
                                    "largest": float(s[0])}
        betti = [dims[r] - (ranks[r] if r < 4 else 0) - (ranks[r - 1] if r > 0 else 0)
                 for r in range(5)]
    else:
        ds = [restricted_d(P, r, kap).tocsr() for r in range(4)]
        betti = []
        for r in range(5):
            lap = sp.csr_matrix((dims[r], dims[r]))
            if r < 4:
                lap = lap + ds[r].T @ ds[r]
            if r > 0:
                lap = lap + ds[r - 1] @ ds[r - 1].T
            betti.append(_kernel_dim_sparse(lap.tocsc(), threshold))
        ranks = [None] * 4
    return CohomologyReport(tuple(int(b) for b in betti), threshold, tuple(ranks), tuple(dims),
                            margins, twisted)


def harmonic_basis(P, r, kappa=None, threshold=RANK_THRESHOLD):
    """Invariant r-cochains closed under d_kappa and coclosed in the theta inner product.

    Returned as an (n_cells, b) array whose columns represent the cohomology.
    """
    kap = np.zeros(P.n_cells(1)) if kappa is None else kappa
    br = forms.invariant_basis(P, r)
    blocks = []
    if r < 4:
        blocks.append(restricted_d(P, r, kap).toarray())
    if r > 0:
        prev = restricted_d(P, r - 1, kap).toarray()
        gram = (br.T @ forms.gram_matrix(P, r) @ br).toarray()
        blocks.append(prev.T @ gram)
    ns = null_space(np.vstack(blocks), threshold)
    return br @ ns


def class_representatives(P, r, kappa=None, threshold=RANK_THRESHOLD):
    """Harmonic representatives aligned with the invariant constant forms where possible.

    The harmonic projections of the orbit-averaged forms dx_I are taken as
    representatives (on a flat torus quotient they are the constant forms
    themselves); directions they miss are completed from the orthonormal
    harmonic basis.
    """
    h = harmonic_basis(P, r, kappa, threshold)
    b = h.shape[1]
    if b == 0:
        return h
    consts = np.column_stack([forms.invariant_project(forms.constant_form(P, I)).data
                              for I in SUBSETS[r]])
    x = h.T @ consts
    _, rr, piv = sla.qr(x, pivoting=True)
    diag = np.abs(np.diag(rr)) if rr.size else np.zeros(0)
    keep = [p for p, dv in zip(piv, diag) if dv > 1e-8 * max(1.0, diag.max())][:b]
    reps = h @ x[:, keep]
    if len(keep) < b:
        q, _ = np.linalg.qr(np.column_stack([x[:, keep], np.eye(b)]))
        reps = np.column_stack([reps, h @ q[:, len(keep):b]])
    return reps


@dataclass
class PairingReport:
    degree: int
    matrix: np.ndarray
    singular_values: np.ndarray
    nondegenerate: bool
    signature: tuple | None

    def as_dict(self):
        return {"degree": self.degree, "pairing": self.matrix.tolist(),
                "singular_values": self.singular_values.tolist(),
                "nondegenerate": self.nondegenerate,
                "signature": None if self.signature is None else list(self.signature)}

    def to_csv(self):
        return "\n".join(",".join(repr(float(v)) for v in row) for row in self.matrix) + "\n"


def integrate_wedge(P, a, b):
    """theta-weighted integral of a ^ b for scalar cochains of complementary degree."""
    return float(np.dot(P.theta, forms.wedge(a, b).data))


def pairing_matrix(P: FoliationPresentation, r, threshold=1e-6) -> PairingReport:
    """Matrix of the integral of alpha ^ beta over representatives.

    alpha runs over the d_kappa-cohomology in degree r and beta over the
    untwisted cohomology in degree 4 - r. Non-degeneracy is judged by the
    smallest singular value relative to the largest.
    """
    alphas = class_representatives(P, r, P.kappa)
    betas = class_representatives(P, 4 - r)
    m = np.array([[integrate_wedge(P, Cochain(P, r, alphas[:, i]), Cochain(P, 4 - r, betas[:, j]))
                   for j in range(betas.shape[1])] for i in range(alphas.shape[1])])
    if m.size == 0:
        return PairingReport(r, m.reshape(alphas.shape[1], betas.shape[1]), np.zeros(0),
                             alphas.shape[1] == betas.shape[1], None)
    s = sla.svdvals(m)
    square = m.shape[0] == m.shape[1]
    nondeg = bool(square and s[-1] >= threshold * s[0])
    signature = None
    if square and r == 2:
        ev = np.linalg.eigvalsh(0.5 * (m + m.T))
        signature = (int(np.sum(ev > threshold * s[0])), int(np.sum(ev < -threshold * s[0])))
    return PairingReport(r, m, s, nondeg, signature)


# -- foliation cycles -----------------------------------------------------------------
@dataclass(frozen=True)
class FoliationCycle:
    """Integer combination of compact leaves, i.e. vertex orbits on Y."""
    support: tuple
    multiplicities: tuple

    def __post_init__(self):
        support = tuple(int(o) for o in self.support)
        mult = tuple(int(n) for n in self.multiplicities)
        if len(support) != len(mult):
            raise ValueError("one multiplicity per support orbit")
        if any(n == 0 for n in mult):
            raise ValueError("multiplicities must be nonzero")
        if len(set(support)) != len(support):
            raise ValueError("support orbits must be distinct")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "multiplicities", mult)

    @classmethod
    def from_vertices(cls, P, vertices, multiplicities):
        od = P.orbits(0)
        return cls(tuple(int(od.orbit_id[v]) for v in vertices), tuple(multiplicities))

    def __add__(self, other):
        combined = dict(zip(self.support, self.multiplicities))
        for o, n in zip(other.support, other.multiplicities):
            combined[o] = combined.get(o, 0) + n
        items = [(o, n) for o, n in combined.items() if n != 0]
        return FoliationCycle(tuple(o for o, _ in items), tuple(n for _, n in items))

    def measure(self, P):
        """The invariant weighted Dirac measure as per-vertex weights."""
        od = P.orbits(0)
        w = np.zeros(P.n_vertices)
        for o, n in zip(self.support, self.multiplicities):
            if not 0 <= o < od.n_orbits:
                raise ValueError(f"orbit {o} does not exist")
            mem = od.members(o)
            w[mem] += n * P.theta[mem]
        return w

    def as_dict(self, P=None):
        out = {"support": list(self.support), "multiplicities": list(self.multiplicities)}
        if P is not None:
            od = P.orbits(0)
            out["leaves"] = [[P.locate(int(v)) for v in od.members(o)] for o in self.support]
        return out


def _check_invariant(P, f, tol=1e-10):
    res = forms.invariance_residual(f)
    scale = max(1.0, float(np.abs(f.data).max()))
    if res > tol * scale:
        raise InvarianceError(f"function is not invariant (residual {res:.3e})")


def cycle_eval(P, T: FoliationCycle, f: Cochain) -> float:
    if f.degree != 0 or f.value_type != "scalar":
        raise TypeError("cycles evaluate scalar 0-cochains")
    _check_invariant(P, f)
    return float(np.dot(T.measure(P), f.data))


def mass(P, T: FoliationCycle) -> float:
    if any(n < 0 for n in T.multiplicities):
        raise ValueError("mass is defined for positive cycles")
    od = P.orbits(0)
    return float(sum(n * leaf_volume(P, int(od.reps[o])) for o, n in zip(T.support, T.multiplicities)))


def diffuse_current(P, omega: Cochain) -> np.ndarray:
    """Degree-0 current on Y represented by a top cochain: per-vertex weights theta * omega."""
    if omega.degree != 4:
        raise TypeError("diffuse currents come from top cochains")
    return P.theta * omega.data
