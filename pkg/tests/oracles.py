"""Independent reference computations used by the tests."""
import itertools

import numpy as np


def group_linear_parts(P):
    """All linear parts of the group generated by the presentation's generators."""
    gens = [g.matrix for g in P.generators]
    seen = {tuple(np.eye(4, dtype=int).ravel())}
    frontier = [np.eye(4, dtype=int)]
    while frontier:
        nxt = []
        for m in frontier:
            for g in gens:
                h = g @ m
                key = tuple(h.ravel())
                if key not in seen:
                    seen.add(key)
                    nxt.append(h)
        frontier = nxt
    return [np.array(k).reshape(4, 4) for k in seen]


def exterior_trace(m, r):
    """Trace of the r-th exterior power, as the sum of principal r-minors."""
    if r == 0:
        return 1.0
    return sum(np.linalg.det(m[np.ix_(s, s)]) for s in itertools.combinations(range(4), r))


def character_betti(P):
    """Dimension of invariant constant forms: the averaged character of each exterior power."""
    mats = group_linear_parts(P)
    return tuple(int(round(np.mean([exterior_trace(m.astype(float), r) for m in mats])))
                 for r in range(5))


def abelian_charge(m1, m2):
    """Charge of constant diagonal flux m1 through 12-tori and m2 through 34-tori.

    With F12 = 2 pi m1 / N^2, F34 = 2 pi m2 / N^2 (sigma_3 coefficients) and
    Tr(ab) = -2 a.b, Tr(F^F) = -4 F12 F34 per unit volume; integrating over N^4
    cells gives -4 (2 pi)^2 m1 m2 / (8 pi^2) = -2 m1 m2.
    """
    return -2.0 * m1 * m2


def constant_flux_energy(m1, m2, n):
    """YM and plus/minus norms of the constant abelian field on an N^4 torus (unit metric)."""
    c1, c2 = 2 * np.pi * m1 / n ** 2, 2 * np.pi * m2 / n ** 2
    vol = n ** 4
    ym = 2 * vol * (c1 ** 2 + c2 ** 2)
    plus = 2 * vol * 2 * ((c1 + c2) / 2) ** 2
    minus = 2 * vol * 2 * ((c1 - c2) / 2) ** 2
    return ym, plus, minus
