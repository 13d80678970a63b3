"""Shrinking instanton-like lumps and the charge budget.

Run with ``python demos/04_bubbling.py``.
"""
import numpy as np

from foliata import analysis, gauge, preset

# %% plain densities first: a Gaussian whose width halves each step
P2 = preset("p2")
seq = analysis.gaussian_density_sequence(P2, 0, [2.0 ** -a for a in range(6)], background=0.01)
for c in analysis.concentration_detect(P2, seq):
    print("orbit", c.orbit, "points", [P2.locate(v)[1] for v in c.vertices], "masses", np.round(c.point_masses, 4))

# %% gauge fields: flux bumps narrowing to single plaquettes on the 8^4 lattice
for name in ("p2", "p4"):
    P = preset(name, 8)
    fields = analysis.lump_sequence(P)
    dens = [gauge.charge_density(P, gauge.curvature(P, U).F) for U in fields]
    print(name, "peak density along the sequence", np.round([d.max() for d in dens], 3))
    rep = analysis.bubble_analyze(P, fields)
    d = rep.as_dict(P)
    print("  cycle", d["cycle"]["multiplicities"], "leaves", d["cycle"]["leaves"])
    print(f"  k0={rep.charge_initial:.4f} k_limit={rep.charge_limit:.4f} M(T)={rep.mass:g} "
          f"budget residual={rep.budget_residual:.2e}")

# %% scaling the lump multiplicity scales the mass
P = preset("p2", 8)
for k in (1, 2, 3):
    rep = analysis.bubble_analyze(P, analysis.lump_sequence(P, multiplicity=k))
    print(f"k={k}: n={rep.cycle.multiplicities} M(T)={rep.mass:g}")
