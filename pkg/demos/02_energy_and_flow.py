"""Energy identity and the anti-self-dual descent on equivariant fields.

Run with ``python demos/02_energy_and_flow.py``.
"""
import numpy as np

from foliata import flow, gauge, preset

P0 = preset("p0")

# %% constant abelian flux: (1,-1) is anti-self-dual, (1,1) is self-dual
for m in [(1, -1), (1, 1)]:
    rep = gauge.energy_charge(P0, gauge.embed_abelian(P0, *m))
    print(m, {k: round(v, 6) for k, v in rep.as_dict().items()})

# %% YM = 8 pi^2 k + 2 |F+|^2 holds for every field, smooth or not
U = gauge.random_equivariant_field(P0, 0, 0.5)
rep = gauge.energy_charge(P0, U)
print("rough field: YM", rep.ym, " 8pi^2 k + 2|F+|^2", 8 * np.pi ** 2 * rep.charge + 2 * rep.plus)

# %% perturb the (1,-1) solution and flow back down
U0 = gauge.perturb_field(gauge.embed_abelian(P0, 1, -1), seed=0, eps=0.02)
res = flow.descend(P0, U0)
print(f"converged={res.converged} after {res.iterations} iterations ({res.reason})")
for i in (0, 10, 50, res.iterations):
    ym, plus, g = res.trajectory[i]
    print(f"  it {i:4d}: |F+|^2 = {plus:.3e}  YM = {ym:.6f}")
print("final charge", gauge.energy_charge(P0, res.field).charge)

# %% on the free quotient the smallest admissible flux is (2,-2)
P2 = preset("p2")
try:
    gauge.embed_abelian(P2, 1, -1)
except Exception as err:
    print(type(err).__name__, "-", err)
U2 = gauge.embed_abelian(P2, 2, -2)
print("P2 (2,-2) charge", gauge.energy_charge(P2, U2).charge)
print("reducibility dimension", gauge.reducibility_kernel(P2, U2).dimension)
