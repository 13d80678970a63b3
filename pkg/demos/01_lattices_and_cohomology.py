"""Three quotients of the 4-torus and their basic cohomology.

Run with ``python demos/01_lattices_and_cohomology.py``.
"""
import numpy as np

from foliata import cohomology, forms, preset, validate
from foliata.presentation import leaf_volume

# %% the canonical instances: trivial group, a free translation, a rotation with fixed points
for name in ("p0", "p2", "p4"):
    P = preset(name)
    sizes, counts = np.unique(P.orbits(0).orbit_sizes, return_counts=True)
    print(f"{name}: {P.n_vertices} vertices, orbits by size {dict(zip(sizes.tolist(), counts.tolist()))}, "
          f"validate={validate(P).passed}")

# %% leaves are vertex orbits; their volume is the theta-sum along the orbit
P4 = preset("p4")
print("leaf volume at (0,0,1,3):", leaf_volume(P4, (0, (0, 0, 1, 3))))
print("leaf volume at (1,0,0,0):", leaf_volume(P4, (0, (1, 0, 0, 0))))

# %% invariant cochains compute the cohomology of the quotient
for name in ("p0", "p2", "p4"):
    rep = cohomology.basic_betti(preset(name))
    print(name, "betti", rep.betti)

# %% the wedge pairing between degree r and 4 - r classes
P0 = preset("p0")
pr = cohomology.pairing_matrix(P0, 2)
print("P0 middle pairing signature", pr.signature)
print(np.round(pr.matrix, 6))

# %% the star splits 2-cochains into self-dual and anti-self-dual parts
c = forms.random_cochain(P0, 2, np.random.default_rng(0))
plus, minus = forms.split_selfdual(c)
print("<plus, minus> =", forms.inner_theta(plus, minus))
