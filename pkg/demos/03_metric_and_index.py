"""Metric perturbations and the deformation index.

Run with ``python demos/03_metric_and_index.py``.
"""
from foliata import analysis, flow, gauge, preset
from foliata.flow import MetricPerturbation
from foliata.gauge import EquivariantGaugeField

P0 = preset("p0")
U = gauge.embed_abelian(P0, 1, -1)

# %% stretching the 12-plane and squeezing the 34-plane breaks anti-self-duality, not the charge
for a in (1.0, 1.1, 1.3):
    Pp = flow.perturb_metric(P0, MetricPerturbation.constant(P0, [a, a, 1 / a, 1 / a]))
    V = EquivariantGaugeField(Pp, U.reps)
    rep = gauge.energy_charge(Pp, V)
    print(f"a={a}: charge {rep.charge:.12f}  |F+|^2 {rep.plus:.4f}")

# %% a metric that singles out axis 2 is not rotation invariant
P4 = preset("p4")
try:
    flow.perturb_metric(P4, MetricPerturbation.constant(P4, [1, 2, 1, 1]))
except Exception as err:
    print(type(err).__name__, "-", err)

# %% index of the deformation complex at a few fields
for label, V in [("identity", EquivariantGaugeField.identity(P0)), ("abelian (1,-1)", U)]:
    rep = analysis.numeric_index(P0, V)
    print(f"{label}: h0={rep.h0} h1={rep.h1} h+={rep.hplus} index={rep.index} "
          f"zeta_probe={rep.zeta_probe:g} on_shell={rep.on_shell}")
