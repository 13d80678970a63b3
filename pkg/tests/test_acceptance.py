"""Acceptance criteria, each run at its stated tolerance.

Each test records one pass/fail line (shown in the terminal summary) and then
asserts the same condition.
"""
import json
import time

import numpy as np

from foliata import analysis, cli, cohomology, flow, forms, gauge
from foliata.errors import PerturbationError
from foliata.flow import FlowOptions, MetricPerturbation
from foliata.forms import Cochain
from foliata.gauge import EquivariantGaugeField
from foliata.presentation import preset

from conftest import record_criterion
from oracles import character_betti


def test_criterion_01_dec_soundness():
    t0 = time.time()
    P = preset("p0")
    dd_exact = True
    for r in range(3):
        prod = (forms.d_matrix(P, r + 1) @ forms.d_matrix(P, r)).tocsr()
        prod.eliminate_zeros()
        dd_exact &= prod.nnz == 0
    rng = np.random.default_rng(1)
    worst = 0.0
    for metric in [(1, 1, 1, 1), (1.4, 0.8, 1.1, 0.6)]:
        Pm = preset("p0", 4, metric)
        for _ in range(500):
            c = forms.random_cochain(Pm, 2, rng)
            s2 = forms.star(forms.star(c))
            plus, minus = forms.split_selfdual(c)
            pp, pm = forms.split_selfdual(plus)
            mp, mm = forms.split_selfdual(minus)
            worst = max(worst,
                        np.abs(s2.data - c.data).max(),
                        np.abs((plus + minus).data - c.data).max(),
                        np.abs(pp.data - plus.data).max(), np.abs(pm.data).max(),
                        np.abs(mm.data - minus.data).max(), np.abs(mp.data).max(),
                        abs(forms.inner_theta(plus, minus)))
    elapsed = time.time() - t0
    ok = dd_exact and worst <= 1e-12 and elapsed < 5
    record_criterion(1, "DEC soundness", ok,
                     f"d^2 exact={dd_exact}, star/projector residual={worst:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_02_adjointness():
    rng = np.random.default_rng(2)
    worst = 0.0
    names = ["p0", "p2", "p4"]
    Ps = {n: preset(n) for n in names}
    for i in range(100):
        P = Ps[names[i % 3]]
        r = int(rng.integers(0, 4))
        kappa = forms.invariant_project(forms.random_cochain(P, 1, rng)).data
        f = forms.random_cochain(P, r, rng)
        w = forms.random_cochain(P, r + 1, rng)
        lhs = forms.inner_theta(Cochain(P, r + 1, forms.twisted_d_matrix(P, r, kappa) @ f.data), w)
        rhs = forms.inner_theta(f, forms.codifferential_twisted(w, kappa))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    ok = worst <= 1e-12
    record_criterion(2, "twisted adjointness", ok, f"worst relative residual {worst:.1e} over 100 pairs")
    assert ok


def test_criterion_03_basic_cohomology():
    t0 = time.time()
    Ps = {n: preset(n) for n in ("p0", "p2", "p4")}
    betti = {n: cohomology.basic_betti(P).betti for n, P in Ps.items()}
    oracle = {n: character_betti(P) for n, P in Ps.items()}
    ok_values = betti["p0"] == (1, 4, 6, 4, 1) and betti["p4"] == (1, 2, 2, 2, 1)
    ok_oracle = all(betti[n] == oracle[n] for n in Ps)
    ok_poincare = all(b[r] == b[4 - r] for b in betti.values() for r in range(5))
    ratios = []
    for P in Ps.values():
        for r in range(5):
            rep = cohomology.pairing_matrix(P, r)
            ratios.append(rep.singular_values[-1] / rep.singular_values[0] if rep.nondegenerate else 0.0)
    ok_pairing = min(ratios) >= 1e-6
    elapsed = time.time() - t0
    ok = ok_values and ok_oracle and ok_poincare and ok_pairing and elapsed < 60
    record_criterion(3, "basic cohomology", ok,
                     f"betti={betti}, oracle match={ok_oracle}, poincare={ok_poincare}, "
                     f"min pairing ratio={min(ratios):.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_04_energy_identity():
    worst = 0.0
    rng = np.random.default_rng(4)
    for name in ("p0", "p2", "p4"):
        P = preset(name)
        for seed in range(50):
            U = gauge.random_equivariant_field(P, seed, float(rng.uniform(0.05, 0.6)))
            worst = max(worst, gauge.energy_charge(P, U).identity_residual)
    ok = worst <= 1e-10
    record_criterion(4, "energy identity", ok, f"worst relative residual {worst:.1e} over 150 fields")
    assert ok


def test_criterion_05_gradient():
    worst = 0.0
    for k, name in enumerate(("p0", "p2", "p4")):
        P = preset(name)
        U = gauge.random_equivariant_field(P, 100 + k, 0.05)
        g, _, _ = flow.grad_plus_energy(P, U)
        rng = np.random.default_rng(k)
        comps = list(zip(rng.integers(0, len(U.reps), 20), rng.integers(0, 3, 20)))
        fd = flow.finite_difference_gradient(P, U, comps, step=1e-5)
        an = np.array([g[r, a] for r, a in comps])
        worst = max(worst, float(np.max(np.abs(an - fd) / np.abs(an))))
    ok = worst <= 1e-6
    record_criterion(5, "gradient vs finite differences", ok, f"worst relative error {worst:.1e}")
    assert ok


def test_criterion_06_fasd_flow():
    details, ok = [], True
    t0 = time.time()
    for name, m in (("p0", (1, -1)), ("p2", (2, -2))):
        P = preset(name)
        U0 = gauge.perturb_field(gauge.embed_abelian(P, *m), 0, 0.02)
        res = flow.descend(P, U0, FlowOptions(max_iters=500))
        plus = [t[1] for t in res.trajectory]
        monotone = all(b <= a for a, b in zip(plus, plus[1:]))
        eq = gauge.equivariance_residual(P, res.field.links)
        unit = gauge.check_field(res.field)["unit_norm"]
        # gauge-clean: energies of the endpoint are unchanged by a random gauge
        V = gauge.apply_gauge(P, res.field, gauge.random_gauge(P, 1))
        a, b = gauge.energy_charge(P, res.field), gauge.energy_charge(P, V)
        gres = max(abs(x - y) / max(1.0, abs(x)) for x, y in zip(a.as_tuple()[:4], b.as_tuple()[:4]))
        good = (plus[-1] <= 1e-10 and res.iterations <= 500 and monotone
                and max(eq, unit, gres) <= 1e-10)
        ok &= good
        details.append(f"{name} {m}: |F+|^2={plus[-1]:.1e} in {res.iterations} its, "
                       f"monotone={monotone}, residuals={max(eq, unit, gres):.1e}")
    elapsed = time.time() - t0
    ok &= elapsed < 30
    record_criterion(6, "FASD flow", ok, "; ".join(details) + f"; {elapsed:.1f}s")
    assert ok


def test_criterion_07_reducibility():
    rows, ok = [], True
    for name, m in (("p0", (1, -1)), ("p2", (2, -2)), ("p4", (4, -4))):
        P = preset(name)
        fields = {"identity": (EquivariantGaugeField.identity(P), 3),
                  "abelian": (gauge.embed_abelian(P, *m), 1),
                  "rough": (gauge.random_equivariant_field(P, 5, 0.8), 0)}
        for label, (U, expected) in fields.items():
            dim = gauge.reducibility_kernel(P, U).dimension
            h0 = analysis.numeric_index(P, U).h0
            ok &= dim == expected and h0 == dim
            rows.append(f"{name}/{label}={dim}(h0 {h0})")
    record_criterion(7, "reducibility kernel", ok, ", ".join(rows))
    assert ok


def test_criterion_08_metric_perturbation():
    P = preset("p0")
    fields = [gauge.embed_abelian(P, 1, -1), gauge.random_equivariant_field(P, 3, 0.3)]
    worst_k, min_change = 0.0, np.inf
    for U in fields:
        k0 = gauge.energy_charge(P, U).charge
        f0 = gauge.fasd_residual(P, U)
        for a in (1.1, 1.3):
            Pp = flow.perturb_metric(P, MetricPerturbation.constant(P, [a, a, 1 / a, 1 / a]))
            V = EquivariantGaugeField(Pp, U.reps)
            worst_k = max(worst_k, abs(gauge.energy_charge(Pp, V).charge - k0))
            min_change = min(min_change, abs(gauge.fasd_residual(Pp, V) - f0))
    P4 = preset("p4")
    try:
        flow.perturb_metric(P4, MetricPerturbation.constant(P4, [1, 2, 1, 1]))
        rejected = False
    except PerturbationError:
        rejected = True
    ok = worst_k <= 1e-10 and min_change > 1e-3 and rejected
    record_criterion(8, "metric perturbation", ok,
                     f"charge drift {worst_k:.1e}, min |F+|^2 change {min_change:.3f}, P4 rejection={rejected}")
    assert ok


def test_criterion_09_bubbling_budget():
    t0 = time.time()
    details, ok = [], True
    # P2: one orbit of size 2 through the origin
    P2 = preset("p2", 8)
    r2 = analysis.bubble_analyze(P2, analysis.lump_sequence(P2))
    od = P2.orbits(0)
    support2 = [sorted(int(v) for v in od.members(o)) for o in r2.cycle.support]
    want2 = [sorted([P2.vertex(0, (0, 0, 0, 0)), P2.vertex(0, (4, 0, 0, 0))])]
    good2 = (support2 == want2 and max(r2.rounding) <= 0.25 and not r2.unresolved
             and r2.budget_residual <= 0.05 * abs(r2.charge_initial))
    details.append(f"P2 support={support2} n={r2.cycle.multiplicities} M={r2.mass:g} "
                   f"residual={r2.budget_residual:.1e}/k0={r2.charge_initial:.3f}")
    # P4: lumps at the two rotation-fixed points and one size-2 orbit
    P4 = preset("p4", 8)
    r4 = analysis.bubble_analyze(P4, analysis.lump_sequence(P4))
    od4 = P4.orbits(0)
    support4 = sorted(sorted(int(v) for v in od4.members(o)) for o in r4.cycle.support)
    want4 = sorted([[P4.vertex(0, (0, 0, 0, 0))], [P4.vertex(0, (4, 4, 0, 0))],
                    sorted([P4.vertex(0, (4, 0, 0, 0)), P4.vertex(0, (0, 4, 0, 0))])])
    good4 = (support4 == want4 and max(r4.rounding) <= 0.25 and not r4.unresolved
             and r4.budget_residual <= 0.05 * abs(r4.charge_initial))
    details.append(f"P4 support sizes={[len(s) for s in support4]} n={r4.cycle.multiplicities} "
                   f"M={r4.mass:g} residual={r4.budget_residual:.1e}/k0={r4.charge_initial:.3f}")
    elapsed = time.time() - t0
    ok = good2 and good4 and elapsed < 60
    record_criterion(9, "bubbling budget", ok, "; ".join(details) + f"; {elapsed:.1f}s")
    assert ok


def test_criterion_10_determinism(tmp_path):
    same = {}
    for scenario in ("p0_identity_check.json", "p2_flow_abelian.json", "p2_bubble.json"):
        blobs = []
        for i in range(2):
            out = tmp_path / f"{scenario}-{i}"
            code = cli.main(["run", "--scenario", scenario, "--out", str(out), "--threads", "1"])
            assert code == 0
            blobs.append((out / "report.json").read_bytes())
        same[scenario] = blobs[0] == blobs[1] and "started" not in json.loads(blobs[0])
    ok = all(same.values())
    record_criterion(10, "determinism", ok, ", ".join(f"{k}: {'identical' if v else 'DIFFER'}"
                                                      for k, v in same.items()))
    assert ok
