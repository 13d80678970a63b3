import numpy as np
import pytest

from foliata import cohomology as coh
from foliata import forms
from foliata.cohomology import FoliationCycle
from foliata.errors import InvarianceError
from foliata.forms import Cochain
from foliata.presentation import modified_integral, preset

from oracles import character_betti


@pytest.mark.parametrize("name,expected", [("p0", (1, 4, 6, 4, 1)), ("p2", (1, 4, 6, 4, 1)),
                                           ("p4", (1, 2, 2, 2, 1))])
def test_basic_betti(presets, name, expected):
    P = presets[name]
    rep = coh.basic_betti(P)
    assert rep.betti == expected
    assert rep.betti == character_betti(P)
    assert all(rep.betti[r] == rep.betti[4 - r] for r in range(5))


def test_betti_on_anisotropic_and_larger_lattice():
    P = preset("p4", 6, metric=(1.0, 1.0, 0.5, 2.0))
    assert coh.basic_betti(P).betti == character_betti(P)


def test_rank_margins_are_clear(P4):
    rep = coh.basic_betti(P4)
    for m in rep.margins.values():
        if m["largest_dropped"] is not None:
            assert m["largest_dropped"] < 1e-10 * m["largest"]
        if m["smallest_kept"] is not None:
            assert m["smallest_kept"] > 1e-3 * m["largest"]


def test_twisted_cohomology_with_zero_kappa_agrees(P0):
    assert coh.basic_betti(P0, twisted=True).betti == coh.basic_betti(P0).betti


def test_harmonic_representatives_closed_and_invariant(P4):
    for r in range(5):
        h = coh.harmonic_basis(P4, r)
        assert h.shape[1] == coh.basic_betti(P4).betti[r]
        for j in range(h.shape[1]):
            c = Cochain(P4, r, h[:, j])
            assert forms.invariance_residual(c) <= 1e-12
            if r < 4:
                assert np.abs(forms.d(c).data).max() <= 1e-10


def test_pairing_p0(P0):
    r0 = coh.pairing_matrix(P0, 0)
    assert r0.matrix.shape == (1, 1) and np.isclose(r0.matrix[0, 0], 256)
    r2 = coh.pairing_matrix(P0, 2)
    assert r2.matrix.shape == (6, 6) and r2.nondegenerate
    assert r2.signature == (3, 3)


def test_pairing_p4_nondegenerate(P4):
    for r in range(5):
        rep = coh.pairing_matrix(P4, r)
        assert rep.nondegenerate, r
    assert coh.pairing_matrix(P4, 1).matrix.shape == (2, 2)


def test_pairing_csv(P0):
    text = coh.pairing_matrix(P0, 0).to_csv()
    assert np.isclose(float(text.strip()), 256.0, rtol=1e-12)


def test_cycles_p2_p4(P2, P4):
    T = FoliationCycle.from_vertices(P2, [0], [1])
    one = forms.constant_form(P2, ())
    assert coh.cycle_eval(P2, T, one) == 2
    assert coh.mass(P2, T) == 2
    T4 = FoliationCycle.from_vertices(P4, [P4.vertex(0, (0, 0, 1, 2))], [3])
    assert coh.mass(P4, T4) == 3


def test_cycle_rejects_zero_and_duplicates():
    with pytest.raises(ValueError):
        FoliationCycle((1, 2), (1, 0))
    with pytest.raises(ValueError):
        FoliationCycle((1, 1), (1, 2))


def test_cycle_eval_non_invariant(P2):
    f = np.zeros(P2.n_vertices)
    f[0] = 1
    with pytest.raises(InvarianceError):
        coh.cycle_eval(P2, FoliationCycle((0,), (1,)), Cochain(P2, 0, f))


def test_cycle_linearity_and_mass_additivity(P4, rng):
    f = forms.invariant_project(forms.random_cochain(P4, 0, rng))
    g = forms.invariant_project(forms.random_cochain(P4, 0, rng))
    a = FoliationCycle((0, 5), (2, 1))
    b = FoliationCycle((7,), (3,))
    assert np.isclose(coh.cycle_eval(P4, a + b, f), coh.cycle_eval(P4, a, f) + coh.cycle_eval(P4, b, f))
    assert np.isclose(coh.cycle_eval(P4, a, f + g), coh.cycle_eval(P4, a, f) + coh.cycle_eval(P4, a, g))
    assert np.isclose(coh.mass(P4, a + b), coh.mass(P4, a) + coh.mass(P4, b))
    with pytest.raises(ValueError):
        coh.mass(P4, FoliationCycle((0,), (-1,)))


def test_diffuse_consistency(P4, rng):
    tau = forms.invariant_project(forms.random_cochain(P4, 0, rng))
    omega = forms.random_cochain(P4, 4, rng)
    lhs = modified_integral(P4, Cochain(P4, 4, tau.data * omega.data))
    rhs = float(np.dot(coh.diffuse_current(P4, omega), tau.data))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
