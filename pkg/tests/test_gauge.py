import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from foliata import gauge, io
from foliata import quaternion as quat
from foliata.errors import BranchCutError, EquivarianceError
from foliata.gauge import EquivariantGaugeField, GaugeTransform
from foliata.presentation import preset

from oracles import abelian_charge, constant_flux_energy


def test_identity_field_has_zero_curvature(presets):
    for P in presets.values():
        U = EquivariantGaugeField.identity(P)
        assert np.array_equal(gauge.curvature(P, U).F.data, np.zeros((P.n_cells(2), 3)))
        rep = gauge.energy_charge(P, U)
        assert rep.as_tuple() == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_abelian_curvature_constant(P0):
    F = gauge.curvature(P0, gauge.embed_abelian(P0, 1, 0)).F.data.reshape(-1, 6, 3)
    assert np.allclose(F[:, 0, 2], 2 * np.pi / 16, atol=1e-12)
    assert np.allclose(np.delete(F, 0, axis=1), 0, atol=1e-12)
    assert np.allclose(F[:, 0, :2], 0, atol=1e-12)


@pytest.mark.parametrize("m", [(1, -1), (1, 1), (2, 1), (0, 3)])
def test_abelian_energy_matches_closed_form(P0, m):
    rep = gauge.energy_charge(P0, gauge.embed_abelian(P0, *m))
    ym, plus, minus = constant_flux_energy(*m, 4)
    assert np.isclose(rep.ym, ym, rtol=1e-10)
    assert np.isclose(rep.plus, plus, rtol=1e-10, atol=1e-10)
    assert np.isclose(rep.minus, minus, rtol=1e-10, atol=1e-10)
    assert abs(rep.charge - abelian_charge(*m)) <= 1e-10


def test_abelian_zero_flux_is_identity(P2):
    U = gauge.embed_abelian(P2, 0, 0)
    assert np.array_equal(U.reps, EquivariantGaugeField.identity(P2).reps)


def test_abelian_compatibility(P2, P4):
    with pytest.raises(EquivarianceError):
        gauge.embed_abelian(P2, 1, -1)
    with pytest.raises(EquivarianceError):
        gauge.embed_abelian(P4, 2, -2)
    U = gauge.embed_abelian(P4, 4, -4)
    assert gauge.fasd_residual(P4, U) <= 1e-10
    assert gauge.equivariance_residual(P4, U.links) <= 1e-12


def test_plaquette_mode_matches_abelian(P0):
    U = gauge.embed_abelian(P0, 1, -1)
    Fp = gauge.curvature(P0, U, "plaquette").F
    rep = gauge.energy_charge(P0, U, "plaquette")
    assert Fp.layout == "cell"
    assert abs(rep.charge - 2) <= 1e-10 and rep.identity_residual <= 1e-10


@pytest.mark.parametrize("name", ["p0", "p2", "p4"])
def test_energy_identity_random(presets, name):
    P = presets[name]
    for seed in range(5):
        rep = gauge.energy_charge(P, gauge.random_equivariant_field(P, seed, 0.4))
        assert rep.identity_residual <= 1e-10
        assert rep.ym >= 8 * np.pi ** 2 * rep.charge - 1e-9


def test_charge_density_sums_to_charge(P4):
    U = gauge.random_equivariant_field(P4, 3, 0.3)
    F = gauge.curvature(P4, U).F
    assert np.isclose(gauge.charge_density(P4, F).sum(), gauge.energy_charge(P4, U).charge, rtol=1e-12)


@pytest.mark.parametrize("name", ["p2", "p4"])
def test_gauge_invariance(presets, name):
    P = presets[name]
    U = gauge.random_equivariant_field(P, 11, 0.3)
    s = gauge.random_gauge(P, 5, 1.0)
    V = gauge.apply_gauge(P, U, s)
    a, b = gauge.energy_charge(P, U), gauge.energy_charge(P, V)
    for x, y in zip(a.as_tuple()[:4], b.as_tuple()[:4]):
        assert abs(x - y) <= 1e-10 * max(1.0, abs(x))
    assert gauge.equivariance_residual(P, V.links) <= 1e-12
    # pointwise |F| is invariant
    na = np.linalg.norm(gauge.curvature(P, U).F.data, axis=1)
    nb = np.linalg.norm(gauge.curvature(P, V).F.data, axis=1)
    assert np.abs(na - nb).max() <= 1e-12
    assert gauge.reducibility_kernel(P, U).dimension == gauge.reducibility_kernel(P, V).dimension


def test_gauge_identity_and_flat(P0):
    U = gauge.embed_abelian(P0, 1, -1)
    V = gauge.apply_gauge(P0, U, GaugeTransform.identity(P0))
    assert np.allclose(V.reps, U.reps)
    flat = gauge.apply_gauge(P0, EquivariantGaugeField.identity(P0), gauge.random_gauge(P0, 2))
    assert gauge.energy_charge(P0, flat).ym <= 1e-20
    W = gauge.apply_gauge(P0, U, gauge.random_gauge(P0, 9))
    assert abs(gauge.fasd_residual(P0, W) - gauge.fasd_residual(P0, U)) <= 1e-10


def test_random_field_determinism(P2):
    a = gauge.random_equivariant_field(P2, 4, 0.1)
    b = gauge.random_equivariant_field(P2, 4, 0.1)
    c = gauge.random_equivariant_field(P2, 5, 0.1)
    assert np.array_equal(a.reps, b.reps) and not np.array_equal(a.reps, c.reps)
    zero = gauge.random_equivariant_field(P2, 4, 0.0)
    assert np.array_equal(zero.reps, EquivariantGaugeField.identity(P2).reps)
    with pytest.raises(ValueError):
        gauge.random_equivariant_field(P2, 0, 1.5)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["p2", "p4"]), st.integers(0, 10 ** 6), st.floats(0.0, 1.0))
def test_equivariance_is_structural(name, seed, rough):
    P = preset(name)
    U = gauge.random_equivariant_field(P, seed, rough)
    res = gauge.check_field(U)
    assert res["equivariance"] <= 1e-12 and res["unit_norm"] <= 1e-14


def test_branch_cut(P0):
    reps = EquivariantGaugeField.identity(P0).reps.copy()
    reps[5] = [-1.0, 0, 0, 0]
    with pytest.raises(BranchCutError) as info:
        gauge.curvature(P0, EquivariantGaugeField(P0, reps))
    assert info.value.vertex is not None and info.value.plane is not None


@pytest.mark.parametrize("name", ["p0", "p2", "p4"])
def test_reducibility(presets, name):
    P = presets[name]
    m = {"p0": (1, -1), "p2": (2, -2), "p4": (4, -4)}[name]
    ident = gauge.reducibility_kernel(P, EquivariantGaugeField.identity(P))
    assert ident.dimension == 3 and ident.flat
    ab = gauge.reducibility_kernel(P, gauge.embed_abelian(P, *m))
    assert ab.dimension == 1 and not ab.flat
    # the kernel is the sigma_3 line
    u = ab.basis[:, 0].reshape(-1, 3)
    assert np.allclose(np.abs(u[:, 2]), np.abs(u[0, 2])) and np.allclose(u[:, :2], 0, atol=1e-10)
    for seed in range(3):
        assert gauge.reducibility_kernel(P, gauge.random_equivariant_field(P, seed, 0.8)).dimension == 0


def test_field_roundtrip(tmp_path, P4):
    U = gauge.random_equivariant_field(P4, 1, 0.5)
    io.save_field(U, tmp_path / "f.json")
    V = io.load_field(tmp_path / "f.json", P4)
    assert np.array_equal(U.reps, V.reps)
    with pytest.raises(ValueError):
        io.load_field(tmp_path / "f.json", preset("p2"))


def test_gauge_transform_respects_stabilizers(P4):
    # a value at a rotation-fixed vertex must commute with the (trivial) lift
    s = gauge.random_gauge(P4, 0, 1.0)
    vals = s.values
    v = P4.vertex(0, (0, 0, 1, 1))
    assert np.allclose(np.linalg.norm(vals, axis=-1), 1)
    assert vals[v].shape == (4,)
    assert np.allclose(quat.mul(vals[v], quat.conj(vals[v])), quat.IDENTITY)
