import numpy as np
import pytest

from foliata import forms, io
from foliata.errors import DegreeError, InvalidGenerator, UnsupportedHolonomy
from foliata.presentation import (Chart, Generator, build_suspension, leaf_volume,
                                  modified_integral, preset, validate)


def test_preset_sizes_and_orbits(P0, P2, P4):
    assert P0.n_vertices == 256
    assert set(P0.orbits(0).orbit_sizes) == {1}
    assert set(P2.orbits(0).orbit_sizes) == {2}
    sizes = P4.orbits(0).orbit_sizes
    assert set(sizes) == {1, 2, 4}
    od = P4.orbits(0)
    for x in P4.charts[0].coords:
        v = P4.vertex(0, x)
        size = len(od.members(od.orbit_id[v]))
        assert (size == 1) == (tuple(x[:2]) in {(0, 0), (2, 2)})


def test_orbit_brute_force_p4(P4):
    # close each vertex under the rotation directly
    chart = P4.charts[0]
    rot = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    od = P4.orbits(0)
    for x in chart.coords[::7]:
        orbit = {tuple(x)}
        y = x.copy()
        for _ in range(3):
            y = np.mod(rot @ y, 4)
            orbit.add(tuple(y))
        got = {tuple(P4.locate(int(v))[1]) for v in od.members(od.orbit_id[P4.vertex(0, x)])}
        assert got == orbit


@pytest.mark.parametrize("r", range(5))
def test_orbits_partition_cells(presets, r):
    for P in presets.values():
        od = P.orbits(r)
        counts = np.bincount(od.orbit_id, minlength=od.n_orbits)
        assert counts.sum() == P.n_cells(r)
        for g in P.generators:
            src, dst, _, _ = P.cell_images(g, r)
            assert np.array_equal(od.orbit_id[src], od.orbit_id[dst])


def test_validate_presets(presets):
    for P in presets.values():
        assert validate(P).passed


def test_validate_detects_bad_lift():
    n = 4
    lift = np.tile([1.0, 0, 0, 0], (n ** 4, 1))
    lift[5] *= 1.1
    P = build_suspension(Chart(0, (n,) * 4), [Generator(0, 0, np.eye(4), (2, 0, 0, 0), lift)])
    rep = validate(P)
    assert not rep.checks["lift_unit_quaternion"]["passed"]


def test_validate_detects_anisotropic_rotation():
    P = preset("p4", 4, metric=(1, 2, 1, 1))
    rep = validate(P)
    assert not rep.checks["metric_invariance"]["passed"]


def test_invalid_generators():
    with pytest.raises(InvalidGenerator):
        Generator(0, 0, np.diag([2, 1, 1, 1]), (0, 0, 0, 0))
    with pytest.raises(InvalidGenerator):
        Generator(0, 0, np.eye(4), (0.5, 0, 0, 0))
    # axis swap between unequal extents is not a lattice map
    swap = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    with pytest.raises(InvalidGenerator):
        build_suspension(Chart(0, (4, 2, 4, 4)), [Generator(0, 0, swap, (0, 0, 0, 0))])


def test_orbit_bound_raises_unsupported():
    P = preset("p0")
    with pytest.raises(UnsupportedHolonomy):
        P.replace(generators=(Generator(0, 0, np.eye(4), (1, 0, 0, 0)),), max_orbit=2)


def test_leaf_volume(P0, P2, P4):
    assert leaf_volume(P0, 17) == 1
    assert leaf_volume(P2, 17) == 2
    assert leaf_volume(P4, (0, (0, 0, 1, 3))) == 1
    assert leaf_volume(P4, (0, (1, 0, 0, 0))) == 4
    od = P4.orbits(0)
    for k in range(0, od.n_orbits, 5):
        vols = {leaf_volume(P4, int(v)) for v in od.members(k)}
        assert len(vols) == 1


def test_modified_integral(P0, P2):
    assert modified_integral(P0, forms.constant_form(P0, (0, 1, 2, 3))) == 256
    P = P0.replace(theta=2 * np.ones(256))
    assert modified_integral(P, forms.constant_form(P, (0, 1, 2, 3))) == 512
    assert modified_integral(P2, forms.constant_form(P2, (0, 1, 2, 3))) == 256
    with pytest.raises(DegreeError):
        modified_integral(P0, forms.constant_form(P0, (0, 1)))


def test_modified_integral_linear(P0, rng):
    a = forms.random_cochain(P0, 4, rng)
    b = forms.random_cochain(P0, 4, rng)
    lhs = modified_integral(P0, a * 2.0 + b)
    assert np.isclose(lhs, 2 * modified_integral(P0, a) + modified_integral(P0, b), rtol=1e-13)
    theta = rng.uniform(0.5, 2, 256)
    Pa, Pb = P0.replace(theta=theta), P0.replace(theta=theta + 1)
    ca, cb = forms.Cochain(Pa, 4, a.data), forms.Cochain(Pb, 4, a.data)
    assert np.isclose(modified_integral(Pb, cb) - modified_integral(Pa, ca), a.data.sum())


def test_presentation_roundtrip(tmp_path, P4):
    io.save_presentation(P4, tmp_path / "p4.json")
    Q = io.load_presentation(tmp_path / "p4.json")
    assert Q.hash == P4.hash
    assert np.array_equal(Q.orbits(0).orbit_id, P4.orbits(0).orbit_id)


def test_hash_changes_with_data(P0):
    assert P0.replace(theta=2 * np.ones(256)).hash != P0.hash
    assert preset("p0").hash == P0.hash
