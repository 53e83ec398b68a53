import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwslab.errors import CutoffError, DiscretizationWarning, GeometryError, UnitarityWarning
from qwslab.scattering import (Circle, Grid, Rectangle, Scenario, ScattererSpec, ThetaSpec,
                               build_landscape, continuum_kx, empty_scenario, fig3_scenario,
                               lattice_kx, lead_modes, load_scenario, parity_operator,
                               random_disorder, save_scenario, scattering_matrix, solve_scattering,
                               superpose, swap_operator)
from qwslab.scattering import solver as solver_mod
from qwslab.scattering.leads import transverse_eigenvalues, transverse_profiles


def disk_scenario(res=40, k_over_piW=2.5, center=(0.5, 0.5), radius=0.17, n=1.5):
    s = ScattererSpec(Circle(center, radius), "dielectric", n)
    return Scenario(1.0, 1.0, k_over_piW * math.pi, (s,), grid_resolution=res)


# ---------------------------------------------------------------- geometry


def test_empty_landscape_is_free_space():
    land = build_landscape(empty_scenario())
    assert np.all(land.n2 == 1.0)
    assert not land.metal.any()
    assert not land.boundary_shift.any()


def test_fig3_landscape(fig3):
    land = build_landscape(fig3)
    # the W/10 target with edges half-way between nodes covers 11 x 11 nodes
    assert land.metal.sum() == 121
    xs, ys = np.nonzero(land.metal)
    h = fig3.grid.h
    assert (xs.max() - xs.min() + 1) * h == pytest.approx(0.1 * fig3.W, rel=1e-12)
    assert (ys.max() - ys.min() + 1) * h == pytest.approx(0.1 * fig3.W, rel=1e-12)
    disks = [s for s in fig3.scatterers if s.material == "dielectric"]
    assert len(disks) == 20
    assert np.all([s.n == 1.44 for s in disks])
    assert set(np.unique(land.n2)) == {1.0, 1.44 ** 2}


def test_nested_dielectric_inner_wins():
    outer = ScattererSpec(Circle((0.5, 0.5), 0.3), "dielectric", 1.3)
    inner = ScattererSpec(Circle((0.55, 0.5), 0.1), "dielectric", 2.0)
    sc = Scenario(1.0, 1.0, 2.5 * math.pi, (inner, outer), grid_resolution=50)
    land = build_landscape(sc)
    # point-in-shape oracle over all nodes
    g = sc.grid
    for i, x in enumerate(g.x):
        for j, y in enumerate(g.y):
            r_in = math.hypot(x - 0.55, y - 0.5) <= 0.1
            r_out = math.hypot(x - 0.5, y - 0.5) <= 0.3
            expected = 4.0 if r_in else (1.69 if r_out else 1.0)
            assert land.n2[i, j] == pytest.approx(expected)


def test_scatterer_outside_region_is_rejected():
    s = ScattererSpec(Circle((0.95, 0.5), 0.1), "dielectric", 1.44)
    with pytest.raises(GeometryError):
        Scenario(1.0, 1.0, 2.5 * math.pi, (s,))


def test_invalid_material_and_index():
    with pytest.raises(GeometryError):
        ScattererSpec(Circle((0.5, 0.5), 0.1), "dielectric", 0.9)
    with pytest.raises(GeometryError):
        ThetaSpec("z")


def test_below_cutoff_scenario():
    with pytest.raises(CutoffError):
        Scenario(1.0, 1.0, 0.9 * math.pi)


def test_scenario_json_round_trip(tmp_path, fig3):
    path = save_scenario(fig3, tmp_path / "fig3.json")
    again = load_scenario(path)
    assert again == fig3
    assert np.allclose(scattering_matrix(again).entries, scattering_matrix(fig3).entries, atol=0)


def test_disorder_is_seeded_and_non_overlapping():
    a = random_disorder(1.0, 1.0, 3, 20, 0.05)
    b = random_disorder(1.0, 1.0, 3, 20, 0.05)
    assert a == b
    c = random_disorder(1.0, 1.0, 4, 20, 0.05)
    assert a != c
    centers = np.array([s.shape.center for s in a])
    d = np.hypot(*(centers[:, None, :] - centers[None, :, :]).transpose(2, 0, 1))
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 0.1 + 0.02 - 1e-12


# ---------------------------------------------------------------- leads


def test_fig3_lead_mode_count():
    sc = fig3_scenario()
    lead = lead_modes(sc.k, sc.W, sc.grid)
    assert lead.n_open == 20
    assert sc.open_modes == 20
    # mode 21 is evanescent and decays into the lead
    assert lead.kx[20].imag > 0
    assert np.all(lead.kx[:20].imag == 0)


def test_single_open_mode_near_first_cutoff():
    grid = Scenario(1.0, 1.0, 1.1 * math.pi, grid_resolution=60).grid
    lead = lead_modes(1.1 * math.pi, 1.0, grid)
    assert lead.n_open == 1
    assert 0 < lead.kx[0].real < 0.6 * math.pi
    assert lead.kx[0].imag == 0


def test_no_open_mode_raises():
    grid = Grid(1 / 30, 30, 29)
    with pytest.raises(CutoffError):
        lead_modes(0.5 * math.pi, 1.0, grid)


def test_cutoff_margin_rejects_threshold():
    grid = Grid(1 / 30, 30, 29)
    k = math.sqrt(transverse_eigenvalues(grid)[1])
    with pytest.raises(CutoffError):
        lead_modes(k * (1 + 1e-5), 1.0, grid)


@settings(max_examples=25, deadline=None)
@given(res=st.integers(8, 60), kw=st.floats(1.05, 6.0))
def test_lead_profiles_orthonormal_and_dispersion_exact(res, kw):
    grid = Grid(1.0 / res, res, res - 1)
    k = kw * math.pi
    try:
        lead = lead_modes(k, 1.0, grid)
    except CutoffError:
        return
    P = lead.profiles
    assert np.linalg.norm(P.T @ P - np.eye(P.shape[1])) < 1e-12
    # lead solutions satisfy the discrete Helmholtz equation exactly
    h = grid.h
    lhs = (2 / h ** 2) * (np.cos(lead.kx * h) - 1) - transverse_eigenvalues(grid) + k * k
    assert np.max(np.abs(lhs)) < 1e-8 * k * k
    # profiles are eigenvectors of the discrete transverse Laplacian
    lap = (np.diag(np.full(grid.ny, 2.0)) - np.diag(np.ones(grid.ny - 1), 1)
           - np.diag(np.ones(grid.ny - 1), -1)) / h ** 2
    assert np.linalg.norm(lap @ P - P * transverse_eigenvalues(grid)) < 1e-8 / h ** 2


def test_lattice_dispersion_approaches_continuum():
    k = 2.5 * math.pi
    errs = []
    for res in (20, 40, 80):
        grid = Grid(1.0 / res, res, res - 1)
        errs.append(abs(lattice_kx(k, grid)[0] - continuum_kx(k, 1.0, 1)))
    # second order in h
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_transverse_profiles_match_continuum_sine():
    grid = Grid(1 / 20, 20, 19)
    P = transverse_profiles(grid)
    y = grid.y
    cont = math.sqrt(2.0) * np.sin(3 * math.pi * y)
    assert np.allclose(P[:, 2] / math.sqrt(grid.h), cont)


# ---------------------------------------------------------------- solver


def test_empty_guide_is_free_propagation():
    sc = empty_scenario(grid_resolution=30, k_over_piW=5.5)
    res = solve_scattering(sc)
    r, tp, t, rp = res.S.blocks()
    assert np.linalg.norm(r) < 1e-10 and np.linalg.norm(rp) < 1e-10
    phases = np.diag(np.exp(1j * res.lead.kx[: res.lead.n_open].real * sc.L))
    assert np.linalg.norm(t - phases) < 1e-10
    assert np.linalg.norm(tp - phases) < 1e-10


def test_fig3_unitary_and_reciprocal(fig3_solution):
    S = fig3_solution.S
    assert S.N == 40
    assert S.unitarity_defect < 1e-8
    assert S.reciprocity_defect < 1e-8


def test_centered_disk_commutes_with_y_parity():
    sc = disk_scenario(res=40, center=(0.5, 0.5))
    S = scattering_matrix(sc)
    P = parity_operator(S.n_open)
    assert np.linalg.norm(P @ S.entries @ P - S.entries) < 1e-10
    off = disk_scenario(res=40, center=(0.5, 0.4))
    S_off = scattering_matrix(off)
    assert np.linalg.norm(P @ S_off.entries @ P - S_off.entries) > 1e-3


def test_x_mirror_swaps_leads():
    sc = fig3_scenario(grid_resolution=30, k_over_piW=5.5)
    S = scattering_matrix(sc).entries
    Sm = scattering_matrix(sc.mirrored("x")).entries
    X = swap_operator(sc.open_modes)
    assert np.linalg.norm(X @ S @ X - Sm) < 1e-9


def test_field_maps_satisfy_discrete_equation():
    sc = fig3_scenario(grid_resolution=30, k_over_piW=5.5)
    res = solve_scattering(sc, want_fields=True)
    assert len(res.fields) == res.S.N
    assert res.residual <= 1e-10
    assert all(f.residual <= 1e-10 for f in res.fields)
    combo = superpose(res.fields, np.eye(res.S.N)[0])
    assert np.allclose(combo.values, res.fields[0].values)


def test_grid_refinement_converges():
    diffs = []
    prev = None
    for res in (20, 40, 80, 160):
        S = scattering_matrix(disk_scenario(res=res)).entries
        if prev is not None:
            diffs.append(np.linalg.norm(S - prev))
        prev = S
    assert diffs[0] > diffs[1] > diffs[2]


def test_metal_target_refinement_converges():
    target = ScattererSpec(Rectangle((0.5, 0.5), (0.2, 0.3)), "metal")
    diffs, prev = [], None
    for res in (20, 40, 80, 160):
        S = scattering_matrix(Scenario(1.0, 1.0, 2.5 * math.pi, (target,), grid_resolution=res)).entries
        if prev is not None:
            diffs.append(np.linalg.norm(S - prev))
        prev = S
    assert diffs[0] > diffs[1] > diffs[2]


def test_unitarity_warning(monkeypatch):
    monkeypatch.setattr(solver_mod, "UNITARITY_WARN", 0.0)
    with pytest.warns(UnitarityWarning):
        scattering_matrix(disk_scenario(res=20))


def test_lattice_count_mismatch_warns():
    # at res 60 and kW/pi = 20.5 the lattice dispersion opens an extra mode
    sc = fig3_scenario(grid_resolution=60)
    with pytest.warns(DiscretizationWarning):
        solve_scattering(sc)


def test_solver_is_deterministic():
    sc = fig3_scenario(grid_resolution=30, k_over_piW=5.5)
    a = scattering_matrix(sc).entries
    b = scattering_matrix(sc).entries
    assert np.array_equal(a, b)


def test_target_motion_is_smooth(fig3):
    # sub-grid shifts change S smoothly thanks to the boundary correction
    S0 = scattering_matrix(fig3).entries
    h = fig3.grid.h
    d1 = np.linalg.norm(scattering_matrix(fig3.displaced(0.01 * h)).entries - S0)
    d2 = np.linalg.norm(scattering_matrix(fig3.displaced(0.02 * h)).entries - S0)
    assert d1 > 0
    assert d2 / d1 == pytest.approx(2.0, rel=0.05)
