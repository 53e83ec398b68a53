import json
import math

import numpy as np
import pytest

from qwslab import cli, gws as gws_mod
from qwslab.io import read_complex_matrix, read_smatrix, read_table, sha256_file
from qwslab.scattering import empty_scenario, fig3_scenario, save_scenario, solve_scattering


@pytest.fixture(scope="module")
def scenario_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("scenarios")
    return {"fig3": save_scenario(fig3_scenario(grid_resolution=30, k_over_piW=5.5), d / "fig3.json"),
            "empty": save_scenario(empty_scenario(grid_resolution=30, k_over_piW=5.5),
                                   d / "empty.json")}


def _manifest(out):
    m = json.loads((out / "manifest.json").read_text())
    for art in m["artifacts"]:
        assert sha256_file(out / art["path"]) == art["sha256"]
    return m


def _eigenvalues(path, tmp_path):
    out = tmp_path / "eigs"
    assert cli.main(["gws", str(path), "--out", str(out)]) == 0
    return read_table(out / "eigenvalues_x.csv")[1][:, 1]


def test_smatrix_of_empty_guide_is_free_propagation(scenario_files, tmp_path):
    out = tmp_path / "s"
    assert cli.main(["smatrix", str(scenario_files["empty"]), "--out", str(out)]) == 0
    S = read_smatrix(out / "S.csv")
    sc = empty_scenario(grid_resolution=30, k_over_piW=5.5)
    kx = solve_scattering(sc).lead.kx[:5].real
    T = np.diag(np.exp(1j * kx * sc.L))
    assert S.shape == (10, 10)
    assert np.allclose(S[:5, :5], 0, atol=1e-10) and np.allclose(S[5:, 5:], 0, atol=1e-10)
    assert np.allclose(S[5:, :5], T, atol=1e-10) and np.allclose(S[:5, 5:], T, atol=1e-10)
    m = _manifest(out)
    assert m["command"] == "smatrix" and m["tolerances"]["unitarity_defect"] < 1e-8


def test_gws_writes_matrix_and_eigenvalues(scenario_files, tmp_path):
    out = tmp_path / "g"
    assert cli.main(["gws", str(scenario_files["fig3"]), "--theta", "x", "--out", str(out)]) == 0
    Q = read_complex_matrix(out / "Q_x.csv")
    assert np.allclose(Q, Q.conj().T, atol=0)
    header, lam = read_table(out / "eigenvalues_x.csv")
    assert header == ["index", "lambda"]
    assert np.allclose(np.sort(lam[:, 1])[::-1], np.linalg.eigvalsh(Q)[::-1], atol=1e-10)
    W = read_complex_matrix(out / "W_x.csv")
    assert np.allclose(W.conj().T @ W, np.eye(W.shape[0]), atol=1e-12)
    m = _manifest(out)
    assert {a["path"] for a in m["artifacts"]} == {"Q_x.csv", "eigenvalues_x.csv", "W_x.csv"}
    assert m["seed"] == 7 and m["tolerances"]["theta"] == "x"


def test_gws_theta_override_and_omega(scenario_files, tmp_path):
    out = tmp_path / "w"
    assert cli.main(["gws", str(scenario_files["empty"]), "--theta", "omega", "--out", str(out)]) == 0
    Q = read_complex_matrix(out / "Q_omega.csv")
    # group delays are positive
    assert np.all(np.diag(Q).real > 0)


def test_optimize_manip_row_at_49(tmp_path):
    out = tmp_path / "m"
    assert cli.main(["optimize-manip", "--nu", "1:1e6:log", "--out", str(out)]) == 0
    header, d = read_table(out / "micromanipulation.csv")
    assert header == ["nu", "beta_opt", "p_opt_dB", "sigma_ratio"]
    row = d[d[:, 0] == 49.0]
    assert row.shape[0] == 1
    assert row[0, 2] == pytest.approx(7.65, abs=0.01) and row[0, 3] <= 0.5
    assert np.all(np.diff(d[:, 0]) > 0) and d[-1, 0] == 1e6


def test_parse_nu_grid():
    assert cli.parse_nu_grid("1,2,49").tolist() == [1.0, 2.0, 49.0]
    assert cli.parse_nu_grid("0.5:1:lin:3").tolist() == [0.5, 0.75, 1.0]
    g = cli.parse_nu_grid("0.1:10:log")
    assert g.size == 201 and g[0] == pytest.approx(0.1)
    for bad in ("5:1", "1:2:cubic"):
        with pytest.raises(ValueError):
            cli.parse_nu_grid(bad)


def test_qfi_report(scenario_files, tmp_path):
    out = tmp_path / "q"
    argv = ["qfi", str(scenario_files["fig3"]), "--probe", "gaussian", "--nu", "3",
            "--repetitions", "10", "--out", str(out)]
    assert cli.main(argv) == 0
    rep = json.loads((out / "qfi_gaussian.json").read_text())
    lam = _eigenvalues(scenario_files["fig3"], tmp_path)
    lh = lam[np.argmax(np.abs(lam))]
    assert rep["F"] == pytest.approx(8 * lh ** 2 * 3 * 4, rel=1e-8)
    assert rep["cramer_rao_bound"] == pytest.approx(1 / (10 * rep["F"]))


def test_scaling(tmp_path):
    out = tmp_path / "sc"
    assert cli.main(["scaling", "--seed", "3", "--channels", "20", "--nu", "1:1e4:log",
                     "--out", str(out)]) == 0
    slopes = json.loads((out / "qfi_scaling_slopes.json").read_text())["slopes"]
    assert slopes["coherent"] == pytest.approx(1.0, abs=0.01)
    assert slopes["gaussian"] == pytest.approx(2.0, abs=0.02)
    assert _manifest(out)["seed"] == 3


def test_vacuum_scan(scenario_files, tmp_path):
    out = tmp_path / "v"
    argv = ["vacuum-scan", str(scenario_files["fig3"]), "--band", "4.1:4.5", "--band-step",
            "0.02", "--out", str(out)]
    assert cli.main(argv) == 0
    s = json.loads((out / "vacuum_summary.json").read_text())
    assert math.isfinite(s["value"]) and s["error"] >= 0
    assert s["band"][0] >= 4.1 * math.pi and s["band"][1] <= 4.5 * math.pi
    header, d = read_table(out / "vacuum_scan.csv")
    assert header == ["E", "trQ", "eta", "integrand"]
    assert np.all(np.isfinite(d[:, 2]))


def test_eigenstate_and_noon_maps(scenario_files, tmp_path):
    out = tmp_path / "maps"
    assert cli.main(["eigenstate-maps", str(scenario_files["fig3"]), "--out", str(out)]) == 0
    for w in ("max", "min"):
        header, d = read_table(out / f"eigenstate_x_{w}.csv")
        assert header == ["x", "y", "re", "im", "intensity"]
        assert d.shape[0] == 31 * 29
    assert cli.main(["noon-maps", str(scenario_files["fig3"]), "--out", str(out)]) == 0
    _, d = read_table(out / "noon_x.csv")
    assert d[:, 2].sum() == pytest.approx(1.0) and np.all(d[:, 2] >= 0)


def test_png_output(scenario_files, tmp_path):
    pytest.importorskip("PIL")
    out = tmp_path / "png"
    assert cli.main(["noon-maps", str(scenario_files["fig3"]), "--png", "--out", str(out)]) == 0
    assert (out / "noon_x.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_scenario_errors_exit_2(tmp_path, capsys):
    assert cli.main(["smatrix", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert "[scenario]" in capsys.readouterr().err
    # a resolution too coarse for the reference wavenumber
    assert cli.main(["gws", "@fig3", "--resolution", "30", "--out", str(tmp_path)]) == 2
    assert "CutoffError" in capsys.readouterr().err
    assert cli.main(["optimize-manip", "--nu", "9:1", "--out", str(tmp_path)]) == 2


def test_solver_error_exit_3(scenario_files, tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(gws_mod, "UNITARITY_BUDGET", 0.0)
    assert cli.main(["gws", str(scenario_files["fig3"]), "--out", str(tmp_path)]) == 3
    assert "[gws] SolverQualityError" in capsys.readouterr().err


def test_tolerance_failure_exit_4(scenario_files, tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "UNITARITY_TOLERANCE", 0.0)
    out = tmp_path / "t"
    assert cli.main(["smatrix", str(scenario_files["fig3"]), "--out", str(out)]) == 4
    # the manifest is still written with the achieved defect
    assert _manifest(out)["tolerances"]["unitarity_defect"] > 0


def test_reruns_are_byte_identical(scenario_files, tmp_path):
    hashes = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["gws", str(scenario_files["fig3"]), "--out", str(out)]) == 0
        hashes.append([(a["path"], a["sha256"]) for a in _manifest(out)["artifacts"]])
    assert hashes[0] == hashes[1]


def test_builtin_names_resolve():
    args = cli.build_parser().parse_args(["gws", "@empty", "--resolution", "40", "--theta", "y"])
    sc = cli.load(args)
    assert sc.grid_resolution == 40 and sc.theta.kind == "y" and not sc.scatterers
    args = cli.build_parser().parse_args(["gws", "@fig3", "--seed", "11"])
    assert cli.load(args).seed == 11
