"""``qws-lab`` command line: run scenarios end to end and write result files.

Exit codes: 0 success, 2 scenario error, 3 solver error, 4 tolerance failure.
Every command writes ``manifest.json`` into its output directory, listing the
emitted files with their SHA-256 hashes.
"""
from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AliasingError, CutoffError, GeometryError, SolverError, SolverQualityError
from .gws import eigendecompose, gws_matrix
from .io import (sha256_file, write_complex_matrix, write_field_map, write_json, write_png,
                 write_scalar_map, write_smatrix, write_table)
from .metrology import (optimal_coherent_probe, optimal_gaussian_probe, optimal_noon_probe,
                        scaling_experiment, uniform_spectrum)
from .micromanipulation import reduction_table
from .scattering import Scenario, empty_scenario, fig3_scenario, solve_scattering, superpose
from .vacuum import band_grid, vacuum_force

EXIT_OK, EXIT_SCENARIO, EXIT_SOLVER, EXIT_TOLERANCE = 0, 2, 3, 4
UNITARITY_TOLERANCE = 1e-8

BUILTIN = {"@fig3": lambda: fig3_scenario(), "@empty": lambda: empty_scenario()}


class ToleranceFailure(Exception):
    pass


class Stage(Exception):
    """Wraps a module error with the pipeline stage where it happened."""

    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage
        self.exc = exc


def parse_nu_grid(text):
    """Photon-number grid: ``a:b:log`` (100 points per decade, snapped to integers
    when ``a >= 1``), ``a:b:lin:n`` or a comma-separated list."""
    parts = text.split(":")
    if len(parts) == 1:
        return np.array([float(v) for v in text.split(",")])
    lo, hi = float(parts[0]), float(parts[1])
    mode = parts[2] if len(parts) > 2 else "log"
    if not (0 < lo < hi):
        raise ValueError(f"bad nu range {text!r}")
    if mode == "log":
        n = int(round(100 * math.log10(hi / lo))) + 1
        nu = np.geomspace(lo, hi, n)
        if lo >= 1:
            nu = np.unique(np.round(nu))
        return nu
    if mode == "lin":
        return np.linspace(lo, hi, int(parts[3]) if len(parts) > 3 else 100)
    raise ValueError(f"unknown grid mode {mode!r}")


def load(args) -> Scenario:
    """Scenario from a JSON file or a builtin name (``@fig3``, ``@empty``), with CLI overrides."""
    src = args.scenario
    if src in BUILTIN:
        sc = BUILTIN[src]()
        if args.seed is not None and sc.seed is not None:
            sc = fig3_scenario(seed=args.seed)
        data = sc.to_json()
    else:
        data = json.loads(Path(src).read_text())
        if args.seed is not None:
            data["seed"] = args.seed
    if args.resolution is not None:
        data["grid_resolution"] = args.resolution
    th = dict(data.get("theta") or {})
    if getattr(args, "theta", None):
        if args.theta != th.get("kind"):
            th["step"] = None
        th["kind"] = args.theta
    if getattr(args, "step", None) is not None:
        th["step"] = args.step
    data["theta"] = th
    return Scenario.from_json(data)


class Run:
    """Collects artifacts and achieved tolerances, then writes the manifest."""

    def __init__(self, command, args):
        self.command = command
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.tolerances = {}
        self.t0 = time.perf_counter()
        self.seed = None

    def add(self, path):
        self.files.append(Path(path))
        return path

    def finish(self, scenario_path=None):
        manifest = {
            "command": self.command,
            "scenario": scenario_path,
            "output_dir": str(self.out),
            "seed": self.seed,
            "tool_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "wall_clock_s": round(time.perf_counter() - self.t0, 3),
            "tolerances": self.tolerances,
            "artifacts": [{"path": f.name, "sha256": sha256_file(f)} for f in self.files],
        }
        write_json(self.out / "manifest.json", manifest)
        return manifest


def _record_unitarity(run, S):
    """Store the S-matrix defects; returns a failure message or None."""
    d = float(np.linalg.norm(S.conj().T @ S - np.eye(S.shape[0])))
    r = float(np.linalg.norm(S - S.T))
    run.tolerances.update(unitarity_defect=d, reciprocity_defect=r)
    if d > UNITARITY_TOLERANCE or r > UNITARITY_TOLERANCE:
        return f"unitarity {d:.3e} / reciprocity {r:.3e} above {UNITARITY_TOLERANCE:.0e}"
    return None


def _finish(run, scenario_path, failure=None):
    run.finish(scenario_path)
    if failure:
        raise ToleranceFailure(failure)


def cmd_smatrix(args):
    run = Run("smatrix", args)
    sc = _stage("scenario", load, args)
    run.seed = sc.seed
    res = _stage("solver", solve_scattering, sc)
    run.add(write_smatrix(run.out / "S.csv", res.S.entries))
    run.tolerances["residual"] = res.residual
    run.tolerances["open_modes"] = res.S.n_open
    _finish(run, args.scenario, _record_unitarity(run, res.S.entries))


def _gws(args, run):
    sc = _stage("scenario", load, args)
    run.seed = sc.seed
    q = _stage("gws", gws_matrix, sc)
    eig = eigendecompose(q.entries)
    run.tolerances.update(hermiticity_defect=q.hermiticity_defect, theta=sc.theta.kind,
                          step=q.step)
    return sc, q, eig


def cmd_gws(args):
    run = Run("gws", args)
    sc, q, eig = _gws(args, run)
    tag = sc.theta.kind
    run.add(write_complex_matrix(run.out / f"Q_{tag}.csv", q.entries))
    run.add(write_table(run.out / f"eigenvalues_{tag}.csv", ["index", "lambda"],
                        zip(range(q.N), eig.eigenvalues)))
    run.add(write_complex_matrix(run.out / f"W_{tag}.csv", eig.W))
    _finish(run, args.scenario, _record_unitarity(run, q.S))


def _maps(run, sc, vectors, label, png):
    res = _stage("solver", solve_scattering, sc, want_fields=True)
    for name, vec in vectors:
        fm = superpose(res.fields, vec)
        run.add(write_field_map(run.out / f"{label}_{name}.csv", fm.values, fm.h))
        if png:
            run.add(write_png(run.out / f"{label}_{name}.png", fm.intensity))
    return res


def cmd_eigenstate_maps(args):
    run = Run("eigenstate-maps", args)
    sc, q, eig = _gws(args, run)
    which = ["max", "min"] if args.which == "both" else [args.which]
    idx = {"max": eig.i_max, "min": eig.i_min}
    vectors = [(w, eig.W[:, idx[w]]) for w in which]
    run.tolerances.update({f"lambda_{w}": float(eig.eigenvalues[idx[w]]) for w in which})
    _maps(run, sc, vectors, f"eigenstate_{sc.theta.kind}", args.png)
    run.finish(args.scenario)


def cmd_noon_maps(args):
    """Single-photon NOON density ``|psi_1 + psi_N|^2 / 2`` from the eigenchannels of lambda_1 and lambda_N."""
    run = Run("noon-maps", args)
    sc, q, eig = _gws(args, run)
    res = _stage("solver", solve_scattering, sc, want_fields=True)
    f1 = superpose(res.fields, eig.W[:, eig.i_max]).values
    fN = superpose(res.fields, eig.W[:, eig.i_min]).values
    dens = np.abs(f1 + fN) ** 2 / 2.0
    dens = dens / dens.sum()
    run.add(write_scalar_map(run.out / f"noon_{sc.theta.kind}.csv", dens, sc.grid.h))
    if args.png:
        run.add(write_png(run.out / f"noon_{sc.theta.kind}.png", dens))
    run.finish(args.scenario)


def cmd_optimize_manip(args):
    run = Run("optimize-manip", args)
    nu = _stage("scenario", parse_nu_grid, args.nu)
    table = reduction_table(nu)
    run.add(table.to_csv(run.out / "micromanipulation.csv"))
    run.finish()


def cmd_qfi(args):
    run = Run("qfi", args)
    sc, q, eig = _gws(args, run)
    fn = {"coherent": optimal_coherent_probe, "gaussian": optimal_gaussian_probe,
          "noon": optimal_noon_probe}[args.probe]
    nu = args.nu_value
    _, rep = _stage("metrology", fn, eig.eigenvalues, nu, args.repetitions)
    run.add(rep.save(run.out / f"qfi_{args.probe}.json"))
    run.finish(args.scenario)


def cmd_scaling(args):
    run = Run("scaling", args)
    run.seed = args.seed
    lam = uniform_spectrum(args.channels, args.seed)
    nu = _stage("scenario", parse_nu_grid, args.nu)
    table = scaling_experiment(lam, nu)
    run.add(table.to_csv(run.out / "qfi_scaling.csv"))
    run.add(write_json(run.out / "qfi_scaling_slopes.json",
                       {"seed": args.seed, "channels": args.channels, "slopes": table.slopes}))
    run.finish()


def cmd_vacuum_scan(args):
    run = Run("vacuum-scan", args)
    sc = _stage("scenario", load, args)
    run.seed = sc.seed
    lo, hi = (float(v) for v in args.band.split(":"))
    unit = math.pi / sc.W
    grids = band_grid(sc, lo * unit, hi * unit, args.band_step * unit)
    scan = _stage("vacuum", vacuum_force, sc, grids, args.kappa, with_eta=not args.no_eta)
    run.tolerances.update(max_unitarity_defect=scan.max_unitarity_defect, error_bar=scan.error)
    run.add(scan.to_csv(run.out / "vacuum_scan.csv"))
    run.add(write_json(run.out / "vacuum_summary.json", scan.summary()))
    run.finish(args.scenario)


def _stage(name, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (GeometryError, CutoffError, SolverError, SolverQualityError, AliasingError,
            ValueError, OSError, KeyError) as exc:
        raise Stage(name, exc) from exc


def build_parser():
    p = argparse.ArgumentParser(prog="qws-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True, theta=True):
        if scenario:
            sp.add_argument("scenario", help="scenario JSON file, or @fig3 / @empty")
            sp.add_argument("--resolution", type=int, help="grid points across W")
            sp.add_argument("--seed", type=int, help="disorder seed override")
        if theta:
            sp.add_argument("--theta", choices=["x", "y", "omega"])
            sp.add_argument("--step", type=float, help="finite-difference step for d/dtheta")
        sp.add_argument("--out", default="qws-out", help="output directory")
        sp.add_argument("--png", action="store_true", help="also write PNG images (needs Pillow)")

    common(sub.add_parser("smatrix", help="scattering matrix"), theta=False)
    common(sub.add_parser("gws", help="GWS matrix, eigenvalues and eigenvectors"))
    sp = sub.add_parser("eigenstate-maps", help="fields of GWS eigenstates")
    common(sp)
    sp.add_argument("--which", choices=["max", "min", "both"], default="both")
    common(sub.add_parser("noon-maps", help="single-photon NOON density maps"))
    sp = sub.add_parser("optimize-manip", help="force-noise reduction table")
    common(sp, scenario=False, theta=False)
    sp.add_argument("--nu", default="1:1e6:log")
    sp = sub.add_parser("qfi", help="QFI report for an optimal probe")
    common(sp)
    sp.add_argument("--probe", choices=["coherent", "gaussian", "noon"], default="gaussian")
    sp.add_argument("--nu", dest="nu_value", type=float, default=1.0)
    sp.add_argument("--repetitions", type=int, default=1, help="M in the Cramer-Rao bound")
    sp = sub.add_parser("scaling", help="QFI scaling with photon number for a random spectrum")
    common(sp, scenario=False, theta=False)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--channels", type=int, default=40)
    sp.add_argument("--nu", default="1:1e4:log")
    sp = sub.add_parser("vacuum-scan", help="regularized vacuum force over a band")
    common(sp)
    sp.add_argument("--band", default="1:3", help="lo:hi in units of pi/W")
    sp.add_argument("--band-step", type=float, default=0.01, help="grid step in units of pi/W")
    sp.add_argument("--kappa", type=float, default=0.0, help="exponential damping")
    sp.add_argument("--no-eta", action="store_true", help="skip the total-phase scan")
    return p


COMMANDS = {"smatrix": cmd_smatrix, "gws": cmd_gws, "eigenstate-maps": cmd_eigenstate_maps,
            "noon-maps": cmd_noon_maps, "optimize-manip": cmd_optimize_manip, "qfi": cmd_qfi,
            "scaling": cmd_scaling, "vacuum-scan": cmd_vacuum_scan}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](args)
    except Stage as exc:
        print(f"qws-lab {args.command}: {exc}", file=sys.stderr)
        inner = exc.exc
        if isinstance(inner, (SolverError, SolverQualityError, AliasingError)):
            return EXIT_SOLVER
        return EXIT_SCENARIO
    except ToleranceFailure as exc:
        print(f"qws-lab {args.command}: [tolerance] {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
