"""Vacuum forces from the trace of the GWS matrix.

The vacuum expectation of the QWS operator is ``tr(Q_theta)/2``; integrated
over energy it gives ``K_vac = (1/4pi) int tr Q_theta(E) dE``.  Units use
``hbar = c = 1``, so the energy ``E`` equals the wavenumber ``k``.

The model has no material dispersion, so the integrand does not decay at
large ``E``.  The integral is regularized by the damping ``exp(-kappa E)``
and extrapolated to ``kappa -> 0`` from ``kappa`` and ``kappa/2``.  This is a
numerical regularization of the model, not a physical renormalization.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CutoffError, DiscretizationWarning, SolverQualityError
from .gws import gws_matrix, unwrap_phase
from .io import write_json, write_table
from .scattering import Scenario, ThetaSpec
from .scattering.leads import transverse_eigenvalues

#: Relative distance to a mode threshold below which grid points are dropped.
DEFAULT_CUTOFF_MARGIN = 1e-3


def dos_correction(Q_E):
    """Density-of-states change ``(1/2pi) tr(Q_E)`` (the free reference is not included)."""
    return float(np.trace(np.asarray(Q_E)).real) / (2.0 * math.pi)


def spectral_integral(E, f, kappa=0.0, bin_width=None):
    """``int f(E) exp(-kappa E) dE`` by the trapezoid rule on ``E``.

    With ``bin_width`` the samples are treated as independent bins of that
    width (midpoint rule) instead.
    """
    E = np.asarray(E, dtype=float)
    g = np.asarray(f, dtype=float) * np.exp(-kappa * E)
    if bin_width is not None:
        return float(g.sum() * bin_width)
    if E.size < 2:
        return 0.0
    return float(np.trapezoid(g, E))


def mode_thresholds(scenario: Scenario):
    """Lattice wavenumbers at which lead modes open, ``sqrt(eps_m)``."""
    return np.sqrt(transverse_eigenvalues(scenario.grid))


def band_segments(scenario: Scenario, E_min, E_max, margin=DEFAULT_CUTOFF_MARGIN):
    """Split ``[E_min, E_max]`` at mode thresholds; segments below the first threshold are dropped.

    Each segment keeps a relative clearance ``margin`` from the thresholds.
    The band also starts above the continuum cutoff ``pi/W`` so that every
    sample is a valid scenario.
    """
    th = np.sort(mode_thresholds(scenario))
    E_min = max(E_min, math.pi / scenario.W * (1.0 + margin))
    uppers = np.append(th[1:], np.inf)
    segs = []
    for t0, t1 in zip(th, uppers):
        lo = max(E_min, t0 * (1.0 + margin))
        hi = min(E_max, t1 * (1.0 - margin))
        if hi > lo:
            segs.append((float(lo), float(hi)))
    return segs


def band_grid(scenario: Scenario, E_min, E_max, step, margin=DEFAULT_CUTOFF_MARGIN):
    """Per-segment grids with an even number of intervals of size at most ``step``.

    An even interval count lets the step-halving error estimate reuse every
    other point.
    """
    grids = []
    for lo, hi in band_segments(scenario, E_min, E_max, margin):
        n = max(2, int(math.ceil((hi - lo) / step)))
        n += n % 2
        grids.append(np.linspace(lo, hi, n + 1))
    return grids


@dataclass
class VacuumScan:
    """Sampled trace of ``Q_theta`` along energy and the regularized vacuum force.

    ``value`` is the kappa-extrapolated band integral, ``error`` its
    step-halving error bar, ``value_by_kappa`` the integrals at each damping
    and ``tail`` an estimate of the damped contribution above the band.
    """

    E: np.ndarray
    segment: np.ndarray
    trace_q: np.ndarray
    eta: np.ndarray
    kappas: tuple
    value_by_kappa: dict
    value: float
    error: float
    tail: float
    max_unitarity_defect: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def integrand(self, kappa=None):
        kappa = self.kappas[0] if kappa is None else kappa
        return self.trace_q * np.exp(-kappa * self.E) / (4.0 * math.pi)

    def to_csv(self, path):
        rows = np.column_stack([self.E, self.trace_q, self.eta, self.integrand()])
        return write_table(path, ["E", "trQ", "eta", "integrand"], rows)

    def summary(self):
        return {"value": self.value, "error": self.error, "kappas": list(self.kappas),
                "value_by_kappa": {repr(k): v for k, v in self.value_by_kappa.items()},
                "tail_estimate": self.tail if math.isfinite(self.tail) else None, "band": [float(self.E.min()), float(self.E.max())],
                "points": int(self.E.size),
                "max_unitarity_defect": self.max_unitarity_defect,
                "regularization": "exp(-kappa E) damping, linear extrapolation to kappa = 0",
                **self.diagnostics}

    def save(self, csv_path, json_path):
        self.to_csv(csv_path)
        write_json(json_path, self.summary())


def _segment_integrals(E, f, seg, kappa):
    """Trapezoid integral and step-halving error over all segments."""
    total, err = 0.0, 0.0
    for s in np.unique(seg):
        m = seg == s
        e, g = E[m], f[m]
        fine = spectral_integral(e, g, kappa)
        if e.size >= 3 and (e.size - 1) % 2 == 0:
            coarse = spectral_integral(e[::2], g[::2], kappa)
            err += abs(fine - coarse) / 3.0
        total += fine
    return total, err


def vacuum_force(scenario: Scenario, E_grid, kappa=0.0, with_eta=False):
    """Regularized ``(1/4pi) int tr Q_theta(E) e^{-kappa E} dE`` over an open band.

    Parameters
    ----------
    scenario : Scenario
        Geometry and theta kind (``x`` or ``y``); its own ``k`` is ignored.
    E_grid : array or list of arrays
        Sample energies.  A list is treated as separate segments (for example
        from :func:`band_grid`); each is integrated on its own so that mode
        thresholds are never straddled.
    kappa : float
        Damping.  When positive the integral is also computed at ``kappa/2``
        and extrapolated linearly to zero damping.
    with_eta : bool
        Also compute ``tr Q_E`` and the unwrapped total phase ``eta(E)``
        (roughly doubles the cost).  Otherwise ``eta`` is NaN.
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    segments = [np.asarray(g, float) for g in E_grid] if isinstance(E_grid, (list, tuple)) \
        else [np.asarray(E_grid, float)]
    E = np.concatenate(segments)
    seg = np.concatenate([np.full(g.size, i) for i, g in enumerate(segments)])
    k_max = scenario.grid.max_validated_k()
    if E.max() > k_max * (1 + 1e-12):
        raise ValueError(f"band reaches E = {E.max():.6g} beyond the validated k = {k_max:.6g}")

    tr = np.empty(E.size)
    eta = np.full(E.size, np.nan)
    dets = np.empty(E.size, complex)
    trE = np.empty(E.size)
    worst = 0.0
    mismatched = 0
    for n, e in enumerate(E):
        sc = scenario.with_k(float(e))
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DiscretizationWarning)
                q = gws_matrix(sc)
                if with_eta:
                    trE[n] = gws_matrix(replace(sc, theta=ThetaSpec("omega"))).trace
            other = [w for w in caught if not issubclass(w.category, DiscretizationWarning)]
            mismatched += len(other) < len(caught)
            for w in other:
                warnings.warn(w.message, w.category, stacklevel=2)
        except SolverQualityError as exc:
            raise SolverQualityError(f"vacuum scan aborted at E = {e:.8g}: {exc}",
                                     defect=exc.defect) from exc
        except CutoffError as exc:
            raise CutoffError(f"E = {e:.8g} is too close to a mode threshold; "
                              "use band_grid to build the sample points") from exc
        S = q.S
        worst = max(worst, float(np.linalg.norm(S.conj().T @ S - np.eye(S.shape[0]))))
        tr[n] = q.trace
        dets[n] = np.linalg.det(S)
    if with_eta:
        for s in np.unique(seg):
            m = seg == s
            eta[m] = unwrap_phase(dets[m], trE[m], E[m])

    kappas = (kappa, 0.5 * kappa) if kappa > 0 else (0.0,)
    vals, errs = {}, {}
    for kp in kappas:
        v, er = _segment_integrals(E, tr, seg, kp)
        vals[kp] = v / (4.0 * math.pi)
        errs[kp] = er / (4.0 * math.pi)
    if kappa > 0:
        value = 2.0 * vals[0.5 * kappa] - vals[kappa]
        error = 2.0 * errs[0.5 * kappa] + errs[kappa]
        tail = tr[-1] * math.exp(-kappa * E[-1]) / kappa / (4.0 * math.pi)
    else:
        value, error, tail = vals[0.0], errs[0.0], math.nan
    return VacuumScan(E, seg, tr, eta, kappas, vals, value, error, tail, worst,
                      {"theta": scenario.theta.kind, "lattice_count_mismatch_points": mismatched})
