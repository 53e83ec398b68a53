"""Finite-difference scattering solver for the 2D waveguide.

The interior (columns ``0..nx``) carries the 5-point Helmholtz operator.  The
semi-infinite leads are eliminated exactly: with ``chi`` the transverse
profiles and ``kx`` the lattice wavenumbers, the ghost column outside the
left boundary is

    psi_{-1} = chi diag(exp(i kx h)) chi^T psi_0 - chi (2i sin(kx h) a)

where ``a`` are the incoming amplitudes, and symmetrically on the right.
Retaining every transverse mode makes this boundary condition exact on the
lattice, so S is unitary up to the linear-solver precision.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import DiscretizationWarning, SolverError, UnitarityWarning
from .geometry import IndexLandscape, Scenario, build_landscape
from .leads import LeadBasis, lead_modes

UNITARITY_WARN = 1e-8


@dataclass(frozen=True)
class ScatteringMatrix:
    """Flux-normalized S in the lead-mode basis.

    Channel ``m`` (0-based) for ``m < N'`` is mode ``m+1`` incident from the
    left; ``m >= N'`` is mode ``m-N'+1`` incident from the right.  Rows are
    ordered the same way for the outgoing waves (left-going reflection first).
    """

    entries: np.ndarray
    k: float
    n_open: int

    @property
    def N(self):
        return self.entries.shape[0]

    @property
    def unitarity_defect(self):
        S = self.entries
        return float(np.linalg.norm(S.conj().T @ S - np.eye(self.N)))

    @property
    def reciprocity_defect(self):
        return float(np.linalg.norm(self.entries - self.entries.T))

    def blocks(self):
        """Return (r, t', t, r') with ``S = [[r, t'], [t, r']]``."""
        n = self.n_open
        S = self.entries
        return S[:n, :n], S[:n, n:], S[n:, :n], S[n:, n:]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class FieldMap:
    """Complex interior field ``values[i, j] = psi(x_i, y_j)`` for one incident channel."""

    values: np.ndarray
    h: float
    label: str
    residual: float = field(default=0.0)

    @property
    def intensity(self):
        return np.abs(self.values) ** 2


@dataclass
class SolveResult:
    S: ScatteringMatrix
    fields: list | None
    lead: LeadBasis
    residual: float


def _interior_matrix(land: IndexLandscape, lead: LeadBasis):
    """h^2 times the discrete Helmholtz operator on fluid nodes, with lead self-energies."""
    g = land.grid
    nxp, ny = g.shape
    h = g.h
    n = nxp * ny
    idx = np.arange(n).reshape(nxp, ny)

    diag = (-4.0 + (h * land.k) ** 2 * land.n2 - land.boundary_shift).ravel()
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [diag.astype(complex)]
    for a, b in ((idx[:-1, :], idx[1:, :]), (idx[:, :-1], idx[:, 1:])):
        rows += [a.ravel(), b.ravel()]
        cols += [b.ravel(), a.ravel()]
        vals += [np.ones(a.size, complex), np.ones(a.size, complex)]

    chi = lead.profiles
    sigma = (chi * np.exp(1j * lead.kx * h)) @ chi.T
    jj = np.arange(ny)
    r, c = np.meshgrid(jj, jj, indexing="ij")
    for col in (0, nxp - 1):
        rows.append(idx[col][r].ravel())
        cols.append(idx[col][c].ravel())
        vals.append(sigma.ravel())

    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    keep = ~land.metal.ravel()
    A = A[keep][:, keep]
    return A.tocsc(), keep


def _sources(lead: LeadBasis, nxp, ny, keep):
    """Right-hand sides for unit-flux incidence in every open channel."""
    h = lead.grid.h
    n_open = lead.n_open
    chi = lead.profiles[:, :n_open]
    amp = lead.flux_normalization
    kick = 2j * np.sin(lead.kx[:n_open].real * h) * amp
    B = np.zeros((nxp * ny, 2 * n_open), dtype=complex)
    B[:ny, :n_open] = chi * kick
    B[(nxp - 1) * ny:, n_open:] = chi * kick
    return B[keep]


def solve_landscape(land: IndexLandscape, lead: LeadBasis, want_fields=False) -> SolveResult:
    """Compute S (and optionally the interior fields) for a rasterized landscape."""
    g = land.grid
    if lead.grid != g or lead.k != land.k:
        raise ValueError("landscape and lead basis were built for different grids or k")
    nxp, ny = g.shape
    A, keep = _interior_matrix(land, lead)
    B = _sources(lead, nxp, ny, keep)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SolverError(f"interior system is singular at k = {land.k:.10g}: {exc}",
                          condition_estimate=float("inf")) from exc
    X = lu.solve(B)
    if not np.all(np.isfinite(X)):
        raise SolverError(f"non-finite solution at k = {land.k:.10g}", condition_estimate=float("inf"))
    res = np.linalg.norm(A @ X - B, axis=0) / np.maximum(np.linalg.norm(X, axis=0), 1e-300)
    residual = float(res.max())

    psi = np.zeros((nxp * ny, X.shape[1]), dtype=complex)
    psi[keep] = X
    left = psi[:ny]
    right = psi[(nxp - 1) * ny:]

    n_open = lead.n_open
    chi = lead.profiles[:, :n_open]
    sv = np.sqrt(lead.velocity)[:, None]
    amp = lead.flux_normalization
    inc = np.zeros((2 * n_open, 2 * n_open))
    inc[:n_open, :n_open] = np.diag(amp)
    inc[n_open:, n_open:] = np.diag(amp)
    out_left = chi.T @ left - inc[:n_open]
    out_right = chi.T @ right - inc[n_open:]
    S = np.vstack([sv * out_left, sv * out_right])
    smat = ScatteringMatrix(S, land.k, n_open)

    defect = smat.unitarity_defect
    if defect > UNITARITY_WARN:
        warnings.warn(f"unitarity defect {defect:.3e} above {UNITARITY_WARN:.0e}", UnitarityWarning,
                      stacklevel=2)

    fields = None
    if want_fields:
        fields = []
        for c in range(2 * n_open):
            side = "L" if c < n_open else "R"
            label = f"{side}{c % n_open + 1}"
            fields.append(FieldMap(psi[:, c].reshape(nxp, ny), g.h, label, float(res[c])))
    return SolveResult(smat, fields, lead, residual)


def solve_scattering(scenario: Scenario, want_fields=False, cutoff_margin=1e-3) -> SolveResult:
    """Rasterize ``scenario``, build its leads and solve for S."""
    land = build_landscape(scenario)
    lead = lead_modes(scenario.k, scenario.W, land.grid, cutoff_margin)
    if lead.n_open != scenario.open_modes:
        warnings.warn(f"lattice opens {lead.n_open} modes but floor(kW/pi) = {scenario.open_modes}; "
                      "increase grid_resolution", DiscretizationWarning, stacklevel=2)
    return solve_landscape(land, lead, want_fields)


def scattering_matrix(scenario: Scenario, **kw) -> ScatteringMatrix:
    return solve_scattering(scenario, **kw).S


def superpose(fields, coefficients):
    """Field produced by injecting the input vector ``coefficients`` (linear superposition)."""
    coefficients = np.asarray(coefficients)
    vals = sum(c * f.values for c, f in zip(coefficients, fields))
    return FieldMap(vals, fields[0].h, "superposition")


def parity_operator(n_open):
    """Mirror ``y -> W - y`` acting on both leads' open modes: diag((-1)^(m+1))."""
    p = np.where(np.arange(n_open) % 2 == 0, 1.0, -1.0)
    return np.diag(np.concatenate([p, p]))


def swap_operator(n_open):
    """Mirror ``x -> L - x``: exchanges the left and right channel blocks."""
    z = np.zeros((n_open, n_open))
    e = np.eye(n_open)
    return np.block([[z, e], [e, z]])
