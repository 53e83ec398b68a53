"""Exact modes of the discretized semi-infinite leads."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import CutoffError
from .geometry import Grid


@dataclass(frozen=True)
class LeadBasis:
    """Transverse modes and longitudinal wavenumbers of a free lead.

    Attributes
    ----------
    profiles : (ny, ny) ndarray
        Column ``m-1`` is the orthonormal transverse profile of mode ``m``,
        ``sqrt(2/(ny+1)) sin(m pi j/(ny+1))``.
    kx : (ny,) complex ndarray
        Longitudinal wavenumbers from the lattice dispersion relation.  Real
        in (0, pi/h) for open modes, ``Im kx > 0`` for evanescent ones.
    n_open : int
        Number of open modes N'.
    velocity : (n_open,) ndarray
        Lattice flux per unit squared amplitude, ``sin(kx h)/h``.
    """

    grid: Grid
    k: float
    profiles: np.ndarray
    kx: np.ndarray
    n_open: int

    @property
    def n_evanescent(self):
        return self.profiles.shape[1] - self.n_open

    @property
    def velocity(self):
        h = self.grid.h
        return np.sin(self.kx[: self.n_open].real * h) / h

    @property
    def flux_normalization(self):
        return 1.0 / np.sqrt(self.velocity)

    @property
    def transverse_eigenvalues(self):
        return transverse_eigenvalues(self.grid)

    def group_delay(self, length):
        """Lattice group delay ``L dkx/dk`` of every open mode."""
        h = self.grid.h
        return length * self.k * h / np.sin(self.kx[: self.n_open].real * h)


def transverse_eigenvalues(grid: Grid):
    """Eigenvalues ``(2/h^2)(1 - cos(m pi h / W))`` of minus the 1D Dirichlet Laplacian."""
    m = np.arange(1, grid.ny + 1)
    return 2.0 / grid.h ** 2 * (1.0 - np.cos(m * math.pi / (grid.ny + 1)))


def transverse_profiles(grid: Grid):
    n = grid.ny
    j = np.arange(1, n + 1)[:, None]
    m = np.arange(1, n + 1)[None, :]
    return math.sqrt(2.0 / (n + 1)) * np.sin(m * j * math.pi / (n + 1))


def continuum_kx(k, W, m):
    """Continuum longitudinal wavenumber sqrt(k^2 - (m pi/W)^2) (reporting only)."""
    return np.sqrt(complex(1) * (k ** 2 - (np.asarray(m) * math.pi / W) ** 2))


def lattice_kx(k, grid: Grid):
    """Solve (2/h^2)(cos(kx h) - 1) - eps_m + k^2 = 0 for every transverse mode."""
    h = grid.h
    c = 1.0 - 0.5 * h * h * (k * k - transverse_eigenvalues(grid))
    kx = np.empty(grid.ny, dtype=complex)
    open_ = np.abs(c) < 1.0
    kx[open_] = np.arccos(c[open_]) / h
    above = c >= 1.0
    kx[above] = 1j * np.arccosh(c[above]) / h
    below = c <= -1.0
    kx[below] = (math.pi + 1j * np.arccosh(-c[below])) / h
    return kx


def lead_modes(k, W, grid: Grid, cutoff_margin=1e-3) -> LeadBasis:
    """All lattice lead modes at wavenumber ``k``.

    Modes are ordered by transverse index; the open ones come first because
    the transverse eigenvalues increase with ``m``.

    Raises
    ------
    CutoffError
        If no mode is open, or if ``k^2`` lies within ``cutoff_margin * k^2``
        of a mode threshold (where the flux normalization diverges).
    """
    if grid.ny < 2:
        raise CutoffError("grid needs at least 2 interior transverse points")
    if abs(grid.width - W) > 1e-9 * W:
        raise ValueError("grid width does not match W")
    eps = transverse_eigenvalues(grid)
    kx = lattice_kx(k, grid)
    gap = np.abs(k * k - eps)
    top = np.abs(k * k - eps - 4.0 / grid.h ** 2)
    if np.min(np.minimum(gap, top)) < cutoff_margin * k * k:
        m = int(np.argmin(np.minimum(gap, top))) + 1
        raise CutoffError(f"k = {k:.8g} is within the cutoff margin of mode {m}")
    is_open = np.abs(kx.imag) == 0.0
    n_open = int(is_open.sum())
    if n_open == 0:
        raise CutoffError(f"no open mode at k = {k:.6g} (kW/pi = {k * W / math.pi:.4g})")
    if not is_open[:n_open].all():
        raise CutoffError("open modes are not contiguous; resolution too coarse for this k")
    return LeadBasis(grid, k, transverse_profiles(grid), kx, n_open)
