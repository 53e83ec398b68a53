"""Optimal force states and force-noise reduction by squeezing.

All photons of the optimal force probe sit in the GWS eigenchannel of the
largest eigenvalue.  Among Gaussian states with that occupation, the force
variance is minimized by amplitude squeezing with strength ``p_opt(nu)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .gaussian import GaussianState, db_of
from .io import write_table
from .vacuum import spectral_integral


def qws_expectation(occupations, Lambda):
    """Mean QWS value ``sum_i nu_i lambda_i + tr(Q)/2`` for mean occupations ``nu_i``."""
    nu = np.asarray(occupations, dtype=float)
    lam = np.asarray(Lambda, dtype=float)
    if nu.shape != lam.shape:
        raise ValueError("occupations and Lambda differ in length")
    if np.any(nu < 0):
        raise ValueError("occupations must be non-negative")
    return float(nu @ lam + 0.5 * lam.sum())


def _h(nu):
    a = 1.0 + 2.0 * nu
    radicand = 2916.0 * a ** 4 - 1728.0
    if radicand < 0:
        raise ValueError(f"h(nu) radicand is negative for nu = {nu}")
    return (54.0 * a ** 2 + math.sqrt(radicand)) ** (1.0 / 3.0)


def _g(nu):
    h = _h(nu)
    return 4.0 / h + h / 3.0


# below this the closed form cancels; see p_opt
SMALL_NU = 1e-6


def p_opt(nu):
    """Closed-form squeezing ``p`` minimizing ``nu e^{-2p} + sinh^2 p (1 + sinh 2p)``.

    The value is clipped to the admissible interval ``[0, arsinh(sqrt(nu))]``
    to remove rounding just below zero at ``nu = 0``.  Below ``nu = 1e-6`` the
    closed form loses all relative accuracy to cancellation (``p ~ nu`` against
    an absolute rounding error near ``1e-16``), so the stationarity series
    ``p = nu - 5 nu^2 + O(nu^3)`` is returned instead.
    """
    if nu < 0:
        raise ValueError("nu must be non-negative")
    if nu < SMALL_NU:
        return nu - 5.0 * nu * nu
    g = _g(nu)
    sg = math.sqrt(g)
    inner = 4.0 * (1.0 + 2.0 * nu) / sg - g
    p = 0.5 * math.log(0.5 * (sg + math.sqrt(max(inner, 0.0))))
    return min(max(p, 0.0), math.asinh(math.sqrt(nu)))


def p_opt_asymptotic(nu):
    """Large-``nu`` behaviour ``ln(4 nu)/6``."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    return math.log(4.0 * nu) / 6.0


def variance_objective(p, nu):
    """Force variance per ``lambda^2`` after inserting the photon-number constraint."""
    return nu * math.exp(-2.0 * p) + math.sinh(p) ** 2 * (1.0 + math.sinh(2.0 * p))


def _objective_slope(p, nu):
    return (-2.0 * nu * math.exp(-2.0 * p) + math.sinh(2 * p) * (1.0 + math.sinh(2 * p))
            + 2.0 * math.sinh(p) ** 2 * math.cosh(2 * p))


def p_opt_numeric(nu, xtol=1e-14):
    """Minimizer of :func:`variance_objective` found numerically (closed-form cross-check).

    The objective is convex on the admissible interval, so its stationary
    point is bracketed by ``[0, arsinh(sqrt(nu))]`` and located with Brent's
    root finder; the endpoints are returned when the slope does not change sign.
    """
    hi = math.asinh(math.sqrt(nu))
    if nu == 0 or _objective_slope(0.0, nu) >= 0:
        return 0.0
    if _objective_slope(hi, nu) <= 0:
        return hi
    return brentq(_objective_slope, 0.0, hi, args=(nu,), xtol=xtol, rtol=4 * np.finfo(float).eps)


def single_channel_variance(beta_abs, p, lam=1.0, amplitude_squeezed=True):
    """Variance of ``lambda b^dagger b`` for a squeezed coherent state in one channel.

    Amplitude squeezing (``psi = 2 arg beta``) gives
    ``lambda^2 (|beta|^2 e^{-2p} + 2 cosh^2 p sinh^2 p)``; phase squeezing flips the exponent.
    """
    s = -2.0 if amplitude_squeezed else 2.0
    return lam ** 2 * (beta_abs ** 2 * math.exp(s * p) + 2.0 * math.cosh(p) ** 2 * math.sinh(p) ** 2)


def min_variance_gaussian(nu):
    """``(|beta_opt|, p_opt)`` of the least-noisy Gaussian probe with ``nu`` mean photons."""
    p = p_opt(nu)
    return math.sqrt(max(nu - math.sinh(p) ** 2, 0.0)), p


def reduction_factor(nu):
    """``sigma_sq / sigma_cl``: force noise of the optimal squeezed probe relative to the coherent one."""
    if nu == 0:
        return 1.0
    b, p = min_variance_gaussian(nu)
    return math.sqrt(single_channel_variance(b, p) / single_channel_variance(math.sqrt(nu), 0.0))


@dataclass(frozen=True)
class ForceReport:
    """Mean generalized force and its fluctuation for a single-channel probe.

    Values are in units conjugate to theta (single frequency, no SI conversion).
    """

    channel: int
    nu: float
    mean_force: float
    vacuum_term: float
    sigma: float
    beta_abs: float
    p: float
    psi: float

    def state(self, N):
        """The probe as a Gaussian state in the GWS eigenbasis (amplitude taken real)."""
        beta = np.zeros(N, complex)
        beta[self.channel] = self.beta_abs
        Xi = np.zeros((N, N), complex)
        Xi[self.channel, self.channel] = self.p * np.exp(1j * self.psi)
        return GaussianState(beta, Xi, "Q")


def optimal_force_probe(Lambda, nu, squeeze=True) -> ForceReport:
    """Largest mean force at mean photon number ``nu``, then smallest variance.

    ``squeeze=False`` returns the optimal coherent probe instead.
    """
    lam = np.asarray(Lambda, dtype=float)
    if nu < 0:
        raise ValueError("nu must be non-negative")
    i = int(np.argmax(lam))
    b, p = min_variance_gaussian(nu) if squeeze else (math.sqrt(nu), 0.0)
    var = single_channel_variance(b, p, lam[i])
    occ = np.zeros(lam.size)
    occ[i] = nu
    return ForceReport(i, float(nu), qws_expectation(occ, lam), 0.5 * float(lam.sum()),
                       math.sqrt(var), b, p, 0.0)


def scalarized_objective(p, nu, lam, weight):
    """``mean - weight * sigma`` for one channel at fixed total ``nu`` (experimental).

    Only the squeezing/coherent split varies, so the mean is constant and
    the optimum coincides with :func:`p_opt` for any positive weight.
    """
    b2 = max(nu - math.sinh(p) ** 2, 0.0)
    mean = lam * nu
    return mean - weight * math.sqrt(single_channel_variance(math.sqrt(b2), p, lam))


def optimize_scalarized(nu, lam=1.0, weight=1.0):
    """Maximize :func:`scalarized_objective` over ``p`` (experimental)."""
    warnings.warn("scalarized force optimization is experimental", FutureWarning, stacklevel=2)
    hi = math.asinh(math.sqrt(nu))
    if hi == 0:
        return 0.0
    res = minimize_scalar(lambda p: -scalarized_objective(p, nu, lam, weight), bounds=(0.0, hi),
                          method="bounded", options={"xatol": 1e-12})
    return float(res.x)


@dataclass(frozen=True)
class ReductionTable:
    nu: np.ndarray
    beta_opt: np.ndarray
    p_opt_dB: np.ndarray
    sigma_ratio: np.ndarray

    def rows(self):
        return np.column_stack([self.nu, self.beta_opt, self.p_opt_dB, self.sigma_ratio])

    def to_csv(self, path):
        return write_table(path, ["nu", "beta_opt", "p_opt_dB", "sigma_ratio"], self.rows())


def reduction_table(nu_grid) -> ReductionTable:
    nu = np.asarray(nu_grid, dtype=float)
    pairs = [min_variance_gaussian(v) for v in nu]
    return ReductionTable(nu, np.array([b for b, _ in pairs]),
                          np.array([db_of(p) for _, p in pairs]),
                          np.array([reduction_factor(v) for v in nu]))


def injected_expectation(state: GaussianState, Q):
    """``<psi| a^dagger Q a |psi>`` for a lead-mode Gaussian state (no vacuum term)."""
    Q = np.asarray(Q, dtype=complex)
    Nmat, _ = state.second_moments()
    a = state.alpha
    return float((np.vdot(a, Q @ a) + np.sum(Q * Nmat)).real)


def force_spectral_expectation(E, weights, Q_samples, states, kappa=0.0, bin_width=None,
                               E_max=None):
    """Spectrally integrated force: ``(injected, vacuum)`` terms.

    ``injected = (1/2pi) int <psi_E| a^dagger Q(E) a |psi_E> |c(E)|^2 dE`` and
    ``vacuum = (1/4pi) int tr Q(E) e^{-kappa E} dE``, both by the quadrature of
    :func:`qwslab.vacuum.spectral_integral` (trapezoid, or bins of width
    ``bin_width``).  Frequency bins are treated as independent.  Units with
    ``hbar = c = 1`` so that ``E = k``.

    ``states`` holds one :class:`GaussianState` or coherent amplitude vector per ``E``.
    """
    E = np.asarray(E, dtype=float)
    w = np.asarray(weights, dtype=float)
    if E_max is not None and E.max() > E_max:
        raise ValueError(f"band reaches E = {E.max():.6g} beyond the validated {E_max:.6g}")
    if not (len(E) == len(w) == len(Q_samples) == len(states)):
        raise ValueError("E, weights, Q samples and states must have equal lengths")
    inj = np.empty(len(E))
    tr = np.empty(len(E))
    for k, (Q, st) in enumerate(zip(Q_samples, states)):
        Q = np.asarray(Q)
        if not isinstance(st, GaussianState):
            st = GaussianState.coherent(st)
        inj[k] = injected_expectation(st, Q) if w[k] != 0 else 0.0
        tr[k] = float(np.trace(Q).real)
    injected = spectral_integral(E, inj * w, 0.0, bin_width) / (2.0 * math.pi)
    vacuum = spectral_integral(E, tr, kappa, bin_width) / (4.0 * math.pi)
    return injected, vacuum
