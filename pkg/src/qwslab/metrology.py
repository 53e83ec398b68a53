"""Quantum Fisher information of coherent, Gaussian and photon-number probes.

For a pure probe and the unitary encoding generated by the QWS operator
``Q_hat = sum_i lambda_i b_i^dagger b_i + tr(Q)/2`` (``b`` in the GWS
eigenbasis), the QFI is ``F = 4 Var(Q_hat)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyWarning
from .gaussian import GaussianState, hermitian_function, polar_decompose
from .gws import GwsEigenSystem
from .io import write_json, write_table


def _lam(Lambda):
    if isinstance(Lambda, GwsEigenSystem):
        return np.asarray(Lambda.eigenvalues, dtype=float)
    return np.asarray(Lambda, dtype=float)


def _hav(lam):
    """Index of the largest |lambda|; ties go to the positive eigenvalue."""
    a = np.abs(lam)
    best = np.flatnonzero(a >= a.max() - 1e-14 * max(a.max(), 1.0))
    return int(best[np.argmax(lam[best])])


@dataclass(frozen=True)
class QfiReport:
    """QFI of one probe and the Cramer-Rao bound ``1/(M F)`` for ``M`` repetitions."""

    kind: str
    nu: float
    F: float
    M: int = 1
    parameters: dict = field(default_factory=dict)

    @property
    def cramer_rao_bound(self):
        return math.inf if self.F <= 0 else 1.0 / (self.M * self.F)

    def to_json(self):
        return {"probe": self.kind, "nu": self.nu, "F": self.F, "M": self.M,
                "cramer_rao_bound": None if self.F <= 0 else self.cramer_rao_bound,
                "parameters": self.parameters}

    def save(self, path):
        return write_json(path, self.to_json())


def qfi_coherent(alpha, Q):
    """``F = 4 alpha^dagger Q^2 alpha`` for the coherent probe ``|alpha>``."""
    alpha = np.asarray(alpha, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    if alpha.shape != (Q.shape[0],):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({Q.shape[0]},)")
    Qa = Q @ alpha
    return 4.0 * float(np.vdot(Qa, Qa).real)


def mean_occupations(beta, Xi):
    """``nu_i = |beta_i|^2 + (sinh^2 P)_ii`` with ``Xi = P exp(i Psi)``."""
    P = polar_decompose(Xi).R
    return np.abs(beta) ** 2 + np.diag(hermitian_function(P, lambda w: np.sinh(w) ** 2)).real


def mu_matrix(beta, Xi):
    """Photon-number correlations ``mu_ij`` beyond the shot-noise diagonal.

    With ``Xi = P U``, ``A = cosh(P) sinh(P) U`` and ``B = sinh^2(P)``::

        mu_ij = |A_ij|^2 + |B_ij|^2 - 2 Re(beta_i^* beta_j^* A_ij) + 2 Re(beta_i^* beta_j B_ij)

    so that ``Cov(n_i, n_j) = delta_ij nu_i + mu_ij`` (Wick's theorem).
    """
    beta = np.asarray(beta, dtype=complex)
    pol = polar_decompose(Xi)
    C = hermitian_function(pol.R, np.cosh)
    sh = hermitian_function(pol.R, np.sinh)
    A = C @ sh @ pol.unitary
    B = sh @ sh
    bc = beta.conj()
    return (np.abs(A) ** 2 + np.abs(B) ** 2
            - 2.0 * (np.outer(bc, bc) * A).real
            + 2.0 * (np.outer(bc, beta) * B).real)


def qfi_gaussian(beta, Xi, Lambda):
    """``F = 4 sum_i lambda_i^2 nu_i + 4 sum_ij lambda_i lambda_j mu_ij`` in the GWS eigenbasis."""
    lam = _lam(Lambda)
    beta = np.asarray(beta, dtype=complex)
    Xi = np.asarray(Xi, dtype=complex)
    if beta.shape != lam.shape or Xi.shape != (lam.size, lam.size):
        raise ValueError("beta, Xi and Lambda dimensions disagree")
    Xi = 0.5 * (Xi + Xi.T)
    nu = mean_occupations(beta, Xi)
    mu = mu_matrix(beta, Xi)
    return 4.0 * float(lam ** 2 @ nu) + 4.0 * float(lam @ mu @ lam)


def qfi_gaussian_diagonal(beta, p, psi, Lambda):
    """QFI for a squeezing matrix diagonal in the GWS eigenbasis, ``Xi = diag(p_i e^{i psi_i})``.

    ``4 sum_i lambda_i^2 (|beta_i|^2 cosh 2p_i + 2 cosh^2 p_i sinh^2 p_i
    - 2 cosh p_i sinh p_i Re(beta_i^{*2} e^{i psi_i}))``.
    """
    lam = _lam(Lambda)
    beta = np.asarray(beta, dtype=complex)
    p = np.asarray(p, dtype=float)
    psi = np.asarray(psi, dtype=float)
    ch, sh = np.cosh(p), np.sinh(p)
    var = (np.abs(beta) ** 2 * np.cosh(2 * p) + 2 * ch ** 2 * sh ** 2
           - 2 * ch * sh * (np.conj(beta) ** 2 * np.exp(1j * psi)).real)
    return 4.0 * float(lam ** 2 @ var)


def qfi_of_state(state: GaussianState, eig: GwsEigenSystem):
    """QFI of a lead-mode Gaussian state with respect to ``Q = W Lambda W^dagger``."""
    from .gaussian import transform_representation
    st = state if state.representation == "Q" else transform_representation(state, eig.W)
    return qfi_gaussian(st.alpha, st.Z, eig.eigenvalues)


def optimal_coherent_probe(Lambda, nu, M=1):
    """Coherent probe ``beta = sqrt(nu) e_hav``; ``F = 4 lambda_hav^2 nu``."""
    lam = _lam(Lambda)
    if nu < 0:
        raise ValueError("nu must be non-negative")
    i = _hav(lam)
    beta = np.zeros(lam.size, complex)
    beta[i] = math.sqrt(nu)
    F = 4.0 * lam[i] ** 2 * nu
    state = GaussianState.coherent(beta, "Q")
    return state, QfiReport("coherent", float(nu), float(F), M, {"channel": i, "beta": math.sqrt(nu)})


def optimal_gaussian_probe(Lambda, nu, M=1):
    """Squeezed vacuum in channel ``i_hav`` with ``p = arsinh(sqrt(nu))``; ``F = 8 lambda_hav^2 nu (nu + 1)``.

    The squeezing angle is set to zero.  Returns the state (GWS-eigenbasis
    representation) and its report.
    """
    lam = _lam(Lambda)
    if nu < 0:
        raise ValueError("nu must be non-negative")
    if not np.any(lam):
        warnings.warn("all GWS eigenvalues vanish; every probe has zero QFI", DegeneracyWarning,
                      stacklevel=2)
    i = _hav(lam)
    p = math.asinh(math.sqrt(nu))
    Xi = np.zeros((lam.size, lam.size), complex)
    Xi[i, i] = p
    F = 8.0 * lam[i] ** 2 * nu * (nu + 1.0)
    state = GaussianState(np.zeros(lam.size), Xi, "Q")
    return state, QfiReport("gaussian", float(nu), float(F), M,
                            {"channel": i, "beta": 0.0, "p": p, "psi": 0.0})


@dataclass(frozen=True)
class NoonProbe:
    """``(|nu e_a> + |nu e_b>)/sqrt(2)`` in the GWS eigenbasis, phases set to zero."""

    N: int
    nu: int
    channels: tuple[int, int]

    def sector_vector(self, sector):
        v = np.zeros(sector.dim, complex)
        for c in self.channels:
            occ = [0] * self.N
            occ[c] = self.nu
            v[sector.index[tuple(occ)]] = 1.0 / math.sqrt(2.0)
        return v


def optimal_noon_probe(Lambda, nu, M=1):
    """NOON state over the channels of ``lambda_1`` and ``lambda_N``; ``F = (lambda_1 - lambda_N)^2 nu^2``."""
    lam = _lam(Lambda)
    if lam.size < 2:
        raise ValueError("a NOON probe needs at least two channels")
    if int(nu) != nu or nu < 1:
        raise ValueError("NOON probes need an integer photon number nu >= 1")
    nu = int(nu)
    i1, iN = int(np.argmax(lam)), int(np.argmin(lam))
    i1 = int(np.flatnonzero(lam == lam[i1])[0])
    iN = int(np.flatnonzero(lam == lam[iN])[-1])
    spread = lam[i1] - lam[iN]
    if spread == 0:
        warnings.warn("fully degenerate spectrum: NOON probe has zero QFI", DegeneracyWarning,
                      stacklevel=2)
        iN = lam.size - 1 if i1 != lam.size - 1 else 0
    F = spread ** 2 * nu ** 2
    return NoonProbe(lam.size, nu, (i1, iN)), QfiReport(
        "noon", float(nu), float(F), M, {"channels": [i1, iN], "phases": [0.0, 0.0]})


def popoviciu_bound(Lambda, nu):
    """Largest variance of ``Q_hat`` over states with exactly ``nu`` photons: ``nu^2 (lambda_1 - lambda_N)^2 / 4``."""
    lam = _lam(Lambda)
    if nu < 0:
        raise ValueError("nu must be non-negative")
    return float(nu ** 2 * (lam.max() - lam.min()) ** 2 / 4.0)


def uniform_spectrum(N, seed, low=-1.0, high=1.0):
    """Sorted (descending) spectrum drawn from U(low, high) with a seeded generator."""
    rng = np.random.default_rng(seed)
    return np.sort(rng.uniform(low, high, N))[::-1]


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class ScalingTable:
    nu: np.ndarray
    F_coherent: np.ndarray
    F_gaussian: np.ndarray
    F_noon: np.ndarray
    slopes: dict

    def rows(self):
        return np.column_stack([self.nu, self.F_coherent, self.F_gaussian, self.F_noon])

    def to_csv(self, path):
        return write_table(path, ["nu", "F_coherent", "F_gaussian", "F_noon"], self.rows())


def scaling_experiment(Lambda, nu_grid) -> ScalingTable:
    """QFI of the three optimal probe families on a grid of photon numbers.

    Log-log slopes are fitted over the top decade ``[max(nu)/10, max(nu)]``.
    The NOON column uses the grid values as sharp photon numbers.
    """
    lam = _lam(Lambda)
    nu = np.asarray(nu_grid, dtype=float)
    if np.any(nu <= 0):
        raise ValueError("nu grid must be positive")
    l_hav = lam[_hav(lam)]
    spread = lam.max() - lam.min()
    F_coh = 4.0 * l_hav ** 2 * nu
    F_gau = 8.0 * l_hav ** 2 * nu * (nu + 1.0)
    F_noon = spread ** 2 * nu ** 2
    top = nu >= nu.max() / 10.0
    slopes = {}
    for name, col in (("coherent", F_coh), ("gaussian", F_gau), ("noon", F_noon)):
        slopes[name] = loglog_slope(nu[top], col[top]) if top.sum() >= 2 and np.all(col[top] > 0) else math.nan
    return ScalingTable(nu, F_coh, F_gau, F_noon, slopes)
