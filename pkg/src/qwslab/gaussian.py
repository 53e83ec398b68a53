"""Pure multimode Gaussian states ``|alpha, Z> = D(alpha) S(Z) |0>``.

Conventions: ``D(alpha) = exp(alpha^T a^dagger - alpha^dagger a)`` and
``S(Z) = exp((a^T Z^* a - a^{dagger T} Z a^dagger)/2)`` with ``Z`` symmetric.
With the polar form ``Z = R exp(i Phi)`` the mode operators transform as

    S^dagger a S = cosh(R) a - sinh(R) exp(i Phi) a^dagger.

Global phases (``sqrt(det S)``) are never stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from .io import complex_from_json, complex_to_json

DB_PER_NEPER = 20.0 / math.log(10.0)


def _sym(Z):
    Z = np.asarray(Z, dtype=complex)
    return 0.5 * (Z + Z.T)


def is_unitary(W, tol=1e-12):
    W = np.asarray(W)
    return float(np.linalg.norm(W.conj().T @ W - np.eye(W.shape[1]))) <= tol


def hermitian_function(R, f):
    """Apply the scalar function ``f`` to a Hermitian matrix via its eigendecomposition."""
    R = 0.5 * (R + np.conj(R).T)
    w, V = np.linalg.eigh(R)
    return (V * f(w)) @ V.conj().T


@dataclass(frozen=True)
class PolarDecomposition:
    """``Z = R U`` with ``R`` Hermitian PSD and ``U = exp(i Phi)`` unitary."""

    R: np.ndarray
    unitary: np.ndarray

    @property
    def Phi(self):
        """A Hermitian logarithm ``Phi`` with ``exp(i Phi) = U`` (principal branch)."""
        # the complex Schur form of a normal matrix is diagonal with unitary vectors
        T, Zs = schur(self.unitary, output="complex")
        ph = np.angle(np.diag(T))
        return (Zs * ph) @ Zs.conj().T

    def reconstruct(self):
        return self.R @ self.unitary


def polar_decompose(Z) -> PolarDecomposition:
    """Polar form from the SVD ``Z = U Sigma V^dagger``: ``R = U Sigma U^dagger``, unitary ``U V^dagger``.

    For singular ``Z`` the unitary factor is the one produced by the full SVD;
    ``Z = 0`` gives the identity by convention.
    """
    Z = np.asarray(Z, dtype=complex)
    n = Z.shape[0]
    if Z.shape != (n, n):
        raise ValueError("Z must be square")
    if not np.any(Z):
        return PolarDecomposition(np.zeros((n, n), complex), np.eye(n, dtype=complex))
    U, s, Vh = np.linalg.svd(Z)
    R = (U * s) @ U.conj().T
    R = 0.5 * (R + R.conj().T)
    return PolarDecomposition(R, U @ Vh)


@dataclass(frozen=True)
class GaussianState:
    """Pure Gaussian state given by amplitudes ``alpha`` and symmetric squeezing ``Z``.

    ``representation`` is ``"M"`` (lead modes) or ``"Q"`` (GWS eigenbasis, in
    which case ``W`` holds the eigenvectors used for the conversion).
    """

    alpha: np.ndarray
    Z: np.ndarray
    representation: str = "M"
    W: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=complex).ravel()
        Z = _sym(self.Z)
        if Z.shape != (alpha.size, alpha.size):
            raise ValueError(f"Z has shape {Z.shape}, expected {(alpha.size, alpha.size)}")
        if self.representation not in ("M", "Q"):
            raise ValueError("representation must be 'M' or 'Q'")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "Z", Z)

    @classmethod
    def coherent(cls, alpha, representation="M"):
        alpha = np.asarray(alpha, dtype=complex).ravel()
        return cls(alpha, np.zeros((alpha.size, alpha.size), complex), representation)

    @classmethod
    def vacuum(cls, n):
        return cls.coherent(np.zeros(n))

    @property
    def N(self):
        return self.alpha.size

    @property
    def polar(self):
        return polar_decompose(self.Z)

    def second_moments(self):
        """Connected moments ``(N, M)`` with ``N_ij = <d_i^dagger d_j>``, ``M_ij = <d_i d_j>``.

        ``d = a - alpha`` are the fluctuation operators.
        """
        pol = self.polar
        C = hermitian_function(pol.R, np.cosh)
        T = hermitian_function(pol.R, np.sinh) @ pol.unitary
        Nmat = (T @ T.conj().T).T
        M = -C @ T
        return Nmat, 0.5 * (M + M.T)

    def to_json(self):
        return {"representation": self.representation,
                "alpha": complex_to_json(self.alpha),
                "Z": complex_to_json(self.Z)}

    @classmethod
    def from_json(cls, d):
        alpha = complex_from_json(d["alpha"])
        return cls(alpha, complex_from_json(d["Z"]).reshape(alpha.size, alpha.size),
                   d.get("representation", "M"))


def mean_photon_numbers(state: GaussianState):
    """Per-mode ``|alpha_m|^2 + (sinh^2 R)_mm`` and their total."""
    s2 = hermitian_function(state.polar.R, lambda w: np.sinh(w) ** 2)
    per = np.abs(state.alpha) ** 2 + np.diag(s2).real
    return per, float(per.sum())


def transform_representation(state: GaussianState, W) -> GaussianState:
    """Change to the basis given by the columns of ``W``: ``beta = W^dagger alpha``, ``Xi = W^dagger Z W^*``."""
    W = np.asarray(W, dtype=complex)
    if W.shape != (state.N, state.N):
        raise ValueError(f"W has shape {W.shape}, expected {(state.N, state.N)}")
    if not is_unitary(W):
        raise ValueError("W is not unitary to 1e-12")
    beta = W.conj().T @ state.alpha
    Xi = W.conj().T @ state.Z @ W.conj()
    return GaussianState(beta, Xi, "Q", W)


def inverse_transform(state: GaussianState, W=None) -> GaussianState:
    """Back to the lead-mode basis: ``alpha = W beta``, ``Z = W Xi W^T``."""
    W = state.W if W is None else np.asarray(W, dtype=complex)
    if W is None:
        raise ValueError("no W on record for this state")
    if not is_unitary(W):
        raise ValueError("W is not unitary to 1e-12")
    return GaussianState(W @ state.alpha, W @ state.Z @ W.T, "M")


def scatter_gaussian(state: GaussianState, S) -> GaussianState:
    """State after the passive linear network ``S``: ``alpha' = S alpha``, ``Z' = S Z S^T``."""
    S = np.asarray(S, dtype=complex)
    if S.shape != (state.N, state.N):
        raise ValueError(f"S has shape {S.shape}, expected {(state.N, state.N)}")
    if state.representation != "M":
        raise ValueError("scatter_gaussian expects a lead-mode (M) representation state")
    return GaussianState(S @ state.alpha, S @ state.Z @ S.T, "M")


def quadrature_variances(r, phi=0.0):
    """Variances along and across the squeezing direction ``phi/2``: ``(e^{-2r}/2, e^{2r}/2)``."""
    if r < 0:
        raise ValueError("r must be non-negative")
    return 0.5 * math.exp(-2.0 * r), 0.5 * math.exp(2.0 * r)


def db_of(r):
    """Squeezing in decibels, ``20 r / ln 10``."""
    return DB_PER_NEPER * r


def r_of_db(db):
    return db / DB_PER_NEPER
