"""Brute-force Fock-space reference for small mode and photon numbers.

Two kinds of spaces are used:

* a *sector* ``F_nu^N``: all occupation vectors of ``N`` modes with total
  photon number ``nu``, where passive linear optics acts exactly;
* a *truncated tensor space* with ``cutoff`` levels per mode, used for
  Gaussian states that are not number-conserving.

Convention for the lifted unitary: ``U a_j^dagger U^dagger = sum_i S_ij a_i^dagger``,
so that coherent amplitudes map as ``alpha -> S alpha`` and the ``nu = 1``
sector matrix equals ``S``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import expm
from scipy.special import comb

from .errors import AliasingError, SectorCapError, TruncationError

DEFAULT_SECTOR_CAP = 10_000


def _compositions(nu, n):
    """Occupation vectors of ``n`` modes summing to ``nu`` in reverse-lexicographic order."""
    if n == 1:
        yield (nu,)
        return
    for first in range(nu, -1, -1):
        for rest in _compositions(nu - first, n - 1):
            yield (first,) + rest


def sector_dimension(N, nu):
    return int(comb(nu + N - 1, nu, exact=True))


@dataclass(frozen=True)
class FockSector:
    """Basis of ``F_nu^N`` in reverse-lexicographic order, e.g. (2,0), (1,1), (0,2)."""

    N: int
    nu: int
    cap: int = DEFAULT_SECTOR_CAP

    def __post_init__(self):
        if self.N < 1 or self.nu < 0:
            raise ValueError("need N >= 1 and nu >= 0")
        if self.dim > self.cap:
            raise SectorCapError(f"sector N={self.N}, nu={self.nu} has dimension {self.dim} "
                                 f"above the cap {self.cap}")

    @property
    def dim(self):
        return sector_dimension(self.N, self.nu)

    @cached_property
    def basis(self):
        return np.array(list(_compositions(self.nu, self.N)), dtype=int).reshape(-1, self.N)

    @cached_property
    def index(self):
        return {tuple(v): i for i, v in enumerate(self.basis)}

    def number_operator(self, i):
        """Diagonal of ``n_i`` on the sector."""
        return self.basis[:, i].astype(float)

    def state(self, occupation):
        v = np.zeros(self.dim, complex)
        v[self.index[tuple(occupation)]] = 1.0
        return v


@dataclass(frozen=True)
class SectorOperator:
    matrix: np.ndarray
    sector: FockSector
    label: str  # "unitary" or "generator"

    @property
    def unitarity_defect(self):
        M = self.matrix
        return float(np.linalg.norm(M.conj().T @ M - np.eye(M.shape[0])))

    @property
    def hermiticity_defect(self):
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T))


def permanent(A):
    """Permanent by Ryser's formula, visiting column subsets in Gray-code order.

    ``O(2^n n)`` operations; the empty matrix has permanent 1.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0j
    if n == 1:
        return A[0, 0]
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    in_set = np.zeros(n, dtype=bool)
    size = 0
    for k in range(1, 2 ** n):
        j = (k & -k).bit_length() - 1  # column flipped between Gray codes k-1 and k
        if in_set[j]:
            row_sums -= A[:, j]
            size -= 1
        else:
            row_sums += A[:, j]
            size += 1
        in_set[j] = not in_set[j]
        term = np.prod(row_sums)
        total += -term if size % 2 else term
    return total * (-1) ** n


def _repeat(occ):
    return np.repeat(np.arange(len(occ)), occ)


def _check_unitary_input(S, tol=1e-8):
    S = np.asarray(S, dtype=complex)
    d = float(np.linalg.norm(S.conj().T @ S - np.eye(S.shape[0])))
    if d > tol:
        raise ValueError(f"S is not unitary (defect {d:.3e})")
    return S


def sector_unitary(S, nu, cap=DEFAULT_SECTOR_CAP, check=True) -> SectorOperator:
    """Lift of ``S`` to the ``nu``-photon sector, ``<mu|U|nu'> = per(S[mu, nu']) / sqrt(mu! nu'!)``.

    ``S[mu, nu']`` repeats row ``i`` ``mu_i`` times and column ``j`` ``nu'_j``
    times.  The global phase ``sqrt(det S)`` is not included.
    """
    S = _check_unitary_input(S) if check else np.asarray(S, dtype=complex)
    sec = FockSector(S.shape[0], nu, cap)
    B = sec.basis
    fact = np.array([np.prod([math.factorial(x) for x in v]) for v in B], dtype=float)
    rows = [_repeat(v) for v in B]
    U = np.empty((sec.dim, sec.dim), complex)
    for c, vc in enumerate(B):
        Sc = S[:, _repeat(vc)]
        for r in range(sec.dim):
            U[r, c] = permanent(Sc[rows[r]])
    U /= np.sqrt(np.outer(fact, fact))
    return SectorOperator(U, sec, "unitary")


def _creation_maps(N, nu, cap):
    """Matrices of ``a_i^dagger`` from sector ``nu-1`` to sector ``nu``."""
    lo, hi = FockSector(N, nu - 1, cap), FockSector(N, nu, cap)
    maps = []
    for i in range(N):
        M = np.zeros((hi.dim, lo.dim))
        for c, v in enumerate(lo.basis):
            w = v.copy()
            w[i] += 1
            M[hi.index[tuple(w)], c] = math.sqrt(w[i])
        maps.append(M)
    return maps


def sector_unitary_ladder(S, nu, cap=DEFAULT_SECTOR_CAP) -> SectorOperator:
    """Same lift as :func:`sector_unitary`, built by applying transformed creation operators.

    ``U|n> = prod_j (sum_i S_ij a_i^dagger)^{n_j} / sqrt(n_j!) |0>``; an
    independent route used to cross-check the permanent formula.
    """
    S = np.asarray(S, dtype=complex)
    N = S.shape[0]
    sec = FockSector(N, nu, cap)
    ladders = [None] + [_creation_maps(N, k, cap) for k in range(1, nu + 1)]
    U = np.empty((sec.dim, sec.dim), complex)
    for c, occ in enumerate(sec.basis):
        vec = np.ones(1, complex)
        level = 0
        for j, n_j in enumerate(occ):
            for _ in range(n_j):
                level += 1
                vec = sum(S[i, j] * (ladders[level][i] @ vec) for i in range(N))
            vec = vec / math.sqrt(math.factorial(n_j))
        U[:, c] = vec
    return SectorOperator(U, sec, "unitary")


def hopping_matrix(sector: FockSector, i, j):
    """Matrix of ``a_i^dagger a_j`` on a sector."""
    M = np.zeros((sector.dim, sector.dim))
    for c, v in enumerate(sector.basis):
        if v[j] == 0:
            continue
        w = v.copy()
        amp = math.sqrt(w[j])
        w[j] -= 1
        w[i] += 1
        amp *= math.sqrt(w[i])
        M[sector.index[tuple(w)], c] = amp
    return M


def sector_qws(Q, nu, cap=DEFAULT_SECTOR_CAP) -> SectorOperator:
    """Jordan-Schwinger lift ``sum_ij Q_ij a_i^dagger a_j + tr(Q)/2`` on the ``nu`` sector."""
    Q = np.asarray(Q, dtype=complex)
    N = Q.shape[0]
    sec = FockSector(N, nu, cap)
    M = 0.5 * np.trace(Q) * np.eye(sec.dim, dtype=complex)
    for i in range(N):
        for j in range(N):
            if Q[i, j] != 0:
                M += Q[i, j] * hopping_matrix(sec, i, j)
    return SectorOperator(M, sec, "generator")


def _half_phase(det_ref_half, det):
    """``sqrt(det)`` on the branch continuous with ``det_ref_half``."""
    root = np.sqrt(det + 0j)
    return root if abs(root - det_ref_half) <= abs(root + det_ref_half) else -root


def verify_generator_identity(S_minus, S_plus, Q, nu, step, S_mid=None, cap=DEFAULT_SECTOR_CAP):
    """Frobenius residual between ``-i U^dagger dU/dtheta`` and :func:`sector_qws` ``(Q)``.

    ``U(theta) = sqrt(det S(theta)) x`` the sector lift of ``S(theta)``; the
    square-root branch is followed continuously from ``S_minus`` to
    ``S_plus``.  ``U`` at the midpoint comes from ``S_mid`` when given, else
    from the mean of the two samples.

    Raises
    ------
    AliasingError
        If ``arg(det S_plus / det S_minus)`` exceeds pi/2, so that the
        square-root branch cannot be followed reliably.
    """
    S_minus = np.asarray(S_minus, dtype=complex)
    S_plus = np.asarray(S_plus, dtype=complex)
    d_minus = np.linalg.det(S_minus)
    d_plus = np.linalg.det(S_plus)
    jump = abs(np.angle(d_plus / d_minus))
    if jump > 0.5 * math.pi:
        raise AliasingError(f"det S changes phase by {jump:.3f} rad across the step")
    r_minus = np.sqrt(d_minus + 0j)
    r_plus = _half_phase(r_minus, d_plus)
    U_minus = r_minus * sector_unitary(S_minus, nu, cap).matrix
    U_plus = r_plus * sector_unitary(S_plus, nu, cap).matrix
    if S_mid is not None:
        S_mid = np.asarray(S_mid, dtype=complex)
        r_mid = _half_phase(r_minus, np.linalg.det(S_mid))
        U_mid = r_mid * sector_unitary(S_mid, nu, cap).matrix
    else:
        U_mid = 0.5 * (U_plus + U_minus)
    generator = -1j * U_mid.conj().T @ (U_plus - U_minus) / step
    target = sector_qws(Q, nu, cap).matrix
    return float(np.linalg.norm(generator - target))


def sector_variance(H, vec):
    """Variance of the Hermitian matrix ``H`` in the (normalized) state ``vec``."""
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    Hv = H @ vec
    mean = np.vdot(vec, Hv).real
    return float(np.vdot(Hv, Hv).real - mean ** 2)


def sector_expectation(H, vec):
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return float(np.vdot(vec, H @ vec).real)


# --------------------------------------------------------------------------
# single-mode and truncated multimode expansions


def truncated_gaussian_vector(beta, p, psi, cutoff=40, norm_budget=1e-10):
    """Fock coefficients ``<n|D(beta) S(p e^{i psi})|0>`` for ``n < cutoff``.

    Uses the three-term recurrence of the squeezed-coherent amplitudes.  The
    vector is returned as computed (not renormalized); its squared norm must
    be at least ``1 - norm_budget``.
    """
    if p < 0 or p > 1.0:
        raise ValueError("squeezing p must lie in [0, 1]")
    if cutoff < 40:
        raise ValueError("cutoff must be at least 40")
    beta = complex(beta)
    ch, sh = math.cosh(p), math.sinh(p)
    e = complex(math.cos(psi), math.sin(psi))
    gamma = beta * ch + beta.conjugate() * e * sh
    c = np.zeros(cutoff, complex)
    c[0] = np.exp(-0.5 * abs(beta) ** 2 - 0.5 * beta.conjugate() ** 2 * e * math.tanh(p)) / math.sqrt(ch)
    if cutoff > 1:
        c[1] = gamma * c[0] / ch
    for n in range(1, cutoff - 1):
        c[n + 1] = (gamma * c[n] - e * sh * math.sqrt(n) * c[n - 1]) / (ch * math.sqrt(n + 1))
    norm2 = float(np.vdot(c, c).real)
    if norm2 < 1.0 - norm_budget:
        raise TruncationError(f"cutoff {cutoff} keeps only {norm2:.12f} of the norm")
    return c


def annihilation(cutoff):
    return np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(complex)


def mode_operators(N, cutoff):
    """Annihilation operators of ``N`` modes on the truncated tensor space (mode 0 slowest)."""
    a = annihilation(cutoff)
    eye = np.eye(cutoff)
    ops = []
    for i in range(N):
        factors = [a if k == i else eye for k in range(N)]
        op = factors[0]
        for f in factors[1:]:
            op = np.kron(op, f)
        ops.append(op)
    return ops


def product_state(vectors):
    """Tensor product of single-mode coefficient vectors (mode 0 slowest)."""
    out = np.ones(1, complex)
    for v in vectors:
        out = np.kron(out, v)
    return out


def tensor_qws(Q, cutoff, ops=None):
    """``sum_ij Q_ij a_i^dagger a_j + tr(Q)/2`` on the truncated tensor space."""
    Q = np.asarray(Q, dtype=complex)
    N = Q.shape[0]
    ops = mode_operators(N, cutoff) if ops is None else ops
    dim = cutoff ** N
    H = 0.5 * np.trace(Q) * np.eye(dim, dtype=complex)
    for i in range(N):
        for j in range(N):
            if Q[i, j] != 0:
                H += Q[i, j] * ops[i].conj().T @ ops[j]
    return H


def diagonal_qws_variance(lam, vec, cutoff):
    """Variance of ``sum_i lam_i n_i`` for a tensor-space state, from its number distribution."""
    lam = np.asarray(lam, dtype=float)
    N = lam.size
    prob = np.abs(np.asarray(vec)) ** 2
    prob = prob / prob.sum()
    grids = np.meshgrid(*[np.arange(cutoff)] * N, indexing="ij")
    h = sum(l * g.ravel() for l, g in zip(lam, grids)) + 0.5 * lam.sum()
    mean = float(prob @ h)
    return float(prob @ (h - mean) ** 2)


def gaussian_state_expm(alpha, Z, cutoff):
    """``D(alpha) S(Z)|0>`` on the truncated tensor space by dense matrix exponentials.

    Independent of the closed forms; only meaningful when the state's weight
    near the truncation edge is negligible.
    """
    alpha = np.asarray(alpha, dtype=complex)
    Z = np.asarray(Z, dtype=complex)
    N = alpha.size
    ops = mode_operators(N, cutoff)
    dag = [o.conj().T for o in ops]
    gen = np.zeros_like(ops[0])
    for i in range(N):
        for j in range(N):
            gen += 0.5 * (np.conj(Z[i, j]) * ops[i] @ ops[j] - Z[i, j] * dag[i] @ dag[j])
    disp = sum(alpha[i] * dag[i] - np.conj(alpha[i]) * ops[i] for i in range(N))
    vac = np.zeros(cutoff ** N, complex)
    vac[0] = 1.0
    return expm(disp) @ (expm(gen) @ vac)
