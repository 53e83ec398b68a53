"""Generalized Wigner-Smith matrices from finite differences of S(theta)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AliasingError, SolverQualityError
from .scattering import Scenario, scattering_matrix

#: Largest unitarity defect accepted for an S sample entering a derivative.
UNITARITY_BUDGET = 1e-8


@dataclass(frozen=True)
class GwsMatrix:
    """Hermitian GWS matrix ``Q = -i S^dagger dS/dtheta``.

    ``hermiticity_defect`` is the Frobenius norm of the anti-Hermitian part
    removed by symmetrization.  Units are those conjugate to theta (time for
    omega, inverse length for a position).
    """

    entries: np.ndarray
    theta_kind: str
    step: float
    hermiticity_defect: float
    S: np.ndarray | None = None

    @property
    def N(self):
        return self.entries.shape[0]

    @property
    def trace(self):
        return float(np.trace(self.entries).real)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class GwsEigenSystem:
    """Eigenvalues in descending order and the unitary matrix of eigenvectors (columns)."""

    eigenvalues: np.ndarray
    W: np.ndarray

    @property
    def i_max(self):
        return 0

    @property
    def i_min(self):
        return len(self.eigenvalues) - 1

    @property
    def i_hav(self):
        """Index of the eigenvalue with the largest magnitude; ties go to the positive one."""
        lam = self.eigenvalues
        a = np.abs(lam)
        best = np.flatnonzero(a >= a.max() - 1e-14 * max(a.max(), 1.0))
        return int(best[np.argmax(lam[best])])

    def reconstruct(self):
        return (self.W * self.eigenvalues) @ self.W.conj().T


def _check_unitary(S, label):
    d = float(np.linalg.norm(S.conj().T @ S - np.eye(S.shape[0])))
    if d > UNITARITY_BUDGET:
        raise SolverQualityError(f"S sample {label} has unitarity defect {d:.3e}", defect=d)


def gws_from_samples(S_minus, S_mid, S_plus, step, theta_kind="theta", S_minus2=None,
                     S_plus2=None):
    """Build Q from S at ``theta -+ step/2`` and at ``theta``.

    With ``S_minus2``/``S_plus2`` (at ``theta -+ step``) the derivative is
    Richardson-extrapolated, ``(4 D(step) - D(2 step)) / 3``.
    """
    S_minus, S_mid, S_plus = (np.asarray(a) for a in (S_minus, S_mid, S_plus))
    dS = (S_plus - S_minus) / step
    if S_minus2 is not None:
        dS2 = (np.asarray(S_plus2) - np.asarray(S_minus2)) / (2 * step)
        dS = (4.0 * dS - dS2) / 3.0
    Q = -1j * S_mid.conj().T @ dS
    anti = 0.5 * (Q - Q.conj().T)
    Qh = 0.5 * (Q + Q.conj().T)
    return GwsMatrix(Qh, theta_kind, float(step), float(np.linalg.norm(anti)), S_mid)


def theta_samples(scenario: Scenario, offsets):
    """S matrices at ``theta + offset`` for each offset."""
    out = []
    for off in offsets:
        S = scattering_matrix(scenario.displaced(off)).entries
        _check_unitary(S, f"theta{off:+.3e}")
        out.append(S)
    return out


def gws_matrix(scenario: Scenario, step=None, richardson=None) -> GwsMatrix:
    """Central-difference GWS matrix for the scenario's theta.

    S is evaluated at ``theta - h/2``, ``theta`` and ``theta + h/2``; the
    middle sample multiplies the derivative.  ``richardson`` adds the
    samples at ``theta -+ h``.
    """
    h = scenario.theta_step if step is None else float(step)
    rich = scenario.theta.use_richardson if richardson is None else richardson
    offsets = [-0.5 * h, 0.0, 0.5 * h] + ([-h, h] if rich else [])
    samples = theta_samples(scenario, offsets)
    extra = dict(S_minus2=samples[3], S_plus2=samples[4]) if rich else {}
    return gws_from_samples(samples[0], samples[1], samples[2], h, scenario.theta.kind, **extra)


def _canonical_phase(v):
    """Rotate ``v`` so its largest-magnitude component (first among ties) is real positive."""
    a = np.abs(v)
    i = int(np.flatnonzero(a >= a.max() * (1 - 1e-12))[0])
    if a[i] == 0:
        return v
    return v * (abs(v[i]) / v[i])


def eigendecompose(Q) -> GwsEigenSystem:
    """Hermitian eigendecomposition with deterministic ordering and phases.

    Eigenvalues are sorted in descending order.  Each eigenvector is rotated
    so that its largest component is real and positive.  Within a cluster of
    (numerically) equal eigenvalues the vectors are ordered lexicographically
    by their canonicalized entries.  ``Q = 0`` yields the identity.
    """
    Q = np.asarray(Q, dtype=complex)
    Q = 0.5 * (Q + Q.conj().T)
    n = Q.shape[0]
    if not np.any(Q):
        return GwsEigenSystem(np.zeros(n), np.eye(n, dtype=complex))
    lam, V = np.linalg.eigh(Q)
    lam = lam[::-1].copy()
    V = V[:, ::-1]
    V = np.column_stack([_canonical_phase(V[:, i]) for i in range(n)])

    tol = 1e-12 * max(np.abs(lam).max(), 1.0)
    order = []
    i = 0
    while i < n:
        j = i + 1
        while j < n and lam[i] - lam[j] <= tol:
            j += 1
        block = list(range(i, j))
        if len(block) > 1:
            def key(c):
                v = V[:, c]
                return tuple(np.round(np.concatenate([v.real, v.imag]), 10))
            block.sort(key=key, reverse=True)
        order += block
        i = j
    return GwsEigenSystem(lam[order], V[:, order])


def expected_classical_force(alpha, Q) -> float:
    """``alpha^dagger Q alpha`` (proportional to the mean generalized force)."""
    alpha = np.asarray(alpha, dtype=complex)
    Q = np.asarray(Q)
    if alpha.shape != (Q.shape[0],):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({Q.shape[0]},)")
    return float(np.vdot(alpha, Q @ alpha).real)


def total_phase(S):
    """Principal value of ``eta = -i ln det S`` in (-pi, pi]."""
    return float(np.angle(np.linalg.det(np.asarray(S))))


@dataclass(frozen=True)
class PhaseScan:
    theta: np.ndarray
    eta: np.ndarray
    trace_q: np.ndarray

    def to_csv(self, path):
        from .io import write_table
        write_table(path, ["theta", "eta", "trQ"], np.column_stack([self.theta, self.eta, self.trace_q]))


def unwrap_phase(dets, trace_q=None, grid=None):
    """Cumulative total phase from determinants along a scan.

    Each increment is ``arg(det_{k+1} / det_k)``.  When ``trace_q`` is given,
    the trapezoidal prediction ``(trQ_k + trQ_{k+1}) d/2`` must stay below pi
    and agree with the measured increment, otherwise the scan is aliased.
    """
    dets = np.asarray(dets)
    inc = np.angle(dets[1:] / dets[:-1])
    if trace_q is not None:
        d = np.diff(grid)
        pred = 0.5 * (trace_q[1:] + trace_q[:-1]) * d
        bad = (np.abs(pred) >= math.pi) | (np.abs(pred - inc) > 0.5 * math.pi)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise AliasingError(f"phase step {k} (predicted {pred[k]:.3f} rad) is too large; "
                                "refine the scan")
    return np.angle(dets[0]) + np.concatenate([[0.0], np.cumsum(inc)])


def scattering_phase_scan(scenario: Scenario, values, step=None) -> PhaseScan:
    """Unwrapped total scattering phase and tr(Q) along a theta scan.

    ``values`` are absolute theta offsets (target displacement for positions,
    wavenumbers k for omega).  The number of open channels must not change
    along an omega scan.
    """
    values = np.asarray(values, dtype=float)
    dets, traces = [], []
    n_open = None
    for v in values:
        if scenario.theta.kind == "omega":
            sc = scenario.with_k(v)
        else:
            sc = scenario.displaced(v)
        if n_open is None:
            n_open = sc.open_modes
        elif sc.open_modes != n_open:
            raise ValueError("number of open channels changes along the scan; split it at the cutoff")
        q = gws_matrix(sc, step=step)
        dets.append(np.linalg.det(q.S))
        traces.append(q.trace)
    traces = np.asarray(traces)
    eta = unwrap_phase(dets, traces, values)
    return PhaseScan(values, eta, traces)


def krein_residual(scenario: Scenario, delta=None, step=None):
    """Relative mismatch between ``d eta/d theta`` and ``tr Q_theta`` at the scenario's theta.

    ``d eta/d theta`` is the central difference of the unwrapped total phase
    at ``theta -+ delta`` (default two GWS steps), an evaluation independent
    of the samples used to build ``Q``.
    Returns ``(residual, d_eta, trace)``.
    """
    h = scenario.theta_step if step is None else float(step)
    delta = 2.0 * h if delta is None else float(delta)
    base = scenario.k if scenario.theta.kind == "omega" else 0.0
    scan = scattering_phase_scan(scenario, base + np.array([-delta, 0.0, delta]), step=h)
    d_eta = (scan.eta[2] - scan.eta[0]) / (2.0 * delta)
    tr = scan.trace_q[1]
    return abs(d_eta - tr) / abs(tr), float(d_eta), float(tr)
