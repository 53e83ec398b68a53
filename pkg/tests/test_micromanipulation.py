import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwslab.fock import diagonal_qws_variance, product_state, tensor_qws, truncated_gaussian_vector
from qwslab.gaussian import GaussianState, db_of
from qwslab.metrology import qfi_gaussian
from qwslab.micromanipulation import (_h, force_spectral_expectation, injected_expectation,
                                      min_variance_gaussian, optimal_force_probe,
                                      optimize_scalarized, p_opt, p_opt_asymptotic, p_opt_numeric,
                                      qws_expectation, reduction_factor, reduction_table,
                                      single_channel_variance, variance_objective)

FROZEN = json.loads((Path(__file__).parent / "data" / "p_opt_frozen.json").read_text())


def test_qws_expectation_examples():
    lam = np.array([1.2, -0.3, 0.5])
    assert qws_expectation(np.zeros(3), lam) == pytest.approx(0.5 * lam.sum())
    assert qws_expectation([4.0, 0, 0], lam) == pytest.approx(4 * 1.2 + 0.5 * lam.sum())
    a, b = np.array([1.0, 2.0, 0.0]), np.array([0.0, 1.0, 3.0])
    mix = qws_expectation(0.3 * a + 0.7 * b, lam)
    assert mix == pytest.approx(0.3 * qws_expectation(a, lam) + 0.7 * qws_expectation(b, lam))
    with pytest.raises(ValueError):
        qws_expectation([-1.0, 0, 0], lam)
    with pytest.raises(ValueError):
        qws_expectation([1.0], lam)


def test_optimal_mean_is_never_exceeded(rng):
    lam = rng.uniform(-1, 1, 6)
    nu = 5.0
    best = nu * lam.max() + 0.5 * lam.sum()
    for _ in range(1000):
        occ = rng.dirichlet(np.ones(6)) * nu
        assert qws_expectation(occ, lam) <= best + 1e-12
    rep = optimal_force_probe(lam, nu)
    assert rep.mean_force == pytest.approx(best)
    assert rep.vacuum_term == pytest.approx(0.5 * lam.sum())
    assert rep.channel == int(np.argmax(lam))


def test_mean_is_state_independent_via_fock(rng):
    # coherent, squeezed and Fock probes with equal occupations give the same mean
    lam = rng.uniform(-1, 1, 2)
    occ = np.array([2.0, 1.0])
    cutoff = 40
    H = tensor_qws(np.diag(lam), cutoff)
    expected = qws_expectation(occ, lam)
    coh = product_state([truncated_gaussian_vector(math.sqrt(n), 0, 0) for n in occ])
    p = np.array([0.4, 0.3])
    sq = product_state([truncated_gaussian_vector(math.sqrt(n - math.sinh(q) ** 2), q, 0.7)
                        for n, q in zip(occ, p)])
    fock = np.zeros(cutoff ** 2)
    fock[2 * cutoff + 1] = 1.0
    for v in (coh, sq, fock):
        assert np.vdot(v, H @ v).real / np.vdot(v, v).real == pytest.approx(expected, abs=1e-8)


def test_p_opt_at_49():
    p = p_opt(49)
    assert db_of(p) == pytest.approx(7.65, abs=0.01)
    assert p == pytest.approx(0.881, abs=1e-3)
    assert reduction_factor(49) <= 0.5
    assert reduction_factor(45) > 0.5


def test_zero_photons():
    assert p_opt(0) == 0.0
    assert min_variance_gaussian(0) == (0.0, 0.0)
    rep = optimal_force_probe([1.0, -1.0], 0)
    assert rep.sigma == 0.0 and rep.beta_abs == 0.0
    assert reduction_factor(0) == 1.0


@pytest.mark.parametrize("nu", [1, 10, 100, 1e4])
def test_closed_form_matches_numeric_minimizer(nu):
    assert abs(p_opt(nu) - p_opt_numeric(nu)) <= 1e-9


@pytest.mark.parametrize("nu", sorted(FROZEN, key=float))
def test_closed_form_matches_frozen_high_precision(nu):
    assert p_opt(float(nu)) == pytest.approx(float(FROZEN[nu]), abs=1e-12)


@pytest.mark.parametrize("nu", [1e-12, 1e-8, 1e-6 * (1 - 1e-9), 1e-6])
def test_small_nu_branch_is_continuous_and_accurate(nu):
    # closed form cancels below 1e-6; the series branch must agree with a tight numeric root
    assert p_opt(nu) == pytest.approx(p_opt_numeric(nu, xtol=1e-30), rel=1e-9)
    assert p_opt(4.1e-51) == pytest.approx(4.1e-51, rel=1e-12)
    assert reduction_factor(4.1e-51) <= 1.0

def test_numeric_minimizer_is_a_minimum():
    for nu in (0.5, 3.0, 77.0):
        p = p_opt_numeric(nu)
        f = variance_objective(p, nu)
        for d in (-1e-3, 1e-3):
            assert variance_objective(p + d, nu) > f


def test_asymptote():
    assert p_opt_asymptotic(0.25) == 0.0
    assert abs(p_opt(1e6) - p_opt_asymptotic(1e6)) <= 1e-4
    assert abs(p_opt(49) - p_opt_asymptotic(49)) <= 0.05
    with pytest.raises(ValueError):
        p_opt_asymptotic(0)


def test_domain_guards():
    with pytest.raises(ValueError):
        p_opt(-1.0)
    with pytest.raises(ValueError):
        _h(-0.5)


@settings(max_examples=200)
@given(st.floats(0.0, 1e6))
def test_constraint_and_reduction(nu):
    b, p = min_variance_gaussian(nu)
    assert 0.0 <= p <= math.asinh(math.sqrt(nu)) + 1e-15
    assert b ** 2 + math.sinh(p) ** 2 == pytest.approx(nu, rel=1e-12, abs=1e-12)
    r = reduction_factor(nu)
    assert r <= 1.0
    if nu > 1e-6:
        assert r < 1.0


def test_variance_formula_against_fock():
    for b, p in ((1.5, 0.3), (0.7, 0.5)):
        v = truncated_gaussian_vector(b, p, 0.0, cutoff=60)
        assert diagonal_qws_variance([1.0], v, 60) == pytest.approx(single_channel_variance(b, p),
                                                                    rel=1e-9)
        # phase squeezing flips the exponent
        v = truncated_gaussian_vector(b, p, math.pi, cutoff=60)
        assert diagonal_qws_variance([1.0], v, 60) == pytest.approx(
            single_channel_variance(b, p, amplitude_squeezed=False), rel=1e-9)


def test_force_report_state_matches_qfi():
    lam = np.array([0.4, 1.3, -0.8])
    rep = optimal_force_probe(lam, 12.0)
    st_ = rep.state(3)
    # F = 4 Var(Q_hat) = 4 sigma^2
    assert qfi_gaussian(st_.alpha, st_.Z, lam) == pytest.approx(4 * rep.sigma ** 2, rel=1e-12)
    coh = optimal_force_probe(lam, 12.0, squeeze=False)
    assert rep.sigma < coh.sigma
    assert rep.mean_force == coh.mean_force


def test_scalarized_is_experimental_and_agrees():
    with pytest.warns(FutureWarning):
        p = optimize_scalarized(49.0, lam=1.0, weight=2.0)
    assert p == pytest.approx(p_opt(49), abs=1e-6)


def test_reduction_table(tmp_path):
    table = reduction_table([1, 49, 1000])
    path = table.to_csv(tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "nu,beta_opt,p_opt_dB,sigma_ratio"
    row = [float(x) for x in lines[2].split(",")]
    assert row[2] == pytest.approx(7.65, abs=0.01) and row[3] <= 0.5


# ---------------------------------------------------------------- spectral expectation


def _samples(rng, n=5, N=3):
    E = np.linspace(10.0, 11.0, n)
    Qs = []
    for _ in range(n):
        A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        Qs.append(0.5 * (A + A.conj().T))
    return E, Qs


def test_spectral_zero_weights(rng):
    E, Qs = _samples(rng)
    states = [rng.normal(size=3) for _ in E]
    inj, vac = force_spectral_expectation(E, np.zeros(E.size), Qs, states)
    assert inj == 0.0
    traces = [np.trace(q).real for q in Qs]
    assert vac == pytest.approx(np.trapezoid(traces, E) / (4 * math.pi))


def test_spectral_single_bin(rng):
    E, Qs = _samples(rng, n=1)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    c2, dE = 0.7, 0.05
    inj, _ = force_spectral_expectation(E, [c2], Qs, [a], bin_width=dE)
    assert inj == pytest.approx(dE / (2 * math.pi) * c2 * np.vdot(a, Qs[0] @ a).real)


def test_spectral_bins_are_additive(rng):
    E, Qs = _samples(rng, n=4)
    states = [GaussianState(rng.normal(size=3), 0.1 * np.eye(3)) for _ in E]
    w = rng.uniform(0, 1, 4)
    whole, _ = force_spectral_expectation(E, w, Qs, states, bin_width=0.1)
    first, _ = force_spectral_expectation(E[:2], w[:2], Qs[:2], states[:2], bin_width=0.1)
    second, _ = force_spectral_expectation(E[2:], w[2:], Qs[2:], states[2:], bin_width=0.1)
    assert whole == pytest.approx(first + second, rel=1e-14)


def test_injected_expectation_includes_squeezing(rng):
    Q = np.diag([1.0, -0.5])
    st_ = GaussianState(np.zeros(2), np.diag([math.asinh(1.0), 0.0]))
    # one squeezed photon in mode 0
    assert injected_expectation(st_, Q) == pytest.approx(1.0, abs=1e-14)


def test_spectral_errors(rng):
    E, Qs = _samples(rng)
    states = [np.zeros(3)] * len(E)
    with pytest.raises(ValueError):
        force_spectral_expectation(E, np.zeros(2), Qs, states)
    with pytest.raises(ValueError):
        force_spectral_expectation(E, np.zeros(E.size), Qs, states, E_max=10.5)
