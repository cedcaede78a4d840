import itertools
import math

import numpy as np
import pytest

from utils.fock_oracle import (
    FockLabel,
    brute_force,
    fock_labels,
    negbin_window,
    p_d_exact,
    p_d_exact_parts,
    p_f_exact,
    pair_weight_total,
    povm_vectors,
    rho0_element,
    rho1_element,
    rotate_phases,
    tail_mass,
    total_count_snr,
    truncated_dimension,
    truncated_rho0,
    truncated_rho1,
)
from utils.qi_core import CapacityError, DomainError, NullScenario, ScenarioParams
from utils.single_shot import corrected_probs, count_snr, delta_d, delta_f, p_d_approx, p_f_approx

REL_TOL = 1e-10


# ─── Reduced sums ─────────────────────────────────────────────────────────────

def test_p_f_exact_noiseless() -> None:
    assert p_f_exact(ScenarioParams(0.1, 0.0, 10.0), REL_TOL) == 0.0


@pytest.mark.parametrize("n_b, m", [(1.0, 200.0), (0.2, 2.0), (5.0, 30.0)])
def test_p_f_exact_closed_form(n_b: float, m: float) -> None:
    """Exchange symmetry gives E[Ñ₁/(|Ñ|+M−1)] = N_B/(M(N_B+1)) exactly."""
    value = p_f_exact(ScenarioParams(0.1, n_b, m), REL_TOL)
    assert value == pytest.approx(n_b / (m * (n_b + 1.0)), rel=1e-9)


def test_exact_requires_integer_modes() -> None:
    with pytest.raises(DomainError):
        p_f_exact(ScenarioParams(0.1, 1.0, 200.5), REL_TOL)
    with pytest.raises(DomainError):
        p_d_exact(ScenarioParams(0.1, 1.0, 1.0), REL_TOL)
    with pytest.raises(DomainError):
        p_f_exact(ScenarioParams(0.1, 1.0, 200.0), 1e-3)


def test_bands_against_mean_replacement(band_params: ScenarioParams) -> None:
    pf_x, pd_x = p_f_exact(band_params, REL_TOL), p_d_exact(band_params, REL_TOL)
    pf_a, pd_a = p_f_approx(band_params), p_d_approx(band_params)
    x          = band_params.m * (band_params.n_b + 1.0)

    assert pf_a * (1.0 - 2.0 * (band_params.n_b + 1.0) / (x - 1.0)) < pf_x < pf_a
    assert abs(pf_x - pf_a) <= 2.0 * delta_f(band_params)
    assert abs(pd_x - pd_a) <= 2.0 * delta_d(band_params)

    corr = corrected_probs(band_params).corrected
    assert abs(pd_x - corr.p_d) < abs(pd_x - pd_a)
    assert abs(pf_x - corr.p_f) <= delta_f(band_params)


def test_low_noise_correction_closer() -> None:
    params = ScenarioParams(0.01, 0.2, 200.0)
    exact  = p_f_exact(params, REL_TOL)
    assert exact == pytest.approx(8.3333e-4, rel=1e-4)
    assert abs(exact - corrected_probs(params).corrected.p_f) < abs(exact - p_f_approx(params))


def test_null_scenario_pd_equals_pf() -> None:
    null = NullScenario(0.0, 1.0, 200.0)
    pf, pd = p_f_exact(null, REL_TOL), p_d_exact(null, REL_TOL)
    assert abs(pd - pf) / pf <= 10.0 * REL_TOL


def test_noiseless_pd_is_kappa() -> None:
    params = ScenarioParams(0.1, 0.0, 10.0)
    same, cross = p_d_exact_parts(params, REL_TOL)
    assert same == pytest.approx(0.01, rel=1e-12)
    assert cross == pytest.approx(0.09, rel=1e-12)
    assert p_d_exact(params, REL_TOL) == pytest.approx(0.1, rel=1e-12)


def test_exact_sums_converge() -> None:
    params = ScenarioParams(0.01, 1.0, 50.0)
    for fn in (p_f_exact, p_d_exact):
        coarse, fine = fn(params, 1e-8), fn(params, 5e-9)
        assert abs(coarse - fine) <= 1e-8 * fine


def test_negbin_window_mass() -> None:
    win = negbin_window(30, 2.0, 1e-14)
    assert win.excluded <= 1e-14
    assert float(win.weights.sum()) == pytest.approx(1.0, abs=1e-12)
    delta = negbin_window(0, 2.0, 1e-14)
    assert delta.k.tolist() == [0.0] and delta.excluded == 0.0


def test_capacity_limits() -> None:
    with pytest.raises(CapacityError):
        negbin_window(10 ** 12, 100.0, 1e-12)
    with pytest.raises(CapacityError):
        p_f_exact(ScenarioParams(0.001, 100.0, 1e6), REL_TOL)


@pytest.mark.parametrize("n_b", [0.2, 1.0, 3.0])
def test_pair_weight_total_is_one(n_b: float) -> None:
    assert pair_weight_total(n_b, 400) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n_b, m, delta", [(1.0, 200.0, 0), (0.5, 50.0, 1), (3.0, 10.0, 0)])
def test_total_count_snr_matches_closed_form(n_b: float, m: float, delta: int) -> None:
    params = ScenarioParams(0.01, n_b, m)
    assert total_count_snr(params, delta) == pytest.approx(count_snr(params, delta), rel=1e-10)


# ─── Labels and matrix elements ───────────────────────────────────────────────

def test_fock_labels_order_and_count() -> None:
    labels = fock_labels(3, 4)
    assert len(labels) == math.comb(4 + 3, 3)
    assert labels[0] == FockLabel((0, 0, 0))
    assert labels[1:4] == [FockLabel((0, 0, 1)), FockLabel((0, 1, 0)), FockLabel((1, 0, 0))]
    assert [lab.total for lab in labels] == sorted(lab.total for lab in labels)


def test_fock_label_access() -> None:
    lab = FockLabel((2, 0, 5))
    assert lab[1] == 2 and lab[3] == 5
    assert lab.shifted(2, 1) == FockLabel((2, 1, 5))
    assert lab.total == 7


def test_rho1_off_diagonal_example(brute_params: ScenarioParams) -> None:
    value = rho1_element(1, 2, FockLabel((1, 0)), FockLabel((0, 1)), brute_params)
    assert value == pytest.approx(0.05 / 1.2 ** 4, rel=1e-14)
    assert rho1_element(1, 2, FockLabel((1, 0)), FockLabel((1, 0)), brute_params) == 0.0


def test_rho1_rejects_bad_modes(brute_params: ScenarioParams) -> None:
    with pytest.raises(DomainError):
        rho1_element(3, 1, FockLabel((1, 0)), FockLabel((0, 1)), brute_params)
    with pytest.raises(DomainError):
        rho1_element(1, 1, FockLabel((1, 0)), FockLabel((0, 1, 0)), brute_params)


def test_rho1_is_hermitian_elementwise(brute_params: ScenarioParams) -> None:
    labels = fock_labels(2, 3)
    for n, n_prime in itertools.product(labels, repeat=2):
        for m, m_prime in itertools.product((1, 2), repeat=2):
            left  = rho1_element(m, m_prime, n, n_prime, brute_params)
            right = rho1_element(m_prime, m, n_prime, n, brute_params)
            assert left == pytest.approx(right.conjugate(), abs=1e-15)


def test_rho1_without_target_is_rho0() -> None:
    null = NullScenario(0.0, 0.2, 3.0)
    for n, n_prime in itertools.product(fock_labels(3, 2), repeat=2):
        for m, m_prime in itertools.product((1, 2, 3), repeat=2):
            assert rho1_element(m, m_prime, n, n_prime, null) == pytest.approx(
                rho0_element(m, m_prime, n, n_prime, null), abs=1e-15)


def test_small_kappa_collapses_to_rho0() -> None:
    params = ScenarioParams(1e-8, 0.2, 2.0)
    rho0   = truncated_rho0(params, 4)
    rho1   = truncated_rho1(params, 4)
    assert rho0.basis == rho1.basis
    assert float(np.max(np.abs(rho1.entries - rho0.entries))) < 1e-6


# ─── Truncated operators ──────────────────────────────────────────────────────

@pytest.mark.parametrize("m, cutoff", [(2, 8), (3, 5)])
def test_truncated_traces(m: int, cutoff: int) -> None:
    params = ScenarioParams(0.1, 0.2, float(m))
    rho0   = truncated_rho0(params, cutoff)
    rho1   = truncated_rho1(params, cutoff)
    assert rho1.dimension == truncated_dimension(m, cutoff)
    assert np.trace(rho0.entries).real == pytest.approx(1.0 - tail_mass(params, cutoff, "rho0"), abs=1e-10)
    assert np.trace(rho1.entries).real == pytest.approx(1.0 - tail_mass(params, cutoff, "rho1"), abs=1e-10)
    assert rho1.hermitian_residual() < 1e-12


def test_tail_mass_rejects_unknown_operator(brute_params: ScenarioParams) -> None:
    with pytest.raises(DomainError):
        tail_mass(brute_params, 4, "sigma")


def test_povm_vectors_orthonormal() -> None:
    rho  = truncated_rho0(ScenarioParams(0.1, 0.2, 3.0), 4)
    psi  = povm_vectors(3, 4, rho.basis)
    gram = psi.T @ psi
    assert psi.shape[1] == len(fock_labels(3, 3))
    assert float(np.max(np.abs(gram - np.eye(gram.shape[0])))) < 1e-12


# ─── Brute force ──────────────────────────────────────────────────────────────

def test_brute_force_noiseless() -> None:
    probs, _ = brute_force(ScenarioParams(0.1, 0.0, 2.0), 4)
    assert probs.p_f == pytest.approx(0.0, abs=1e-15)
    assert probs.p_d == pytest.approx(0.1, rel=1e-12)


def test_brute_force_matches_reduced_sums(brute_params: ScenarioParams) -> None:
    probs, diag = brute_force(brute_params, 8, seed=5)
    assert abs(probs.p_f - p_f_exact(brute_params, REL_TOL)) <= 1e-4 + diag.tail_mass_rho0
    assert abs(probs.p_d - p_d_exact(brute_params, REL_TOL)) <= 1e-4 + diag.tail_mass_rho1


def test_brute_force_diagnostics(brute_params: ScenarioParams) -> None:
    _, diag = brute_force(brute_params, 8, seed=5)
    assert 1.0 - 2.0 * diag.tail_mass_rho1 - 1e-12 <= diag.trace_rho1 <= 1.0 + 1e-12
    assert diag.min_eigenvalue >= -1e-10
    assert diag.projector_residual < 1e-10
    assert diag.orthonormality_residual < 1e-12
    assert diag.hermitian_residual < 1e-12
    assert diag.phase_invariance_residual < 1e-12


def test_paired_phase_rotation_leaves_rho1_unchanged(brute_params: ScenarioParams) -> None:
    rho1 = truncated_rho1(brute_params, 6)
    for phases in ([0.3, 2.1], [math.pi, 0.0], [1.0, -4.0]):
        assert np.max(np.abs(rotate_phases(rho1, np.array(phases)) - rho1.entries)) < 1e-12


def test_return_phases_alone_flip_cross_mode_part(brute_params: ScenarioParams) -> None:
    rho1 = truncated_rho1(brute_params, 8)
    psi  = povm_vectors(2, 8, rho1.basis)
    p_d  = float(np.real(np.sum((rho1.entries @ psi) * psi)))

    flipped   = rotate_phases(rho1, np.array([0.0, math.pi]), counter_rotate_idler=False)
    p_flipped = float(np.real(np.sum((flipped @ psi) * psi)))
    same, cross = p_d_exact_parts(brute_params, REL_TOL)
    assert p_d - p_flipped == pytest.approx(2.0 * cross, abs=1e-3)
    assert p_flipped == pytest.approx(same - cross, abs=1e-3)


def test_brute_force_limits() -> None:
    assert truncated_dimension(4, 10) == 4004
    with pytest.raises(DomainError):
        brute_force(ScenarioParams(0.1, 0.2, 5.0), 4)
    with pytest.raises(DomainError):
        brute_force(ScenarioParams(0.1, 0.2, 2.0), 11)
