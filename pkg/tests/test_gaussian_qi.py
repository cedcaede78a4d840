import math

import numpy as np
import pytest

from utils import gaussian_qi
from utils.gaussian_qi import (
    OMEGA,
    Z2,
    GaussianScenario,
    _spectrum,
    build_covariances,
    gaussian_qcb_exponent,
    is_bona_fide,
    ln_overlap,
    qcb_minimum,
    solve_ns_for_penalty,
    symplectic_eigenvalues,
    tan_error_ub,
    tan_penalty,
)
from utils.qi_core import DomainError, NoRootError

ONE_DB_OFF = 10.0 ** -0.1

# (n_b, published N_S, penalty at the published N_S, N_S solved for 1 dB off Nair-Gu)
ANCHORS = [
    (100.0, 0.01523, ONE_DB_OFF, 0.01523),
    (1.0,   0.01421, 0.851572,   0.0307190),
]


def _g(p: float, x: float) -> float:
    return 2.0 ** p / ((x + 1.0) ** p - (x - 1.0) ** p)


def _lam(p: float, x: float) -> float:
    return ((x + 1.0) ** p + (x - 1.0) ** p) / ((x + 1.0) ** p - (x - 1.0) ** p)


def _direct_ln_overlap(sc: GaussianScenario, s: float) -> float:
    """Textbook two-mode s-overlap from Williamson forms and a dense determinant."""
    nu_r, nu_i, _, _, sh2, _ = _spectrum(sc)
    ch, sh = math.sqrt(1.0 + sh2), math.sqrt(sh2)
    sym    = np.block([[ch * np.eye(2), sh * Z2], [sh * Z2, ch * np.eye(2)]])
    x_r, x_i = 2.0 * sc.n_b + 1.0, 2.0 * sc.n_s + 1.0

    sigma = np.diag([_lam(s, x_r)] * 2 + [_lam(s, x_i)] * 2) \
        + sym @ np.diag([_lam(1 - s, nu_r)] * 2 + [_lam(1 - s, nu_i)] * 2) @ sym.T
    prefactor = 4.0 * _g(s, x_r) * _g(s, x_i) * _g(1 - s, nu_r) * _g(1 - s, nu_i)
    return math.log(prefactor) - 0.5 * math.log(np.linalg.det(sigma))


# ─── Covariances ──────────────────────────────────────────────────────────────

def test_covariances_bona_fide() -> None:
    pair = build_covariances(GaussianScenario(0.001, 100.0, 0.01523))
    for v in (pair.v0, pair.v1):
        assert np.allclose(v, v.T)
        assert is_bona_fide(v)


def test_covariances_limits() -> None:
    faint = build_covariances(GaussianScenario(1e-15, 2.0, 0.5))
    assert np.allclose(faint.v1, faint.v0, atol=1e-6)

    dark = build_covariances(GaussianScenario(0.1, 2.0, 1e-12)).v1
    assert np.allclose(dark[:2, :2], 5.0 * np.eye(2), atol=1e-9)
    assert np.allclose(dark[:2, 2:], 0.0, atol=1e-6)


def test_symplectic_eigenvalues() -> None:
    sc   = GaussianScenario(0.3, 1.0, 0.1)
    pair = build_covariances(sc)
    assert symplectic_eigenvalues(pair.v0) == pytest.approx(sorted([3.0, 1.2]), rel=1e-12)
    nu_r, nu_i, *_ = _spectrum(sc)
    assert symplectic_eigenvalues(pair.v1) == pytest.approx(sorted([nu_r, nu_i]), rel=1e-9)


def test_sub_vacuum_is_not_bona_fide() -> None:
    v = 0.5 * np.eye(4)
    assert symplectic_eigenvalues(v) == pytest.approx([0.5, 0.5])
    assert not is_bona_fide(v)
    assert OMEGA.shape == (4, 4)


def test_williamson_form_reproduces_v1() -> None:
    sc = GaussianScenario(0.3, 1.0, 0.1)
    nu_r, nu_i, _, _, sh2, chsh = _spectrum(sc)
    ch, sh = math.sqrt(1.0 + sh2), math.sqrt(sh2)
    assert ch * sh == pytest.approx(chsh, rel=1e-12)
    sym = np.block([[ch * np.eye(2), sh * Z2], [sh * Z2, ch * np.eye(2)]])
    assert np.allclose(sym @ np.diag([nu_r, nu_r, nu_i, nu_i]) @ sym.T, build_covariances(sc).v1, atol=1e-12)


# ─── Overlap ──────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("kappa, n_b, n_s", [(0.3, 1.0, 0.1), (0.05, 4.0, 0.5)])
def test_ln_overlap_matches_dense_formula(kappa: float, n_b: float, n_s: float, s: float) -> None:
    sc = GaussianScenario(kappa, n_b, n_s)
    assert ln_overlap(sc, s) == pytest.approx(_direct_ln_overlap(sc, s), rel=1e-8)


def test_ln_overlap_in_unit_interval() -> None:
    sc = GaussianScenario(0.001, 100.0, 0.01523)
    for s in np.linspace(0.05, 0.95, 19):
        value = ln_overlap(sc, float(s))
        assert value <= 0.0 and math.isfinite(value)


def test_qcb_minimum_beats_grid() -> None:
    sc         = GaussianScenario(0.001, 1.0, 0.01421)
    s_star, lq = qcb_minimum(sc)
    assert 0.0 < s_star < 1.0
    assert lq <= ln_overlap(sc, 0.5)
    for s in np.linspace(0.025, 0.975, 20):
        assert lq <= ln_overlap(sc, float(s)) + 1e-15


def test_exponent_vanishes_without_target() -> None:
    assert gaussian_qcb_exponent(GaussianScenario(1e-12, 1.0, 0.01)) < 1e-10


def test_exponent_increases_with_kappa() -> None:
    values = [gaussian_qcb_exponent(GaussianScenario(k, 10.0, 0.01)) for k in (1e-4, 1e-3, 1e-2)]
    assert all(a < b for a, b in zip(values, values[1:]))


# ─── Penalty and solver ───────────────────────────────────────────────────────

@pytest.mark.parametrize("n_b, n_s, penalty, _", ANCHORS)
def test_tan_penalty_anchors(n_b: float, n_s: float, penalty: float, _: float) -> None:
    assert tan_penalty(GaussianScenario(0.001, n_b, n_s)) == pytest.approx(penalty, rel=0.005)


def test_published_low_noise_brightness_is_short_of_one_db() -> None:
    assert tan_penalty(GaussianScenario(0.001, 1.0, 0.01421)) > ONE_DB_OFF + 0.05


@pytest.mark.parametrize("n_b", [1.0, 100.0])
def test_tan_penalty_faint_limit(n_b: float) -> None:
    assert tan_penalty(GaussianScenario(0.001, n_b, 1e-6)) == pytest.approx(1.0, rel=0.01)


@pytest.mark.parametrize("n_b", [1.0, 100.0])
def test_tan_penalty_falls_with_brightness(n_b: float) -> None:
    bright = tan_penalty(GaussianScenario(0.001, n_b, 0.1))
    faint  = tan_penalty(GaussianScenario(0.001, n_b, 0.001))
    assert 0.0 < bright < faint < 1.0


@pytest.mark.parametrize("n_b, _, __, solved", ANCHORS)
def test_solve_ns_anchors(n_b: float, _: float, __: float, solved: float) -> None:
    n_s = solve_ns_for_penalty(0.001, n_b, ONE_DB_OFF)
    assert n_s == pytest.approx(solved, rel=0.005)
    assert tan_penalty(GaussianScenario(0.001, n_b, n_s)) == pytest.approx(ONE_DB_OFF, rel=1e-6)


def test_solve_ns_rejects_a_stalled_bisection(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(gaussian_qi, "bisect", lambda f, lo, hi, **kwargs: lo)
    with pytest.raises(NoRootError):
        solve_ns_for_penalty(0.001, 100.0, ONE_DB_OFF)


def test_solve_ns_edges() -> None:
    assert solve_ns_for_penalty(0.001, 100.0, 0.999) < 1e-4
    with pytest.raises(NoRootError):
        solve_ns_for_penalty(0.001, 100.0, 0.01)
    with pytest.raises(DomainError):
        solve_ns_for_penalty(0.001, 100.0, 1.0)


def test_tan_error_ub() -> None:
    sc       = GaussianScenario(0.001, 100.0, 0.01523)
    exponent = -(tan_error_ub(sc, 1e6).ln_p + math.log(2.0))
    assert exponent == pytest.approx(tan_penalty(sc) * 0.001 * 1e6 / 101.0, rel=1e-12)
    assert exponent == pytest.approx(ONE_DB_OFF * 0.001 * 1e6 / 101.0, rel=0.005)
    assert tan_error_ub(sc, 0.0).ln_p == pytest.approx(-math.log(2.0))
    with pytest.raises(DomainError):
        tan_error_ub(sc, -1.0)


def test_scenario_rejects_invalid() -> None:
    with pytest.raises(DomainError):
        GaussianScenario(0.001, 1.0, 0.0)
    with pytest.raises(DomainError):
        GaussianScenario(1.0, 1.0, 0.1)
