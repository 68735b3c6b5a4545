import io
import json
import math

import numpy as np
import pytest

from oatsqueeze import analytic
from oatsqueeze.core import DomainError, NumericalError, ValidationError
from oatsqueeze.inhomogeneous import (
    ALPHA_CONCENTRATED,
    CouplingMatrix,
    DisorderSpec,
    mc_summary_json,
    mc_to_csv,
    mean_xi2_analytic,
    monte_carlo_mean_xi2,
    quadrature_components,
    sample_couplings,
    suppression_report,
    xi2_theta_couplings,
)
from oatsqueeze.oracle import evolve_variable_coupling


def uniform(n, theta0):
    mat = np.full((n, n), theta0)
    np.fill_diagonal(mat, 0.0)
    return mat


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

def test_coupling_matrix_validation():
    CouplingMatrix(uniform(4, 0.1))
    bad = uniform(4, 0.1)
    bad[0, 1] = 0.2
    with pytest.raises(ValidationError):
        CouplingMatrix(bad)
    diag = uniform(4, 0.1)
    diag[2, 2] = 1e-300
    with pytest.raises(ValidationError):
        CouplingMatrix(diag)


def test_disorder_spec_alpha_kappa_relation():
    spec = DisorderSpec(theta0=0.05, kappa=0.1)
    assert spec.alpha == pytest.approx(1.0 / (0.1 ** 2 * 0.05 ** 2), rel=1e-14)
    both = DisorderSpec(theta0=0.05, kappa=0.1, alpha=spec.alpha)
    assert both.alpha == spec.alpha
    with pytest.raises(ValidationError):
        DisorderSpec(theta0=0.05, kappa=0.1, alpha=2.0 * spec.alpha)
    with pytest.raises(ValidationError):
        DisorderSpec(theta0=0.05)
    with pytest.raises(ValidationError):
        DisorderSpec(theta0=0.05, kappa=0.1, n_samples=0)
    assert DisorderSpec(theta0=0.05, kappa=0.0).alpha == ALPHA_CONCENTRATED


def test_sample_std_definition():
    spec = DisorderSpec(theta0=0.05, alpha=200.0)
    assert spec.sample_std == pytest.approx(1.0 / math.sqrt(400.0), rel=1e-14)
    assert DisorderSpec(theta0=0.05, kappa=0.0).sample_std == 0.0


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_concentrated_sampling_is_exact():
    spec = DisorderSpec(theta0=0.07, kappa=0.0, n_samples=3)
    mat = sample_couplings(spec, 5, 0).theta
    off = ~np.eye(5, dtype=bool)
    assert np.all(mat[off] == 0.07)


def test_sampling_determinism():
    spec = DisorderSpec(theta0=0.05, kappa=0.1, n_samples=10, master_seed=3)
    a = sample_couplings(spec, 5, 2).theta
    b = sample_couplings(spec, 5, 2).theta
    assert np.array_equal(a, b)
    c = sample_couplings(spec, 5, 3).theta
    assert not np.array_equal(a, c)


def test_sampling_statistics():
    spec = DisorderSpec(theta0=0.05, kappa=0.1, n_samples=1, master_seed=3)
    draws = np.array([sample_couplings(spec, 4, i).theta[0, 1] for i in range(100000)])
    bound = 4.0 / math.sqrt(spec.alpha * len(draws))
    assert abs(draws.mean() - 0.05) <= bound
    assert draws.std() == pytest.approx(spec.sample_std, rel=0.02)


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------

def test_unsqueezed_baseline():
    for p in (1.0, 0.5):
        got = xi2_theta_couplings(np.zeros((6, 6)), p, 0.9)
        assert got == pytest.approx(1.0 / p, rel=1e-14)


def test_uniform_special_case_collapses_to_closed_form():
    worst = 0.0
    for n in (3, 8, 12):
        for p in (0.5, 1.0):
            for theta0 in (0.01, 0.05):
                for theta in np.linspace(0.0, math.pi, 16, endpoint=False):
                    a = xi2_theta_couplings(uniform(n, theta0), p, theta)
                    b = analytic.xi2_theta_finite_polarization(n, p, theta0, theta)
                    worst = max(worst, abs(a - b) / abs(b))
    assert worst <= 1e-12


def test_random_couplings_match_oracle():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(25):
        n = int(rng.integers(2, 7))
        theta = rng.normal(0.05, 0.1, size=(n, n))
        theta = (theta + theta.T) / 2.0
        np.fill_diagonal(theta, 0.0)
        pols = rng.uniform(0.3, 1.0, size=n)
        mom = evolve_variable_coupling(theta, pols)
        for th in rng.uniform(0.0, math.pi, 4):
            got = xi2_theta_couplings(theta, pols, th)
            worst = max(worst, abs(got - mom.xi2(th)) / abs(mom.xi2(th)))
    assert worst <= 1e-10


def test_degenerate_denominator_raises():
    # cos(4*theta0) = 0 kills every polarization product
    with pytest.raises(DomainError):
        xi2_theta_couplings(uniform(4, math.pi / 8.0), 1.0, 0.3)


def test_pols_validation():
    with pytest.raises(ValidationError):
        xi2_theta_couplings(uniform(4, 0.05), 0.0, 0.3)
    with pytest.raises(ValidationError):
        xi2_theta_couplings(uniform(4, 0.05), [0.5, 0.5], 0.3)


def test_components_are_per_spin_normalized():
    a, b = quadrature_components(uniform(5, 0.0), 0.5, 1.0)
    assert a == pytest.approx(1.0, rel=1e-14)
    assert b == pytest.approx(0.5, rel=1e-14)


# ---------------------------------------------------------------------------
# analytic disorder average
# ---------------------------------------------------------------------------

def test_mean_without_suppression_equals_uniform_closed_form():
    spec = DisorderSpec(theta0=0.05, kappa=0.1)
    for theta in (0.0, 0.4, 1.2, 2.2):
        got = mean_xi2_analytic(spec, 20, theta, suppression=False)
        want = analytic.xi2_theta_finite_polarization(20, 1.0, 0.05, theta)
        assert got == pytest.approx(want, rel=1e-12)


def test_mean_structure_at_zero_angles():
    # at theta = 0 or theta0 = 0 the correction terms vanish and only the
    # averaged polarization denominator remains
    spec = DisorderSpec(theta0=0.05, kappa=0.1)
    _, single, _ = suppression_report(spec, 20)
    c4m1 = math.cos(4 * 0.05) ** 19
    assert mean_xi2_analytic(spec, 20, 0.0) == pytest.approx(1.0 / (c4m1 * single), rel=1e-12)
    spec0 = DisorderSpec(theta0=0.0, alpha=1e4)
    _, single0, _ = suppression_report(spec0, 20)
    assert mean_xi2_analytic(spec0, 20, 0.7) == pytest.approx(1.0 / single0, rel=1e-12)


def test_mc_within_three_standard_errors():
    spec = DisorderSpec(theta0=0.05, kappa=0.1, n_samples=4000, master_seed=17)
    theta = 8 * 0.05 + math.pi / 2.0
    mc = monte_carlo_mean_xi2(spec, 20, 1.0, theta)
    an = mean_xi2_analytic(spec, 20, theta)
    assert abs(mc.mean - an) <= 3.0 * mc.stderr


# ---------------------------------------------------------------------------
# Monte Carlo estimator mechanics
# ---------------------------------------------------------------------------

def test_single_sample_mean_is_that_sample():
    spec = DisorderSpec(theta0=0.05, kappa=0.1, n_samples=1, master_seed=5)
    mc = monte_carlo_mean_xi2(spec, 8, 1.0, 0.7)
    direct = xi2_theta_couplings(sample_couplings(spec, 8, 0), 1.0, 0.7)
    assert mc.mean == pytest.approx(direct, rel=1e-14)
    assert mc.mean_of_ratios == pytest.approx(direct, rel=1e-14)
    assert mc.stderr == 0.0


def test_concentrated_disorder_mean_exact_zero_stderr():
    spec = DisorderSpec(theta0=0.05, kappa=0.0, n_samples=50, master_seed=5)
    mc = monte_carlo_mean_xi2(spec, 10, 1.0, 0.9)
    want = analytic.xi2_theta_finite_polarization(10, 1.0, 0.05, 0.9)
    assert mc.mean == pytest.approx(want, rel=1e-12)
    assert mc.stderr == 0.0
    assert mean_xi2_analytic(spec, 10, 0.9) == pytest.approx(want, rel=1e-12)


def test_mc_bit_reproducible():
    spec = DisorderSpec(theta0=0.05, kappa=0.2, n_samples=300, master_seed=21)
    a = monte_carlo_mean_xi2(spec, 12, 1.0, 1.0)
    b = monte_carlo_mean_xi2(spec, 12, 1.0, 1.0)
    assert (a.mean, a.stderr, a.mean_of_ratios) == (b.mean, b.stderr, b.mean_of_ratios)


def test_mc_rejection_error():
    # every sample degenerate: cos(4*theta0) = 0 at zero disorder
    spec = DisorderSpec(theta0=math.pi / 8.0, kappa=0.0, n_samples=10)
    with pytest.raises(NumericalError, match="degenerate"):
        monte_carlo_mean_xi2(spec, 6, 1.0, 0.4)


# ---------------------------------------------------------------------------
# suppression factors and the insensitivity claim
# ---------------------------------------------------------------------------

def test_suppression_no_disorder():
    spec = DisorderSpec(theta0=0.05, kappa=0.0)
    assert suppression_report(spec, 50) == (1.0, 1.0, True)


def test_suppression_inverted_exponent():
    n = 24
    spec = DisorderSpec(theta0=0.05, alpha=8.0 * (n - 2) / math.log(100.0))
    pair, _, _ = suppression_report(spec, n)
    assert pair == pytest.approx(0.01, rel=1e-12)


def test_suppression_negligible_at_optimal_angle_scale():
    n = 1000
    spec = DisorderSpec(theta0=n ** (-2.0 / 3.0), kappa=0.1)
    pair, single, negligible = suppression_report(spec, n)
    assert negligible
    assert pair == pytest.approx(math.exp(-8.0 * (n - 2) * 0.01 * n ** (-4.0 / 3.0)), rel=1e-12)


def test_insensitivity_to_moderate_disorder():
    # at the squeezing-optimal angle scale, 20% coupling disorder moves the
    # averaged quadrature by under 5%
    for n in (100, 1000):
        theta0 = n ** (-2.0 / 3.0)
        spec = DisorderSpec(theta0=theta0, kappa=0.2)
        spec0 = DisorderSpec(theta0=theta0, kappa=0.0)
        for theta in np.linspace(0.05, math.pi - 0.05, 9):
            with_dis = mean_xi2_analytic(spec, n, theta)
            without = mean_xi2_analytic(spec0, n, theta)
            assert abs(with_dis - without) / abs(without) <= 0.05


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def test_mc_csv_and_json_exports():
    spec = DisorderSpec(theta0=0.05, kappa=0.1, n_samples=20, master_seed=2)
    mc = monte_carlo_mean_xi2(spec, 6, 1.0, 0.8, keep_values=True)
    buf = io.StringIO()
    mc_to_csv(mc, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "sample_index,xi2"
    assert len(lines) == 1 + 20 + 1  # header + samples + summary row
    assert lines[-1].startswith("# summary mean=")
    payload = json.loads(mc_summary_json(mc, extra={"analytic_mean": 1.0}))
    assert payload["n_samples"] == 20
    assert payload["seed"] == 2
    assert "analytic_mean" in payload
