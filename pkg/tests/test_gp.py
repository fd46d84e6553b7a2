import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from chipletdse.optimizer.gp import GpModel, expected_improvement, gp_expected_improvement


def test_ei_zero_sigma():
    assert expected_improvement(1.0, 0.0, 1.0) == 0.0
    assert expected_improvement(0.5, 0.0, 1.0) == 0.5


def test_ei_closed_form_and_monte_carlo():
    ei = expected_improvement(-1.0, 1.0, 0.0)
    assert ei == pytest.approx(norm.cdf(1) + norm.pdf(1))
    assert ei == pytest.approx(1.0833, abs=1e-4)
    rng = np.random.default_rng(0)
    samples = rng.normal(-1.0, 1.0, 2_000_000)
    assert np.maximum(0.0 - samples, 0).mean() == pytest.approx(ei, rel=5e-3)


@given(st.floats(-1e3, 1e3), st.floats(0, 1e3), st.floats(-1e3, 1e3))
def test_ei_non_negative(mu, sigma, best):
    assert expected_improvement(mu, sigma, best) >= 0


def test_gp_interpolates_and_reverts_to_prior():
    x = np.array([[0.0], [0.3], [0.6], [1.0]])
    y = np.array([1.0, -0.5, 0.2, 2.0])
    gp = GpModel().fit(x, y)
    mu, sd = gp.predict(x)
    assert mu == pytest.approx(y, abs=1e-3)
    assert np.all(sd < 1e-2)
    far = np.array([[1e4]])
    mu_f, sd_f = gp.predict(far)
    assert mu_f[0] == pytest.approx(y.mean(), abs=1e-9)
    assert sd_f[0] ** 2 == pytest.approx(gp.prior_variance, rel=1e-9)


def test_gp_hyperparameters_by_likelihood():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, (12, 2))
    y = np.sin(3 * x[:, 0]) + x[:, 1]
    gp = GpModel().fit(x, y)
    for ls in gp.length_scales:
        for sv in gp.signal_variances:
            other = GpModel().fit(x, y, length_scale=ls, signal_var=sv)
            assert other.log_marginal_likelihood <= gp.log_marginal_likelihood + 1e-9


def test_gp_ei_prefers_unexplored_low_region():
    x = np.array([[0.0], [0.5], [1.0]])
    y = np.array([3.0, 2.0, 1.0])
    gp = GpModel().fit(x, y)
    ei = gp_expected_improvement(gp, np.array([[0.25], [1.2]]), float(y.min()))
    assert ei[1] > ei[0]


def test_constant_targets():
    gp = GpModel().fit(np.array([[0.0], [1.0]]), np.array([2.0, 2.0]))
    mu, _ = gp.predict(np.array([[0.5]]))
    assert mu[0] == pytest.approx(2.0)
