import numpy as np
import pytest

from pwarx.core import PwarxModel, add_affine, infer_modes
from pwarx.exceptions import DimensionMismatch
from pwarx.prox import SolverSettings
from pwarx.separator import SeparatorProblem, fit_separator, hinge_loss, separator_objective


def random_instance(rng, T=None, K=None, d=None, lam=None):
    T = T or int(rng.integers(5, 60))
    K = K or int(rng.integers(2, 5))
    d = d or int(rng.integers(1, 4))
    Xt = add_affine(rng.standard_normal((T, d)))
    labels = rng.integers(0, K, T)
    return SeparatorProblem(Xt, labels, K, lam or float(rng.uniform(1e-3, 1.0)))


def fd_gradient(f, theta, h=1e-6):
    g = np.zeros_like(theta)
    for idx in np.ndindex(theta.shape):
        e = np.zeros_like(theta)
        e[idx] = h
        g[idx] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def test_single_mode_value():
    p = SeparatorProblem(add_affine(np.ones((4, 2))), np.zeros(4, int), 1, 0.5)
    theta = np.array([[1.0, -2.0, 3.0]])
    value, _ = separator_objective(theta, p)
    assert value == pytest.approx(0.5 * 14.0)
    np.testing.assert_array_equal(fit_separator(p), np.zeros((1, 3)))


def test_zero_parameters_value(rng):
    p = random_instance(rng, T=17, K=4)
    value, _ = separator_objective(np.zeros((4, p.dim)), p)
    assert value == pytest.approx(17 * 3)


def test_dimension_mismatch(rng):
    p = random_instance(rng, K=3, d=2)
    with pytest.raises(DimensionMismatch):
        separator_objective(np.zeros((2, 3)), p)
    with pytest.raises(DimensionMismatch):
        SeparatorProblem(np.ones((3, 2)), [0, 1], 2, 1.0)


@pytest.mark.parametrize("seed", range(25))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    p = random_instance(rng)
    theta = rng.standard_normal((p.K, p.dim))
    _, g = separator_objective(theta, p)
    g_fd = fd_gradient(lambda t: separator_objective(t, p)[0], theta)
    assert np.linalg.norm(g - g_fd) <= 1e-5 * max(np.linalg.norm(g_fd), 1e-12)


def test_separable_one_dimensional():
    x = np.concatenate([np.linspace(-3, -1.1, 20), np.linspace(1.1, 3, 20)])
    labels = np.repeat([0, 1], 20)
    p = SeparatorProblem(add_affine(x[:, None]), labels, 2, 1e-6)
    theta = fit_separator(p)
    model = PwarxModel(1, 0, np.zeros((2, 2)), theta)
    np.testing.assert_array_equal(infer_modes(model, x[:, None]), labels)


def test_duplicated_samples(rng):
    p = random_instance(rng, K=3, d=2, lam=0.1)
    p2 = SeparatorProblem(np.vstack([p.Xt, p.Xt]), np.concatenate([p.labels, p.labels]), 3, 0.2)
    np.testing.assert_allclose(fit_separator(p), fit_separator(p2), atol=1e-7)


@pytest.mark.parametrize("seed", range(5))
def test_start_point_does_not_matter(seed):
    rng = np.random.default_rng(seed)
    p = random_instance(rng, lam=0.05)
    a = fit_separator(p)
    b = fit_separator(p, theta0=5 * rng.standard_normal((p.K, p.dim)))
    np.testing.assert_allclose(a, b, atol=1e-6)
    # stationarity
    _, g = separator_objective(a, p)
    assert np.abs(g).max() <= 1e-5


@pytest.mark.parametrize("seed", range(5))
def test_no_worse_than_zero_separator(seed):
    rng = np.random.default_rng(seed)
    K, d = 3, 2
    centers = 4 * rng.standard_normal((K, d))
    labels = np.repeat(np.arange(K), 15)
    X = centers[labels] + 0.1 * rng.standard_normal((labels.size, d))
    p = SeparatorProblem(add_affine(X), labels, K, 1e-3)
    theta = fit_separator(p)
    err = np.mean(np.argmax(p.Xt @ theta.T, axis=1) != labels)
    err0 = np.mean(np.argmax(p.Xt @ np.zeros((K, d + 1)).T, axis=1) != labels)
    assert err <= err0


def test_hinge_loss_matches_objective(rng):
    p = random_instance(rng)
    theta = rng.standard_normal((p.K, p.dim))
    value, _ = separator_objective(theta, p)
    assert value == pytest.approx(hinge_loss(theta, p.Xt, p.labels).sum() + p.lam * np.sum(theta ** 2))


def test_tolerance_respected(rng):
    p = random_instance(rng, T=80, K=4, d=3, lam=1e-3)
    loose = fit_separator(p, SolverSettings(tol=1e-3))
    tight = fit_separator(p)
    assert separator_objective(tight, p)[0] <= separator_objective(loose, p)[0] + 1e-12
