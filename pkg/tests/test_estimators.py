import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import GridSearchCV

from pwarx.benchmark import TRUE_THETA_Y, align_modes, generate_example
from pwarx.estimators import PWARegressor, PWARXIdentifier


def test_params_round_trip():
    est = PWARXIdentifier(n_modes=4, mu=0.2)
    assert est.get_params()["n_modes"] == 4
    est.set_params(rho=2.0)
    c = clone(est)
    assert c.get_params() == est.get_params()


def test_unfitted():
    with pytest.raises(NotFittedError):
        PWARegressor().predict(np.zeros((2, 1)))
    with pytest.raises(NotFittedError):
        PWARXIdentifier().simulate(np.zeros(5), [0.0])


def test_pwa_regressor_abs(rng):
    X = rng.uniform(-1, 1, (200, 1))
    y = np.abs(X[:, 0])
    est = PWARegressor(n_modes=2, restarts=5, random_state=0).fit(X, y)
    assert est.score(X, y) > 0.99
    assert est.n_features_in_ == 1
    modes = est.predict_mode(X)
    assert len(set(modes[X[:, 0] > 0.25])) == 1 and len(set(modes[X[:, 0] < -0.25])) == 1
    with pytest.raises(ValueError):
        est.predict(np.zeros((3, 2)))


def test_pwa_regressor_in_grid_search(rng):
    X = rng.uniform(-1, 1, (90, 1))
    y = np.abs(X[:, 0])
    gs = GridSearchCV(PWARegressor(restarts=2), {"n_modes": [1, 2]}, cv=3).fit(X, y)
    assert gs.best_params_["n_modes"] == 2


def test_identifier_fixed_structure():
    data, _, _ = generate_example(1000, 2)
    est = PWARXIdentifier(restarts=5, random_state=1).fit(data.u, data.y)
    p = align_modes(est.theta_y_, TRUE_THETA_Y)
    assert np.abs(est.theta_y_[p] - TRUE_THETA_Y).max() < 0.3
    assert est.predict(data.u, data.y).shape == (999,)
    assert est.simulate(data.u, data.y[:1]).shape == (999,)
    assert 0.0 <= est.score(data.u, data.y) <= 100.0
    assert (est.n_modes_, est.n_a_, est.n_b_) == (3, 1, 1)


def test_identifier_selection_modes():
    data, _, _ = generate_example(400, 3)
    est = PWARXIdentifier(structure="select_modes", K_max=3, restarts=2).fit(data.u, data.y)
    assert est.trace_ is not None and est.n_modes_ == est.trace_.K_star
    est = PWARXIdentifier(structure="select_order", n_a_max=2, n_b_max=2, restarts=1).fit(data.u, data.y)
    assert est.n_a_ == est.trace_.n_a_star


def test_identifier_bad_structure():
    with pytest.raises(ValueError):
        PWARXIdentifier(structure="guess").fit(np.zeros(10), np.arange(10.0))


def test_identifier_length_mismatch():
    with pytest.raises(ValueError):
        PWARXIdentifier().fit(np.zeros(10), np.zeros(9))
