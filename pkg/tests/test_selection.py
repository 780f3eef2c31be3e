import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwarx.benchmark import generate_example
from pwarx.core import Dataset
from pwarx.descent import HyperParams, LocalRegularizer
from pwarx.selection import (
    count_active_orders,
    detect_empty_clusters,
    detect_redundant,
    select_num_modes,
    select_order,
)

K_SELECT = HyperParams(restarts=2, K_max=4, reg=LocalRegularizer("ridge_linf", 0.1, 0.9))
ORDER_SELECT = HyperParams(restarts=2, n_a_max=3, n_b_max=3, reg=LocalRegularizer("elastic_net", 0.1, 0.9))


# detectors

def test_redundant_examples():
    theta = np.array([[0.005, -0.002, 0.009], [1.0, 0.0, 0.0]])
    assert detect_redundant(theta, 0.01) == {0}
    assert detect_redundant(np.array([[0.5, 0.0], [0.0, -0.2]]), 0.01) == set()
    assert detect_redundant(np.array([[0.01, -0.01]]), 0.01) == {0}
    with pytest.raises(ValueError):
        detect_redundant(theta, 0.0)


def test_empty_cluster_examples():
    modes = np.concatenate([np.zeros(20, int), np.ones(1980, int)])
    assert detect_empty_clusters(modes, 2, 2000) == {0}
    modes = np.concatenate([np.zeros(21, int), np.ones(1979, int)])
    assert detect_empty_clusters(modes, 2, 2000) == set()
    assert detect_empty_clusters(np.repeat([0, 1, 2], 100), 3, 300) == set()
    assert detect_empty_clusters(np.zeros(10, int), 3, 10) == {1, 2}


@given(
    st.lists(st.lists(st.floats(-0.05, 0.05), min_size=3, max_size=3), min_size=1, max_size=8),
    st.floats(1e-4, 0.05),
)
@settings(max_examples=100, deadline=None)
def test_redundant_brute_force(rows, delta):
    theta = np.array(rows)
    expected = {k for k, row in enumerate(rows) if max(abs(v) for v in row) <= delta}
    assert detect_redundant(theta, delta) == expected


@given(st.lists(st.integers(0, 5), min_size=1, max_size=300), st.integers(1, 400))
@settings(max_examples=100, deadline=None)
def test_empty_brute_force(labels, T):
    expected = {k for k in range(6) if sum(1 for s in labels if s == k) <= 0.01 * T}
    assert detect_empty_clusters(labels, 6, T) == expected


def test_count_active_orders_examples():
    theta = np.array([[0.5, 0.005, -1.0, 0.002, 1.5]])
    assert count_active_orders(theta, 2, 2, 0.01) == (1, 1)
    theta = np.array([[0.5, 0.3, 1.0, 0.0], [0.5, 0.0, 1.0, 0.0]])
    assert count_active_orders(theta, 2, 1, 0.01) == (2, 1)
    assert count_active_orders(np.full((2, 5), 1e-4), 2, 2, 0.01) == (1, 1)
    # the affine term is never counted
    assert count_active_orders(np.array([[0.0, 0.0, 0.0, 0.0, 9.0]]), 2, 2, 0.01) == (1, 1)
    with pytest.raises(ValueError):
        count_active_orders(np.zeros((1, 4)), 2, 2, 0.01)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 5), st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_count_active_orders_permutation_invariant(n_a, n_b, K, seed):
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal((K, n_a + n_b + 1)) * rng.integers(0, 2, (K, n_a + n_b + 1))
    a = count_active_orders(theta, n_a, n_b, 0.01)
    assert a == count_active_orders(theta[rng.permutation(K)], n_a, n_b, 0.01)
    assert 1 <= a[0] <= n_a and 1 <= a[1] <= n_b


# mode-count selection

def test_k_max_one_terminates():
    data, _, _ = generate_example(200, 1)
    K, final, trace = select_num_modes(data, 1, 1, replace(K_SELECT, K_max=1))
    assert K == 1 and final.model.K == 1
    assert len(trace.steps) == 1


def test_single_affine_model_selects_one_mode():
    rng = np.random.default_rng(0)
    u = rng.uniform(-2, 2, 400)
    y = np.zeros(400)
    for t in range(1, 400):
        y[t] = 0.5 * y[t - 1] - 0.8 * u[t - 1] + 0.3
    # default restart count; with very few restarts an arbitrary split of the
    # single regime can survive as a fixed point of the alternation
    h = HyperParams(K_max=4, reg=LocalRegularizer("ridge_linf", 0.1, 0.9))
    K, final, trace = select_num_modes(Dataset(u=u, y=y), 1, 1, h)
    assert K == 1
    np.testing.assert_allclose(final.model.theta_y[0], [0.5, -0.8, 0.3], atol=1e-3)


def test_k_trace_monotone_and_final_clean():
    data, _, _ = generate_example(600, 2)
    K, final, trace = select_num_modes(data, 1, 1, K_SELECT)
    Ks = [K_SELECT.K_max] + [s.K for s in trace.steps]
    assert all(a >= b for a, b in zip(Ks, Ks[1:]))
    assert trace.K_star == K >= 1
    assert len(trace.steps) <= K_SELECT.K_max
    assert final.model.K == K
    red = detect_redundant(final.model.theta_y, K_SELECT.delta)
    empty = detect_empty_clusters(final.modes, K, data.T)
    assert not (red & empty)
    # the final refit drops the shrinkage term
    recs = trace.to_records()
    assert recs[-1]["K"] == K and set(recs[0]) >= {"iteration", "K", "objective", "redundant", "empty"}


def test_k_selection_requires_linf():
    data, _, _ = generate_example(100, 1)
    with pytest.raises(ValueError):
        select_num_modes(data, 1, 1, ORDER_SELECT)


def test_k_selection_clamps_to_one():
    # a constant zero output makes every mode collapse
    data = Dataset(u=np.linspace(-1, 1, 200), y=np.zeros(200))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        K, final, trace = select_num_modes(data, 1, 1, K_SELECT)
    assert K == 1
    assert trace.degenerate


# order selection

def test_order_max_one_terminates():
    data, _, _ = generate_example(200, 1)
    h = replace(ORDER_SELECT, n_a_max=1, n_b_max=1)
    n_a, n_b, final, trace = select_order(data, 3, h)
    assert (n_a, n_b) == (1, 1) and len(trace.steps) == 1
    assert final.model.n_a == 1 and final.model.n_b == 1


def test_order_trace_monotone():
    data, _, _ = generate_example(600, 3)
    n_a, n_b, final, trace = select_order(data, 3, ORDER_SELECT)
    orders = [(ORDER_SELECT.n_a_max, ORDER_SELECT.n_b_max)] + [(s.n_a, s.n_b) for s in trace.steps]
    for (a0, b0), (a1, b1) in zip(orders, orders[1:]):
        assert a1 <= a0 and b1 <= b0
    assert (trace.n_a_star, trace.n_b_star) == (n_a, n_b)
    assert n_a >= 1 and n_b >= 1
    assert len(trace.steps) <= ORDER_SELECT.n_a_max + ORDER_SELECT.n_b_max
    assert final.model.theta_y.shape == (3, n_a + n_b + 1)


def test_order_selection_single_mode_noiseless():
    rng = np.random.default_rng(1)
    u = rng.uniform(-2, 2, 300)
    y = np.zeros(300)
    for t in range(1, 300):
        y[t] = 0.5 * y[t - 1] + u[t - 1]
    n_a, n_b, final, _ = select_order(Dataset(u=u, y=y), 1, ORDER_SELECT)
    assert (n_a, n_b) == (1, 1)


def test_order_selection_requires_elastic_net():
    data, _, _ = generate_example(100, 1)
    with pytest.raises(ValueError):
        select_order(data, 3, K_SELECT)
