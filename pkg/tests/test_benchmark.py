import csv
from dataclasses import replace

import numpy as np
import pytest

from pwarx.benchmark import (
    GUARD_1,
    GUARD_2,
    TRUE_THETA_Y,
    MonteCarloReport,
    RunRecord,
    align_modes,
    embed_parameters,
    generate_example,
    normalize_boundaries,
    run_montecarlo,
    true_mode,
    true_model,
)
from pwarx.core import build_regressors, infer_modes, snr_db
from pwarx.descent import HyperParams, LocalRegularizer, fit_pwarx, pwarx_objective
from pwarx.exceptions import ZeroNormalizer


def test_true_mode_examples():
    assert true_mode([0, 0, 1]) == 1
    assert true_mode([-3, 0, 1]) == 0
    assert true_mode([2, 0, 1]) == 2


def test_constants_read_only():
    with pytest.raises(ValueError):
        TRUE_THETA_Y[0, 0] = 1.0


def test_true_model_matches_guards():
    data, modes, _ = generate_example(2000, 9)
    rs = build_regressors(data, 1, 1)
    np.testing.assert_array_equal(infer_modes(true_model(), rs.X), modes)


def test_generate_deterministic():
    a, ma, ea = generate_example(300, 4)
    b, mb, eb = generate_example(300, 4)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(ma, mb)
    np.testing.assert_array_equal(ea, eb)
    c, _, _ = generate_example(300, 5)
    assert not np.array_equal(a.u, c.u)


def test_generate_layout():
    data, modes, e = generate_example(50, 1)
    assert data.T == 50 and modes.size == 49 and e.size == 50
    assert data.y[0] == 0.0 and e[0] == 0.0
    assert np.all(np.abs(data.u) <= 4) and np.all(np.abs(e) <= 0.8)
    for t in range(1, 50):
        xt = np.array([data.y[t - 1], data.u[t - 1], 1.0])
        assert data.y[t] == pytest.approx(TRUE_THETA_Y[modes[t - 1]] @ xt + e[t])


def test_generate_frozen_values():
    # bit-level regression guard for the documented seeding (PCG64, u first, then e)
    data, _, e = generate_example(3, 2024)
    rng = np.random.Generator(np.random.PCG64(2024))
    u = rng.uniform(-4, 4, 3)
    np.testing.assert_array_equal(data.u, u)
    e_ref = rng.uniform(-0.8, 0.8, 3)
    np.testing.assert_array_equal(e[1:], e_ref[1:])


def test_noise_variance():
    _, _, e = generate_example(2000, 0)
    assert abs(np.var(e[1:]) / (0.64 / 3) - 1) <= 0.05


@pytest.mark.parametrize("seed", range(3))
def test_snr_near_sixteen_db(seed):
    data, _, e = generate_example(2000, seed)
    assert abs(snr_db(data.y, e) - 16.0) <= 1.5


def test_noiseless_identifiability():
    data, modes, _ = generate_example(2000, 1, noise=0.0)
    rs = build_regressors(data, 1, 1)
    res = fit_pwarx(rs, 3, modes, HyperParams(reg=LocalRegularizer("ridge", 1e-9, 0.0)))
    np.testing.assert_allclose(res.model.theta_y, TRUE_THETA_Y, atol=1e-4)


def test_normalize_boundaries_examples():
    tx = np.array([[0.0, 0.0, 0.0], [4.0, -1.0, 10.0], [-5.0, -1.0, 6.0], [8.0, -2.0, 20.0]])
    out = normalize_boundaries(tx, [(1, 0), (2, 0), (3, 0)])
    np.testing.assert_allclose(out, [[4, -1, 10], [5, 1, -6], [4, -1, 10]])


def test_normalize_true_partition():
    m = true_model()
    out = normalize_boundaries(m.theta_x, [(1, 0), (2, 1)])
    np.testing.assert_allclose(out, np.vstack([GUARD_1, GUARD_2]))


def test_normalize_errors():
    with pytest.raises(ZeroNormalizer):
        normalize_boundaries(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 1.0]]), [(1, 0)])
    with pytest.raises(ValueError):
        normalize_boundaries(np.zeros((1, 3)), [])


def test_align_modes(rng):
    perm = [2, 0, 1]
    est = TRUE_THETA_Y[np.argsort(perm)] + 0.01 * rng.standard_normal((3, 3))
    p = align_modes(est, TRUE_THETA_Y)
    np.testing.assert_allclose(est[p], TRUE_THETA_Y, atol=0.05)
    extra = np.vstack([est, [[5.0, 5.0, 5.0]]])
    assert 3 not in align_modes(extra, TRUE_THETA_Y)


def test_alignment_keeps_objective():
    data, modes, _ = generate_example(300, 2)
    rs = build_regressors(data, 1, 1)
    h = HyperParams(reg=LocalRegularizer("ridge", 0.1, 0.0))
    res = fit_pwarx(rs, 3, (modes + 1) % 3, h)
    p = np.array(align_modes(res.model.theta_y, TRUE_THETA_Y))
    inv = np.argsort(p)
    a = pwarx_objective(rs, res.model.theta_y, res.model.theta_x, res.modes, h.rho, h.lam, h.reg)
    b = pwarx_objective(rs, res.model.theta_y[p], res.model.theta_x[p], inv[res.modes], h.rho, h.lam, h.reg)
    assert a == pytest.approx(b, rel=1e-12)


def test_embed_parameters():
    theta = np.array([[1.0, 2.0, 3.0, 4.0]])
    out = embed_parameters(theta, 2, 1, 3, 2)
    np.testing.assert_array_equal(out, [[1.0, 2.0, 0.0, 3.0, 0.0, 4.0]])


def test_montecarlo_small_order_run(tmp_path):
    h = HyperParams(restarts=1, n_a_max=2, n_b_max=2, reg=LocalRegularizer("elastic_net", 0.1, 0.9))
    rep = run_montecarlo("select-order", 2, 300, h)
    assert rep.n_runs == 2 and rep.layout == (2, 2)
    assert sum(rep.histogram("n_a").values()) == pytest.approx(100.0)
    table = rep.coefficient_table()
    assert len(table) == 3 * 5 and all(row[5] == len(rep.successes()) for row in table)
    files = rep.write(tmp_path)
    with open(tmp_path / "runs.csv") as f:
        assert len(list(csv.reader(f))) == 3
    assert {p.split("/")[-1] for p in files} >= {"coefficients.csv", "histogram_n_a.csv", "histogram_n_b.csv"}


def test_montecarlo_deterministic():
    h = HyperParams(restarts=1, K_max=3, seed=5)
    a = run_montecarlo("select-k", 1, 300, h)
    b = run_montecarlo("select-k", 1, 300, h)
    assert a.runs[0].K == b.runs[0].K and a.runs[0].objective == b.runs[0].objective


def test_montecarlo_validation():
    h = HyperParams()
    with pytest.raises(ValueError):
        run_montecarlo("select-order", 1, 100, h)
    with pytest.raises(ValueError):
        run_montecarlo("bogus", 1, 100, h)
    with pytest.raises(ValueError):
        run_montecarlo("select-k", 0, 100, h)


def test_failed_runs_are_recorded():
    # T too short for the orders: every run fails, none raises
    h = HyperParams(restarts=1, n_a_max=5, n_b_max=5, reg=LocalRegularizer("elastic_net", 0.1, 0.9))
    rep = run_montecarlo("select-order", 2, 4, h)
    assert rep.n_runs == 2 and all(not r.ok for r in rep.runs)
    assert rep.histogram("n_a") == {None: 100.0}
    assert rep.coefficient_table() == []


def test_report_tables_from_records():
    rep = MonteCarloReport("select-k")
    for r in range(4):
        rep.runs.append(RunRecord(r, r, 16.0, K=3, n_a=1, n_b=1, objective=1.0,
                                  theta_y=TRUE_THETA_Y + 0.01 * r,
                                  boundaries=np.vstack([GUARD_1, GUARD_2])))
    rep.runs.append(RunRecord(4, 4, 16.0, K=4, n_a=1, n_b=1, objective=1.0))
    assert rep.histogram("K") == {3: 80.0, 4: 20.0}
    rows = rep.coefficient_table()
    assert rows[0][:3] == (1, "y1", -0.4)
    assert rows[0][3] == pytest.approx(-0.4 + 0.015)
    assert rows[0][5] == 4
    b = rep.boundary_table()
    assert b[0][2] == 4.0 and b[0][4] == 0.0


def test_generate_frozen_literals():
    data, modes, _ = generate_example(4, 2024)
    np.testing.assert_array_equal(
        data.u, [1.4066507038502545, -2.2854143900939388, -1.5243837529464663, 2.3957287741986653]
    )
    np.testing.assert_array_equal(
        data.y, [0.0, -2.4790797994021716, -0.12816465558794876, 0.44961952706745933]
    )
    np.testing.assert_array_equal(modes, [1, 1, 1])
