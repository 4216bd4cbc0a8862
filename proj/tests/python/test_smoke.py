import json
import os

import numpy as np
import pytest

import samba_sod as sd


def random_ssm(rng, length, channels, state):
    a_bar = rng.uniform(0.1, 0.99, (length, channels, state))
    b_bar = rng.normal(size=(length, channels, state))
    c = rng.normal(size=(length, state))
    d_skip = rng.normal(size=channels)
    return a_bar, b_bar, c, d_skip


def numpy_recurrence(a_bar, b_bar, c, d_skip, x, h0):
    h = h0.copy()
    y = np.empty_like(x)
    for k in range(x.shape[0]):
        h = a_bar[k] * h + b_bar[k] * x[k][:, None]
        y[k] = h @ c[k] + d_skip * x[k]
    return y, h


def test_recurrence_matches_numpy_and_parallel_scan():
    rng = np.random.default_rng(0)
    a_bar, b_bar, c, d_skip = random_ssm(rng, 50, 3, 4)
    x = rng.normal(size=(50, 3))
    h0 = rng.normal(size=(3, 4))
    y, h = numpy_recurrence(a_bar, b_bar, c, d_skip, x, h0)
    seq = sd.ssm_recurrence(a_bar, b_bar, c, d_skip, x, h0)
    par = sd.ssm_parallel_scan(a_bar, b_bar, c, d_skip, x, h0, threads=2)
    np.testing.assert_allclose(seq["y"], y, atol=1e-12)
    np.testing.assert_allclose(seq["h_final"], h, atol=1e-12)
    np.testing.assert_allclose(par["y"], y, atol=1e-10)
    zero = sd.ssm_recurrence(a_bar, b_bar, c, d_skip, x)
    np.testing.assert_allclose(zero["y"], numpy_recurrence(a_bar, b_bar, c, d_skip, x, np.zeros((3, 4)))[0])


def test_backward_against_finite_differences():
    rng = np.random.default_rng(1)
    a_bar, b_bar, c, d_skip = random_ssm(rng, 6, 2, 3)
    x = rng.normal(size=(6, 2))
    h0 = rng.normal(size=(2, 3))
    dy = rng.normal(size=(6, 2))
    grads = sd.ssm_backward(a_bar, b_bar, c, d_skip, x, h0, dy)
    fd = np.empty_like(x)
    for idx in np.ndindex(*x.shape):
        up, down = x.copy(), x.copy()
        up[idx] += 1e-6
        down[idx] -= 1e-6
        f = lambda xx: np.sum(sd.ssm_recurrence(a_bar, b_bar, c, d_skip, xx, h0)["y"] * dy)
        fd[idx] = (f(up) - f(down)) / 2e-6
    np.testing.assert_allclose(grads["dx"], fd, rtol=1e-5, atol=1e-7)


def test_sns_fixture():
    mask = np.array([[1, 0, 1], [0, 0, 1], [1, 1, 0]], dtype=bool)
    assert sd.sns_order(mask) == [0, 2, 5, 7, 6]
    bundle = sd.sns_path_bundle(mask)
    assert bundle[0] == [0, 2, 5, 7, 6, 1, 3, 4, 8]
    assert bundle[3] == [8, 4, 3, 1, 6, 7, 5, 2, 0]
    assert sd.path_divergence(mask)
    assert not sd.path_divergence(np.ones((4, 4), dtype=bool))


def test_cau_pairing_is_a_bijection():
    plan = sd.cau_pairing(3, 2, shift=1)
    positions = sorted(plan["shallow_position"] + plan["deep_position"])
    assert positions == list(range(30))
    assert sorted(i for g in plan["group_of"] for i in g) == list(range(24))
    deep = np.arange(6.0).reshape(6, 1)
    seq = sd.cau_interleave(deep, np.zeros((24, 1)), 3, 2, shift=1)
    assert seq.shape == (30, 1)
    assert np.array_equal(seq[plan["deep_position"], 0], deep[:, 0])


def test_sir_identities():
    rng = np.random.default_rng(2)
    m = rng.uniform(size=(9, 11))
    g3, g5, g7 = (sd.soft_morph_edge(m, k) for k in (3, 5, 7))
    assert np.all(g5 >= g3) and np.all(g7 >= g5)
    assert np.all(sd.soft_morph_edge(np.full((5, 5), 0.4), 3) == 0)
    prior = sd.object_prior(m)
    assert np.all(sd.reverse_attention(prior, np.ones_like(m)) == 0)
    with pytest.raises(ValueError):
        sd.soft_morph_edge(m, 4)


def test_metrics():
    gt = np.zeros((8, 8))
    gt[2:6, 2:6] = 1
    perfect = sd.evaluate(gt, gt)
    assert perfect == {"s_measure": 1.0, "f_measure_max": 1.0, "e_measure_max": 1.0, "mae": 0.0}
    empty = sd.evaluate(np.full((8, 8), 0.3), np.zeros((8, 8)))
    assert empty["f_measure_max"] is None
    assert empty["s_measure"] == pytest.approx(0.7)
    with pytest.raises(ValueError):
        sd.evaluate(np.zeros((2, 3)), np.zeros((3, 2)))


def test_randomized_quantization_clamp():
    rng = np.random.default_rng(3)
    x = rng.uniform(-1, 1, size=(6, 6, 2))
    mask = rng.uniform(size=(6, 6)) < 0.5
    y = sd.randomized_quantization(x, mask, bins=4, epsilon=0.05, seed=9)
    assert np.all(np.abs(y - x)[mask] <= 0.05)
    assert np.array_equal(y, sd.randomized_quantization(x, mask, bins=4, epsilon=0.05, seed=9))


def test_schedule_plan():
    data = os.environ.get("SAMBA_TEST_DATA", os.path.join(os.path.dirname(__file__), "..", "data"))
    with open(os.path.join(data, "training_roster.json")) as f:
        plan = json.loads(sd.schedule_plan(f.read()))
    stages = plan["stages"]
    assert len(stages) == 3
    assert stages[2]["replay"][1]["rate"] == 0.30
