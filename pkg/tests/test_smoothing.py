import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manifold_sdr.errors import DegenerateNeighborhoodError, ValidationError
from manifold_sdr.smoothing import (
    BandwidthSchedule,
    KernelSpec,
    initial_bandwidth,
    kernel_eval,
    local_weights,
    next_bandwidth,
    silverman_bandwidth,
)

QUARTIC = KernelSpec("quartic")
GAUSSIAN = KernelSpec("gaussian")


def test_kernel_spec_validates_kind():
    with pytest.raises(ValidationError):
        KernelSpec("triangle")


def test_quartic_values():
    assert kernel_eval(QUARTIC, np.zeros(1), 1.0) == pytest.approx(15.0 / 16.0)
    # vanishes on the support boundary and outside
    assert kernel_eval(QUARTIC, np.array([1.0]), 1.0) == 0.0
    assert kernel_eval(QUARTIC, np.array([2.0]), 1.0) == 0.0
    # squared scaled norm 0.25: 15/16 * (1 - 0.25)^2
    assert kernel_eval(QUARTIC, np.array([0.5]), 1.0) == pytest.approx(0.52734375)


def test_gaussian_values():
    assert kernel_eval(GAUSSIAN, np.zeros(2), 1.0) == pytest.approx(1.0)
    u = np.array([1.0, 1.0])
    assert kernel_eval(GAUSSIAN, u, 1.0) == pytest.approx(np.exp(-1.0))


def test_kernel_bandwidth_scaling():
    # K_h(u) = K(u/h) / h^len(u)
    u = np.array([0.3, 0.4])
    h = 2.0
    expected = 15.0 / 16.0 * (1.0 - (u @ u) / 4.0) ** 2 / 4.0
    assert kernel_eval(QUARTIC, u, h) == pytest.approx(expected)


def test_kernel_rejects_bad_bandwidth():
    with pytest.raises(ValidationError):
        kernel_eval(QUARTIC, np.zeros(2), 0.0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=5),
    st.floats(0.1, 10.0),
    st.sampled_from(["quartic", "gaussian"]),
)
def test_kernel_nonnegative(coords, h, kind):
    u = np.array(coords)
    value = kernel_eval(KernelSpec(kind), u, h)
    assert value >= 0.0
    if kind == "quartic" and float(u @ u) / (h * h) >= 1.0:
        assert value == 0.0


def test_initial_bandwidth_values():
    assert initial_bandwidth(100, 10) == pytest.approx(2.34 * 100 ** (-1.0 / 16))
    assert initial_bandwidth(100, 10) == pytest.approx(1.75475, abs=1e-4)
    # p0 = max(p, 3) kicks in for small p
    assert initial_bandwidth(200, 3) == pytest.approx(2.34 * 200 ** (-1.0 / 9))
    assert initial_bandwidth(200, 1) == initial_bandwidth(200, 3)


def test_initial_bandwidth_rejects_tiny_sample():
    with pytest.raises(ValidationError):
        initial_bandwidth(1, 5)


def test_next_bandwidth_shrink_and_floor():
    h0 = initial_bandwidth(100, 10)
    r_n = 100 ** (-1.0 / 32)
    assert next_bandwidth(h0, 100, 10, 1) == pytest.approx(r_n * h0)
    assert next_bandwidth(h0, 100, 10, 1) == pytest.approx(1.51956, abs=1e-4)
    floor = 2.34 * 100 ** (-1.0 / 5)
    assert floor == pytest.approx(0.93158, abs=1e-4)
    # once below floor / r_n, the floor clamps forever
    assert next_bandwidth(0.5, 100, 10, 1) == pytest.approx(floor)
    assert next_bandwidth(floor, 100, 10, 1) == pytest.approx(floor)


def test_silverman_bandwidth():
    assert silverman_bandwidth(200, 2) == pytest.approx((4.0 / 4.0) ** (1 / 6) * 200 ** (-1 / 6))
    assert silverman_bandwidth(100, 1) == pytest.approx((4.0 / 3.0) ** 0.2 * 100 ** (-0.2))


@settings(max_examples=40, deadline=None)
@given(st.integers(10, 5000), st.integers(1, 25), st.data())
def test_bandwidth_schedule_monotone_hits_floor(n, p, data):
    d = data.draw(st.integers(1, p))
    sched = BandwidthSchedule(n=n, p=p, d=d)
    values = sched.values()
    assert len(values) == sched.max_iters
    assert all(v > 0 for v in values)
    assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))
    assert values[-1] >= sched.floor() - 1e-15


def test_local_weights_identical_points():
    X = np.zeros((2, 3))
    w = local_weights(X, None, 0, 1.0, QUARTIC)
    assert np.allclose(w, [0.5, 0.5])


def test_local_weights_includes_self():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(10, 2))
    w = local_weights(X, None, 3, 5.0, QUARTIC)
    assert w[3] > 0.0
    assert w.sum() == pytest.approx(1.0)


def test_local_weights_isolated_anchor():
    X = np.vstack([np.zeros((5, 2)), [10.0, 10.0]])
    with pytest.raises(DegenerateNeighborhoodError):
        local_weights(X, None, 5, 0.5, QUARTIC)


def test_local_weights_match_bruteforce(rng):
    X = rng.uniform(size=(20, 3))
    B = np.linalg.qr(rng.normal(size=(3, 2)))[0]
    h = 0.8
    j = 7
    raw = np.array([kernel_eval(QUARTIC, B.T @ (X[i] - X[j]), h) for i in range(20)])
    expected = raw / raw.sum()
    assert np.allclose(local_weights(X, B, j, h, QUARTIC), expected, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_local_weights_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(15, 4))
    w = local_weights(X, None, int(rng.integers(15)), 3.0, GAUSSIAN)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(w >= 0.0)


def test_local_weights_rotation_invariant(rng):
    # right-multiplying B by an orthogonal matrix leaves weights unchanged
    X = rng.uniform(size=(25, 4))
    B = np.linalg.qr(rng.normal(size=(4, 2)))[0]
    Q = np.linalg.qr(rng.normal(size=(2, 2)))[0]
    for j in (0, 11):
        w1 = local_weights(X, B, j, 0.9, QUARTIC)
        w2 = local_weights(X, B @ Q, j, 0.9, QUARTIC)
        assert np.allclose(w1, w2, atol=1e-12)


def test_local_weights_validation():
    X = np.zeros((3, 2))
    with pytest.raises(ValidationError):
        local_weights(X, None, 5, 1.0, QUARTIC)
    with pytest.raises(ValidationError):
        local_weights(X, None, 0, -1.0, QUARTIC)
