import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from obsalloc import (
    MeasurementMatrix,
    StabilityParams,
    SystemModel,
    controllability_matrix,
    is_controllable,
    markov_parameters,
    simulate_trajectory,
    verify_stability,
)
from obsalloc.errors import DimensionError, PreconditionError
from obsalloc.harness import build_model1, build_model2


def test_model_validation():
    with pytest.raises(DimensionError):
        SystemModel(np.zeros((2, 3)), np.zeros((2, 1)))
    with pytest.raises(DimensionError):
        SystemModel(np.zeros((2, 2)), np.zeros((3, 1)))
    with pytest.raises(PreconditionError):
        SystemModel(np.zeros((2, 2)), np.zeros((2, 1)), sigma_w2=-1)


def test_model_roundtrip():
    model, _ = build_model2()
    again = SystemModel.from_dict(model.to_dict())
    assert np.array_equal(again.A, model.A) and np.array_equal(again.B, model.B)
    assert again.accessible == model.accessible
    assert again.sigma_w2 == model.sigma_w2


def test_zero_noise_zero_input_gives_zero_observations():
    rng = np.random.default_rng(0)
    model = SystemModel(0.5 * rng.standard_normal((4, 4)), rng.standard_normal((4, 2)), 0, 0, 0)
    traj = simulate_trajectory(model, MeasurementMatrix(4, (1, 3)), 50, seed=3)
    assert traj.observations.shape == (52, 2)
    assert traj.inputs.shape == (51, 2)
    assert not traj.observations.any()


def test_passthrough_system():
    model = SystemModel(np.zeros((3, 3)), np.eye(3), 1.0, 0.0, 0.0)
    traj = simulate_trajectory(model, MeasurementMatrix.full(3), 20, seed=11)
    np.testing.assert_array_equal(traj.observations[1:], traj.inputs)


def test_simulation_is_deterministic():
    model = build_model1()
    meas = MeasurementMatrix(20, (1, 2, 3, 4, 5))
    a = simulate_trajectory(model, meas, 500, seed=9, index=2)
    b = simulate_trajectory(model, meas, 500, seed=9, index=2)
    assert a.observations.tobytes() == b.observations.tobytes()
    c = simulate_trajectory(model, meas, 500, seed=9, index=3)
    assert not np.array_equal(a.observations, c.observations)


def test_simulation_rejects_mismatch():
    with pytest.raises(DimensionError):
        simulate_trajectory(build_model1(), MeasurementMatrix(5, (1,)), 10, 0)


def test_impulse_response_matches_markov_parameters():
    rng = np.random.default_rng(5)
    A = 0.5 * rng.standard_normal((4, 4))
    B = rng.standard_normal((4, 2))
    G = markov_parameters(SystemModel(A, B), 6)
    x = np.zeros(4)
    u0 = np.array([0.0, 1.0])
    x = B @ u0
    for t in range(7):
        np.testing.assert_allclose(x, G[t][:, 1], atol=1e-12)
        x = A @ x


def test_markov_examples():
    G = markov_parameters(SystemModel(np.zeros((3, 3)), np.eye(3)), 2)
    np.testing.assert_array_equal(G, [np.eye(3), np.zeros((3, 3)), np.zeros((3, 3))])
    G = markov_parameters(SystemModel(0.5 * np.eye(3), np.eye(3)), 2)
    np.testing.assert_array_equal(G, [np.eye(3), 0.5 * np.eye(3), 0.25 * np.eye(3)])
    G = markov_parameters(build_model1(), 4)
    np.testing.assert_allclose(G[4], 0.6561 * np.eye(20), atol=1e-15)


def test_controllability():
    rng = np.random.default_rng(2)
    assert is_controllable(SystemModel(rng.standard_normal((5, 5)), np.eye(5)))
    assert not is_controllable(SystemModel(np.eye(2), np.array([[1.0], [0.0]])))
    model2, _ = build_model2()
    assert is_controllable(model2)
    assert controllability_matrix(model2).shape == (20, 400)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), r=st.integers(1, 5), m=st.integers(1, 3))
def test_controllability_invariant_under_input_permutation(seed, r, m):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((r, r))
    B = rng.standard_normal((r, m))
    if rng.random() < 0.5:
        B[:, 0] = 0.0
    perm = rng.permutation(m)
    assert is_controllable(SystemModel(A, B)) == is_controllable(SystemModel(A, B[:, perm]))


def test_markov_block_zero_is_B():
    model = build_model1()
    assert np.array_equal(markov_parameters(model, 3)[0], model.B)


def test_stability():
    Q, _ = np.linalg.qr(np.random.default_rng(4).standard_normal((4, 4)))
    model = SystemModel(0.9 * Q, np.eye(4))
    assert verify_stability(model, StabilityParams(1.0, 0.9), 50)
    # ||A|| = 0.9 <= 1 at t=1, ||A^2|| = 0.81 > 0.5 at t=2
    assert not verify_stability(model, StabilityParams(1.0, 0.5), 10)
    assert verify_stability(build_model1(), StabilityParams(1.0, 0.9), 100)
