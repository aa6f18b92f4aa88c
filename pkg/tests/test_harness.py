import csv
import io

import numpy as np
import pytest

from obsalloc import MeasurementMatrix, RankEstimator, SystemModel, exact_observability_rank
from obsalloc.errors import NotObservableWithinCandidates, PreconditionError
from obsalloc.harness import (
    SWEEP_HEADER,
    HvacConfig,
    build_model1,
    build_model2,
    run_allocation_experiment,
    run_error_sweep,
    sweep_csv,
)
from obsalloc.measurement import cyclic_schedule_restricted
from obsalloc.sysid import identify


def test_model1_entries():
    A = build_model1().A
    assert A[1, 0] == 0.9 and A[0, 3] == 0.9
    mask = np.kron(np.eye(5), np.ones((4, 4))) == 0
    assert not A[mask].any()
    P = np.eye(20)
    for t in range(1, 12):
        P = P @ A
        assert np.linalg.norm(P, 2) == pytest.approx(0.9 ** t, rel=1e-12)


def test_model2_entries():
    model, J = build_model2()
    np.testing.assert_allclose(model.B, 0.35 * np.eye(20))
    # 1 - 0.35 (environment) - 2 * 0.35 (two neighbours)
    np.testing.assert_allclose(np.diag(model.A), -0.05)
    np.testing.assert_allclose(model.A, model.A.T)
    off = model.A - np.diag(np.diag(model.A))
    assert np.all(np.count_nonzero(off, axis=1) == 2)
    assert set(np.unique(off)) == {0.0, 0.35}
    assert J == tuple(j for j in range(1, 21) if j not in (4, 8, 12, 16, 20))
    assert model.sigma_u2 == 10.0 and model.sigma_eta2 == 1.0
    assert model.sigma_w2 == pytest.approx(35 / 100 ** 2)
    assert model.spectral_radius() < 1


def test_hvac_validation():
    with pytest.raises(PreconditionError):
        HvacConfig(delta=0)
    with pytest.raises(PreconditionError):
        HvacConfig(edges=((0, 4),))
    with pytest.raises(PreconditionError):
        HvacConfig(edges=((1, 1),))
    with pytest.raises(PreconditionError):
        build_model2(HvacConfig(theta=20.0))


def test_sweep_on_noiseless_nilpotent_toy():
    model = SystemModel(np.eye(4, k=-1), np.eye(4), 1.0, 0.0, 0.0)
    rows = run_error_sweep(model, 2, [1, 2], [60, 120], 4, seeds=[3, 1])
    assert len(rows) == 8
    assert all(row.error < 1e-8 for row in rows)
    assert [(r.K, r.T, r.seed) for r in rows] == sorted((r.K, r.T, r.seed) for r in rows)
    text = sweep_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == SWEEP_HEADER
    assert parsed[1][-1] == ""
    assert sweep_csv(run_error_sweep(model, 2, [1, 2], [60, 120], 4, seeds=[3, 1])) == text


def test_sweep_needs_enough_depth():
    model, J = build_model2()
    with pytest.raises(PreconditionError):
        run_error_sweep(model, 5, [1], [100], 20, [0], accessible=J)


def test_model1_block_restricted_candidates_fail():
    with pytest.raises(NotObservableWithinCandidates):
        run_allocation_experiment(build_model1(), 5, 4, 20000, 20, seed=0, candidates=(1, 2, 3, 4))


def test_model2_learned_hankel_rank_matches_oracle():
    model, J = build_model2()
    sched = cyclic_schedule_restricted(20, J, 5, 4)
    est = identify(model, sched, 20000, 39, seed=0)
    rank_est = RankEstimator.hankel(est, J)
    for pair in [(1, 2), (5, 7), (2, 3), (17, 19)]:
        C = MeasurementMatrix(20, pair)
        assert rank_est.rank(C) == exact_observability_rank(model.A, C)
    assert rank_est.rank(MeasurementMatrix(20, (1, 2))) == 4
    assert rank_est.rank(MeasurementMatrix(20, (2, 3))) == 3
