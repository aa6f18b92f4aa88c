import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from obsalloc import MeasurementMatrix, Schedule, coverage, cyclic_schedule, cyclic_schedule_restricted
from obsalloc.errors import PreconditionError


def coords(sched):
    return [M.coords for M in sched.matrices]


def test_measurement_matrix_validation():
    MeasurementMatrix(4, ())
    with pytest.raises(PreconditionError):
        MeasurementMatrix(4, (1, 1))
    with pytest.raises(PreconditionError):
        MeasurementMatrix(4, (5,))
    M = MeasurementMatrix(4, (3, 1))
    np.testing.assert_array_equal(M.dense(), [[0, 0, 1, 0], [1, 0, 0, 0]])
    np.testing.assert_array_equal(M.indices, [2, 0])


def test_cyclic_exact_division():
    sched = cyclic_schedule(4, 2, 1)
    assert sched.K == 2 and coords(sched) == [(1, 2), (3, 4)]
    assert list(coverage(sched).counts) == [1, 1, 1, 1]


def test_cyclic_wraps():
    sched = cyclic_schedule(3, 2, 1)
    assert coords(sched) == [(1, 2), (3, 1)]
    cov = coverage(sched)
    assert list(cov.counts) == [2, 1, 1]
    assert (cov.s_min, cov.s_max) == (1, 2)


def test_cyclic_model1_layout():
    sched = cyclic_schedule(20, 5, 4)
    cov = coverage(sched)
    assert sched.K == 16
    assert np.all(cov.counts == 4) and cov.s_min == cov.s_max == 4


def test_restricted_examples():
    sched = cyclic_schedule_restricted(4, (1, 3), 1, 1)
    assert coords(sched) == [(1,), (3,)]
    J = tuple(j for j in range(1, 21) if j % 4)
    sched = cyclic_schedule_restricted(20, J, 5, 4)
    cov = coverage(sched)
    assert sched.K == 12
    assert all(cov.counts[j - 1] == 4 for j in J)
    assert all(cov.counts[j - 1] == 0 for j in (4, 8, 12, 16, 20))
    sched = cyclic_schedule_restricted(5, (1, 2, 3), 2, 1)
    assert coords(sched) == [(1, 2), (3, 1)]
    assert coverage(sched).counts[0] == 2


def test_schedule_errors():
    with pytest.raises(PreconditionError):
        cyclic_schedule(3, 4, 1)
    with pytest.raises(PreconditionError):
        cyclic_schedule(3, 0, 1)
    with pytest.raises(PreconditionError):
        cyclic_schedule_restricted(5, (1, 2), 3, 1)


def test_empty_schedule_coverage():
    cov = coverage(Schedule((), 5, 1, 1))
    assert not cov.counts.any() and cov.measured == ()


def test_schedule_roundtrip():
    sched = cyclic_schedule_restricted(8, (1, 2, 5), 2, 3)
    assert Schedule.from_dict(sched.to_dict()) == sched


@settings(max_examples=60, deadline=None)
@given(r=st.integers(1, 30), data=st.data())
def test_cyclic_coverage_bounds(r, data):
    n_bar = data.draw(st.integers(1, r))
    s = data.draw(st.integers(1, 6))
    sched = cyclic_schedule(r, n_bar, s)
    cov = coverage(sched)
    assert cov.counts.min() >= s and cov.counts.max() <= s + 1
    assert all(len(M) == n_bar for M in sched.matrices)
    total = sum(M.dense().T @ M.dense() for M in sched.matrices)
    np.testing.assert_array_equal(total, np.diag(cov.counts))
    for M in sched.matrices:
        np.testing.assert_array_equal(M.dense() @ M.dense().T, np.eye(n_bar))


@settings(max_examples=60, deadline=None)
@given(r=st.integers(2, 25), data=st.data())
def test_restricted_coverage(r, data):
    J = sorted(data.draw(st.sets(st.integers(1, r), min_size=1, max_size=r)))
    n_bar = data.draw(st.integers(1, len(J)))
    s = data.draw(st.integers(1, 5))
    cov = coverage(cyclic_schedule_restricted(r, J, n_bar, s))
    outside = [i for i in range(1, r + 1) if i not in J]
    assert all(cov.counts[i - 1] == 0 for i in outside)
    assert min(cov.counts[j - 1] for j in J) >= s
