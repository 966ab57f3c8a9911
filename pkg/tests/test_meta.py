import numpy as np
import pytest

from bicrit.adversaries import adaptive_lb, build_theorem2, random_bounded_variance
from bicrit.meta import EpochSchedule, asl_run, epoch_average, epoch_schedule, play, run_learner
from bicrit.learners import make_learner
from bicrit.metrics import count_switches, regret_secondary_raw
from bicrit.params import AssumptionParams
from bicrit.streams import LossStream


class TestSchedule:
    def test_exact_division(self):
        s = epoch_schedule(100, 0.5)
        assert (s.length, s.count) == (10, 10)
        assert s.lengths() == [10] * 10

    def test_ragged_last_epoch(self):
        s = epoch_schedule(105, 0.5)
        assert (s.length, s.count) == (11, 10)
        assert s.lengths()[-1] == 105 - 99
        assert sum(s.lengths()) == 105
        assert s.epoch_of(104) == 9

    def test_alpha_extremes(self):
        assert epoch_schedule(50, 0.0).count == 50
        assert epoch_schedule(50, 1.0).count == 1

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            epoch_schedule(10, 1.5)

    def test_epoch_average(self):
        assert list(epoch_average([[0.0, 1.0], [1.0, 1.0]])) == [0.5, 1.0]
        with pytest.raises(ValueError):
            epoch_average(np.zeros((0, 2)))


class RecordingLearner:
    """Learner stub that plays expert 0 and remembers what it was fed."""

    def __init__(self):
        self.fed = []

    def step(self):
        return 0, np.array([1.0, 0.0])

    def observe(self, loss, validate=True):
        self.fed.append(np.array(loss))


class TestPlay:
    def test_learner_sees_epoch_averages(self):
        P = np.array([[0.0, 1.0], [1.0, 1.0], [0.5, 0.0], [0.25, 0.75], [1.0, 0.0]])
        lr = RecordingLearner()
        play(lr, LossStream(P, np.zeros_like(P)), EpochSchedule.with_length(5, 2))
        assert [list(x) for x in lr.fed] == [[0.5, 1.0], [0.375, 0.375], [1.0, 0.0]]

    def test_selection_constant_within_epochs(self):
        params = AssumptionParams(0.5, 0.5, 0.5)
        stream = random_bounded_variance(1000, 3, params, seed=0)
        tr = asl_run("sd", stream, 0.5, seed=1)
        m = tr.meta["epoch_length"]
        for start in range(0, 1000, m):
            assert len(set(tr.sel[start:start + m])) == 1
            assert np.all(tr.dist[start:start + m] == tr.dist[start])
        assert count_switches(tr) <= tr.meta["epochs"] - 1
        tr.validate()

    @pytest.mark.parametrize("base", ["sd", "fll", "ew"])
    def test_secondary_bound_per_trajectory(self, base):
        # every constant segment stays within the budget, so the whole run does too
        params = AssumptionParams(0.4, 0.5, 0.5)
        for seed in range(5):
            stream = random_bounded_variance(3000, 3, params, seed=seed)
            tr = asl_run(base, stream, params.alpha, seed=seed)
            excess = regret_secondary_raw(tr, params.c, expected=False)
            assert excess <= params.threshold(3000) * (count_switches(tr) + 1)

    def test_theorem2_bound(self):
        stream, params = build_theorem2(4096, 0.5)
        tr = asl_run("sd", stream, 0.5, seed=3)
        assert regret_secondary_raw(tr, 0.0, expected=False) <= params.threshold(4096) * (count_switches(tr) + 1)

    def test_learner_horizon_is_epoch_count(self):
        stream = random_bounded_variance(1000, 2, AssumptionParams(0.5, 0.5, 0.5), seed=0)
        a = asl_run("sd", stream, 0.5, seed=4)
        learner = make_learner("sd", 2, 32, seed=4)
        b = play(learner, stream, epoch_schedule(1000, 0.5))
        assert np.array_equal(a.sel, b.sel)

    def test_unit_epochs_reduce_to_plain_learner(self):
        stream = random_bounded_variance(500, 2, AssumptionParams(0.5, 0.5, 0.5), seed=0)
        a = asl_run("sd", stream, 0.0, seed=2)
        b = run_learner("sd", stream, seed=2)
        assert np.array_equal(a.sel, b.sel)

    def test_adaptive_stream_sees_realized_history(self):
        stream = adaptive_lb(400, 0.5, 0.5, 0.25, 2, seed=0)
        tr = asl_run("sd", stream, 0.5, seed=0)
        m = stream.m
        # secondary c only after m rounds on the same expert
        for t in range(400):
            held = t >= m and len(set(tr.sel[t - m:t])) == 1
            expected = [0.75, 0.75]
            if held:
                expected[tr.sel[t - 1]] = 0.5
            assert list(tr.secondary[t]) == expected

    def test_deterministic(self):
        stream = random_bounded_variance(2000, 4, AssumptionParams(0.5, 0.5, 0.5), seed=0)
        a = asl_run("fll", stream, 0.3, seed=8)
        b = asl_run("fll", stream, 0.3, seed=8)
        assert np.array_equal(a.sel, b.sel) and np.array_equal(a.dist, b.dist)
