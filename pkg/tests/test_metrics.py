import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from scenegame.game import RoundRecord
from scenegame.metrics import (
    GameMetrics,
    aggregate,
    consistency_and_drop,
    histogram,
    metrics_to_row,
    one_sample_t_test,
    relative_drop,
    write_report_csv,
    write_report_json,
)


def record(old, new, gt, invalid=False):
    return RoundRecord(
        item_index=0,
        old_answer=old,
        new_answer=None if invalid else new,
        invalid_kinds=("bounds",) if invalid else (),
        gt_answer=gt,
        reward=0.0,
        log_prob=0.0,
        state_value=0.0,
        displacement=(None,) * 10,
    )


class TestConsistencyAndDrop:
    def test_counts(self):
        records = [
            record("yes", "no", "yes"),    # drop (correct flipped)
            record("yes", "no", "no"),     # consistency only
            record("yes", "yes", "yes"),   # unchanged
            record("yes", None, "yes", invalid=True),
        ]
        m = consistency_and_drop(records)
        assert m.rounds == 4
        assert m.valid_rounds == 3
        assert m.consistency == pytest.approx(0.5)
        assert m.drop == pytest.approx(0.25)
        assert m.invalid_rate == pytest.approx(0.25)

    def test_accuracy_before_after(self):
        records = [
            record("yes", "no", "yes"),
            record("no", "no", "yes"),
            record("yes", None, "yes", invalid=True),  # keeps old answer
        ]
        m = consistency_and_drop(records)
        assert m.accuracy_before == pytest.approx(2 / 3)
        assert m.accuracy_after == pytest.approx(1 / 3)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            consistency_and_drop([])


class TestRelativeDrop:
    def test_reference_values(self):
        # printed table convention: truncation to one decimal
        assert relative_drop(72.1, 61.8) == 14.2
        assert relative_drop(80.0, 28.0) == 65.0

    def test_sign(self):
        assert relative_drop(50.0, 60.0) < 0
        assert relative_drop(50.0, 40.0) > 0

    def test_zero_baseline(self):
        assert math.isnan(relative_drop(0.0, 10.0))

    @given(st.floats(0.1, 100), st.floats(0, 100))
    def test_truncation_never_overshoots(self, before, after):
        exact = 100.0 * (before - after) / before
        got = relative_drop(before, after)
        assert abs(got) <= abs(exact) + 1e-9
        assert abs(got - exact) < 0.1 + 1e-9


class TestTTest:
    def test_reference_sample(self):
        r = one_sample_t_test([1, 2, 3, 4, 5])
        assert r.t_statistic == pytest.approx(4.242640687, abs=1e-6)
        assert r.p_value == pytest.approx(0.0066, abs=2e-4)

    def test_against_mpmath(self):
        samples = [
            [0.2, 0.1, 0.4, 0.15, 0.0, 0.3],
            [1.0, -1.0, 2.0, 0.5],
            [-0.5, -0.1, -0.2, -0.4, -0.3],
            [5.0, 5.1, 4.9, 5.05, 4.95, 5.0, 5.2],
        ]
        for x in samples:
            r = one_sample_t_test(x)
            df = len(x) - 1
            # Student-t upper tail via mpmath's regularized incomplete beta
            t = mpmath.mpf(r.t_statistic)
            tail = 0.5 * mpmath.betainc(
                df / 2, mpmath.mpf("0.5"),
                x2=df / (df + t * t), regularized=True,
            )
            expected = tail if t >= 0 else 1 - tail
            assert r.p_value == pytest.approx(float(expected), rel=1e-9)

    def test_zero_variance_conventions(self):
        assert one_sample_t_test([0.0, 0.0, 0.0]).p_value == 1.0
        assert one_sample_t_test([-1.0, -1.0]).p_value == 1.0
        assert one_sample_t_test([2.0, 2.0]).p_value == 0.0

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            one_sample_t_test([1.0])

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=30))
    def test_p_value_in_unit_interval(self, xs):
        r = one_sample_t_test(xs)
        assert 0.0 <= r.p_value <= 1.0


def metrics(before, after, drop):
    return GameMetrics(
        rounds=10, valid_rounds=10, consistency=drop, drop=drop,
        invalid_rate=0.0, accuracy_before=before, accuracy_after=after,
    )


class TestAggregate:
    def test_average_and_maximal(self):
        trials = [metrics(0.8, 0.6, 0.2), metrics(0.8, 0.4, 0.4), metrics(0.8, 0.7, 0.1)]
        agg = aggregate(trials)
        assert agg.average_accuracy_after == pytest.approx(0.5666667)
        assert agg.maximal_accuracy_after == pytest.approx(0.4)
        assert agg.relative_drop_maximal >= agg.relative_drop_average
        assert agg.p_value_drop == pytest.approx(0.0589, abs=1e-3)

    def test_no_drop_gives_p_one(self):
        trials = [metrics(0.8, 0.8, 0.0)] * 5
        assert aggregate(trials).p_value_drop == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestHistogram:
    def test_partition(self):
        counts, edges = histogram([0.0, 0.05, 0.5, 0.95, 1.0], bins=10)
        assert sum(counts) == 5
        assert counts[0] == 2
        assert counts[9] == 2  # 1.0 falls in the closed last bin
        assert edges[0] == 0.0 and edges[-1] == 1.0

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            histogram([1.5])

    @given(st.lists(st.floats(0, 1), max_size=50), st.integers(1, 20))
    def test_counts_conserved(self, xs, bins):
        counts, edges = histogram(xs, bins)
        assert sum(counts) == len(xs)
        assert len(edges) == bins + 1


class TestReports:
    def test_csv_roundtrip(self, tmp_path):
        rows = [metrics_to_row("a", metrics(0.8, 0.6, 0.2))]
        path = tmp_path / "r.csv"
        text = write_report_csv(rows, path)
        assert path.read_text() == text
        assert text.splitlines()[0].startswith("name,rounds")

    def test_json(self, tmp_path):
        path = tmp_path / "r.json"
        text = write_report_json({"drop": 0.2}, path)
        assert '"drop": 0.2' in text
        assert path.read_text() == text
