import numpy as np
import pytest
from hypothesis import given, strategies as st

from wct.cartography import (
    DynamicsRecord,
    append_observation,
    confidence,
    correctness,
    export_map,
    stats,
    variability,
)
from wct.dataset import generate_synthetic
from wct.errors import EmptyHistoryError, NumericError


def record(probs, correct=None):
    r = DynamicsRecord(0)
    if correct is None:
        correct = [True] * len(probs)
    for p, c in zip(probs, correct):
        append_observation(r, p, c)
    return r


class TestAppend:
    def test_single_append(self):
        r = record([0.9])
        assert len(r) == 1
        assert r.probs == [0.9]
        assert r.correct == [True]

    def test_out_of_range_prob(self):
        r = DynamicsRecord(0)
        with pytest.raises(NumericError):
            append_observation(r, 1.2, True)

    def test_order_preserved(self):
        r = record([0.1, 0.2])
        assert r.probs == [0.1, 0.2]


class TestConfidence:
    def test_mean(self):
        assert confidence(record([0.9, 0.8, 1.0])) == pytest.approx(0.9, abs=1e-12)

    def test_single_epoch(self):
        assert confidence(record([0.4])) == 0.4

    def test_empty_history(self):
        with pytest.raises(EmptyHistoryError):
            confidence(DynamicsRecord(0))

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        probs = rng.uniform(0, 1, size=5).tolist()
        expected = sum(probs) / len(probs)  # independent summation
        assert confidence(record(probs)) == pytest.approx(expected, abs=1e-12)


class TestVariability:
    def test_constant_series(self):
        assert variability(record([0.5, 0.5, 0.5])) == 0.0

    def test_two_extremes(self):
        assert variability(record([0.0, 1.0])) == pytest.approx(0.5, abs=1e-12)

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(1)
        probs = rng.uniform(0, 1, size=7).tolist()
        mean = sum(probs) / 7
        expected = (sum((p - mean) ** 2 for p in probs) / 7) ** 0.5
        assert variability(record(probs)) == pytest.approx(expected, abs=1e-12)

    def test_empty_history(self):
        with pytest.raises(EmptyHistoryError):
            variability(DynamicsRecord(0))


class TestCorrectness:
    def test_half(self):
        r = record([0.5] * 4, [True, True, False, False])
        assert correctness(r) == 0.5

    def test_all_true(self):
        assert correctness(record([0.5] * 3, [True] * 3)) == 1.0

    def test_all_false(self):
        assert correctness(record([0.5] * 3, [False] * 3)) == 0.0


class TestProperties:
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=30))
    def test_ranges(self, probs):
        r = record(probs)
        assert 0.0 <= confidence(r) <= 1.0
        assert 0.0 <= variability(r) <= 0.5 + 1e-12

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=20),
        st.randoms(use_true_random=False),
    )
    def test_permutation_invariance(self, probs, rnd):
        shuffled = list(probs)
        rnd.shuffle(shuffled)
        assert confidence(record(shuffled)) == pytest.approx(
            confidence(record(probs)), abs=1e-12
        )
        assert variability(record(shuffled)) == pytest.approx(
            variability(record(probs)), abs=1e-12
        )

    def test_running_sum_agreement_after_100_appends(self):
        rng = np.random.default_rng(2)
        r = DynamicsRecord(0)
        total = 0.0
        total_sq = 0.0
        n = 0
        for _ in range(100):
            p = float(rng.uniform())
            append_observation(r, p, True)
            total += p
            total_sq += p * p
            n += 1
        run_mean = total / n
        run_var = max(total_sq / n - run_mean**2, 0.0)
        assert confidence(r) == pytest.approx(run_mean, abs=1e-10)
        assert variability(r) == pytest.approx(run_var**0.5, abs=1e-10)


class TestExportMap:
    def test_empty_records_header_only(self, tmp_path):
        d = generate_synthetic(2, 2, 3, 1.0, 0)
        path = tmp_path / "map.csv"
        export_map({}, d, path)
        assert path.read_text() == (
            "id,confidence,variability,correctness,assigned_label,provenance\n"
        )

    def test_row_count_and_sorting(self, tmp_path):
        d = generate_synthetic(2, 2, 3, 1.0, 0)
        records = {i: record([0.5, 0.6]) for i in (2, 0, 1)}
        for i, r in records.items():
            r.example_id = i
        path = tmp_path / "map.csv"
        export_map(records, d, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        assert [line.split(",")[0] for line in lines[1:]] == ["0", "1", "2"]

    def test_reexport_byte_identical(self, tmp_path):
        d = generate_synthetic(2, 3, 3, 1.0, 0)
        records = {i: record([0.1, 0.9, 0.4]) for i in range(3)}
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        export_map(records, d, p1)
        export_map(records, d, p2)
        assert p1.read_bytes() == p2.read_bytes()
