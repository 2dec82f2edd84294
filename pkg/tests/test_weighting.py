import numpy as np
import pytest
from hypothesis import given, strategies as st

from wct.cartography import CartographyStats
from wct.errors import EmptyInputError
from wct.weighting import WeightTable, normalize, raw_weights


def cs(c, v, corr=1.0):
    return CartographyStats(confidence=c, variability=v, correctness=corr)


class TestRawWeights:
    def test_worked_high_weight(self):
        l1, _ = raw_weights(0.4, 0.3, 0.4, 0.3)
        assert l1 == pytest.approx(0.7, abs=1e-12)

    def test_worked_low_weight(self):
        _, l2 = raw_weights(0.4, 0.3, 0.4, 0.3)
        assert l2 == pytest.approx(0.1, abs=1e-12)

    def test_easy_extreme(self):
        assert raw_weights(1.0, 0.0, 1.0, 0.0) == (1.0, 1.0)

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=0.5),
    )
    def test_contrast_property(self, c, v):
        l1, l2 = raw_weights(c, v, c, v)
        # strictness needs v above float rounding relative to c
        if v > 1e-9:
            assert l1 > l2
        else:
            assert l1 >= l2


class TestNormalize:
    def test_closed_form(self):
        out = normalize([0.1, 0.7, 1.5])
        assert out[0] == 0.0
        assert out[1] == pytest.approx((0.7 - 0.1) / 1.4, abs=1e-12)
        assert out[2] == 1.0

    def test_degenerate_constant(self):
        assert np.array_equal(normalize([0.3, 0.3, 0.3]), [1.0, 1.0, 1.0])

    def test_singleton(self):
        assert np.array_equal(normalize([0.9]), [1.0])

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            normalize([])

    @given(
        st.lists(
            st.floats(min_value=-0.5, max_value=1.5, allow_nan=False),
            min_size=1,
            max_size=50,
        )
    )
    def test_range_and_order(self, values):
        out = normalize(values)
        assert np.all(out >= 0.0) and np.all(out <= 1.0)
        order_in = np.argsort(values, kind="stable")
        order_out = np.argsort(out[order_in], kind="stable")
        # sorting the normalized values in input-sorted order must be a no-op
        assert np.array_equal(order_out, np.arange(len(values)))


class TestWeightTable:
    def make(self, confidence_only=False):
        ids = [10, 20, 30]
        s1 = [cs(0.9, 0.05), cs(0.4, 0.3), cs(0.2, 0.1)]
        s2 = [cs(0.8, 0.1), cs(0.5, 0.25), cs(0.3, 0.05)]
        return (
            WeightTable.from_stats(ids, s1, s2, confidence_only=confidence_only),
            ids,
            s1,
            s2,
        )

    def test_idempotent_update(self):
        table, ids, s1, s2 = self.make()
        raw1, raw2 = table.raw1.copy(), table.raw2.copy()
        table.update_weights(ids, s1, s2)
        assert np.array_equal(table.raw1, raw1)
        assert np.array_equal(table.raw2, raw2)

    def test_raising_v2_lowers_raw_l2(self):
        table, ids, s1, s2 = self.make()
        before = table.raw2[1]
        s2b = list(s2)
        s2b[1] = cs(s2[1].confidence, s2[1].variability + 0.1)
        table.update_weights(ids, s1, s2b)
        assert table.raw2[1] < before

    def test_raising_v1_raises_raw_l1(self):
        table, ids, s1, s2 = self.make()
        before = table.raw1[1]
        s1b = list(s1)
        s1b[1] = cs(s1[1].confidence, s1[1].variability + 0.1)
        table.update_weights(ids, s1b, s2)
        assert table.raw1[1] > before

    def test_unknown_id(self):
        table, _, s1, s2 = self.make()
        with pytest.raises(KeyError):
            table.update_weights([99], [s1[0]], [s2[0]])

    def test_confidence_only_mode(self):
        table, ids, s1, s2 = self.make(confidence_only=True)
        assert np.array_equal(table.raw1, [s.confidence for s in s1])
        assert np.array_equal(table.raw2, [s.confidence for s in s2])

    def test_loss_weight_reads_counted(self):
        table, ids, _, _ = self.make()
        table.loss_weights(1, ids)
        table.loss_weights(2, ids)
        table.self_weights(1, ids)
        assert table.read_counts == {(1, 2): 1, (2, 1): 1, (1, 1): 1, (2, 2): 0}

    def test_loss_weights_are_peer_normalized(self):
        table, ids, _, _ = self.make()
        assert np.array_equal(table.loss_weights(1, ids), table.norm2)
        assert np.array_equal(table.loss_weights(2, ids), table.norm1)

    def test_frozen_bounds_clamp(self):
        table, ids, s1, s2 = self.make()
        # push one raw value above the frozen max: must clamp to 1
        s1b = [cs(1.0, 0.5), s1[1], s1[2]]
        table.update_weights(ids, s1b, s2)
        w = table.loss_weights(2, ids)
        assert w.max() <= 1.0

    def test_ordering_preserved_in_norm(self):
        table, ids, _, _ = self.make()
        assert np.array_equal(np.argsort(table.raw1), np.argsort(table.norm1))
        assert np.array_equal(np.argsort(table.raw2), np.argsort(table.norm2))

    def test_self_equals_cross_when_stats_identical_and_v_zero(self):
        # confidence-only collapse: with v = 0 both raw sets equal c, so
        # exchanging weights or not yields the same scaling when the two
        # classifiers' dynamics agree
        ids = [1, 2, 3]
        s = [cs(0.9, 0.0), cs(0.5, 0.0), cs(0.2, 0.0)]
        table = WeightTable.from_stats(ids, s, s)
        assert np.array_equal(table.loss_weights(1, ids), table.self_weights(1, ids))

    def test_dump_csv(self, tmp_path):
        table, ids, _, _ = self.make()
        path = tmp_path / "weights.csv"
        table.dump_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "id,raw_l1,raw_l2,norm_l1,norm_l2"
        assert len(lines) == 4
        assert lines[1].startswith("10,")
