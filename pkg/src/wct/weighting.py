"""Importance-weight computation and bookkeeping for the two classifiers.

Classifier 1's dynamics produce the raw weights lambda1 = c + v (kept high for
ambiguous examples); classifier 2's produce lambda2 = c - v (kept low for
them). Each set is min-max normalized separately. During co-training the raw
values are refreshed per batch while the normalization bounds are frozen for
the duration of an epoch; fresh raw values are normalized against the frozen
bounds and clamped to [0,1].

The table instruments weight reads so the cross-scaling rule (classifier 1's
loss only ever reads the lambda2 set and vice versa) is assertable.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyInputError


def raw_weights(c1, v1, c2, v2):
    """Raw importance weights for one example: (c1 + v1, c2 - v2)."""
    return c1 + v1, c2 - v2


def normalize(values):
    """Min-max normalize to [0,1]; a constant (or singleton) list maps to all ones."""
    if len(values) == 0:
        raise EmptyInputError("cannot normalize an empty list")
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.ones_like(arr)
    return (arr - lo) / (hi - lo)


class WeightTable:
    """Per-example raw and normalized lambda1/lambda2 with frozen bounds.

    ``confidence_only=True`` implements the confidence-only variant: both raw
    sets equal the confidence and variability is ignored.
    """

    def __init__(self, ids, confidence_only=False):
        self.ids = sorted(ids)
        self._index = {ex_id: i for i, ex_id in enumerate(self.ids)}
        self.confidence_only = confidence_only
        self.raw1 = np.zeros(len(self.ids))
        self.raw2 = np.zeros(len(self.ids))
        self.bounds1 = (0.0, 0.0)
        self.bounds2 = (0.0, 0.0)
        # read_counts[(classifier, weight_set)] -> number of loss-side reads
        self.read_counts = {(1, 1): 0, (1, 2): 0, (2, 1): 0, (2, 2): 0}

    @classmethod
    def from_stats(cls, ids, stats1, stats2, confidence_only=False):
        table = cls(ids, confidence_only=confidence_only)
        table.update_weights(ids, stats1, stats2)
        table.refresh_bounds()
        return table

    def update_weights(self, ids, stats1, stats2):
        """Recompute raw weights for ``ids`` from aligned stat lists."""
        if not (len(ids) == len(stats1) == len(stats2)):
            raise ValueError("ids and stats lists must align")
        for ex_id, s1, s2 in zip(ids, stats1, stats2):
            i = self._index[ex_id]
            if self.confidence_only:
                self.raw1[i] = s1.confidence
                self.raw2[i] = s2.confidence
            else:
                self.raw1[i], self.raw2[i] = raw_weights(
                    s1.confidence, s1.variability, s2.confidence, s2.variability
                )
        return self

    def refresh_bounds(self):
        """Freeze normalization bounds from the current raw values (epoch boundary)."""
        self.bounds1 = (float(self.raw1.min()), float(self.raw1.max()))
        self.bounds2 = (float(self.raw2.min()), float(self.raw2.max()))
        return self

    def _normalized(self, raw, bounds):
        lo, hi = bounds
        if hi == lo:
            return np.ones_like(raw)
        return np.clip((raw - lo) / (hi - lo), 0.0, 1.0)

    @property
    def norm1(self):
        return self._normalized(self.raw1, self.bounds1)

    @property
    def norm2(self):
        return self._normalized(self.raw2, self.bounds2)

    def _select(self, weight_set, ids):
        raw, bounds = (self.raw1, self.bounds1) if weight_set == 1 else (self.raw2, self.bounds2)
        idx = np.array([self._index[i] for i in ids], dtype=np.int64)
        return self._normalized(raw[idx], bounds)

    def loss_weights(self, classifier, ids):
        """Normalized weights scaling ``classifier``'s loss: the peer's set."""
        peer_set = 2 if classifier == 1 else 1
        self.read_counts[(classifier, peer_set)] += 1
        return self._select(peer_set, ids)

    def self_weights(self, classifier, ids):
        """Normalized own-set weights (self-training ablations only)."""
        self.read_counts[(classifier, classifier)] += 1
        return self._select(classifier, ids)

    def dump_csv(self, path):
        """Audit dump: id,raw_l1,raw_l2,norm_l1,norm_l2 with 6-decimal formatting."""
        n1, n2 = self.norm1, self.norm2
        with open(path, "w") as fh:
            fh.write("id,raw_l1,raw_l2,norm_l1,norm_l2\n")
            for ex_id in self.ids:
                i = self._index[ex_id]
                fh.write(
                    f"{ex_id},{self.raw1[i]:.6f},{self.raw2[i]:.6f},"
                    f"{n1[i]:.6f},{n2[i]:.6f}\n"
                )
