"""Training-dynamics records and data-map statistics.

Each record stores the full probability history of one (classifier, example)
pair so that incremental consumers can always be audited against a brute-force
recomputation. Confidence is the mean of the history, variability its
population standard deviation (divide by the history length), correctness the
fraction of epochs whose argmax prediction matched the assigned label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyHistoryError, NumericError


@dataclass
class DynamicsRecord:
    example_id: int
    probs: list = field(default_factory=list)
    correct: list = field(default_factory=list)

    def __len__(self):
        return len(self.probs)


@dataclass(frozen=True)
class CartographyStats:
    confidence: float
    variability: float
    correctness: float


def append_observation(r, prob, correct):
    """Extend both histories by one epoch's observation."""
    if not 0.0 <= prob <= 1.0:
        raise NumericError(f"probability {prob} outside [0,1]")
    r.probs.append(float(prob))
    r.correct.append(bool(correct))
    return r


def confidence(r):
    if not r.probs:
        raise EmptyHistoryError(f"example {r.example_id}: empty history")
    return float(np.mean(r.probs))


def variability(r):
    if not r.probs:
        raise EmptyHistoryError(f"example {r.example_id}: empty history")
    p = np.asarray(r.probs)
    # population std; guard the sqrt against tiny negative rounding
    var = np.mean((p - p.mean()) ** 2)
    return float(np.sqrt(max(var, 0.0)))


def correctness(r):
    if not r.correct:
        raise EmptyHistoryError(f"example {r.example_id}: empty history")
    return float(np.mean(r.correct))


def stats(r):
    return CartographyStats(confidence(r), variability(r), correctness(r))


def export_map(records, dataset, path):
    """Write the data-map table as CSV, sorted by id, 6-decimal fixed format.

    ``records`` maps example id -> DynamicsRecord; label and provenance columns
    come from ``dataset``.
    """
    with open(path, "w") as fh:
        fh.write("id,confidence,variability,correctness,assigned_label,provenance\n")
        for ex_id in sorted(records):
            r = records[ex_id]
            ex = dataset[ex_id]
            fh.write(
                f"{ex_id},{confidence(r):.6f},{variability(r):.6f},"
                f"{correctness(r):.6f},{ex.assigned_label},{ex.provenance}\n"
            )
