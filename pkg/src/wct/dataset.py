"""Dataset representation, ingestion, synthesis, label-noise injection and splits.

A dataset is a list of immutable examples partitioned into a small human-labeled
set and a large automatically labeled set. Corruption bookkeeping lives in
``gold_label``, which the training path never reads; only evaluation and
diagnostics may look at it.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CapacityError,
    DatasetFormatError,
    EmptyDatasetError,
    LabelOutOfRangeError,
    SchemaError,
    SplitError,
)

HUMAN = "human"
AUTO = "auto"


@dataclass(frozen=True)
class Example:
    """One classification instance."""

    id: int
    features: tuple
    assigned_label: int
    provenance: str = AUTO
    gold_label: int | None = None

    def is_corrupted(self):
        return self.gold_label is not None and self.gold_label != self.assigned_label


@dataclass(frozen=True)
class NoiseSpec:
    """Symmetric-uniform label corruption parameters."""

    rate: float
    seed: int
    kind: str = "symmetric_uniform"

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"noise rate must be in [0,1], got {self.rate}")
        if self.kind != "symmetric_uniform":
            raise ValueError(f"unsupported noise kind: {self.kind}")


@dataclass(frozen=True)
class Dataset:
    """Ordered examples plus the human/auto partition of their ids."""

    examples: tuple
    num_classes: int
    _by_id: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        by_id = {ex.id: ex for ex in self.examples}
        if len(by_id) != len(self.examples):
            raise SchemaError("duplicate example ids")
        object.__setattr__(self, "_by_id", by_id)
        n = len(self.human_ids)
        m = len(self.auto_ids)
        if n > m:
            warnings.warn(f"human set ({n}) larger than auto set ({m})", stacklevel=2)

    def __len__(self):
        return len(self.examples)

    def __getitem__(self, example_id):
        return self._by_id[example_id]

    @property
    def human_ids(self):
        return frozenset(ex.id for ex in self.examples if ex.provenance == HUMAN)

    @property
    def auto_ids(self):
        return frozenset(ex.id for ex in self.examples if ex.provenance == AUTO)

    @property
    def dim(self):
        return len(self.examples[0].features) if self.examples else 0

    def features_matrix(self, ids):
        """Feature rows for ``ids`` in the given order."""
        return np.array([self._by_id[i].features for i in ids], dtype=np.float64)

    def labels(self, ids):
        return np.array([self._by_id[i].assigned_label for i in ids], dtype=np.int64)

    def gold_labels(self, ids):
        """Evaluation-only view: gold label where known, assigned label otherwise."""
        out = []
        for i in ids:
            ex = self._by_id[i]
            out.append(ex.gold_label if ex.gold_label is not None else ex.assigned_label)
        return np.array(out, dtype=np.int64)


def make_dataset(examples, num_classes):
    """Validate feature lengths and label bounds and build a Dataset."""
    examples = tuple(examples)
    if not examples:
        raise EmptyDatasetError("dataset has no examples")
    dim = len(examples[0].features)
    for ex in examples:
        if len(ex.features) != dim:
            raise SchemaError(
                f"example {ex.id}: feature length {len(ex.features)} != {dim}"
            )
        if not 0 <= ex.assigned_label < num_classes:
            raise LabelOutOfRangeError(
                f"example {ex.id}: label {ex.assigned_label} outside [0,{num_classes})"
            )
        if ex.gold_label is not None and not 0 <= ex.gold_label < num_classes:
            raise LabelOutOfRangeError(
                f"example {ex.id}: gold label {ex.gold_label} outside [0,{num_classes})"
            )
    return Dataset(examples, num_classes)


def load_dataset(path, format=None, num_classes=None):
    """Load a dataset from a JSON-lines or delimited-text file.

    ``format`` is "jsonl" or "csv"; when None it is inferred from the file
    extension. With ``num_classes`` omitted, K is inferred as max(label)+1.
    """
    path = str(path)
    if format is None:
        format = "csv" if path.endswith((".csv", ".tsv", ".txt")) else "jsonl"
    if format == "jsonl":
        examples = _load_jsonl(path)
    elif format == "csv":
        examples = _load_csv(path)
    else:
        raise ValueError(f"unknown format: {format}")
    if not examples:
        raise EmptyDatasetError(f"{path} contains no records")
    if num_classes is None:
        num_classes = max(
            max(ex.assigned_label for ex in examples),
            max((ex.gold_label or 0) for ex in examples),
        ) + 1
    return make_dataset(examples, num_classes)


def _load_jsonl(path):
    examples = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"invalid JSON: {exc}", line=lineno) from exc
            try:
                examples.append(
                    Example(
                        id=int(rec["id"]),
                        features=tuple(float(v) for v in rec["features"]),
                        assigned_label=int(rec["label"]),
                        provenance=rec.get("provenance", AUTO),
                        gold_label=(
                            int(rec["gold_label"]) if rec.get("gold_label") is not None else None
                        ),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetFormatError(f"bad record: {exc!r}", line=lineno) from exc
    return examples


def _load_csv(path):
    examples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if header[:2] != ["id", "label"]:
            raise DatasetFormatError("header must start with id,label", line=1)
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                raise DatasetFormatError(
                    f"expected {width} fields, got {len(row)}", line=lineno
                )
            try:
                examples.append(
                    Example(
                        id=int(row[0]),
                        features=tuple(float(v) for v in row[2:]),
                        assigned_label=int(row[1]),
                    )
                )
            except ValueError as exc:
                raise DatasetFormatError(f"bad record: {exc}", line=lineno) from exc
    return examples


def save_dataset(d, path):
    """Write a dataset as JSON lines (id, features, label, gold_label, provenance)."""
    with open(path, "w") as fh:
        for ex in d.examples:
            rec = {
                "id": ex.id,
                "features": list(ex.features),
                "label": ex.assigned_label,
                "provenance": ex.provenance,
            }
            if ex.gold_label is not None:
                rec["gold_label"] = ex.gold_label
            fh.write(json.dumps(rec) + "\n")


def generate_synthetic(num_classes, per_class, dim, class_separation, seed):
    """Isotropic Gaussian clusters, one per class, deterministic per seed.

    Means sit on a regular simplex (scaled unit axes) when dim >= num_classes,
    so every pair of means is exactly class_separation apart; otherwise they
    are evenly spaced along the first axis.
    """
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    means = np.zeros((num_classes, dim))
    if dim >= num_classes:
        for k in range(num_classes):
            means[k, k] = class_separation / np.sqrt(2.0)
    else:
        for k in range(num_classes):
            means[k, 0] = k * class_separation
    rng = np.random.default_rng(seed)
    examples = []
    next_id = 0
    for k in range(num_classes):
        points = rng.normal(loc=means[k], scale=1.0, size=(per_class, dim))
        for row in points:
            examples.append(
                Example(
                    id=next_id,
                    features=tuple(float(v) for v in row),
                    assigned_label=k,
                    provenance=AUTO,
                    gold_label=k,
                )
            )
            next_id += 1
    return make_dataset(examples, num_classes)


def _round_half_away(x):
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


def inject_noise(d, spec):
    """Corrupt exactly round(rate * n_auto) auto labels, uniformly resampled.

    The original label is stored in gold_label; ids and features are untouched.
    """
    auto_ids = sorted(d.auto_ids)
    count = _round_half_away(spec.rate * len(auto_ids))
    rng = np.random.default_rng(spec.seed)
    chosen = set(rng.choice(auto_ids, size=count, replace=False)) if count else set()
    k = d.num_classes
    out = []
    for ex in d.examples:
        if ex.id in chosen:
            original = ex.assigned_label
            others = [c for c in range(k) if c != original]
            flipped = int(others[rng.integers(len(others))])
            out.append(replace(ex, assigned_label=flipped, gold_label=original))
        else:
            out.append(ex)
    return make_dataset(out, k)


def carve_human_set(d, per_class, seed):
    """Move per_class uncorrupted examples per class into the human set.

    Selection is seeded and class-balanced by construction; corrupted examples
    are never eligible.
    """
    if per_class == 0:
        warnings.warn("per_class=0: human set will be empty", stacklevel=2)
        return make_dataset(
            [replace(ex, provenance=AUTO) for ex in d.examples], d.num_classes
        )
    rng = np.random.default_rng(seed)
    chosen = set()
    for k in range(d.num_classes):
        eligible = sorted(
            ex.id
            for ex in d.examples
            if ex.assigned_label == k and not ex.is_corrupted()
        )
        if len(eligible) < per_class:
            raise CapacityError(
                f"class {k}: only {len(eligible)} clean examples, need {per_class}"
            )
        chosen.update(rng.choice(eligible, size=per_class, replace=False).tolist())
    out = [
        replace(ex, provenance=HUMAN if ex.id in chosen else AUTO)
        for ex in d.examples
    ]
    return make_dataset(out, d.num_classes)


def split_halves(ids, seed):
    """Partition an id set into two seeded halves (extra element to the first)."""
    ids = sorted(ids)
    if len(ids) < 2:
        raise SplitError(f"need at least 2 ids to split, got {len(ids)}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    shuffled = [ids[i] for i in perm]
    cut = (len(ids) + 1) // 2
    return frozenset(shuffled[:cut]), frozenset(shuffled[cut:])
