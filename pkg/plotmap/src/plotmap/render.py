"""Scatter rendering of per-example training dynamics.

Input is the cartography CSV written by the training pipeline:
id,confidence,variability,correctness,assigned_label,provenance. The schema
is enforced exactly; anything else is a hard error naming the column.

Every image gets a `<img>.meta.json` sidecar with the point count and the
per-bin counts so downstream checks never have to diff pixels.
"""

import csv
import json
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

EXPECTED_COLUMNS = (
    "id",
    "confidence",
    "variability",
    "correctness",
    "assigned_label",
    "provenance",
)

# column -> inclusive value range enforced at parse time
RANGES = {
    "confidence": (0.0, 1.0),
    "variability": (0.0, 0.5),
    "correctness": (0.0, 1.0),
}


class SchemaError(Exception):
    """CSV does not match the cartography schema; carries the column name."""

    def __init__(self, message, column):
        super().__init__(message)
        self.column = column


@dataclass(frozen=True)
class MapRow:
    id: str
    confidence: float
    variability: float
    correctness: float
    assigned_label: str
    provenance: str


def read_rows(path):
    """Parse and validate the CSV; raises SchemaError on any mismatch."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("file has no header row", column="id")
        for col in EXPECTED_COLUMNS:
            if col not in header:
                raise SchemaError(f"missing column: {col}", column=col)
        for col in header:
            if col not in EXPECTED_COLUMNS:
                raise SchemaError(f"unexpected column: {col}", column=col)
        if list(header) != list(EXPECTED_COLUMNS):
            raise SchemaError(
                f"columns out of order: {header[0]}", column=header[0]
            )
        rows = []
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != len(EXPECTED_COLUMNS):
                raise SchemaError(
                    f"line {lineno}: expected {len(EXPECTED_COLUMNS)} fields, "
                    f"got {len(fields)}",
                    column=EXPECTED_COLUMNS[min(len(fields), 5)],
                )
            record = dict(zip(EXPECTED_COLUMNS, fields))
            values = {}
            for col, (lo, hi) in RANGES.items():
                try:
                    values[col] = float(record[col])
                except ValueError:
                    raise SchemaError(
                        f"line {lineno}: column {col} is not a number: "
                        f"{record[col]!r}",
                        column=col,
                    )
                if not lo <= values[col] <= hi:
                    raise SchemaError(
                        f"line {lineno}: column {col} out of [{lo},{hi}]: "
                        f"{values[col]}",
                        column=col,
                    )
            rows.append(
                MapRow(
                    id=record["id"],
                    confidence=values["confidence"],
                    variability=values["variability"],
                    correctness=values["correctness"],
                    assigned_label=record["assigned_label"],
                    provenance=record["provenance"],
                )
            )
    return rows


def bin_index(correctness, bins):
    """Equal intervals over [0,1]; correctness 1.0 folds into the top bin."""
    return min(int(correctness * bins), bins - 1)


def bin_counts(rows, bins):
    counts = [0] * bins
    for row in rows:
        counts[bin_index(row.correctness, bins)] += 1
    return counts


def render(csv_path, out_path, bins=5, title=None):
    """Draw the map and write both the image and its metadata sidecar.

    Returns the sidecar dict. bins must be >= 2.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    rows = read_rows(csv_path)
    counts = bin_counts(rows, bins)

    fig, ax = plt.subplots(figsize=(6, 5))
    cmap = matplotlib.colormaps["viridis"].resampled(bins)
    for b in range(bins):
        members = [r for r in rows if bin_index(r.correctness, bins) == b]
        lo, hi = b / bins, (b + 1) / bins
        label = f"correctness [{lo:.2f}, {hi:.2f}{']' if b == bins - 1 else ')'}"
        ax.scatter(
            [r.variability for r in members],
            [r.confidence for r in members],
            s=12,
            color=cmap(b),
            label=label,
        )
    ax.set_xlim(0.0, 0.5)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("variability")
    ax.set_ylabel("confidence")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)

    meta = {
        "bins": bins,
        "bin_counts": counts,
        "point_count": len(rows),
        "source": str(csv_path),
    }
    with open(f"{out_path}.meta.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return meta
