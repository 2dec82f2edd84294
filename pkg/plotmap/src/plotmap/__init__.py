from .render import (
    EXPECTED_COLUMNS,
    MapRow,
    SchemaError,
    bin_counts,
    bin_index,
    read_rows,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "EXPECTED_COLUMNS",
    "MapRow",
    "SchemaError",
    "bin_counts",
    "bin_index",
    "read_rows",
    "render",
    "__version__",
]
