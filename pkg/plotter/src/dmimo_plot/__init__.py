"""Static trade-off figures from simulator sweep CSVs."""
from .figures import (
    EXPECTED_HEADER,
    FORMATS,
    X_MODES,
    FigureSpec,
    SchemaError,
    SweepRow,
    build_figure,
    load_rows,
    render,
    resolve_format,
)

__all__ = [
    "EXPECTED_HEADER",
    "FORMATS",
    "X_MODES",
    "FigureSpec",
    "SchemaError",
    "SweepRow",
    "build_figure",
    "load_rows",
    "render",
    "resolve_format",
]
