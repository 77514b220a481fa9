"""Temporal curation of weekly count data.

Weekly CSV releases are diffed against current values; a curator accepts
or rejects each proposed change; accepted changes rewrite a valid-time
history stored in SQLite, which provenance queries then interrogate.
"""

from .errors import TempocurateError
from .period import FOREVER, Period, coalesce, forever
from .store import CellKey, CellPredicate, Dimension, TemporalTable, parse_dimension

__all__ = [
    "FOREVER",
    "CellKey",
    "CellPredicate",
    "Dimension",
    "Period",
    "TemporalTable",
    "TempocurateError",
    "coalesce",
    "forever",
    "parse_dimension",
]
