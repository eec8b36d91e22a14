"""Mixed-type tabular denoising diffusion with quality, privacy and utility metrics."""

__version__ = "0.1.0"

from .data import (
    ColumnSpec,
    DataError,
    EncodedMatrix,
    SchemaError,
    TableEncoder,
    TableSchema,
    fit_transform,
    load_csv,
    split,
    write_csv,
)
from .model import TabDDPM
from .schedule import NoiseSchedule, make_schedule, sin_time_embed

__all__ = [
    "ColumnSpec",
    "DataError",
    "EncodedMatrix",
    "NoiseSchedule",
    "SchemaError",
    "TabDDPM",
    "TableEncoder",
    "TableSchema",
    "fit_transform",
    "load_csv",
    "make_schedule",
    "sin_time_embed",
    "split",
    "write_csv",
]
