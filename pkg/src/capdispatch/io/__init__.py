"""Dataset loading, the bundled feeder and report export."""

from capdispatch.io.dataset import (
    BUNDLED_PATHS,
    Dataset,
    DatasetError,
    bundled_khodabandelu,
    load_dataset,
    read_dataset,
    with_overrides,
    write_dataset,
)
from capdispatch.io.export import export_schedule, schedule_report, write_report

__all__ = [
    "BUNDLED_PATHS",
    "Dataset",
    "DatasetError",
    "bundled_khodabandelu",
    "export_schedule",
    "load_dataset",
    "read_dataset",
    "schedule_report",
    "with_overrides",
    "write_dataset",
    "write_report",
]
