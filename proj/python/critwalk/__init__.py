"""Python access to the critwalk campaign engine and its output schemas."""

import csv
import json
from pathlib import Path

from ._core import (
    CSV_HEADER,
    BudgetExceeded,
    InvalidArgument,
    SolverError,
    __version__,
    config_hash,
    cutset_bound,
    effective_resistance,
    fit_exponent,
    m_hat,
    m_hat_closed_equal,
    normalize_config,
    read_csv,
    return_probability_series,
    tree_generation_sizes,
    z_moment,
)
from ._core import run as _run
from ._core import verify_assumption_suite as _verify

CSV_COLUMNS = tuple(CSV_HEADER.split(","))

SUMMARY_KEYS = ("tool", "version", "config_hash", "experiment_id", "environment", "observable", "rows",
                "scales", "fit")


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def run(config, resume=False, stop_after=0):
    return _run(_text(config), resume, stop_after)


def verify_assumption_suite(config):
    return json.loads(_verify(_text(config)))


def load_summary(path):
    summary = json.loads(Path(path).read_text())
    missing = [k for k in SUMMARY_KEYS if k not in summary]
    if missing:
        raise ValueError(f"summary {path} lacks {', '.join(missing)}")
    return summary


def check_csv_schema(path):
    """Raise ValueError naming missing or unexpected columns; return the row count."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path} is empty")
        missing = [c for c in CSV_COLUMNS if c not in header]
        extra = [c for c in header if c not in CSV_COLUMNS]
        if missing or extra:
            raise ValueError(f"{path}: missing columns {missing}, unexpected columns {extra}")
        return sum(1 for _ in reader)
