from __future__ import annotations

from importlib import resources

import pytest

from tabletalk.dataprofile import Dataset, ingest_csv
from tabletalk.engine import ResultColumn, ResultTable


def packaged_csv(name: str) -> bytes:
    return resources.files("tabletalk").joinpath(f"data/{name}").read_bytes()


@pytest.fixture(scope="session")
def bowling() -> Dataset:
    return ingest_csv(packaged_csv("bowling_odi.csv"), "bowling_odi.csv")


@pytest.fixture(scope="session")
def batting() -> Dataset:
    return ingest_csv(packaged_csv("batting_odi.csv"), "batting_odi.csv")


def make_result(columns: list[tuple[str, str]],
                rows: list[tuple]) -> ResultTable:
    """Build a ResultTable directly from (name, role) pairs and row tuples."""
    return ResultTable(
        columns=tuple(ResultColumn(name, role) for name, role in columns),
        rows=tuple(tuple(row) for row in rows),
    )


def shaped_result(n_categorical: int, n_continuous: int, n_temporal: int,
                  n_rows: int = 5) -> ResultTable:
    """Small synthetic result with the requested role census."""
    import datetime as dt

    columns: list[tuple[str, str]] = []
    columns += [(f"cat{i}", "categorical") for i in range(n_categorical)]
    columns += [(f"num{i}", "continuous") for i in range(n_continuous)]
    columns += [(f"day{i}", "temporal") for i in range(n_temporal)]
    rows = []
    for r in range(n_rows):
        row: list = []
        row += [f"label{r}" for _ in range(n_categorical)]
        row += [float(r + 1 + j) for j in range(n_continuous)]
        row += [dt.date(2024, 1, r + 1) for _ in range(n_temporal)]
        rows.append(tuple(row))
    return make_result(columns, rows)
