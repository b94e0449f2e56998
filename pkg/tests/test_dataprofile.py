"""Profiling: type inference, roles, keys, DDL, and ingestion errors."""
from __future__ import annotations

import csv
import datetime as dt
import io
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabletalk import dataprofile as dp


def ingest(text: str, name: str = "t.csv") -> dp.Dataset:
    return dp.ingest_csv(text.encode("utf-8"), name)


def bowling_bytes() -> bytes:
    return resources.files("tabletalk").joinpath(
        "data/bowling_odi.csv").read_bytes()


# -- type inference ---------------------------------------------------------

@pytest.mark.parametrize("cells,expected", [
    (["1", "2", "-3"], "integer"),
    (["1.5", "2", "-3e2"], "real"),
    (["true", "FALSE", "True"], "boolean"),
    (["2021-01-02", "1999/12/31", "02-03-2020"], "date"),
    (["2021-01-02 10:00:00", "2021-01-02 10:00"], "datetime"),
    (["abc", "1"], "text"),
    (["1", ""], "integer"),
])
def test_infer_type_table(cells: list[str], expected: str) -> None:
    non_null = [c for c in cells if c != ""]
    assert dp._infer_type("col", non_null) == expected


def test_zero_one_is_boolean_only_for_flag_names() -> None:
    assert dp._infer_type("is_active", ["0", "1"]) == "boolean"
    assert dp._infer_type("retired_flag", ["0", "1"]) == "boolean"
    assert dp._infer_type("wickets", ["0", "1"]) == "integer"


def test_all_null_column_is_text() -> None:
    ds = ingest("a,b\n1,\n2,\n")
    col = ds.profile.column("b")
    assert col is not None
    assert col.inferred_type == "text"
    assert col.null_count == 2
    assert col.distinct_count == 0


def test_date_wins_over_datetime() -> None:
    assert dp._infer_type("d", ["2020-01-01"]) == "date"


# -- roles ------------------------------------------------------------------

def test_roles_from_small_table() -> None:
    ds = ingest(
        "player_id,name,score,joined\n"
        "1,ann,10.5,2020-01-01\n"
        "2,bob,11.5,2020-01-02\n"
        "3,cat,12.0,2020-01-03\n"
    )
    roles = {c.name: c.role for c in ds.profile.columns}
    assert roles == {
        "player_id": "identifier",
        "name": "categorical",
        "score": "continuous",
        "joined": "temporal",
    }


def test_identifier_requires_unique_and_non_null() -> None:
    ds = ingest("player_id,x\n1,a\n1,b\n")
    assert ds.profile.column("player_id").role == "continuous"


def test_monotone_integer_from_origin_is_identifier() -> None:
    ds = ingest("rank,x\n1,a\n2,b\n5,c\n")
    assert ds.profile.column("rank").role == "identifier"
    ds2 = ingest("rank,x\n3,a\n4,b\n5,c\n")
    assert ds2.profile.column("rank").role == "continuous"


def test_unique_text_is_still_categorical() -> None:
    ds = ingest("name,x\nann,1\nbob,2\n")
    assert ds.profile.column("name").role == "categorical"


# -- primary key ------------------------------------------------------------

def test_primary_key_prefers_identifier_role() -> None:
    ds = ingest("name,user_id\nann,1\nbob,2\n")
    assert ds.profile.primary_key == "user_id"


def test_primary_key_falls_back_to_first_unique() -> None:
    ds = ingest("name,score\nann,4\nbob,4\n")
    assert ds.profile.primary_key == "name"


def test_no_primary_key_when_nothing_unique() -> None:
    ds = ingest("a,b\nx,1\nx,1\n")
    assert ds.profile.primary_key is None


# -- ingestion errors -------------------------------------------------------

def test_empty_file_rejected() -> None:
    with pytest.raises(dp.EmptyFile) as err:
        ingest("a,b\n")
    assert err.value.payload()["code"] == "EMPTY_FILE"


def test_ragged_row_rejected_with_row_number() -> None:
    with pytest.raises(dp.RaggedRow) as err:
        ingest("a,b\n1,2\n3\n")
    assert "row 3" in str(err.value)


def test_duplicate_header_rejected_casefolded() -> None:
    with pytest.raises(dp.DuplicateColumn):
        ingest("Name,name\n1,2\n")


def test_non_utf8_rejected() -> None:
    with pytest.raises(dp.NotUtf8):
        dp.ingest_csv(b"a,b\n\xff\xfe,2\n", "t.csv")


def test_utf8_bom_is_stripped() -> None:
    ds = dp.ingest_csv(b"\xef\xbb\xbfa,b\n1,2\n", "t.csv")
    assert ds.profile.columns[0].name == "a"


# -- table names and DDL ----------------------------------------------------

@pytest.mark.parametrize("filename,expected", [
    ("bowling_odi.csv", "bowling_odi"),
    ("My Data (v2).csv", "My_Data_v2"),
    ("2023 stats.csv", "t_2023_stats"),
    ("...", "dataset"),
    ("dir/sub/file.name.csv", "file_name"),
])
def test_table_name_from_filename(filename: str, expected: str) -> None:
    assert dp.table_name_from_filename(filename) == expected


def test_ddl_for_packaged_bowling_table() -> None:
    ds = dp.ingest_csv(bowling_bytes(), "bowling_odi.csv")
    assert dp.render_ddl(ds.profile) == (
        "CREATE TABLE bowling_odi (Player TEXT PRIMARY KEY, Span TEXT, "
        "Mat INTEGER, Inns INTEGER, Balls INTEGER, Overs REAL, "
        "Mdns INTEGER, Runs INTEGER, Wkts INTEGER, Ave REAL, Econ REAL, "
        "SR REAL, BBI TEXT);"
    )


def test_ddl_quotes_awkward_identifiers() -> None:
    ds = ingest("100,player name\n1,ann\n2,bob\n", "odd file.csv")
    ddl = dp.render_ddl(ds.profile)
    assert '"100" INTEGER' in ddl
    assert '"player name" TEXT' in ddl
    assert ddl.startswith("CREATE TABLE odd_file (")
    assert ddl.endswith(";")
    assert "\n" not in ddl


# -- packaged sample --------------------------------------------------------

def test_packaged_bowling_profile() -> None:
    ds = dp.ingest_csv(bowling_bytes(), "bowling_odi.csv")
    assert ds.profile.row_count == 24
    assert ds.profile.column_count == 13
    assert ds.profile.primary_key == "Player"
    assert ds.profile.column("Wkts").inferred_type == "integer"
    assert ds.profile.column("Wkts").role == "continuous"
    assert ds.profile.column("Player").role == "categorical"
    assert max(ds.column_values("Wkts")) == 534


def test_profiling_is_deterministic() -> None:
    raw = bowling_bytes()
    a = dp.ingest_csv(raw, "bowling_odi.csv")
    b = dp.ingest_csv(raw, "bowling_odi.csv")
    assert a.profile.to_dict() == b.profile.to_dict()
    assert a.rows == b.rows


# -- categorical capability -------------------------------------------------

def test_categorical_capable_cap() -> None:
    col = dp.ColumnProfile("x", "integer", "continuous", 0, 12)
    assert dp.categorical_capable(col, 100)
    col13 = dp.ColumnProfile("x", "integer", "continuous", 0, 13)
    assert not dp.categorical_capable(col13, 100)
    # halved by small row counts
    col5 = dp.ColumnProfile("x", "integer", "continuous", 0, 5)
    assert not dp.categorical_capable(col5, 8)
    assert dp.categorical_capable(col5, 10)
    text_col = dp.ColumnProfile("x", "text", "categorical", 0, 2)
    assert not dp.categorical_capable(text_col, 100)


# -- round-trip properties --------------------------------------------------

_safe_text = st.text(
    alphabet=st.characters(
        whitelist_categories=("Lu", "Ll", "Nd", "Zs", "Po"),
        blacklist_characters="\r\n",
    ),
    min_size=1, max_size=12,
).map(lambda s: "x" + s.strip())

_column_kind = st.sampled_from(
    ("integer", "real", "boolean", "date", "datetime", "text"))


def _value_strategy(kind: str):
    if kind == "integer":
        return st.integers(min_value=-10**9, max_value=10**9)
    if kind == "real":
        return st.floats(allow_nan=False, allow_infinity=False,
                         min_value=-1e12, max_value=1e12)
    if kind == "boolean":
        return st.booleans()
    if kind == "date":
        return st.dates(min_value=dt.date(1000, 1, 1),
                        max_value=dt.date(9999, 12, 31))
    if kind == "datetime":
        return st.datetimes(
            min_value=dt.datetime(1000, 1, 1),
            max_value=dt.datetime(9999, 12, 28, 23, 59, 59),
        ).map(lambda d: d.replace(microsecond=0))
    return _safe_text


@st.composite
def _typed_table(draw):
    n_cols = draw(st.integers(min_value=1, max_value=4))
    n_rows = draw(st.integers(min_value=1, max_value=8))
    kinds = [draw(_column_kind) for _ in range(n_cols)]
    columns = []
    for kind in kinds:
        values = draw(st.lists(
            st.one_of(st.none(), _value_strategy(kind)),
            min_size=n_rows, max_size=n_rows))
        if all(v is None for v in values):
            idx = draw(st.integers(min_value=0, max_value=n_rows - 1))
            pinned = draw(_value_strategy(kind))
            values = values[:idx] + [pinned] + values[idx + 1:]
        columns.append(values)
    return kinds, columns


@settings(max_examples=60, deadline=None)
@given(_typed_table())
def test_render_ingest_round_trip(table) -> None:
    """Rendering typed cells to CSV and ingesting reproduces the values."""
    kinds, columns = table
    names = [f"c{i}x" for i in range(len(kinds))]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*columns):
        writer.writerow([dp.render_cell(v, k) for v, k in zip(row, kinds)])
    ds = ingest(buf.getvalue())
    for i, (kind, values) in enumerate(zip(kinds, columns)):
        assert ds.profile.columns[i].inferred_type == kind
        assert ds.column_values(names[i]) == values


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(dp.COLUMN_TYPES), st.data())
def test_parse_render_cell_inverse(kind: str, data) -> None:
    value = data.draw(_value_strategy(kind))
    assert dp.parse_cell(dp.render_cell(value, kind), kind) == value
