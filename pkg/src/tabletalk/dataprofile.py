"""CSV ingestion and schema profiling.

Reads an RFC 4180 file into an immutable in-memory table, infers per-column
types and roles, detects a primary key, and renders the CREATE TABLE text
used for prompting and identifier repair. Nothing is cleaned or imputed:
every row is kept and missing cells stay null.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from datetime import date, datetime
from typing import Iterable, Optional

from .errors import PipelineError

COLUMN_TYPES = ("integer", "real", "boolean", "date", "datetime", "text")
ROLES = ("categorical", "continuous", "temporal", "identifier")

DATE_FORMATS = ("%Y-%m-%d", "%Y/%m/%d", "%d-%m-%Y")
DATETIME_FORMATS = tuple(
    d + t for d in DATE_FORMATS for t in (" %H:%M:%S", " %H:%M")
)

DDL_TYPE_KEYWORDS = {
    "integer": "INTEGER",
    "real": "REAL",
    "boolean": "BOOLEAN",
    "date": "DATE",
    "datetime": "DATETIME",
    "text": "TEXT",
}

# Numeric cardinality at or below min(this, row_count / 2) marks a numeric
# column as usable on a categorical axis; matches the pie slice cap.
CATEGORICAL_CAPABLE_CAP = 12

_INT_RE = re.compile(r"[+-]?\d+\Z")
_REAL_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\Z")
_BARE_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ProfileError(PipelineError):
    code = "PROFILE_ERROR"


class EmptyFile(ProfileError):
    code = "EMPTY_FILE"


class RaggedRow(ProfileError):
    code = "RAGGED_ROW"


class NotUtf8(ProfileError):
    code = "NOT_UTF8"


class DuplicateColumn(ProfileError):
    code = "DUPLICATE_COLUMN"


@dataclass(frozen=True)
class ColumnProfile:
    name: str
    inferred_type: str
    role: str
    null_count: int
    distinct_count: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inferred_type": self.inferred_type,
            "role": self.role,
            "null_count": self.null_count,
            "distinct_count": self.distinct_count,
        }


@dataclass(frozen=True)
class TableProfile:
    table_name: str
    row_count: int
    column_count: int
    columns: tuple[ColumnProfile, ...]
    primary_key: Optional[str]

    def to_dict(self) -> dict:
        return {
            "table_name": self.table_name,
            "row_count": self.row_count,
            "column_count": self.column_count,
            "columns": [c.to_dict() for c in self.columns],
            "primary_key": self.primary_key,
        }

    def column(self, name: str) -> Optional[ColumnProfile]:
        folded = name.casefold()
        for col in self.columns:
            if col.name.casefold() == folded:
                return col
        return None


@dataclass(frozen=True)
class Dataset:
    profile: TableProfile
    rows: tuple[tuple, ...]

    def column_values(self, name: str) -> list:
        folded = name.casefold()
        for i, col in enumerate(self.profile.columns):
            if col.name.casefold() == folded:
                return [row[i] for row in self.rows]
        raise KeyError(name)


def table_name_from_filename(name: str) -> str:
    """Derive a SQL-friendly table name from an uploaded file name."""
    stem = name.replace("\\", "/").rsplit("/", 1)[-1]
    stem = stem.rsplit(".", 1)[0] if "." in stem else stem
    cleaned = re.sub(r"[^A-Za-z0-9_]+", "_", stem).strip("_")
    if not cleaned:
        return "dataset"
    if cleaned[0].isdigit():
        cleaned = "t_" + cleaned
    return cleaned


def _parse_bool(text: str) -> bool:
    return text.casefold() == "true" or text == "1"


def _parse_date(text: str):
    for fmt in DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    return None


def _parse_datetime(text: str):
    for fmt in DATETIME_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    return None


def _looks_like_flag(name: str) -> bool:
    lname = name.casefold()
    return lname.startswith(("is_", "has_")) or lname.endswith("flag")


def _infer_type(name: str, values: list[str]) -> str:
    """Narrowest type accepting every non-null cell; text is the fallback."""
    if not values:
        return "text"
    folded = {v.casefold() for v in values}
    if folded <= {"true", "false"}:
        return "boolean"
    if folded <= {"0", "1"} and _looks_like_flag(name):
        return "boolean"
    if all(_INT_RE.match(v) for v in values):
        return "integer"
    if all(_REAL_RE.match(v) for v in values):
        return "real"
    if all(_parse_date(v) is not None for v in values):
        return "date"
    if all(_parse_datetime(v) is not None for v in values):
        return "datetime"
    return "text"


def parse_cell(text: Optional[str], inferred_type: str):
    """Coerce one raw cell to the column's inferred type ('' stays null)."""
    if text is None or text == "":
        return None
    if inferred_type == "integer":
        return int(text)
    if inferred_type == "real":
        return float(text)
    if inferred_type == "boolean":
        return _parse_bool(text)
    if inferred_type == "date":
        return _parse_date(text)
    if inferred_type == "datetime":
        return _parse_datetime(text)
    return text


def render_cell(value, inferred_type: str) -> str:
    """Inverse of parse_cell, used by the coercion soundness check."""
    if value is None:
        return ""
    if inferred_type == "boolean":
        return "true" if value else "false"
    if inferred_type == "date":
        return value.isoformat()
    if inferred_type == "datetime":
        return value.strftime("%Y-%m-%d %H:%M:%S")
    if inferred_type == "real":
        return repr(float(value))
    return str(value)


def _monotone_from_origin(values: list) -> bool:
    if not values or values[0] not in (0, 1):
        return False
    return all(b > a for a, b in zip(values, values[1:]))


def _assign_role(name: str, inferred_type: str, typed: list,
                 null_count: int, distinct_count: int, row_count: int) -> str:
    if inferred_type in ("date", "datetime"):
        return "temporal"
    non_null = [v for v in typed if v is not None]
    if null_count == 0 and distinct_count == row_count and row_count > 0:
        if name.casefold().endswith("id"):
            return "identifier"
        if inferred_type == "integer" and _monotone_from_origin(non_null):
            return "identifier"
    if inferred_type in ("integer", "real"):
        return "continuous"
    return "categorical"


def infer_column(name: str, cells: list[str]) -> ColumnProfile:
    """Profile one column from its raw text cells."""
    profile, _ = _analyze_column(name, cells)
    return profile


def _analyze_column(name: str, cells: list[str]) -> tuple[ColumnProfile, list]:
    non_null = [c for c in cells if c != ""]
    inferred_type = _infer_type(name, non_null)
    typed = [parse_cell(c, inferred_type) for c in cells]
    null_count = len(cells) - len(non_null)
    distinct_count = len({v for v in typed if v is not None})
    role = _assign_role(name, inferred_type, typed, null_count,
                        distinct_count, len(cells))
    profile = ColumnProfile(
        name=name,
        inferred_type=inferred_type,
        role=role,
        null_count=null_count,
        distinct_count=distinct_count,
    )
    return profile, typed


def categorical_capable(column: ColumnProfile, row_count: int) -> bool:
    """Whether a numeric column's cardinality is low enough to act categorical."""
    if column.inferred_type not in ("integer", "real"):
        return False
    cap = min(CATEGORICAL_CAPABLE_CAP, row_count / 2)
    return column.distinct_count <= cap


def _pick_primary_key(columns: Iterable[ColumnProfile], row_count: int) -> Optional[str]:
    qualifying = [
        c for c in columns
        if c.distinct_count == row_count and c.null_count == 0
    ]
    if not qualifying:
        return None
    for col in qualifying:
        if col.role == "identifier":
            return col.name
    return qualifying[0].name


def detect_primary_key(dataset: Dataset) -> Optional[str]:
    """First unique non-null column in file order, id-role columns first."""
    return _pick_primary_key(dataset.profile.columns, dataset.profile.row_count)


def ingest_csv(raw: bytes, name: str) -> Dataset:
    """Parse CSV bytes into a typed, profiled, immutable Dataset."""
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise NotUtf8(f"file {name!r} is not valid UTF-8: {exc}") from None

    reader = csv.reader(io.StringIO(text, newline=""))
    records = [row for row in reader if row]
    if len(records) < 2:
        raise EmptyFile(f"file {name!r} has no data rows")

    header, data = records[0], records[1:]
    width = len(header)
    seen = set()
    for col in header:
        folded = col.casefold()
        if folded in seen:
            raise DuplicateColumn(f"duplicate column name {col!r}")
        seen.add(folded)
    for i, row in enumerate(data, start=2):
        if len(row) != width:
            raise RaggedRow(
                f"row {i} has {len(row)} cells, header has {width}"
            )

    columns: list[ColumnProfile] = []
    typed_columns: list[list] = []
    for idx, col_name in enumerate(header):
        cells = [row[idx] for row in data]
        profile, typed = _analyze_column(col_name, cells)
        columns.append(profile)
        typed_columns.append(typed)

    row_count = len(data)
    table = TableProfile(
        table_name=table_name_from_filename(name),
        row_count=row_count,
        column_count=width,
        columns=tuple(columns),
        primary_key=_pick_primary_key(columns, row_count),
    )
    rows = tuple(zip(*typed_columns)) if typed_columns and row_count else tuple()
    return Dataset(profile=table, rows=rows)


def quote_identifier(name: str) -> str:
    if _BARE_IDENT_RE.match(name):
        return name
    return '"' + name.replace('"', '""') + '"'


def render_ddl(profile: TableProfile) -> str:
    """Single-line CREATE TABLE statement for prompts and docs."""
    parts = []
    for col in profile.columns:
        piece = f"{quote_identifier(col.name)} {DDL_TYPE_KEYWORDS[col.inferred_type]}"
        if profile.primary_key is not None and col.name == profile.primary_key:
            piece += " PRIMARY KEY"
        parts.append(piece)
    return f"CREATE TABLE {quote_identifier(profile.table_name)} ({', '.join(parts)});"
