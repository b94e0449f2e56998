"""In-memory executor for the SELECT subset.

Evaluation order is fixed: filter, group, project, deduplicate, sort, limit.
Nulls never match a comparison, aggregates skip them, and they sort last.
Division by zero produces a null cell rather than failing the query.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime
from functools import cmp_to_key
from typing import Optional

from . import dataprofile, sqlkit
from .dataprofile import Dataset
from .errors import PipelineError
from .sqlkit import (
    Aggregate, Binary, ColumnRef, Expr, InList, Literal, SqlAst, Unary,
)


class ExecutionError(PipelineError):
    code = "EXECUTION_ERROR"


class UnknownColumn(ExecutionError):
    code = "UNKNOWN_COLUMN"


class UnknownTable(ExecutionError):
    code = "UNKNOWN_TABLE"


class TypeMismatch(ExecutionError):
    code = "TYPE_MISMATCH"


@dataclass(frozen=True)
class ResultColumn:
    name: str
    role: str  # same vocabulary as column profiling


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[ResultColumn, ...]
    rows: tuple[tuple, ...]

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    def column_values(self, index: int) -> list:
        return [row[index] for row in self.rows]

    def to_dict(self) -> dict:
        return {
            "columns": [
                {"name": c.name, "role": c.role} for c in self.columns
            ],
            "rows": [
                [_json_value(v) for v in row] for row in self.rows
            ],
        }


def _json_value(value):
    if isinstance(value, datetime):
        return value.strftime("%Y-%m-%d %H:%M:%S")
    if isinstance(value, date):
        return value.isoformat()
    return value


# ---------------------------------------------------------------------------
# Value model
# ---------------------------------------------------------------------------

def _family(value) -> str:
    if isinstance(value, bool):
        return "numeric"
    if isinstance(value, (int, float)):
        return "numeric"
    if isinstance(value, datetime):
        return "datetime"
    if isinstance(value, date):
        return "date"
    if isinstance(value, str):
        return "text"
    raise TypeMismatch(f"unsupported value {value!r}")


def _coerce_pair(a, b):
    """Align families for comparison; text promotes to a temporal peer."""
    fa, fb = _family(a), _family(b)
    if fa == fb:
        return a, b
    if fa == "text" and fb in ("date", "datetime"):
        converted = _parse_temporal(a, fb)
        if converted is not None:
            return converted, b
    if fb == "text" and fa in ("date", "datetime"):
        converted = _parse_temporal(b, fa)
        if converted is not None:
            return a, converted
    raise TypeMismatch(f"cannot compare {fa} with {fb}")


def _parse_temporal(text: str, family: str):
    if family == "date":
        return dataprofile._parse_date(text)
    parsed = dataprofile._parse_datetime(text)
    if parsed is None:
        as_date = dataprofile._parse_date(text)
        if as_date is not None:
            return datetime(as_date.year, as_date.month, as_date.day)
    return parsed


def _compare(op: str, a, b) -> bool:
    # Null never satisfies any comparison, including equality with null.
    if a is None or b is None:
        return False
    a, b = _coerce_pair(a, b)
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _as_bool(value) -> bool:
    if value is None:
        return False
    if isinstance(value, bool):
        return value
    raise TypeMismatch(f"expected a boolean condition, got {value!r}")


def _require_number(value, context: str):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeMismatch(f"{context} requires a number, got {value!r}")
    return value


def _arith(op: str, a, b):
    if a is None or b is None:
        return None
    a = _require_number(a, f"operator {op}")
    b = _require_number(b, f"operator {op}")
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        return None
    return a / b


# ---------------------------------------------------------------------------
# Aggregates
# ---------------------------------------------------------------------------

def _aggregate(fn: str, values: list):
    """Compute one aggregate over already-collected column values."""
    if fn == "COUNT":
        return len([v for v in values if v is not None])
    non_null = [v for v in values if v is not None]
    if not non_null:
        return None
    if fn in ("SUM", "AVG"):
        for v in non_null:
            _require_number(v, fn)
        total = sum(non_null)
        if fn == "SUM":
            return total
        return total / len(non_null)
    # MIN / MAX accept any single comparable family
    families = {_family(v) for v in non_null}
    if len(families) > 1:
        raise TypeMismatch(f"{fn} over mixed value types")
    return min(non_null) if fn == "MIN" else max(non_null)


# ---------------------------------------------------------------------------
# Evaluation contexts
# ---------------------------------------------------------------------------

class _RowContext:
    """Evaluates expressions against one source row."""

    def __init__(self, index: dict[str, int], row: tuple):
        self.index = index
        self.row = row

    def lookup(self, ref: ColumnRef):
        pos = self.index.get(ref.name.casefold())
        if pos is None:
            raise UnknownColumn(f"unknown column {ref.name!r}")
        return self.row[pos]

    def eval(self, expr: Expr):
        if isinstance(expr, ColumnRef):
            return self.lookup(expr)
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, Unary):
            return not _as_bool(self.eval(expr.operand))
        if isinstance(expr, InList):
            value = self.eval(expr.expr)
            return any(_compare("=", value, lit.value)
                       for lit in expr.literals)
        if isinstance(expr, Binary):
            if expr.op in ("AND", "OR"):
                lhs = _as_bool(self.eval(expr.lhs))
                if expr.op == "AND":
                    return lhs and _as_bool(self.eval(expr.rhs))
                return lhs or _as_bool(self.eval(expr.rhs))
            if expr.op in sqlkit.COMPARISON_OPS:
                return _compare(expr.op, self.eval(expr.lhs),
                                self.eval(expr.rhs))
            return _arith(expr.op, self.eval(expr.lhs), self.eval(expr.rhs))
        if isinstance(expr, Aggregate):
            raise ExecutionError("aggregate outside a grouped context")
        raise ExecutionError(f"cannot evaluate {expr!r}")


class _GroupContext(_RowContext):
    """Evaluates expressions over a group of rows.

    Plain column references take the value from the first row of the group
    (validation guarantees they are grouping columns, so any row agrees);
    aggregates collapse the whole group.
    """

    def __init__(self, index: dict[str, int], rows: list[tuple]):
        super().__init__(index, rows[0] if rows else ())
        self.rows = rows

    def lookup(self, ref: ColumnRef):
        if not self.rows:
            raise ExecutionError(
                f"column {ref.name!r} has no value in an empty group")
        return super().lookup(ref)

    def eval(self, expr: Expr):
        if isinstance(expr, Aggregate):
            if expr.arg is None:
                return len(self.rows)
            pos = self.index.get(expr.arg.name.casefold())
            if pos is None:
                raise UnknownColumn(f"unknown column {expr.arg.name!r}")
            return _aggregate(expr.fn, [row[pos] for row in self.rows])
        return super().eval(expr)


# ---------------------------------------------------------------------------
# Role inference for output columns
# ---------------------------------------------------------------------------

def _role_from_values(name: str, values: list) -> str:
    non_null = [v for v in values if v is not None]
    if non_null and all(isinstance(v, (date, datetime)) for v in non_null):
        return "temporal"
    distinct = len(set(non_null))
    row_count = len(values)
    numeric = bool(non_null) and all(
        isinstance(v, (int, float)) and not isinstance(v, bool)
        for v in non_null)
    if row_count > 0 and distinct == row_count and len(non_null) == row_count:
        if name.casefold().endswith("id"):
            return "identifier"
        if numeric and all(isinstance(v, int) for v in non_null) \
                and dataprofile._monotone_from_origin(non_null):
            return "identifier"
    if numeric:
        return "continuous"
    return "categorical"


# ---------------------------------------------------------------------------
# Executor
# ---------------------------------------------------------------------------

def _output_name(item: sqlkit.SelectItem) -> str:
    if item.alias is not None:
        return item.alias
    return sqlkit.print_expr(item.expr)


def _order_key_exprs(ast: SqlAst, index: dict[str, int]) -> list[tuple[Expr, bool]]:
    """Resolve ORDER BY expressions: source columns win over aliases;
    alias references are replaced by the expression they name."""
    alias_exprs = {
        item.alias.casefold(): item.expr
        for item in ast.items if item.alias is not None
    }

    def substitute(ref: ColumnRef) -> Expr:
        folded = ref.name.casefold()
        if folded in index:
            return ref
        if folded in alias_exprs:
            return alias_exprs[folded]
        raise UnknownColumn(f"unknown column {ref.name!r} in ORDER BY")

    resolved = []
    for order in ast.order_by:
        resolved.append((sqlkit.map_expr_refs(order.expr, substitute),
                         order.descending))
    return resolved


def _sort_rows(pairs: list[tuple[tuple, tuple]],
               directions: list[bool]) -> list[tuple]:
    """Stable sort of (projected_row, keys) pairs; nulls always sort last."""

    def compare(left, right) -> int:
        for (a, b), descending in zip(zip(left[1], right[1]), directions):
            if a is None and b is None:
                continue
            if a is None:
                return 1
            if b is None:
                return -1
            try:
                if a == b:
                    continue
                result = -1 if a < b else 1
            except TypeError:
                raise TypeMismatch(
                    "ORDER BY saw values that cannot be compared") from None
            return -result if descending else result
        return 0

    pairs.sort(key=cmp_to_key(compare))
    return [projected for projected, _ in pairs]


def execute(ast: SqlAst, dataset: Dataset) -> ResultTable:
    """Run a validated statement against an in-memory dataset."""
    profile = dataset.profile
    if ast.source.casefold() != profile.table_name.casefold():
        raise UnknownTable(
            f"query targets {ast.source!r}, dataset is {profile.table_name!r}")
    index = {c.name.casefold(): i for i, c in enumerate(profile.columns)}

    rows = list(dataset.rows)
    if ast.where is not None:
        rows = [row for row in rows
                if _as_bool(_RowContext(index, row).eval(ast.where))]

    grouped = bool(ast.group_by) or \
        any(sqlkit.contains_aggregate(i.expr) for i in ast.items) or \
        any(sqlkit.contains_aggregate(o.expr) for o in ast.order_by)

    order_exprs = _order_key_exprs(ast, index)
    directions = [descending for _, descending in order_exprs]

    projected_pairs: list[tuple[tuple, tuple]] = []
    if grouped:
        groups: dict[tuple, list[tuple]] = {}
        if ast.group_by:
            key_positions = []
            for ref in ast.group_by:
                pos = index.get(ref.name.casefold())
                if pos is None:
                    raise UnknownColumn(f"unknown column {ref.name!r}")
                key_positions.append(pos)
            for row in rows:
                key = tuple(row[pos] for pos in key_positions)
                groups.setdefault(key, []).append(row)
        else:
            groups[()] = rows  # a single group, present even with no rows
        for group_rows in groups.values():
            ctx = _GroupContext(index, group_rows)
            projected = tuple(ctx.eval(item.expr) for item in ast.items)
            keys = tuple(ctx.eval(expr) for expr, _ in order_exprs)
            projected_pairs.append((projected, keys))
    else:
        for row in rows:
            ctx = _RowContext(index, row)
            projected = tuple(ctx.eval(item.expr) for item in ast.items)
            keys = tuple(ctx.eval(expr) for expr, _ in order_exprs)
            projected_pairs.append((projected, keys))

    if ast.distinct:
        seen = set()
        deduped = []
        for projected, keys in projected_pairs:
            if projected in seen:
                continue
            seen.add(projected)
            deduped.append((projected, keys))
        projected_pairs = deduped

    if order_exprs:
        out_rows = _sort_rows(projected_pairs, directions)
    else:
        out_rows = [projected for projected, _ in projected_pairs]

    if ast.limit is not None:
        out_rows = out_rows[:ast.limit]

    names = [_output_name(item) for item in ast.items]
    columns = tuple(
        ResultColumn(name=name,
                     role=_role_from_values(name, [row[i] for row in out_rows]))
        for i, name in enumerate(names)
    )
    return ResultTable(columns=columns, rows=tuple(out_rows))
