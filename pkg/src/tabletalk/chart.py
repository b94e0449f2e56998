"""Chart selection and chart-spec construction.

Selection has three tiers: an explicit request in the question wins whenever
that chart can be built from the result at all; very wide results default to
a bar or line overview; everything else walks a fixed cascade whose first
satisfied rule decides. The cascade rules look only at the column-role shape
of the result, plus two value-level guards (bar label cardinality, pie slice
count and sign).
"""
from __future__ import annotations

import html
import json
import re
from dataclasses import dataclass
from typing import Optional

from .engine import ResultTable, _json_value

BAR, BOX, LINE, PIE, SCATTER = "bar", "box", "line", "pie", "scatter"
HISTOGRAM, AREA, BUBBLE, RADAR, HEATMAP = (
    "histogram", "area", "bubble", "radar", "heatmap")

CHART_TYPES = (BAR, BOX, LINE, PIE, SCATTER,
               HISTOGRAM, AREA, BUBBLE, RADAR, HEATMAP)
CASCADE_ORDER = CHART_TYPES  # evaluation order is the declaration order

OK = "ok"
EMPTY_DATASET = "empty-dataset"
NO_SUITABLE_CHART = "no-suitable-chart"

BAR_LABEL_CARDINALITY_CAP = 50
PIE_MIN_SLICES = 2
PIE_MAX_SLICES = 12
WIDE_RESULT_COLUMNS = 5  # strictly more than this triggers the overview default

_QUESTION_TOKEN_RE = re.compile(r"[a-z0-9']+")
_NEGATION_TOKENS = {"not", "no", "don't", "dont", "without"}
_NEGATION_WINDOW = 3


@dataclass(frozen=True)
class DataShape:
    """Column-role census of a result table."""
    n_rows: int
    n_columns: int
    n_categorical: int
    n_continuous: int
    n_temporal: int

    @property
    def arity(self) -> str:
        if self.n_continuous == 0:
            return "none"
        if self.n_continuous == 1:
            return "univariate"
        if self.n_continuous == 2:
            return "bivariate"
        return "multivariate"

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_columns": self.n_columns,
            "n_categorical": self.n_categorical,
            "n_continuous": self.n_continuous,
            "n_temporal": self.n_temporal,
            "arity": self.arity,
        }


@dataclass(frozen=True)
class ChartDecision:
    chart: Optional[str]
    status: str          # ok | empty-dataset | no-suitable-chart
    source: str = ""     # requested | wide-default | cascade

    def to_dict(self) -> dict:
        return {"chart": self.chart, "status": self.status,
                "source": self.source}


def classify_shape(result: ResultTable) -> DataShape:
    """Identifier columns count as categorical: both act as labels."""
    n_cat = sum(1 for c in result.columns
                if c.role in ("categorical", "identifier"))
    n_cont = sum(1 for c in result.columns if c.role == "continuous")
    n_temp = sum(1 for c in result.columns if c.role == "temporal")
    return DataShape(
        n_rows=result.n_rows,
        n_columns=result.n_columns,
        n_categorical=n_cat,
        n_continuous=n_cont,
        n_temporal=n_temp,
    )


# ---------------------------------------------------------------------------
# Explicit chart requests in the question text
# ---------------------------------------------------------------------------

def detect_requested_chart(question: str) -> Optional[str]:
    """First chart keyword in the question that is not negated within the
    preceding three tokens; 'heat map' counts as heatmap."""
    tokens = _QUESTION_TOKEN_RE.findall(question.casefold())

    def negated(position: int) -> bool:
        start = max(0, position - _NEGATION_WINDOW)
        return any(tok in _NEGATION_TOKENS for tok in tokens[start:position])

    for i, token in enumerate(tokens):
        mention: Optional[str] = None
        if token in CHART_TYPES:
            mention = token
        elif token == "heat" and i + 1 < len(tokens) and tokens[i + 1] == "map":
            mention = HEATMAP
        if mention is not None and not negated(i):
            return mention
    return None


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------

def cascade_condition(chart: str, shape: DataShape) -> bool:
    """Shape rule used when no chart was requested."""
    cat, cont, temp = shape.n_categorical, shape.n_continuous, shape.n_temporal
    if chart == BAR:
        return cat >= 1 and cont >= 1
    if chart in (BOX, HISTOGRAM):
        return cont == 1 and cat == 0 and temp == 0
    if chart in (LINE, AREA):
        return temp >= 1 and cont >= 1
    if chart == PIE:
        return cat >= 1 and cont == 1
    if chart == SCATTER:
        return cont == 2 and cat == 0 and temp == 0
    if chart == BUBBLE:
        return cont >= 3
    if chart == RADAR:
        return cat == 1 and cont >= 3
    if chart == HEATMAP:
        return (cat == 1 and cont >= 2) or cont >= 3
    return False


def construction_constraint(chart: str, shape: DataShape) -> bool:
    """Looser rule for honoring an explicit request: can it be drawn at all."""
    cat, cont, temp = shape.n_categorical, shape.n_continuous, shape.n_temporal
    if chart in (BAR, PIE):
        return cat >= 1 and cont >= 1
    if chart in (BOX, HISTOGRAM):
        return cont >= 1
    if chart in (LINE, AREA):
        return (cat + temp >= 1 and cont >= 1) or cont >= 2
    if chart == SCATTER:
        return cont >= 2
    if chart == BUBBLE:
        return cont >= 3
    if chart == RADAR:
        return cat == 1 and cont >= 3
    if chart == HEATMAP:
        return (cat == 1 and cont >= 2) or cont >= 3
    return False


def _label_index(result: ResultTable) -> Optional[int]:
    for i, col in enumerate(result.columns):
        if col.role in ("categorical", "identifier"):
            return i
    return None


def _measure_indexes(result: ResultTable) -> list[int]:
    return [i for i, col in enumerate(result.columns)
            if col.role == "continuous"]


def value_constraints_ok(chart: str, result: Optional[ResultTable]) -> bool:
    """Data-dependent guards; vacuously true without a result table."""
    if result is None:
        return True
    if chart == BAR:
        label = _label_index(result)
        if label is None:
            return True
        distinct = len(set(result.column_values(label)))
        return distinct <= BAR_LABEL_CARDINALITY_CAP
    if chart == PIE:
        if not (PIE_MIN_SLICES <= result.n_rows <= PIE_MAX_SLICES):
            return False
        measures = _measure_indexes(result)
        if not measures:
            return True
        values = result.column_values(measures[0])
        return all(v is not None and v >= 0 for v in values)
    return True


def run_cascade(shape: DataShape,
                result: Optional[ResultTable] = None) -> Optional[str]:
    for chart in CASCADE_ORDER:
        if cascade_condition(chart, shape) and value_constraints_ok(chart, result):
            return chart
    return None


def predict_chart(shape: DataShape, requested: Optional[str] = None,
                  result: Optional[ResultTable] = None) -> ChartDecision:
    """Decide which chart to draw for a result of this shape."""
    if shape.n_rows == 0:
        return ChartDecision(chart=None, status=EMPTY_DATASET)

    if requested is not None and construction_constraint(requested, shape) \
            and value_constraints_ok(requested, result):
        return ChartDecision(chart=requested, status=OK, source="requested")

    if requested is None and shape.n_columns > WIDE_RESULT_COLUMNS:
        if shape.n_categorical >= 1 and shape.n_continuous >= 1:
            return ChartDecision(chart=BAR, status=OK, source="wide-default")
        if shape.n_continuous >= 1:
            return ChartDecision(chart=LINE, status=OK, source="wide-default")

    chart = run_cascade(shape, result)
    if chart is not None:
        return ChartDecision(chart=chart, status=OK, source="cascade")
    return ChartDecision(chart=None, status=NO_SUITABLE_CHART)


# ---------------------------------------------------------------------------
# Vega-Lite spec construction
# ---------------------------------------------------------------------------

_VL_SCHEMA = "https://vega.github.io/schema/vega-lite/v5.json"
_VL_TYPES = {
    "categorical": "nominal",
    "identifier": "nominal",
    "continuous": "quantitative",
    "temporal": "temporal",
}

_FOLD_KEY = "series"
_FOLD_VALUE = "value"
_ROW_FIELD = "row"


@dataclass(frozen=True)
class ChartSpec:
    chart: str
    title: str
    spec: dict  # complete Vega-Lite document with inline data

    def to_dict(self) -> dict:
        return {"chart": self.chart, "title": self.title, "spec": self.spec}


def _data_values(result: ResultTable, with_row_index: bool = False) -> list[dict]:
    values = []
    for row_number, row in enumerate(result.rows, start=1):
        record = {col.name: _json_value(cell)
                  for col, cell in zip(result.columns, row)}
        if with_row_index:
            record[_ROW_FIELD] = row_number
        values.append(record)
    return values


def _field(result: ResultTable, index: int) -> dict:
    col = result.columns[index]
    return {"field": col.name, "type": _VL_TYPES[col.role]}


def _temporal_index(result: ResultTable) -> Optional[int]:
    for i, col in enumerate(result.columns):
        if col.role == "temporal":
            return i
    return None


def _fold_transform(result: ResultTable, measures: list[int]) -> list[dict]:
    names = [result.columns[i].name for i in measures]
    return [{"fold": names, "as": [_FOLD_KEY, _FOLD_VALUE]}]


def build_chart_spec(chart: str, result: ResultTable,
                     title: str = "") -> ChartSpec:
    """Assemble a renderable Vega-Lite document for a decided chart type.

    Callers must only pass chart types whose construction constraint holds
    for the result; violations raise ValueError.
    """
    shape = classify_shape(result)
    if not construction_constraint(chart, shape):
        raise ValueError(f"cannot build a {chart} chart from this result")

    label = _label_index(result)
    temporal = _temporal_index(result)
    measures = _measure_indexes(result)
    needs_row_index = chart == HEATMAP and label is None
    spec: dict = {
        "$schema": _VL_SCHEMA,
        "title": title or f"{chart} chart",
        "data": {"values": _data_values(result, with_row_index=needs_row_index)},
    }

    if chart == BAR:
        spec["mark"] = "bar"
        encoding = {"x": {**_field(result, label), "sort": None}}
        if len(measures) == 1:
            encoding["y"] = _field(result, measures[0])
        else:
            spec["transform"] = _fold_transform(result, measures)
            encoding["y"] = {"field": _FOLD_VALUE, "type": "quantitative"}
            encoding["xOffset"] = {"field": _FOLD_KEY, "type": "nominal"}
            encoding["color"] = {"field": _FOLD_KEY, "type": "nominal"}
        spec["encoding"] = encoding

    elif chart == BOX:
        spec["mark"] = {"type": "boxplot"}
        encoding = {"y": _field(result, measures[0])}
        if label is not None:
            encoding["x"] = _field(result, label)
        spec["encoding"] = encoding

    elif chart in (LINE, AREA):
        spec["mark"] = {"type": "line" if chart == LINE else "area",
                        "point": True}
        if temporal is not None:
            x_index = temporal
        elif label is not None:
            x_index = label
        else:
            x_index = measures[0]
        y_measures = [m for m in measures if m != x_index]
        encoding = {"x": {**_field(result, x_index), "sort": None}}
        if len(y_measures) == 1:
            encoding["y"] = _field(result, y_measures[0])
        else:
            spec["transform"] = _fold_transform(result, y_measures)
            encoding["y"] = {"field": _FOLD_VALUE, "type": "quantitative"}
            encoding["color"] = {"field": _FOLD_KEY, "type": "nominal"}
        spec["encoding"] = encoding

    elif chart == PIE:
        spec["mark"] = {"type": "arc"}
        spec["encoding"] = {
            "theta": _field(result, measures[0]),
            "color": {**_field(result, label), "sort": None},
        }

    elif chart == SCATTER:
        spec["mark"] = {"type": "point"}
        encoding = {"x": _field(result, measures[0]),
                    "y": _field(result, measures[1])}
        if label is not None:
            encoding["color"] = _field(result, label)
        spec["encoding"] = encoding

    elif chart == HISTOGRAM:
        spec["mark"] = "bar"
        spec["encoding"] = {
            "x": {**_field(result, measures[0]), "bin": True},
            "y": {"aggregate": "count", "type": "quantitative"},
        }

    elif chart == BUBBLE:
        spec["mark"] = {"type": "point", "filled": True}
        encoding = {
            "x": _field(result, measures[0]),
            "y": _field(result, measures[1]),
            "size": _field(result, measures[2]),
        }
        if label is not None:
            encoding["color"] = _field(result, label)
        spec["encoding"] = encoding

    elif chart == RADAR:
        # Rendered as a folded profile chart: one line per category across
        # the measure axis. Vega-Lite has no native radial spider mark.
        spec["transform"] = _fold_transform(result, measures)
        spec["mark"] = {"type": "line", "point": True}
        spec["encoding"] = {
            "x": {"field": _FOLD_KEY, "type": "nominal", "sort": None},
            "y": {"field": _FOLD_VALUE, "type": "quantitative"},
            "color": {**_field(result, label), "sort": None},
        }

    elif chart == HEATMAP:
        spec["transform"] = _fold_transform(result, measures)
        spec["mark"] = "rect"
        y_encoding = ({**_field(result, label), "sort": None}
                      if label is not None
                      else {"field": _ROW_FIELD, "type": "ordinal"})
        spec["encoding"] = {
            "x": {"field": _FOLD_KEY, "type": "nominal", "sort": None},
            "y": y_encoding,
            "color": {"field": _FOLD_VALUE, "type": "quantitative"},
        }

    else:
        raise ValueError(f"unknown chart type {chart!r}")

    return ChartSpec(chart=chart, title=spec["title"], spec=spec)


# ---------------------------------------------------------------------------
# Standalone HTML rendering
# ---------------------------------------------------------------------------

_HTML_PAGE = """<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>{title}</title>
<script src="https://cdn.jsdelivr.net/npm/vega@5"></script>
<script src="https://cdn.jsdelivr.net/npm/vega-lite@5"></script>
<script src="https://cdn.jsdelivr.net/npm/vega-embed@6"></script>
<style>
body {{ font-family: system-ui, sans-serif; margin: 2rem; }}
table {{ border-collapse: collapse; margin-top: 1rem; }}
td, th {{ border: 1px solid #999; padding: 0.3rem 0.6rem; }}
#fallback {{ color: #444; }}
</style>
</head>
<body>
<h1>{title}</h1>
<div id="view"></div>
<div id="fallback">
<p>Rendered offline: the table below mirrors the chart data.</p>
{table}
</div>
<script type="application/json" id="spec">{spec_json}</script>
<script>
(function () {{
  var spec = JSON.parse(document.getElementById("spec").textContent);
  if (typeof vegaEmbed === "function") {{
    vegaEmbed("#view", spec).then(function () {{
      document.getElementById("fallback").style.display = "none";
    }}).catch(function () {{}});
  }}
}})();
</script>
</body>
</html>
"""


def _fallback_table(values: list[dict]) -> str:
    if not values:
        return "<p>No rows.</p>"
    fields = list(values[0].keys())
    head = "".join(f"<th>{html.escape(str(f))}</th>" for f in fields)
    body_rows = []
    for record in values:
        cells = "".join(
            f"<td>{html.escape('' if record.get(f) is None else str(record.get(f)))}</td>"
            for f in fields)
        body_rows.append(f"<tr>{cells}</tr>")
    return f"<table><thead><tr>{head}</tr></thead><tbody>{''.join(body_rows)}</tbody></table>"


def chart_html(chart_spec: ChartSpec) -> str:
    """One self-contained page: inline spec, script-free table fallback."""
    values = chart_spec.spec.get("data", {}).get("values", [])
    return _HTML_PAGE.format(
        title=html.escape(chart_spec.title),
        table=_fallback_table(values),
        spec_json=json.dumps(chart_spec.spec).replace("</", "<\\/"),
    )
