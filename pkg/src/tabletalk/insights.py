"""Textual insight generation over a query result.

The template path derives a fixed family of bullets directly from the data:
row count, per-measure leader / gap / mean / total, and a correlation note
when exactly two measures are present. The model-backed path asks for free
bullets but is budgeted and always falls back to the template on any model
failure. Reports never exceed the word budget.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

from .engine import ResultTable

WORD_BUDGET = 500
CORRELATION_SIGN_THRESHOLD = 0.5
TRUNCATION_MARKER = "[truncated]"

_BULLET_PREFIXES = ("- ", "* ", "• ")


@dataclass(frozen=True)
class InsightReport:
    bullets: tuple[str, ...]
    source: str          # template | llm
    word_count: int
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "bullets": list(self.bullets),
            "source": self.source,
            "word_count": self.word_count,
            "truncated": self.truncated,
        }


def _words(text: str) -> int:
    return len(text.split())


def _label_index(result: ResultTable) -> Optional[int]:
    for i, col in enumerate(result.columns):
        if col.role in ("categorical", "identifier"):
            return i
    return None


def _measure_indexes(result: ResultTable) -> list[int]:
    return [i for i, col in enumerate(result.columns)
            if col.role == "continuous"]


def _pearson(xs: list[float], ys: list[float]) -> Optional[float]:
    n = len(xs)
    if n < 2:
        return None
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = sum((x - mean_x) ** 2 for x in xs)
    var_y = sum((y - mean_y) ** 2 for y in ys)
    if var_x == 0 or var_y == 0:
        return None
    return cov / math.sqrt(var_x * var_y)


def _measure_bullets(result: ResultTable, measure: int,
                     label: Optional[int]) -> list[str]:
    col = result.columns[measure].name
    pairs = [(row[measure], row) for row in result.rows
             if row[measure] is not None]
    if not pairs:
        return []
    bullets = []
    top_value, top_row = max(pairs, key=lambda p: p[0])
    if label is not None and top_row[label] is not None:
        bullets.append(f"{top_row[label]} leads with {top_value:.2f} {col}.")
    else:
        bullets.append(f"The highest {col} value is {top_value:.2f}.")
    if len(pairs) >= 2:
        ordered = sorted((value for value, _ in pairs), reverse=True)
        gap = ordered[0] - ordered[1]
        bullets.append(f"The gap between the top two is {gap:.2f} {col}.")
    values = [value for value, _ in pairs]
    mean = sum(values) / len(values)
    bullets.append(f"The {col} average is {mean:.2f}.")
    bullets.append(f"The {col} total is {sum(values):.2f}.")
    return bullets


def _correlation_bullet(result: ResultTable,
                        measures: list[int]) -> Optional[str]:
    a, b = measures
    name_a = result.columns[a].name
    name_b = result.columns[b].name
    paired = [(row[a], row[b]) for row in result.rows
              if row[a] is not None and row[b] is not None]
    r = _pearson([float(x) for x, _ in paired], [float(y) for _, y in paired])
    if r is None:
        return None
    if r >= CORRELATION_SIGN_THRESHOLD:
        return f"{name_a} and {name_b} are positively correlated."
    if r <= -CORRELATION_SIGN_THRESHOLD:
        return f"{name_a} and {name_b} are negatively correlated."
    return f"There is no clear correlation between {name_a} and {name_b}."


def template_insights(result: ResultTable) -> InsightReport:
    """Deterministic bullets derived from the result values alone."""
    if result.n_rows == 0:
        bullets = ("No rows matched the query.",)
        return InsightReport(bullets=bullets, source="template",
                             word_count=_words(bullets[0]))

    candidates: list[str] = []
    n = result.n_rows
    candidates.append(
        f"The query returned {n} row{'s' if n != 1 else ''}.")
    label = _label_index(result)
    measures = _measure_indexes(result)
    for measure in measures:
        candidates.extend(_measure_bullets(result, measure, label))
    if len(measures) == 2:
        bullet = _correlation_bullet(result, measures)
        if bullet is not None:
            candidates.append(bullet)

    # Whole bullets are dropped once the budget would be crossed.
    bullets: list[str] = []
    used = 0
    truncated = False
    for bullet in candidates:
        cost = _words(bullet)
        if used + cost > WORD_BUDGET:
            truncated = True
            break
        bullets.append(bullet)
        used += cost
    return InsightReport(bullets=tuple(bullets), source="template",
                         word_count=used, truncated=truncated)


# ---------------------------------------------------------------------------
# Model-backed insights
# ---------------------------------------------------------------------------

INSIGHT_PROMPT_TEMPLATE = (
    "You are given a question and the table of query results that answers "
    "it. Write at most eight short insight bullets about the data, one per "
    "line, each starting with '- '. Mention concrete numbers. Do not "
    "speculate beyond the table.\n\n"
    "Question: {question}\n\n"
    "Result table (JSON):\n{table_json}\n"
)


def table_digest(result: ResultTable) -> str:
    """Stable key for fixture lookup: hash of the serialized table."""
    serialized = json.dumps(result.to_dict(), sort_keys=True)
    return hashlib.sha256(serialized.encode("utf-8")).hexdigest()


def _parse_bullets(raw: str) -> list[str]:
    bullets = []
    for line in raw.splitlines():
        text = line.strip()
        if not text:
            continue
        for prefix in _BULLET_PREFIXES:
            if text.startswith(prefix):
                text = text[len(prefix):].strip()
                break
        if text:
            bullets.append(text)
    return bullets


def _enforce_budget(bullets: list[str]) -> tuple[list[str], int, bool]:
    """Trim to the word budget, cutting inside a bullet when needed so the
    truncation marker still fits under the cap."""
    kept: list[str] = []
    used = 0
    for bullet in bullets:
        cost = _words(bullet)
        if used + cost <= WORD_BUDGET:
            kept.append(bullet)
            used += cost
            continue
        room = WORD_BUDGET - used - 1  # leave one word for the marker
        if room > 0:
            head = " ".join(bullet.split()[:room])
            kept.append(f"{head} {TRUNCATION_MARKER}")
            used += room + 1
        elif room == 0:
            # budget minus one already used: the marker itself still fits
            kept[-1] = f"{kept[-1]} {TRUNCATION_MARKER}"
            used += 1
        else:
            # budget exactly consumed: swap the final word for the marker
            words = kept[-1].split()
            kept[-1] = " ".join(words[:-1] + [TRUNCATION_MARKER])
        return kept, used, True
    return kept, used, False


def llm_insights(result: ResultTable, question: str,
                 completer: Callable[[str, list[dict]], str]) -> InsightReport:
    """Ask the model for bullets; any model failure falls back to templates."""
    from .translate import LlmError  # local import avoids a module cycle

    prompt = INSIGHT_PROMPT_TEMPLATE.format(
        question=question,
        table_json=json.dumps(result.to_dict(), sort_keys=True),
    )
    messages = [{"role": "user", "content": prompt}]
    try:
        raw = completer(table_digest(result), messages)
    except LlmError:
        return template_insights(result)
    bullets = _parse_bullets(raw)
    if not bullets:
        return template_insights(result)
    kept, used, truncated = _enforce_budget(bullets)
    if not kept:
        return template_insights(result)
    return InsightReport(bullets=tuple(kept), source="llm",
                         word_count=used, truncated=truncated)
