"""Evaluation of predicted SQL against gold SQL.

Two lenses: syntactic validity (does the statement parse under the engine
grammar) and n-gram similarity (BLEU with brevity penalty, thresholded into
match / no-match). Both feed a positive-only confusion matrix: every pair is
a positive instance, so correct outcomes are true positives and misses are
false negatives.
"""
from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from . import sqlkit
from .errors import PipelineError

BLEU_MATCH_THRESHOLD = 0.5
_MAX_NGRAM_ORDER = 4
_LOG_FLOOR = 1e-9

# Multi-character comparison operators stay single tokens; every other
# non-word symbol tokenizes alone.
_TOKEN_RE = re.compile(r"<=|>=|!=|\w+|[^\w\s]")


class EvalError(PipelineError):
    code = "EVAL_ERROR"


class EmptyInput(EvalError):
    code = "EMPTY_INPUT"


class MalformedPairFile(EvalError):
    code = "MALFORMED_PAIR_FILE"


@dataclass(frozen=True)
class EvalPair:
    question: str
    gold_sql: str
    predicted_sql: str
    schema_ddl: Optional[str] = None


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f1: float
    undefined: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "undefined": list(self.undefined),
        }


@dataclass(frozen=True)
class EvalSummary:
    n_pairs: int
    n_syntactically_valid: int
    validity_metrics: MetricSet
    bleu_scores: tuple[float, ...]
    bleu_threshold: float
    bleu_confusion: Confusion
    bleu_metrics: MetricSet

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "n_syntactically_valid": self.n_syntactically_valid,
            "validity_metrics": self.validity_metrics.to_dict(),
            "bleu_threshold": self.bleu_threshold,
            "mean_bleu": (sum(self.bleu_scores) / len(self.bleu_scores))
            if self.bleu_scores else 0.0,
            "bleu_confusion": self.bleu_confusion.to_dict(),
            "bleu_metrics": self.bleu_metrics.to_dict(),
        }


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------

def tokenize_sql(text: str) -> list[str]:
    """Lowercased word and symbol tokens; <=, >=, != stay whole."""
    return _TOKEN_RE.findall(text.casefold())


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str) -> float:
    """Sentence-level BLEU with clipped n-gram precision and brevity penalty.

    The n-gram order adapts to short statements (down to unigrams) so a
    statement always scores 1.0 against itself.
    """
    cand = tokenize_sql(candidate)
    ref = tokenize_sql(reference)
    if not cand or not ref:
        return 1.0 if cand == ref else 0.0

    order = max(1, min(_MAX_NGRAM_ORDER, len(cand), len(ref)))
    log_sum = 0.0
    for n in range(1, order + 1):
        cand_counts = _ngrams(cand, n)
        ref_counts = _ngrams(ref, n)
        clipped = sum(min(count, ref_counts[gram])
                      for gram, count in cand_counts.items())
        total = max(1, sum(cand_counts.values()))
        precision = clipped / total
        log_sum += math.log(max(precision, _LOG_FLOOR))
    geometric_mean = math.exp(log_sum / order)

    if len(cand) > len(ref):
        brevity = 1.0
    else:
        brevity = math.exp(1.0 - len(ref) / len(cand))
    return brevity * geometric_mean


def classify_match(candidate: str, reference: str,
                   threshold: float = BLEU_MATCH_THRESHOLD) -> bool:
    """Thresholded BLEU; the boundary value itself counts as a match."""
    return bleu(candidate, reference) >= threshold


# ---------------------------------------------------------------------------
# Confusion-matrix metrics
# ---------------------------------------------------------------------------

def metrics_from_confusion(confusion: Confusion) -> MetricSet:
    """Accuracy, precision, recall, F1; zero denominators yield 0 and are
    named in the undefined list instead of raising."""
    undefined: list[str] = []
    total = confusion.tp + confusion.fp + confusion.fn + confusion.tn
    if total:
        accuracy = (confusion.tp + confusion.tn) / total
    else:
        accuracy = 0.0
        undefined.append("accuracy")
    if confusion.tp + confusion.fp:
        precision = confusion.tp / (confusion.tp + confusion.fp)
    else:
        precision = 0.0
        undefined.append("precision")
    if confusion.tp + confusion.fn:
        recall = confusion.tp / (confusion.tp + confusion.fn)
    else:
        recall = 0.0
        undefined.append("recall")
    if precision + recall:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        undefined.append("f1")
    return MetricSet(accuracy=accuracy, precision=precision, recall=recall,
                     f1=f1, undefined=tuple(undefined))


def _positive_only_confusion(outcomes: list[bool]) -> Confusion:
    """Every instance is a positive; hits are tp, misses are fn."""
    hits = sum(1 for ok in outcomes if ok)
    return Confusion(tp=hits, fp=0, fn=len(outcomes) - hits, tn=0)


# ---------------------------------------------------------------------------
# Pair files and the evaluation run
# ---------------------------------------------------------------------------

_REQUIRED_KEYS = ("question", "gold_sql", "predicted_sql")


def load_pairs(text: str) -> list[EvalPair]:
    """Parse JSON-lines evaluation pairs; blank lines are skipped."""
    pairs: list[EvalPair] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedPairFile(
                f"line {lineno}: not valid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise MalformedPairFile(f"line {lineno}: expected an object")
        for key in _REQUIRED_KEYS:
            if not isinstance(record.get(key), str):
                raise MalformedPairFile(
                    f"line {lineno}: missing or non-string field {key!r}")
        schema = record.get("schema_ddl")
        if schema is not None and not isinstance(schema, str):
            raise MalformedPairFile(
                f"line {lineno}: schema_ddl must be a string when present")
        pairs.append(EvalPair(
            question=record["question"],
            gold_sql=record["gold_sql"],
            predicted_sql=record["predicted_sql"],
            schema_ddl=schema,
        ))
    if not pairs:
        raise EmptyInput("no evaluation pairs found")
    return pairs


def run_eval_suite(pairs: list[EvalPair],
                   bleu_threshold: float = BLEU_MATCH_THRESHOLD) -> EvalSummary:
    """Score one batch of (gold, predicted) statement pairs."""
    if not pairs:
        raise EmptyInput("no evaluation pairs found")

    validity = [sqlkit.validate(p.predicted_sql).valid for p in pairs]
    scores = tuple(bleu(p.predicted_sql, p.gold_sql) for p in pairs)
    matches = [score >= bleu_threshold for score in scores]

    validity_confusion = _positive_only_confusion(validity)
    bleu_confusion = _positive_only_confusion(matches)
    return EvalSummary(
        n_pairs=len(pairs),
        n_syntactically_valid=sum(validity),
        validity_metrics=metrics_from_confusion(validity_confusion),
        bleu_scores=scores,
        bleu_threshold=bleu_threshold,
        bleu_confusion=bleu_confusion,
        bleu_metrics=metrics_from_confusion(bleu_confusion),
    )


def render_summary(summary: EvalSummary) -> str:
    """Fixed-width text table for terminal reporting."""
    v = summary.validity_metrics
    b = summary.bleu_metrics
    mean_bleu = (sum(summary.bleu_scores) / len(summary.bleu_scores)
                 if summary.bleu_scores else 0.0)
    lines = [
        f"pairs evaluated        {summary.n_pairs}",
        f"syntactically valid    {summary.n_syntactically_valid}",
        f"mean BLEU              {mean_bleu:.4f}",
        f"BLEU match threshold   {summary.bleu_threshold:.2f}",
        "",
        "metric        validity    bleu-match",
        f"accuracy      {v.accuracy:8.4f}    {b.accuracy:8.4f}",
        f"precision     {v.precision:8.4f}    {b.precision:8.4f}",
        f"recall        {v.recall:8.4f}    {b.recall:8.4f}",
        f"f1            {v.f1:8.4f}    {b.f1:8.4f}",
    ]
    return "\n".join(lines)
