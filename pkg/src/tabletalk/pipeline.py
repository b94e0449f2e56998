"""End-to-end orchestration: question in, answered result out.

Order of stages: translate, parse, refine references, execute, classify
shape, decide chart, build spec, write insights. Stage failures become a
structured error payload on the response instead of exceptions; an empty
result or an undrawable shape is not an error.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional

from . import chart as chartmod
from . import engine, insights as insightsmod, refine, sqlkit, translate
from .dataprofile import Dataset, render_ddl
from .errors import PipelineError

Completer = Callable[[str, list], str]


@dataclass(frozen=True)
class PipelineResponse:
    ok: bool
    question: str
    source: Optional[str] = None        # llm | offline
    raw_sql: Optional[str] = None       # as translated, before repair
    sql: Optional[str] = None           # canonical executed statement
    refinement: Optional[dict] = None
    result: Optional[dict] = None
    shape: Optional[dict] = None
    chart: Optional[dict] = None
    insights: Optional[dict] = None
    error: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "question": self.question,
            "source": self.source,
            "raw_sql": self.raw_sql,
            "sql": self.sql,
            "refinement": self.refinement,
            "result": self.result,
            "shape": self.shape,
            "chart": self.chart,
            "insights": self.insights,
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _error_response(question: str, exc: PipelineError,
                    **partial) -> PipelineResponse:
    return PipelineResponse(ok=False, question=question,
                            error=exc.payload(), **partial)


def run_pipeline(dataset: Dataset, question: str, *,
                 chart_hint: Optional[str] = None,
                 offline: bool = False,
                 completer: Optional[Completer] = None,
                 insights_completer: Optional[Completer] = None) -> PipelineResponse:
    """Answer one question against one dataset.

    Without a completer the deterministic offline translator is used, so the
    pipeline works with no model host configured.
    """
    profile = dataset.profile
    if chart_hint is not None and chart_hint not in chartmod.CHART_TYPES:
        return _error_response(question, PipelineError(
            f"unknown chart type {chart_hint!r}; expected one of: "
            f"{', '.join(chartmod.CHART_TYPES)}", code="INVALID_CHART_HINT"))

    use_llm = completer is not None and not offline
    try:
        if use_llm:
            translation = translate.llm_to_sql(
                question, render_ddl(profile), completer)
        else:
            translation = translate.offline_to_sql(question, profile)
    except translate.LlmError as exc:
        return _error_response(question, exc)

    rejection = translate.relevance_gate(translation, None)
    if rejection is not None:
        return _error_response(question, rejection,
                               source=translation.source)

    try:
        ast = sqlkit.parse(translation.sql)
    except sqlkit.ParseError as exc:
        return _error_response(question, exc, source=translation.source,
                               raw_sql=translation.sql)

    refined, report = refine.refine_query(ast, profile)
    rejection = translate.relevance_gate(translation, report)
    if rejection is not None:
        return _error_response(question, rejection,
                               source=translation.source,
                               raw_sql=translation.sql,
                               refinement=report.to_dict())

    try:
        sqlkit.check_ast(refined)
    except sqlkit.ParseError as exc:
        return _error_response(question, exc, source=translation.source,
                               raw_sql=translation.sql,
                               refinement=report.to_dict())
    canonical = sqlkit.print_canonical(refined)

    try:
        result = engine.execute(refined, dataset)
    except engine.ExecutionError as exc:
        return _error_response(question, exc, source=translation.source,
                               raw_sql=translation.sql, sql=canonical,
                               refinement=report.to_dict())

    shape = chartmod.classify_shape(result)
    requested = chart_hint or chartmod.detect_requested_chart(question)
    decision = chartmod.predict_chart(shape, requested, result)
    chart_payload = decision.to_dict()
    chart_payload["requested"] = requested
    chart_payload["spec"] = None
    if decision.chart is not None:
        spec = chartmod.build_chart_spec(decision.chart, result,
                                         title=question)
        chart_payload["spec"] = spec.spec

    if insights_completer is not None and not offline:
        report_insights = insightsmod.llm_insights(result, question,
                                                   insights_completer)
    else:
        report_insights = insightsmod.template_insights(result)

    return PipelineResponse(
        ok=True,
        question=question,
        source=translation.source,
        raw_sql=translation.sql,
        sql=canonical,
        refinement=report.to_dict(),
        result=result.to_dict(),
        shape=shape.to_dict(),
        chart=chart_payload,
        insights=report_insights.to_dict(),
    )
