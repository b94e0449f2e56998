"""Question-to-SQL translation.

Two interchangeable routes produce candidate SQL: a chat-completion model
called over HTTP, and a deterministic offline rule translator that works
without any network. Both signal an unanswerable question with the same
sentinel, and the relevance gate converts that (or unresolved column
references) into the user-facing off-topic rejection.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

import requests

from .dataprofile import TableProfile
from .errors import PipelineError
from .refine import RefinementReport, best_match

SENTINEL = "OFF_TOPIC"
OFF_TOPIC_MESSAGE = (
    "Looks like you are providing incorrect question, which is not related "
    "to your dataset. Please provide valid question for your dataset!"
)

DEFAULT_BASE_URL = "http://localhost:8080/v1"
BASE_URL_ENV = "T2I_LLM_BASE_URL"
API_KEY_ENV = "T2I_LLM_API_KEY"

PROMPT_VERSION = "v1"
PROMPT_TEMPLATE = """You translate analytics questions about one table into SQL.

Schema:
{ddl}

Rules:
- Produce exactly one SELECT statement against the table above.
- Use only columns from the schema; never invent columns or tables.
- No joins, subqueries, window functions, or CTEs.
- Allowed clauses: SELECT [DISTINCT], WHERE, GROUP BY, ORDER BY, LIMIT.
- Allowed aggregates: COUNT, SUM, AVG, MIN, MAX.
- If the question is not answerable from this table, reply with exactly OFF_TOPIC.
- Reply with the SQL statement only, no explanation.

Question: {question}
SQL:"""


class OffTopic(PipelineError):
    code = "OFF_TOPIC"


class LlmError(PipelineError):
    code = "LLM_ERROR"


class LlmTimeout(LlmError):
    pass


class LlmHttpError(LlmError):
    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message)
        self.status = status


class LlmMalformedOutput(LlmError):
    pass


@dataclass(frozen=True)
class LlmConfig:
    base_url: str = DEFAULT_BASE_URL
    model: str = "default"
    api_key_env: str = API_KEY_ENV
    timeout: float = 30.0
    max_retries: int = 2
    max_concurrency: int = 4
    temperature: float = 0.0


@dataclass(frozen=True)
class TranslationResult:
    sql: Optional[str]
    off_topic: bool
    raw: str
    source: str  # llm | offline


def question_digest(question: str) -> str:
    return hashlib.sha256(question.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# HTTP transport
# ---------------------------------------------------------------------------

_semaphores: dict[tuple[str, int], threading.Semaphore] = {}
_semaphores_lock = threading.Lock()


def _semaphore_for(config: LlmConfig) -> threading.Semaphore:
    key = (config.base_url, config.max_concurrency)
    with _semaphores_lock:
        if key not in _semaphores:
            _semaphores[key] = threading.Semaphore(config.max_concurrency)
        return _semaphores[key]


def llm_complete(config: LlmConfig, messages: list[dict]) -> str:
    """One chat completion, with bounded concurrency and retry on
    timeouts, connection failures, and server errors."""
    url = config.base_url.rstrip("/") + "/chat/completions"
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(config.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {
        "model": config.model,
        "temperature": config.temperature,
        "messages": messages,
    }

    last_error: Optional[LlmError] = None
    semaphore = _semaphore_for(config)
    for attempt in range(config.max_retries + 1):
        if attempt:
            time.sleep(0.5 * 2 ** (attempt - 1))
        with semaphore:
            try:
                response = requests.post(url, json=body, headers=headers,
                                         timeout=config.timeout)
            except requests.Timeout:
                last_error = LlmTimeout(
                    f"model call timed out after {config.timeout}s")
                continue
            except requests.ConnectionError as exc:
                last_error = LlmHttpError(f"cannot reach model host: {exc}")
                continue
        if response.status_code >= 500:
            last_error = LlmHttpError(
                f"model host returned {response.status_code}",
                status=response.status_code)
            continue
        if response.status_code != 200:
            raise LlmHttpError(
                f"model host returned {response.status_code}",
                status=response.status_code)
        try:
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError):
            raise LlmMalformedOutput(
                "model response is not a chat completion") from None
        if not isinstance(content, str):
            raise LlmMalformedOutput("model returned non-text content")
        return content
    assert last_error is not None
    raise last_error


def http_completer(config: LlmConfig) -> Callable[[str, list[dict]], str]:
    """Completer sending real requests; the key argument is ignored."""

    def complete(key: str, messages: list[dict]) -> str:
        return llm_complete(config, messages)

    return complete


class FixtureCompleter:
    """Offline completer answering from recorded responses keyed by digest."""

    def __init__(self, fixtures: dict[str, str]):
        self.fixtures = dict(fixtures)
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path: str) -> "FixtureCompleter":
        with open(path, "r", encoding="utf-8") as handle:
            return cls(json.load(handle))

    def __call__(self, key: str, messages: list[dict]) -> str:
        self.calls.append(key)
        if key not in self.fixtures:
            raise LlmError(f"no recorded model response for key {key[:12]}")
        return self.fixtures[key]


# ---------------------------------------------------------------------------
# Output extraction
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"```[a-zA-Z]*\s*(.*?)```", re.S)
_SELECT_RE = re.compile(r"\bSELECT\b", re.I)
_SENTINEL_RE = re.compile(r"\bOFF_TOPIC\b")


def extract_sql(raw: str) -> str:
    """Pull one SQL statement (or the off-topic sentinel) out of model text."""
    text = raw.strip()
    fenced = _FENCE_RE.search(text)
    if fenced:
        text = fenced.group(1).strip()
    if _SENTINEL_RE.search(text):
        return SENTINEL
    match = _SELECT_RE.search(text)
    if not match:
        raise LlmMalformedOutput("model output contains no SELECT statement")
    statement = text[match.start():]
    semicolon = statement.find(";")
    if semicolon != -1:
        statement = statement[:semicolon]
    return " ".join(statement.split())


def llm_to_sql(question: str, ddl: str,
               completer: Callable[[str, list[dict]], str]) -> TranslationResult:
    prompt = PROMPT_TEMPLATE.format(ddl=ddl, question=question)
    messages = [{"role": "user", "content": prompt}]
    raw = completer(question_digest(question), messages)
    extracted = extract_sql(raw)
    if extracted == SENTINEL:
        return TranslationResult(sql=None, off_topic=True, raw=raw,
                                 source="llm")
    return TranslationResult(sql=extracted, off_topic=False, raw=raw,
                             source="llm")


# ---------------------------------------------------------------------------
# Offline rule translator
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9']+")

_WORD_NUMBERS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
    "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18,
    "nineteen": 19, "twenty": 20,
}

_PROJECTION_VERBS = {"show", "plot", "display", "list", "give", "draw",
                     "visualize", "visualise"}

STOPWORDS = {
    # articles, prepositions, conjunctions
    "a", "an", "the", "of", "in", "on", "at", "to", "from", "for", "with",
    "by", "per", "and", "or", "all", "each", "every", "as", "is", "are",
    "was", "were", "be", "been", "it", "its", "this", "that", "these",
    "those", "about", "into", "over", "under",
    # possessives and pronouns
    "their", "his", "her", "my", "our", "your", "them", "they", "there",
    "here", "he", "she", "we", "you", "i",
    # question words
    "who", "what", "which", "where", "when", "how", "whom", "whose", "why",
    # request verbs and politeness
    "show", "me", "plot", "display", "list", "give", "draw", "visualize",
    "visualise", "compare", "comparison", "versus", "vs", "against", "get",
    "find", "tell", "make", "create", "generate", "want", "need", "see",
    "please", "can", "could", "would", "do", "does", "did",
    # ranking adjectives
    "top", "highest", "best", "most", "maximum", "max", "minimum", "min",
    "lowest", "worst", "least", "largest", "smallest", "greatest", "bottom",
    "first", "last",
    # chart vocabulary
    "chart", "graph", "map", "heat", "bar", "line", "pie", "scatter",
    "histogram", "area", "bubble", "radar", "heatmap", "box", "diagram",
    "figure", "visualization", "visualisation",
    # misc glue
    "has", "have", "had", "also", "using", "use", "then", "than", "based",
    "wise", "out", "up", "down", "only", "just", "some", "any",
}


def _question_tokens(question: str) -> list[str]:
    return _TOKEN_RE.findall(question.casefold())


def _as_count(token: str) -> Optional[int]:
    if token.isdigit():
        return int(token)
    return _WORD_NUMBERS.get(token)


def _label_columns(profile: TableProfile) -> list[str]:
    return [c.name for c in profile.columns
            if c.role in ("categorical", "identifier")]


def _measure_columns(profile: TableProfile) -> list[str]:
    return [c.name for c in profile.columns if c.role == "continuous"]


def _resolve_sequence(tokens: list[str], candidates: list[str]) -> list[str]:
    """Map a token stream onto column names, best match first come.

    Adjacent token pairs are tried as one fused name ('strike rate' ->
    strike_rate) and win only when the pair scores strictly better than
    either token alone, so 'runs average' still yields two columns.
    """
    if not candidates:
        return []
    toks = [t for t in tokens if t not in STOPWORDS]
    hits: list[str] = []
    i = 0
    while i < len(toks):
        single = best_match(toks[i], candidates)
        if i + 1 < len(toks):
            fused = best_match(toks[i] + toks[i + 1], candidates)
            nxt = best_match(toks[i + 1], candidates)
            if fused is not None \
                    and (single is None or fused[1] > single[1]) \
                    and (nxt is None or fused[1] > nxt[1]):
                if fused[0] not in hits:
                    hits.append(fused[0])
                i += 2
                continue
        if single is not None and single[0] not in hits:
            hits.append(single[0])
        i += 1
    return hits


def _quote(name: str) -> str:
    from .sqlkit import print_identifier
    return print_identifier(name)


def _find_top(tokens: list[str]) -> Optional[tuple[int, int]]:
    """Position of 'top <number>' and the parsed count."""
    for i, token in enumerate(tokens):
        if token == "top" and i + 1 < len(tokens):
            count = _as_count(tokens[i + 1])
            if count is not None:
                return i, count
    return None


def _rule_top_n(tokens: list[str], profile: TableProfile) -> Optional[str]:
    found = _find_top(tokens)
    if found is None:
        return None
    at, count = found
    pre = tokens[:at]
    tail = tokens[at + 2:]
    split = next((i for i, t in enumerate(tail) if t in ("with", "by")), None)
    if split is not None:
        label_tokens = tail[:split]
        measures = _resolve_sequence(tail[split + 1:],
                                     _measure_columns(profile))
    else:
        # 'show X of top N Y': measures usually precede 'top'; the trailing
        # noun names the entity, so only fall back to it when needed
        label_tokens = tail + pre
        measures = _resolve_sequence(pre, _measure_columns(profile)) or \
            _resolve_sequence(pre + tail, _measure_columns(profile))
    if not measures:
        return None
    labels = _resolve_sequence(label_tokens, _label_columns(profile))
    label = labels[0] if labels else next(iter(_label_columns(profile)), None)
    selected = ([label] if label is not None else []) + measures
    columns = ", ".join(_quote(c) for c in selected)
    return (f"SELECT {columns} FROM {_quote(profile.table_name)} "
            f"ORDER BY {_quote(measures[0])} DESC LIMIT {count}")


def _rule_average_per(tokens: list[str], profile: TableProfile) -> Optional[str]:
    starters = [i for i, t in enumerate(tokens) if t in ("average", "mean", "avg")]
    for at in starters:
        split = next((j for j in range(at + 1, len(tokens))
                      if tokens[j] in ("per", "by")), None)
        if split is None:
            continue
        measures = _resolve_sequence(tokens[at + 1:split],
                                     _measure_columns(profile))
        keys = _resolve_sequence(tokens[split + 1:], _label_columns(profile))
        if not measures or not keys:
            continue
        y, x = measures[0], keys[0]
        return (f"SELECT {_quote(x)}, AVG({_quote(y)}) "
                f"FROM {_quote(profile.table_name)} GROUP BY {_quote(x)}")
    return None


def _rule_compare(tokens: list[str], profile: TableProfile) -> Optional[str]:
    if "compare" not in tokens and "comparison" not in tokens:
        return None
    at = tokens.index("compare") if "compare" in tokens \
        else tokens.index("comparison")
    rest = tokens[at + 1:]
    found = _find_top(rest)
    if found is not None:
        top_at, count = found
        measure_tokens = rest[:top_at]
        label_tokens = rest[top_at + 2:]
    else:
        count = None
        measure_tokens = rest
        label_tokens = []
    measures = _resolve_sequence(measure_tokens, _measure_columns(profile))
    if len(measures) < 2:
        return None
    selected = list(measures)
    if count is not None:
        labels = _resolve_sequence(label_tokens, _label_columns(profile))
        label = labels[0] if labels else next(iter(_label_columns(profile)), None)
        if label is not None:
            selected = [label] + selected
    columns = ", ".join(_quote(c) for c in selected)
    sql = f"SELECT {columns} FROM {_quote(profile.table_name)}"
    if count is not None:
        sql += f" ORDER BY {_quote(measures[0])} DESC LIMIT {count}"
    return sql


def _rule_projection(tokens: list[str], profile: TableProfile) -> Optional[str]:
    if not any(t in _PROJECTION_VERBS for t in tokens):
        return None
    names = [c.name for c in profile.columns]
    matched = _resolve_sequence(tokens, names)
    if not matched:
        return None
    columns = ", ".join(_quote(c) for c in matched)
    return f"SELECT {columns} FROM {_quote(profile.table_name)}"


def offline_to_sql(question: str, profile: TableProfile) -> TranslationResult:
    """Deterministic translation: first matching rule wins, no network."""
    tokens = _question_tokens(question)
    for rule in (_rule_top_n, _rule_average_per, _rule_compare,
                 _rule_projection):
        sql = rule(tokens, profile)
        if sql is not None:
            return TranslationResult(sql=sql, off_topic=False, raw=sql,
                                     source="offline")
    return TranslationResult(sql=None, off_topic=True, raw=SENTINEL,
                             source="offline")


# ---------------------------------------------------------------------------
# Relevance gate
# ---------------------------------------------------------------------------

def relevance_gate(translation: TranslationResult,
                   refinement: Optional[RefinementReport]) -> Optional[OffTopic]:
    """Decide whether the pipeline should refuse the question outright."""
    if translation.off_topic:
        return OffTopic(OFF_TOPIC_MESSAGE)
    if refinement is not None and refinement.unresolved:
        return OffTopic(OFF_TOPIC_MESSAGE, code="UNRESOLVED_IDENTIFIERS")
    return None
