"""Lexical repair of column references against a table profile.

Model output tends to invent near-miss identifiers (wrong case, dropped
underscores, abbreviations). Refinement maps each reference to the closest
actual column by a string-similarity score and rewrites the statement, or
reports the references it could not resolve.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .dataprofile import TableProfile
from .errors import PipelineError
from . import sqlkit
from .sqlkit import ColumnRef, OrderItem, SelectItem, SqlAst

SIMILARITY_THRESHOLD = 0.5


class UnresolvedIdentifiers(PipelineError):
    code = "UNRESOLVED_IDENTIFIERS"

    def __init__(self, message: str, report: "RefinementReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Substitution:
    original: str
    replacement: str
    score: float


@dataclass(frozen=True)
class RefinementReport:
    """What the repair pass did: rewrites applied and names it gave up on."""
    substitutions: tuple[Substitution, ...]
    unresolved: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "substitutions": [
                {"original": s.original, "replacement": s.replacement,
                 "score": round(s.score, 4)}
                for s in self.substitutions
            ],
            "unresolved": list(self.unresolved),
        }


def fold(name: str) -> str:
    """Case-insensitive, separator-insensitive comparison form."""
    out = []
    for ch in name.casefold():
        if ch in ("_", "-", "‑", " "):
            continue
        out.append(ch)
    return "".join(out)


def levenshtein(a: str, b: str) -> int:
    """Classic edit distance, two-row dynamic programming."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1,
                               current[j - 1] + 1,
                               previous[j - 1] + cost))
        previous = current
    return previous[len(b)]


def lcs_len(a: str, b: str) -> int:
    """Length of the longest common subsequence."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for ca in a:
        current = [0]
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def name_similarity(a: str, b: str) -> float:
    """Similarity in [0, 1]; max of edit-distance ratio and LCS ratio."""
    fa, fb = fold(a), fold(b)
    if not fa or not fb:
        return 1.0 if fa == fb else 0.0
    longest = max(len(fa), len(fb))
    edit_score = 1.0 - levenshtein(fa, fb) / longest
    lcs_score = 2.0 * lcs_len(fa, fb) / (len(fa) + len(fb))
    return max(edit_score, lcs_score)


def best_match(name: str, candidates: list[str],
               threshold: float = SIMILARITY_THRESHOLD) -> Optional[tuple[str, float]]:
    """Highest-scoring candidate at or above threshold; ties break to the
    lexicographically smallest candidate so refinement is deterministic."""
    best: Optional[tuple[str, float]] = None
    for candidate in candidates:
        score = name_similarity(name, candidate)
        if score < threshold:
            continue
        if best is None or score > best[1] or (score == best[1] and candidate < best[0]):
            best = (candidate, score)
    return best


def refine_query(ast: SqlAst, profile: TableProfile) -> tuple[SqlAst, RefinementReport]:
    """Rewrite every column reference to an actual column of the profile.

    Exact matches (after case folding) are canonicalized to the profile's
    spelling and not reported. Aliases declared in the select list shadow
    column matching inside ORDER BY. Unresolved names are collected rather
    than raised; callers decide whether that is fatal.
    """
    columns = [c.name for c in profile.columns]
    by_fold = {c.casefold(): c for c in columns}
    aliases = {i.alias.casefold() for i in ast.items if i.alias is not None}

    substitutions: dict[str, Substitution] = {}
    unresolved: list[str] = []

    def resolve(ref: ColumnRef, allow_alias: bool = False) -> ColumnRef:
        name = ref.name
        if allow_alias and name.casefold() in aliases:
            return ref
        exact = by_fold.get(name.casefold())
        if exact is not None:
            return ColumnRef(exact)
        match = best_match(name, columns)
        if match is None:
            if name not in unresolved:
                unresolved.append(name)
            return ref
        replacement, score = match
        if name not in substitutions:
            substitutions[name] = Substitution(name, replacement, score)
        return ColumnRef(replacement)

    new_items = tuple(
        SelectItem(sqlkit.map_expr_refs(i.expr, resolve), i.alias)
        for i in ast.items
    )
    new_where = None if ast.where is None else \
        sqlkit.map_expr_refs(ast.where, resolve)
    new_group = tuple(resolve(ref) for ref in ast.group_by)
    new_order = tuple(
        OrderItem(sqlkit.map_expr_refs(
            o.expr, lambda ref: resolve(ref, allow_alias=True)), o.descending)
        for o in ast.order_by
    )

    refined = SqlAst(distinct=ast.distinct, items=new_items,
                     source=profile.table_name, where=new_where,
                     group_by=new_group, order_by=new_order, limit=ast.limit)
    report = RefinementReport(
        substitutions=tuple(substitutions.values()),
        unresolved=tuple(unresolved),
    )
    return refined, report


def refine_or_raise(ast: SqlAst, profile: TableProfile) -> tuple[SqlAst, RefinementReport]:
    refined, report = refine_query(ast, profile)
    if report.unresolved:
        names = ", ".join(report.unresolved)
        raise UnresolvedIdentifiers(
            f"could not resolve column reference(s): {names}", report)
    return refined, report
