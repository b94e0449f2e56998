"""Lexer, parser, canonical printer, and validator for the SELECT subset.

The grammar covers single-table SELECT with optional DISTINCT, WHERE,
GROUP BY, ORDER BY, and LIMIT, five aggregate functions, arithmetic and
boolean expressions, and IN lists. See docs/sql_grammar.ebnf for the full
grammar. Parse errors carry the byte offset and the token kinds that would
have been accepted there.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .errors import PipelineError

KEYWORDS = {
    "SELECT", "DISTINCT", "FROM", "WHERE", "GROUP", "BY", "ORDER", "LIMIT",
    "AND", "OR", "NOT", "IN", "AS", "ASC", "DESC", "NULL",
    "COUNT", "SUM", "AVG", "MIN", "MAX",
}
AGGREGATE_FUNCTIONS = ("COUNT", "SUM", "AVG", "MIN", "MAX")
COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")

_BARE_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ParseError(PipelineError):
    """Syntax rejection; exactly what marks a query invalid in evaluation."""

    code = "PARSE_ERROR"

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        super().__init__(message)
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))

    def payload(self) -> dict:
        out = super().payload()
        out["offset"] = self.offset
        if self.expected:
            out["expected"] = list(self.expected)
        return out


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnRef:
    name: str


@dataclass(frozen=True)
class Literal:
    value: Union[int, float, str, None]


@dataclass(frozen=True)
class Unary:
    op: str  # always NOT
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class InList:
    expr: "Expr"
    literals: tuple[Literal, ...]


@dataclass(frozen=True)
class Aggregate:
    fn: str
    arg: Optional[ColumnRef]  # None means star, COUNT only


Expr = Union[ColumnRef, Literal, Unary, Binary, InList, Aggregate]


@dataclass(frozen=True)
class SelectItem:
    expr: Expr
    alias: Optional[str] = None


@dataclass(frozen=True)
class OrderItem:
    expr: Expr
    descending: bool = False


@dataclass(frozen=True)
class SqlAst:
    distinct: bool
    items: tuple[SelectItem, ...]
    source: str
    where: Optional[Expr] = None
    group_by: tuple[ColumnRef, ...] = ()
    order_by: tuple[OrderItem, ...] = ()
    limit: Optional[int] = None


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    error: Optional[ParseError] = None


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str   # KEYWORD, IDENT, NUMBER, STRING, SYMBOL, EOF
    text: str
    value: object
    offset: int  # byte offset into the utf-8 encoding of the input


_SYMBOLS = ("<=", ">=", "!=", "(", ")", ",", ";", "*", "=", "<", ">",
            "+", "-", "/")

_NUMBER_RE = re.compile(r"(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_IDENT_START = re.compile(r"[A-Za-z_]")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    byte_pos = 0
    n = len(text)

    def advance(count: int):
        nonlocal pos, byte_pos
        byte_pos += len(text[pos:pos + count].encode("utf-8"))
        pos += count

    while pos < n:
        ch = text[pos]
        if ch.isspace():
            advance(1)
            continue
        start = byte_pos
        # ASCII digits only: str.isdigit also accepts Unicode numerics the
        # number pattern would refuse
        if "0" <= ch <= "9" or (ch == "." and pos + 1 < n
                                and "0" <= text[pos + 1] <= "9"):
            m = _NUMBER_RE.match(text, pos)
            lexeme = m.group(0)
            value: object
            if "." in lexeme or "e" in lexeme or "E" in lexeme:
                value = float(lexeme)
            else:
                value = int(lexeme)
            tokens.append(_Token("NUMBER", lexeme, value, start))
            advance(len(lexeme))
            continue
        if _IDENT_START.match(ch):
            m = _IDENT_RE.match(text, pos)
            lexeme = m.group(0)
            upper = lexeme.upper()
            if upper in KEYWORDS:
                tokens.append(_Token("KEYWORD", upper, upper, start))
            else:
                tokens.append(_Token("IDENT", lexeme, lexeme, start))
            advance(len(lexeme))
            continue
        if ch == '"':
            end = pos + 1
            parts = []
            while True:
                if end >= n:
                    raise ParseError("unterminated quoted identifier", start)
                if text[end] == '"':
                    if end + 1 < n and text[end + 1] == '"':
                        parts.append('"')
                        end += 2
                        continue
                    break
                parts.append(text[end])
                end += 1
            name = "".join(parts)
            if not name:
                raise ParseError("empty quoted identifier", start)
            tokens.append(_Token("IDENT", name, name, start))
            advance(end + 1 - pos)
            continue
        if ch == "'":
            end = pos + 1
            parts = []
            while True:
                if end >= n:
                    raise ParseError("unterminated string literal", start)
                if text[end] == "'":
                    if end + 1 < n and text[end + 1] == "'":
                        parts.append("'")
                        end += 2
                        continue
                    break
                parts.append(text[end])
                end += 1
            tokens.append(_Token("STRING", text[pos:end + 1], "".join(parts), start))
            advance(end + 1 - pos)
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, pos):
                tokens.append(_Token("SYMBOL", sym, sym, start))
                advance(len(sym))
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", start)
    tokens.append(_Token("EOF", "", None, byte_pos))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, expected: tuple[str, ...]) -> ParseError:
        tok = self.cur
        shown = tok.text if tok.kind != "EOF" else "end of input"
        return ParseError(
            f"unexpected {shown!r}, expected one of: {', '.join(sorted(set(expected)))}",
            tok.offset,
            expected,
        )

    def at_keyword(self, *names: str) -> bool:
        return self.cur.kind == "KEYWORD" and self.cur.value in names

    def at_symbol(self, *symbols: str) -> bool:
        return self.cur.kind == "SYMBOL" and self.cur.value in symbols

    def take(self) -> _Token:
        tok = self.cur
        self.pos += 1
        return tok

    def expect_keyword(self, name: str) -> _Token:
        if not self.at_keyword(name):
            raise self.error((name,))
        return self.take()

    def expect_symbol(self, symbol: str) -> _Token:
        if not self.at_symbol(symbol):
            raise self.error((f"'{symbol}'",))
        return self.take()

    def expect_ident(self, what: str) -> str:
        if self.cur.kind != "IDENT":
            raise self.error((what,))
        return self.take().value

    # --- grammar -----------------------------------------------------------

    def parse_query(self) -> SqlAst:
        self.expect_keyword("SELECT")
        distinct = False
        if self.at_keyword("DISTINCT"):
            self.take()
            distinct = True
        items = self.parse_select_items()
        self.expect_keyword("FROM")
        source = self.expect_ident("table name")
        where = None
        if self.at_keyword("WHERE"):
            self.take()
            where = self.parse_expr()
        group_by: tuple[ColumnRef, ...] = ()
        if self.at_keyword("GROUP"):
            self.take()
            self.expect_keyword("BY")
            group_by = self.parse_column_ref_list()
        order_by: tuple[OrderItem, ...] = ()
        if self.at_keyword("ORDER"):
            self.take()
            self.expect_keyword("BY")
            order_by = self.parse_order_items()
        limit = None
        if self.at_keyword("LIMIT"):
            self.take()
            if self.cur.kind != "NUMBER" or not isinstance(self.cur.value, int):
                raise self.error(("non-negative integer",))
            limit = self.take().value
        if self.at_symbol(";"):
            self.take()
        if self.cur.kind != "EOF":
            raise self.error(("end of input",))
        ast = SqlAst(distinct=distinct, items=items, source=source,
                     where=where, group_by=group_by, order_by=order_by,
                     limit=limit)
        check_ast(ast)
        return ast

    def parse_select_items(self) -> tuple[SelectItem, ...]:
        items = [self.parse_select_item()]
        while self.at_symbol(","):
            self.take()
            items.append(self.parse_select_item())
        return tuple(items)

    def parse_select_item(self) -> SelectItem:
        expr = self.parse_expr()
        alias = None
        if self.at_keyword("AS"):
            self.take()
            alias = self.expect_ident("alias")
        elif self.cur.kind == "IDENT":
            alias = self.take().value
        return SelectItem(expr=expr, alias=alias)

    def parse_column_ref_list(self) -> tuple[ColumnRef, ...]:
        refs = [ColumnRef(self.expect_ident("column name"))]
        while self.at_symbol(","):
            self.take()
            refs.append(ColumnRef(self.expect_ident("column name")))
        return tuple(refs)

    def parse_order_items(self) -> tuple[OrderItem, ...]:
        items = [self.parse_order_item()]
        while self.at_symbol(","):
            self.take()
            items.append(self.parse_order_item())
        return tuple(items)

    def parse_order_item(self) -> OrderItem:
        expr = self.parse_expr()
        descending = False
        if self.at_keyword("ASC"):
            self.take()
        elif self.at_keyword("DESC"):
            self.take()
            descending = True
        return OrderItem(expr=expr, descending=descending)

    # Precedence: OR < AND < NOT < comparison/IN < additive < multiplicative.
    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        expr = self.parse_and()
        while self.at_keyword("OR"):
            self.take()
            expr = Binary("OR", expr, self.parse_and())
        return expr

    def parse_and(self) -> Expr:
        expr = self.parse_not()
        while self.at_keyword("AND"):
            self.take()
            expr = Binary("AND", expr, self.parse_not())
        return expr

    def parse_not(self) -> Expr:
        if self.at_keyword("NOT"):
            self.take()
            return Unary("NOT", self.parse_not())
        return self.parse_predicate()

    def parse_predicate(self) -> Expr:
        expr = self.parse_additive()
        if self.at_symbol(*COMPARISON_OPS):
            op = self.take().value
            return Binary(op, expr, self.parse_additive())
        if self.at_keyword("IN"):
            self.take()
            self.expect_symbol("(")
            literals = [self.parse_literal()]
            while self.at_symbol(","):
                self.take()
                literals.append(self.parse_literal())
            self.expect_symbol(")")
            return InList(expr, tuple(literals))
        return expr

    def parse_additive(self) -> Expr:
        expr = self.parse_multiplicative()
        while self.at_symbol("+", "-"):
            op = self.take().value
            expr = Binary(op, expr, self.parse_multiplicative())
        return expr

    def parse_multiplicative(self) -> Expr:
        expr = self.parse_primary()
        while self.at_symbol("*", "/"):
            op = self.take().value
            expr = Binary(op, expr, self.parse_primary())
        return expr

    def parse_literal(self) -> Literal:
        if self.at_symbol("-"):
            self.take()
            if self.cur.kind != "NUMBER":
                raise self.error(("number",))
            return Literal(-self.take().value)
        if self.cur.kind == "NUMBER":
            return Literal(self.take().value)
        if self.cur.kind == "STRING":
            return Literal(self.take().value)
        if self.at_keyword("NULL"):
            self.take()
            return Literal(None)
        raise self.error(("literal",))

    def parse_primary(self) -> Expr:
        if self.cur.kind in ("NUMBER", "STRING") or self.at_keyword("NULL") \
                or self.at_symbol("-"):
            return self.parse_literal()
        if self.at_keyword(*AGGREGATE_FUNCTIONS):
            fn = self.take().value
            self.expect_symbol("(")
            if self.at_symbol("*"):
                if fn != "COUNT":
                    raise ParseError(
                        f"star argument only allowed under COUNT, not {fn}",
                        self.cur.offset, ("column name",))
                self.take()
                arg = None
            else:
                arg = ColumnRef(self.expect_ident("column name"))
            self.expect_symbol(")")
            return Aggregate(fn, arg)
        if self.cur.kind == "IDENT":
            return ColumnRef(self.take().value)
        if self.at_symbol("("):
            self.take()
            expr = self.parse_expr()
            self.expect_symbol(")")
            return expr
        raise self.error(("expression",))


# ---------------------------------------------------------------------------
# Structural validation shared by parse and refine
# ---------------------------------------------------------------------------

def walk_expr(expr: Expr):
    yield expr
    if isinstance(expr, Unary):
        yield from walk_expr(expr.operand)
    elif isinstance(expr, Binary):
        yield from walk_expr(expr.lhs)
        yield from walk_expr(expr.rhs)
    elif isinstance(expr, InList):
        yield from walk_expr(expr.expr)
        yield from expr.literals
    elif isinstance(expr, Aggregate) and expr.arg is not None:
        yield expr.arg


def contains_aggregate(expr: Expr) -> bool:
    return any(isinstance(e, Aggregate) for e in walk_expr(expr))


def _free_refs(expr: Expr) -> list[ColumnRef]:
    """Column refs occurring outside aggregate arguments."""
    out: list[ColumnRef] = []

    def visit(e: Expr):
        if isinstance(e, Aggregate):
            return
        if isinstance(e, ColumnRef):
            out.append(e)
        elif isinstance(e, Unary):
            visit(e.operand)
        elif isinstance(e, Binary):
            visit(e.lhs)
            visit(e.rhs)
        elif isinstance(e, InList):
            visit(e.expr)

    visit(expr)
    return out


def check_ast(ast: SqlAst) -> None:
    """Enforce the structural rules the grammar alone cannot express."""
    if not ast.items:
        raise ParseError("empty select list", 0)
    if ast.limit is not None and ast.limit < 0:
        raise ParseError("LIMIT must be non-negative", 0)

    aliases = [i.alias for i in ast.items if i.alias is not None]
    folded = [a.casefold() for a in aliases]
    if len(set(folded)) != len(folded):
        raise ParseError("duplicate select alias", 0)

    if ast.where is not None and contains_aggregate(ast.where):
        raise ParseError("aggregate not allowed in WHERE", 0)

    grouped = {ref.name.casefold() for ref in ast.group_by}
    has_aggregate = any(contains_aggregate(i.expr) for i in ast.items) or \
        any(contains_aggregate(o.expr) for o in ast.order_by)

    if ast.group_by:
        for item in ast.items:
            if contains_aggregate(item.expr):
                bad = [r for r in _free_refs(item.expr)
                       if r.name.casefold() not in grouped]
                if bad:
                    raise ParseError(
                        f"column {bad[0].name!r} must appear in GROUP BY", 0)
            else:
                if not (isinstance(item.expr, ColumnRef)
                        and item.expr.name.casefold() in grouped):
                    raise ParseError(
                        "non-aggregate select item must be a GROUP BY column", 0)
        alias_names = {a.casefold() for a in aliases}
        for order in ast.order_by:
            bad = [r for r in _free_refs(order.expr)
                   if r.name.casefold() not in grouped
                   and r.name.casefold() not in alias_names]
            if bad:
                raise ParseError(
                    f"ORDER BY column {bad[0].name!r} must appear in GROUP BY", 0)
    elif has_aggregate:
        alias_names = {a.casefold() for a in aliases}
        for item in ast.items:
            if _free_refs(item.expr):
                raise ParseError(
                    "cannot mix aggregated and plain columns without GROUP BY", 0)
        for order in ast.order_by:
            bad = [r for r in _free_refs(order.expr)
                   if r.name.casefold() not in alias_names]
            if bad:
                raise ParseError(
                    "cannot mix aggregated and plain columns without GROUP BY", 0)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def parse(text: str) -> SqlAst:
    """Parse SQL text into an AST; raises ParseError on any violation."""
    return _Parser(_lex(text)).parse_query()


def validate(text: str):
    """Never-throwing wrapper; syntax errors come back as data."""
    try:
        if not isinstance(text, str):
            raise ParseError("input is not text", 0)
        parse(text)
    except ParseError as exc:
        return ValidationResult(valid=False, error=exc)
    except RecursionError:
        return ValidationResult(
            valid=False, error=ParseError("expression nesting too deep", 0))
    return ValidationResult(valid=True, error=None)


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------

_PRECEDENCE = {
    "OR": 1, "AND": 2,
    "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6,
}
_NOT_PRECEDENCE = 3
_COMPARISON_PRECEDENCE = 4
_ATOM_PRECEDENCE = 7


def _expr_precedence(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return _PRECEDENCE[expr.op]
    if isinstance(expr, Unary):
        return _NOT_PRECEDENCE
    if isinstance(expr, InList):
        return _COMPARISON_PRECEDENCE
    return _ATOM_PRECEDENCE


def print_identifier(name: str) -> str:
    if _BARE_IDENT_RE.match(name) and name.upper() not in KEYWORDS:
        return name
    return '"' + name.replace('"', '""') + '"'


def _print_literal(lit: Literal) -> str:
    v = lit.value
    if v is None:
        return "NULL"
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _child(expr: Expr, parent_prec: int, tight: bool) -> str:
    text = print_expr(expr)
    prec = _expr_precedence(expr)
    if prec < parent_prec or (tight and prec == parent_prec):
        return f"({text})"
    return text


def print_expr(expr: Expr) -> str:
    if isinstance(expr, ColumnRef):
        return print_identifier(expr.name)
    if isinstance(expr, Literal):
        return _print_literal(expr)
    if isinstance(expr, Aggregate):
        arg = "*" if expr.arg is None else print_identifier(expr.arg.name)
        return f"{expr.fn}({arg})"
    if isinstance(expr, Unary):
        operand = _child(expr.operand, _NOT_PRECEDENCE, tight=False)
        return f"NOT {operand}"
    if isinstance(expr, InList):
        operand = _child(expr.expr, _COMPARISON_PRECEDENCE, tight=True)
        lits = ", ".join(_print_literal(l) for l in expr.literals)
        return f"{operand} IN ({lits})"
    if isinstance(expr, Binary):
        prec = _PRECEDENCE[expr.op]
        if prec == _COMPARISON_PRECEDENCE:
            lhs = _child(expr.lhs, prec, tight=True)
            rhs = _child(expr.rhs, prec, tight=True)
        else:
            lhs = _child(expr.lhs, prec, tight=False)
            rhs = _child(expr.rhs, prec, tight=True)
        return f"{lhs} {expr.op} {rhs}"
    raise TypeError(f"not an expression node: {expr!r}")


def print_canonical(ast: SqlAst) -> str:
    """Deterministic single-line rendering; parse(print_canonical(a)) == a."""
    parts = ["SELECT"]
    if ast.distinct:
        parts.append("DISTINCT")
    rendered_items = []
    for item in ast.items:
        text = print_expr(item.expr)
        if item.alias is not None:
            text += f" AS {print_identifier(item.alias)}"
        rendered_items.append(text)
    parts.append(", ".join(rendered_items))
    parts.append("FROM")
    parts.append(print_identifier(ast.source))
    if ast.where is not None:
        parts.append("WHERE")
        parts.append(print_expr(ast.where))
    if ast.group_by:
        parts.append("GROUP BY")
        parts.append(", ".join(print_identifier(r.name) for r in ast.group_by))
    if ast.order_by:
        parts.append("ORDER BY")
        rendered = []
        for order in ast.order_by:
            text = print_expr(order.expr)
            if order.descending:
                text += " DESC"
            rendered.append(text)
        parts.append(", ".join(rendered))
    if ast.limit is not None:
        parts.append(f"LIMIT {ast.limit}")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# AST rewriting helpers (used by refinement)
# ---------------------------------------------------------------------------

def map_expr_refs(expr: Expr, fn: Callable[[ColumnRef], Expr]) -> Expr:
    """Rebuild an expression, replacing every ColumnRef via fn."""
    if isinstance(expr, ColumnRef):
        return fn(expr)
    if isinstance(expr, Literal):
        return expr
    if isinstance(expr, Unary):
        return Unary(expr.op, map_expr_refs(expr.operand, fn))
    if isinstance(expr, Binary):
        return Binary(expr.op, map_expr_refs(expr.lhs, fn),
                      map_expr_refs(expr.rhs, fn))
    if isinstance(expr, InList):
        return InList(map_expr_refs(expr.expr, fn), expr.literals)
    if isinstance(expr, Aggregate):
        if expr.arg is None:
            return expr
        new_arg = fn(expr.arg)
        if not isinstance(new_arg, ColumnRef):
            raise ValueError("aggregate argument must stay a column reference")
        return Aggregate(expr.fn, new_arg)
    raise TypeError(f"not an expression node: {expr!r}")


def column_refs(ast: SqlAst) -> list[ColumnRef]:
    """Every column reference in the statement, in source order."""
    refs: list[ColumnRef] = []

    def collect(expr: Expr):
        for node in walk_expr(expr):
            if isinstance(node, ColumnRef):
                refs.append(node)

    for item in ast.items:
        collect(item.expr)
    if ast.where is not None:
        collect(ast.where)
    refs.extend(ast.group_by)
    for order in ast.order_by:
        collect(order.expr)
    return refs
