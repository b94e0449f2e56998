import type { Refinement, Substitution } from "./types.js";

/** One lexical token of a SQL string, flagged when refinement touched it. */
export interface DiffToken {
  text: string;
  changed: boolean;
}

export interface SqlDiff {
  raw: DiffToken[];
  refined: DiffToken[];
  substitutions: Substitution[];
  unresolved: string[];
}

// Quoted identifiers and strings are single tokens so multi-word column
// names highlight as one unit.  Whitespace is kept to reproduce spacing.
const TOKEN_RE = /"(?:[^"]|"")*"|'(?:[^']|'')*'|\w+|\s+|[^\w\s]/g;

function bareName(token: string): string {
  if (token.length >= 2 && token.startsWith('"') && token.endsWith('"')) {
    return token.slice(1, -1).replace(/""/g, '"');
  }
  return token;
}

export function markTokens(sql: string, names: Iterable<string>): DiffToken[] {
  const wanted = new Set<string>();
  for (const name of names) wanted.add(name.toLowerCase());
  const tokens = sql.match(TOKEN_RE) ?? [];
  return tokens.map((text) => ({
    text,
    changed: wanted.has(bareName(text).toLowerCase()),
  }));
}

/**
 * Build the side-by-side model: substituted originals and unresolved names
 * flagged in the generated SQL, replacements flagged in the refined SQL.
 * Matching is lexical, so a replacement that also occurs unchanged elsewhere
 * is highlighted there too; acceptable for a reading aid.
 */
export function diffSides(rawSql: string, refinedSql: string, refinement: Refinement | null): SqlDiff {
  const substitutions = refinement?.substitutions ?? [];
  const unresolved = refinement?.unresolved ?? [];
  return {
    raw: markTokens(rawSql, [
      ...substitutions.map((s) => s.original),
      ...unresolved,
    ]),
    refined: markTokens(refinedSql, substitutions.map((s) => s.replacement)),
    substitutions,
    unresolved,
  };
}
