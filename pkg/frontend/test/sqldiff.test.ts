import { describe, expect, it } from "vitest";
import { diffSides, markTokens } from "../src/sqldiff.js";
import type { Refinement } from "../src/types.js";

function changedTexts(tokens: { text: string; changed: boolean }[]): string[] {
  return tokens.filter((t) => t.changed).map((t) => t.text);
}

describe("markTokens", () => {
  it("flags matching identifiers case-insensitively", () => {
    const tokens = markTokens("SELECT Wickets FROM t", ["wickets"]);
    expect(changedTexts(tokens)).toEqual(["Wickets"]);
  });

  it("treats a quoted identifier as one token and matches its bare name", () => {
    const tokens = markTokens('SELECT "strike rate" FROM t', ["strike rate"]);
    expect(changedTexts(tokens)).toEqual(['"strike rate"']);
  });

  it("unescapes doubled quotes before matching", () => {
    const tokens = markTokens('SELECT "we""ird" FROM t', ['we"ird']);
    expect(changedTexts(tokens)).toEqual(['"we""ird"']);
  });

  it("reassembles to the original text", () => {
    const sql = 'SELECT "Player", Wkts FROM t WHERE Wkts >= 500';
    const tokens = markTokens(sql, []);
    expect(tokens.map((t) => t.text).join("")).toBe(sql);
  });

  it("never flags punctuation or whitespace", () => {
    const tokens = markTokens("SELECT a, b FROM t", ["a", "b"]);
    for (const token of tokens) {
      if (token.changed) expect(token.text).toMatch(/^[ab]$/);
    }
  });
});

describe("diffSides", () => {
  const refinement: Refinement = {
    substitutions: [{ original: "wickets", replacement: "Wkts", score: 0.6 }],
    unresolved: ["bowler"],
  };

  it("marks originals and unresolved names on the generated side", () => {
    const diff = diffSides(
      "SELECT bowler, wickets FROM t",
      'SELECT "Player", "Wkts" FROM t',
      refinement,
    );
    expect(changedTexts(diff.raw)).toEqual(["bowler", "wickets"]);
  });

  it("marks replacements on the refined side", () => {
    const diff = diffSides(
      "SELECT wickets FROM t",
      'SELECT "Wkts" FROM t',
      refinement,
    );
    expect(changedTexts(diff.refined)).toEqual(['"Wkts"']);
  });

  it("marks nothing without a refinement report", () => {
    const diff = diffSides("SELECT a FROM t", "SELECT a FROM t", null);
    expect(changedTexts(diff.raw)).toEqual([]);
    expect(changedTexts(diff.refined)).toEqual([]);
    expect(diff.substitutions).toEqual([]);
    expect(diff.unresolved).toEqual([]);
  });
});
