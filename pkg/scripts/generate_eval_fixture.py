#!/usr/bin/env python3
"""Generate the bundled evaluation fixture of (question, gold, predicted)
SQL pairs.

Deterministic: a fixed seed drives every choice, so rerunning the script
reproduces the committed file byte for byte. Exactly INVALID_COUNT of the
predicted statements are malformed on purpose; everything else parses.

Usage: python scripts/generate_eval_fixture.py [output_path]
"""
from __future__ import annotations

import json
import random
import sys

SEED = 20240917
PAIR_COUNT = 665
INVALID_COUNT = 5

BOWLING = {
    "table": "bowling_odi",
    "label": "Player",
    "group_keys": ["Span"],
    "int_measures": ["Mat", "Inns", "Balls", "Mdns", "Runs", "Wkts"],
    "real_measures": ["Ave", "Econ", "SR"],
    "ddl": (
        'CREATE TABLE bowling_odi (Player TEXT PRIMARY KEY, Span TEXT, '
        'Mat INTEGER, Inns INTEGER, Balls INTEGER, Overs REAL, '
        'Mdns INTEGER, Runs INTEGER, Wkts INTEGER, Ave REAL, Econ REAL, '
        'SR REAL, BBI TEXT);'
    ),
}
BATTING = {
    "table": "batting_odi",
    "label": "player_name",
    "group_keys": ["span"],
    "int_measures": ["matches", "innings", "runs", '"100"'],
    "real_measures": ["average", "strike_rate"],
    "ddl": (
        'CREATE TABLE batting_odi (player_name TEXT PRIMARY KEY, span TEXT, '
        'matches INTEGER, innings INTEGER, runs INTEGER, average REAL, '
        'strike_rate REAL, "100" INTEGER);'
    ),
}

# Deliberately malformed predictions; one grammar violation each.
INVALID_PREDICTIONS = [
    "SELECT FROM bowling_odi ORDER BY Wkts DESC",
    "SELECT Player, FROM bowling_odi LIMIT 10",
    "SELECT player_name runs innings FROM batting_odi WHERE",
    "SELEC Wkts FROM bowling_odi",
    "SELECT AVG(average FROM batting_odi GROUP BY span",
]


def _plain(name: str) -> str:
    return name.strip('"')


def make_gold(rng: random.Random, schema: dict) -> tuple[str, str]:
    table = schema["table"]
    label = schema["label"]
    measures = schema["int_measures"] + schema["real_measures"]
    kind = rng.randrange(6)
    if kind == 0:
        m = rng.choice(measures)
        n = rng.choice([3, 5, 8, 10, 12, 15])
        sql = (f"SELECT {label}, {m} FROM {table} "
               f"ORDER BY {m} DESC LIMIT {n}")
        question = f"top {n} {_plain(label)} by {_plain(m)}"
    elif kind == 1:
        m = rng.choice(measures)
        k = rng.choice(schema["group_keys"])
        sql = f"SELECT {k}, AVG({m}) FROM {table} GROUP BY {k}"
        question = f"average {_plain(m)} per {_plain(k)}"
    elif kind == 2:
        m = rng.choice(schema["int_measures"])
        threshold = rng.choice([100, 200, 250, 300, 5000, 10000])
        sql = (f"SELECT {label}, {m} FROM {table} "
               f"WHERE {m} > {threshold}")
        question = f"{_plain(label)} with {_plain(m)} above {threshold}"
    elif kind == 3:
        picked = rng.sample(measures, 2)
        sql = f"SELECT {label}, {picked[0]}, {picked[1]} FROM {table}"
        question = f"show {_plain(picked[0])} and {_plain(picked[1])}"
    elif kind == 4:
        m = rng.choice(schema["int_measures"])
        sql = f"SELECT COUNT(*) FROM {table} WHERE {m} >= 250"
        question = f"how many rows have {_plain(m)} of at least 250"
    else:
        m = rng.choice(measures)
        sql = (f"SELECT {label} FROM {table} ORDER BY {m} DESC, "
               f"{label} LIMIT 20")
        question = f"rank {_plain(label)} by {_plain(m)}"
    return question, sql


def mutate(rng: random.Random, sql: str, schema: dict) -> str:
    """Produce the 'predicted' statement: usually gold or a near miss."""
    roll = rng.random()
    if roll < 0.55:
        return sql
    if roll < 0.65:
        return sql.lower()
    if roll < 0.75:
        label = schema["label"]
        return sql.replace(f"SELECT {label},",
                           f"SELECT {label} AS name,", 1)
    if roll < 0.82:
        if "LIMIT" in sql:
            return sql.rsplit("LIMIT", 1)[0] + "LIMIT 7"
        return sql + " LIMIT 25"
    if roll < 0.90:
        measures = schema["int_measures"] + schema["real_measures"]
        old = next((m for m in measures if f" {m} " in f"{sql} "), None)
        if old is None:
            return sql
        new = rng.choice([m for m in measures if m != old])
        return sql.replace(old, new)
    if roll < 0.96:
        if " > " in sql:
            return sql.replace(" > ", " >= ")
        if "LIMIT" not in sql:
            return sql + " LIMIT 50"
        return sql
    return f"SELECT DISTINCT{sql[6:]}"


def main() -> int:
    out_path = sys.argv[1] if len(sys.argv) > 1 else \
        "src/tabletalk/data/eval_pairs_665.jsonl"
    rng = random.Random(SEED)
    invalid_at = set(rng.sample(range(PAIR_COUNT), INVALID_COUNT))
    lines = []
    for i in range(PAIR_COUNT):
        schema = BOWLING if rng.random() < 0.5 else BATTING
        question, gold = make_gold(rng, schema)
        if i in invalid_at:
            predicted = INVALID_PREDICTIONS[len(
                [j for j in invalid_at if j < i])]
        else:
            predicted = mutate(rng, gold, schema)
        lines.append(json.dumps({
            "question": question,
            "gold_sql": gold,
            "predicted_sql": predicted,
            "schema_ddl": schema["ddl"],
        }, sort_keys=True))
    with open(out_path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} pairs to {out_path}, "
          f"{INVALID_COUNT} invalid at {sorted(invalid_at)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
