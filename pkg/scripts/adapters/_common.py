"""Shared helpers for the corpus adapters: read JSON lines, write the pipeline schema."""

import gzip
import json
import sys


def open_any(path, mode="rt"):
    if path == "-":
        return sys.stdin if "r" in mode else sys.stdout
    opener = gzip.open if str(path).endswith(".gz") else open
    return opener(path, mode, encoding="utf-8")


def read_json_lines(path):
    with open_any(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_records(records, path):
    """Write normalized dicts; returns (written, skipped)."""
    written = skipped = 0
    with open_any(path, "wt") as out:
        for rec in records:
            if rec is None:
                skipped += 1
                continue
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
            written += 1
    return written, skipped


def record(user, item, rating, timestamp, text, title=None):
    if not user or not item or rating is None or timestamp is None:
        return None
    rating = int(round(float(rating)))
    if not 1 <= rating <= 5 or not (text or title):
        return None
    out = {"user": str(user), "item": str(item), "rating": rating, "timestamp": int(timestamp), "text": text or ""}
    if title:
        out["title"] = title
    return out
