"""Yelp open dataset reviews, plus optional tips, to the pipeline schema.

    python3 scripts/adapters/yelp.py review.json reviews.jsonl --tips tip.json

Field mapping:
    user_id                         -> user
    business_id                     -> item
    stars                           -> rating
    date ("YYYY-MM-DD HH:MM:SS")    -> timestamp, read as UTC
    text                            -> text
    tips by the same user on the
    same business, joined by a
    space in file order             -> title

Yelp reviews have no heading, so the tip plays that role. Tips without a
matching review are dropped. The tip file is held in memory.
"""

import argparse
import sys
from datetime import datetime, timezone

from _common import read_json_lines, record, write_records


def parse_date(value):
    for fmt in ("%Y-%m-%d %H:%M:%S", "%Y-%m-%d"):
        try:
            return int(datetime.strptime(value, fmt).replace(tzinfo=timezone.utc).timestamp())
        except (TypeError, ValueError):
            continue
    return None


def load_tips(path):
    tips = {}
    for obj in read_json_lines(path):
        text = (obj.get("text") or "").strip()
        if text:
            tips.setdefault((obj.get("user_id"), obj.get("business_id")), []).append(text)
    return {k: " ".join(v) for k, v in tips.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source")
    ap.add_argument("dest", nargs="?", default="-")
    ap.add_argument("--tips", help="tip.json from the same release")
    args = ap.parse_args()
    tips = load_tips(args.tips) if args.tips else {}

    def convert(obj):
        key = (obj.get("user_id"), obj.get("business_id"))
        return record(key[0], key[1], obj.get("stars"), parse_date(obj.get("date")), obj.get("text"), tips.get(key))

    written, skipped = write_records(map(convert, read_json_lines(args.source)), args.dest)
    print(f"wrote {written} records, skipped {skipped}", file=sys.stderr)


if __name__ == "__main__":
    main()
