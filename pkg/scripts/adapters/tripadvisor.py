"""TripAdvisor hotel reviews (JSON lines, one review each) to the pipeline schema.

    python3 scripts/adapters/tripadvisor.py review.json reviews.jsonl

Field mapping:
    author.id (else author.username)  -> user
    offering_id                       -> item
    ratings.overall                   -> rating
    date ("Month D, YYYY")            -> timestamp, midnight UTC
    text                              -> text
    title                             -> title (the review heading)

Quotation marks that some dumps wrap around titles are stripped.
"""

import argparse
import sys
from datetime import datetime, timezone

from _common import read_json_lines, record, write_records


def parse_date(value):
    for fmt in ("%B %d, %Y", "%Y-%m-%d", "%b %d, %Y"):
        try:
            return int(datetime.strptime(value, fmt).replace(tzinfo=timezone.utc).timestamp())
        except (TypeError, ValueError):
            continue
    return None


def convert(obj):
    author = obj.get("author") or {}
    user = author.get("id") or author.get("username")
    rating = (obj.get("ratings") or {}).get("overall")
    title = (obj.get("title") or "").strip().strip('"“”') or None
    return record(user, obj.get("offering_id"), rating, parse_date(obj.get("date")), obj.get("text"), title)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source")
    ap.add_argument("dest", nargs="?", default="-")
    args = ap.parse_args()
    written, skipped = write_records(map(convert, read_json_lines(args.source)), args.dest)
    print(f"wrote {written} records, skipped {skipped}", file=sys.stderr)


if __name__ == "__main__":
    main()
