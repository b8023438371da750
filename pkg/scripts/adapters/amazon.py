"""Amazon review dump (one JSON object per line) to the pipeline schema.

    python3 scripts/adapters/amazon.py Movies_and_TV_5.json.gz reviews.jsonl

Field mapping:
    reviewerID      -> user
    asin            -> item
    overall         -> rating (rounded to an integer)
    unixReviewTime  -> timestamp
    reviewText      -> text
    summary         -> title (the review heading)
"""

import argparse
import sys

from _common import read_json_lines, record, write_records


def convert(obj):
    return record(obj.get("reviewerID"), obj.get("asin"), obj.get("overall"), obj.get("unixReviewTime"), obj.get("reviewText"), obj.get("summary"))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source")
    ap.add_argument("dest", nargs="?", default="-")
    args = ap.parse_args()
    written, skipped = write_records(map(convert, read_json_lines(args.source)), args.dest)
    print(f"wrote {written} records, skipped {skipped}", file=sys.stderr)


if __name__ == "__main__":
    main()
