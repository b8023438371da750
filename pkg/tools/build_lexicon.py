"""Compile the bundled noun/adjective lexicon from WordNet 3.0 index files.

Usage::

    python tools/build_lexicon.py /path/to/wordnet-3.0 src/expranker/data/lexicon.tsv.gz

A POS tag is kept for a word when WordNet has at least one corpus-tagged
sense for it in that POS, or when that POS is the only one WordNet lists
for the word. Regular and irregular noun plurals and irregular adjective
comparatives are added. Function words are excluded.
"""

import gzip
import sys
from collections import defaultdict
from pathlib import Path

FUNCTION_WORDS = set("""
a an the this that these those it its itself they them their theirs there here
is am are was were be been being do does did done have has had having
in on at by for with of to from into onto over under about above below up down
out off through during before after between against among upon within without
and or but nor so yet if than then as because while although though whether
not no yes very too also just only even still again ever never always
all any some each every both either neither few many much more most less least
other another such same own what which who whom whose where when why how
can could will would shall should may might must ought
one ones s t don
""".split())

POS_FILES = {"N": "noun", "ADJ": "adj"}
OTHER_POS = ("verb", "adv")


def read_index(path):
    """Return ``{lemma: tagged_sense_count}`` for single-word alphabetic lemmas."""
    out = {}
    for line in path.read_text(encoding="latin-1").splitlines():
        if line.startswith(" "):
            continue
        parts = line.split()
        lemma = parts[0]
        if not lemma.isalpha():
            continue
        p_cnt = int(parts[3])
        tagsense = int(parts[5 + p_cnt])
        out[lemma.lower()] = tagsense
    return out


def pluralize(word):
    if word.endswith(("s", "x", "z", "ch", "sh")):
        return word + "es"
    if word.endswith("y") and len(word) > 1 and word[-2] not in "aeiou":
        return word[:-1] + "ies"
    return word + "s"


def build(wn_dir):
    wn_dir = Path(wn_dir)
    indexes = {tag: read_index(wn_dir / f"index.{name}") for tag, name in POS_FILES.items()}
    others = [read_index(wn_dir / f"index.{name}") for name in OTHER_POS]

    tags = defaultdict(set)
    for tag, index in indexes.items():
        for word, tagsense in index.items():
            listed_elsewhere = any(word in idx for t, idx in indexes.items() if t != tag)
            listed_elsewhere = listed_elsewhere or any(word in idx for idx in others)
            if tagsense > 0 or not listed_elsewhere:
                tags[word].add(tag)

    for word in [w for w, t in tags.items() if "N" in t]:
        tags[pluralize(word)].add("N")
    for exc, tag in (("noun.exc", "N"), ("adj.exc", "ADJ")):
        for line in (wn_dir / exc).read_text(encoding="latin-1").splitlines():
            inflected, base = line.split()[:2]
            if inflected.isalpha() and tag in tags.get(base, ()):
                tags[inflected].add(tag)

    for word in FUNCTION_WORDS:
        tags.pop(word, None)
    return tags


def main(argv):
    wn_dir, out = argv[1], argv[2]
    tags = build(wn_dir)
    with gzip.open(out, "wt", encoding="utf-8") as fh:
        fh.write("# compiled from WordNet 3.0 (c) 2006 Princeton University, see README\n")
        for word in sorted(tags):
            fh.write(f"{word}\t{','.join(sorted(tags[word], key=['N', 'ADJ'].index))}\n")
    print(f"wrote {len(tags)} entries to {out}")


if __name__ == "__main__":
    main(sys.argv)
