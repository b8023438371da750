"""Tokenization shared by the sentence filter and the shingler."""

import re
import string

_PUNCT = string.punctuation + "\u2018\u2019\u201c\u201d\u2013\u2014\u2026"
_WS = re.compile(r"\s+")


def normalize_ws(text):
    return _WS.sub(" ", text).strip()


def tokenize(text):
    """Lowercase, split on whitespace and strip punctuation from token ends.

    Tokens that are pure punctuation vanish. Interior apostrophes and
    hyphens are kept (``"don't"``, ``"first-rate"``).
    """
    out = []
    for raw in text.lower().replace("\u2019", "'").split():
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(tok)
    return out
