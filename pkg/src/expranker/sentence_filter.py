"""Keep/drop gate for explanation sentences.

A sentence survives when it has no personal pronoun and at least one noun
and one adjective. Tagging is a lexicon lookup; anything with a
``tags(token) -> set`` method can stand in for :class:`PosLexicon`.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol

from .text import tokenize

NOUN = "N"
ADJ = "ADJ"

REQUIRED_PRONOUNS = frozenset(
    "i me my mine we us our ours you your yours he him his she her hers".split()
)


class Tagger(Protocol):
    def tags(self, token: str) -> frozenset: ...


@dataclass(frozen=True)
class PosLexicon:
    noun_set: frozenset = field(default_factory=frozenset)
    adjective_set: frozenset = field(default_factory=frozenset)
    pronoun_set: frozenset = REQUIRED_PRONOUNS

    def __post_init__(self):
        missing = REQUIRED_PRONOUNS - self.pronoun_set
        if missing:
            raise ValueError(f"pronoun set lacks {sorted(missing)}")
        # pronouns are never content words
        object.__setattr__(self, "noun_set", frozenset(self.noun_set) - self.pronoun_set)
        object.__setattr__(self, "adjective_set", frozenset(self.adjective_set) - self.pronoun_set)

    def tags(self, token: str) -> frozenset:
        out = set()
        if token in self.noun_set:
            out.add(NOUN)
        if token in self.adjective_set:
            out.add(ADJ)
        return frozenset(out)

    @classmethod
    def from_files(cls, lexicon_path, pronoun_path=None) -> "PosLexicon":
        nouns, adjs = set(), set()
        for lineno, line in enumerate(_read_lines(lexicon_path), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                word, tags = line.rstrip("\n").split("\t")
            except ValueError:
                raise ValueError(f"{lexicon_path}:{lineno}: expected 'word<TAB>tags'") from None
            tagset = {t.strip() for t in tags.split(",") if t.strip()}
            unknown = tagset - {NOUN, ADJ}
            if unknown:
                raise ValueError(f"{lexicon_path}:{lineno}: unknown tag(s) {sorted(unknown)}")
            word = word.lower()
            if NOUN in tagset:
                nouns.add(word)
            if ADJ in tagset:
                adjs.add(word)
        pronouns = set(REQUIRED_PRONOUNS)
        if pronoun_path is not None:
            pronouns |= {
                w.strip().lower() for w in _read_lines(pronoun_path) if w.strip() and not w.startswith("#")
            }
        return cls(frozenset(nouns), frozenset(adjs), frozenset(pronouns))


def _read_lines(path):
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt", encoding="utf-8") as fh:
        return fh.readlines()


_default: Optional[PosLexicon] = None


def default_lexicon() -> PosLexicon:
    """The bundled WordNet-derived lexicon and pronoun list (loaded once)."""
    global _default
    if _default is None:
        data = resources.files("expranker") / "data"
        with resources.as_file(data / "lexicon.tsv.gz") as lex, resources.as_file(
            data / "pronouns.txt"
        ) as pro:
            _default = PosLexicon.from_files(lex, pro)
    return _default


def _text(sentence) -> str:
    return sentence if isinstance(sentence, str) else sentence.text


def contains_personal_pronoun(sentence, lexicon: Tagger) -> bool:
    pronouns = lexicon.pronoun_set
    return any(tok in pronouns for tok in tokenize(_text(sentence)))


def pos_profile(sentence, lexicon: Tagger) -> tuple[int, int]:
    """(noun_count, adjective_count); a word tagged both counts in both."""
    nouns = adjs = 0
    for tok in tokenize(_text(sentence)):
        tags = lexicon.tags(tok)
        nouns += NOUN in tags
        adjs += ADJ in tags
    return nouns, adjs


def is_candidate(sentence, lexicon: Tagger) -> bool:
    if contains_personal_pronoun(sentence, lexicon):
        return False
    nouns, adjs = pos_profile(sentence, lexicon)
    return nouns >= 1 and adjs >= 1


def filter_sentences(sentences, lexicon: Tagger) -> list:
    return [s for s in sentences if is_candidate(s, lexicon)]
