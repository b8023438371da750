"""Synthetic data with planted structure, for tests, benchmarks and demos."""

from __future__ import annotations

import json

import numpy as np

from .corpus import Sentence


def planted_preferences(
    n_users: int = 5000,
    n_items: int = 1000,
    n_explanations: int = 500,
    n_blocks: int = 10,
    items_per_user: float = 4.0,
    exps_per_pair: float = 1.5,
    user_share: float = 0.5,
    zipf: float = 1.2,
    noise: float = 0.05,
    seed: int = 0,
) -> tuple[np.ndarray, tuple[int, int, int]]:
    """Triplets where explanations come from the user's or the item's block.

    Users, items and explanations each belong to one of ``n_blocks``
    blocks. A pair's explanation is drawn from the user's block with
    probability ``user_share`` and from the item's block otherwise, with
    Zipf popularity inside the block; a ``noise`` fraction is uniform over
    all explanations. Every entity is guaranteed at least one triplet.
    """
    rng = np.random.default_rng(seed)
    user_block = rng.integers(0, n_blocks, n_users)
    item_block = rng.integers(0, n_blocks, n_items)
    exp_block = np.arange(n_explanations) % n_blocks
    members = [np.flatnonzero(exp_block == b) for b in range(n_blocks)]
    weights = []
    for m in members:
        w = 1.0 / np.arange(1, len(m) + 1) ** zipf
        weights.append(w / w.sum())

    def draw(block):
        return members[block][rng.choice(len(members[block]), p=weights[block])]

    triplets = set()
    for u in range(n_users):
        n_i = 1 + rng.poisson(items_per_user - 1)
        for i in rng.choice(n_items, size=min(n_i, n_items), replace=False):
            for _ in range(1 + rng.poisson(exps_per_pair - 1)):
                if rng.random() < noise:
                    e = rng.integers(n_explanations)
                elif rng.random() < user_share:
                    e = draw(user_block[u])
                else:
                    e = draw(item_block[i])
                triplets.add((u, int(i), int(e)))

    t = np.array(sorted(triplets), dtype=np.int64)
    extra = []
    for col, n in ((1, n_items), (2, n_explanations)):
        missing = np.setdiff1d(np.arange(n), t[:, col])
        for x in missing:
            row = [int(rng.integers(n_users)), int(rng.integers(n_items)), int(rng.integers(n_explanations))]
            row[col] = int(x)
            extra.append(tuple(row))
    if extra:
        t = np.unique(np.vstack([t, np.array(extra, dtype=np.int64)]), axis=0)
    return t, (n_users, n_items, n_explanations)


def random_words(rng, n_words, vocab=5000):
    return [f"w{x}" for x in rng.integers(0, vocab, n_words)]


def planted_sentence_clusters(
    n_sentences: int = 2000,
    n_clusters: int = 20,
    size_range: tuple = (6, 50),
    length: int = 40,
    seed: int = 0,
) -> tuple[list, list]:
    """Sentences with planted near-duplicate clusters among random noise.

    A cluster is a random base sentence of ``length`` tokens and variants
    that replace its last token, so any two members share all but one of
    their 2-shingles (Jaccard ``(length-2)/length``, 0.95 at the default).
    Returns ``(sentences, cluster_of)`` with ``cluster_of[k] == -1`` for noise.
    Sentence ids are shuffled so clusters are interleaved with noise.
    """
    rng = np.random.default_rng(seed)
    texts, labels = [], []
    for c in range(n_clusters):
        base = random_words(rng, length)
        size = int(rng.integers(size_range[0], size_range[1] + 1))
        for k in range(size):
            words = base if k == 0 else base[:-1] + [f"v{c}x{k}"]
            texts.append(" ".join(words))
            labels.append(c)
    while len(texts) < n_sentences:
        texts.append(" ".join(random_words(rng, length)))
        labels.append(-1)
    order = rng.permutation(len(texts))
    sentences = [Sentence(int(sid), int(sid), texts[j]) for sid, j in enumerate(order)]
    return sentences, [labels[j] for j in order]


_PLANTED = [
    "Great location.",
    "The acting is superb.",
    "This is a wonderful movie.",
    "The room was clean.",
    "Prices are reasonable.",
    "The cast is first rate.",
    "Great movie.",
    "The food was delicious.",
]
_VARIANTS = [str.lower, str.upper, lambda s: s, lambda s: s.rstrip(".") + "!"]
_FILLER = [
    "I loved it.",
    "My wife enjoyed the trip.",
    "We will come back next year.",
    "Watch repeatedly.",
    "Highly recommended to everyone.",
    "You should see it.",
    "The staff was friendly and helpful.",
    "Parking costs extra.",
    "Breakfast was served at seven.",
    "Not worth the money.",
]


def fixture_reviews(n_reviews: int = 200, seed: int = 7) -> list[dict]:
    """The bundled review corpus: planted repeated explanations plus filler.

    Each of the eight planted explanations appears, with case and
    punctuation variations, in enough reviews to form a group.
    """
    rng = np.random.default_rng(seed)
    users = [f"U{k:03d}" for k in range(40)]
    items = [f"I{k:03d}" for k in range(25)]
    out = []
    for r in range(n_reviews):
        parts = []
        n_planted = int(rng.integers(0, 3))
        for j in rng.choice(len(_PLANTED), size=n_planted, replace=False):
            parts.append(_VARIANTS[int(rng.integers(len(_VARIANTS)))](_PLANTED[j]))
        for j in rng.choice(len(_FILLER), size=int(rng.integers(1, 3)), replace=False):
            parts.append(_FILLER[j])
        rng.shuffle(parts)
        rec = {
            "user": users[int(rng.integers(len(users)))],
            "item": items[int(rng.integers(len(items)))],
            "rating": int(rng.integers(1, 6)),
            "timestamp": 1_400_000_000 + 86_400 * r,
            "text": " ".join(parts),
        }
        if rng.random() < 0.3:
            rec["title"] = _VARIANTS[2](_PLANTED[int(rng.integers(len(_PLANTED)))])
        out.append(rec)
    return out


def write_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
