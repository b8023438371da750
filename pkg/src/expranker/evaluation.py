"""Top-N explanation selection and NDCG / precision / recall / F1 at N."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

DEFAULT_N = 10


@dataclass(frozen=True)
class RankedList:
    pair: tuple
    ranked_explanations: np.ndarray
    scores: np.ndarray

    def __len__(self):
        return len(self.ranked_explanations)


def top_n_indices(scores, n, candidates=None) -> np.ndarray:
    """Indices of the ``n`` largest scores, ties broken by ascending index.

    NaN scores rank below everything. With *candidates* only those indices
    are eligible.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if candidates is None:
        idx = np.arange(scores.shape[0])
    else:
        idx = np.unique(np.asarray(candidates, dtype=np.int64))
    if n <= 0 or idx.size == 0:
        return np.zeros(0, dtype=np.int64)
    vals = np.nan_to_num(scores[idx], nan=-np.inf)
    if idx.size > n:
        kth = np.partition(vals, idx.size - n)[idx.size - n]
        above = vals > kth
        tied = np.flatnonzero(vals == kth)[: n - int(above.sum())]
        keep = np.concatenate([np.flatnonzero(above), tied])
        idx, vals = idx[keep], vals[keep]
    order = np.lexsort((idx, -vals))
    return idx[order]


def _ranked(scorer, u, i, n, candidates):
    scores = scorer.scores(u, i) if hasattr(scorer, "scores") else np.asarray(scorer(u, i))
    top = top_n_indices(scores, n, candidates)
    return RankedList((u, i), top, np.asarray(scores)[top])


def top_n_global(scorer, u, i, n: int = DEFAULT_N) -> RankedList:
    """Best ``n`` of all explanations for ``(u, i)``.

    *scorer* is a ranker with ``scores(u, i)`` or a callable returning the
    full score vector.
    """
    return _ranked(scorer, u, i, n, None)


def top_n_item(scorer, u, i, item_candidates, n: int = DEFAULT_N) -> RankedList:
    """Best ``n`` among the explanations linked to item ``i`` in training."""
    return _ranked(scorer, u, i, n, np.asarray(list(item_candidates), dtype=np.int64))


def _ranks(ranked):
    return ranked.ranked_explanations if isinstance(ranked, RankedList) else np.asarray(ranked)


def ndcg_at_n(ranked, relevant, n: int = DEFAULT_N) -> float:
    """Binary-gain NDCG with ``1 / log2(rank + 1)`` discount."""
    if not relevant:
        raise ValueError("relevant set is empty")
    top = _ranks(ranked)[:n]
    dcg = sum(1.0 / math.log2(r + 2) for r, e in enumerate(top) if int(e) in relevant)
    idcg = sum(1.0 / math.log2(r + 2) for r in range(min(len(relevant), n)))
    return dcg / idcg


def precision_recall_f1_at_n(ranked, relevant, n: int = DEFAULT_N) -> tuple[float, float, float]:
    if not relevant:
        raise ValueError("relevant set is empty")
    hits = sum(1 for e in _ranks(ranked)[:n] if int(e) in relevant)
    pre = hits / n
    rec = hits / len(relevant)
    f1 = 2 * pre * rec / (pre + rec) if hits else 0.0
    return pre, rec, f1


@dataclass(frozen=True)
class MetricsReport:
    """Per-pair metric means in [0, 1]; :meth:`percent` scales to %."""

    ndcg: float
    precision: float
    recall: float
    f1: float
    n_pairs_evaluated: int
    n: int = DEFAULT_N

    def percent(self) -> dict:
        return {
            f"NDCG@{self.n}": 100 * self.ndcg,
            f"Pre@{self.n}": 100 * self.precision,
            f"Rec@{self.n}": 100 * self.recall,
            f"F1@{self.n}": 100 * self.f1,
        }


def group_test_pairs(test_triplets) -> tuple[np.ndarray, list]:
    """Distinct test (u, i) pairs and, for each, its set of test explanations."""
    t = np.asarray(test_triplets, dtype=np.int64).reshape(-1, 3)
    pairs, inverse = np.unique(t[:, :2], axis=0, return_inverse=True)
    inverse = inverse.ravel()
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(len(pairs) + 1))
    truth = [set(t[order[bounds[k] : bounds[k + 1]], 2].tolist()) for k in range(len(pairs))]
    return pairs, truth


def evaluate(
    scorer,
    test_triplets,
    mode: str = "global",
    n: int = DEFAULT_N,
    train_triplets=None,
    batch_size: int = 1024,
) -> MetricsReport:
    """Average per-pair metrics over every distinct test (u, i) pair.

    ``mode="item"`` restricts candidates to each item's training
    explanations and needs *train_triplets*.
    """
    if mode not in ("global", "item"):
        raise ValueError("mode must be 'global' or 'item'")
    pairs, truth = group_test_pairs(test_triplets)
    if len(pairs) == 0:
        raise ValueError("empty test split")

    item_cands = None
    if mode == "item":
        if train_triplets is None:
            raise ValueError("item-level evaluation needs the training triplets")
        tr = np.asarray(train_triplets, dtype=np.int64)
        item_cands = {}
        for i, e in np.unique(tr[:, 1:], axis=0):
            item_cands.setdefault(int(i), []).append(int(e))

    sums = np.zeros(4)
    batched = hasattr(scorer, "scores_batch")
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start : start + batch_size]
        if batched:
            block = scorer.scores_batch(chunk[:, 0], chunk[:, 1])
        else:
            block = [scorer.scores(u, i) for u, i in chunk]
        for k, (u, i) in enumerate(chunk):
            cands = None if item_cands is None else item_cands.get(int(i), [])
            top = top_n_indices(block[k], n, cands)
            rel = truth[start + k]
            pre, rec, f1 = precision_recall_f1_at_n(top, rel, n)
            sums += (ndcg_at_n(top, rel, n), pre, rec, f1)
    means = sums / len(pairs)
    return MetricsReport(*means.tolist(), n_pairs_evaluated=len(pairs), n=n)


def format_table(rows: dict, n: int = DEFAULT_N, title: Optional[str] = None) -> str:
    """Aligned text table of ``{method: MetricsReport}`` in percent, 3 decimals."""
    cols = [f"NDCG@{n}", f"Pre@{n}", f"Rec@{n}", f"F1@{n}"]
    width = max([6] + [len(m) for m in rows])
    lines = []
    if title:
        lines.append(title)
    header = f"{'':<{width}} | " + " ".join(f"{c:>9}" for c in cols)
    lines += [header, "-" * len(header)]
    for method, report in rows.items():
        vals = report.percent()
        lines.append(f"{method.upper():<{width}} | " + " ".join(f"{vals[c]:>9.3f}" for c in cols))
    return "\n".join(lines)
