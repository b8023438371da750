"""Greedy query-and-remove grouping of near-duplicate sentences."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .minhash import LshIndex, MinHashSignature, minhash_matrix, shingles


@dataclass(frozen=True)
class GroupingConfig:
    shingle_size: int = 2
    threshold: float = 0.9
    min_group_size: int = 5
    num_perm: int = 128
    seed: int = 1

    def __post_init__(self):
        if self.shingle_size < 1:
            raise ValueError("shingle_size must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.min_group_size < 1:
            raise ValueError("min_group_size must be >= 1")


@dataclass(frozen=True)
class ExplanationGroup:
    explanation_id: int
    member_ids: frozenset

    @property
    def occurrence(self) -> int:
        return len(self.member_ids)


def select_representative(group_member_ids, seed_id=None) -> int:
    """The sentence whose query produced the group.

    Without a recorded seed (e.g. a standalone member set) the smallest id is
    returned, which is the seed under ascending-id iteration.
    """
    if not group_member_ids:
        raise ValueError("empty group")
    if seed_id is not None:
        if seed_id not in group_member_ids:
            raise ValueError("seed is not a member of the group")
        return seed_id
    return min(group_member_ids)


def group_sentences(sentences: Sequence, config: GroupingConfig = GroupingConfig(), index=None):
    """Partition sentences into near-duplicate groups.

    Every sentence is signed and inserted; then, in ascending sentence id,
    each sentence not yet claimed queries the index. A result of more than
    ``min_group_size`` members becomes a group represented by the querying
    sentence. All members of the result, kept or not, leave the index.

    Returns ``(groups, assignment, index)``: groups in creation order, a map
    from each kept member to its group's explanation id, and the (drained)
    index for call-count inspection.
    """
    ordered = sorted(sentences, key=lambda s: s.sentence_id)
    ids = [s.sentence_id for s in ordered]
    if len(set(ids)) != len(ids):
        raise ValueError("sentence ids must be unique")

    if index is None:
        index = LshIndex(config.threshold, config.num_perm, config.seed)
    sigs = minhash_matrix([shingles(s.text, config.shingle_size) for s in ordered], config.num_perm, config.seed)
    for sid, row in zip(ids, sigs):
        index.insert(sid, MinHashSignature(row, config.seed))

    groups = []
    assignment = {}
    queried = set()
    for sid, row in zip(ids, sigs):
        if sid in queried:
            continue
        found = index.query(MinHashSignature(row, config.seed))
        if len(found) > config.min_group_size:
            rep = select_representative(found, seed_id=sid)
            groups.append(ExplanationGroup(rep, frozenset(found)))
            for member in found:
                assignment[member] = rep
        for member in found:
            index.remove(member)
            queried.add(member)
    return groups, assignment, index
