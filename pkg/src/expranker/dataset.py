"""User-item-explanation datasets: the ``IDs.txt`` / ``id2exp.txt`` format,
statistics, and coverage-constrained train/test splits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

IDS_FILE = "IDs.txt"
TEXT_FILE = "id2exp.txt"


class DatasetError(ValueError):
    pass


class FormatError(DatasetError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


@dataclass(frozen=True)
class Record:
    user: str
    item: str
    rating: int
    timestamp: int
    exp_ids: tuple
    sen_ids: tuple


class Vocab:
    """Bidirectional map between external string/int IDs and dense indices."""

    def __init__(self, ids: Iterable = ()):
        self.ids = []
        self.index = {}
        for x in ids:
            self.add(x)

    def add(self, x) -> int:
        idx = self.index.get(x)
        if idx is None:
            idx = self.index[x] = len(self.ids)
            self.ids.append(x)
        return idx

    def __len__(self):
        return len(self.ids)

    def __getitem__(self, x):
        return self.index[x]

    def __contains__(self, x):
        return x in self.index

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.ids == other.ids


class Dataset:
    """Records plus explanation text; vocabularies are in first-appearance order.

    ``triplets`` is an ``(n, 3)`` int64 array of (user, item, explanation)
    indices with duplicates collapsed.
    """

    def __init__(self, records: Sequence[Record], exp_text: Mapping[int, str]):
        self.records = list(records)
        self.exp_text = dict(exp_text)
        self.users, self.items, self.explanations = Vocab(), Vocab(), Vocab()
        seen = set()
        triplets = []
        for rec in self.records:
            if not rec.exp_ids:
                raise DatasetError(f"record ({rec.user}, {rec.item}) has no explanation")
            u = self.users.add(rec.user)
            i = self.items.add(rec.item)
            for e_id in rec.exp_ids:
                e = self.explanations.add(e_id)
                if (u, i, e) not in seen:
                    seen.add((u, i, e))
                    triplets.append((u, i, e))
        self.triplets = np.asarray(triplets, dtype=np.int64).reshape(-1, 3)

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.users), len(self.items), len(self.explanations)

    def text_of(self, e: int) -> str:
        """Text of the explanation with dense index *e*."""
        return self.exp_text[self.explanations.ids[e]]


def build_dataset(records, sentences, assignment: Mapping[int, int]) -> Dataset:
    """Link records to the explanation groups their sentences fell into.

    Records with no grouped sentence are dropped.
    """
    by_record: dict = {}
    text = {}
    for s in sentences:
        text[s.sentence_id] = s.text
        rep = assignment.get(s.sentence_id)
        if rep is not None:
            by_record.setdefault(s.record_ref, []).append((rep, s.sentence_id))
    out = []
    exp_text = {}
    for ref, rec in enumerate(records):
        pairs = by_record.get(ref)
        if not pairs:
            continue
        for rep, sid in pairs:
            exp_text[rep] = text[rep]
            exp_text[sid] = text[sid]
        out.append(
            Record(
                rec.user_id,
                rec.item_id,
                rec.rating,
                rec.timestamp,
                tuple(p[0] for p in pairs),
                tuple(p[1] for p in pairs),
            )
        )
    return Dataset(out, exp_text)


def format_record(rec: Record) -> str:
    exps = ":".join(str(e) for e in rec.exp_ids)
    sens = ":".join(str(s) for s in rec.sen_ids)
    return f"{rec.user}::{rec.item}::{rec.rating}::{rec.timestamp}::{exps}::{sens}"


def emit_dataset(dataset: Dataset, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    referenced = set()
    for rec in dataset.records:
        referenced.update(rec.exp_ids)
        referenced.update(rec.sen_ids)
    missing = referenced - dataset.exp_text.keys()
    if missing:
        raise DatasetError(f"IDs without text: {sorted(missing)[:10]}")
    with open(out_dir / IDS_FILE, "w", encoding="utf-8", newline="\n") as fh:
        for rec in dataset.records:
            fh.write(format_record(rec) + "\n")
    with open(out_dir / TEXT_FILE, "w", encoding="utf-8", newline="\n") as fh:
        for e_id in sorted(referenced):
            text = dataset.exp_text[e_id]
            if "\n" in text or "\r" in text:
                raise DatasetError(f"explanation {e_id} contains a line break")
            fh.write(f"{e_id}::{text}\n")


def _int(value, path, lineno, what):
    try:
        return int(value)
    except ValueError:
        raise FormatError(path, lineno, f"{what} {value!r} is not an integer") from None


def load_dataset(directory) -> Dataset:
    directory = Path(directory)
    ids_path, text_path = directory / IDS_FILE, directory / TEXT_FILE
    for p in (ids_path, text_path):
        if not p.is_file():
            raise DatasetError(f"missing {p}")

    exp_text = {}
    with open(text_path, encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("::", 1)
            if len(parts) != 2:
                raise FormatError(text_path, lineno, "expected 'expID::expSentence'")
            exp_text[_int(parts[0], text_path, lineno, "expID")] = parts[1]

    records = []
    with open(ids_path, encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("::")
            if len(fields) != 6:
                raise FormatError(ids_path, lineno, f"expected 6 '::'-separated fields, got {len(fields)}")
            user, item, rating, ts, exps, sens = fields
            exp_ids = tuple(_int(x, ids_path, lineno, "expID") for x in exps.split(":"))
            sen_ids = tuple(_int(x, ids_path, lineno, "senID") for x in sens.split(":"))
            for x in exp_ids + sen_ids:
                if x not in exp_text:
                    raise FormatError(ids_path, lineno, f"ID {x} missing from {TEXT_FILE}")
            records.append(
                Record(user, item, _int(rating, ids_path, lineno, "rating"), _int(ts, ids_path, lineno, "timestamp"), exp_ids, sen_ids)
            )
    return Dataset(records, exp_text)


@dataclass(frozen=True)
class DatasetStats:
    n_users: int
    n_items: int
    n_explanations: int
    n_pairs: int
    n_triplets: int

    @property
    def exps_per_pair(self) -> float:
        return self.n_triplets / self.n_pairs if self.n_pairs else 0.0

    @property
    def density(self) -> float:
        cells = self.n_users * self.n_items * self.n_explanations
        return self.n_triplets / cells if cells else 0.0

    def table(self) -> str:
        rows = [
            ("# of users", f"{self.n_users:,}"),
            ("# of items", f"{self.n_items:,}"),
            ("# of explanations", f"{self.n_explanations:,}"),
            ("# of (u, i) pairs", f"{self.n_pairs:,}"),
            ("# of (u, i, e) triplets", f"{self.n_triplets:,}"),
            ("# of explanations / (u, i) pair", f"{self.exps_per_pair:.2f}"),
            ("Density (x 10^-10)", f"{self.density * 1e10:.2f}"),
        ]
        width = max(len(r[0]) for r in rows)
        vwidth = max(len(r[1]) for r in rows)
        return "\n".join(f"{k:<{width}}  {v:>{vwidth}}" for k, v in rows)


def compute_stats(dataset: Dataset) -> DatasetStats:
    t = dataset.triplets
    n_pairs = len({(int(u), int(i)) for u, i in t[:, :2]}) if len(t) else 0
    return DatasetStats(len(dataset.users), len(dataset.items), len(dataset.explanations), n_pairs, len(t))


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray
    seed: int

    @property
    def train_fraction(self) -> float:
        total = len(self.train) + len(self.test)
        return len(self.train) / total if total else 0.0


def _entity_keys(triplets, shape):
    """Column-offset entity ids so users, items and explanations share one space."""
    n_u, n_i, _ = shape
    return np.stack([triplets[:, 0], triplets[:, 1] + n_u, triplets[:, 2] + n_u + n_i], axis=1)


def make_split(triplets: np.ndarray, shape, train_fraction: float = 0.7, seed=0) -> Split:
    """One random split, repaired so every entity has a training triplet.

    After the random draw, test triplets are moved to train greedily: first
    those that would cover three uncovered entities, then two, then one.
    """
    triplets = np.asarray(triplets, dtype=np.int64)
    n = len(triplets)
    n_entities = sum(shape)
    keys = _entity_keys(triplets, shape)
    counts = np.bincount(keys.ravel(), minlength=n_entities)
    if n == 0 or (counts == 0).any():
        raise DatasetError("coverage unsatisfiable: some user, item or explanation has no triplet")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = min(n, math.ceil(train_fraction * n - 1e-9))
    in_train = np.zeros(n, dtype=bool)
    in_train[order[:n_train]] = True

    covered = np.zeros(n_entities, dtype=bool)
    covered[keys[in_train].ravel()] = True
    test_order = order[n_train:]
    for need in (3, 2, 1):
        if covered.all():
            break
        for t in test_order:
            if in_train[t]:
                continue
            if (~covered[keys[t]]).sum() >= need:
                in_train[t] = True
                covered[keys[t]] = True
    idx = np.arange(n)
    label = seed if isinstance(seed, int) else int(np.atleast_1d(seed)[0])
    return Split(np.sort(idx[in_train]), np.sort(idx[~in_train]), label)


def make_splits(dataset_or_triplets, train_fraction: float = 0.7, n_splits: int = 5, seed: int = 0, shape=None) -> list[Split]:
    """``n_splits`` independent coverage-respecting splits.

    ``Split.train`` / ``Split.test`` hold row indices into the triplet array.
    Split ``k`` draws from ``default_rng([seed, k])``.
    """
    if isinstance(dataset_or_triplets, Dataset):
        triplets, shape = dataset_or_triplets.triplets, dataset_or_triplets.shape
    else:
        triplets = np.asarray(dataset_or_triplets, dtype=np.int64)
        if shape is None:
            shape = tuple(int(c) for c in triplets.max(axis=0) + 1)
    out = []
    for k in range(n_splits):
        s = make_split(triplets, shape, train_fraction, seed=[seed, k])
        out.append(Split(s.train, s.test, seed))
    return out


def split_paths(directory, k: int) -> tuple[Path, Path]:
    directory = Path(directory)
    return directory / f"split{k}.train", directory / f"split{k}.test"


def write_split(dataset: Dataset, split: Split, directory, k: int) -> None:
    train_path, test_path = split_paths(directory, k)
    train_path.parent.mkdir(parents=True, exist_ok=True)
    for path, rows in ((train_path, split.train), (test_path, split.test)):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for u, i, e in dataset.triplets[rows]:
                fh.write(f"{dataset.users.ids[u]}::{dataset.items.ids[i]}::{dataset.explanations.ids[e]}\n")


def read_split(dataset: Dataset, directory, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Train and test triplet arrays (dense indices) of split ``k``."""
    out = []
    for path in split_paths(directory, k):
        if not path.is_file():
            raise DatasetError(f"missing {path}")
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("::")
                if len(fields) != 3:
                    raise FormatError(path, lineno, "expected 'userID::itemID::expID'")
                user, item, exp = fields
                try:
                    rows.append((dataset.users[user], dataset.items[item], dataset.explanations[int(exp)]))
                except (KeyError, ValueError):
                    raise FormatError(path, lineno, "ID not in dataset vocabulary") from None
        out.append(np.asarray(rows, dtype=np.int64).reshape(-1, 3))
    return out[0], out[1]
