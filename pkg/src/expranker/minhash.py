"""Word shingles, MinHash signatures and a banded LSH index.

Signatures use one 32-bit base hash per shingle (blake2b) pushed through
``k`` affine maps ``(a_j * x + b_j) mod p`` with ``p = 2**61 - 1`` and
``a_j, b_j`` uniform below ``p``. The product is formed from 32-bit halves
of ``a_j`` with Mersenne reduction, so nothing overflows uint64 and the
numba kernel and the numpy fallback agree bit for bit.
"""

from __future__ import annotations

import hashlib
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from ._accel import NUMBA_ENABLED, maybe_njit
from .text import tokenize

MERSENNE_61 = np.uint64((1 << 61) - 1)
EMPTY_SENTINEL = np.uint64(np.iinfo(np.uint64).max)
_P = (1 << 61) - 1


def shingles(sentence_text: str, n: int = 2) -> frozenset:
    if n < 1:
        raise ValueError("shingle size must be >= 1")
    toks = tokenize(sentence_text)
    if not toks:
        return frozenset()
    if len(toks) < n:
        return frozenset([tuple(toks)])
    return frozenset(tuple(toks[i : i + n]) for i in range(len(toks) - n + 1))


def shingle_hash(shingle: Sequence[str]) -> int:
    data = "\x1f".join(shingle).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=4).digest(), "little")


def permutations(k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    a = rng.integers(1, _P, size=k, dtype=np.uint64)
    b = rng.integers(0, _P, size=k, dtype=np.uint64)
    return a, b


@maybe_njit
def _affine_mod_p(a_hi, a_lo, b, x):
    """``(a * x + b) mod p`` for ``a = a_hi * 2**32 + a_lo < p``, ``x < 2**32``, ``b < p``."""
    p = np.uint64(2305843009213693951)
    lo = a_lo * x
    hi = a_hi * x
    # hi * 2**32 mod p, using 2**61 == 1 (mod p)
    hi = (hi >> np.uint64(29)) + ((hi & np.uint64(0x1FFFFFFF)) << np.uint64(32))
    v = (lo & p) + (lo >> np.uint64(61)) + (hi & p) + (hi >> np.uint64(61)) + b
    v = (v & p) + (v >> np.uint64(61))
    if v >= p:
        v -= p
    return v


@maybe_njit
def _minhash_numba(hashes, offsets, a, b):
    n = offsets.shape[0] - 1
    k = a.shape[0]
    a_hi = a >> np.uint64(32)
    a_lo = a & np.uint64(0xFFFFFFFF)
    out = np.full((n, k), np.iinfo(np.uint64).max, dtype=np.uint64)
    for s in range(n):
        for h in range(offsets[s], offsets[s + 1]):
            x = hashes[h]
            for j in range(k):
                v = _affine_mod_p(a_hi[j], a_lo[j], b[j], x)
                if v < out[s, j]:
                    out[s, j] = v
    return out


def _affine_mod_p_vec(a_hi, a_lo, b, x):
    p = MERSENNE_61
    lo = x * a_lo
    hi = x * a_hi
    hi = (hi >> np.uint64(29)) + ((hi & np.uint64(0x1FFFFFFF)) << np.uint64(32))
    v = (lo & p) + (lo >> np.uint64(61)) + (hi & p) + (hi >> np.uint64(61)) + b
    v = (v & p) + (v >> np.uint64(61))
    return np.where(v >= p, v - p, v)


def _minhash_numpy(hashes, offsets, a, b, chunk=1 << 14):
    n = offsets.shape[0] - 1
    a_hi = (a >> np.uint64(32))[None, :]
    a_lo = (a & np.uint64(0xFFFFFFFF))[None, :]
    out = np.full((n, a.shape[0]), EMPTY_SENTINEL, dtype=np.uint64)
    sizes = np.diff(offsets)
    nonempty = np.flatnonzero(sizes)
    # process whole sentences in chunks of roughly `chunk` shingles
    start = 0
    while start < nonempty.size:
        stop = start
        total = 0
        while stop < nonempty.size and (total == 0 or total + sizes[nonempty[stop]] <= chunk):
            total += sizes[nonempty[stop]]
            stop += 1
        rows = nonempty[start:stop]
        lo, hi = offsets[rows[0]], offsets[rows[-1] + 1]
        vals = _affine_mod_p_vec(a_hi, a_lo, b[None, :], hashes[lo:hi, None])
        out[rows] = np.minimum.reduceat(vals, offsets[rows] - lo, axis=0)
        start = stop
    return out


def minhash_kernel(hashes, offsets, a, b):
    if NUMBA_ENABLED:
        return _minhash_numba(hashes, offsets, a, b)
    return _minhash_numpy(hashes, offsets, a, b)


@dataclass(frozen=True, eq=False)
class MinHashSignature:
    mins: np.ndarray
    seed: int

    @property
    def k(self) -> int:
        return self.mins.shape[0]

    def __eq__(self, other):
        if not isinstance(other, MinHashSignature):
            return NotImplemented
        return self.seed == other.seed and np.array_equal(self.mins, other.mins)

    __hash__ = None


def _pack(shingle_sets: Iterable[frozenset]) -> tuple[np.ndarray, np.ndarray]:
    hashes: list[int] = []
    offsets = [0]
    for s in shingle_sets:
        # set semantics: distinct base hashes only
        hashes.extend(sorted({shingle_hash(sh) for sh in s}))
        offsets.append(len(hashes))
    return np.asarray(hashes, dtype=np.uint64), np.asarray(offsets, dtype=np.int64)


def minhash_matrix(shingle_sets: Sequence[frozenset], k: int = 128, seed: int = 1) -> np.ndarray:
    """Signatures of many shingle sets at once, one row per set."""
    if k < 16:
        raise ValueError("num_permutations must be >= 16")
    a, b = permutations(k, seed)
    hashes, offsets = _pack(shingle_sets)
    return minhash_kernel(hashes, offsets, a, b)


def minhash(shingle_set: frozenset, k: int = 128, seed: int = 1) -> MinHashSignature:
    """Signature of one shingle set; the empty set maps to all-max sentinels."""
    return MinHashSignature(minhash_matrix([shingle_set], k, seed)[0], seed)


def estimate_jaccard(a: MinHashSignature, b: MinHashSignature) -> float:
    if a.k != b.k or a.seed != b.seed:
        raise ValueError(f"incompatible signatures (k={a.k}/{b.k}, seed={a.seed}/{b.seed})")
    return float(np.count_nonzero(a.mins == b.mins)) / a.k


def s_curve(s, b: int, r: int):
    """Probability that two sets of Jaccard *s* share at least one band."""
    return 1.0 - (1.0 - s**r) ** b


def band_params(t: float, k: int, fp_weight: float = 0.1, fn_weight: float = 0.9) -> tuple[int, int]:
    """Pick ``(b, r)`` with ``b * r == k`` minimising weighted FP + FN area.

    False negatives are weighted up by default because every band candidate
    is verified against the signature estimate before it is returned, so a
    false positive only costs a comparison while a false negative is lost.
    """
    if not 0.0 < t < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    if k < 16:
        raise ValueError("num_permutations must be >= 16")
    best, best_cost = None, math.inf
    for b in range(1, k + 1):
        if k % b:
            continue
        r = k // b
        fp = quad(lambda s: s_curve(s, b, r), 0.0, t)[0]
        fn = quad(lambda s: 1.0 - s_curve(s, b, r), t, 1.0)[0]
        cost = fp_weight * fp + fn_weight * fn
        if cost < best_cost:
            best, best_cost = (b, r), cost
    if best is None:
        raise ValueError(f"no factorization of k={k}")
    return best


class LshIndex:
    """Banded MinHash LSH with verified threshold queries and removal.

    ``query`` returns keys that share at least one band bucket with the
    query signature *and* whose estimated Jaccard is ``>= threshold``.
    """

    def __init__(self, threshold: float = 0.9, num_perm: int = 128, seed: int = 1):
        self.threshold = threshold
        self.num_perm = num_perm
        self.seed = seed
        self.b, self.r = band_params(threshold, num_perm)
        self._tables = [defaultdict(set) for _ in range(self.b)]
        self._sigs: dict = {}
        self.n_queries = 0
        self.n_removes = 0

    def __len__(self):
        return len(self._sigs)

    def __contains__(self, key):
        return key in self._sigs

    def _check(self, sig):
        mins = sig.mins if isinstance(sig, MinHashSignature) else np.asarray(sig)
        seed = sig.seed if isinstance(sig, MinHashSignature) else self.seed
        if mins.shape != (self.num_perm,) or seed != self.seed:
            raise ValueError(
                f"signature (k={mins.shape[0]}, seed={seed}) incompatible with index "
                f"(k={self.num_perm}, seed={self.seed})"
            )
        return mins

    def _bands(self, mins):
        r = self.r
        return [mins[i * r : (i + 1) * r].tobytes() for i in range(self.b)]

    def insert(self, key, sig) -> None:
        if key in self._sigs:
            raise KeyError(f"duplicate key {key!r}")
        mins = self._check(sig)
        self._sigs[key] = mins
        for table, band in zip(self._tables, self._bands(mins)):
            table[band].add(key)

    def query(self, sig) -> set:
        mins = self._check(sig)
        self.n_queries += 1
        candidates = set()
        for table, band in zip(self._tables, self._bands(mins)):
            bucket = table.get(band)
            if bucket:
                candidates |= bucket
        if not candidates:
            return set()
        keys = list(candidates)
        stacked = np.stack([self._sigs[k] for k in keys])
        agree = np.count_nonzero(stacked == mins, axis=1) / self.num_perm
        return {k for k, est in zip(keys, agree) if est >= self.threshold}

    def remove(self, key) -> None:
        try:
            mins = self._sigs.pop(key)
        except KeyError:
            raise KeyError(f"key {key!r} not in index") from None
        self.n_removes += 1
        for table, band in zip(self._tables, self._bands(mins)):
            bucket = table[band]
            bucket.discard(key)
            if not bucket:
                del table[band]
