"""The non-personalized baseline: a seeded hash of (u, i, e) as the score."""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(x):
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _rand_scores(u, i, es, seed):
    with np.errstate(over="ignore"):
        h = _splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
        h = _splitmix64(h ^ np.uint64(u))
        h = _splitmix64(h ^ np.uint64(i))
        h = _splitmix64(h ^ np.asarray(es, dtype=np.uint64))
    # top 53 bits -> float in [0, 1)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def score_rand(u, i, e, seed=0) -> float:
    return float(_rand_scores(u, i, np.array([e]), seed)[0])


class RAND:
    name = "rand"

    def __init__(self, n_explanations, seed=0):
        self.n_explanations = n_explanations
        self.seed = seed
        self._es = np.arange(n_explanations, dtype=np.uint64)

    def scores(self, u, i) -> np.ndarray:
        return _rand_scores(u, i, self._es, self.seed)
