"""Neighborhood rankers over user-item-explanation triplets.

RUCF scores ``(u, i, e)`` by summing Jaccard similarities (over explanation
sets) between ``u`` and every other user who interacted with both ``i`` and
``e``. RICF is the item-side mirror.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def _binary(rows, cols, shape):
    m = sp.csr_matrix((np.ones(len(rows), dtype=np.float64), (rows, cols)), shape=shape)
    m.sum_duplicates()
    m.data[:] = 1.0
    return m


class NeighborIndex:
    """Incidence structure of the training triplets.

    Attributes hold binary CSR matrices: ``user_exp`` (rows give each user's
    explanation set), ``item_exp``, ``user_item`` and the transpose
    ``item_user``.
    """

    def __init__(self, train_triplets, shape):
        t = np.asarray(train_triplets, dtype=np.int64).reshape(-1, 3)
        self.shape = tuple(shape)
        n_u, n_i, n_e = self.shape
        self.user_exp = _binary(t[:, 0], t[:, 2], (n_u, n_e))
        self.item_exp = _binary(t[:, 1], t[:, 2], (n_i, n_e))
        self.user_item = _binary(t[:, 0], t[:, 1], (n_u, n_i))
        self.item_user = self.user_item.T.tocsr()
        self.exp_user = self.user_exp.T.tocsr()
        self.exp_item = self.item_exp.T.tocsr()
        self.user_exp_size = np.diff(self.user_exp.indptr)
        self.item_exp_size = np.diff(self.item_exp.indptr)

    def _check(self, u=None, i=None, e=None):
        n_u, n_i, n_e = self.shape
        for name, x, n in (("user", u, n_u), ("item", i, n_i), ("explanation", e, n_e)):
            if x is not None and not 0 <= x < n:
                raise KeyError(f"unknown {name} index {x}")

    def exps_of_user(self, u) -> set:
        return set(self.user_exp[u].indices.tolist())

    def exps_of_item(self, i) -> set:
        return set(self.item_exp[i].indices.tolist())

    def users_of_item(self, i) -> np.ndarray:
        return self.item_user[i].indices

    def items_of_user(self, u) -> np.ndarray:
        return self.user_item[u].indices

    def users_of_exp(self, e) -> np.ndarray:
        return self.exp_user[e].indices

    def items_of_exp(self, e) -> np.ndarray:
        return self.exp_item[e].indices


def _jaccard_rows(matrix, sizes, a, others):
    """Jaccard of row ``a`` against each row in ``others`` (0 when both rows are empty)."""
    if len(others) == 0:
        return np.zeros(0)
    inter = np.asarray((matrix[others] @ matrix[a].T).todense()).ravel()
    union = sizes[others] + sizes[a] - inter
    out = np.zeros(len(others))
    np.divide(inter, union, out=out, where=union > 0)
    return out


def jaccard_user_sim(u, u2, index: NeighborIndex) -> float:
    index._check(u=u)
    index._check(u=u2)
    return float(_jaccard_rows(index.user_exp, index.user_exp_size, u, np.array([u2]))[0])


def jaccard_item_sim(i, i2, index: NeighborIndex) -> float:
    index._check(i=i)
    index._check(i=i2)
    return float(_jaccard_rows(index.item_exp, index.item_exp_size, i, np.array([i2]))[0])


def score_rucf(u, i, e, index: NeighborIndex) -> float:
    index._check(u, i, e)
    cands = np.intersect1d(index.users_of_item(i), index.users_of_exp(e))
    cands = cands[cands != u]
    sims = _jaccard_rows(index.user_exp, index.user_exp_size, u, cands)
    return float(sims[sims > 0].sum())


def score_ricf(u, i, e, index: NeighborIndex) -> float:
    index._check(u, i, e)
    cands = np.intersect1d(index.items_of_user(u), index.items_of_exp(e))
    cands = cands[cands != i]
    sims = _jaccard_rows(index.item_exp, index.item_exp_size, i, cands)
    return float(sims[sims > 0].sum())


class RUCF:
    name = "rucf"

    def __init__(self, index: NeighborIndex):
        self.index = index
        self.n_explanations = index.shape[2]

    def scores(self, u, i) -> np.ndarray:
        """Scores for every explanation: ``sum_{u'} s(u,u') * [u' used e]`` over users of ``i``."""
        idx = self.index
        idx._check(u=u, i=i)
        neigh = idx.users_of_item(i)
        neigh = neigh[neigh != u]
        sims = _jaccard_rows(idx.user_exp, idx.user_exp_size, u, neigh)
        keep = sims > 0
        if not keep.any():
            return np.zeros(self.n_explanations)
        return np.asarray(idx.user_exp[neigh[keep]].T @ sims[keep]).ravel()


class RICF:
    name = "ricf"

    def __init__(self, index: NeighborIndex):
        self.index = index
        self.n_explanations = index.shape[2]

    def scores(self, u, i) -> np.ndarray:
        idx = self.index
        idx._check(u=u, i=i)
        neigh = idx.items_of_user(u)
        neigh = neigh[neigh != i]
        sims = _jaccard_rows(idx.item_exp, idx.item_exp_size, i, neigh)
        keep = sims > 0
        if not keep.any():
            return np.zeros(self.n_explanations)
        return np.asarray(idx.item_exp[neigh[keep]].T @ sims[keep]).ravel()
