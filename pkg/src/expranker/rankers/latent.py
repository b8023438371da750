"""CD and PITF tensor-factorization scorers trained with BPR.

CD scores ``sum_k p_uk * q_ik * o_ek``; PITF scores ``p_u . o_e^U + q_i . o_e^I``.
Both are fit by SGD on ``-ln sigmoid(r_uie - r_uie') + lam * ||theta||^2``
with one uniformly sampled negative explanation per training triplet.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)

VARIANTS = ("cd", "pitf")
CHECKPOINT_VERSION = 1


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    factors: int = 20
    reg: float = 0.01
    lr: float = 0.01
    iters: int = 500
    seed: int = 0
    init_std: float = 0.1

    def __post_init__(self):
        if self.factors < 1:
            raise ValueError("factors must be >= 1")
        if self.reg < 0:
            raise ValueError("reg must be >= 0")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")


@dataclass
class LatentModel:
    variant: str
    P: np.ndarray
    Q: np.ndarray
    exp_a: np.ndarray
    exp_b: Optional[np.ndarray] = None
    config: TrainConfig = field(default_factory=TrainConfig)
    loss_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "pitf" and self.exp_b is None:
            raise ValueError("PITF needs both user- and item-side explanation factors")
        if self.variant == "cd" and self.exp_b is not None:
            raise ValueError("CD carries a single explanation factor table")

    @property
    def name(self):
        return self.variant

    @property
    def d(self) -> int:
        return self.P.shape[1]

    @property
    def n_explanations(self) -> int:
        return self.exp_a.shape[0]

    # CD naming
    @property
    def O(self):
        return self.exp_a

    # PITF naming
    @property
    def O_U(self):
        return self.exp_a

    @property
    def O_I(self):
        return self.exp_b

    @classmethod
    def init(cls, variant, shape, config: TrainConfig = TrainConfig()):
        n_u, n_i, n_e = shape
        rng = np.random.default_rng(config.seed)
        d, std = config.factors, config.init_std
        P = rng.normal(0.0, std, (n_u, d))
        Q = rng.normal(0.0, std, (n_i, d))
        exp_a = rng.normal(0.0, std, (n_e, d))
        exp_b = rng.normal(0.0, std, (n_e, d)) if variant == "pitf" else None
        return cls(variant, P, Q, exp_a, exp_b, config)

    def score(self, u, i, e) -> float:
        if self.variant == "cd":
            return float(np.sum(self.P[u] * self.Q[i] * self.exp_a[e]))
        return float(self.P[u] @ self.exp_a[e] + self.Q[i] @ self.exp_b[e])

    def scores(self, u, i) -> np.ndarray:
        if self.variant == "cd":
            return self.exp_a @ (self.P[u] * self.Q[i])
        return self.exp_a @ self.P[u] + self.exp_b @ self.Q[i]

    def scores_batch(self, users, items) -> np.ndarray:
        if self.variant == "cd":
            return (self.P[users] * self.Q[items]) @ self.exp_a.T
        return self.P[users] @ self.exp_a.T + self.Q[items] @ self.exp_b.T

    def _b_table(self):
        return self.exp_b if self.exp_b is not None else np.zeros((1, self.d))

    def save(self, path, vocab_sizes=None, extra=None) -> None:
        header = {
            "version": CHECKPOINT_VERSION,
            "variant": self.variant,
            "d": self.d,
            "seed": self.config.seed,
            "vocab_sizes": list(vocab_sizes or (self.P.shape[0], self.Q.shape[0], self.exp_a.shape[0])),
            "config": asdict(self.config),
            **(extra or {}),
        }
        arrays = {"P": self.P, "Q": self.Q, "exp_a": self.exp_a, "loss_history": np.asarray(self.loss_history)}
        if self.exp_b is not None:
            arrays["exp_b"] = self.exp_b
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(header)), **arrays)

    @classmethod
    def load(cls, path) -> tuple["LatentModel", dict]:
        with np.load(Path(path), allow_pickle=False) as z:
            header = json.loads(str(z["header"]))
            if header.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {header.get('version')}")
            model = cls(
                header["variant"],
                z["P"],
                z["Q"],
                z["exp_a"],
                z["exp_b"] if "exp_b" in z else None,
                TrainConfig(**header["config"]),
                z["loss_history"].tolist(),
            )
        return model, header


def score_cd(model: LatentModel, u, i, e) -> float:
    if model.variant != "cd":
        raise ValueError(f"expected a CD model, got {model.variant}")
    return model.score(u, i, e)


def score_pitf(model: LatentModel, u, i, e) -> float:
    if model.variant != "pitf":
        raise ValueError(f"expected a PITF model, got {model.variant}")
    return model.score(u, i, e)


def _step_args(model, u, i, e_pos, e_neg):
    b = model._b_table()
    is_pitf = model.variant == "pitf"
    return (
        model.P[u],
        model.Q[i],
        model.exp_a[e_pos],
        model.exp_a[e_neg],
        b[e_pos] if is_pitf else b[0],
        b[e_neg] if is_pitf else b[0],
        is_pitf,
    )


def bpr_step_loss(model: LatentModel, u, i, e_pos, e_neg, lam) -> float:
    """``-ln sigmoid(r(e_pos) - r(e_neg))`` plus ``lam`` times the squared norm
    of every factor vector the step touches."""
    if e_pos == e_neg:
        raise ValueError("positive and negative explanation must differ")
    return float(_kernels.bpr_grad(*_step_args(model, u, i, e_pos, e_neg), float(lam))[0])


def bpr_gradients(model: LatentModel, u, i, e_pos, e_neg, lam) -> dict:
    """Analytic gradients of :func:`bpr_step_loss`, keyed by parameter slot."""
    _, g_pu, g_qi, g_ae, g_af, g_be, g_bf = _kernels.bpr_grad(*_step_args(model, u, i, e_pos, e_neg), float(lam))
    out = {"P": g_pu, "Q": g_qi, "exp_a_pos": g_ae, "exp_a_neg": g_af}
    if model.variant == "pitf":
        out.update(exp_b_pos=g_be, exp_b_neg=g_bf)
    return out


class NegativeSampler:
    """Uniform negatives from ``E \\ E_{u,i}``, redrawn on collision."""

    def __init__(self, triplets, n_explanations):
        t = np.asarray(triplets, dtype=np.int64)
        self.n_e = n_explanations
        pairs, self.pair_of = np.unique(t[:, :2], axis=0, return_inverse=True)
        self.pair_of = self.pair_of.ravel()
        self.pos_keys = np.unique(self.pair_of * n_explanations + t[:, 2])
        per_pair = np.bincount(self.pos_keys // n_explanations, minlength=len(pairs))
        if (per_pair >= n_explanations).any():
            raise ValueError("some (user, item) pair is linked to every explanation; no negative exists")

    def _is_pos(self, rows, cand):
        keys = self.pair_of[rows] * self.n_e + cand
        loc = np.searchsorted(self.pos_keys, keys)
        loc[loc == len(self.pos_keys)] = 0
        return self.pos_keys[loc] == keys

    def sample(self, rows, rng) -> np.ndarray:
        neg = rng.integers(0, self.n_e, size=len(rows))
        bad = np.flatnonzero(self._is_pos(rows, neg))
        while bad.size:
            neg[bad] = rng.integers(0, self.n_e, size=bad.size)
            bad = bad[self._is_pos(rows[bad], neg[bad])]
        return neg


def _check_finite(model, epoch):
    for name in ("P", "Q", "exp_a", "exp_b"):
        arr = getattr(model, name)
        if arr is not None and not np.isfinite(arr).all():
            bad = int((~np.isfinite(arr)).sum())
            raise NumericalError(
                f"non-finite values in {name} after iteration {epoch} "
                f"({bad} entries; last losses {model.loss_history[-3:]}); try a smaller learning rate"
            )


def train_bpr(train_triplets, shape, variant="pitf", config: TrainConfig = TrainConfig(), progress=None) -> LatentModel:
    """Fit CD or PITF on training triplets with BPR-SGD.

    Each of ``config.iters`` iterations is one shuffled pass over the
    training triplets. ``loss_history[0]`` is the mean loss at
    initialization, ``loss_history[t]`` the mean pre-update loss of pass ``t``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    t = np.asarray(train_triplets, dtype=np.int64).reshape(-1, 3)
    if len(t) == 0:
        raise ValueError("no training triplets")
    model = LatentModel.init(variant, shape, config)
    sampler = NegativeSampler(t, shape[2])
    rng = np.random.default_rng([config.seed, 1])
    is_pitf = variant == "pitf"
    b = model._b_table()
    rows = np.arange(len(t))

    neg = sampler.sample(rows, rng)
    init = _kernels.sgd_epoch(model.P, model.Q, model.exp_a, b, is_pitf, t[:, 0], t[:, 1], t[:, 2], neg, config.reg, 0.0)
    model.loss_history.append(init / len(t))

    for epoch in range(1, config.iters + 1):
        order = rng.permutation(len(t))
        batch = t[order]
        neg = sampler.sample(order, rng)
        total = _kernels.sgd_epoch(
            model.P, model.Q, model.exp_a, b, is_pitf, batch[:, 0], batch[:, 1], batch[:, 2], neg, config.reg, config.lr
        )
        model.loss_history.append(total / len(t))
        _check_finite(model, epoch)
        if progress is not None:
            progress(epoch, model.loss_history[-1])
    log.debug("%s trained: loss %.4f -> %.4f", variant, model.loss_history[0], model.loss_history[-1])
    return model
