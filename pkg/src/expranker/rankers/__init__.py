from .latent import (
    LatentModel,
    NumericalError,
    TrainConfig,
    bpr_gradients,
    bpr_step_loss,
    score_cd,
    score_pitf,
    train_bpr,
)
from .neighbors import RICF, RUCF, NeighborIndex, jaccard_item_sim, jaccard_user_sim, score_ricf, score_rucf
from .random import RAND, score_rand

METHODS = ("rand", "rucf", "ricf", "cd", "pitf")


def build_ranker(method, train_triplets, shape, config=None, seed=0):
    """Fit (or index) one of the five methods on training triplets."""
    if method == "rand":
        return RAND(shape[2], seed=seed)
    if method in ("rucf", "ricf"):
        index = NeighborIndex(train_triplets, shape)
        return RUCF(index) if method == "rucf" else RICF(index)
    if method in ("cd", "pitf"):
        return train_bpr(train_triplets, shape, method, config or TrainConfig(seed=seed))
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
