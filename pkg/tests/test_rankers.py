import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from expranker.rankers import (
    RAND,
    RICF,
    RUCF,
    LatentModel,
    NeighborIndex,
    NumericalError,
    TrainConfig,
    bpr_gradients,
    bpr_step_loss,
    jaccard_item_sim,
    jaccard_user_sim,
    score_cd,
    score_pitf,
    score_rand,
    score_ricf,
    score_rucf,
    train_bpr,
)
from expranker.rankers import _kernels
from expranker.rankers.latent import NegativeSampler
from expranker.synth import planted_preferences
from oracles import brute_ricf, brute_rucf


def index_of(triplets, shape=None):
    t = np.asarray(triplets)
    shape = shape or tuple(int(c) for c in t.max(axis=0) + 1)
    return NeighborIndex(t, shape)


def test_jaccard_user_sim():
    # user 0: {a,b,c}; user 1: {b,c,d}; user 2: {x}; a..d=0..3, x=4
    t = [(0, 0, 0), (0, 0, 1), (0, 1, 2), (1, 0, 1), (1, 1, 2), (1, 1, 3), (2, 2, 4), (3, 0, 0), (3, 0, 1), (3, 1, 2)]
    idx = index_of(t)
    assert jaccard_user_sim(0, 1, idx) == 0.5
    assert jaccard_user_sim(1, 0, idx) == 0.5
    assert jaccard_user_sim(0, 2, idx) == 0.0
    assert jaccard_user_sim(0, 3, idx) == 1.0
    with pytest.raises(KeyError):
        jaccard_user_sim(0, 9, idx)


def test_jaccard_of_empty_sets_is_zero():
    idx = NeighborIndex(np.array([[0, 0, 0]]), (3, 2, 2))
    assert jaccard_user_sim(1, 2, idx) == 0.0
    assert jaccard_item_sim(1, 1, idx) == 0.0


def test_rucf_empty_and_single_neighbor():
    t = [(0, 0, 0), (0, 0, 1), (0, 0, 2), (1, 1, 1), (1, 1, 2), (1, 1, 3)]  # {0,1,2} vs {1,2,3}: 2/4
    idx = index_of(t)
    assert score_rucf(0, 1, 3, idx) == 0.5
    assert score_rucf(0, 1, 0, idx) == 0.0  # user 1 never used explanation 0
    assert score_rucf(0, 0, 3, idx) == 0.0  # nobody else interacted with item 0


def test_ricf_single_neighbor():
    # item 0 explanations {0}, item 1 {0, 1, 2, 3}: s = 1/4
    t = [(0, 0, 0), (0, 1, 0), (1, 1, 1), (1, 1, 2), (1, 1, 3)]
    idx = index_of(t)
    assert score_ricf(1, 0, 1, idx) == 0.25
    assert score_ricf(0, 0, 1, idx) == 0.25
    assert score_ricf(1, 1, 0, idx) == 0.0


@pytest.fixture(scope="module")
def small():
    rng = np.random.default_rng(5)
    t = np.unique(rng.integers(0, [5, 5, 8], size=(40, 3)), axis=0)
    shape = (5, 5, 8)
    return t, shape, NeighborIndex(t, shape)


def test_rucf_matches_bruteforce(small):
    t, shape, idx = small
    ranker = RUCF(idx)
    tuples = [tuple(map(int, r)) for r in t]
    for u in range(shape[0]):
        for i in range(shape[1]):
            vec = ranker.scores(u, i)
            for e in range(shape[2]):
                expect = brute_rucf(u, i, e, tuples)
                assert score_rucf(u, i, e, idx) == pytest.approx(expect, abs=1e-12)
                assert vec[e] == pytest.approx(expect, abs=1e-12)


def test_ricf_matches_bruteforce(small):
    t, shape, idx = small
    ranker = RICF(idx)
    tuples = [tuple(map(int, r)) for r in t]
    for u in range(shape[0]):
        for i in range(shape[1]):
            vec = ranker.scores(u, i)
            for e in range(shape[2]):
                expect = brute_ricf(u, i, e, tuples)
                assert score_ricf(u, i, e, idx) == pytest.approx(expect, abs=1e-12)
                assert vec[e] == pytest.approx(expect, abs=1e-12)


def test_cf_unknown_entity(small):
    _, _, idx = small
    with pytest.raises(KeyError):
        score_rucf(0, 0, 99, idx)
    with pytest.raises(KeyError):
        RICF(idx).scores(99, 0)


def cd_model(p, q, o):
    return LatentModel("cd", np.array([p], float), np.array([q], float), np.array([o], float))


def pitf_model(p, q, ou, oi):
    return LatentModel("pitf", np.array([p], float), np.array([q], float), np.array([ou], float), np.array([oi], float))


def test_score_cd():
    assert score_cd(cd_model([1, 2], [3, 4], [5, 6]), 0, 0, 0) == 63.0
    assert score_cd(cd_model([0, 0], [3, 4], [5, 6]), 0, 0, 0) == 0.0
    assert score_cd(cd_model([2, 4], [3, 4], [5, 6]), 0, 0, 0) == 126.0
    with pytest.raises(ValueError):
        score_pitf(cd_model([1], [1], [1]), 0, 0, 0)


def test_score_pitf():
    m = pitf_model([1, 0], [0, 1], [2, 0], [0, 3])
    assert score_pitf(m, 0, 0, 0) == 5.0
    assert score_pitf(pitf_model([0, 0], [0, 0], [0, 0], [0, 0]), 0, 0, 0) == 0.0
    a = pitf_model([1, 2], [7, -3], [1, 1], [0, 0])
    b = pitf_model([1, 2], [100, 50], [1, 1], [0, 0])
    assert score_pitf(a, 0, 0, 0) == score_pitf(b, 0, 0, 0)
    with pytest.raises(ValueError):
        score_cd(a, 0, 0, 0)


def test_variant_shape_checks():
    with pytest.raises(ValueError):
        LatentModel("pitf", np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        LatentModel("cd", np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)))


def test_batch_scores_agree():
    m = LatentModel.init("pitf", (4, 3, 6), TrainConfig(factors=3, seed=1))
    c = LatentModel.init("cd", (4, 3, 6), TrainConfig(factors=3, seed=1))
    for model in (m, c):
        batch = model.scores_batch(np.array([0, 3]), np.array([2, 1]))
        assert np.allclose(batch[1], model.scores(3, 1))
        assert batch[0][4] == pytest.approx(model.score(0, 2, 4))


def test_bpr_loss_equal_scores():
    m = LatentModel("cd", np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((2, 2)))
    assert bpr_step_loss(m, 0, 0, 0, 1, 0.0) == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        bpr_step_loss(m, 0, 0, 1, 1, 0.0)


def test_bpr_loss_large_margin_leaves_penalty():
    m = LatentModel("pitf", np.array([[10.0]]), np.array([[0.0]]), np.array([[10.0], [-10.0]]), np.array([[0.0], [0.0]]))
    # x = 10*10 - 10*(-10) = 200, clamped; sigmoid -> 1
    lam = 0.5
    expect = lam * (100 + 0 + 100 + 100)
    assert bpr_step_loss(m, 0, 0, 0, 1, lam) == pytest.approx(expect, rel=1e-12)


def test_bpr_loss_d1_by_hand():
    # CD, d=1: p=0.5, q=2, o+=0.3, o-=-0.1 -> x = 0.5*2*0.4 = 0.4
    m = LatentModel("cd", np.array([[0.5]]), np.array([[2.0]]), np.array([[0.3], [-0.1]]))
    lam = 0.01
    expect = -math.log(1 / (1 + math.exp(-0.4))) + lam * (0.25 + 4 + 0.09 + 0.01)
    assert bpr_step_loss(m, 0, 0, 0, 1, lam) == pytest.approx(expect, rel=1e-14)
    # PITF, d=1: p=1, q=-1, oU=(0.2, 0.5), oI=(0.1, -0.3): x = 1*(0.2-0.5) + (-1)*(0.1+0.3) = -0.7
    m = LatentModel("pitf", np.array([[1.0]]), np.array([[-1.0]]), np.array([[0.2], [0.5]]), np.array([[0.1], [-0.3]]))
    expect = math.log1p(math.exp(0.7)) + lam * (1 + 1 + 0.04 + 0.25 + 0.01 + 0.09)
    assert bpr_step_loss(m, 0, 0, 0, 1, lam) == pytest.approx(expect, rel=1e-14)


SLOTS = {
    "P": lambda m: m.P[0],
    "Q": lambda m: m.Q[0],
    "exp_a_pos": lambda m: m.exp_a[0],
    "exp_a_neg": lambda m: m.exp_a[1],
    "exp_b_pos": lambda m: m.exp_b[0],
    "exp_b_neg": lambda m: m.exp_b[1],
}


def finite_difference(model, lam, slot, h=1e-5):
    vec = SLOTS[slot](model)
    out = np.zeros_like(vec)
    for k in range(vec.size):
        old = vec[k]
        vec[k] = old + h
        up = bpr_step_loss(model, 0, 0, 0, 1, lam)
        vec[k] = old - h
        down = bpr_step_loss(model, 0, 0, 0, 1, lam)
        vec[k] = old
        out[k] = (up - down) / (2 * h)
    return out


def rel_err(a, b):
    return np.max(np.abs(a - b) / np.maximum(1e-8, np.maximum(np.abs(a), np.abs(b))))


def random_model(variant, d, rng):
    m = LatentModel.init(variant, (1, 1, 2), TrainConfig(factors=d, seed=int(rng.integers(2**31)), init_std=1.0))
    return m


@pytest.mark.parametrize("variant", ["cd", "pitf"])
@pytest.mark.parametrize("d", [1, 4])
def test_gradients_match_finite_differences(variant, d):
    rng = np.random.default_rng(d * 10 + len(variant))
    for _ in range(25):
        m = random_model(variant, d, rng)
        lam = float(rng.uniform(0, 0.1))
        grads = bpr_gradients(m, 0, 0, 0, 1, lam)
        for slot, g in grads.items():
            assert rel_err(g, finite_difference(m, lam, slot)) <= 1e-4, slot


@pytest.mark.parametrize("accelerated", [True, False])
@pytest.mark.parametrize("variant", ["cd", "pitf"])
def test_kernel_step_applies_analytic_gradient(variant, accelerated):
    rng = np.random.default_rng(7)
    m = random_model(variant, 4, rng)
    lam, lr = 0.03, 0.05
    grads = bpr_gradients(m, 0, 0, 0, 1, lam)
    before = {s: SLOTS[s](m).copy() for s in grads}
    b = m.exp_b if m.exp_b is not None else np.zeros((1, 4))
    one = np.array([0])
    loss = _kernels.sgd_epoch(m.P, m.Q, m.exp_a, b, variant == "pitf", one, one, one, np.array([1]), lam, lr, accelerated=accelerated)
    for slot, g in grads.items():
        assert np.allclose(SLOTS[slot](m), before[slot] - lr * g, rtol=1e-12, atol=1e-14), slot
    assert loss == pytest.approx(bpr_step_loss(LatentModel(variant, before["P"][None], before["Q"][None], np.stack([before["exp_a_pos"], before["exp_a_neg"]]), None if variant == "cd" else np.stack([before["exp_b_pos"], before["exp_b_neg"]])), 0, 0, 0, 1, lam))


def test_negative_sampler_avoids_positives():
    t = np.array([[0, 0, 0], [0, 0, 1], [0, 0, 2], [1, 0, 3]])
    sampler = NegativeSampler(t, 5)
    rng = np.random.default_rng(0)
    neg = sampler.sample(np.repeat(np.arange(4), 200), rng)
    pos_sets = {0: {0, 1, 2}, 1: {0, 1, 2}, 2: {0, 1, 2}, 3: {3}}
    for row, e in zip(np.repeat(np.arange(4), 200), neg):
        assert e not in pos_sets[row]
    with pytest.raises(ValueError):
        NegativeSampler(np.array([[0, 0, 0], [0, 0, 1]]), 2)


@pytest.fixture(scope="module")
def planted_small():
    return planted_preferences(n_users=300, n_items=80, n_explanations=60, n_blocks=4, seed=2)


@pytest.mark.parametrize("variant", ["cd", "pitf"])
def test_training_lowers_loss_and_is_deterministic(planted_small, variant):
    t, shape = planted_small
    cfg = TrainConfig(factors=8, iters=30, seed=4)
    m = train_bpr(t, shape, variant, cfg)
    assert len(m.loss_history) == 31
    assert np.mean(m.loss_history[-5:]) < m.loss_history[0]
    again = train_bpr(t, shape, variant, cfg)
    assert np.array_equal(m.P, again.P) and np.array_equal(m.exp_a, again.exp_a)


def test_training_defaults():
    cfg = TrainConfig()
    assert (cfg.factors, cfg.reg, cfg.lr, cfg.iters) == (20, 0.01, 0.01, 500)
    for bad in (dict(factors=0), dict(reg=-1), dict(lr=0), dict(iters=0)):
        with pytest.raises(ValueError):
            TrainConfig(**bad)


def test_divergence_is_reported(planted_small):
    t, shape = planted_small
    with pytest.raises(NumericalError, match="non-finite"):
        train_bpr(t, shape, "cd", TrainConfig(factors=4, iters=50, lr=1e6, init_std=10.0))


def test_checkpoint_round_trip(tmp_path, planted_small):
    t, shape = planted_small
    m = train_bpr(t, shape, "pitf", TrainConfig(factors=3, iters=2))
    m.save(tmp_path / "m.npz", shape)
    back, header = LatentModel.load(tmp_path / "m.npz")
    assert header["variant"] == "pitf" and header["d"] == 3 and header["vocab_sizes"] == list(shape)
    assert np.array_equal(back.exp_b, m.exp_b) and back.config == m.config
    assert back.loss_history == m.loss_history


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(0, 1000))
def test_pitf_scaling_preserves_ranking(c, seed):
    m = LatentModel.init("pitf", (3, 3, 12), TrainConfig(factors=4, seed=seed))
    scaled = LatentModel("pitf", m.P * c, m.Q * c, m.exp_a * c, m.exp_b * c)
    assert np.allclose(scaled.scores(1, 2), c * c * m.scores(1, 2))
    assert np.array_equal(np.argsort(-m.scores(1, 2), kind="stable"), np.argsort(-scaled.scores(1, 2), kind="stable"))


def test_rand_deterministic_and_distinct():
    assert score_rand(1, 2, 3, seed=9) == score_rand(1, 2, 3, seed=9)
    assert score_rand(1, 2, 3, seed=9) != score_rand(1, 2, 3, seed=10)
    vec = RAND(1000, seed=4).scores(5, 6)
    assert len(np.unique(vec)) == 1000
    assert vec[17] == score_rand(5, 6, 17, seed=4)


def test_rand_ranks_uniform():
    n_e, n_pairs = 20, 4000
    r = RAND(n_e, seed=1)
    hist = np.zeros((n_e, n_e))
    for k in range(n_pairs):
        ranks = np.argsort(np.argsort(-r.scores(k, 3 * k + 1)))
        hist[np.arange(n_e), ranks] += 1
    for e in (0, 7, 19):
        assert chisquare(hist[e]).pvalue > 1e-3
