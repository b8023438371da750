"""Time the numba and pure-numpy paths of the two hot kernels.

    python3 benchmarks/bench_kernels.py [--sentences 20000] [--triplets 30000] [--repeat 3]

The numba column is skipped when EXPRANKER_DISABLE_NUMBA=1. Both paths are
checked for agreement before timing.
"""

import argparse
import time

import numpy as np

from expranker._accel import NUMBA_ENABLED
from expranker.minhash import _minhash_numba, _minhash_numpy, _pack, permutations, shingles
from expranker.rankers import LatentModel, TrainConfig
from expranker.rankers._kernels import sgd_epoch
from expranker.rankers.latent import NegativeSampler
from expranker.synth import planted_preferences, random_words


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_minhash(n_sentences, repeat):
    rng = np.random.default_rng(0)
    sets = [shingles(" ".join(random_words(rng, int(rng.integers(5, 30))))) for _ in range(n_sentences)]
    hashes, offsets = _pack(sets)
    a, b = permutations(128, 1)
    row = {"kernel": f"minhash k=128, {n_sentences} sets"}
    ref = _minhash_numpy(hashes, offsets, a, b)
    row["numpy"] = best_of(lambda: _minhash_numpy(hashes, offsets, a, b), repeat)
    if NUMBA_ENABLED:
        assert np.array_equal(_minhash_numba(hashes, offsets, a, b), ref)
        row["numba"] = best_of(lambda: _minhash_numba(hashes, offsets, a, b), repeat)
    return row


def bench_sgd(variant, n_users, repeat):
    t, shape = planted_preferences(n_users=n_users, n_items=n_users // 5, n_explanations=500, seed=0)
    neg = NegativeSampler(t, shape[2]).sample(np.arange(len(t)), np.random.default_rng(0))
    cfg = TrainConfig(seed=0)
    row = {"kernel": f"{variant} epoch, {len(t)} triplets, d=20"}

    def run(accelerated):
        m = LatentModel.init(variant, shape, cfg)
        b = m.exp_b if m.exp_b is not None else np.zeros((1, cfg.factors))
        return m, sgd_epoch(m.P, m.Q, m.exp_a, b, variant == "pitf", t[:, 0], t[:, 1], t[:, 2], neg, cfg.reg, cfg.lr, accelerated=accelerated)

    slow, loss = run(False)
    row["numpy"] = best_of(lambda: run(False), repeat)
    if NUMBA_ENABLED:
        fast, loss_fast = run(True)
        assert np.allclose(fast.P, slow.P, rtol=1e-9, atol=1e-12) and np.isclose(loss, loss_fast)
        row["numba"] = best_of(lambda: run(True), repeat)
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sentences", type=int, default=20_000)
    ap.add_argument("--users", type=int, default=5_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rows = [bench_minhash(args.sentences, args.repeat)]
    rows += [bench_sgd(v, args.users, args.repeat) for v in ("cd", "pitf")]
    width = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel':<{width}}  {'numpy s':>9}  {'numba s':>9}  {'speedup':>8}")
    for r in rows:
        nb = r.get("numba")
        cols = f"{nb:>9.4f}  {r['numpy'] / nb:>7.1f}x" if nb else f"{'-':>9}  {'-':>8}"
        print(f"{r['kernel']:<{width}}  {r['numpy']:>9.4f}  {cols}")


if __name__ == "__main__":
    main()
