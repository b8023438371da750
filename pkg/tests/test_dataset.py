import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expranker.corpus import RawRecord, Sentence
from expranker.dataset import (
    Dataset,
    DatasetError,
    DatasetStats,
    FormatError,
    Record,
    build_dataset,
    compute_stats,
    emit_dataset,
    load_dataset,
    make_splits,
    read_split,
    write_split,
)

EXAMPLE_IDS = [
    "A20YXFTS3GUGON::B00ICWO0ZY::5::1405958400::13459471:5898244::32215058:32215057",
    "APBZTFB6Y3TUX::B000K7VHPU::5::1394294400::13459471::21311508",
]


@pytest.fixture
def example_records():
    records = [
        Record("A20YXFTS3GUGON", "B00ICWO0ZY", 5, 1405958400, (13459471, 5898244), (32215058, 32215057)),
        Record("APBZTFB6Y3TUX", "B000K7VHPU", 5, 1394294400, (13459471,), (21311508,)),
    ]
    text = {
        5898244: "Great Movie",
        13459471: "This is a wonderful movie",
        21311508: "This is a wonderful movie",
        32215058: "This is a wonderful movie!",
        32215057: "Great movie",
    }
    return Dataset(records, text)


def test_example_records_lines_byte_exact(example_records, tmp_path):
    emit_dataset(example_records, tmp_path)
    assert (tmp_path / "IDs.txt").read_bytes() == ("\n".join(EXAMPLE_IDS) + "\n").encode()
    id2exp = (tmp_path / "id2exp.txt").read_text(encoding="utf-8").splitlines()
    assert "5898244::Great Movie" in id2exp
    assert "13459471::This is a wonderful movie" in id2exp
    assert "21311508::This is a wonderful movie" in id2exp
    # one line per distinct expID and senID
    assert len(id2exp) == 5


def test_example_records_triplet_count(example_records, tmp_path):
    emit_dataset(example_records, tmp_path)
    ds = load_dataset(tmp_path)
    assert len(ds.triplets) == 3
    assert ds.shape == (2, 2, 2)


def test_empty_dataset(tmp_path):
    emit_dataset(Dataset([], {}), tmp_path)
    assert (tmp_path / "IDs.txt").read_bytes() == b""
    assert (tmp_path / "id2exp.txt").read_bytes() == b""
    assert len(load_dataset(tmp_path).triplets) == 0


def test_unmapped_id_rejected(tmp_path):
    ds = Dataset([Record("u", "i", 5, 0, (1,), (2,))], {1: "x"})
    with pytest.raises(DatasetError):
        emit_dataset(ds, tmp_path)


def test_record_without_explanation_rejected():
    with pytest.raises(DatasetError):
        Dataset([Record("u", "i", 5, 0, (), ())], {})


def test_load_errors_name_line(tmp_path):
    (tmp_path / "id2exp.txt").write_text("1::Great\n", encoding="utf-8")
    (tmp_path / "IDs.txt").write_text("u::i::5::0::1::1\nu::i::5::1\n", encoding="utf-8")
    with pytest.raises(FormatError, match=r"IDs.txt:2"):
        load_dataset(tmp_path)
    (tmp_path / "IDs.txt").write_text("u::i::five::0::1::1\n", encoding="utf-8")
    with pytest.raises(FormatError, match="rating"):
        load_dataset(tmp_path)
    (tmp_path / "IDs.txt").write_text("u::i::5::0::9::1\n", encoding="utf-8")
    with pytest.raises(FormatError, match="missing from id2exp"):
        load_dataset(tmp_path)
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "nowhere")


def test_utf8_and_double_colon_text_pass_through(tmp_path):
    ds = Dataset([Record("u", "i", 4, 7, (3,), (3,))], {3: "Très bon :: café"})
    emit_dataset(ds, tmp_path)
    assert load_dataset(tmp_path).exp_text[3] == "Très bon :: café"


def random_dataset(rng, n_triplets, n_users=300, n_items=200, n_exps=150):
    recs = {}
    while sum(len(v) for v in recs.values()) < n_triplets:
        u, i, e = int(rng.integers(n_users)), int(rng.integers(n_items)), int(rng.integers(n_exps))
        recs.setdefault((u, i), [])
        if e not in recs[(u, i)]:
            recs[(u, i)].append(e)
    records = [
        Record(f"U{u}", f"I{i}", int(rng.integers(1, 6)), int(rng.integers(10**9)), tuple(1000 + e for e in es), tuple(10**6 + e * 7 + k for k, e in enumerate(es)))
        for (u, i), es in recs.items()
    ]
    text = {}
    for r in records:
        for e, s in zip(r.exp_ids, r.sen_ids):
            text[e] = f"explanation {e}"
            text[s] = f"sentence {s}"
    return Dataset(records, text)


def triplet_multiset(ds):
    return sorted((ds.users.ids[u], ds.items.ids[i], ds.explanations.ids[e]) for u, i, e in ds.triplets)


def test_round_trip_10k(tmp_path):
    ds = random_dataset(np.random.default_rng(0), 10_000)
    emit_dataset(ds, tmp_path)
    back = load_dataset(tmp_path)
    assert triplet_multiset(back) == triplet_multiset(ds)
    assert back.records == ds.records
    assert all(back.exp_text[k] == v for k, v in ds.exp_text.items())
    assert compute_stats(back) == compute_stats(ds)
    # emitting again is byte-identical
    emit_dataset(back, tmp_path / "again")
    assert (tmp_path / "again" / "IDs.txt").read_bytes() == (tmp_path / "IDs.txt").read_bytes()


def test_duplicate_triplets_collapse():
    ds = Dataset([Record("u", "i", 5, 0, (1, 1), (2, 3))], {1: "a", 2: "b", 3: "c"})
    assert len(ds.triplets) == 1


def test_stats_amazon_scale_density():
    s = DatasetStats(109_121, 47_113, 33_767, 569_838, 793_481)
    assert s.density * 1e10 == pytest.approx(45.71, rel=5e-3)
    assert round(s.exps_per_pair, 2) == 1.39
    assert "45.71" in s.table()


def test_stats_unit_density():
    ds = Dataset([Record("u", "i", 5, 0, (1,), (1,))], {1: "x"})
    s = compute_stats(ds)
    assert s.density == 1.0 and s.exps_per_pair == 1.0 and s.n_pairs == 1


def test_build_dataset_from_groups():
    recs = [RawRecord("u1", "i1", 5, 1, "a. b."), RawRecord("u2", "i2", 4, 2, "c."), RawRecord("u3", "i3", 3, 3, "d.")]
    sentences = [Sentence(0, 0, "a."), Sentence(1, 0, "b."), Sentence(2, 1, "c."), Sentence(3, 2, "d.")]
    ds = build_dataset(recs, sentences, {0: 0, 2: 0, 1: 1})
    assert [r.user for r in ds.records] == ["u1", "u2"]
    assert ds.records[0].exp_ids == (0, 1) and ds.records[0].sen_ids == (0, 1)
    assert ds.records[1].exp_ids == (0,) and ds.records[1].sen_ids == (2,)
    assert ds.exp_text == {0: "a.", 1: "b.", 2: "c."}


def coverage_ok(triplets, train_rows, shape):
    t = triplets[train_rows]
    return all(len(np.unique(t[:, c])) == shape[c] for c in range(3))


def test_splits_coverage_and_fraction():
    ds = random_dataset(np.random.default_rng(1), 10_000)
    n, shape = len(ds.triplets), ds.shape
    splits = make_splits(ds, 0.7, 5, seed=3)
    assert len(splits) == 5
    for sp in splits:
        assert len(np.intersect1d(sp.train, sp.test)) == 0
        assert len(sp.train) + len(sp.test) == n
        assert coverage_ok(ds.triplets, sp.train, shape)
        assert 7000 <= len(sp.train) <= 7000 + sum(shape)
    assert not np.array_equal(splits[0].train, splits[1].train)
    again = make_splits(ds, 0.7, 5, seed=3)
    assert all(np.array_equal(a.train, b.train) for a, b in zip(splits, again))


def test_singleton_explanation_always_trains():
    t = np.array([[u, u % 5, u % 4] for u in range(40)] + [[0, 0, 4]])
    splits = make_splits(t, 0.7, 5, seed=0, shape=(40, 5, 5))
    last = len(t) - 1
    assert all(last in sp.train for sp in splits)


def test_unsatisfiable_coverage():
    with pytest.raises(DatasetError):
        make_splits(np.array([[0, 0, 0]]), shape=(2, 1, 1))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 0.9))
def test_split_coverage_property(seed, frac):
    rng = np.random.default_rng(seed)
    t = np.unique(rng.integers(0, [30, 20, 10], size=(300, 3)), axis=0)
    shape = tuple(int(c) for c in t.max(axis=0) + 1)
    if any(len(np.unique(t[:, c])) < shape[c] for c in range(3)):
        return
    (sp,) = make_splits(t, frac, 1, seed, shape=shape)
    assert coverage_ok(t, sp.train, shape)
    assert len(sp.train) >= frac * len(t) - 1e-9
    assert len(sp.train) <= np.ceil(frac * len(t)) + sum(shape)


def test_split_files_round_trip(tmp_path):
    ds = random_dataset(np.random.default_rng(2), 500)
    (sp,) = make_splits(ds, 0.7, 1, seed=0)
    write_split(ds, sp, tmp_path, 1)
    train, test = read_split(ds, tmp_path, 1)
    assert np.array_equal(train, ds.triplets[sp.train])
    assert np.array_equal(test, ds.triplets[sp.test])
    first = (tmp_path / "split1.train").read_text().splitlines()[0]
    assert first.count("::") == 2
