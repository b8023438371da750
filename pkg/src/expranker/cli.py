"""Command-line pipeline: build, stats, split, train, eval, bench, rank.

Stages talk to each other only through files. Every command that writes
output also writes ``provenance.json`` (full config, seeds, versions) next
to it.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import NUMBA_ENABLED
from .corpus import CorpusError, extract_sentences, read_corpus
from .dataset import (
    DatasetError,
    build_dataset,
    compute_stats,
    emit_dataset,
    load_dataset,
    make_splits,
    read_split,
    split_paths,
    write_split,
)
from .evaluation import MetricsReport, evaluate, format_table, top_n_indices
from .grouping import GroupingConfig, group_sentences
from .rankers import METHODS, LatentModel, NumericalError, TrainConfig, build_ranker
from .sentence_filter import PosLexicon, default_lexicon, filter_sentences

log = logging.getLogger("expranker")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
PROVENANCE_FILE = "provenance.json"


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (DatasetError, CorpusError, NumericalError, OSError, KeyError, ValueError) as exc:
        raise StageError(name, exc) from exc


def write_provenance(out_dir, args) -> Path:
    import scipy

    try:
        import numba

        numba_version = numba.__version__
    except ImportError:
        numba_version = None

    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    record = {
        "command": args.command,
        "config": cfg,
        "versions": {
            "expranker": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba_version,
        },
        "numba_enabled": NUMBA_ENABLED,
    }
    path = Path(out_dir) / PROVENANCE_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _lexicon(args) -> PosLexicon:
    if args.lexicon is None and args.pronouns is None:
        return default_lexicon()
    if args.lexicon is None:
        raise UsageError("--pronouns requires --lexicon")
    return PosLexicon.from_files(args.lexicon, args.pronouns)


def cmd_build(args) -> int:
    cfg = GroupingConfig(args.shingle_size, args.threshold, args.min_group_size, args.num_perm, args.seed)
    errors = []
    records = _stage("ingest", read_corpus, args.input, on_error=args.on_error, errors=errors)
    if errors:
        log.warning("%d malformed line(s) skipped", len(errors))
    if not records:
        log.warning("corpus %s has no records; writing empty dataset", args.input)
    sentences = _stage("ingest", extract_sentences, records)
    lexicon = _stage("filter", _lexicon, args)
    kept = _stage("filter", filter_sentences, sentences, lexicon)
    groups, assignment, _ = _stage("group", group_sentences, kept, cfg)
    dataset = _stage("emit", build_dataset, records, sentences, assignment)
    _stage("emit", emit_dataset, dataset, args.out_dir)
    write_provenance(args.out_dir, args)

    print(f"records: {len(records)}  sentences: {len(sentences)}  candidates: {len(kept)}")
    print(f"explanation groups: {len(groups)}  triplets: {len(dataset.triplets)}")
    if groups:
        text = {s.sentence_id: s.text for s in kept}
        top = sorted(groups, key=lambda g: (-g.occurrence, g.explanation_id))[: args.show]
        width = max(len(text[g.explanation_id]) for g in top)
        print(f"\n{'Explanation':<{width}}  Occurrence")
        for g in top:
            print(f"{text[g.explanation_id]:<{width}}  {g.occurrence:>10}")
    return EXIT_OK


def cmd_stats(args) -> int:
    dataset = _stage("load", load_dataset, args.dataset_dir)
    print(compute_stats(dataset).table())
    return EXIT_OK


def _splits_dir(args) -> Path:
    return Path(args.split_dir or args.dataset_dir)


def cmd_split(args) -> int:
    dataset = _stage("load", load_dataset, args.dataset_dir)
    splits = _stage("split", make_splits, dataset, args.train_fraction, args.n_splits, args.seed)
    out = _splits_dir(args)
    for k, split in enumerate(splits, start=1):
        _stage("split", write_split, dataset, split, out, k)
        print(f"split {k}: train {len(split.train)}  test {len(split.test)}  train fraction {split.train_fraction:.4f}")
    write_provenance(out, args)
    return EXIT_OK


def _train_config(args) -> TrainConfig:
    return TrainConfig(factors=args.factors, reg=args.reg, lr=args.lr, iters=args.iters, seed=args.seed)


def cmd_train(args) -> int:
    if args.model not in ("cd", "pitf"):
        raise UsageError("train only applies to --model cd or pitf")
    dataset = _stage("load", load_dataset, args.dataset_dir)
    train, _ = _stage("load", read_split, dataset, _splits_dir(args), args.split)
    model = _stage("train", build_ranker, args.model, train, dataset.shape, _train_config(args), args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out, dataset.shape, extra={"split": args.split})
    write_provenance(out.parent, args)
    print(f"{args.model} trained on split {args.split}: loss {model.loss_history[0]:.4f} -> {model.loss_history[-1]:.4f}")
    print(f"checkpoint: {out}")
    return EXIT_OK


def _load_checkpoint(path, dataset):
    model, header = LatentModel.load(path)
    if tuple(header["vocab_sizes"]) != dataset.shape:
        raise DatasetError(f"checkpoint vocabularies {header['vocab_sizes']} do not match dataset {list(dataset.shape)}")
    return model


def _write_metrics(path, method_reports):
    lines = []
    for method, rep in method_reports.items():
        for key, val in rep.percent().items():
            lines.append(f"{method}.{key} = {val:.6f}")
        lines.append(f"{method}.pairs = {rep.n_pairs_evaluated}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_eval(args) -> int:
    dataset = _stage("load", load_dataset, args.dataset_dir)
    train, test = _stage("load", read_split, dataset, _splits_dir(args), args.split)
    if args.ckpt:
        ranker = _stage("load", _load_checkpoint, args.ckpt, dataset)
    else:
        ranker = _stage("train", build_ranker, args.model, train, dataset.shape, _train_config(args), args.seed)
    report = _stage("eval", evaluate, ranker, test, args.mode, args.topn, train)
    name = getattr(ranker, "name", args.model)
    print(format_table({name: report}, args.topn, title=f"split {args.split}, {args.mode}-level"))
    if args.metrics_out:
        _write_metrics(args.metrics_out, {name: report})
    return EXIT_OK


def _mean_report(reports) -> MetricsReport:
    arr = np.array([[r.ndcg, r.precision, r.recall, r.f1] for r in reports])
    return MetricsReport(*arr.mean(axis=0).tolist(), n_pairs_evaluated=sum(r.n_pairs_evaluated for r in reports), n=reports[0].n)


def run_benchmark(triplets, shape, methods, n_splits=5, train_fraction=0.7, seed=0, config=None, topn=10, mode="global", threads=1):
    """Per-split and mean reports: ``{method: [report per split]}``, ``{method: mean}``."""
    splits = make_splits(triplets, train_fraction, n_splits, seed, shape=shape)
    config = config or TrainConfig(seed=seed)

    def one(k):
        split = splits[k]
        train, test = triplets[split.train], triplets[split.test]
        out = {}
        for m in methods:
            try:
                ranker = build_ranker(m, train, shape, config, seed)
            except NumericalError as exc:
                raise NumericalError(f"split {k + 1}, {m}: {exc}") from exc
            out[m] = evaluate(ranker, test, mode, topn, train)
        return out

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            per_split = list(pool.map(one, range(n_splits)))
    else:
        per_split = [one(k) for k in range(n_splits)]
    per_method = {m: [s[m] for s in per_split] for m in methods}
    return per_method, {m: _mean_report(r) for m, r in per_method.items()}


def cmd_bench(args) -> int:
    methods = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise UsageError(f"unknown model(s) {sorted(unknown)}; choose from {', '.join(METHODS)}")
    dataset = _stage("load", load_dataset, args.dataset_dir)
    per_method, means = _stage(
        "bench",
        run_benchmark,
        dataset.triplets,
        dataset.shape,
        methods,
        args.n_splits,
        args.train_fraction,
        args.seed,
        _train_config(args),
        args.topn,
        args.mode,
        args.threads,
    )
    for k in range(args.n_splits):
        print(format_table({m: per_method[m][k] for m in methods}, args.topn, title=f"split {k + 1}"))
        print()
    print(format_table(means, args.topn, title=f"mean over {args.n_splits} splits ({args.mode}-level)"))
    out = Path(args.out_dir) if args.out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        _write_metrics(out / "metrics.txt", means)
        write_provenance(out, args)
    return EXIT_OK


def cmd_rank(args) -> int:
    dataset = _stage("load", load_dataset, args.dataset_dir)
    model = _stage("load", _load_checkpoint, args.ckpt, dataset)
    if args.user not in dataset.users:
        raise StageError("rank", KeyError(f"unknown user {args.user!r}; expected a userID from IDs.txt such as {dataset.users.ids[0]!r}"))
    if args.item not in dataset.items:
        raise StageError("rank", KeyError(f"unknown item {args.item!r}; expected an itemID from IDs.txt such as {dataset.items.ids[0]!r}"))
    u, i = dataset.users[args.user], dataset.items[args.item]

    truth = set()
    split_dir = _splits_dir(args)
    if args.split is not None and split_paths(split_dir, args.split)[1].is_file():
        _, test = _stage("load", read_split, dataset, split_dir, args.split)
        truth = {int(e) for uu, ii, e in test if uu == u and ii == i}

    scores = model.scores(u, i)
    n = min(args.topn, len(scores))
    top = top_n_indices(scores, n)
    bottom = top_n_indices(-scores, n)[::-1]
    print(f"user {args.user}  item {args.item}  model {model.variant}  ground truth in test: {len(truth)}")
    for title, idx, first in (("Top", top, 1), ("Bottom", bottom, len(scores) - n + 1)):
        print(f"\n{title}-{n}")
        for rank, e in enumerate(idx, start=first):
            mark = "*" if int(e) in truth else " "
            print(f"{mark} {rank:>3}  {scores[e]:>9.4f}  {dataset.text_of(int(e))}")
    return EXIT_OK


def _add_grouping(p):
    p.add_argument("--shingle-size", type=int, default=2)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--min-group-size", type=int, default=5)
    p.add_argument("--num-perm", type=int, default=128)


def _add_train(p):
    p.add_argument("--factors", type=int, default=20)
    p.add_argument("--lambda", dest="reg", type=float, default=0.01)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--iters", type=int, default=500)


def _add_split_opts(p, required=True):
    p.add_argument("--split-dir", type=Path, help="where split<k>.train/.test live (default: dataset dir)")
    p.add_argument("--split", type=int, default=1 if required else None, help="1-based split number")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value file; flags override it")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="expranker", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", parents=[common], help="reviews -> IDs.txt / id2exp.txt")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--lexicon", type=Path)
    p.add_argument("--pronouns", type=Path)
    p.add_argument("--on-error", choices=("skip", "abort"), default="skip")
    p.add_argument("--show", type=int, default=5, help="print this many most frequent explanations")
    _add_grouping(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("stats", parents=[common], help="dataset statistics")
    p.add_argument("--dataset-dir", type=Path, required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", parents=[common], help="write coverage-constrained train/test splits")
    p.add_argument("--dataset-dir", type=Path, required=True)
    p.add_argument("--split-dir", "--out-dir", dest="split_dir", type=Path)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--n-splits", type=int, default=5)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", parents=[common], help="fit CD or PITF on one split")
    p.add_argument("--dataset-dir", type=Path, required=True)
    _add_split_opts(p)
    p.add_argument("--model", choices=("cd", "pitf"), default="pitf")
    p.add_argument("--out", type=Path, required=True, help="checkpoint path (.npz)")
    _add_train(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate one method on one split")
    p.add_argument("--dataset-dir", type=Path, required=True)
    _add_split_opts(p)
    p.add_argument("--model", choices=METHODS, default="pitf")
    p.add_argument("--ckpt", type=Path, help="trained CD/PITF checkpoint (otherwise fit on the split)")
    p.add_argument("--topn", type=int, default=10)
    p.add_argument("--mode", choices=("global", "item"), default="global")
    p.add_argument("--metrics-out", type=Path)
    _add_train(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="all methods over fresh splits")
    p.add_argument("--dataset-dir", type=Path, required=True)
    p.add_argument("--models", default=",".join(METHODS), help="comma-separated subset of " + ",".join(METHODS))
    p.add_argument("--model", dest="models", help="alias of --models")
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--n-splits", type=int, default=5)
    p.add_argument("--topn", type=int, default=10)
    p.add_argument("--mode", choices=("global", "item"), default="global")
    p.add_argument("--out-dir", type=Path)
    _add_train(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rank", parents=[common], help="top-N and bottom-N explanations for one pair")
    p.add_argument("--dataset-dir", type=Path, required=True)
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--item", required=True)
    p.add_argument("--topn", type=int, default=5)
    _add_split_opts(p, required=False)
    p.set_defaults(func=cmd_rank)
    return parser


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` comments; keys use flag spelling (``num-perm`` or ``num_perm``)."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        out["reg" if key == "lambda" else key] = value
    return out


def _apply_config(parser, argv):
    """Re-parse with config-file values as defaults so explicit flags win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    values = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = known.get(key)
        if action is None:
            raise UsageError(f"config key {key!r} is not an option of '{args.command}'")
        defaults[key] = action.type(raw) if action.type else raw
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def validate(args) -> None:
    checks = [
        ("shingle_size", lambda v: v >= 1, ">= 1"),
        ("threshold", lambda v: 0 < v < 1, "in (0, 1)"),
        ("min_group_size", lambda v: v >= 1, ">= 1"),
        ("num_perm", lambda v: v >= 16, ">= 16"),
        ("train_fraction", lambda v: 0 < v < 1, "in (0, 1)"),
        ("n_splits", lambda v: v >= 1, ">= 1"),
        ("factors", lambda v: v >= 1, ">= 1"),
        ("reg", lambda v: v >= 0, ">= 0"),
        ("lr", lambda v: v > 0, "> 0"),
        ("iters", lambda v: v >= 1, ">= 1"),
        ("topn", lambda v: v >= 1, ">= 1"),
        ("threads", lambda v: v >= 1, ">= 1"),
    ]
    for name, ok, desc in checks:
        if hasattr(args, name) and getattr(args, name) is not None and not ok(getattr(args, name)):
            raise UsageError(f"--{name.replace('_', '-')} must be {desc}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        validate(args)
    except UsageError as exc:
        print(f"expranker: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"expranker: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"expranker: error {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc.cause, NumericalError) else EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
