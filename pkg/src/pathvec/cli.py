"""Command-line pipeline driver.

Subcommands: obfuscate, extract, train, embed, evaluate, compare, rank,
xobf. Machine-readable outputs use the formats defined by their owning
modules; human-readable summaries go to stdout, diagnostics to stderr.
Exit code 0 iff no fatal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .aggregate import (
    EmptyClass,
    NoMethods,
    SelectionSpec,
    build_dataset_suite,
    build_pair_dataset,
    parse_aggregation_name,
    read_dataset_csv,
    standard_agg_suite,
    suite_name_order,
    write_dataset_csv,
)
from .config import (
    RunManifest,
    load_config_file,
    manifest_path_for,
    read_manifest,
    resolve,
)
from .evaluate import (
    ClassifierConfig,
    CvPlan,
    DegenerateData,
    MismatchedFolds,
    TooFewRows,
    cross_validate,
    name_prediction_f1,
    paired_ttest,
    rank_aggregations,
    read_report,
    write_report,
)
from .java import ParseError, SourceUnit, parse_file
from .model import (
    ConfigError,
    ModelConfig,
    TrainedModel,
    load_checkpoint,
    save_checkpoint,
    train,
    write_embedding_csv,
)
from .obfuscate import ObfuscationError, ObfuscationScheme, obfuscate_tree, obfuscate_unit
from .pathctx import (
    ExtractionConfig,
    build_vocabulary,
    extract_unit_samples,
    read_context_dump,
    write_context_dump,
)
from .util import sha256_file

logger = logging.getLogger(__name__)

_FATAL = (
    FileNotFoundError,
    NotADirectoryError,
    ValueError,
    ConfigError,
    ObfuscationError,
    EmptyClass,
    NoMethods,
    DegenerateData,
    TooFewRows,
    MismatchedFolds,
)


def _limit(value: int) -> int | None:
    """0 or negative means unlimited."""
    return None if value <= 0 else value


def _file_values(args) -> dict[str, str]:
    if getattr(args, "config", None):
        return load_config_file(args.config)
    return {}


def _parse_corpus(
    corpus: Path, jobs: int = 1
) -> tuple[list[SourceUnit], int]:
    """Parse every .java file under corpus in sorted order; count skips."""
    if not corpus.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {corpus}")
    files = sorted(corpus.rglob("*.java"), key=lambda p: p.as_posix())

    def load(path: Path) -> SourceUnit | None:
        rel = path.relative_to(corpus).as_posix()
        try:
            return parse_file(path.read_text(encoding="utf-8"), path=rel)
        except ParseError as exc:
            logger.warning("skipping %s: %s", rel, exc)
            return None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(load, files))
    else:
        results = [load(path) for path in files]
    units = [u for u in results if u is not None]
    return units, len(files) - len(units)


# --- subcommands ---------------------------------------------------------------


def cmd_obfuscate(args) -> int:
    cfg = _file_values(args)
    scheme = ObfuscationScheme(
        mode=args.mode,
        random_length=resolve("random_length", args.length, cfg),
        seed=resolve("seed", args.seed, cfg),
    )
    report = obfuscate_tree(args.input_dir, args.output_dir, scheme)
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_extract(args) -> int:
    cfg = _file_values(args)
    extraction = ExtractionConfig(
        max_len=_limit(resolve("max_len", args.max_len, cfg)),
        max_width=_limit(resolve("max_width", args.max_width, cfg)),
        max_contexts=resolve("max_contexts", args.max_contexts, cfg),
        seed=resolve("seed", args.seed, cfg),
    )
    jobs = resolve("jobs", args.jobs, cfg)
    units, skipped_files = _parse_corpus(Path(args.corpus), jobs)
    samples = []
    methods_total = 0
    for unit in units:
        methods_total += sum(len(cls.methods) for cls in unit.classes)
        samples.extend(extract_unit_samples(unit, extraction))
    if not samples:
        raise EmptyClass(f"{args.corpus}: no extractable methods")
    write_context_dump(samples, args.out)

    vocab = build_vocabulary(samples, min_count=1)
    stats = {
        "files": len(units) + skipped_files,
        "skipped_files": skipped_files,
        "methods": methods_total,
        "methods_dumped": len(samples),
        "distinct_tokens": vocab.n_tokens - 2,
        "distinct_paths": vocab.n_paths - 2,
        "distinct_targets": vocab.n_targets - 2,
    }
    RunManifest(
        stage="extract",
        config={
            "corpus": str(args.corpus),
            "max_len": extraction.max_len or 0,
            "max_width": extraction.max_width or 0,
            "max_contexts": extraction.max_contexts,
            "seed": extraction.seed,
        },
        counts=stats,
    ).write(manifest_path_for(args.out))
    print(json.dumps(stats, sort_keys=True))
    return 0


def _extraction_from_dump_manifest(dump_path: str) -> dict:
    manifest = manifest_path_for(dump_path)
    if manifest.exists():
        data = read_manifest(manifest)
        if data.get("stage") == "extract":
            return data.get("config", {})
    return {}


def cmd_train(args) -> int:
    cfg = _file_values(args)
    inherited = _extraction_from_dump_manifest(args.contexts)

    def ex_value(key: str, flag_value):
        if flag_value is not None:
            return flag_value
        if key in inherited:
            return inherited[key]
        return resolve(key, None, cfg)

    extraction = ExtractionConfig(
        max_len=_limit(int(ex_value("max_len", args.max_len))),
        max_width=_limit(int(ex_value("max_width", args.max_width))),
        max_contexts=int(ex_value("max_contexts", args.max_contexts)),
        seed=int(ex_value("seed", None)),
    )
    model_config = ModelConfig(
        d_emb=resolve("d_emb", args.d_emb, cfg),
        max_contexts=extraction.max_contexts,
        learning_rate=resolve("learning_rate", args.learning_rate, cfg),
        batch_size=resolve("batch_size", args.batch_size, cfg),
        epochs=resolve("epochs", args.epochs, cfg),
        seed=resolve("seed", args.seed, cfg),
        val_fraction=resolve("val_fraction", args.val_fraction, cfg),
        patience=resolve("patience", args.patience, cfg),
        dropout_rate=resolve("dropout_rate", args.dropout_rate, cfg),
    )
    min_count = resolve("min_count", args.min_count, cfg)

    samples = read_context_dump(args.contexts)
    vocab = build_vocabulary(samples, min_count=min_count)
    result = train(model_config, samples, vocab)
    for stats in result.history:
        print(
            f"epoch {stats.epoch}: train_loss={stats.train_loss:.6f} "
            f"val_loss={stats.val_loss:.6f} val_top1={stats.val_top1:.4f} "
            f"val_f1={stats.val_f1:.4f}"
        )
    trained = TrainedModel(
        config=model_config, extraction=extraction, params=result.params, vocab=vocab
    )
    save_checkpoint(args.out, trained)
    summary = {
        "best_epoch": result.best_epoch,
        "samples": len(samples),
        "tokens": vocab.n_tokens,
        "paths": vocab.n_paths,
        "targets": vocab.n_targets,
    }
    RunManifest(
        stage="train",
        config={
            "contexts": str(args.contexts),
            "min_count": min_count,
            "model": {
                "d_emb": model_config.d_emb,
                "learning_rate": model_config.learning_rate,
                "batch_size": model_config.batch_size,
                "epochs": model_config.epochs,
                "seed": model_config.seed,
                "val_fraction": model_config.val_fraction,
                "patience": model_config.patience,
                "dropout_rate": model_config.dropout_rate,
            },
            "extraction": {
                "max_len": extraction.max_len or 0,
                "max_width": extraction.max_width or 0,
                "max_contexts": extraction.max_contexts,
                "seed": extraction.seed,
            },
        },
        counts=summary,
        checkpoint_hash=sha256_file(args.out),
    ).write(manifest_path_for(args.out))
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_embed(args) -> int:
    cfg = _file_values(args)
    model = load_checkpoint(args.model)
    seed = resolve("seed", args.seed, cfg)
    selection = SelectionSpec(
        mode=resolve("selection", args.selection, cfg).lower(),
        k=resolve("k", args.k, cfg),
        seed=seed,
    )
    per_class_cap = resolve("per_class_cap", args.per_class_cap, cfg)
    jobs = resolve("jobs", args.jobs, cfg)
    agg_name = resolve("aggregation", args.agg, cfg)
    use_suite = args.suite or agg_name == "suite"
    aggregations = (
        standard_agg_suite() if use_suite else [parse_aggregation_name(agg_name)]
    )
    checkpoint_hash = sha256_file(args.model)
    corpus = Path(args.corpus)

    outputs = []
    if args.pairs:
        stats = None
        for agg in aggregations:
            dataset, stats = build_pair_dataset(
                args.pairs, corpus, model, selection, agg,
                per_class_cap=per_class_cap, seed=seed,
            )
            out = _suite_csv_path(args.out, agg.name) if use_suite else Path(args.out)
            write_dataset_csv(dataset, out)
            _write_embed_manifest(
                out, args, agg.name, selection, per_class_cap, seed, stats,
                checkpoint_hash, pairs=str(args.pairs),
            )
            outputs.append(str(out))
    else:
        datasets, stats = build_dataset_suite(
            corpus, model, selection, aggregations,
            per_class_cap=per_class_cap, seed=seed, jobs=jobs,
        )
        for agg, dataset in zip(aggregations, datasets):
            out = _suite_csv_path(args.out, agg.name) if use_suite else Path(args.out)
            write_dataset_csv(dataset, out)
            _write_embed_manifest(
                out, args, agg.name, selection, per_class_cap, seed, stats,
                checkpoint_hash,
            )
            outputs.append(str(out))

    if args.methods_csv:
        units, _ = _parse_corpus(corpus, jobs)
        rows = []
        for unit in units:
            samples = extract_unit_samples(unit, model.extraction)
            for sample in samples:
                rows.append(
                    (unit.path, sample.target_name, model.embed_sample(sample))
                )
        write_embedding_csv(args.methods_csv, rows)
        outputs.append(str(args.methods_csv))

    print(
        json.dumps(
            {"outputs": outputs, "counts": stats.as_dict() if stats else {}},
            sort_keys=True,
        )
    )
    return 0


def _suite_csv_path(base: str, agg_name: str) -> Path:
    path = Path(base)
    stem = path.name[: -len(".csv")] if path.name.endswith(".csv") else path.name
    return path.with_name(f"{stem}.{agg_name}.csv")


def _write_embed_manifest(
    out: Path, args, agg_name: str, selection: SelectionSpec,
    per_class_cap: int, seed: int, stats, checkpoint_hash: str, pairs: str = "",
) -> None:
    RunManifest(
        stage="embed",
        config={
            "corpus": str(args.corpus),
            "dataset_name": Path(args.corpus).name,
            "pairs": pairs,
            "aggregation": agg_name,
            "selection": {"mode": selection.mode, "k": selection.k, "seed": selection.seed},
            "per_class_cap": per_class_cap,
            "seed": seed,
            "model": str(args.model),
        },
        counts=stats.as_dict() if stats else {},
        checkpoint_hash=checkpoint_hash,
    ).write(manifest_path_for(out))


def cmd_evaluate(args) -> int:
    cfg = _file_values(args)
    dataset = read_dataset_csv(args.data)
    clf_config = ClassifierConfig(
        c=resolve("classifier_c", args.c, cfg),
        tol=resolve("classifier_tol", args.tol, cfg),
        max_iterations=resolve("max_iterations", args.max_iter, cfg),
    )
    plan = CvPlan(
        runs=resolve("runs", args.runs, cfg),
        folds=resolve("folds", args.folds, cfg),
        seed=resolve("seed", args.seed, cfg),
    )
    report = cross_validate(dataset, clf_config, plan)

    dataset_name, agg_name = args.dataset_name, args.agg_name
    data_manifest = manifest_path_for(args.data)
    if data_manifest.exists() and (dataset_name is None or agg_name is None):
        info = read_manifest(data_manifest).get("config", {})
        dataset_name = dataset_name or info.get("dataset_name")
        agg_name = agg_name or info.get("aggregation")
    report.dataset = dataset_name or Path(args.data).stem
    report.aggregation = agg_name or ""

    for run in range(report.runs):
        print(f"run {run}: kappa={report.per_fold_kappa[run].mean():.6f}")
    print(f"mean_kappa={report.mean_kappa:.6f}")
    print(f"mean_accuracy={report.mean_accuracy:.6f}")
    write_report(report, args.out)
    RunManifest(
        stage="evaluate",
        config={
            "data": str(args.data),
            "dataset": report.dataset,
            "aggregation": report.aggregation,
            "c": clf_config.c,
            "tol": clf_config.tol,
            "max_iterations": clf_config.max_iterations,
            "runs": plan.runs,
            "folds": plan.folds,
            "seed": plan.seed,
        },
        counts={"rows": len(dataset.rows), "labels": len(dataset.labels)},
        partition_fingerprint=report.partition_fingerprint,
    ).write(manifest_path_for(args.out))
    return 0


def cmd_compare(args) -> int:
    report_a = read_report(args.record_a)
    report_b = read_report(args.record_b)
    result = paired_ttest(
        report_a.per_fold_kappa.ravel(),
        report_b.per_fold_kappa.ravel(),
        report_a.partition_fingerprint,
        report_b.partition_fingerprint,
    )
    record = {
        "a": report_a.dataset + "/" + report_a.aggregation,
        "b": report_b.dataset + "/" + report_b.aggregation,
        "mean_diff": result.mean_diff,
        "t": result.t_stat,
        "df": result.df,
        "p_value": result.p_value,
        "significant": result.significant,
    }
    line = json.dumps(record, sort_keys=True)
    print(line)
    if args.out:
        Path(args.out).write_text(line + "\n", encoding="utf-8")
    return 0


def cmd_rank(args) -> int:
    results_dir = Path(args.results)
    if not results_dir.is_dir():
        raise FileNotFoundError(f"results directory not found: {results_dir}")
    collected: dict[str, dict[str, list[float]]] = {}
    for path in sorted(results_dir.iterdir()):
        if not path.is_file():
            continue
        try:
            report = read_report(path)
        except (ValueError, KeyError):
            continue
        if not report.aggregation:
            continue
        collected.setdefault(report.dataset, {}).setdefault(
            report.aggregation, []
        ).append(report.mean_kappa)
    if not collected:
        raise ValueError(f"no evaluation records found in {results_dir}")
    per_dataset = {
        dataset: {agg: sum(v) / len(v) for agg, v in aggs.items()}
        for dataset, aggs in collected.items()
    }
    totals = rank_aggregations(per_dataset)
    order = {name: i for i, name in enumerate(suite_name_order())}
    ranked = sorted(
        totals.items(), key=lambda kv: (-kv[1], order.get(kv[0], len(order)), kv[0])
    )
    for name, score in ranked:
        print(f"{score}\t{name}")
    return 0


def cmd_xobf(args) -> int:
    cfg = _file_values(args)
    model = load_checkpoint(args.model)
    seed = resolve("seed", args.seed, cfg)
    length = resolve("random_length", args.length, cfg)
    units, _ = _parse_corpus(Path(args.corpus))
    if not units:
        raise EmptyClass(f"{args.corpus}: no parseable files")

    def f1_for(variants: list[SourceUnit]) -> float:
        pairs = []
        for unit in variants:
            for sample in extract_unit_samples(unit, model.extraction):
                predicted = model.predict_sample(sample, k=1)[0][0]
                pairs.append((sample.target_name, predicted))
        if not pairs:
            raise EmptyClass(f"{args.corpus}: no extractable methods")
        return name_prediction_f1(pairs).f1

    scheme = ObfuscationScheme(mode="random", random_length=length, seed=seed)
    obfuscated_units = []
    for unit in units:
        rewritten, _ = obfuscate_unit(unit, scheme)
        obfuscated_units.append(parse_file(rewritten, path=unit.path))

    f1_plain = f1_for(units)
    f1_obf = f1_for(obfuscated_units)
    print(
        json.dumps(
            {
                "f1_plain": f1_plain,
                "f1_obfuscated": f1_obf,
                "drop": f1_plain - f1_obf,
            },
            sort_keys=True,
        )
    )
    return 0


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathvec",
        description="AST path-context embeddings: obfuscate, extract, train, embed, evaluate.",
    )
    parser.add_argument("--version", action="version", version=f"pathvec {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="key=value config file; flags override it")

    p = sub.add_parser("obfuscate", help="rewrite variable names in a directory tree")
    p.add_argument("--in", dest="input_dir", required=True)
    p.add_argument("--out", dest="output_dir", required=True)
    p.add_argument("--mode", required=True, choices=["type", "random"])
    p.add_argument("--seed", type=int)
    p.add_argument("--len", dest="length", type=int, help="random name length")
    add_config(p)
    p.set_defaults(func=cmd_obfuscate)

    p = sub.add_parser("extract", help="parse a corpus and dump path-contexts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-len", type=int, help="max path edges, 0 = unlimited")
    p.add_argument("--max-width", type=int, help="max path width, 0 = unlimited")
    p.add_argument("--max-contexts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    add_config(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the prediction model on a context dump")
    p.add_argument("--contexts", required=True, help="path-context dump file")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--d-emb", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--min-count", type=int)
    p.add_argument("--val-fraction", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--dropout-rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-len", type=int)
    p.add_argument("--max-width", type=int)
    p.add_argument("--max-contexts", type=int)
    add_config(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="build labeled datasets of file embeddings")
    p.add_argument("--corpus", required=True, help="corpus root: corpus/<label>/**/*.java")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.add_argument("--selection", choices=["all", "topk", "randomk"])
    p.add_argument("--k", type=int)
    p.add_argument("--agg", help="aggregation name, e.g. mean or meanMax")
    p.add_argument("--suite", action="store_true", help="emit all 23 aggregations")
    p.add_argument("--pairs", help="pair manifest: label<TAB>pathA<TAB>pathB")
    p.add_argument("--per-class-cap", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--methods-csv", help="also dump per-method embeddings here")
    add_config(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("evaluate", help="cross-validate a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="evaluation record path")
    p.add_argument("--runs", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--c", type=float, help="regularization parameter C")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--dataset-name")
    p.add_argument("--agg-name")
    add_config(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="paired t-test between two evaluation records")
    p.add_argument("record_a")
    p.add_argument("record_b")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("rank", help="rank-score aggregations over a directory of records")
    p.add_argument("--results", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("xobf", help="name-prediction F1 on a corpus, plain vs obfuscated")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--len", dest="length", type=int)
    add_config(p)
    p.set_defaults(func=cmd_xobf)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _FATAL as exc:
        print(f"pathvec: error: {exc}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"pathvec: parse error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
