"""Selection and column-wise aggregation of method embeddings into
file-level vectors, plus labeled dataset assembly.

Aggregation functions run per column over the selected method vectors and
their outputs are concatenated in canonical order (min, max, sum, mean,
median, stddev). Standard deviation is population std; the median of an
even count is the mean of the two middle values.
"""

from __future__ import annotations

import csv
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .java import ParseError, SourceUnit, parse_file
from .model import TrainedModel
from .pathctx import extract_unit_samples
from .util import derive_seed

logger = logging.getLogger(__name__)

CANONICAL_FUNCTIONS = ("min", "max", "sum", "mean", "median", "stddev")
_SHORT_NAMES = {
    "min": "min",
    "max": "max",
    "sum": "sum",
    "mean": "mean",
    "median": "med",
    "stddev": "std",
}
_COLUMN_FN = {
    "min": lambda m: m.min(axis=0),
    "max": lambda m: m.max(axis=0),
    "sum": lambda m: m.sum(axis=0),
    "mean": lambda m: m.mean(axis=0),
    "median": lambda m: np.median(m, axis=0),
    "stddev": lambda m: m.std(axis=0),
}
SELECTION_MODES = ("all", "topk", "randomk")


class NoMethods(Exception):
    """File yields zero embeddable methods; callers skip it with a warning."""


class EmptyClass(Exception):
    """A label directory produced no dataset rows."""


@dataclass(frozen=True)
class AggregationSpec:
    functions: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.functions:
            raise ValueError("at least one aggregation function required")
        unknown = set(self.functions) - set(CANONICAL_FUNCTIONS)
        if unknown:
            raise ValueError(f"unknown aggregation functions: {sorted(unknown)}")
        if len(set(self.functions)) != len(self.functions):
            raise ValueError("duplicate aggregation functions")
        object.__setattr__(
            self,
            "functions",
            tuple(f for f in CANONICAL_FUNCTIONS if f in self.functions),
        )

    @property
    def name(self) -> str:
        parts = [_SHORT_NAMES[f] for f in self.functions]
        return parts[0] + "".join(p[0].upper() + p[1:] for p in parts[1:])


def parse_aggregation_name(name: str) -> AggregationSpec:
    """Inverse of AggregationSpec.name, tolerant of long or reordered parts
    ("meanMin", "minMaxMeanMedianStddevSum", ...)."""
    by_prefix = {}
    for full, short in _SHORT_NAMES.items():
        by_prefix[short] = full
        by_prefix[full] = full
    found = []
    rest = name
    while rest:
        lowered = rest[0].lower() + rest[1:]
        for cand in sorted(by_prefix, key=len, reverse=True):
            if lowered.startswith(cand):
                found.append(by_prefix[cand])
                rest = rest[len(cand) :]
                break
        else:
            raise ValueError(f"cannot parse aggregation name {name!r}")
    return AggregationSpec(tuple(found))


def standard_agg_suite() -> list[AggregationSpec]:
    """The 23 specs: 6 singletons, 15 pairs, min/mean/max, and all six."""
    suite = [AggregationSpec((f,)) for f in CANONICAL_FUNCTIONS]
    suite.extend(
        AggregationSpec(pair) for pair in itertools.combinations(CANONICAL_FUNCTIONS, 2)
    )
    suite.append(AggregationSpec(("min", "mean", "max")))
    suite.append(AggregationSpec(CANONICAL_FUNCTIONS))
    return suite


def suite_name_order() -> list[str]:
    return [spec.name for spec in standard_agg_suite()]


@dataclass(frozen=True)
class SelectionSpec:
    mode: str = "all"
    k: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in SELECTION_MODES:
            raise ValueError(f"mode must be one of {SELECTION_MODES}")
        if self.mode != "all" and self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass
class ClassEmbedding:
    values: np.ndarray
    label: str
    source_path: str


@dataclass
class LabeledDataset:
    rows: list[ClassEmbedding]
    feature_width: int
    labels: list[str]  # ordered distinct labels

    def feature_matrix(self) -> np.ndarray:
        return np.stack([r.values for r in self.rows]) if self.rows else np.zeros((0, 0))

    def label_list(self) -> list[str]:
        return [r.label for r in self.rows]


def select_methods(
    vectors: list[tuple[np.ndarray, int]], spec: SelectionSpec, salt: str = ""
) -> list[np.ndarray]:
    """Pick method vectors: all of them, the K longest (line count, earlier
    declaration wins ties) or a seeded uniform K without replacement."""
    if not vectors:
        raise ValueError("no vectors to select from")
    if spec.mode == "all" or spec.k >= len(vectors):
        return [v for v, _ in vectors]
    if spec.mode == "topk":
        ranked = sorted(range(len(vectors)), key=lambda i: (-vectors[i][1], i))
        keep = sorted(ranked[: spec.k])
    else:
        rng = np.random.default_rng(derive_seed(spec.seed, "select", salt))
        keep = sorted(rng.choice(len(vectors), size=spec.k, replace=False))
    return [vectors[i][0] for i in keep]


def aggregate_vectors(vectors: list[np.ndarray], spec: AggregationSpec) -> np.ndarray:
    if not vectors:
        raise ValueError("no vectors to aggregate")
    matrix = np.stack(vectors)
    return np.concatenate([_COLUMN_FN[f](matrix) for f in spec.functions])


def method_vectors(unit: SourceUnit, model: TrainedModel) -> list[tuple[np.ndarray, int]]:
    """(embedding, line count) per embeddable method, declaration order."""
    samples = extract_unit_samples(unit, model.extraction)
    if not samples:
        raise NoMethods(f"{unit.path}: no embeddable methods")
    return [(model.embed_sample(s), s.line_count) for s in samples]


def embed_file(
    unit: SourceUnit,
    model: TrainedModel,
    selection: SelectionSpec,
    aggregation: AggregationSpec,
    label: str = "",
) -> ClassEmbedding:
    """Embed every method of a unit, select, aggregate into one vector."""
    selected = select_methods(method_vectors(unit, model), selection, salt=unit.path)
    values = aggregate_vectors(selected, aggregation)
    return ClassEmbedding(values=values, label=label, source_path=unit.path)


def embed_pair_difference(
    unit_a: SourceUnit,
    unit_b: SourceUnit,
    model: TrainedModel,
    selection: SelectionSpec,
    aggregation: AggregationSpec,
    label: str = "",
) -> ClassEmbedding:
    emb_a = embed_file(unit_a, model, selection, aggregation)
    emb_b = embed_file(unit_b, model, selection, aggregation)
    return ClassEmbedding(
        values=emb_a.values - emb_b.values,
        label=label,
        source_path=f"{unit_a.path}|{unit_b.path}",
    )


@dataclass
class BuildStats:
    files: int = 0
    skipped_parse: int = 0
    skipped_empty: int = 0
    rows_per_label: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "files": self.files,
            "skipped_parse": self.skipped_parse,
            "skipped_empty": self.skipped_empty,
            "rows_per_label": dict(self.rows_per_label),
        }


def _cap_indices(n: int, cap: int, seed: int, label: str) -> list[int]:
    if n <= cap:
        return list(range(n))
    rng = np.random.default_rng(derive_seed(seed, "cap", label))
    return sorted(rng.choice(n, size=cap, replace=False))


def build_dataset_suite(
    corpus_dir: str | Path,
    model: TrainedModel,
    selection: SelectionSpec,
    aggregations: list[AggregationSpec],
    per_class_cap: int = 2000,
    seed: int = 0,
    jobs: int = 1,
) -> tuple[list[LabeledDataset], BuildStats]:
    """Embed a corpus laid out as corpus/<label>/**/*.java, once per file,
    producing one dataset per aggregation spec over the same file sample.

    Files are walked in sorted path order and the per-class downsampling is
    seeded, so parallelism cannot change the result.
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {corpus_dir}")
    labels = sorted(d.name for d in corpus_dir.iterdir() if d.is_dir())
    if not labels:
        raise EmptyClass(f"{corpus_dir}: no label subdirectories")

    stats = BuildStats()
    rows_per_agg: list[list[ClassEmbedding]] = [[] for _ in aggregations]

    def embed_one(item: tuple[str, Path]) -> tuple[str, list[np.ndarray] | None]:
        label, path = item
        rel = path.relative_to(corpus_dir).as_posix()
        try:
            unit = parse_file(path.read_text(encoding="utf-8"), path=rel)
            selected = select_methods(method_vectors(unit, model), selection, salt=rel)
        except ParseError as exc:
            logger.warning("skipping %s: %s", rel, exc)
            return rel, None
        except NoMethods:
            logger.warning("skipping %s: no embeddable methods", rel)
            return rel, []
        return rel, selected

    for label in labels:
        files = sorted((corpus_dir / label).rglob("*.java"), key=lambda p: p.as_posix())
        work = [(label, path) for path in files]
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(embed_one, work))
        else:
            results = [embed_one(item) for item in work]

        label_rows: list[list[ClassEmbedding]] = [[] for _ in aggregations]
        for rel, selected in results:
            stats.files += 1
            if selected is None:
                stats.skipped_parse += 1
                continue
            if not selected:
                stats.skipped_empty += 1
                continue
            for agg_idx, agg in enumerate(aggregations):
                label_rows[agg_idx].append(
                    ClassEmbedding(
                        values=aggregate_vectors(selected, agg),
                        label=label,
                        source_path=rel,
                    )
                )
        if not label_rows[0]:
            raise EmptyClass(f"label {label!r} yielded zero embeddable files")
        keep = _cap_indices(len(label_rows[0]), per_class_cap, seed, label)
        stats.rows_per_label[label] = len(keep)
        for agg_idx in range(len(aggregations)):
            rows_per_agg[agg_idx].extend(label_rows[agg_idx][i] for i in keep)

    datasets = [
        LabeledDataset(
            rows=rows,
            feature_width=len(agg.functions) * model.config.d_code,
            labels=labels,
        )
        for agg, rows in zip(aggregations, rows_per_agg)
    ]
    return datasets, stats


def build_dataset(
    corpus_dir: str | Path,
    model: TrainedModel,
    selection: SelectionSpec,
    aggregation: AggregationSpec,
    per_class_cap: int = 2000,
    seed: int = 0,
    jobs: int = 1,
) -> tuple[LabeledDataset, BuildStats]:
    datasets, stats = build_dataset_suite(
        corpus_dir, model, selection, [aggregation], per_class_cap, seed, jobs
    )
    return datasets[0], stats


def build_pair_dataset(
    manifest_path: str | Path,
    corpus_root: str | Path,
    model: TrainedModel,
    selection: SelectionSpec,
    aggregation: AggregationSpec,
    per_class_cap: int = 2000,
    seed: int = 0,
) -> tuple[LabeledDataset, BuildStats]:
    """Differenced pair dataset from a manifest of label<TAB>pathA<TAB>pathB
    lines; paths are relative to corpus_root."""
    corpus_root = Path(corpus_root)
    stats = BuildStats()
    per_label: dict[str, list[ClassEmbedding]] = {}
    labels_in_order: list[str] = []

    with open(manifest_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(
                    f"{manifest_path}:{lineno}: expected 3 tab-separated fields"
                )
            label, rel_a, rel_b = parts
            stats.files += 1
            try:
                unit_a = parse_file(
                    (corpus_root / rel_a).read_text(encoding="utf-8"), path=rel_a
                )
                unit_b = parse_file(
                    (corpus_root / rel_b).read_text(encoding="utf-8"), path=rel_b
                )
            except (ParseError, OSError) as exc:
                logger.warning("skipping pair %s|%s: %s", rel_a, rel_b, exc)
                stats.skipped_parse += 1
                continue
            try:
                row = embed_pair_difference(
                    unit_a, unit_b, model, selection, aggregation, label=label
                )
            except NoMethods:
                stats.skipped_empty += 1
                continue
            if label not in per_label:
                per_label[label] = []
                labels_in_order.append(label)
            per_label[label].append(row)

    if not labels_in_order:
        raise EmptyClass("pair manifest yielded zero usable pairs")
    all_rows: list[ClassEmbedding] = []
    for label in labels_in_order:
        rows = sorted(per_label[label], key=lambda r: r.source_path)
        keep = _cap_indices(len(rows), per_class_cap, seed, label)
        stats.rows_per_label[label] = len(keep)
        all_rows.extend(rows[i] for i in keep)

    width = len(aggregation.functions) * model.config.d_code
    return (
        LabeledDataset(rows=all_rows, feature_width=width, labels=labels_in_order),
        stats,
    )


# --- dataset CSV --------------------------------------------------------------


def write_dataset_csv(dataset: LabeledDataset, path: str | Path) -> None:
    """RFC-4180 CSV with header f0..f{w-1},label."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(dataset.feature_width)] + ["label"])
        for row in dataset.rows:
            writer.writerow([repr(float(x)) for x in row.values] + [row.label])


def read_dataset_csv(path: str | Path) -> LabeledDataset:
    rows: list[ClassEmbedding] = []
    labels: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[-1] != "label":
            raise ValueError(f"{path}: not a pathvec dataset CSV")
        width = len(header) - 1
        for record in reader:
            if len(record) != width + 1:
                raise ValueError(f"{path}: ragged row of {len(record)} fields")
            values = np.array([float(x) for x in record[:width]])
            label = record[width]
            if label not in labels:
                labels.append(label)
            rows.append(ClassEmbedding(values=values, label=label, source_path=""))
    return LabeledDataset(rows=rows, feature_width=width, labels=labels)
