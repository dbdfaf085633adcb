"""Embedding quality measurement.

A one-vs-rest linear classifier (L2-regularized squared hinge loss,
C = 1 by default) is scored with Cohen's kappa under repeated stratified
k-fold cross-validation; systems are compared with a paired two-tailed
t-test over the per-fold kappas at the 0.05 level; aggregation functions
are rank-scored 5..1 per dataset. Subtoken F1 scores method-name
predictions.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import stdtr

from .pathctx import split_target
from .util import derive_seed


class DegenerateData(Exception):
    """All rows share one label; nothing to separate."""


class TooFewRows(Exception):
    """Some label has fewer rows than folds."""


class MismatchedFolds(Exception):
    """Paired comparison over different fold partitions."""


class ZeroVector(Exception):
    """Cosine similarity is undefined for the zero vector."""


class EmptyMatrix(Exception):
    """Confusion matrix with zero total count."""


@dataclass(frozen=True)
class ClassifierConfig:
    c: float = 1.0
    bias: bool = True
    tol: float = 1e-3
    max_iterations: int = 1000

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError("C must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class CvPlan:
    runs: int = 10
    folds: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


@dataclass
class EvalReport:
    per_fold_kappa: np.ndarray  # (runs, folds)
    per_fold_accuracy: np.ndarray
    mean_kappa: float
    mean_accuracy: float
    confusion_total: np.ndarray
    labels: list[str]
    partition_fingerprint: str
    runs: int
    folds: int
    seed: int
    dataset: str = ""
    aggregation: str = ""


@dataclass
class TTestResult:
    p_value: float
    mean_diff: float
    significant: bool
    t_stat: float
    df: int


@dataclass
class PredictionMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class LinearModel:
    classes: list[str]
    weights: np.ndarray  # (n_classes, n_features)
    biases: np.ndarray  # (n_classes,)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights.T + self.biases

    def predict(self, X: np.ndarray) -> list[str]:
        scores = self.decision_function(X)
        return [self.classes[i] for i in np.argmax(scores, axis=1)]


def _first_appearance(labels: Sequence[str]) -> list[str]:
    seen: list[str] = []
    for label in labels:
        if label not in seen:
            seen.append(label)
    return seen


def _fit_squared_hinge(
    X: np.ndarray, ybin: np.ndarray, c: float, tol: float, max_iter: int
) -> np.ndarray:
    # objective: 0.5 |w|^2 + (C/n) sum max(0, 1 - y w.x)^2
    # The mean-scaled data term keeps the boundary invariant under row
    # duplication, as the contract requires.
    n = X.shape[0]

    def fg(w: np.ndarray) -> tuple[float, np.ndarray]:
        margins = X @ w
        viol = np.maximum(0.0, 1.0 - ybin * margins)
        f = 0.5 * float(w @ w) + (c / n) * float(viol @ viol)
        g = w - (2.0 * c / n) * (X.T @ (ybin * viol))
        return f, g

    res = minimize(
        fg,
        np.zeros(X.shape[1]),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "ftol": tol * 1e-6, "gtol": 1e-9},
    )
    return res.x


def train_linear(
    X: np.ndarray,
    y: Sequence[str],
    config: ClassifierConfig = ClassifierConfig(),
    classes: list[str] | None = None,
) -> LinearModel:
    """One-vs-rest L2-regularized squared-hinge linear models."""
    X = np.asarray(X, dtype=float)
    if classes is None:
        classes = _first_appearance(y)
    if len(classes) < 2:
        raise DegenerateData("need at least two distinct labels")
    y_arr = np.asarray(list(y))
    X_fit = np.hstack([X, np.ones((X.shape[0], 1))]) if config.bias else X

    weights = np.zeros((len(classes), X.shape[1]))
    biases = np.zeros(len(classes))
    for i, cls in enumerate(classes):
        ybin = np.where(y_arr == cls, 1.0, -1.0)
        w = _fit_squared_hinge(X_fit, ybin, config.c, config.tol, config.max_iterations)
        if config.bias:
            weights[i] = w[:-1]
            biases[i] = w[-1]
        else:
            weights[i] = w
    return LinearModel(classes=list(classes), weights=weights, biases=biases)


def stratified_fold_assignment(
    labels: Sequence[str], folds: int, seed: int, run: int
) -> np.ndarray:
    """Fold index per row; a pure function of (seed, run, labels)."""
    rng = np.random.default_rng(derive_seed(seed, "cv-run", run))
    assign = np.full(len(labels), -1, dtype=np.int64)
    arr = np.asarray(list(labels))
    for label in _first_appearance(labels):
        idx = np.flatnonzero(arr == label)
        rng.shuffle(idx)
        for pos, row in enumerate(idx):
            assign[row] = pos % folds
    return assign


def kappa(confusion) -> float:
    """Cohen's kappa of a square count matrix."""
    m = np.asarray(confusion, dtype=np.int64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.size == 0:
        raise EmptyMatrix("confusion matrix must be square and nonempty")
    if (m < 0).any():
        raise ValueError("negative counts")
    total = int(m.sum())
    if total == 0:
        raise EmptyMatrix("confusion matrix has zero total")
    trace = int(np.trace(m))
    row = m.sum(axis=1)
    col = m.sum(axis=0)
    chance = int(row @ col)
    if chance == total * total:  # p_e == 1
        return 1.0 if trace == total else 0.0
    p_o = trace / total
    p_e = chance / (total * total)
    return (p_o - p_e) / (1.0 - p_e)


def cross_validate(
    dataset,
    clf_config: ClassifierConfig = ClassifierConfig(),
    plan: CvPlan = CvPlan(),
) -> EvalReport:
    """Repeated stratified k-fold CV; one kappa per fold.

    Partitions depend only on (seed, run, labels), so two embeddings of
    the same corpus evaluated with the same plan share fold partitions
    and their per-fold kappas can be compared pairwise.
    """
    X = dataset.feature_matrix()
    y = dataset.label_list()
    label_order = list(dataset.labels)
    counts = Counter(y)
    if len(counts) < 2:
        raise DegenerateData("need at least two distinct labels")
    shortest = min(counts.values())
    if shortest < plan.folds:
        raise TooFewRows(
            f"label with {shortest} rows cannot be split into {plan.folds} folds"
        )

    idx_of = {label: i for i, label in enumerate(label_order)}
    y_idx = np.array([idx_of[label] for label in y])
    n_labels = len(label_order)

    kappas = np.zeros((plan.runs, plan.folds))
    accuracies = np.zeros((plan.runs, plan.folds))
    confusion_total = np.zeros((n_labels, n_labels), dtype=np.int64)
    fingerprint = hashlib.sha256()

    for run in range(plan.runs):
        assign = stratified_fold_assignment(y, plan.folds, plan.seed, run)
        fingerprint.update(assign.astype("<i8").tobytes())
        for fold in range(plan.folds):
            test_mask = assign == fold
            model = train_linear(
                X[~test_mask],
                [y[i] for i in np.flatnonzero(~test_mask)],
                clf_config,
                classes=label_order,
            )
            pred = model.predict(X[test_mask])
            confusion = np.zeros((n_labels, n_labels), dtype=np.int64)
            for true_i, pred_label in zip(y_idx[test_mask], pred):
                confusion[true_i, idx_of[pred_label]] += 1
            confusion_total += confusion
            kappas[run, fold] = kappa(confusion)
            accuracies[run, fold] = np.trace(confusion) / confusion.sum()

    return EvalReport(
        per_fold_kappa=kappas,
        per_fold_accuracy=accuracies,
        mean_kappa=float(kappas.mean()),
        mean_accuracy=float(accuracies.mean()),
        confusion_total=confusion_total,
        labels=label_order,
        partition_fingerprint=fingerprint.hexdigest(),
        runs=plan.runs,
        folds=plan.folds,
        seed=plan.seed,
    )


def name_prediction_f1(pairs: Sequence[tuple[str, str]]) -> PredictionMetrics:
    """Micro-averaged subtoken precision/recall/F1 over (true, predicted)."""
    tp = fp = fn = 0
    for true_name, predicted_name in pairs:
        true_counts = Counter(split_target(true_name))
        pred_counts = Counter(split_target(predicted_name))
        overlap = sum((true_counts & pred_counts).values())
        tp += overlap
        fp += sum(pred_counts.values()) - overlap
        fn += sum(true_counts.values()) - overlap
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PredictionMetrics(precision=precision, recall=recall, f1=f1)


def paired_ttest(
    kappa_a: Sequence[float],
    kappa_b: Sequence[float],
    fingerprint_a: str | None = None,
    fingerprint_b: str | None = None,
) -> TTestResult:
    """Classical paired two-tailed t-test on per-fold kappa differences."""
    if fingerprint_a is not None and fingerprint_b is not None:
        if fingerprint_a != fingerprint_b:
            raise MismatchedFolds("fold partitions differ between the two reports")
    a = np.asarray(kappa_a, dtype=float).ravel()
    b = np.asarray(kappa_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("paired series must have equal lengths")
    n = a.size
    if n < 2:
        raise ValueError("need at least two paired values")
    diff = a - b
    mean_diff = float(diff.mean())
    df = n - 1
    if np.all(diff == 0.0):
        return TTestResult(p_value=1.0, mean_diff=0.0, significant=False, t_stat=0.0, df=df)
    sd = float(diff.std(ddof=1))
    if sd == 0.0:
        # constant nonzero difference: infinitely strong evidence
        return TTestResult(
            p_value=0.0,
            mean_diff=mean_diff,
            significant=True,
            t_stat=float(np.inf) if mean_diff > 0 else float(-np.inf),
            df=df,
        )
    t_stat = mean_diff / (sd / np.sqrt(n))
    p_value = float(2.0 * stdtr(df, -abs(t_stat)))
    return TTestResult(
        p_value=p_value,
        mean_diff=mean_diff,
        significant=p_value < 0.05,
        t_stat=float(t_stat),
        df=df,
    )


def rank_aggregations(
    per_dataset: dict[str, dict[str, float]],
    name_order: list[str] | None = None,
) -> dict[str, int]:
    """Score aggregation names 5..1 by per-dataset kappa rank, summed.

    Ties break by canonical suite-name order (unknown names sort after,
    alphabetically) so scoring is deterministic.
    """
    if name_order is None:
        from .aggregate import suite_name_order

        name_order = suite_name_order()
    rank_of = {name: i for i, name in enumerate(name_order)}

    def tie_key(name: str):
        return (rank_of.get(name, len(rank_of)), name)

    totals: dict[str, int] = {}
    for dataset in sorted(per_dataset):
        scores = per_dataset[dataset]
        for name in scores:
            totals.setdefault(name, 0)
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], tie_key(kv[0])))
        for pos, (name, _) in enumerate(ranked[:5]):
            totals[name] += 5 - pos
    return totals


def vector_similarity(u, v) -> tuple[float, float]:
    """(cosine similarity, Euclidean distance) between two equal-length vectors."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError("vectors must have equal lengths")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    cosine = float(u @ v) / (nu * nv)
    euclidean = float(np.linalg.norm(u - v))
    return cosine, euclidean


# --- report records ------------------------------------------------------------


def write_report(report: EvalReport, path: str | Path) -> None:
    """Line-oriented text record for one cross-validation run."""
    lines = [
        "format=pathvec-eval-v1",
        f"dataset={report.dataset}",
        f"aggregation={report.aggregation}",
        f"runs={report.runs}",
        f"folds={report.folds}",
        f"seed={report.seed}",
        "labels=" + "\t".join(report.labels),
        f"partition_fingerprint={report.partition_fingerprint}",
        f"mean_kappa={report.mean_kappa!r}",
        f"mean_accuracy={report.mean_accuracy!r}",
    ]
    for run in range(report.runs):
        row = " ".join(repr(float(x)) for x in report.per_fold_kappa[run])
        lines.append(f"kappa\t{run}\t{row}")
    for run in range(report.runs):
        row = " ".join(repr(float(x)) for x in report.per_fold_accuracy[run])
        lines.append(f"accuracy\t{run}\t{row}")
    for i, label in enumerate(report.labels):
        row = " ".join(str(int(x)) for x in report.confusion_total[i])
        lines.append(f"confusion\t{i}\t{row}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> EvalReport:
    meta: dict[str, str] = {}
    kappa_rows: dict[int, list[float]] = {}
    acc_rows: dict[int, list[float]] = {}
    confusion_rows: dict[int, list[int]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if line.startswith(("kappa\t", "accuracy\t", "confusion\t")):
            tag, idx, row = line.split("\t", 2)
            if tag == "kappa":
                kappa_rows[int(idx)] = [float(x) for x in row.split()]
            elif tag == "accuracy":
                acc_rows[int(idx)] = [float(x) for x in row.split()]
            else:
                confusion_rows[int(idx)] = [int(x) for x in row.split()]
        elif "=" in line:
            key, value = line.split("=", 1)
            meta[key] = value
    if meta.get("format") != "pathvec-eval-v1":
        raise ValueError(f"{path}: not a pathvec evaluation record")
    runs = int(meta["runs"])
    folds = int(meta["folds"])
    labels = meta["labels"].split("\t") if meta.get("labels") else []
    per_fold_kappa = np.array([kappa_rows[r] for r in range(runs)])
    per_fold_accuracy = np.array([acc_rows[r] for r in range(runs)])
    confusion = np.array(
        [confusion_rows[i] for i in range(len(labels))], dtype=np.int64
    ) if confusion_rows else np.zeros((0, 0), dtype=np.int64)
    return EvalReport(
        per_fold_kappa=per_fold_kappa,
        per_fold_accuracy=per_fold_accuracy,
        mean_kappa=float(meta["mean_kappa"]),
        mean_accuracy=float(meta["mean_accuracy"]),
        confusion_total=confusion,
        labels=labels,
        partition_fingerprint=meta["partition_fingerprint"],
        runs=runs,
        folds=folds,
        seed=int(meta["seed"]),
        dataset=meta.get("dataset", ""),
        aggregation=meta.get("aggregation", ""),
    )
