"""Attention-based method-name prediction network.

Per context i of a method: c_i = [tokenEmb[s_i]; pathEmb[p_i]; tokenEmb[t_i]],
combined h_i = tanh(W c_i), attention a_i = softmax_i(h_i . a), code vector
v = sum_i a_i h_i, scores = targetEmb v. The code vector doubles as the
method embedding. Gradients are exact and finite-difference checked.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .pathctx import (
    ExtractionConfig,
    IndexedSample,
    MethodSample,
    Vocabulary,
)

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"PVECCKP1"


class ConfigError(ValueError):
    pass


class EmptyBag(Exception):
    """A sample with zero contexts reached the network."""


@dataclass(frozen=True)
class ModelConfig:
    d_emb: int = 128  # token/path embedding width; code width is 3x this
    max_contexts: int = 200
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 20
    seed: int = 1
    val_fraction: float = 0.1
    patience: int = 3
    dropout_rate: float = 0.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999

    @property
    def d_code(self) -> int:
        return 3 * self.d_emb

    def __post_init__(self) -> None:
        if self.d_emb < 1:
            raise ConfigError("d_emb must be >= 1")
        if self.max_contexts < 1:
            raise ConfigError("max_contexts must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not (0.0 <= self.val_fraction < 1.0):
            raise ConfigError("val_fraction must be in [0, 1)")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ConfigError("dropout_rate must be in [0, 1)")


@dataclass
class ModelParams:
    token_emb: np.ndarray  # (n_tokens, d_emb)
    path_emb: np.ndarray  # (n_paths, d_emb)
    transform: np.ndarray  # (d_code, d_code)
    attention: np.ndarray  # (d_code,)
    target_emb: np.ndarray  # (n_targets, d_code)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "token_emb": self.token_emb,
            "path_emb": self.path_emb,
            "transform": self.transform,
            "attention": self.attention,
            "target_emb": self.target_emb,
        }

    def copy(self) -> "ModelParams":
        return ModelParams(**{k: v.copy() for k, v in self.as_dict().items()})

    @property
    def d_code(self) -> int:
        return self.transform.shape[0]


@dataclass
class ForwardResult:
    code_vector: np.ndarray
    attention: np.ndarray
    target_probs: np.ndarray


def init_params(config: ModelConfig, vocab: Vocabulary) -> ModelParams:
    """Seeded uniform(-0.05, 0.05) initialization, fixed draw order."""
    rng = np.random.default_rng(config.seed)
    lo, hi = -0.05, 0.05
    d, dc = config.d_emb, config.d_code
    return ModelParams(
        token_emb=rng.uniform(lo, hi, size=(vocab.n_tokens, d)),
        path_emb=rng.uniform(lo, hi, size=(vocab.n_paths, d)),
        transform=rng.uniform(lo, hi, size=(dc, dc)),
        attention=rng.uniform(lo, hi, size=dc),
        target_emb=rng.uniform(lo, hi, size=(vocab.n_targets, dc)),
    )


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x)
    e = np.exp(shifted)
    return e / e.sum()


def forward(params: ModelParams, sample: IndexedSample) -> ForwardResult:
    if len(sample) == 0:
        raise EmptyBag("sample has no contexts")
    E = np.concatenate(
        [
            params.token_emb[sample.starts],
            params.path_emb[sample.paths],
            params.token_emb[sample.ends],
        ],
        axis=1,
    )
    H = np.tanh(E @ params.transform.T)
    alpha = _softmax(H @ params.attention)
    v = alpha @ H
    probs = _softmax(params.target_emb @ v)
    return ForwardResult(code_vector=v, attention=alpha, target_probs=probs)


def embed_method(params: ModelParams, sample: IndexedSample) -> np.ndarray:
    return forward(params, sample).code_vector


def predict_name(
    params: ModelParams, sample: IndexedSample, k: int, vocab: Vocabulary
) -> list[tuple[str, float]]:
    """Top-k (name, probability) pairs, descending, ties by target id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    probs = forward(params, sample).target_probs
    order = np.argsort(-probs, kind="stable")[:k]
    return [(vocab.id_to_target[i], float(probs[i])) for i in order]


def loss_and_grads(
    params: ModelParams,
    batch: list[IndexedSample],
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch plus exact gradients."""
    if not batch:
        raise ValueError("empty batch")
    d = params.token_emb.shape[1]
    grads = {k: np.zeros_like(v) for k, v in params.as_dict().items()}
    total_loss = 0.0
    scale = 1.0 / len(batch)

    for sample in batch:
        if len(sample) == 0:
            raise EmptyBag("sample has no contexts")
        E = np.concatenate(
            [
                params.token_emb[sample.starts],
                params.path_emb[sample.paths],
                params.token_emb[sample.ends],
            ],
            axis=1,
        )
        H_raw = np.tanh(E @ params.transform.T)
        if dropout_rate > 0.0:
            if rng is None:
                raise ValueError("dropout requires an rng")
            mask = (rng.random(H_raw.shape) >= dropout_rate) / (1.0 - dropout_rate)
            H = H_raw * mask
        else:
            mask = None
            H = H_raw

        e = H @ params.attention
        alpha = _softmax(e)
        v = alpha @ H
        scores = params.target_emb @ v
        shifted = scores - np.max(scores)
        logsumexp = float(np.log(np.sum(np.exp(shifted))) + np.max(scores))
        total_loss += (logsumexp - float(scores[sample.target_id])) * scale

        probs = np.exp(shifted) / np.sum(np.exp(shifted))
        ds = probs.copy()
        ds[sample.target_id] -= 1.0
        ds *= scale

        grads["target_emb"] += np.outer(ds, v)
        g = params.target_emb.T @ ds  # dL/dv

        q = H @ g
        de = alpha * (q - float(alpha @ q))
        dH = alpha[:, None] * g[None, :] + de[:, None] * params.attention[None, :]
        grads["attention"] += H.T @ de
        if mask is not None:
            dH = dH * mask
        dU = dH * (1.0 - H_raw * H_raw)
        grads["transform"] += dU.T @ E
        dE = dU @ params.transform
        np.add.at(grads["token_emb"], sample.starts, dE[:, :d])
        np.add.at(grads["path_emb"], sample.paths, dE[:, d : 2 * d])
        np.add.at(grads["token_emb"], sample.ends, dE[:, 2 * d :])

    return total_loss, grads


# --- training ----------------------------------------------------------------


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    val_top1: float
    val_f1: float


@dataclass
class TrainResult:
    params: ModelParams
    history: list[EpochStats]
    best_epoch: int


def _validate(
    params: ModelParams, samples: list[IndexedSample], vocab: Vocabulary
) -> tuple[float, float, float]:
    from .evaluate import name_prediction_f1

    losses = []
    hits = 0
    pairs = []
    for sample in samples:
        result = forward(params, sample)
        p = max(float(result.target_probs[sample.target_id]), 1e-300)
        losses.append(-np.log(p))
        pred = int(np.argmax(result.target_probs))
        hits += int(pred == sample.target_id)
        pairs.append((sample.target_name, vocab.id_to_target[pred]))
    metrics = name_prediction_f1(pairs)
    return float(np.mean(losses)), hits / len(samples), metrics.f1


def train(
    config: ModelConfig, samples: list[MethodSample], vocab: Vocabulary
) -> TrainResult:
    """Minibatch Adam on the name-prediction objective.

    Splits samples into train/validation with the config seed, keeps the
    params of the epoch with the best validation subtoken F1 and stops
    early once F1 has not improved for `patience` epochs. Deterministic
    for a fixed seed.
    """
    if not samples:
        raise ConfigError("no training samples")
    indexed = [vocab.index_sample(s) for s in samples]
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(indexed))
    n_val = min(len(indexed) - 1, max(1, round(len(indexed) * config.val_fraction)))
    if len(indexed) < 2:
        n_val = 0
    val = [indexed[i] for i in order[:n_val]]
    tr = [indexed[i] for i in order[n_val:]]
    if not val:
        val = tr

    params = init_params(config, vocab)
    best_params = params.copy()
    best_f1 = -1.0
    best_epoch = 0
    stale = 0
    history: list[EpochStats] = []

    adam_m = {k: np.zeros_like(v) for k, v in params.as_dict().items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.as_dict().items()}
    step = 0
    b1, b2, eps = config.adam_beta1, config.adam_beta2, 1e-8

    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(len(tr))
        epoch_losses = []
        for lo in range(0, len(tr), config.batch_size):
            batch = [tr[i] for i in perm[lo : lo + config.batch_size]]
            loss, grads = loss_and_grads(
                params, batch, dropout_rate=config.dropout_rate, rng=rng
            )
            epoch_losses.append(loss)
            step += 1
            for key, p in params.as_dict().items():
                g = grads[key]
                adam_m[key] = b1 * adam_m[key] + (1 - b1) * g
                adam_v[key] = b2 * adam_v[key] + (1 - b2) * g * g
                m_hat = adam_m[key] / (1 - b1**step)
                v_hat = adam_v[key] / (1 - b2**step)
                p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)

        val_loss, val_top1, val_f1 = _validate(params, val, vocab)
        history.append(
            EpochStats(
                epoch=epoch,
                train_loss=float(np.mean(epoch_losses)),
                val_loss=val_loss,
                val_top1=val_top1,
                val_f1=val_f1,
            )
        )
        logger.info(
            "epoch %d: train_loss=%.4f val_loss=%.4f val_top1=%.3f val_f1=%.3f",
            epoch, history[-1].train_loss, val_loss, val_top1, val_f1,
        )
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_params = params.copy()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    return TrainResult(params=best_params, history=history, best_epoch=best_epoch)


# --- trained-model container and checkpoint IO --------------------------------


@dataclass
class TrainedModel:
    config: ModelConfig
    extraction: ExtractionConfig
    params: ModelParams
    vocab: Vocabulary

    def embed_sample(self, sample: MethodSample) -> np.ndarray:
        return embed_method(self.params, self.vocab.index_sample(sample))

    def predict_sample(self, sample: MethodSample, k: int = 1) -> list[tuple[str, float]]:
        return predict_name(self.params, self.vocab.index_sample(sample), k, self.vocab)


def _vocab_to_lists(vocab: Vocabulary) -> dict:
    def ordered(mapping: dict[str, int]) -> list[str]:
        out = [""] * len(mapping)
        for s, i in mapping.items():
            out[i] = s
        return out

    return {
        "tokens": ordered(vocab.token_to_id),
        "paths": ordered(vocab.path_to_id),
        "targets": ordered(vocab.target_to_id),
        "min_count": vocab.min_count,
    }


def _vocab_from_lists(data: dict) -> Vocabulary:
    vocab = Vocabulary(
        token_to_id={s: i for i, s in enumerate(data["tokens"])},
        path_to_id={s: i for i, s in enumerate(data["paths"])},
        target_to_id={s: i for i, s in enumerate(data["targets"])},
        min_count=int(data["min_count"]),
    )
    vocab.id_to_target = list(data["targets"])
    return vocab


def save_checkpoint(path: str | Path, model: TrainedModel) -> None:
    """Self-describing binary: magic, JSON header, float32 LE tensors."""
    tensors = model.params.as_dict()
    header = {
        "format": 1,
        "model": asdict(model.config),
        "extraction": asdict(model.extraction),
        "vocab": _vocab_to_lists(model.vocab),
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in tensors.items()],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for value in tensors.values():
            fh.write(np.ascontiguousarray(value, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> TrainedModel:
    raw = Path(path).read_bytes()
    if raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path} is not a pathvec checkpoint")
    offset = len(CHECKPOINT_MAGIC)
    (header_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    offset += header_len
    if header.get("format") != 1:
        raise ValueError(f"unsupported checkpoint format {header.get('format')}")

    arrays = {}
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
        offset += count * 4
        arrays[spec["name"]] = data.reshape(shape).astype(np.float64)

    return TrainedModel(
        config=ModelConfig(**header["model"]),
        extraction=ExtractionConfig(**header["extraction"]),
        params=ModelParams(**arrays),
        vocab=_vocab_from_lists(header["vocab"]),
    )


def write_embedding_csv(
    path: str | Path, rows: list[tuple[str, str, np.ndarray]]
) -> None:
    """Per-method embedding dump: sourcePath,methodName,v0..v{d-1}."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if rows:
            width = len(rows[0][2])
            writer.writerow(["sourcePath", "methodName", *[f"v{i}" for i in range(width)]])
        for source_path, name, vec in rows:
            writer.writerow([source_path, name, *[repr(float(x)) for x in vec]])
