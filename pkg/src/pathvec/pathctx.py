"""Path-context extraction and vocabularies.

A path-context is the triplet (start leaf token, node-kind path with
direction markers, end leaf token). One context is produced per unordered
leaf pair of a method body, the earlier leaf in source order first, so a
body with L leaves yields L*(L-1)/2 candidates before length/width
filtering.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .java.ast import AstNode, MethodDecl, SourceUnit
from .util import derive_seed

logger = logging.getLogger(__name__)

UP = "↑"  # toward the root
DOWN = "↓"  # toward the leaves

UNK_TOKEN = "<unk>"
PAD_TOKEN = "<pad>"

_SUBTOKEN_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[0-9]+")
_SANITIZE_RE = re.compile(r"[,\s]")


class EmptyMethod(Exception):
    """Method body has fewer than two leaves; nothing to extract."""


@dataclass(frozen=True)
class PathContext:
    start_token: str
    path: str
    end_token: str


@dataclass
class MethodSample:
    target_name: str
    target_subtokens: list[str]
    contexts: list[PathContext]
    line_count: int
    source_path: str


@dataclass(frozen=True)
class ExtractionConfig:
    max_len: int | None = 8  # max path edges, None = unlimited
    max_width: int | None = 2  # max child-index spread at the apex
    max_contexts: int = 200
    seed: int = 0


def split_target(name: str) -> list[str]:
    """Split an identifier into lowercase subtokens.

    Splits at camelCase boundaries, underscores and digit runs:
    "toString2JSON" -> ["to", "string", "2", "json"].
    """
    if not name:
        raise ValueError("empty name")
    parts = [m.group().lower() for m in _SUBTOKEN_RE.finditer(name)]
    return parts or [name.lower()]


def extract_contexts(
    method: MethodDecl,
    max_len: int | None = 8,
    max_width: int | None = 2,
) -> list[PathContext]:
    """All leaf-to-leaf path-contexts of a method body, source order first."""
    body = method.body
    leaves = list(body.leaves())
    if len(leaves) < 2:
        raise EmptyMethod(f"method {method.name!r} has {len(leaves)} leaves")

    parent: dict[int, AstNode] = {}
    child_pos: dict[int, int] = {}
    stack = [body]
    while stack:
        node = stack.pop()
        for pos, child in enumerate(node.children):
            parent[id(child)] = node
            child_pos[id(child)] = pos
            stack.append(child)

    def chain(leaf: AstNode) -> list[AstNode]:
        nodes = [leaf]
        while id(nodes[-1]) in parent:
            nodes.append(parent[id(nodes[-1])])
        return nodes

    chains = [chain(leaf) for leaf in leaves]
    contexts: list[PathContext] = []
    for i in range(len(leaves)):
        chain_a = chains[i]
        ids_a = {id(n): k for k, n in enumerate(chain_a)}
        for j in range(i + 1, len(leaves)):
            chain_b = chains[j]
            for up_b, node in enumerate(chain_b):
                if id(node) in ids_a:
                    up_a = ids_a[id(node)]
                    break
            length = up_a + up_b
            if max_len is not None and length > max_len:
                continue
            width = abs(child_pos[id(chain_a[up_a - 1])] - child_pos[id(chain_b[up_b - 1])])
            if max_width is not None and width > max_width:
                continue
            pieces = [chain_a[0].kind]
            for node in chain_a[1 : up_a + 1]:
                pieces.append(UP)
                pieces.append(node.kind)
            for node in reversed(chain_b[:up_b]):
                pieces.append(DOWN)
                pieces.append(node.kind)
            contexts.append(
                PathContext(chain_a[0].token or "", "".join(pieces), chain_b[0].token or "")
            )
    return contexts


def cap_contexts(
    contexts: list[PathContext], max_contexts: int, rng: np.random.Generator
) -> list[PathContext]:
    """Uniform, order-stable sample without replacement when over the cap."""
    if max_contexts < 1:
        raise ValueError("max_contexts must be >= 1")
    if len(contexts) <= max_contexts:
        return contexts
    keep = np.sort(rng.choice(len(contexts), size=max_contexts, replace=False))
    return [contexts[i] for i in keep]


def extract_unit_samples(unit: SourceUnit, cfg: ExtractionConfig) -> list[MethodSample]:
    """Extract a capped sample per method; methods with <2 body leaves are skipped."""
    samples: list[MethodSample] = []
    ordinal = 0
    for cls in unit.classes:
        for method in cls.methods:
            ordinal += 1
            try:
                contexts = extract_contexts(method, cfg.max_len, cfg.max_width)
            except EmptyMethod:
                logger.debug("skipping empty method %s in %s", method.name, unit.path)
                continue
            if not contexts:
                continue
            rng = np.random.default_rng(
                derive_seed(cfg.seed, unit.path, ordinal, method.name)
            )
            contexts = cap_contexts(contexts, cfg.max_contexts, rng)
            samples.append(
                MethodSample(
                    target_name=method.name,
                    target_subtokens=split_target(method.name),
                    contexts=contexts,
                    line_count=method.line_count,
                    source_path=unit.path,
                )
            )
    return samples


# --- vocabularies ------------------------------------------------------------


@dataclass
class Vocabulary:
    """Dense 0-based string-to-id maps with unk/pad fixed at 0 and 1."""

    token_to_id: dict[str, int]
    path_to_id: dict[str, int]
    target_to_id: dict[str, int]
    min_count: int
    unk_id: int = 0
    pad_id: int = 1
    id_to_target: list[str] = field(default_factory=list)

    def token_id(self, token: str) -> int:
        return self.token_to_id.get(token, self.unk_id)

    def path_id(self, path: str) -> int:
        return self.path_to_id.get(path, self.unk_id)

    def target_id(self, target: str) -> int:
        return self.target_to_id.get(target, self.unk_id)

    @property
    def n_tokens(self) -> int:
        return len(self.token_to_id)

    @property
    def n_paths(self) -> int:
        return len(self.path_to_id)

    @property
    def n_targets(self) -> int:
        return len(self.target_to_id)

    def index_sample(self, sample: MethodSample) -> "IndexedSample":
        starts = np.array([self.token_id(c.start_token) for c in sample.contexts], dtype=np.int64)
        paths = np.array([self.path_id(c.path) for c in sample.contexts], dtype=np.int64)
        ends = np.array([self.token_id(c.end_token) for c in sample.contexts], dtype=np.int64)
        return IndexedSample(
            target_id=self.target_id(sample.target_name),
            starts=starts,
            paths=paths,
            ends=ends,
            target_name=sample.target_name,
        )


@dataclass
class IndexedSample:
    target_id: int
    starts: np.ndarray
    paths: np.ndarray
    ends: np.ndarray
    target_name: str = ""

    def __len__(self) -> int:
        return len(self.starts)


def _vocab_map(counts: Counter, min_count: int) -> dict[str, int]:
    mapping = {UNK_TOKEN: 0, PAD_TOKEN: 1}
    kept = sorted(
        (s for s, c in counts.items() if c >= min_count and s not in mapping),
        key=lambda s: (-counts[s], s),
    )
    for s in kept:
        mapping[s] = len(mapping)
    return mapping


def build_vocabulary(samples: list[MethodSample], min_count: int = 1) -> Vocabulary:
    if not samples:
        raise ValueError("cannot build a vocabulary from zero samples")
    token_counts: Counter = Counter()
    path_counts: Counter = Counter()
    target_counts: Counter = Counter()
    for sample in samples:
        target_counts[sample.target_name] += 1
        for ctx in sample.contexts:
            token_counts[ctx.start_token] += 1
            token_counts[ctx.end_token] += 1
            path_counts[ctx.path] += 1
    vocab = Vocabulary(
        token_to_id=_vocab_map(token_counts, min_count),
        path_to_id=_vocab_map(path_counts, min_count),
        target_to_id=_vocab_map(target_counts, min_count),
        min_count=min_count,
    )
    vocab.id_to_target = [""] * len(vocab.target_to_id)
    for name, idx in vocab.target_to_id.items():
        vocab.id_to_target[idx] = name
    return vocab


# --- dump interchange format -------------------------------------------------
#
# One method per line: "targetName ctx ctx ..." with ctx =
# "startToken,pathString,endToken". Commas and whitespace inside tokens
# become '_' at dump time.


def sanitize_token(token: str) -> str:
    return _SANITIZE_RE.sub("_", token) or "_"


def format_dump_line(sample: MethodSample) -> str:
    parts = [sanitize_token(sample.target_name)]
    for ctx in sample.contexts:
        parts.append(
            f"{sanitize_token(ctx.start_token)},{sanitize_token(ctx.path)},{sanitize_token(ctx.end_token)}"
        )
    return " ".join(parts)


def write_context_dump(samples: list[MethodSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in samples:
            fh.write(format_dump_line(sample))
            fh.write("\n")


def read_context_dump(path: str | Path) -> list[MethodSample]:
    samples: list[MethodSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            target = parts[0]
            contexts = []
            for chunk in parts[1:]:
                fields = chunk.split(",")
                if len(fields) != 3:
                    raise ValueError(f"{path}:{lineno}: malformed context {chunk!r}")
                contexts.append(PathContext(*fields))
            if not contexts:
                raise ValueError(f"{path}:{lineno}: method with no contexts")
            samples.append(
                MethodSample(
                    target_name=target,
                    target_subtokens=split_target(target),
                    contexts=contexts,
                    line_count=1,
                    source_path=f"{path}:{lineno}",
                )
            )
    return samples
