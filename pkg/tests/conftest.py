import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # fixtures_java, oracles, synth

from pathvec.java import parse_file
from pathvec.model import ModelConfig, init_params
from pathvec.pathctx import (
    MethodSample,
    PathContext,
    build_vocabulary,
    split_target,
)

import fixtures_java as fx


@pytest.fixture
def fig4_unit():
    return parse_file(fx.FIG4_ORIGINAL, "Holder.java")


@pytest.fixture
def fixture_unit():
    return parse_file(fx.FIXTURE_METHODS, "Mixed.java")


def random_samples(rng: np.random.Generator, n_samples=8, n_tokens=5, n_paths=4,
                   n_contexts=4, targets=("alpha", "beta", "gamma")):
    """Small random method samples for model tests."""
    samples = []
    for i in range(n_samples):
        contexts = [
            PathContext(
                f"tok{rng.integers(0, n_tokens)}",
                f"path{rng.integers(0, n_paths)}",
                f"tok{rng.integers(0, n_tokens)}",
            )
            for _ in range(int(rng.integers(1, n_contexts + 1)))
        ]
        name = targets[i % len(targets)]
        samples.append(MethodSample(name, split_target(name), contexts, 3, "mem.java"))
    return samples


@pytest.fixture
def tiny_model():
    """Random-init params over a small vocabulary, plus the samples."""
    rng = np.random.default_rng(11)
    samples = random_samples(rng)
    vocab = build_vocabulary(samples, min_count=1)
    config = ModelConfig(d_emb=6, epochs=1, seed=5)
    params = init_params(config, vocab)
    return config, params, vocab, samples
