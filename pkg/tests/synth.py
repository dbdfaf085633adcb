"""Synthetic two-class Java corpus generator.

Class "loops" files hold accumulation loops, class "chains" files hold
conditional cascades, so the classes are separable on structure alone.
Each file draws a topic word that appears both in its method names (the
prediction targets) and in its variable names, making variable names
highly informative for name prediction. Typo noise scrambles the topic
inside variable names only, leaving the target labels intact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from pathvec.util import derive_seed

TOPICS = ("alpha", "bravo", "credo", "delta", "ember",
          "flint", "gamma", "haven", "irons", "jolly")

LOOP_TEMPLATE = """\
class Loop{index} {{
    int {var}Total;

    int scan{Topic}Pile(int {var}Limit) {{
        int {var}Sum = 0;
        for (int step = 0; step < {var}Limit; step++) {{
            {var}Sum = {var}Sum + step * {k1};
        }}
        while ({var}Sum > {k2}) {{
            {var}Sum = {var}Sum - {k3};
        }}
        this.{var}Total = {var}Sum;
        return {var}Sum;
    }}

    int grab{Topic}Width(int {var}Base) {{
        int {var}Edge = {var}Base + this.{var}Total;
        {var}Edge += {k4};
        return {var}Edge * {k5};
    }}
}}
"""

CHAIN_TEMPLATE = """\
class Chain{index} {{
    boolean {var}Flag;

    int pick{Topic}Mode(int {var}Level) {{
        if ({var}Level > {k1}) {{
            return {k2};
        }} else {{
            if ({var}Level > {k3}) {{
                return {k4};
            }} else {{
                return {k5};
            }}
        }}
    }}

    boolean test{Topic}State(int {var}Probe) {{
        boolean {var}Seen = {var}Probe == {k1} || {var}Probe < {k3};
        this.{var}Flag = {var}Seen;
        return {var}Seen;
    }}
}}
"""

TEMPLATES = {"loops": LOOP_TEMPLATE, "chains": CHAIN_TEMPLATE}


def _typo(topic: str) -> str:
    # rotate the word, like a finger slip; guaranteed out of the topic pool
    return topic[1:] + topic[0]


def generate_corpus(
    root: Path,
    files_per_class: int,
    seed: int,
    typo_fraction: float = 0.0,
) -> list[Path]:
    """Write files_per_class files per label under root/<label>/."""
    root = Path(root)
    written = []
    for label, template in TEMPLATES.items():
        directory = root / label
        directory.mkdir(parents=True, exist_ok=True)
        for index in range(files_per_class):
            rng = np.random.default_rng(derive_seed(seed, label, index))
            topic = TOPICS[int(rng.integers(0, len(TOPICS)))]
            var_topic = _typo(topic) if rng.random() < typo_fraction else topic
            constants = {f"k{i}": int(rng.integers(1, 50)) for i in range(1, 6)}
            text = template.format(
                index=index,
                var=var_topic,
                Topic=topic[0].upper() + topic[1:],
                **constants,
            )
            path = directory / f"{label}{index:04d}.java"
            path.write_text(text, encoding="utf-8")
            written.append(path)
    return written
