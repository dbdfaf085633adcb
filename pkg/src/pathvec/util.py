"""Small shared helpers: stable seed derivation and file hashing."""

from __future__ import annotations

import hashlib
from pathlib import Path


def derive_seed(seed: int, *salts: object) -> int:
    """Derive a stream seed from a base seed plus arbitrary salt values.

    Stable across processes and platforms (unlike builtin hash), so parallel
    and serial runs that key streams off (seed, file path, ...) agree.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode("utf-8"))
    for salt in salts:
        h.update(b"\x1f")
        h.update(str(salt).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
