"""Deterministic random streams.

One counter-based generator (Philox) seeded from ``(seed, *labels)`` so
independent parts of a run draw from independent, order-insensitive
streams.  Identical (seed, labels) always reproduce the same stream on
any platform.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_entropy(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, *labels: str) -> np.random.Generator:
    """Fork a named substream of the run-level seed."""
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    entropy = [int(seed)] + [_label_entropy(str(lab)) for lab in labels]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
