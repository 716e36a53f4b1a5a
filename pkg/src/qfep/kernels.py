"""Markov kernels over finite record alphabets.

Both the environment's true dynamics and an agent's generative model are
row-stochastic matrices over the same kind of alphabet; learning is
count-based estimation with additive (Dirichlet) smoothing, and the
prediction-error metric is the maximum per-row total-variation distance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MarkovKernel:
    """Row-stochastic transition matrix over a finite record alphabet.

    ``counts`` carries the sufficient statistics of a learned kernel
    (None for kernels given directly, e.g. scripted environments).
    """

    alphabet: tuple[str, ...]
    matrix: np.ndarray
    counts: np.ndarray | None = field(default=None)

    def __post_init__(self):
        alphabet = tuple(str(a) for a in self.alphabet)
        if len(alphabet) == 0:
            raise ValueError("alphabet must be nonempty")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet labels must be distinct")
        mat = np.asarray(self.matrix, dtype=float)
        k = len(alphabet)
        if mat.shape != (k, k):
            raise ValueError(f"matrix shape {mat.shape} != ({k}, {k})")
        if np.any(mat < -ROW_TOL) or np.any(mat > 1 + ROW_TOL):
            raise ValueError("entries must lie in [0, 1]")
        rows = mat.sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > ROW_TOL:
            raise ValueError(f"rows must sum to 1, got sums {rows}")
        mat.setflags(write=False)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "matrix", mat)
        if self.counts is not None:
            counts = np.asarray(self.counts, dtype=float)
            if counts.shape != (k, k):
                raise ValueError("counts shape must match the matrix")
            counts.setflags(write=False)
            object.__setattr__(self, "counts", counts)

    def index(self, record: str) -> int:
        try:
            return self.alphabet.index(record)
        except ValueError:
            raise ValueError(f"record {record!r} not in alphabet") from None

    def row(self, record: str) -> np.ndarray:
        return self.matrix[self.index(record)]

    def sample_next(self, record: str, rng: np.random.Generator) -> str:
        """Draw the next record given the current one."""
        probs = self.row(record)
        u = rng.random()
        acc = 0.0
        for j, p in enumerate(probs):
            acc += p
            if u < acc:
                return self.alphabet[j]
        return self.alphabet[-1]

    @classmethod
    def uniform(cls, alphabet: Sequence[str]) -> "MarkovKernel":
        k = len(tuple(alphabet))
        mat = np.full((k, k), 1.0 / k)
        return cls(tuple(alphabet), mat, np.zeros((k, k)))

    @classmethod
    def identity(cls, alphabet: Sequence[str]) -> "MarkovKernel":
        return cls(tuple(alphabet), np.eye(len(tuple(alphabet))))

    def to_json(self) -> str:
        return json.dumps({"alphabet": list(self.alphabet),
                           "matrix": self.matrix.tolist()}, sort_keys=True)

    @classmethod
    def from_json(cls, payload: str) -> "MarkovKernel":
        data = json.loads(payload)
        return cls(tuple(data["alphabet"]), np.asarray(data["matrix"], dtype=float))


def bit_alphabet(width: int) -> tuple[str, ...]:
    """All bit strings of a given width, lexicographically ordered."""
    if width < 1:
        raise ValueError("record width must be at least 1")
    return tuple(format(i, f"0{width}b") for i in range(2**width))


def _smoothed(counts: np.ndarray, smoothing: float) -> np.ndarray:
    k = counts.shape[0]
    post = counts + smoothing
    sums = post.sum(axis=1, keepdims=True)
    uniform = np.full((k, k), 1.0 / k)
    with np.errstate(invalid="ignore", divide="ignore"):
        mat = np.where(sums > 0, post / np.where(sums > 0, sums, 1.0), uniform)
    return mat


def learn_update(model: MarkovKernel, prev_record: str, new_record: str,
                 smoothing: float = 1.0) -> MarkovKernel:
    """One step of the learning operator: (model, transition) -> model'.

    Increments the transition count and renormalizes with additive
    Dirichlet smoothing.  Records outside the alphabet extend it; the
    new record gets a uniform smoothed row.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    alphabet = list(model.alphabet)
    counts = (model.counts if model.counts is not None
              else np.zeros((len(alphabet), len(alphabet)))).copy()
    for rec in (prev_record, new_record):
        if rec not in alphabet:
            alphabet.append(rec)
            k = len(alphabet)
            grown = np.zeros((k, k))
            grown[: k - 1, : k - 1] = counts
            counts = grown
    i = alphabet.index(prev_record)
    j = alphabet.index(new_record)
    counts[i, j] += 1.0
    return MarkovKernel(tuple(alphabet), _smoothed(counts, smoothing), counts)


def learn_sequence(model: MarkovKernel, records: Sequence[str],
                   smoothing: float = 1.0) -> MarkovKernel:
    """Fold a whole record sequence through the learning operator."""
    for prev, new in zip(records, records[1:]):
        model = learn_update(model, prev, new, smoothing)
    return model


def estimate_kernel(records: Sequence[str], alphabet: Sequence[str],
                    smoothing: float = 0.0) -> MarkovKernel:
    """Empirical transition-frequency kernel of a record sequence.

    Rows with no observations fall back to the uniform distribution.
    """
    alphabet = tuple(alphabet)
    idx = {a: i for i, a in enumerate(alphabet)}
    k = len(alphabet)
    counts = np.zeros((k, k))
    for prev, new in zip(records, records[1:]):
        counts[idx[prev], idx[new]] += 1.0
    return MarkovKernel(alphabet, _smoothed(counts, smoothing), counts)


def kernel_distance(a: MarkovKernel, b: MarkovKernel) -> float:
    """Metric distance between kernels: max over rows of the
    total-variation distance between row distributions.  Bounded in
    [0, 1] and a true metric on a shared alphabet."""
    if a.alphabet != b.alphabet:
        raise ValueError(
            f"alphabet mismatch: {a.alphabet} vs {b.alphabet}")
    tv_rows = 0.5 * np.abs(a.matrix - b.matrix).sum(axis=1)
    return float(tv_rows.max())


def simulate_chain(kernel: MarkovKernel, start: str, steps: int,
                   rng: np.random.Generator) -> list[str]:
    """Sample a record trajectory of the given length (including start)."""
    out = [start]
    current = start
    for _ in range(steps):
        current = kernel.sample_next(current, rng)
        out.append(current)
    return out


def is_constant_kernel(model: MarkovKernel, tol: float = 0.2) -> bool:
    """Whether every observed row concentrates on one common record.

    Used for the reference sector: system identification needs the
    R-kernel to predict a single unchanging record.  Rows that were
    never observed (zero counts) are ignored since they only carry the
    smoothing prior.
    """
    counts = model.counts
    observed = (np.ones(len(model.alphabet), dtype=bool) if counts is None
                else counts.sum(axis=1) > 0)
    if not observed.any():
        return True
    rows = model.matrix[observed]
    target = int(np.argmax(rows.sum(axis=0)))
    point = np.zeros(len(model.alphabet))
    point[target] = 1.0
    return bool(np.all(0.5 * np.abs(rows - point).sum(axis=1) < tol))
