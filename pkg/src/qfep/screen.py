"""The holographic screen: an ancillary qubit array written and read by
two parties with independently chosen bases.

Preparing a bit replaces one tensor factor with the axis eigenstate
(idealized strong preparation); on entangled inputs this is realized as a
deterministic projective reset, so the operation needs no randomness.
Reading is a Born measurement of the axis observable with collapse.
Thermodynamic bookkeeping (Landauer costs, sector energy splits) uses
exact SI constants; the quantum dynamics elsewhere use natural units.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InvalidPartitionError,
    InvalidWeightsError,
    LandauerViolationError,
)
from .states import NORM_TOL, HermitianOperator, StateVector, axis_observable

K_B = 1.380649e-23  # J/K, exact SI
HBAR = 1.054571817e-34  # J*s, exact SI
LN2 = math.log(2.0)

TRANSCRIPT_HEADER = ("tick", "qubit", "actor", "action", "axis_xyz", "bit", "probability")


@dataclass(frozen=True)
class BasisAxis:
    """Unit Bloch vector fixing a preparation/measurement basis."""

    direction: tuple[float, float, float]

    def __post_init__(self):
        d = tuple(float(c) for c in self.direction)
        if len(d) != 3:
            raise ValueError("axis needs exactly three components")
        if abs(math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2) - 1.0) > NORM_TOL:
            raise ValueError(f"axis must be unit norm, got {d}")
        object.__setattr__(self, "direction", d)

    @classmethod
    def z(cls) -> "BasisAxis":
        return cls((0.0, 0.0, 1.0))

    @classmethod
    def x(cls) -> "BasisAxis":
        return cls((1.0, 0.0, 0.0))

    @classmethod
    def y(cls) -> "BasisAxis":
        return cls((0.0, 1.0, 0.0))

    @classmethod
    def from_angles(cls, theta: float, phi: float = 0.0) -> "BasisAxis":
        """Axis at polar angle theta from z, azimuth phi."""
        return cls((math.sin(theta) * math.cos(phi),
                    math.sin(theta) * math.sin(phi),
                    math.cos(theta)))

    def angle_to(self, other: "BasisAxis") -> float:
        dot = sum(a * b for a, b in zip(self.direction, other.direction))
        return math.acos(min(1.0, max(-1.0, dot)))

    def eigenstates(self) -> tuple[np.ndarray, np.ndarray]:
        """(plus, minus) eigenvectors of n . sigma, eigenvalues +1 and -1."""
        return _axis_eigenstates(self.direction)

    def observable(self) -> HermitianOperator:
        return axis_observable(self.direction)


@functools.lru_cache(maxsize=4096)
def _axis_eigenstates(direction: tuple[float, float, float]):
    x, y, z = direction
    theta = math.acos(min(1.0, max(-1.0, z)))
    phi = math.atan2(y, x)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    e = complex(math.cos(phi), math.sin(phi))
    plus = np.array([c, e * s], dtype=complex)
    minus = np.array([s, -e * c], dtype=complex)
    plus.setflags(write=False)
    minus.setflags(write=False)
    return plus, minus


@functools.lru_cache(maxsize=4096)
def _axis_scalars(direction: tuple[float, float, float]):
    """Eigenstate components as plain complex scalars (hot-path cache):
    (p0, p1, m0, m1, conj(p0), conj(p1), conj(m0), conj(m1))."""
    plus, minus = _axis_eigenstates(direction)
    p0, p1 = complex(plus[0]), complex(plus[1])
    m0, m1 = complex(minus[0]), complex(minus[1])
    return p0, p1, m0, m1, p0.conjugate(), p1.conjugate(), m0.conjugate(), m1.conjugate()


@dataclass(frozen=True)
class TranscriptEntry:
    tick: int
    qubit: int
    actor: str
    action: str  # "prepare" | "read"
    axis: tuple[float, float, float]
    bit: int
    probability: float


@dataclass(eq=False)
class QubitScreen:
    """Mutable qubit array plus an append-only event transcript.

    A screen belongs to one simulation instance; clone screens for
    parallel runs instead of sharing one.
    """

    n_qubits: int
    _amps: np.ndarray = field(repr=False, default=None)
    transcript: list[TranscriptEntry] = field(default_factory=list)
    tick: int = 0
    record_transcript: bool = True

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("screen needs at least one qubit")
        if self._amps is None:
            amps = np.zeros(2**self.n_qubits, dtype=complex)
            amps[0] = 1.0
            self._amps = amps

    @property
    def joint_state(self) -> StateVector:
        return StateVector((2,) * self.n_qubits, self._amps.copy())

    def set_state(self, state: StateVector) -> None:
        if state.subsystem_dims != (2,) * self.n_qubits:
            raise ValueError("state does not match the screen's qubit layout")
        self._amps = np.asarray(state.amplitudes, dtype=complex).copy()

    def advance_tick(self) -> int:
        self.tick += 1
        return self.tick

    def _split(self, qubit: int) -> np.ndarray:
        if not 0 <= qubit < self.n_qubits:
            raise ValueError(f"qubit index {qubit} out of range")
        pre = 2**qubit
        post = 2 ** (self.n_qubits - 1 - qubit)
        return self._amps.reshape(pre, 2, post)

    def _log(self, qubit: int, actor: str, action: str, axis: BasisAxis,
             bit: int, probability: float) -> None:
        if self.record_transcript:
            self.transcript.append(TranscriptEntry(
                self.tick, qubit, actor, action, axis.direction, bit, probability))


def prepare_bit(screen: QubitScreen, qubit: int, bit: int, axis: BasisAxis,
                actor: str = "A") -> QubitScreen:
    """Write one classical bit: set the qubit to the axis eigenstate.

    Bit 0 maps to the +1 eigenstate, bit 1 to -1 (fixed global
    convention).  On a product state the other factors are untouched;
    on an entangled qubit the correlated remainder collapses onto the
    dominant branch before replacement.
    """
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    p0, p1, m0, m1, p0c, p1c, m0c, m1c = _axis_scalars(axis.direction)
    if bit == 0:
        t0, t1, tc0, tc1, oc0, oc1 = p0, p1, p0c, p1c, m0c, m1c
    else:
        t0, t1, tc0, tc1, oc0, oc1 = m0, m1, m0c, m1c, p0c, p1c
    psi = screen._split(qubit)
    rest = tc0 * psi[:, 0, :] + tc1 * psi[:, 1, :]
    nrm = math.sqrt(abs(np.vdot(rest, rest).real))
    if nrm < 1e-9:
        # state is exactly orthogonal to the target: collapse the other
        # branch and relabel it
        rest = oc0 * psi[:, 0, :] + oc1 * psi[:, 1, :]
        nrm = math.sqrt(abs(np.vdot(rest, rest).real))
    rest = rest / nrm
    psi[:, 0, :] = t0 * rest
    psi[:, 1, :] = t1 * rest
    screen._log(qubit, actor, "prepare", axis, bit, 1.0)
    return screen


def read_bit(screen: QubitScreen, qubit: int, axis: BasisAxis,
             rng: np.random.Generator, actor: str = "A") -> tuple[int, float]:
    """Born-measure one qubit along an axis; collapse and log the event.

    Returns the sampled bit and the exact Born probability of that
    outcome.  Consumes exactly one uniform draw from ``rng``.
    """
    p0, p1, m0, m1, p0c, p1c, m0c, m1c = _axis_scalars(axis.direction)
    psi = screen._split(qubit)
    branch = p0c * psi[:, 0, :] + p1c * psi[:, 1, :]
    p_plus = min(max(np.vdot(branch, branch).real, 0.0), 1.0)
    if rng.random() < p_plus:
        bit, prob, v0, v1 = 0, p_plus, p0, p1
    else:
        branch = m0c * psi[:, 0, :] + m1c * psi[:, 1, :]
        bit, prob, v0, v1 = 1, 1.0 - p_plus, m0, m1
    # the branch's squared norm is its Born weight for a normalized state
    nrm = math.sqrt(prob) if prob > 1e-12 else math.sqrt(abs(np.vdot(branch, branch).real))
    branch = branch / nrm
    psi[:, 0, :] = v0 * branch
    psi[:, 1, :] = v1 * branch
    screen._log(qubit, actor, "read", axis, bit, prob)
    return bit, prob


@dataclass(frozen=True)
class SectorMap:
    """Disjoint functional sectors of the screen's qubits.

    E is the observed environment, F the unobserved thermodynamic
    resource, Y the memory.  E may refine into pointer P, reference R
    and residual environment sectors.
    """

    e: frozenset[int]
    f: frozenset[int]
    y: frozenset[int]
    p: frozenset[int] | None = None
    r: frozenset[int] | None = None
    e_tilde: frozenset[int] | None = None

    @property
    def n_qubits(self) -> int:
        return len(self.e | self.f | self.y)

    @property
    def refined(self) -> bool:
        return self.p is not None or self.r is not None or self.e_tilde is not None

    @property
    def is_trivial(self) -> bool:
        """True when every qubit sits in a single sector (Definition 1)."""
        return sum(1 for s in (self.e, self.f, self.y) if s) <= 1

    @property
    def symmetry_broken(self) -> bool:
        return not self.is_trivial

    def sector(self, name: str) -> frozenset[int]:
        table = {"E": self.e, "F": self.f, "Y": self.y,
                 "P": self.p, "R": self.r, "Etilde": self.e_tilde}
        if name not in table or table[name] is None:
            raise ValueError(f"sector {name!r} is not defined")
        return table[name]

    def defined_sectors(self) -> tuple[str, ...]:
        names = ["E", "F", "Y"]
        if self.refined:
            names += ["P", "R", "Etilde"]
        return tuple(n for n in names if n in ("E", "F", "Y") or self.sector(n))


def decompose_sectors(n_qubits: int, assignment: Mapping[str, Iterable[int]]) -> SectorMap:
    """Validate a sector assignment and build a SectorMap.

    ``assignment`` maps sector names E/F/Y (optionally P/R/Etilde
    refining E) to qubit index collections.  E, F, Y must partition
    0..n_qubits-1 exactly.
    """
    known = {"E", "F", "Y", "P", "R", "Etilde"}
    unknown = set(assignment) - known
    if unknown:
        raise InvalidPartitionError(f"unknown sector names {sorted(unknown)}")
    sets = {name: frozenset(int(i) for i in assignment.get(name, ())) for name in known}
    for name, idx in sets.items():
        bad = [i for i in idx if i < 0 or i >= n_qubits]
        if bad:
            raise InvalidPartitionError(f"sector {name} has out-of-range qubits {bad}")
    top = [sets["E"], sets["F"], sets["Y"]]
    for i, a in enumerate(("E", "F", "Y")):
        for j, b in enumerate(("E", "F", "Y")):
            if i < j and top[i] & top[j]:
                raise InvalidPartitionError(
                    f"sectors {a} and {b} overlap on {sorted(top[i] & top[j])}")
    covered = sets["E"] | sets["F"] | sets["Y"]
    if covered != frozenset(range(n_qubits)):
        missing = sorted(set(range(n_qubits)) - covered)
        raise InvalidPartitionError(f"qubits {missing} not assigned to any sector")
    refined = any(sets[n] for n in ("P", "R", "Etilde")) or any(
        n in assignment for n in ("P", "R", "Etilde"))
    if refined:
        for i, a in enumerate(("P", "R", "Etilde")):
            for j, b in enumerate(("P", "R", "Etilde")):
                if i < j and sets[a] & sets[b]:
                    raise InvalidPartitionError(
                        f"refinement sectors {a} and {b} overlap")
        union = sets["P"] | sets["R"] | sets["Etilde"]
        if union != sets["E"]:
            raise InvalidPartitionError(
                "refinement P, R, Etilde must partition E exactly")
        return SectorMap(sets["E"], sets["F"], sets["Y"],
                         sets["P"], sets["R"], sets["Etilde"])
    return SectorMap(sets["E"], sets["F"], sets["Y"])


@dataclass(frozen=True, eq=False)
class InteractionSpec:
    """Screen interaction bookkeeping: per-qubit weights, inverse
    thermodynamic efficiency beta, temperature, and per-actor axes."""

    alphas: np.ndarray
    beta: float
    temperature: float
    axes: Mapping[str, tuple[BasisAxis, ...]]

    @property
    def n_qubits(self) -> int:
        return self.alphas.size

    @property
    def cycle_energy(self) -> float:
        """Energy scale exchanged per interaction cycle, in joules."""
        return self.beta * K_B * self.temperature


def build_interaction(alphas: Sequence[float], beta: float, temperature: float,
                      axes: Mapping[str, Sequence[BasisAxis]]) -> InteractionSpec:
    """Validate interaction weights against the Landauer constraints."""
    arr = np.asarray(alphas, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidWeightsError("alphas must be a nonempty 1-d sequence")
    if np.any(arr < 0) or np.any(arr > 1):
        raise InvalidWeightsError(f"weights must lie in [0, 1], got {arr}")
    if abs(arr.sum() - 1.0) > NORM_TOL:
        raise InvalidWeightsError(f"weights must sum to 1, got {arr.sum()}")
    if beta < LN2 - 1e-12:
        raise LandauerViolationError(f"beta = {beta} < ln 2")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    fixed = {}
    for actor, ax in axes.items():
        ax = tuple(ax)
        if len(ax) != arr.size:
            raise ValueError(f"actor {actor!r} needs one axis per qubit")
        fixed[actor] = ax
    arr.setflags(write=False)
    return InteractionSpec(arr, float(beta), float(temperature), fixed)


def sector_energy(spec: InteractionSpec, sectors: SectorMap,
                  per_sector_beta: Mapping[str, float]) -> dict[str, float]:
    """Per-cycle energy allocated to each nonempty sector, in joules.

    energy_X = beta_X * k_B * T * sum of the weights assigned to X.
    With a uniform beta the split conserves the total cycle energy.
    """
    out = {}
    for name in ("E", "F", "Y"):
        idx = sectors.sector(name)
        if not idx:
            continue
        if name not in per_sector_beta:
            raise ValueError(f"missing beta for sector {name}")
        beta_x = float(per_sector_beta[name])
        if beta_x < LN2 - 1e-12:
            raise LandauerViolationError(f"beta for sector {name} = {beta_x} < ln 2")
        weight = float(spec.alphas[sorted(idx)].sum())
        out[name] = beta_x * K_B * spec.temperature * weight
    return out


def landauer_cost(bits: float, temperature: float, beta: float = LN2) -> float:
    """Free-energy cost of irreversibly recording ``bits`` bits."""
    if bits < 0:
        raise ValueError(f"bit count must be nonnegative, got {bits}")
    if beta < LN2 - 1e-12:
        raise LandauerViolationError(f"beta = {beta} < ln 2")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return bits * beta * K_B * temperature


def min_bit_time(temperature: float) -> float:
    """Minimum time to irreversibly obtain one bit: hbar / (ln2 kB T)."""
    return HBAR / (LN2 * K_B * temperature)


def dissipation_time(temperature: float) -> float:
    """Thermal dissipation time pi hbar / (2 ln2 kB T)."""
    return math.pi * HBAR / (2 * LN2 * K_B * temperature)


def transcript_rows(entries: Iterable[TranscriptEntry]) -> list[tuple]:
    rows = []
    for e in entries:
        axis = ";".join(repr(c) for c in e.axis)
        rows.append((e.tick, e.qubit, e.actor, e.action, axis, e.bit, repr(e.probability)))
    return rows


def export_transcript(entries: Iterable[TranscriptEntry]) -> str:
    """Serialize a transcript as the CSV wire format (UTF-8, LF)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRANSCRIPT_HEADER)
    writer.writerows(transcript_rows(entries))
    return buf.getvalue()


def validate_transcript(entries: Sequence[TranscriptEntry]) -> None:
    """Check that every read of a qubit is preceded by a preparation."""
    prepared: set[int] = set()
    for e in entries:
        if e.action == "prepare":
            prepared.add(e.qubit)
        elif e.action == "read":
            if e.qubit not in prepared:
                raise ValueError(
                    f"qubit {e.qubit} read at tick {e.tick} before any preparation")
        else:
            raise ValueError(f"unknown transcript action {e.action!r}")
