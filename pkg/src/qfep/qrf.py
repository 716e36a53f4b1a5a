"""Quantum reference frames as executable measurement programs.

A QRF couples a choice of per-qubit measurement axes on a screen sector
to a feed-forward classifier program that turns raw bits into a record
(and, reversed, a record back into a preparation pattern when the
program is invertible).  Only the classical shadow of a QRF is
representable; per-run quantum phase is never serialized.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .channel import ContextFamily, DiagramCCD, joint_feasible
from .errors import ResourceLimitError
from .screen import BasisAxis, InteractionSpec, build_interaction
from .states import HermitianOperator, StateVector, kron_operators

COMMUTATOR_TOL = 1e-9
MAX_PROGRAM_LAYERS = 3


@dataclass(frozen=True)
class ProgramNode:
    """One deterministic classifier: parent bits -> one output bit."""

    name: str
    inputs: tuple[str, ...]
    table: Mapping[tuple[int, ...], int]


@dataclass(frozen=True, eq=False)
class ClassifierProgram:
    """Feed-forward diagram of deterministic classifiers, at most three
    layers deep, mapping ``n_inputs`` raw bits to an output record."""

    n_inputs: int
    nodes: tuple[ProgramNode, ...]
    outputs: tuple[str, ...]

    def __post_init__(self):
        names = {f"in{i}" for i in range(self.n_inputs)}
        depth = {n: 0 for n in names}
        for node in self.nodes:
            if node.name in depth:
                raise ValueError(f"duplicate node name {node.name!r}")
            missing = [p for p in node.inputs if p not in depth]
            if missing:
                raise ValueError(f"node {node.name!r} reads undefined {missing}")
            depth[node.name] = 1 + max(depth[p] for p in node.inputs)
            if depth[node.name] > MAX_PROGRAM_LAYERS:
                raise ValueError(
                    f"node {node.name!r} exceeds {MAX_PROGRAM_LAYERS} layers")
            for combo in itertools.product((0, 1), repeat=len(node.inputs)):
                if combo not in node.table:
                    raise ValueError(
                        f"node {node.name!r} table is missing input {combo}")
        for out in self.outputs:
            if out not in depth:
                raise ValueError(f"output {out!r} is not a node")

    @property
    def record_width(self) -> int:
        return len(self.outputs)

    def evaluate(self, bits: Sequence[int]) -> str:
        if len(bits) != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} bits, got {len(bits)}")
        values = {f"in{i}": int(b) for i, b in enumerate(bits)}
        for node in self.nodes:
            key = tuple(values[p] for p in node.inputs)
            values[node.name] = int(node.table[key])
        return "".join(str(values[o]) for o in self.outputs)

    def invert(self, record: str) -> tuple[int, ...]:
        """Preparation direction: the unique preimage of a record.

        Programs without a unique preimage are rejected for
        preparation use.
        """
        matches = [bits for bits in itertools.product((0, 1), repeat=self.n_inputs)
                   if self.evaluate(bits) == record]
        if len(matches) != 1:
            raise ValueError(
                f"record {record!r} has {len(matches)} preimages; "
                "program is not invertible for preparation")
        return matches[0]

    def to_diagram(self) -> DiagramCCD:
        """View the program as a weight-1 cocone diagram with the record
        node as core."""
        names = [f"in{i}" for i in range(self.n_inputs)]
        names += [n.name for n in self.nodes]
        names.append("record")
        edges = {}
        for node in self.nodes:
            for p in node.inputs:
                edges[(p, node.name)] = 1.0
        for out in self.outputs:
            edges[(out, "record")] = 1.0
        return DiagramCCD(tuple(names), edges, core="record")

    @classmethod
    def identity(cls, n: int) -> "ClassifierProgram":
        nodes = tuple(ProgramNode(f"g{i}", (f"in{i}",), {(0,): 0, (1,): 1})
                      for i in range(n))
        return cls(n, nodes, tuple(f"g{i}" for i in range(n)))

    @classmethod
    def bit_flip(cls, n: int) -> "ClassifierProgram":
        nodes = tuple(ProgramNode(f"g{i}", (f"in{i}",), {(0,): 1, (1,): 0})
                      for i in range(n))
        return cls(n, nodes, tuple(f"g{i}" for i in range(n)))

    @classmethod
    def from_function(cls, fn: Callable[[tuple[int, ...]], Sequence[int]],
                      n_in: int, n_out: int) -> "ClassifierProgram":
        """Tabulate an arbitrary bit function as a one-layer program."""
        nodes = []
        for k in range(n_out):
            table = {}
            for combo in itertools.product((0, 1), repeat=n_in):
                table[combo] = int(fn(combo)[k])
            nodes.append(ProgramNode(f"g{k}", tuple(f"in{i}" for i in range(n_in)),
                                     table))
        return cls(n_in, tuple(nodes), tuple(f"g{k}" for k in range(n_out)))


@dataclass(frozen=True, eq=False)
class QRF:
    """A measurement program attached to a screen sector."""

    name: str
    n_qubits: int
    sector: tuple[int, ...]
    axes: tuple[BasisAxis, ...]
    program: ClassifierProgram

    def __post_init__(self):
        sector = tuple(int(i) for i in self.sector)
        if len(set(sector)) != len(sector):
            raise ValueError("sector indices must be distinct")
        if any(i < 0 or i >= self.n_qubits for i in sector):
            raise ValueError(f"sector {sector} out of range for {self.n_qubits} qubits")
        if len(self.axes) != len(sector):
            raise ValueError("need one axis per sector qubit")
        if self.program.n_inputs != len(sector):
            raise ValueError("program arity must match the sector size")
        object.__setattr__(self, "sector", sector)
        object.__setattr__(self, "axes", tuple(self.axes))


def make_qrf(name: str, n_qubits: int, sector: Sequence[int],
             axes: Sequence[BasisAxis], program: ClassifierProgram | None = None,
             ) -> QRF:
    sector = tuple(sector)
    if program is None:
        program = ClassifierProgram.identity(len(sector))
    return QRF(name, n_qubits, sector, tuple(axes), program)


def qrf_from_config(config: Mapping) -> QRF:
    """Build a QRF from a declarative config block.

    Expected keys: ``name``, ``n_qubits``, ``sector`` (index list),
    ``axes`` (list of xyz triples), optional ``program`` with ``nodes``
    (name, inputs, table keyed by bit strings) and ``outputs``.
    """
    axes = tuple(BasisAxis(tuple(a)) for a in config["axes"])
    program = None
    if "program" in config:
        spec = config["program"]
        nodes = []
        for n in spec["nodes"]:
            table = {tuple(int(c) for c in key): int(v)
                     for key, v in n["table"].items()}
            nodes.append(ProgramNode(n["name"], tuple(n["inputs"]), table))
        program = ClassifierProgram(len(config["sector"]), tuple(nodes),
                                    tuple(spec["outputs"]))
    return make_qrf(config["name"], int(config["n_qubits"]),
                    [int(i) for i in config["sector"]], axes, program)


@dataclass(frozen=True)
class ContextPair:
    """Two QRFs considered for joint deployment over a fixed background."""

    u: QRF
    v: QRF
    background: tuple[int, ...]

    def __post_init__(self):
        bg = frozenset(self.background)
        if bg & set(self.u.sector) or bg & set(self.v.sector):
            raise ValueError("background must not intersect either sector")
        object.__setattr__(self, "background", tuple(sorted(bg)))


def observable_of(q: QRF) -> HermitianOperator:
    """Full-screen observable: per-qubit axis spins on the sector,
    identity elsewhere; eigenvalues are +-1 per sector factor."""
    if not q.sector:
        raise ValueError("QRF sector is empty")
    if q.n_qubits > 12:
        raise ResourceLimitError("screen too large for a dense observable")
    mats = []
    axis_by_qubit = dict(zip(q.sector, q.axes))
    for i in range(q.n_qubits):
        if i in axis_by_qubit:
            mats.append(axis_by_qubit[i].observable().matrix)
        else:
            mats.append(np.eye(2, dtype=complex))
    return HermitianOperator(2**q.n_qubits, kron_operators(mats))


def qrfs_commute(a: QRF, b: QRF) -> bool:
    """Whether the attached observables commute (max-norm commutator)."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("QRFs live on screens of different sizes")
    oa = observable_of(a).matrix
    ob = observable_of(b).matrix
    return float(np.max(np.abs(oa @ ob - ob @ oa))) < COMMUTATOR_TOL


def qubit_variable(i: int) -> str:
    return f"q{i}"


def codeployable(pair: ContextPair, stats: ContextFamily) -> bool:
    """Co-deployability: the QRFs commute and the joint statistics admit
    one global distribution.  False signals intrinsic contextuality or
    disturbed (signalling) statistics."""
    needed = []
    for qrf in (pair.u, pair.v):
        vars_needed = frozenset(qubit_variable(i)
                                for i in (*qrf.sector, *pair.background))
        needed.append(vars_needed)
    have = [frozenset(ctx.variables) for ctx in stats.contexts]
    for vars_needed in needed:
        if vars_needed not in have:
            raise ValueError(f"statistics missing a context over {sorted(vars_needed)}")
    if not qrfs_commute(pair.u, pair.v):
        return False
    feasible, _ = joint_feasible(stats)
    return feasible


def context_switch(spec: InteractionSpec, target: QRF,
                   rotation: Mapping[int, BasisAxis], actor: str = "A",
                   ) -> InteractionSpec:
    """Partial basis rotation: replace axes on the target sector only.

    The screen size and each per-qubit observable's eigenvalue multiset
    are untouched; weights are re-labeled but still sum to one.
    """
    outside = sorted(set(rotation) - set(target.sector))
    if outside:
        raise ValueError(f"rotation touches background qubits {outside}")
    if actor not in spec.axes:
        raise ValueError(f"actor {actor!r} has no axes in the interaction spec")
    axes = dict(spec.axes)
    new_axes = list(axes[actor])
    for qubit, axis in rotation.items():
        new_axes[qubit] = axis
    axes[actor] = tuple(new_axes)
    return build_interaction(spec.alphas.copy(), spec.beta, spec.temperature, axes)


def implements_check(program: ClassifierProgram,
                     dynamics: Callable[[StateVector], StateVector],
                     trials: int, rng: np.random.Generator) -> bool:
    """Does the screen dynamics implement the program's record function?

    For random basis preparations the square must commute bit-exactly:
    the program applied to the prepared bits equals the readout after
    one dynamics step.  Requires record width == input arity so both
    paths land in the same record space.
    """
    if program.record_width != program.n_inputs:
        raise ValueError("dynamics check needs a width-preserving program")
    n = program.n_inputs
    for _ in range(trials):
        bits = tuple(int(b) for b in rng.integers(0, 2, size=n))
        state = StateVector.qubits(bits)
        stepped = dynamics(state)
        read = _readout_bits(stepped, rng)
        if program.evaluate(bits) != "".join(str(b) for b in read):
            return False
    return True


def _readout_bits(state: StateVector, rng: np.random.Generator) -> tuple[int, ...]:
    amps = np.asarray(state.amplitudes)
    n = state.n_subsystems
    bits = []
    for q in range(n):
        psi = amps.reshape(2**q if q else 1, 2, -1)
        p0 = float(np.real(np.sum(np.abs(psi[:, 0, :]) ** 2)))
        bit = 0 if rng.random() < p0 else 1
        branch = psi[:, bit, :]
        keep = np.zeros_like(psi)
        keep[:, bit, :] = branch / np.linalg.norm(branch)
        amps = keep.reshape(-1)
        bits.append(bit)
    return tuple(bits)


def permutation_dynamics(mapping: Callable[[tuple[int, ...]], Iterable[int]],
                         n: int) -> Callable[[StateVector], StateVector]:
    """Unitary screen dynamics permuting computational basis states."""
    dim = 2**n
    perm = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        bits = tuple((idx >> (n - 1 - k)) & 1 for k in range(n))
        out = tuple(int(b) for b in mapping(bits))
        out_idx = 0
        for b in out:
            out_idx = (out_idx << 1) | b
        perm[out_idx, idx] = 1.0

    def step(state: StateVector) -> StateVector:
        return StateVector(state.subsystem_dims, perm @ state.amplitudes)

    return step
