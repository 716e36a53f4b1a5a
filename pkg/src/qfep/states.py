"""Finite-dimensional pure-state quantum mechanics.

State vectors over labeled subsystems, unitary time evolution in natural
units (hbar = 1), Schmidt decomposition, entanglement entropy, partial
trace, and projective measurement of binary observables.  Everything is
dense numpy; dimensions are capped at desk scale (2**12).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ResourceLimitError, UnsupportedObservableError

NORM_TOL = 1e-9
COMPOSITE_TOL = 1e-8
DIM_CAP = 2**12

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Joint pure state of an ordered list of finite subsystems.

    ``amplitudes`` is indexed row-major over ``subsystem_dims``: the first
    subsystem varies slowest.  States are normalized to 1 within 1e-9.
    """

    subsystem_dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        if len(dims) == 0 or any(d < 1 for d in dims):
            raise ValueError(f"subsystem dims must be positive, got {dims}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        total = int(np.prod(dims))
        if amps.size != total:
            raise ValueError(
                f"amplitude length {amps.size} != product of dims {total}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(norm - 1.0):.3g}")
        amps.setflags(write=False)
        object.__setattr__(self, "subsystem_dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n_subsystems(self) -> int:
        return len(self.subsystem_dims)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.subsystem_dims)

    @classmethod
    def from_amplitudes(cls, dims: Sequence[int], amps: Iterable[complex],
                        normalize: bool = False) -> "StateVector":
        arr = np.asarray(list(amps) if not isinstance(amps, np.ndarray) else amps,
                         dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(arr)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            arr = arr / norm
        return cls(tuple(dims), arr)

    @classmethod
    def basis(cls, dims: Sequence[int], index: int) -> "StateVector":
        """Computational basis state with a single unit amplitude."""
        total = int(np.prod(list(dims)))
        if not 0 <= index < total:
            raise ValueError(f"basis index {index} out of range for dim {total}")
        amps = np.zeros(total, dtype=complex)
        amps[index] = 1.0
        return cls(tuple(dims), amps)

    @classmethod
    def qubits(cls, bits: Sequence[int]) -> "StateVector":
        """Product basis state |b0 b1 ...> of qubits."""
        if len(bits) == 0:
            raise ValueError("need at least one qubit")
        index = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bit must be 0 or 1, got {b}")
            index = (index << 1) | b
        return cls.basis((2,) * len(bits), index)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian matrix; houses Hamiltonians and binary observables."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {mat.shape} != ({self.dim}, {self.dim})")
        if np.max(np.abs(mat - mat.conj().T)) > NORM_TOL:
            raise ValueError("matrix is not Hermitian within 1e-9")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "HermitianOperator":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(matrix.shape[0], matrix)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive unit-trace Hermitian matrix (reduced states only)."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {mat.shape} != ({self.dim}, {self.dim})")
        if np.max(np.abs(mat - mat.conj().T)) > NORM_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-9")
        if abs(np.trace(mat).real - 1.0) > NORM_TOL:
            raise ValueError(f"trace {np.trace(mat).real} != 1 within 1e-9")
        if np.min(np.linalg.eigvalsh(mat)) < -NORM_TOL:
            raise ValueError("density matrix has an eigenvalue below -1e-9")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.linalg.eigvalsh(self.matrix))[::-1]


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Schmidt form across a bipartition: |psi> = sum_i c_i |u_i>|v_i>."""

    coefficients: np.ndarray
    left_basis: tuple[np.ndarray, ...]
    right_basis: tuple[np.ndarray, ...]

    def entropy_bits(self) -> float:
        p = self.coefficients**2
        p = p[p > 1e-15]
        return float(-(p * np.log2(p)).sum()) if p.size else 0.0


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Tensor product; result dims are a.dims followed by b.dims."""
    amps = np.kron(a.amplitudes, b.amplitudes)
    norm = np.linalg.norm(amps)
    return StateVector(a.subsystem_dims + b.subsystem_dims, amps / norm)


def evolve(s: StateVector, h: HermitianOperator, t: float) -> StateVector:
    """Apply exp(-i H t) with hbar = 1, via eigendecomposition of H."""
    if h.dim != s.dim:
        raise ValueError(f"Hamiltonian dim {h.dim} != state dim {s.dim}")
    if h.dim > DIM_CAP:
        raise ResourceLimitError(f"dim {h.dim} exceeds the {DIM_CAP} cap")
    w, v = np.linalg.eigh(h.matrix)
    phases = np.exp(-1j * w * t)
    amps = v @ (phases * (v.conj().T @ s.amplitudes))
    amps = amps / np.linalg.norm(amps)
    return StateVector(s.subsystem_dims, amps)


def _split_axes(s: StateVector, part: Iterable[int]) -> tuple[list[int], list[int]]:
    part = sorted(set(int(i) for i in part))
    if any(i < 0 or i >= s.n_subsystems for i in part):
        raise ValueError(f"subsystem indices {part} out of range")
    rest = [i for i in range(s.n_subsystems) if i not in part]
    return part, rest


def _cut_matrix(s: StateVector, cut: Iterable[int]) -> tuple[np.ndarray, list[int], list[int]]:
    cut_axes, rest_axes = _split_axes(s, cut)
    tens = s.tensor_view().transpose(cut_axes + rest_axes)
    d_cut = int(np.prod([s.subsystem_dims[i] for i in cut_axes])) if cut_axes else 1
    return tens.reshape(d_cut, -1), cut_axes, rest_axes


def schmidt(s: StateVector, cut: Iterable[int], tol: float = 1e-12) -> SchmidtDecomposition:
    """Schmidt decomposition across ``cut`` vs the remaining subsystems."""
    cut_axes, rest_axes = _split_axes(s, cut)
    if not cut_axes or not rest_axes:
        raise ValueError("cut must be a nonempty proper subset of subsystems")
    mat, _, _ = _cut_matrix(s, cut_axes)
    u, sv, vh = np.linalg.svd(mat, full_matrices=False)
    keep = sv > tol
    sv, u, vh = sv[keep], u[:, keep], vh[keep, :]
    return SchmidtDecomposition(
        coefficients=sv,
        left_basis=tuple(u[:, i].copy() for i in range(sv.size)),
        right_basis=tuple(vh[i, :].copy() for i in range(sv.size)),
    )


def entanglement_entropy(s: StateVector, cut: Iterable[int]) -> float:
    """Entanglement entropy in bits: -sum c_i^2 log2 c_i^2 over the cut."""
    return schmidt(s, cut).entropy_bits()


def partial_trace(s: StateVector, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix over the kept subsystems."""
    keep_axes, rest_axes = _split_axes(s, keep)
    if not keep_axes:
        raise ValueError("keep must be nonempty")
    mat, _, _ = _cut_matrix(s, keep_axes)
    rho = mat @ mat.conj().T
    # guard against drift before the DensityMatrix invariants fire
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    return DensityMatrix(rho.shape[0], rho)


def born_measure(s: StateVector, observable: HermitianOperator,
                 rng: np.random.Generator, subsystem: int | None = None,
                 ) -> tuple[float, StateVector, float]:
    """Projective measurement of a binary {-1, +1} observable.

    If ``subsystem`` is given the observable acts on that subsystem alone
    and is embedded with identities elsewhere.  Returns the sampled
    eigenvalue, the collapsed state, and the exact Born probability of the
    sampled branch (not the empirical frequency).
    """
    if subsystem is not None:
        op = embed_operator(observable, s.subsystem_dims, subsystem)
    else:
        op = observable
    if op.dim != s.dim:
        raise ValueError(f"observable dim {op.dim} != state dim {s.dim}")
    m = op.matrix
    if np.max(np.abs(m @ m - np.eye(op.dim))) > 1e-9:
        raise UnsupportedObservableError("observable spectrum is not {-1, +1}")
    plus = 0.5 * (np.eye(op.dim) + m) @ s.amplitudes
    p_plus = float(np.real(np.vdot(plus, plus)))
    p_plus = min(max(p_plus, 0.0), 1.0)
    if rng.random() < p_plus:
        outcome, branch, prob = 1.0, plus, p_plus
    else:
        outcome, branch, prob = -1.0, s.amplitudes - plus, 1.0 - p_plus
    post = StateVector(s.subsystem_dims, branch / np.linalg.norm(branch))
    return outcome, post, prob


def axis_observable(direction: Sequence[float]) -> HermitianOperator:
    """Spin observable n . sigma for a unit Bloch vector n."""
    n = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > NORM_TOL:
        raise ValueError(f"axis must be unit norm, got |n| = {np.linalg.norm(n)}")
    mat = sum(n[k] * _PAULIS[k] for k in range(3))
    return HermitianOperator(2, mat)


def embed_operator(op: HermitianOperator, dims: Sequence[int], at: int) -> HermitianOperator:
    """Embed a single-subsystem operator with identities on the rest."""
    dims = tuple(dims)
    if not 0 <= at < len(dims):
        raise ValueError(f"subsystem index {at} out of range")
    if op.dim != dims[at]:
        raise ValueError(f"operator dim {op.dim} != subsystem dim {dims[at]}")
    mat = np.eye(1, dtype=complex)
    for i, d in enumerate(dims):
        mat = np.kron(mat, op.matrix if i == at else np.eye(d, dtype=complex))
    return HermitianOperator(int(np.prod(dims)), mat)


def kron_operators(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out
