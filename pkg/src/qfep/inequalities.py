"""Nonclassicality diagnostics: CHSH, Leggett-Garg K3, measurement
context families for the feasibility checker, and the two-phase
alignment-then-entanglement experiment.

Exact-mode correlators come from trace formulas; sampled mode runs the
sequential projective-measurement path so the whole measurement stack
gets exercised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .agent import (
    AlignmentScenario,
    ScriptedEnvironment,
    Trajectory,
    cycle_kernel,
    fep_minimize,
    make_agent,
)
from .channel import Context, ContextFamily
from .errors import ResourceLimitError
from .kernels import MarkovKernel
from .screen import BasisAxis, SectorMap, decompose_sectors
from .states import (
    HermitianOperator,
    StateVector,
    entanglement_entropy,
    evolve,
    kron_operators,
)

SETTING_VARIABLES = ("A0", "A1", "B0", "B1")


def singlet() -> StateVector:
    """The two-qubit singlet (|01> - |10>) / sqrt(2)."""
    return StateVector.from_amplitudes(
        (2, 2), [0.0, 1.0, -1.0, 0.0], normalize=True)


def standard_chsh_axes() -> tuple[BasisAxis, BasisAxis, BasisAxis, BasisAxis]:
    """Tsirelson-optimal settings (a, a', b, b') at 90, 0, 45, 135 degrees
    in the x-z plane."""
    return (BasisAxis.from_angles(math.pi / 2),
            BasisAxis.from_angles(0.0),
            BasisAxis.from_angles(math.pi / 4),
            BasisAxis.from_angles(3 * math.pi / 4))


@dataclass(frozen=True, eq=False)
class CHSHConfig:
    state: StateVector
    a: BasisAxis
    a_prime: BasisAxis
    b: BasisAxis
    b_prime: BasisAxis
    shots: int | None = None  # None: exact trace-formula correlators

    def __post_init__(self):
        if self.state.subsystem_dims != (2, 2):
            raise ValueError("CHSH needs a two-qubit state")


def _pair_observable(axis_a: BasisAxis, axis_b: BasisAxis) -> np.ndarray:
    return np.kron(axis_a.observable().matrix, axis_b.observable().matrix)


def _exact_correlator(state: StateVector, axis_a: BasisAxis, axis_b: BasisAxis) -> float:
    op = _pair_observable(axis_a, axis_b)
    return float(np.real(np.vdot(state.amplitudes, op @ state.amplitudes)))


def _measure_qubit(amps: np.ndarray, n: int, qubit: int, axis: BasisAxis,
                   rng: np.random.Generator) -> tuple[int, np.ndarray]:
    """Collapse one qubit along an axis; returns the +-1 outcome sign."""
    plus, minus = axis.eigenstates()
    psi = amps.reshape(2**qubit if qubit else 1, 2, -1)
    branch_plus = plus[0].conjugate() * psi[:, 0, :] + plus[1].conjugate() * psi[:, 1, :]
    p_plus = float(min(max(np.real(np.vdot(branch_plus, branch_plus)), 0.0), 1.0))
    if rng.random() < p_plus:
        sign, vec, branch = 1, plus, branch_plus
    else:
        branch = minus[0].conjugate() * psi[:, 0, :] + minus[1].conjugate() * psi[:, 1, :]
        sign, vec = -1, minus
    branch = branch / np.linalg.norm(branch)
    out = np.empty_like(psi)
    out[:, 0, :] = vec[0] * branch
    out[:, 1, :] = vec[1] * branch
    return sign, out.reshape(-1)


def _sampled_correlator(state: StateVector, axis_a: BasisAxis, axis_b: BasisAxis,
                        shots: int, rng: np.random.Generator) -> float:
    total = 0
    base = np.asarray(state.amplitudes)
    for _ in range(shots):
        sa, amps = _measure_qubit(base.copy(), 2, 0, axis_a, rng)
        sb, _ = _measure_qubit(amps, 2, 1, axis_b, rng)
        total += sa * sb
    return total / shots


def chsh_correlators(config: CHSHConfig, rng: np.random.Generator | None = None,
                     ) -> dict[str, float]:
    pairs = {"ab": (config.a, config.b), "ab'": (config.a, config.b_prime),
             "a'b": (config.a_prime, config.b), "a'b'": (config.a_prime, config.b_prime)}
    out = {}
    for label, (axis_a, axis_b) in pairs.items():
        if config.shots is None:
            out[label] = _exact_correlator(config.state, axis_a, axis_b)
        else:
            if rng is None:
                raise ValueError("sampled mode needs an rng")
            out[label] = _sampled_correlator(config.state, axis_a, axis_b,
                                             config.shots, rng)
    return out


def chsh(config: CHSHConfig, rng: np.random.Generator | None = None) -> float:
    """CHSH statistic S = |E(a,b) + E(a,b') + E(a',b) - E(a',b')|."""
    e = chsh_correlators(config, rng)
    return abs(e["ab"] + e["ab'"] + e["a'b"] - e["a'b'"])


def measurement_context_family(state: StateVector,
                               alice: tuple[BasisAxis, BasisAxis],
                               bob: tuple[BasisAxis, BasisAxis]) -> ContextFamily:
    """Exact Born statistics of the four CHSH contexts, as a context
    family over variables A0, A1, B0, B1 with bit outcomes."""
    if state.subsystem_dims != (2, 2):
        raise ValueError("need a two-qubit state")
    contexts = []
    for i, axis_a in enumerate(alice):
        plus_a, minus_a = axis_a.eigenstates()
        for j, axis_b in enumerate(bob):
            plus_b, minus_b = axis_b.eigenstates()
            table = {}
            for bit_a, vec_a in ((0, plus_a), (1, minus_a)):
                for bit_b, vec_b in ((0, plus_b), (1, minus_b)):
                    amp = np.kron(vec_a, vec_b).conjugate() @ state.amplitudes
                    table[(str(bit_a), str(bit_b))] = float(np.abs(amp) ** 2)
            contexts.append(Context(f"A{i}B{j}", (f"A{i}", f"B{j}"), table))
    alphabets = {v: ("0", "1") for v in SETTING_VARIABLES}
    return ContextFamily(SETTING_VARIABLES, alphabets, contexts)


def pr_box_family() -> ContextFamily:
    """The Popescu-Rohrlich box: perfect correlation on three contexts,
    perfect anti-correlation on A1B1.  No global joint exists."""
    contexts = []
    for i in (0, 1):
        for j in (0, 1):
            if i == 1 and j == 1:
                table = {("0", "1"): 0.5, ("1", "0"): 0.5}
            else:
                table = {("0", "0"): 0.5, ("1", "1"): 0.5}
            contexts.append(Context(f"A{i}B{j}", (f"A{i}", f"B{j}"), table))
    alphabets = {v: ("0", "1") for v in SETTING_VARIABLES}
    return ContextFamily(SETTING_VARIABLES, alphabets, contexts)


# ---------------------------------------------------------------------------
# Leggett-Garg


@dataclass(frozen=True, eq=False)
class LGConfig:
    hamiltonian: HermitianOperator
    axis: BasisAxis
    times: tuple[float, float, float]
    shots: int | None = None
    initial: StateVector = field(
        default_factory=lambda: StateVector.basis((2,), 0))

    def __post_init__(self):
        if self.hamiltonian.dim != 2:
            raise ValueError("Leggett-Garg runs on a single qubit")
        t1, t2, t3 = self.times
        if not t1 < t2 < t3:
            raise ValueError(f"times must strictly increase, got {self.times}")


def precession_config(omega: float, tau: float, shots: int | None = None) -> LGConfig:
    """Precession about x measured in z with equal gaps tau."""
    h = HermitianOperator(2, (omega / 2) * np.array([[0, 1], [1, 0]], dtype=complex))
    return LGConfig(h, BasisAxis.z(), (0.0, tau, 2 * tau), shots)


def _projectors(axis: BasisAxis) -> tuple[np.ndarray, np.ndarray]:
    plus, minus = axis.eigenstates()
    return np.outer(plus, plus.conjugate()), np.outer(minus, minus.conjugate())


def _two_time_correlator(config: LGConfig, ti: float, tj: float) -> float:
    """Exact C(ti, tj) for projective (collapsing) measurements."""
    p_plus, p_minus = _projectors(config.axis)
    psi = evolve(config.initial, config.hamiltonian, ti).amplitudes
    corr = 0.0
    for sign_i, proj in ((1, p_plus), (-1, p_minus)):
        branch = proj @ psi
        prob = float(np.real(np.vdot(branch, branch)))
        if prob < 1e-15:
            continue
        collapsed = StateVector((2,), branch / math.sqrt(prob))
        later = evolve(collapsed, config.hamiltonian, tj - ti).amplitudes
        expect = float(np.real(np.vdot(later, config.axis.observable().matrix @ later)))
        corr += prob * sign_i * expect
    return corr


def _sampled_two_time(config: LGConfig, ti: float, tj: float, shots: int,
                      rng: np.random.Generator) -> float:
    total = 0
    for _ in range(shots):
        psi = evolve(config.initial, config.hamiltonian, ti).amplitudes
        si, psi = _measure_qubit(psi, 1, 0, config.axis, rng)
        state = StateVector((2,), psi)
        psi = evolve(state, config.hamiltonian, tj - ti).amplitudes
        sj, _ = _measure_qubit(psi, 1, 0, config.axis, rng)
        total += si * sj
    return total / shots


def leggett_garg_correlators(config: LGConfig,
                             rng: np.random.Generator | None = None,
                             ) -> dict[str, float]:
    t1, t2, t3 = config.times
    pairs = {"C12": (t1, t2), "C23": (t2, t3), "C13": (t1, t3)}
    out = {}
    for label, (ti, tj) in pairs.items():
        if config.shots is None:
            out[label] = _two_time_correlator(config, ti, tj)
        else:
            if rng is None:
                raise ValueError("sampled mode needs an rng")
            out[label] = _sampled_two_time(config, ti, tj, config.shots, rng)
    return out


def leggett_garg_k3(config: LGConfig, rng: np.random.Generator | None = None) -> float:
    """K3 = C12 + C23 - C13; classically bounded by 1."""
    c = leggett_garg_correlators(config, rng)
    return c["C12"] + c["C23"] - c["C13"]


# ---------------------------------------------------------------------------
# asymptotic experiment: alignment, then entanglement


@dataclass
class AsymptoticConfig:
    """Two-phase experiment: a trivial-agent B aligns its basis to A's
    via error minimization, then the joint system evolves unitarily and
    the A|B cut entropy is tracked."""

    n_qubits_a: int = 2
    n_qubits_b: int = 1
    screen_qubits: int = 2
    initial_misalignment: float = math.pi / 2
    align_ticks: int = 6000
    align_budget: int = 80
    coupling: str = "generic"  # "generic" (random Hermitian) or "eq6" (weighted +-1 questions)
    coupling_strength: float = 1.0
    t_max: float = 30.0
    n_times: int = 240

    def __post_init__(self):
        if self.n_qubits_a > 3:
            raise ResourceLimitError("A is capped at 3 qubits")
        if self.n_qubits_b > 3:
            raise ResourceLimitError("B is capped at 3 qubits")
        if self.screen_qubits > 4:
            raise ResourceLimitError("screen is capped at 4 qubits")
        if self.coupling not in ("generic", "eq6"):
            raise ValueError(f"unknown coupling mode {self.coupling!r}")


@dataclass
class AsymptoticReport:
    alignment: Trajectory
    final_misalignment: float
    times: np.ndarray
    entropy_bits: np.ndarray
    cut_max_bits: float

    @property
    def max_entropy_bits(self) -> float:
        return float(self.entropy_bits.max()) if self.entropy_bits.size else 0.0

    @property
    def fraction_of_max(self) -> float:
        return self.max_entropy_bits / self.cut_max_bits

    def summary(self) -> dict:
        return {
            "final_misalignment_rad": self.final_misalignment,
            "best_error": self.alignment.best_score,
            "max_entropy_bits": self.max_entropy_bits,
            "cut_max_bits": self.cut_max_bits,
            "fraction_of_max": self.fraction_of_max,
        }


def _alignment_sectors(n_qubits: int) -> SectorMap:
    rest = list(range(2, n_qubits))
    return decompose_sectors(n_qubits, {"E": [0, 1], "F": rest, "Y": []})


def run_alignment_phase(config: AsymptoticConfig, rng: np.random.Generator,
                        ) -> tuple[Trajectory, float, BasisAxis]:
    """Phase 1: the trivial agent's single basis angle is driven toward
    the scripted partner's axis by prediction-error descent."""
    scenario = AlignmentScenario(
        n_qubits=config.screen_qubits,
        sectors_spec={"P": (0, 1)},
        episode_ticks=config.align_ticks,
        tick_schedule=(max(400, config.align_ticks // 8),
                       max(800, config.align_ticks // 3),
                       config.align_ticks),
        initial_angles=(config.initial_misalignment,),
    )
    sectors = _alignment_sectors(config.screen_qubits)
    learner = make_agent("B", (BasisAxis.z(),) * config.screen_qubits, sectors)
    partner = ScriptedEnvironment(cycle_kernel(), (0, 1), BasisAxis.z(),
                                  start="00", actor="A")
    trajectory = fep_minimize(learner, partner, scenario, config.align_budget, rng)
    aligned = scenario.axis_for(trajectory.final_angles)
    misalignment = aligned.angle_to(partner.axis)
    return trajectory, misalignment, aligned


def _gue(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / (2 * math.sqrt(dim))


def build_joint_hamiltonian(config: AsymptoticConfig, axis: BasisAxis,
                            rng: np.random.Generator) -> HermitianOperator:
    """H_U = H_A + H_B + H_AB on the joint A (x) B register.

    Local terms precess about x; the interaction either couples every
    (A-qubit, B-qubit) pair through +-1 axis questions with normalized
    weights ("eq6") or is a generic random Hermitian ("generic").
    """
    na, nb = config.n_qubits_a, config.n_qubits_b
    dim = 2 ** (na + nb)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    local = np.zeros((dim, dim), dtype=complex)
    for k in range(na + nb):
        mats = [np.eye(2, dtype=complex)] * (na + nb)
        mats[k] = 0.5 * sx
        local += kron_operators(mats)
    if config.coupling_strength == 0.0:
        return HermitianOperator(dim, np.zeros((dim, dim), dtype=complex))
    if config.coupling == "generic":
        interaction = _gue(dim, rng)
    else:
        m_axis = axis.observable().matrix
        pairs = [(qa, na + qb) for qa in range(na) for qb in range(nb)]
        weights = rng.random(len(pairs))
        weights = weights / weights.sum()
        interaction = np.zeros((dim, dim), dtype=complex)
        for w, (qa, qb) in zip(weights, pairs):
            mats = [np.eye(2, dtype=complex)] * (na + nb)
            mats[qa] = m_axis
            mats[qb] = m_axis
            interaction += w * kron_operators(mats)
    return HermitianOperator(dim, local + config.coupling_strength * interaction)


def run_entanglement_phase(config: AsymptoticConfig, hamiltonian: HermitianOperator,
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Phase 2: evolve |0...0> under the joint Hamiltonian and record
    the A|B cut entropy over a uniform time grid."""
    na, nb = config.n_qubits_a, config.n_qubits_b
    psi0 = StateVector.basis((2,) * (na + nb), 0)
    w, v = np.linalg.eigh(hamiltonian.matrix)
    coeff = v.conj().T @ psi0.amplitudes
    times = np.linspace(0.0, config.t_max, config.n_times)
    cut = tuple(range(na))
    entropies = np.empty(times.size)
    for idx, t in enumerate(times):
        amps = v @ (np.exp(-1j * w * t) * coeff)
        state = StateVector((2,) * (na + nb), amps / np.linalg.norm(amps))
        entropies[idx] = entanglement_entropy(state, cut)
    return times, entropies


def asymptotic_experiment(config: AsymptoticConfig,
                          rng: np.random.Generator) -> AsymptoticReport:
    """Alignment then entanglement: error minimization aligns the bases,
    after which joint unitary evolution drives the cut entropy toward
    its maximum (zero coupling keeps it at zero)."""
    trajectory, misalignment, aligned = run_alignment_phase(config, rng)
    hamiltonian = build_joint_hamiltonian(config, aligned, rng)
    times, entropies = run_entanglement_phase(config, hamiltonian)
    cut_max = float(min(config.n_qubits_a, config.n_qubits_b))
    return AsymptoticReport(trajectory, misalignment, times, entropies, cut_max)
