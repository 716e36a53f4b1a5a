"""The agent loop: memory read-compare-write cycles with a groupoid
clock, Markov-kernel learning, prediction error as kernel distance, free
energy accounting, and a derivative-free optimizer that minimizes
per-sector error over basis angles.

The memory sector Y is organized as rotating record slots sized by the
capacity formula n * dim(E) + ceil(log2 n); the tape keeps exactly the
records currently held on the screen, so long runs forget their oldest
records instead of growing without bound.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InsufficientDataError,
    IdentificationFailureWarning,
    MemoryFullError,
    ThermodynamicStarvationError,
)
from .kernels import (
    MarkovKernel,
    bit_alphabet,
    is_constant_kernel,
    kernel_distance,
    learn_update,
)
from .screen import (
    LN2,
    BasisAxis,
    QubitScreen,
    SectorMap,
    landauer_cost,
    prepare_bit,
    read_bit,
)
from .states import entanglement_entropy

TRAJECTORY_HEADER_PREFIX = ("step", "score", "Er_E", "Er_P", "Er_R")


# ---------------------------------------------------------------------------
# memory, clock, agent state


def memory_capacity(dim_e: int, n_records: int) -> int:
    """Bits needed for n records of dim_e bits plus their tick labels:
    n * dim_e + ceil(log2 n)."""
    if n_records < 1:
        raise ValueError("need at least one record")
    if dim_e < 0:
        raise ValueError("record width must be nonnegative")
    return n_records * dim_e + (n_records - 1).bit_length()


def max_records(y_bits: int, width: int) -> int:
    """Largest record count whose capacity fits in y_bits memory bits."""
    if width <= 0 or y_bits < width:
        return 0
    n = 1
    while memory_capacity(width, n + 1) <= y_bits:
        n += 1
    return n


def coarse_grain(samples: Sequence[str], width: int) -> str:
    """Deterministic record compression: bitwise majority over the time
    ensemble, truncated to the first ``width`` positions.  Ties vote 0."""
    if not samples:
        raise ValueError("empty sample list")
    full = len(samples[0])
    if any(len(s) != full for s in samples):
        raise ValueError("samples must share one width")
    if width > full:
        raise ValueError(f"target width {width} exceeds sample width {full}")
    out = []
    for pos in range(width):
        ones = sum(1 for s in samples if s[pos] == "1")
        out.append("1" if 2 * ones > len(samples) else "0")
    return "".join(out)


@dataclass(frozen=True)
class MemoryRecord:
    tick: int
    payload: str


@dataclass(frozen=True)
class Transition:
    """One clock arrow i -> j, tagged with the QRF context active then."""

    i: int
    j: int
    context: str

    def inverse(self) -> "Transition":
        return Transition(self.j, self.i, self.context)


def compose_transitions(a: Transition, b: Transition) -> Transition:
    """Compose a then b; defined only when the endpoints meet."""
    if a.j != b.i:
        raise ValueError(
            f"cannot compose ({a.i}->{a.j}) with ({b.i}->{b.j}): endpoints differ")
    context = a.context if a.context == b.context else f"{a.context}|{b.context}"
    return Transition(a.i, b.j, context)


@dataclass(eq=False)
class GroupoidClock:
    """Internal tick structure; transitions compose only endpoint-to-endpoint."""

    current_tick: int = 0
    log: list[Transition] = field(default_factory=list)

    def advance(self, context: str) -> int:
        t = Transition(self.current_tick, self.current_tick + 1, context)
        self.log.append(t)
        self.current_tick += 1
        return self.current_tick


@dataclass
class LearningConfig:
    smoothing: float = 1.0
    record_width: int | None = None  # default: min(|E|, |Y|) or |E| without memory
    evict_oldest: bool = True


@dataclass(eq=False)
class Agent:
    """Basis choices, sector map, QRFs, memory tape, clock, and models."""

    name: str
    axes: tuple[BasisAxis, ...]
    sectors: SectorMap
    qrfs: tuple = ()
    learning: LearningConfig = field(default_factory=LearningConfig)
    beta: float = LN2
    temperature: float = 310.0
    f_budget: float | None = None
    memory: deque = field(default_factory=deque)
    clock: GroupoidClock = field(default_factory=GroupoidClock)
    models: dict[str, MarkovKernel] = field(default_factory=dict)
    optimizer_state: dict = field(default_factory=dict)
    energy_spent: float = 0.0
    _writes: int = 0
    _last_records: dict[str, str] = field(default_factory=dict)

    @property
    def record_width(self) -> int:
        if self.learning.record_width is not None:
            return self.learning.record_width
        e, y = len(self.sectors.e), len(self.sectors.y)
        return min(e, y) if y else e

    @property
    def memory_slots(self) -> int:
        return max_records(len(self.sectors.y), self.record_width)

    def slot_qubits(self, slot: int) -> list[int]:
        ordered = sorted(self.sectors.y)
        w = self.record_width
        return ordered[slot * w:(slot + 1) * w]


def make_agent(name: str, axes: Sequence[BasisAxis], sectors: SectorMap,
               qrfs: Sequence = (), learning: LearningConfig | None = None,
               beta: float = LN2, temperature: float = 310.0,
               f_budget: float | None = None) -> Agent:
    """Build an agent with uniform-prior models for E and any refined
    subsectors."""
    agent = Agent(name, tuple(axes), sectors, tuple(qrfs),
                  learning or LearningConfig(), beta, temperature, f_budget)
    widths = {"E": agent.record_width}
    if sectors.refined:
        for sub in ("P", "R", "Etilde"):
            idx = sectors.sector(sub)
            if idx:
                widths[sub] = len(idx)
    for sector_name, width in widths.items():
        agent.models[sector_name] = MarkovKernel.uniform(bit_alphabet(width))
    return agent


def _qrf_for_e(agent: Agent):
    target = tuple(sorted(agent.sectors.e))
    for qrf in agent.qrfs:
        if tuple(sorted(qrf.sector)) == target:
            return qrf
    return None


def read_compare_write(agent: Agent, screen: QubitScreen,
                       rng: np.random.Generator) -> tuple[int, tuple[bool, ...] | None]:
    """One memory cycle: read E, read back the last record from Y,
    compare, write the new coarse-grained record, advance the clock.

    The Landauer cost of the write is charged against the agent's
    free-energy allowance.  Returns the new clock tick and the per-bit
    equality flags (None on the first cycle, which has nothing to
    compare against).
    """
    slots = agent.memory_slots
    width = agent.record_width
    cost = landauer_cost(width, agent.temperature, agent.beta) if slots else 0.0
    if agent.f_budget is not None and cost > agent.f_budget:
        raise ThermodynamicStarvationError(
            f"write needs {cost:.3e} J but only {agent.f_budget:.3e} J remain")
    if slots and len(agent.memory) >= slots and not agent.learning.evict_oldest:
        raise MemoryFullError(
            f"memory holds {len(agent.memory)}/{slots} records and eviction is off")

    e_qubits = sorted(agent.sectors.e)
    bits = [read_bit(screen, q, agent.axes[q], rng, actor=agent.name)[0]
            for q in e_qubits]
    raw = "".join(str(b) for b in bits)
    qrf = _qrf_for_e(agent)
    interpreted = qrf.program.evaluate(bits) if qrf is not None else raw
    record = coarse_grain([interpreted], width)

    comparison = None
    if slots and agent.memory:
        last_slot = (agent._writes - 1) % slots
        stored = "".join(
            str(read_bit(screen, q, agent.axes[q], rng, actor=agent.name)[0])
            for q in agent.slot_qubits(last_slot))
        comparison = tuple(a == b for a, b in zip(record, stored))

    if slots:
        slot = agent._writes % slots
        for q, bit in zip(agent.slot_qubits(slot), record):
            prepare_bit(screen, q, int(bit), agent.axes[q], actor=agent.name)
        agent._writes += 1
        if agent.f_budget is not None:
            agent.f_budget -= cost
        agent.energy_spent += cost

    context = qrf.name if qrf is not None else "basis"
    tick = agent.clock.advance(context)

    sub_records = {"E": record}
    if agent.sectors.refined:
        pos = {q: k for k, q in enumerate(e_qubits)}
        for sub in ("P", "R", "Etilde"):
            idx = agent.sectors.sector(sub)
            if idx and sub in agent.models:
                sub_records[sub] = "".join(raw[pos[q]] for q in sorted(idx))
    for sector_name, rec in sub_records.items():
        prev = agent._last_records.get(sector_name)
        if prev is not None:
            agent.models[sector_name] = learn_update(
                agent.models[sector_name], prev, rec, agent.learning.smoothing)
        agent._last_records[sector_name] = rec

    if slots:
        if agent.memory and tick <= agent.memory[-1].tick:
            raise ValueError("memory writes must carry strictly increasing ticks")
        agent.memory.append(MemoryRecord(tick, record))
        while len(agent.memory) > slots:
            agent.memory.popleft()
    return tick, comparison


def prediction_error(agent: Agent, sector_name: str,
                     true_kernel: MarkovKernel) -> float:
    """Kernel distance between the agent's sector model and the truth.

    For the reference sector a non-constant learned kernel raises an
    IdentificationFailureWarning: re-identification of the observed
    system is no longer reliable.
    """
    if sector_name not in agent.models:
        raise ValueError(f"agent has no model for sector {sector_name!r}")
    model = agent.models[sector_name]
    if sector_name == "R" and not is_constant_kernel(model):
        warnings.warn("reference-sector kernel is not constant",
                      IdentificationFailureWarning, stacklevel=2)
    return kernel_distance(model, true_kernel)


# ---------------------------------------------------------------------------
# free energy bookkeeping


def surprisal_bits(probability: float) -> float:
    if not 0.0 < probability <= 1.0:
        raise ValueError(f"probability must lie in (0, 1], got {probability}")
    return -math.log2(probability)


def kl_bits(p: Sequence[float], q: Sequence[float]) -> float:
    """Kullback-Leibler divergence in bits; requires q > 0 where p > 0."""
    total = 0.0
    for pi, qi in zip(p, q):
        if pi > 0:
            if qi <= 0:
                return math.inf
            total += pi * math.log2(pi / qi)
    return total


def vfe(surprisal: float, divergence: float) -> float:
    """Variational free energy: surprisal plus a nonnegative divergence,
    hence always an upper bound on surprisal."""
    if divergence < 0:
        raise ValueError(f"divergence must be nonnegative, got {divergence}")
    return surprisal + divergence


# ---------------------------------------------------------------------------
# scripted environments


@dataclass(eq=False)
class ScriptedEnvironment:
    """Environment party with Markov-kernel record dynamics and a fixed
    (or per-tick randomized, for trivial agents) preparation axis."""

    kernel: MarkovKernel
    sector: tuple[int, ...]
    axis: BasisAxis
    start: str
    actor: str = "B"
    randomize_axis: bool = False
    current: str = field(default="", repr=False)

    def __post_init__(self):
        if len(self.start) != len(self.sector):
            raise ValueError("start record width must match the sector size")
        self.current = self.start

    def reset(self) -> None:
        self.current = self.start

    def true_kernel(self, sector_name: str | None = None) -> MarkovKernel:
        return self.kernel

    def step(self, screen: QubitScreen, rng: np.random.Generator) -> str:
        """Advance the record chain and prepare it onto the screen."""
        self.current = self.kernel.sample_next(self.current, rng)
        axis = self.axis
        if self.randomize_axis:
            axis = BasisAxis.from_angles(rng.random() * 2 * math.pi)
        for q, bit in zip(self.sector, self.current):
            prepare_bit(screen, q, int(bit), axis, actor=self.actor)
        return self.current


@dataclass(eq=False)
class CompositeEnvironment:
    """Several scripted sector writers acting as one party.

    The children dict maps sector names (matching the learner's scored
    sectors) to independent scripts; they share the actor label and are
    stepped in name order for reproducibility.
    """

    children: dict[str, ScriptedEnvironment]

    @property
    def sector(self) -> tuple[int, ...]:
        out: list[int] = []
        for name in sorted(self.children):
            out.extend(self.children[name].sector)
        return tuple(sorted(out))

    @property
    def axis(self) -> BasisAxis:
        first = self.children[sorted(self.children)[0]]
        return first.axis

    @property
    def randomize_axis(self) -> bool:
        return any(c.randomize_axis for c in self.children.values())

    def reset(self) -> None:
        for name in sorted(self.children):
            self.children[name].reset()

    def true_kernel(self, sector_name: str | None = None) -> MarkovKernel:
        if sector_name is None:
            if len(self.children) != 1:
                raise ValueError("sector name needed for a composite script")
            sector_name = next(iter(self.children))
        return self.children[sector_name].kernel

    def step(self, screen: QubitScreen, rng: np.random.Generator) -> None:
        for name in sorted(self.children):
            self.children[name].step(screen, rng)


def flip_kernel(p_flip: float) -> MarkovKernel:
    """Single-bit kernel flipping with probability p each tick."""
    return MarkovKernel(("0", "1"), np.array([[1 - p_flip, p_flip],
                                              [p_flip, 1 - p_flip]]))


DEFAULT_ENV_ROWS = ((0.9, 0.1), (0.3, 0.7))


def asymmetric_kernel(rows: Sequence[Sequence[float]] = DEFAULT_ENV_ROWS) -> MarkovKernel:
    """Stochastic single-bit environment script.  Not symmetric under
    0<->1 relabeling, so a fully inverted readout cannot mimic an
    aligned one."""
    return MarkovKernel(("0", "1"), np.asarray(rows, dtype=float))


def cycle_kernel() -> MarkovKernel:
    """Deterministic two-bit script 00 -> 01 -> 10 -> 00.

    Point-mass rows give basis misalignment a zero-background signature:
    a single read flip already produces a transition the script never
    makes, so the error landscape is exactly flat at its aligned floor
    and strictly larger everywhere else.  The unreachable record keeps a
    uniform row, matching an untrained model there.
    """
    matrix = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.25, 0.25, 0.25, 0.25],
    ])
    return MarkovKernel(bit_alphabet(2), matrix)


def cycle_environment(axis: BasisAxis | None = None) -> ScriptedEnvironment:
    """Deterministic cycle writer on qubits 0-1."""
    return ScriptedEnvironment(cycle_kernel(), (0, 1), axis or BasisAxis.z(),
                               start="00")


def hybrid_alignment_environment(p_flip: float = 0.3,
                                 axis: BasisAxis | None = None,
                                 ) -> CompositeEnvironment:
    """Default alignment partner: a deterministic cycle on the pointer
    qubits pins the error minimum exactly at basis alignment, while a
    stochastic flip bit on the residual qubit keeps the aligned noise
    floor a genuinely sampled quantity."""
    axis = axis or BasisAxis.z()
    return CompositeEnvironment({
        "P": ScriptedEnvironment(cycle_kernel(), (0, 1), axis, start="00"),
        "Etilde": ScriptedEnvironment(flip_kernel(p_flip), (2,), axis, start="0"),
    })


# ---------------------------------------------------------------------------
# the FEP optimizer


@dataclass
class TrajectoryStep:
    step: int
    score: float          # best-so-far, non-increasing
    er: dict[str, float]  # this evaluation's per-sector error
    angles: tuple[float, ...]
    entropy_bits: float


@dataclass
class Trajectory:
    steps: list[TrajectoryStep] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    final_angles: tuple[float, ...] = ()
    best_score: float = math.inf

    def to_csv(self) -> str:
        angle_names = tuple(f"angle_{k}" for k in range(len(self.final_angles)))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER_PREFIX + angle_names + ("entanglement_bits",))
        for s in self.steps:
            row = [s.step, repr(s.score)]
            for sector in ("E", "P", "R"):
                row.append(repr(s.er[sector]) if sector in s.er else "")
            row.extend(repr(a) for a in s.angles)
            row.append(repr(s.entropy_bits))
            writer.writerow(row)
        return buf.getvalue()


def _default_alignment_sectors() -> dict[str, tuple[int, ...]]:
    return {"P": (0, 1), "Etilde": (2,)}


@dataclass
class AlignmentScenario:
    """Basis-alignment scenario: a scripted party writes records on the
    observed sectors; the learner reads along tunable axes and scores
    the sum of per-sector kernel distances against the scripts.

    With the default hybrid partner, the deterministic pointer cycle
    makes the summed error landscape exactly flat at its aligned floor
    and strictly larger at any misalignment large enough to flip a read,
    while the stochastic residual bit keeps the floor a sampled
    quantity.  A ``tick_schedule`` lets optimizer passes grow the
    episode length, so coarse bracketing stays cheap and the final pass
    resolves small misalignments.
    """

    n_qubits: int = 3
    sectors_spec: dict[str, tuple[int, ...]] = field(
        default_factory=_default_alignment_sectors)
    episode_ticks: int = 3000
    tick_schedule: tuple[int, ...] | None = (600, 2000, 6000)
    smoothing: float = 1.0
    n_angles: int = 1
    initial_angles: tuple[float, ...] = (math.pi / 2,)
    initial_window: float = math.pi
    window_shrink: float = 8.0
    angle_tol: float = 0.01
    scan_points: int = 7
    entropy_cut: tuple[int, ...] = (0,)

    @property
    def scored_sectors(self) -> tuple[str, ...]:
        return tuple(sorted(self.sectors_spec))

    @property
    def sector_e(self) -> tuple[int, ...]:
        out: list[int] = []
        for qubits in self.sectors_spec.values():
            out.extend(qubits)
        return tuple(sorted(out))

    def axis_for(self, angles: Sequence[float]) -> BasisAxis:
        theta = angles[0]
        phi = angles[1] if len(angles) > 1 else 0.0
        return BasisAxis.from_angles(theta, phi)

    def ticks_for_pass(self, pass_index: int) -> int:
        if self.tick_schedule:
            return self.tick_schedule[min(pass_index, len(self.tick_schedule) - 1)]
        return self.episode_ticks

    def run_episode(self, agent: Agent, env, angles: Sequence[float],
                    env_rng: np.random.Generator, meas_rng: np.random.Generator,
                    ticks: int | None = None) -> tuple[dict[str, float], float]:
        screen = QubitScreen(self.n_qubits, record_transcript=False)
        env.reset()
        axis = self.axis_for(angles)
        names = self.scored_sectors
        sector_qubits = {name: sorted(self.sectors_spec[name]) for name in names}
        alphabets = {name: bit_alphabet(len(sector_qubits[name])) for name in names}
        indexes = {name: {a: k for k, a in enumerate(alphabets[name])}
                   for name in names}
        counts = {name: np.zeros((len(alphabets[name]), len(alphabets[name])))
                  for name in names}
        prev: dict[str, str | None] = {name: None for name in names}
        for _ in range(ticks if ticks is not None else self.episode_ticks):
            screen.advance_tick()
            env.step(screen, env_rng)
            for name in names:
                bits = [read_bit(screen, q, axis, meas_rng, actor=agent.name)[0]
                        for q in sector_qubits[name]]
                rec = "".join(str(b) for b in bits)
                if prev[name] is not None:
                    counts[name][indexes[name][prev[name]], indexes[name][rec]] += 1.0
                prev[name] = rec
        er = {}
        for name in names:
            post = counts[name] + self.smoothing
            model = MarkovKernel(alphabets[name],
                                 post / post.sum(axis=1, keepdims=True),
                                 counts[name])
            er[name] = kernel_distance(model, env.true_kernel(name))
        entropy = (entanglement_entropy(screen.joint_state, self.entropy_cut)
                   if self.entropy_cut else 0.0)
        return er, entropy


def _golden_section(f, lo: float, hi: float, tol: float, budget: int):
    """Golden-section line minimization with an evaluation budget."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    evals = []

    def probe(x):
        y = f(x)
        evals.append((x, y))
        return y

    if budget < 2 or hi - lo <= tol:
        if budget >= 1:
            mid = (lo + hi) / 2
            probe(mid)
        return evals
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = probe(c), probe(d)
    used = 2
    while hi - lo > tol and used < budget:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = probe(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = probe(d)
        used += 1
    return evals


def fep_minimize(agent_a: Agent, environment_b, scenario, budget: int,
                 rng: np.random.Generator) -> Trajectory:
    """Minimize summed per-sector prediction error over basis angles.

    Derivative-free coordinate descent: per coordinate, a coarse bracket
    scan followed by golden-section refinement, round-robin with a
    shrinking window.  Every candidate is scored on a fixed-length
    episode with common random numbers, so the sampled objective is a
    deterministic function of the angles and the best-so-far score is
    non-increasing by construction.
    """
    angles = np.asarray(scenario.initial_angles, dtype=float).copy()
    trajectory = Trajectory(metadata={
        "sector_a": sorted(scenario.sector_e),
        "sector_b": sorted(environment_b.sector),
        "trivial_b": bool(getattr(environment_b, "randomize_axis", False)),
        "episode_ticks": scenario.episode_ticks,
    })
    if budget <= 0:
        trajectory.final_angles = tuple(angles)
        return trajectory
    env_seed = int(rng.integers(2**63))
    meas_seed = int(rng.integers(2**63))
    state = {"best": math.inf, "best_angles": angles.copy(), "used": 0, "pass": 0}

    def evaluate(vec: np.ndarray) -> float:
        env_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(env_seed)))
        meas_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(meas_seed)))
        ticks = scenario.ticks_for_pass(state["pass"])
        er, entropy = scenario.run_episode(agent_a, environment_b, vec,
                                           env_rng, meas_rng, ticks)
        score = sum(er[s] for s in scenario.scored_sectors)
        state["used"] += 1
        if score < state["best"]:
            state["best"] = score
            state["best_angles"] = vec.copy()
        step = TrajectoryStep(state["used"], state["best"], dict(er),
                              tuple(vec), entropy)
        if trajectory.steps and step.score > trajectory.steps[-1].score:
            raise AssertionError("best-so-far score must be non-increasing")
        trajectory.steps.append(step)
        return score

    window = scenario.initial_window
    while state["used"] < budget and window > scenario.angle_tol:
        for k in range(len(angles)):
            remaining = budget - state["used"]
            if remaining <= 0:
                break
            center = angles[k]
            grid = np.linspace(center - window, center + window,
                               scenario.scan_points)
            samples = []
            for x in grid:
                if state["used"] >= budget:
                    break
                vec = angles.copy()
                vec[k] = x
                samples.append((x, evaluate(vec)))
            if not samples:
                break
            xs = [s[0] for s in samples]
            best_i = min(range(len(samples)), key=lambda i: samples[i][1])
            lo = xs[max(best_i - 1, 0)]
            hi = xs[min(best_i + 1, len(xs) - 1)]

            def line(x, k=k):
                vec = angles.copy()
                vec[k] = x
                return evaluate(vec)

            refine_budget = min(budget - state["used"], 14)
            refined = _golden_section(line, lo, hi, scenario.angle_tol,
                                      refine_budget)
            samples.extend(refined)
            angles[k] = min(samples, key=lambda s: s[1])[0]
        window /= scenario.window_shrink
        state["pass"] += 1
    trajectory.final_angles = tuple(state["best_angles"])
    trajectory.best_score = state["best"]
    return trajectory


# ---------------------------------------------------------------------------
# noise decomposition (VFE = noise + insufficient learning)


def sector_relation(sector_a: Iterable[int], sector_b: Iterable[int]) -> str:
    a, b = frozenset(sector_a), frozenset(sector_b)
    if a == b:
        return "equal"
    if a > b:
        return "contains"
    if a < b:
        return "contained"
    if a & b:
        return "overlap"
    return "disjoint"


@dataclass
class NoiseDecomposition:
    noise_floor: float
    learning_gap: float
    relation: str
    trivial_b: bool
    long_run_model: MarkovKernel | None = None


def noise_decomposition(trajectory: Trajectory,
                        long_run_model: MarkovKernel | None = None,
                        tail_window: int = 10) -> NoiseDecomposition:
    """Split the error trajectory into an irreducible noise floor
    (tail mean) and a learning gap (initial error minus the floor)."""
    if len(trajectory.steps) < tail_window:
        raise InsufficientDataError(
            f"trajectory has {len(trajectory.steps)} steps, "
            f"tail window needs {tail_window}")
    scored = [sum(s.er.values()) for s in trajectory.steps]
    floor = float(np.mean(scored[-tail_window:]))
    gap = float(scored[0] - floor)
    relation = sector_relation(trajectory.metadata.get("sector_a", ()),
                               trajectory.metadata.get("sector_b", ()))
    return NoiseDecomposition(floor, gap, relation,
                              bool(trajectory.metadata.get("trivial_b", False)),
                              long_run_model)
