"""Configuration-driven experiment runner.

Each registered scenario maps a validated RunConfig to a JSON report
plus companion CSV trajectories; ``run`` writes them with a manifest of
content hashes.  Identical (config, seed) pairs produce byte-identical
files: every random draw comes from named Philox substreams of the run
seed and no output embeds wall-clock state.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import rng as rng_mod
from .agent import (
    AlignmentScenario,
    ScriptedEnvironment,
    fep_minimize,
    flip_kernel,
    hybrid_alignment_environment,
    make_agent,
    noise_decomposition,
    read_compare_write,
)
from .channel import (
    ContextFamily,
    export_context_family,
    joint_feasible,
    parse_context_family,
)
from .inequalities import (
    AsymptoticConfig,
    CHSHConfig,
    LGConfig,
    asymptotic_experiment,
    chsh,
    chsh_correlators,
    leggett_garg_correlators,
    leggett_garg_k3,
    measurement_context_family,
    pr_box_family,
    precession_config,
    singlet,
    standard_chsh_axes,
)
from .screen import BasisAxis, QubitScreen, decompose_sectors, export_transcript
from .states import StateVector


class UsageError(Exception):
    """Unknown scenario or malformed invocation (exit code 2)."""


class ValidationError(Exception):
    """Config violates scenario invariants; carries every violation."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass
class RunConfig:
    scenario: str
    seed: int
    params: dict = field(default_factory=dict)
    out_dir: Path | None = None

    def echo(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed,
                "params": _to_builtin(self.params)}


@dataclass
class RunResult:
    report: dict
    csv_files: dict[str, str] = field(default_factory=dict)
    extra_files: dict[str, str] = field(default_factory=dict)


def _to_builtin(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_to_builtin(v) for v in obj.tolist()]
    if isinstance(obj, Mapping):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_builtin(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# parameter validation


_COMMON_KEYS = {"shots": int, "exact": bool}

_SCENARIO_KEYS: dict[str, dict[str, type]] = {
    "chsh": {"angles_deg": list},
    "leggett-garg": {"omega": float, "tau": float},
    "fep-align": {"ticks": int, "budget": int, "initial_angle": float,
                  "trivial_env": bool, "smoothing": float},
    "asymptotic": {"n_qubits_a": int, "n_qubits_b": int, "screen_qubits": int,
                   "align_ticks": int, "align_budget": int, "coupling": str,
                   "coupling_strength": float, "t_max": float, "n_times": int,
                   "initial_misalignment": float},
    "contextuality": {"source": str, "csv_path": str},
    "memory-cycle": {"ticks": int, "p_flip": float, "f_budget": float,
                     "misalignment": float},
}


def validate_config(config: RunConfig) -> None:
    if config.scenario not in SCENARIOS:
        raise UsageError(
            f"unknown scenario {config.scenario!r}; registered: "
            + ", ".join(sorted(SCENARIOS)))
    violations = []
    if not 0 <= int(config.seed) < 2**64:
        violations.append(f"seed {config.seed} is not a 64-bit unsigned integer")
    allowed = dict(_COMMON_KEYS)
    allowed.update(_SCENARIO_KEYS[config.scenario])
    for key, value in config.params.items():
        if key not in allowed:
            violations.append(f"unknown parameter {key!r} for {config.scenario}")
            continue
        expected = allowed[key]
        if expected is float and isinstance(value, (int, float)) \
                and not isinstance(value, bool):
            continue
        if not isinstance(value, expected) or isinstance(value, bool) != (expected is bool):
            violations.append(
                f"parameter {key!r} must be {expected.__name__}, got {value!r}")
    shots = config.params.get("shots")
    if isinstance(shots, int) and shots < 1:
        violations.append(f"shots must be positive, got {shots}")
    for key in ("ticks", "budget", "align_ticks", "align_budget", "n_times"):
        value = config.params.get(key)
        if isinstance(value, int) and value < 1:
            violations.append(f"{key} must be positive, got {value}")
    p_flip = config.params.get("p_flip")
    if isinstance(p_flip, (int, float)) and not 0 <= p_flip <= 1:
        violations.append(f"p_flip must lie in [0, 1], got {p_flip}")
    if config.params.get("exact") and config.params.get("shots"):
        violations.append("exact and shots are mutually exclusive")
    source = config.params.get("source")
    if source is not None and source not in ("chsh-quantum", "pr-box", "product", "csv"):
        violations.append(f"source must be chsh-quantum, pr-box, product or csv, got {source!r}")
    if source == "csv" and "csv_path" not in config.params:
        violations.append("source 'csv' needs csv_path")
    coupling = config.params.get("coupling")
    if coupling is not None and coupling not in ("generic", "eq6"):
        violations.append(f"coupling must be generic or eq6, got {coupling!r}")
    if violations:
        raise ValidationError(violations)


# ---------------------------------------------------------------------------
# scenario runners


def _shots_of(config: RunConfig) -> int | None:
    if config.params.get("exact"):
        return None
    return config.params.get("shots")


def _run_chsh(config: RunConfig) -> RunResult:
    if "angles_deg" in config.params:
        axes = tuple(BasisAxis.from_angles(math.radians(a))
                     for a in config.params["angles_deg"])
    else:
        axes = standard_chsh_axes()
    state = singlet()
    exact_cfg = CHSHConfig(state, *axes, shots=None)
    exact_e = chsh_correlators(exact_cfg)
    report = {"mode": "exact", "s_exact": chsh(exact_cfg), "correlators": exact_e}
    rows = [(pair, repr(e)) for pair, e in sorted(exact_e.items())]
    shots = _shots_of(config)
    if shots:
        sampled_cfg = CHSHConfig(state, *axes, shots=shots)
        gen = rng_mod.stream(config.seed, "chsh")
        sampled_e = chsh_correlators(sampled_cfg, gen)
        report.update({"mode": "sampled", "shots": shots,
                       "s_sampled": abs(sampled_e["ab"] + sampled_e["ab'"]
                                        + sampled_e["a'b"] - sampled_e["a'b'"]),
                       "correlators_sampled": sampled_e})
        rows = [(pair, repr(exact_e[pair]), repr(sampled_e[pair]))
                for pair in sorted(exact_e)]
        header = ("pair", "E_exact", "E_sampled")
    else:
        header = ("pair", "E_exact")
    return RunResult(report, {"correlators.csv": _csv_text(header, rows)})


def _run_leggett_garg(config: RunConfig) -> RunResult:
    omega = float(config.params.get("omega", 1.0))
    tau = float(config.params.get("tau", math.pi / 3))
    exact_cfg = precession_config(omega, tau, shots=None)
    exact_c = leggett_garg_correlators(exact_cfg)
    report = {"mode": "exact", "omega": omega, "tau": tau,
              "k3_exact": leggett_garg_k3(exact_cfg), "correlators": exact_c}
    rows = [(label, repr(v)) for label, v in sorted(exact_c.items())]
    header = ("pair", "C_exact")
    shots = _shots_of(config)
    if shots:
        sampled_cfg = precession_config(omega, tau, shots=shots)
        gen = rng_mod.stream(config.seed, "leggett-garg")
        sampled_c = leggett_garg_correlators(sampled_cfg, gen)
        report.update({"mode": "sampled", "shots": shots,
                       "k3_sampled": sampled_c["C12"] + sampled_c["C23"] - sampled_c["C13"],
                       "correlators_sampled": sampled_c})
        rows = [(label, repr(exact_c[label]), repr(sampled_c[label]))
                for label in sorted(exact_c)]
        header = ("pair", "C_exact", "C_sampled")
    return RunResult(report, {"correlators.csv": _csv_text(header, rows)})


def _run_fep_align(config: RunConfig) -> RunResult:
    budget = int(config.params.get("budget", 120))
    initial = float(config.params.get("initial_angle", math.pi / 2))
    smoothing = float(config.params.get("smoothing", 1.0))
    if "ticks" in config.params:
        ticks = int(config.params["ticks"])
        scenario = AlignmentScenario(episode_ticks=ticks, tick_schedule=None,
                                     smoothing=smoothing, initial_angles=(initial,))
    else:
        scenario = AlignmentScenario(smoothing=smoothing, initial_angles=(initial,))
        ticks = scenario.ticks_for_pass(len(scenario.tick_schedule or ()) - 1)
    sectors = decompose_sectors(3, {"E": [0, 1, 2], "F": [], "Y": [],
                                    "P": [0, 1], "R": [], "Etilde": [2]})
    agent = make_agent("A", (BasisAxis.z(),) * 3, sectors)
    env = hybrid_alignment_environment()
    if config.params.get("trivial_env", False):
        for child in env.children.values():
            child.randomize_axis = True
    trajectory = fep_minimize(agent, env, scenario, budget,
                              rng_mod.stream(config.seed, "fep-align"))
    misalignment = scenario.axis_for(trajectory.final_angles).angle_to(env.axis)
    report = {
        "episode_ticks": ticks,
        "budget": budget,
        "evaluations": len(trajectory.steps),
        "best_error": trajectory.best_score,
        "final_angles": list(trajectory.final_angles),
        "final_misalignment_rad": misalignment,
    }
    if len(trajectory.steps) >= 10:
        decomp = noise_decomposition(trajectory, tail_window=10)
        report["noise_floor"] = decomp.noise_floor
        report["learning_gap"] = decomp.learning_gap
        report["sector_relation"] = decomp.relation
    return RunResult(report, {"trajectory.csv": trajectory.to_csv()})


def _run_asymptotic(config: RunConfig) -> RunResult:
    kwargs = {k: config.params[k] for k in _SCENARIO_KEYS["asymptotic"]
              if k in config.params}
    exp_config = AsymptoticConfig(**kwargs)
    report_obj = asymptotic_experiment(exp_config,
                                       rng_mod.stream(config.seed, "asymptotic"))
    report = {
        "config": {k: getattr(exp_config, k) for k in _SCENARIO_KEYS["asymptotic"]},
        **report_obj.summary(),
    }
    entropy_rows = [(repr(float(t)), repr(float(s)))
                    for t, s in zip(report_obj.times, report_obj.entropy_bits)]
    return RunResult(report, {
        "alignment.csv": report_obj.alignment.to_csv(),
        "entropy.csv": _csv_text(("time", "entropy_bits"), entropy_rows),
    })


def _contextuality_family(config: RunConfig) -> ContextFamily:
    source = config.params.get("source", "chsh-quantum")
    if source == "csv":
        return ingest_contexts(Path(config.params["csv_path"]))
    if source == "pr-box":
        return pr_box_family()
    a, ap, b, bp = standard_chsh_axes()
    if source == "product":
        state = StateVector.qubits((0, 0))
    else:
        state = singlet()
    return measurement_context_family(state, (a, ap), (b, bp))


def _run_contextuality(config: RunConfig) -> RunResult:
    family = _contextuality_family(config)
    feasible, result = joint_feasible(family)
    report = {
        "source": config.params.get("source", "chsh-quantum"),
        "n_contexts": len(family.contexts),
        "variables": list(family.variables),
        "feasible": feasible,
        "analysis": result.to_report(),
    }
    return RunResult(report, {"family.csv": export_context_family(family)})


def _run_memory_cycle(config: RunConfig) -> RunResult:
    ticks = int(config.params.get("ticks", 2000))
    p_flip = float(config.params.get("p_flip", 0.3))
    misalignment = float(config.params.get("misalignment", 0.0))
    sectors = decompose_sectors(3, {"E": [0], "Y": [1], "F": [2]})
    axis = BasisAxis.from_angles(misalignment)
    agent = make_agent("A", (axis, BasisAxis.z(), BasisAxis.z()), sectors,
                       f_budget=config.params.get("f_budget"))
    env = ScriptedEnvironment(flip_kernel(p_flip), (0,), BasisAxis.z(), start="0")
    screen = QubitScreen(3)
    env_rng = rng_mod.stream(config.seed, "memory-cycle", "env")
    agent_rng = rng_mod.stream(config.seed, "memory-cycle", "agent")
    comparisons = []
    for _ in range(ticks):
        screen.advance_tick()
        env.step(screen, env_rng)
        tick, cmp = read_compare_write(agent, screen, agent_rng)
        comparisons.append((tick, cmp))
    disagreements = [not all(c) for _, c in comparisons if c is not None]
    rate = float(np.mean(disagreements)) if disagreements else 0.0
    report = {
        "ticks": ticks,
        "p_flip": p_flip,
        "disagreement_rate": rate,
        "record_width": agent.record_width,
        "memory_slots": agent.memory_slots,
        "energy_spent_joules": agent.energy_spent,
        "final_tick": agent.clock.current_tick,
    }
    kernels = {name: json.loads(model.to_json())
               for name, model in sorted(agent.models.items())}
    cmp_rows = [(t, "" if c is None else int(all(c))) for t, c in comparisons]
    return RunResult(
        report,
        {"comparisons.csv": _csv_text(("tick", "records_equal"), cmp_rows),
         "transcript.csv": export_transcript(screen.transcript)},
        {"kernels.json": json.dumps(kernels, sort_keys=True, indent=2) + "\n"},
    )


SCENARIOS: dict[str, Callable[[RunConfig], RunResult]] = {
    "chsh": _run_chsh,
    "leggett-garg": _run_leggett_garg,
    "fep-align": _run_fep_align,
    "asymptotic": _run_asymptotic,
    "contextuality": _run_contextuality,
    "memory-cycle": _run_memory_cycle,
}


def ingest_contexts(path: Path) -> ContextFamily:
    """Load and validate a context-family CSV file."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_context_family(text)


def run(config: RunConfig) -> tuple[int, list[Path]]:
    """Execute a scenario and emit report.json, trajectory CSVs, and a
    manifest with content hashes.  Deterministic per (config, seed)."""
    validate_config(config)
    result = SCENARIOS[config.scenario](config)
    out_dir = config.out_dir or Path(f"qfep-out-{config.scenario}-{config.seed}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}
    report_doc = {"config": config.echo(), "results": _to_builtin(result.report)}
    files["report.json"] = json.dumps(report_doc, sort_keys=True, indent=2) + "\n"
    files.update(result.csv_files)
    files.update(result.extra_files)
    written = []
    hashes = {}
    for name in sorted(files):
        payload = files[name].encode("utf-8")
        path = out_dir / name
        path.write_bytes(payload)
        hashes[name] = hashlib.sha256(payload).hexdigest()
        written.append(path)
    manifest = {"config": config.echo(), "files": hashes}
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                             encoding="utf-8")
    written.append(manifest_path)
    return 0, written
