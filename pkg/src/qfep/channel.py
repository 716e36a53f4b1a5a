"""Finite channel theory: classifiers, infomorphisms, weighted cocone
diagrams, Bayes-net joints, and the joint-distribution feasibility test
behind the contextuality diagnostics.

Feasibility is decided over the polytope of deterministic global
assignments: a family of context statistics extends to one global joint
iff the empirical marginals are a convex combination of deterministic
assignment columns.  The primary solver is an LP (HiGHS); small
instances get an exact rational phase-1 simplex so that infeasibility
certificates are never numerical artifacts.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from .errors import ConditioningOnNullError
from .kernels import MarkovKernel

DIST_TOL = 1e-9
MARGINAL_TOL = 1e-7
EXACT_SIZE_CAP = 4096  # tableau cells, roughly


# ---------------------------------------------------------------------------
# classifiers and infomorphisms


@dataclass(frozen=True, eq=False)
class Classifier:
    """Token/type satisfaction relation (binary classifications only)."""

    tokens: tuple[str, ...]
    types: tuple[str, ...]
    relation: np.ndarray  # bool, shape (len(tokens), len(types))

    def __post_init__(self):
        rel = np.asarray(self.relation, dtype=bool)
        if rel.shape != (len(self.tokens), len(self.types)):
            raise ValueError(
                f"relation shape {rel.shape} != ({len(self.tokens)}, {len(self.types)})")
        rel.setflags(write=False)
        object.__setattr__(self, "relation", rel)

    def satisfies(self, token: str, typ: str) -> bool:
        return bool(self.relation[self.tokens.index(token), self.types.index(typ)])


@dataclass(frozen=True)
class Infomorphism:
    """Contravariant pair of maps between classifiers (Definition 3 style):
    types map forward, tokens map backward."""

    source: Classifier
    target: Classifier
    type_map: Mapping[str, str]    # source types -> target types
    token_map: Mapping[str, str]   # target tokens -> source tokens


def check_infomorphism(f: Infomorphism) -> bool:
    """Adjointness: token_map(b) |=_src a  iff  b |=_tgt type_map(a),
    for every target token b and source type a."""
    src, tgt = f.source, f.target
    for a in src.types:
        if a not in f.type_map:
            raise ValueError(f"type map is not total: missing {a!r}")
        if f.type_map[a] not in tgt.types:
            raise ValueError(f"type map sends {a!r} to unknown type {f.type_map[a]!r}")
    for b in tgt.tokens:
        if b not in f.token_map:
            raise ValueError(f"token map is not total: missing {b!r}")
        if f.token_map[b] not in src.tokens:
            raise ValueError(f"token map sends {b!r} to unknown token {f.token_map[b]!r}")
    for b in tgt.tokens:
        for a in src.types:
            left = src.satisfies(f.token_map[b], a)
            right = tgt.satisfies(b, f.type_map[a])
            if left != right:
                return False
    return True


def compose_infomorphisms(f: Infomorphism, g: Infomorphism) -> Infomorphism:
    """Composite A -> C of f: A -> B and g: B -> C."""
    if f.target is not g.source:
        raise ValueError("infomorphisms do not share the middle classifier")
    type_map = {a: g.type_map[f.type_map[a]] for a in f.source.types}
    token_map = {c: f.token_map[g.token_map[c]] for c in g.target.tokens}
    return Infomorphism(f.source, g.target, type_map, token_map)


@dataclass(frozen=True, eq=False)
class ProbClassifier:
    """Classifier whose valuation is a conditional probability table."""

    tokens: tuple[str, ...]
    types: tuple[str, ...]
    table: np.ndarray  # rows: P(type | token), each summing to 1

    def __post_init__(self):
        tab = np.asarray(self.table, dtype=float)
        if tab.shape != (len(self.tokens), len(self.types)):
            raise ValueError("table shape must be (tokens, types)")
        if np.any(tab < -DIST_TOL) or np.any(tab > 1 + DIST_TOL):
            raise ValueError("probabilities must lie in [0, 1]")
        if np.max(np.abs(tab.sum(axis=1) - 1.0)) > DIST_TOL:
            raise ValueError("each conditional distribution must sum to 1")
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)


def kernel_to_classifier(k: MarkovKernel) -> ProbClassifier:
    """Embed a Markov kernel as a probabilistic classifier whose
    valuation entries are exactly the conditional probabilities."""
    return ProbClassifier(k.alphabet, k.alphabet, k.matrix.copy())


def classifier_to_kernel(pc: ProbClassifier) -> MarkovKernel:
    """Inverse extraction; round-trips exactly."""
    if pc.tokens != pc.types:
        raise ValueError("classifier is not kernel-shaped (tokens != types)")
    return MarkovKernel(pc.tokens, pc.table.copy())


# ---------------------------------------------------------------------------
# weighted cocone diagrams


@dataclass(eq=False)
class DiagramCCD:
    """Finite diagram of classifiers with conditional-probability weights.

    Edges are (source, destination) pairs; a paired reverse edge marks
    the cocone/cone double structure and is the only cycle allowed.
    """

    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], float] = field(default_factory=dict)
    core: str | None = None
    payload: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = tuple(self.nodes)
        seen = set(self.nodes)
        for (u, v), w in self.edges.items():
            if u not in seen or v not in seen:
                raise ValueError(f"edge ({u!r}, {v!r}) references unknown node")
            if not 0.0 < w <= 1.0:
                raise ValueError(f"edge weight must lie in (0, 1], got {w}")
        if self.core is not None and self.core not in seen:
            raise ValueError(f"core {self.core!r} is not a node")
        one_way = nx.DiGraph()
        one_way.add_nodes_from(self.nodes)
        for (u, v) in self.edges:
            if (v, u) not in self.edges:
                one_way.add_edge(u, v)
        if not nx.is_directed_acyclic_graph(one_way):
            raise ValueError("diagram has a cycle beyond paired reverse edges")

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        for (u, v), w in self.edges.items():
            g.add_edge(u, v, weight=w)
        return g


def ccd_commutes(d: DiagramCCD, tol: float = 1e-9) -> bool:
    """Path independence of weight products: for every ordered node pair,
    all directed simple paths carry the same product within tol."""
    g = d.digraph()
    for u in d.nodes:
        for v in d.nodes:
            if u == v:
                continue
            products = []
            for path in nx.all_simple_paths(g, u, v):
                w = 1.0
                for a, b in zip(path, path[1:]):
                    w *= g.edges[a, b]["weight"]
                products.append(w)
            if len(products) > 1 and max(products) - min(products) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# Bayes-net joints


@dataclass(eq=False)
class BayesNet:
    """Directed network of finite variables with conditional tables."""

    variables: tuple[str, ...]
    alphabets: dict[str, tuple[str, ...]]
    parents: dict[str, tuple[str, ...]]
    tables: dict[str, dict[tuple[str, ...], dict[str, float]]]

    def __post_init__(self):
        g = nx.DiGraph()
        g.add_nodes_from(self.variables)
        for var in self.variables:
            for p in self.parents.get(var, ()):
                if p not in self.variables:
                    raise ValueError(f"parent {p!r} of {var!r} is not a variable")
                g.add_edge(p, var)
        if not nx.is_directed_acyclic_graph(g):
            raise ValueError("network has a cycle")
        for var in self.variables:
            combos = list(itertools.product(*(self.alphabets[p]
                                              for p in self.parents.get(var, ()))))
            for combo in combos:
                dist = self.tables[var].get(combo)
                if dist is None:
                    raise ValueError(f"missing table row for {var!r} given {combo}")
                total = sum(dist.get(v, 0.0) for v in self.alphabets[var])
                if abs(total - 1.0) > DIST_TOL:
                    raise ValueError(
                        f"table for {var!r} given {combo} sums to {total}")


def chain_joint(net: BayesNet) -> dict[tuple[str, ...], float]:
    """Full joint distribution by factorizing along the network."""
    joint = {}
    for outcome in itertools.product(*(net.alphabets[v] for v in net.variables)):
        value = dict(zip(net.variables, outcome))
        p = 1.0
        for var in net.variables:
            combo = tuple(value[par] for par in net.parents.get(var, ()))
            p *= net.tables[var][combo].get(value[var], 0.0)
        joint[outcome] = p
    return joint


def marginal(joint: Mapping[tuple[str, ...], float], variables: Sequence[str],
             subset: Sequence[str]) -> dict[tuple[str, ...], float]:
    """Marginalize a joint keyed by outcomes of ``variables`` onto a subset."""
    pos = [variables.index(v) for v in subset]
    out: dict[tuple[str, ...], float] = {}
    for outcome, p in joint.items():
        key = tuple(outcome[i] for i in pos)
        out[key] = out.get(key, 0.0) + p
    return out


def bayes_posterior(prior: Sequence[float], likelihood: np.ndarray,
                    evidence_value: int) -> np.ndarray:
    """Posterior over hypotheses given one observed evidence value.

    ``likelihood`` has one row per hypothesis, one column per evidence
    value, rows summing to one.
    """
    prior = np.asarray(prior, dtype=float)
    lik = np.asarray(likelihood, dtype=float)
    if abs(prior.sum() - 1.0) > DIST_TOL:
        raise ValueError(f"prior sums to {prior.sum()}")
    if lik.shape[0] != prior.size:
        raise ValueError("likelihood rows must match the prior length")
    if np.max(np.abs(lik.sum(axis=1) - 1.0)) > DIST_TOL:
        raise ValueError("likelihood rows must sum to 1")
    if not 0 <= evidence_value < lik.shape[1]:
        raise ValueError(f"evidence value {evidence_value} out of range")
    unnorm = prior * lik[:, evidence_value]
    evidence = unnorm.sum()
    if evidence <= 0.0:
        raise ConditioningOnNullError("evidence has zero probability")
    return unnorm / evidence


# ---------------------------------------------------------------------------
# context families and the Theorem-1 feasibility test


@dataclass(frozen=True)
class Context:
    """One measurement context: a variable subset with its empirical joint."""

    id: str
    variables: tuple[str, ...]
    table: Mapping[tuple[str, ...], float]

    def probability(self, outcome: tuple[str, ...]) -> float:
        return float(self.table.get(outcome, 0.0))


@dataclass(eq=False)
class ContextFamily:
    """A family of overlapping contexts over shared finite variables."""

    variables: tuple[str, ...]
    alphabets: dict[str, tuple[str, ...]]
    contexts: list[Context]

    def __post_init__(self):
        for v in self.variables:
            if v not in self.alphabets or not self.alphabets[v]:
                raise ValueError(f"variable {v!r} has no outcome alphabet")
        for ctx in self.contexts:
            unknown = [v for v in ctx.variables if v not in self.variables]
            if unknown:
                raise ValueError(f"context {ctx.id!r} uses unknown variables {unknown}")
            total = sum(ctx.table.values())
            if abs(total - 1.0) > DIST_TOL:
                raise ValueError(
                    f"context {ctx.id!r} distribution sums to {total}, not 1")
            for outcome, p in ctx.table.items():
                if len(outcome) != len(ctx.variables):
                    raise ValueError(
                        f"context {ctx.id!r} outcome {outcome} has wrong arity")
                if p < -DIST_TOL or p > 1 + DIST_TOL:
                    raise ValueError(
                        f"context {ctx.id!r} probability {p} outside [0, 1]")

    def covered_variables(self) -> frozenset[str]:
        out: set[str] = set()
        for ctx in self.contexts:
            out.update(ctx.variables)
        return frozenset(out)


def family_from_joint(joint: Mapping[tuple[str, ...], float],
                      variables: Sequence[str],
                      alphabets: Mapping[str, Sequence[str]],
                      context_vars: Sequence[Sequence[str]]) -> ContextFamily:
    """Build a (necessarily feasible) family by marginalizing one joint."""
    variables = tuple(variables)
    contexts = []
    for i, sub in enumerate(context_vars):
        sub = tuple(sub)
        contexts.append(Context(f"c{i}", sub, marginal(joint, variables, sub)))
    return ContextFamily(variables, {v: tuple(alphabets[v]) for v in variables},
                         contexts)


@dataclass
class FeasibilityResult:
    feasible: bool
    witness: dict[tuple[str, ...], float] | None
    certificate: dict | None
    max_violation: float
    method: str

    def to_report(self) -> dict:
        report = {
            "feasible": self.feasible,
            "max_violation": self.max_violation,
            "method": self.method,
        }
        if self.witness is not None:
            report["witness"] = {"|".join(k): v for k, v in sorted(self.witness.items())}
        if self.certificate is not None:
            report["certificate"] = self.certificate
        return report


def _assignment_matrix(family: ContextFamily):
    """Constraint system A x = b over deterministic global assignments."""
    assignments = list(itertools.product(
        *(family.alphabets[v] for v in family.variables)))
    var_pos = {v: i for i, v in enumerate(family.variables)}
    rows = []
    b = []
    row_labels = []
    for ctx in family.contexts:
        pos = [var_pos[v] for v in ctx.variables]
        outcomes = list(itertools.product(*(family.alphabets[v] for v in ctx.variables)))
        for outcome in outcomes:
            row = [1.0 if tuple(g[i] for i in pos) == outcome else 0.0
                   for g in assignments]
            rows.append(row)
            b.append(ctx.probability(outcome))
            row_labels.append((ctx.id, outcome))
    return np.asarray(rows), np.asarray(b), assignments, row_labels


def _exact_phase1(a_rows: list[list[Fraction]], b: list[Fraction]):
    """Exact rational phase-1 simplex for {x >= 0 : Ax = b}.

    Returns (feasible, x or farkas_y).  Bland's rule, dense tableau.
    """
    m = len(a_rows)
    n = len(a_rows[0]) if m else 0
    sign = [Fraction(1)] * m
    rows = []
    for i in range(m):
        if b[i] < 0:
            sign[i] = Fraction(-1)
        rows.append([sign[i] * v for v in a_rows[i]] +
                    [Fraction(1) if j == i else Fraction(0) for j in range(m)] +
                    [sign[i] * b[i]])
    # objective row: reduced costs with the artificial basis
    obj = [Fraction(0)] * (n + m + 1)
    for j in range(n + m + 1):
        col_sum = sum(rows[i][j] for i in range(m))
        if j < n:
            obj[j] = -col_sum
        elif j < n + m:
            obj[j] = Fraction(1) - col_sum  # = 0 initially
        else:
            obj[j] = -col_sum  # negative objective value
    basis = list(range(n, n + m))
    while True:
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            break
        ratios = [(rows[i][-1] / rows[i][enter], basis[i], i)
                  for i in range(m) if rows[i][enter] > 0]
        if not ratios:
            break  # unbounded cannot occur in phase 1, but stay safe
        _, _, leave = min(ratios, key=lambda t: (t[0], t[1]))
        pivot = rows[leave][enter]
        rows[leave] = [v / pivot for v in rows[leave]]
        for i in range(m):
            if i != leave and rows[i][enter] != 0:
                factor = rows[i][enter]
                rows[i] = [vi - factor * vj for vi, vj in zip(rows[i], rows[leave])]
        if obj[enter] != 0:
            factor = obj[enter]
            obj = [vi - factor * vj for vi, vj in zip(obj, rows[leave])]
        basis[leave] = enter
    objective_value = -obj[-1]
    if objective_value == 0:
        x = [Fraction(0)] * n
        for i, bv in enumerate(basis):
            if bv < n:
                x[bv] = rows[i][-1]
        return True, x
    # Farkas vector from the duals of the artificial columns, undoing
    # the row sign flips
    y = [sign[i] * (Fraction(1) - obj[n + i]) for i in range(m)]
    return False, y


def joint_feasible(family: ContextFamily, tol: float = MARGINAL_TOL,
                   method: str = "auto") -> tuple[bool, FeasibilityResult]:
    """Theorem-1 test: does one global joint reproduce every context?

    Returns (feasible, result); the result carries either a witness
    joint over deterministic assignments or a separating (Farkas)
    certificate.  Inconsistent overlapping marginals come back as
    infeasible (signalling disturbance), not as an error.
    """
    if family.covered_variables() != frozenset(family.variables):
        missing = sorted(set(family.variables) - family.covered_variables())
        raise ValueError(f"variables {missing} appear in no context")
    if not family.contexts:
        raise ValueError("family has no contexts")
    a, b, assignments, row_labels = _assignment_matrix(family)
    small = a.size <= EXACT_SIZE_CAP

    def exact_result() -> tuple[bool, FeasibilityResult]:
        a_frac = [[Fraction(v) for v in row] for row in a.tolist()]
        b_frac = [Fraction(v) for v in b.tolist()]
        ok, payload = _exact_phase1(a_frac, b_frac)
        if ok:
            witness = {assignments[j]: float(payload[j])
                       for j in range(len(assignments)) if payload[j] != 0}
            x = np.array([float(v) for v in payload])
            violation = float(np.max(np.abs(a @ x - b))) if x.size else 0.0
            return True, FeasibilityResult(True, witness, None, violation, "exact")
        y = np.array([float(v) for v in payload])
        certificate = {
            "type": "farkas",
            "rows": [{"context": lab[0], "outcome": "|".join(lab[1]),
                      "coefficient": float(y[i])}
                     for i, lab in enumerate(row_labels) if y[i] != 0],
            # y.b > 0 while y.A <= 0 on every deterministic assignment
            "empirical_value": float(y @ b),
            "max_assignment_value": float(np.max(y @ a)),
        }
        return False, FeasibilityResult(False, None, certificate,
                                        float(y @ b), "exact")

    if method == "exact":
        return exact_result()
    res = linprog(c=np.zeros(a.shape[1]), A_eq=a, b_eq=b,
                  bounds=(0, None), method="highs")
    if res.status == 0:
        x = np.clip(res.x, 0.0, None)
        violation = float(np.max(np.abs(a @ x - b)))
        if violation <= tol:
            witness = {assignments[j]: float(x[j])
                       for j in range(len(assignments)) if x[j] > 1e-12}
            return True, FeasibilityResult(True, witness, None, violation, "lp")
    # LP says infeasible (or residual beyond tolerance); certify exactly
    # when the instance is small so the verdict is not a float artifact
    if method == "auto" and small:
        return exact_result()
    farkas = linprog(c=b, A_ub=-a.T, b_ub=np.zeros(a.shape[1]),
                     bounds=(-1, 1), method="highs")
    certificate = None
    violation = 0.0
    if farkas.status == 0 and farkas.fun < -tol:
        y = farkas.x
        certificate = {
            "type": "farkas",
            "rows": [{"context": lab[0], "outcome": "|".join(lab[1]),
                      "coefficient": float(-y[i])}
                     for i, lab in enumerate(row_labels) if abs(y[i]) > 1e-12],
            "empirical_value": float(-farkas.fun),
            "max_assignment_value": float(np.max(-y @ a)),
        }
        violation = float(-farkas.fun)
    return False, FeasibilityResult(False, None, certificate, violation, "lp")


# ---------------------------------------------------------------------------
# context family wire format


def export_context_family(family: ContextFamily) -> str:
    """CSV wire format: header ``context_id,<variables...>,probability``;
    cells of variables outside a context stay empty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("context_id",) + family.variables + ("probability",))
    for ctx in family.contexts:
        pos = {v: i for i, v in enumerate(ctx.variables)}
        for outcome in sorted(ctx.table):
            row = [ctx.id]
            for v in family.variables:
                row.append(outcome[pos[v]] if v in pos else "")
            row.append(repr(float(ctx.table[outcome])))
            writer.writerow(row)
    return buf.getvalue()


def parse_context_family(text: str) -> ContextFamily:
    """Parse the CSV wire format, reporting the line of any bad row."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty context file") from None
    if len(header) < 3 or header[0] != "context_id" or header[-1] != "probability":
        raise ValueError(
            "header must be context_id,<variables...>,probability")
    variables = tuple(header[1:-1])
    raw: dict[str, dict[tuple[str, ...], float]] = {}
    ctx_vars: dict[str, tuple[str, ...]] = {}
    values: dict[str, set[str]] = {v: set() for v in variables}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(
                f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        ctx_id = row[0]
        try:
            prob = float(row[-1])
        except ValueError:
            raise ValueError(
                f"line {lineno}: probability {row[-1]!r} is not a number") from None
        assigned = tuple(v for v, cell in zip(variables, row[1:-1]) if cell != "")
        if not assigned:
            raise ValueError(f"line {lineno}: no variable assignments")
        if ctx_id in ctx_vars and ctx_vars[ctx_id] != assigned:
            raise ValueError(
                f"line {lineno}: context {ctx_id!r} changes its variable set")
        ctx_vars.setdefault(ctx_id, assigned)
        outcome = tuple(cell for cell in row[1:-1] if cell != "")
        raw.setdefault(ctx_id, {})
        if outcome in raw[ctx_id]:
            raise ValueError(
                f"line {lineno}: duplicate outcome for context {ctx_id!r}")
        raw[ctx_id][outcome] = prob
        for v, cell in zip(variables, row[1:-1]):
            if cell != "":
                values[v].add(cell)
    contexts = [Context(cid, ctx_vars[cid], table) for cid, table in raw.items()]
    for ctx in contexts:
        total = sum(ctx.table.values())
        if abs(total - 1.0) > DIST_TOL:
            raise ValueError(
                f"context {ctx.id!r} probabilities sum to {total}, not 1")
    alphabets = {v: tuple(sorted(values[v])) for v in variables}
    return ContextFamily(variables, alphabets, contexts)
