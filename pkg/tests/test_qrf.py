"""QRFs as measurement programs: observables, commutativity,
co-deployability, context switching, and the implementation square."""

import itertools
import math

import numpy as np
import pytest

from qfep import (
    BasisAxis,
    ClassifierProgram,
    Context,
    ContextFamily,
    ContextPair,
    ProgramNode,
    StateVector,
    build_interaction,
    codeployable,
    context_switch,
    implements_check,
    joint_feasible,
    make_qrf,
    observable_of,
    permutation_dynamics,
    qrf_from_config,
    qrfs_commute,
    stream,
)
from qfep.screen import LN2
from qfep.states import PAULI_X, PAULI_Z


def random_axis(rng):
    v = rng.normal(size=3)
    return BasisAxis(tuple(v / np.linalg.norm(v)))


class TestObservable:
    def test_single_qubit_z(self):
        q = make_qrf("z0", 2, (0,), (BasisAxis.z(),))
        expected = np.kron(PAULI_Z, np.eye(2))
        np.testing.assert_allclose(observable_of(q).matrix, expected, atol=1e-12)

    def test_two_qubit_zz_diagonal(self):
        q = make_qrf("zz", 2, (0, 1), (BasisAxis.z(), BasisAxis.z()))
        m = observable_of(q).matrix
        np.testing.assert_allclose(m, np.diag([1, -1, -1, 1]), atol=1e-12)

    def test_x_axis_squares_to_identity(self):
        q = make_qrf("x0", 2, (1,), (BasisAxis.x(),))
        m = observable_of(q).matrix
        np.testing.assert_allclose(m @ m, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(m, np.kron(np.eye(2), PAULI_X), atol=1e-12)

    def test_eigenvalues_are_binary(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            q = make_qrf("r", 3, (0, 2), (random_axis(rng), random_axis(rng)))
            eigs = np.sort(np.linalg.eigvalsh(observable_of(q).matrix))
            np.testing.assert_allclose(np.abs(eigs), 1.0, atol=1e-9)


class TestCommutation:
    def test_disjoint_sectors_commute(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            a = make_qrf("a", 3, (0,), (random_axis(rng),))
            b = make_qrf("b", 3, (1, 2), (random_axis(rng), random_axis(rng)))
            assert qrfs_commute(a, b)

    def test_same_axis_same_qubit_commutes(self):
        a = make_qrf("a", 2, (0,), (BasisAxis.z(),))
        b = make_qrf("b", 2, (0,), (BasisAxis.z(),))
        assert qrfs_commute(a, b)

    def test_z_vs_x_on_same_qubit(self):
        # [sigma_z, sigma_x] = 2i sigma_y != 0
        a = make_qrf("a", 1, (0,), (BasisAxis.z(),))
        b = make_qrf("b", 1, (0,), (BasisAxis.x(),))
        assert not qrfs_commute(a, b)

    def test_screen_size_mismatch(self):
        a = make_qrf("a", 1, (0,), (BasisAxis.z(),))
        b = make_qrf("b", 2, (0,), (BasisAxis.z(),))
        with pytest.raises(ValueError):
            qrfs_commute(a, b)


def two_context_stats(p_u, p_v, bg_u=None, bg_v=None):
    """Stats over (U, bg) and (V, bg) with given per-context tables."""
    contexts = [Context("u", ("q0", "q2"), p_u), Context("v", ("q1", "q2"), p_v)]
    return ContextFamily(("q0", "q1", "q2"),
                         {f"q{i}": ("0", "1") for i in range(3)}, contexts)


class TestCodeployable:
    def setup_method(self):
        self.u = make_qrf("u", 3, (0,), (BasisAxis.z(),))
        self.v = make_qrf("v", 3, (1,), (BasisAxis.z(),))
        self.pair = ContextPair(self.u, self.v, (2,))

    def test_commuting_with_product_statistics(self):
        table = {("0", "0"): 0.25, ("0", "1"): 0.25,
                 ("1", "0"): 0.25, ("1", "1"): 0.25}
        stats = two_context_stats(table, table)
        assert codeployable(self.pair, stats)

    def test_symmetry(self):
        table = {("0", "0"): 0.25, ("0", "1"): 0.25,
                 ("1", "0"): 0.25, ("1", "1"): 0.25}
        stats = two_context_stats(table, table)
        swapped = ContextPair(self.v, self.u, (2,))
        assert codeployable(self.pair, stats) == codeployable(swapped, stats)

    def test_noncommuting_pointer_pair_fails(self):
        u = make_qrf("u", 2, (0,), (BasisAxis.z(),))
        v = make_qrf("v", 2, (0,), (BasisAxis.x(),))
        pair = ContextPair(u, v, (1,))
        table = {("0", "0"): 0.5, ("1", "1"): 0.5}
        contexts = [Context("u", ("q0", "q1"), table),
                    Context("v", ("q0", "q1"), table)]
        stats = ContextFamily(("q0", "q1"),
                              {"q0": ("0", "1"), "q1": ("0", "1")}, contexts)
        assert not codeployable(pair, stats)

    def test_disturbed_statistics_fail(self):
        # commuting QRFs, but the two contexts disagree on the shared
        # background marginal: a Kolmogorov-style inconsistency
        p_u = {("0", "0"): 0.9, ("1", "1"): 0.1}
        p_v = {("0", "0"): 0.5, ("1", "1"): 0.5}
        stats = two_context_stats(p_u, p_v)
        assert not codeployable(self.pair, stats)

    def test_missing_context_is_an_error(self):
        stats = ContextFamily(("q0", "q2"), {"q0": ("0", "1"), "q2": ("0", "1")},
                              [Context("u", ("q0", "q2"), {("0", "0"): 1.0})])
        with pytest.raises(ValueError, match="missing a context"):
            codeployable(self.pair, stats)

    def test_background_overlap_rejected(self):
        with pytest.raises(ValueError, match="background"):
            ContextPair(self.u, self.v, (0,))


class TestContextSwitch:
    def make_spec(self):
        axes = {"A": [BasisAxis.z()] * 3, "B": [BasisAxis.z()] * 3}
        return build_interaction([0.5, 0.25, 0.25], LN2, 310.0, axes)

    def test_identity_rotation_is_noop(self):
        spec = self.make_spec()
        target = make_qrf("p", 3, (0,), (BasisAxis.z(),))
        out = context_switch(spec, target, {0: BasisAxis.z()})
        assert out.axes["A"] == spec.axes["A"]
        np.testing.assert_array_equal(out.alphas, spec.alphas)

    def test_rotation_preserves_spectrum_and_weights(self):
        spec = self.make_spec()
        target = make_qrf("p", 3, (0,), (BasisAxis.z(),))
        out = context_switch(spec, target, {0: BasisAxis.x()})
        assert out.axes["A"][0] == BasisAxis.x()
        assert out.axes["A"][1:] == spec.axes["A"][1:]
        assert out.alphas.sum() == pytest.approx(1.0)
        eigs = np.linalg.eigvalsh(out.axes["A"][0].observable().matrix)
        np.testing.assert_allclose(np.sort(eigs), [-1.0, 1.0], atol=1e-12)

    def test_rotated_observable_is_a_conjugation(self):
        # switching z -> axis(theta) conjugates by the explicit rotation
        theta = 0.9
        spec = self.make_spec()
        target = make_qrf("p", 3, (0,), (BasisAxis.z(),))
        out = context_switch(spec, target, {0: BasisAxis.from_angles(theta)})
        rot = np.array([[math.cos(theta / 2), -math.sin(theta / 2)],
                        [math.sin(theta / 2), math.cos(theta / 2)]], dtype=complex)
        expected = rot @ PAULI_Z @ rot.conj().T
        np.testing.assert_allclose(out.axes["A"][0].observable().matrix,
                                   expected, atol=1e-9)

    def test_background_rotation_rejected(self):
        spec = self.make_spec()
        target = make_qrf("p", 3, (0,), (BasisAxis.z(),))
        with pytest.raises(ValueError, match="background"):
            context_switch(spec, target, {1: BasisAxis.x()})

    def test_spectrum_preserved_under_random_rotations(self):
        rng = np.random.default_rng(2)
        spec = self.make_spec()
        target = make_qrf("p", 3, (0, 1), (BasisAxis.z(), BasisAxis.z()))
        for _ in range(25):
            out = context_switch(spec, target,
                                 {0: random_axis(rng), 1: random_axis(rng)})
            for axis in out.axes["A"][:2]:
                eigs = np.sort(np.linalg.eigvalsh(axis.observable().matrix))
                np.testing.assert_allclose(eigs, [-1.0, 1.0], atol=1e-9)


class TestPrograms:
    def test_identity_program(self):
        prog = ClassifierProgram.identity(3)
        assert prog.evaluate((1, 0, 1)) == "101"
        assert prog.invert("101") == (1, 0, 1)

    def test_bit_flip_program(self):
        prog = ClassifierProgram.bit_flip(2)
        assert prog.evaluate((1, 0)) == "01"

    def test_non_invertible_rejected_for_preparation(self):
        prog = ClassifierProgram.from_function(lambda bits: (bits[0] & bits[1],),
                                               2, 1)
        assert prog.evaluate((1, 1)) == "1"
        with pytest.raises(ValueError, match="preimages"):
            prog.invert("0")

    def test_layer_cap(self):
        nodes = [ProgramNode("g0", ("in0",), {(0,): 0, (1,): 1})]
        for k in range(1, 4):
            nodes.append(ProgramNode(f"g{k}", (f"g{k-1}",), {(0,): 0, (1,): 1}))
        with pytest.raises(ValueError, match="layers"):
            ClassifierProgram(1, tuple(nodes), ("g3",))

    def test_to_diagram_commutes(self):
        from qfep import ccd_commutes
        prog = ClassifierProgram.from_function(
            lambda bits: (bits[0] ^ bits[1], bits[0]), 2, 2)
        d = prog.to_diagram()
        assert d.core == "record"
        assert ccd_commutes(d)

    def test_from_config(self):
        config = {
            "name": "parity",
            "n_qubits": 3,
            "sector": [0, 2],
            "axes": [[0, 0, 1], [1, 0, 0]],
            "program": {
                "nodes": [{"name": "g0", "inputs": ["in0", "in1"],
                           "table": {"00": 0, "01": 1, "10": 1, "11": 0}}],
                "outputs": ["g0"],
            },
        }
        q = qrf_from_config(config)
        assert q.sector == (0, 2)
        assert q.program.evaluate((1, 1)) == "0"
        assert q.axes[1] == BasisAxis.x()


class TestImplementsCheck:
    def test_identity_program_identity_dynamics(self):
        prog = ClassifierProgram.identity(2)
        dyn = permutation_dynamics(lambda bits: bits, 2)
        assert implements_check(prog, dyn, 20, stream(1, "impl"))

    def test_not_program_bitflip_dynamics(self):
        prog = ClassifierProgram.bit_flip(2)
        dyn = permutation_dynamics(lambda bits: tuple(1 - b for b in bits), 2)
        assert implements_check(prog, dyn, 20, stream(2, "impl"))

    def test_not_program_identity_dynamics_fails(self):
        prog = ClassifierProgram.bit_flip(2)
        dyn = permutation_dynamics(lambda bits: bits, 2)
        assert not implements_check(prog, dyn, 20, stream(3, "impl"))


class TestCommutingStatisticsAlwaysFeasible:
    def test_product_state_statistics_feasible(self):
        # commuting QRF pairs measured on product states can never
        # produce contextual statistics
        rng = np.random.default_rng(4)
        draws = stream(5, "feas")
        for _ in range(200):
            axis_u, axis_v, axis_bg = (random_axis(rng) for _ in range(3))
            bits = [int(rng.integers(0, 2)) for _ in range(3)]
            states = []
            for axis, bit in zip((axis_u, axis_v, axis_bg), bits):
                plus, minus = axis.eigenstates()
                states.append(plus if bit == 0 else minus)

            def outcome_probs(axis_a, state_a, axis_bgl, state_bg):
                table = {}
                pa_plus, pa_minus = axis_a.eigenstates()
                pb_plus, pb_minus = axis_bgl.eigenstates()
                for ba, va in (("0", pa_plus), ("1", pa_minus)):
                    for bb, vb in (("0", pb_plus), ("1", pb_minus)):
                        p = (abs(np.vdot(va, state_a)) ** 2
                             * abs(np.vdot(vb, state_bg)) ** 2)
                        table[(ba, bb)] = p
                return table

            ctx_u = Context("u", ("q0", "q2"),
                            outcome_probs(axis_u, states[0], axis_bg, states[2]))
            ctx_v = Context("v", ("q1", "q2"),
                            outcome_probs(axis_v, states[1], axis_bg, states[2]))
            stats = ContextFamily(("q0", "q1", "q2"),
                                  {f"q{i}": ("0", "1") for i in range(3)},
                                  [ctx_u, ctx_v])
            feasible, _ = joint_feasible(stats)
            assert feasible
