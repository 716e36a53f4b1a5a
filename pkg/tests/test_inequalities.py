"""CHSH, Leggett-Garg, and the alignment-then-entanglement experiment."""

import itertools
import math

import numpy as np
import pytest

from qfep import (
    AsymptoticConfig,
    BasisAxis,
    CHSHConfig,
    HermitianOperator,
    LGConfig,
    ResourceLimitError,
    StateVector,
    asymptotic_experiment,
    chsh,
    chsh_correlators,
    joint_feasible,
    leggett_garg_correlators,
    leggett_garg_k3,
    measurement_context_family,
    pr_box_family,
    precession_config,
    singlet,
    standard_chsh_axes,
    stream,
    tensor,
)
from qfep.inequalities import build_joint_hamiltonian, run_entanglement_phase


from oracles import classical_k3_max, lhv_chsh_max


class TestChsh:
    def test_singlet_standard_angles_reach_tsirelson(self):
        config = CHSHConfig(singlet(), *standard_chsh_axes())
        # analytic oracle: E(a, b) = -cos(angle difference) on the singlet
        angles = (math.pi / 2, 0.0, math.pi / 4, 3 * math.pi / 4)
        a, ap, b, bp = angles
        expected = abs(-math.cos(a - b) - math.cos(a - bp)
                       - math.cos(ap - b) + math.cos(ap - bp))
        assert expected == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        assert chsh(config) == pytest.approx(expected, abs=1e-6)

    def test_singlet_correlator_is_minus_cosine(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            t1, t2 = rng.uniform(0, math.pi, size=2)
            e = chsh_correlators(CHSHConfig(
                singlet(), BasisAxis.from_angles(t1), BasisAxis.z(),
                BasisAxis.from_angles(t2), BasisAxis.z()))["ab"]
            assert e == pytest.approx(-math.cos(t1 - t2), abs=1e-9)

    def test_product_states_respect_classical_bound(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            def qubit():
                v = rng.normal(size=2) + 1j * rng.normal(size=2)
                return StateVector.from_amplitudes((2,), v, normalize=True)
            state = tensor(qubit(), qubit())
            axes = [BasisAxis.from_angles(rng.uniform(0, 2 * math.pi))
                    for _ in range(4)]
            assert chsh(CHSHConfig(state, *axes)) <= 2.0 + 1e-9

    def test_lhv_enumeration_never_exceeds_two(self):
        assert lhv_chsh_max() == pytest.approx(2.0)

    def test_sampled_mode_tracks_exact(self):
        shots = 20_000
        exact = chsh(CHSHConfig(singlet(), *standard_chsh_axes()))
        sampled = chsh(CHSHConfig(singlet(), *standard_chsh_axes(), shots=shots),
                       stream(2, "chsh"))
        sigma_s = math.sqrt(4 * 0.5 / shots)  # four correlators, var <= 1 - E^2
        assert abs(sampled - exact) < 3 * sigma_s

    def test_needs_two_qubits(self):
        with pytest.raises(ValueError, match="two-qubit"):
            CHSHConfig(StateVector.basis((2,), 0), *standard_chsh_axes())

    def test_sampled_mode_needs_rng(self):
        with pytest.raises(ValueError, match="rng"):
            chsh(CHSHConfig(singlet(), *standard_chsh_axes(), shots=10))


class TestLeggettGarg:
    def test_frozen_dynamics_gives_one(self):
        config = LGConfig(HermitianOperator(2, np.zeros((2, 2))), BasisAxis.z(),
                          (0.0, 1.0, 2.0))
        assert leggett_garg_k3(config) == pytest.approx(1.0, abs=1e-12)

    def test_precession_at_pi_thirds(self):
        config = precession_config(omega=1.0, tau=math.pi / 3)
        # closed form: C(dt) = cos(omega dt)
        expected = 2 * math.cos(math.pi / 3) - math.cos(2 * math.pi / 3)
        assert expected == pytest.approx(1.5)
        assert leggett_garg_k3(config) == pytest.approx(1.5, abs=1e-9)

    def test_correlators_match_closed_form(self):
        omega, tau = 1.3, 0.7
        config = precession_config(omega, tau)
        c = leggett_garg_correlators(config)
        assert c["C12"] == pytest.approx(math.cos(omega * tau), abs=1e-9)
        assert c["C23"] == pytest.approx(math.cos(omega * tau), abs=1e-9)
        assert c["C13"] == pytest.approx(math.cos(2 * omega * tau), abs=1e-9)

    def test_classical_enumeration_bound(self):
        assert classical_k3_max() == 1

    def test_sampled_mode(self):
        shots = 20_000
        config = precession_config(1.0, math.pi / 3, shots=shots)
        k3 = leggett_garg_k3(config, stream(3, "lg"))
        sigma = math.sqrt(3.0 / shots)
        assert abs(k3 - 1.5) < 3 * sigma

    def test_times_must_increase(self):
        with pytest.raises(ValueError, match="strictly increase"):
            LGConfig(HermitianOperator(2, np.zeros((2, 2))), BasisAxis.z(),
                     (0.0, 2.0, 1.0))


class TestCrossModuleFeasibility:
    def test_quantum_chsh_statistics_are_contextual(self):
        axes = standard_chsh_axes()
        family = measurement_context_family(singlet(), axes[:2], axes[2:])
        feasible, result = joint_feasible(family)
        assert not feasible
        assert result.certificate is not None

    def test_product_state_statistics_are_classical(self):
        axes = standard_chsh_axes()
        family = measurement_context_family(StateVector.qubits((0, 0)),
                                            axes[:2], axes[2:])
        feasible, _ = joint_feasible(family)
        assert feasible

    def test_pr_box_fixture(self):
        feasible, _ = joint_feasible(pr_box_family())
        assert not feasible

    def test_context_tables_are_normalized(self):
        axes = standard_chsh_axes()
        family = measurement_context_family(singlet(), axes[:2], axes[2:])
        for ctx in family.contexts:
            assert sum(ctx.table.values()) == pytest.approx(1.0, abs=1e-9)

    def test_singlet_same_axis_anticorrelated(self):
        family = measurement_context_family(
            singlet(), (BasisAxis.z(), BasisAxis.x()), (BasisAxis.z(), BasisAxis.x()))
        same = {ctx.id: ctx for ctx in family.contexts}["A0B0"]
        assert same.table[("0", "1")] == pytest.approx(0.5, abs=1e-9)
        assert same.table[("1", "0")] == pytest.approx(0.5, abs=1e-9)


class TestAsymptoticExperiment:
    def test_zero_coupling_stays_separable(self):
        config = AsymptoticConfig(coupling_strength=0.0, align_ticks=800,
                                  align_budget=30, n_times=60)
        report = asymptotic_experiment(config, stream(4, "asym"))
        assert report.max_entropy_bits <= 1e-9

    def test_generic_coupling_entangles(self):
        config = AsymptoticConfig(align_ticks=1000, align_budget=40)
        report = asymptotic_experiment(config, stream(5, "asym"))
        assert report.final_misalignment < 0.1
        assert report.fraction_of_max >= 0.9
        # entanglement starts growing within the first timestep
        assert report.entropy_bits[0] == pytest.approx(0.0, abs=1e-12)
        assert report.entropy_bits[1] > 1e-6

    def test_eq6_coupling_entangles(self):
        config = AsymptoticConfig(coupling="eq6", coupling_strength=2.0,
                                  align_ticks=800, align_budget=30)
        report = asymptotic_experiment(config, stream(6, "asym"))
        assert report.max_entropy_bits > 0.5

    def test_dimension_caps(self):
        with pytest.raises(ResourceLimitError):
            AsymptoticConfig(n_qubits_a=4)
        with pytest.raises(ResourceLimitError):
            AsymptoticConfig(screen_qubits=5)

    def test_entropy_series_shape(self):
        config = AsymptoticConfig(align_ticks=600, align_budget=20, n_times=50)
        report = asymptotic_experiment(config, stream(7, "asym"))
        assert report.times.shape == report.entropy_bits.shape == (50,)
        assert report.cut_max_bits == 1.0

    def test_coupling_builder_is_hermitian(self):
        config = AsymptoticConfig()
        for mode in ("generic", "eq6"):
            cfg = AsymptoticConfig(coupling=mode)
            h = build_joint_hamiltonian(cfg, BasisAxis.z(), stream(8, mode))
            assert np.max(np.abs(h.matrix - h.matrix.conj().T)) < 1e-9

    def test_entanglement_phase_is_deterministic(self):
        config = AsymptoticConfig()
        h = build_joint_hamiltonian(config, BasisAxis.z(), stream(9, "det"))
        t1, e1 = run_entanglement_phase(config, h)
        t2, e2 = run_entanglement_phase(config, h)
        np.testing.assert_array_equal(e1, e2)
