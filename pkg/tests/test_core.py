"""State construction, composition, reduction, measurement and distances."""

import math

import numpy as np
import pytest

from qmerge import presets
from qmerge.core import (
    ChannelSpec,
    DensityOperator,
    PureState,
    SubsystemLayout,
    apply_channel,
    block_branches,
    block_measure,
    fidelity,
    fuse_subsystems,
    haar_unitary,
    partial_trace,
    permute_subsystems,
    purify,
    reduced_density,
    tensor,
    trace_distance,
)
from conftest import random_density, random_pure_state


def ket(*amps):
    v = np.asarray(amps, dtype=complex)
    return v / np.linalg.norm(v)


class TestLayout:
    def test_rejects_duplicate_labels(self):
        with pytest.raises(ValueError, match="duplicate"):
            SubsystemLayout((("A", 2), ("A", 2)))

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            SubsystemLayout((("A", 0),))

    def test_index_convention_first_label_most_significant(self):
        # |1⟩_A |0⟩_B sits at index 1*2 + 0 = 2
        psi = presets.basis_state((("A", 2), ("B", 2)), index=2)
        assert psi.tensor_view()[1, 0] == 1.0


class TestTensor:
    def test_basis_case(self):
        a = presets.basis_state((("A", 2),))
        b = presets.basis_state((("B", 2),))
        joint = tensor(a, b)
        assert joint.layout.labels == ("A", "B")
        np.testing.assert_allclose(joint.amplitudes, [1, 0, 0, 0])

    def test_diagonal_kron(self):
        joint = tensor(presets.maximally_mixed("A", 2),
                       presets.basis_state((("B", 2),)).density())
        np.testing.assert_allclose(joint.matrix, np.diag([0.5, 0, 0.5, 0]), atol=1e-12)

    def test_two_pairs_reduce_back(self):
        # oracle: direct matrix computation with np.kron
        phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        expected = np.outer(phi, phi)
        pairs = tensor(presets.bell_pair("A", "B"), presets.bell_pair("C", "D"))
        back = partial_trace(pairs.density(), ("A", "B"))
        np.testing.assert_allclose(back.matrix, expected, atol=1e-12)

    def test_duplicate_label_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            tensor(presets.bell_pair("A", "B"), presets.bell_pair("B", "C"))


class TestPartialTrace:
    def test_bell_reduces_to_maximally_mixed(self):
        red = partial_trace(presets.bell_pair().density(), "A")
        np.testing.assert_allclose(red.matrix, np.eye(2) / 2, atol=1e-12)

    def test_product_state_factor(self):
        rng = np.random.default_rng(0)
        rho = random_density(rng, (("A", 3),))
        sigma = random_density(rng, (("B", 2),))
        red = partial_trace(tensor(rho, sigma), "A")
        np.testing.assert_allclose(red.matrix, rho.matrix, atol=1e-12)

    def test_cc_pure_reduces_to_cc(self):
        red = partial_trace(presets.cc_purification().density(), ("A", "B"))
        np.testing.assert_allclose(red.matrix, presets.classically_correlated().matrix,
                                   atol=1e-12)

    def test_unknown_label_and_empty_keep(self):
        rho = presets.bell_pair().density()
        with pytest.raises(ValueError, match="unknown"):
            partial_trace(rho, "X")
        with pytest.raises(ValueError, match="non-empty"):
            partial_trace(rho, ())

    def test_trace_and_positivity_preserved(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            rho = random_density(rng, (("A", 2), ("B", 3), ("C", 2)))
            red = partial_trace(rho, ("A", "C"))
            assert abs(red.matrix.trace() - 1) < 1e-10
            assert np.linalg.eigvalsh(red.matrix)[0] >= -1e-9


class TestPurify:
    def test_maximally_mixed_gives_bell(self):
        psi = purify(presets.maximally_mixed("A", 2), "R")
        assert psi.layout.parts == (("A", 2), ("R", 2))
        np.testing.assert_allclose(psi.amplitudes, ket(1, 0, 0, 1), atol=1e-12)

    def test_pure_input_gets_trivial_purifier(self):
        rho = presets.basis_state((("A", 2),)).density()
        psi = purify(rho, "R")
        assert psi.layout.dim_of("R") == 1
        back = reduced_density(psi, "A")
        np.testing.assert_allclose(back.matrix, rho.matrix, atol=1e-10)

    def test_round_trip_random(self):
        rng = np.random.default_rng(7)
        rho = random_density(rng, (("A", 2), ("B", 2)))
        back = partial_trace(purify(rho, "R").density(), ("A", "B"))
        assert trace_distance(back, rho) < 1e-8

    def test_round_trip_sweep_up_to_dim8(self):
        rng = np.random.default_rng(2)
        shapes = [((("A", d),), None) for d in (2, 3, 5, 8)]
        shapes += [((("A", 2), ("B", 4)), 3), ((("A", 2), ("B", 2), ("C", 2)), None)]
        count = 0
        while count < 100:
            parts, rank = shapes[count % len(shapes)]
            rho = random_density(rng, parts, rank)
            back = partial_trace(purify(rho, "Z").density(), [l for l, _ in parts])
            assert trace_distance(back, rho) < 1e-8
            count += 1

    def test_label_collision_rejected(self):
        with pytest.raises(ValueError):
            purify(presets.maximally_mixed("A", 2), "A")


class TestHaarUnitary:
    @pytest.mark.parametrize("dim", [1, 2, 4, 16, 64])
    def test_unitarity(self, dim):
        w = haar_unitary(dim, np.random.default_rng(3))
        assert np.abs(w.conj().T @ w - np.eye(dim)).max() <= 1e-10

    def test_dim1_is_phase(self):
        w = haar_unitary(1, np.random.default_rng(4))
        assert abs(abs(w[0, 0]) - 1) < 1e-12

    def test_first_entry_second_moment(self):
        # Monte-Carlo oracle for the Haar moment E|W00|^2 = 1/d
        rng = np.random.default_rng(5)
        mean = np.mean([abs(haar_unitary(2, rng)[0, 0]) ** 2 for _ in range(10_000)])
        assert abs(mean - 0.5) < 0.02


class TestBlockMeasure:
    def test_product_state_identity_basis(self):
        psi = presets.basis_state((("A", 2), ("B", 2)))
        k, post, p = block_measure(psi, "A", np.eye(2), 1, np.random.default_rng(0))
        assert (k, p) == (0, 1.0)
        assert post.layout.parts == (("A1", 1), ("B", 2))
        np.testing.assert_allclose(post.amplitudes, [1, 0])

    def test_full_rank_block_is_no_measurement(self):
        psi = presets.bell_pair()
        k, post, p = block_measure(psi, "A", np.eye(2), 2, np.random.default_rng(0))
        assert k == 0 and abs(p - 1) < 1e-12
        np.testing.assert_allclose(post.amplitudes, psi.amplitudes, atol=1e-12)

    def test_bell_complete_measurement(self):
        # hand computation: outcomes 0/1 each with p = 1/2, post = |k⟩_B
        branches = block_branches(presets.bell_pair(), "A", np.eye(2), 1)
        assert len(branches) == 2
        for k, p, post in branches:
            assert abs(p - 0.5) < 1e-12
            expected = np.zeros(2)
            expected[k] = 1
            np.testing.assert_allclose(post.amplitudes, expected, atol=1e-12)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(6)
        psi = random_pure_state(rng, (("A", 6), ("B", 2)))
        for block in (1, 2, 3, 6):
            branches = block_branches(psi, "A", haar_unitary(6, rng), block)
            total = sum(p for _, p, _ in branches)
            assert abs(total - 1) < 1e-10

    def test_rejects_non_divisor(self):
        with pytest.raises(ValueError, match="divide"):
            block_measure(presets.bell_pair(), "A", np.eye(2), 3, np.random.default_rng(0))

    def test_zero_probability_branch_never_sampled(self):
        psi = presets.basis_state((("A", 2), ("B", 2)))  # branch 1 has p = 0
        rng = np.random.default_rng(8)
        for _ in range(64):
            k, post, p = block_measure(psi, "A", np.eye(2), 1, rng)
            assert k == 0
            assert np.isfinite(post.amplitudes).all()


class TestDistances:
    def test_fidelity_self(self):
        rho = random_density(np.random.default_rng(9), (("A", 4),))
        assert abs(fidelity(rho, rho) - 1) < 1e-9

    def test_fidelity_pure_vs_mixed(self):
        # oracle: ⟨0| I/2 |0⟩ = 1/2
        zero = presets.basis_state((("A", 2),)).density()
        assert abs(fidelity(zero, presets.maximally_mixed("A", 2)) - 0.5) < 1e-10

    def test_fidelity_orthogonal(self):
        zero = presets.basis_state((("A", 2),), 0).density()
        one = presets.basis_state((("A", 2),), 1).density()
        assert fidelity(zero, one) < 1e-12

    def test_trace_distance_cases(self):
        zero = presets.basis_state((("A", 2),), 0).density()
        one = presets.basis_state((("A", 2),), 1).density()
        mixed = presets.maximally_mixed("A", 2)
        assert trace_distance(zero, zero) == 0
        assert abs(trace_distance(zero, one) - 1) < 1e-12
        # eigenvalues of |0⟩⟨0| − I/2 are ±1/2
        assert abs(trace_distance(zero, mixed) - 0.5) < 1e-12

    def test_layout_mismatch(self):
        a = presets.maximally_mixed("A", 2)
        b = presets.maximally_mixed("B", 2)
        with pytest.raises(ValueError, match="mismatch"):
            fidelity(a, b)
        with pytest.raises(ValueError, match="mismatch"):
            trace_distance(a, b)

    def test_fuchs_van_de_graaf(self):
        rng = np.random.default_rng(10)
        for i in range(200):
            parts = (("A", 2), ("B", 2)) if i % 2 else (("A", 4),)
            rho = random_density(rng, parts, rank=rng.integers(1, 5))
            sigma = random_density(rng, parts, rank=rng.integers(1, 5))
            f = fidelity(rho, sigma)
            td = trace_distance(rho, sigma)
            assert 1 - math.sqrt(f) <= td + 1e-9
            assert td <= math.sqrt(1 - f) + 1e-9


class TestApplyChannel:
    def test_identity(self):
        rho = random_density(np.random.default_rng(11), (("A", 2), ("B", 2)))
        out = apply_channel(rho, ChannelSpec.identity("B", 2))
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-12)

    def test_full_trace_removes_subsystem(self):
        rho = random_density(np.random.default_rng(12), (("A", 2), ("B", 3)))
        out = apply_channel(rho, ChannelSpec.full_trace("B", 3))
        expected = partial_trace(rho, "A")
        assert out.layout.parts == (("A", 2), ("B", 1))
        np.testing.assert_allclose(
            out.matrix, expected.matrix, atol=1e-12
        )

    def test_dephasing_half_of_bell(self):
        # |i⟩ → |i⟩|i⟩ then discard the copy: hand-computed dephasing
        iso = np.zeros((4, 2), dtype=complex)
        iso[0, 0] = iso[3, 1] = 1.0
        deph = ChannelSpec("B", iso, "B", 2, 2)
        out = apply_channel(presets.bell_pair().density(), deph)
        np.testing.assert_allclose(out.matrix, np.diag([0.5, 0, 0, 0.5]), atol=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            apply_channel(presets.bell_pair().density(), ChannelSpec.identity("B", 3))

    def test_isometry_validation(self):
        with pytest.raises(ValueError, match="orthonormal"):
            ChannelSpec("B", np.ones((2, 2)), "B", 2, 1)


class TestPermuteAndFuse:
    def test_identity_permutation(self):
        psi = presets.cc_purification()
        out = permute_subsystems(psi, ("A", "B", "R"))
        np.testing.assert_array_equal(out.amplitudes, psi.amplitudes)

    def test_swap_symmetric_state(self):
        psi = presets.bell_pair()
        out = permute_subsystems(psi, ("B", "A"))
        np.testing.assert_allclose(out.amplitudes, psi.amplitudes, atol=1e-12)

    def test_swap_basis_state(self):
        psi = presets.basis_state((("A", 2), ("B", 2)), index=1)  # |01⟩
        out = permute_subsystems(psi, ("B", "A"))
        np.testing.assert_allclose(out.amplitudes, [0, 0, 1, 0])  # |10⟩

    def test_not_a_permutation(self):
        with pytest.raises(ValueError, match="permutation"):
            permute_subsystems(presets.bell_pair(), ("A", "A"))

    def test_reductions_invariant(self):
        rng = np.random.default_rng(13)
        rho = random_density(rng, (("A", 2), ("B", 2), ("C", 3)))
        moved = permute_subsystems(rho, ("C", "A", "B"))
        np.testing.assert_allclose(
            partial_trace(moved, ("A", "B")).matrix,
            partial_trace(rho, ("A", "B")).matrix,
            atol=1e-12,
        )

    def test_fuse_preserves_reductions(self):
        rng = np.random.default_rng(14)
        psi = random_pure_state(rng, (("A", 2), ("B", 3), ("C", 2)))
        fused = fuse_subsystems(psi, ("A", "C"), "AC")
        assert fused.layout.parts[0] == ("AC", 4)
        np.testing.assert_allclose(
            reduced_density(fused, "B").matrix,
            reduced_density(psi, "B").matrix,
            atol=1e-12,
        )


class TestValidation:
    def test_pure_state_norm_enforced(self):
        with pytest.raises(ValueError, match="norm"):
            PureState(SubsystemLayout((("A", 2),)), np.array([1.0, 1.0]))

    def test_density_trace_enforced(self):
        with pytest.raises(ValueError, match="trace"):
            DensityOperator(SubsystemLayout((("A", 2),)), np.eye(2))

    def test_density_hermiticity_enforced(self):
        mat = np.array([[0.5, 0.5], [0.0, 0.5]])
        with pytest.raises(ValueError, match="Hermitian"):
            DensityOperator(SubsystemLayout((("A", 2),)), mat)

    def test_density_positivity_enforced(self):
        mat = np.diag([1.1, -0.1])
        with pytest.raises(ValueError, match="eigenvalue"):
            DensityOperator(SubsystemLayout((("A", 2),)), mat)

    def test_states_are_frozen(self):
        psi = presets.bell_pair()
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 0
