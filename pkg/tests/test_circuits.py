import math

import numpy as np
import pytest
from conftest import dense_pauli, mixed_unitary_action

from noisyrad.channels import dephasing, depolarizing, same_up_to_phase, unitary_channel
from noisyrad.circuits import (
    CircuitInstance,
    CircuitStructure,
    Slot,
    class_compatibility,
    default_observable,
    encode,
    enumerate_class,
    evaluate_f,
    fully_noisy_class,
    function_table,
    gate_set,
    make_samples,
    parallel_pair,
    placement_compatibility,
    resolve_epsilons,
    sample_class,
    samples_from_inputs,
    single_slot,
    two_layer,
    unique_ptms,
)
from noisyrad.errors import DimensionError, ParameterError, ResourceCapError, UnsupportedEnumeration
from noisyrad.pauli import embed_operator, pauli_observable, rep_vector


def _key(m):
    return (np.round(m, 10) + 0.0).tobytes()


def dense_run(inst: CircuitInstance, rho: np.ndarray) -> np.ndarray:
    """Simulate an instance on a density matrix, boundary by boundary."""
    st = inst.structure
    n = st.n0
    g = 0
    for b in range(st.depth + 1):
        for (pb, q), ch in inst.placements:
            if pb == b:
                us = [embed_operator(u, [q], n) for u in ch.unitaries]
                rho = mixed_unitary_action(us, ch.probs)(rho)
        if b < st.depth:
            for slot in st.layers[b]:
                u = embed_operator(slot.gates.unitary(inst.gates[g]), slot.qubits, n)
                rho = u @ rho @ u.conj().T
                g += 1
    return rho


class TestStructure:
    def test_default_positions_cover_every_boundary_wire(self):
        st = two_layer()
        assert st.noise_positions == ((0, 0), (1, 0), (2, 0))
        assert parallel_pair().noise_positions == ((0, 0), (0, 1), (1, 0), (1, 1))

    def test_overlapping_slots_rejected(self):
        with pytest.raises(DimensionError):
            CircuitStructure(2, ((Slot((0,), "clifford1"), Slot((0,), "clifford1")),))

    def test_arity_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            CircuitStructure(2, ((Slot((0,), "cnot2"),),))

    def test_position_outside_rejected(self):
        with pytest.raises(DimensionError):
            CircuitStructure(1, ((Slot((0,), "clifford1"),),), ((3, 0),))

    def test_unknown_gate_set(self):
        with pytest.raises(ParameterError):
            gate_set("toffoli3")

    @pytest.mark.parametrize("st", [single_slot(), two_layer("pauli1"), parallel_pair()])
    def test_dict_roundtrip(self, st):
        assert CircuitStructure.from_dict(st.to_dict()) == st

    def test_malformed_document(self):
        with pytest.raises(ParameterError):
            CircuitStructure.from_dict({"layers": []})


class TestEnumeration:
    def test_single_slot_sizes(self):
        st = single_slot()
        assert len(list(enumerate_class(st))) == 24
        assert len(list(enumerate_class(st, 1, depolarizing(0.1)))) == 48
        assert st.class_size(1) == 48

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_multiset_count(self, k):
        st = two_layer("pauli1")
        expected = 16 * math.comb(3 + k - 1, k)
        assert len(list(enumerate_class(st, k, depolarizing(0.1)))) == expected == st.class_size(k)

    def test_noiseless_ptms_are_signed_permutations(self):
        for inst in enumerate_class(single_slot()):
            m = inst.ptm_matrix()
            assert np.allclose(np.abs(m).sum(axis=1), 1)

    def test_k_requires_noise(self):
        with pytest.raises(ParameterError):
            list(enumerate_class(single_slot(), 1))

    def test_parameterized_cannot_be_enumerated(self):
        with pytest.raises(UnsupportedEnumeration):
            list(enumerate_class(single_slot("param_rot")))

    def test_sample_class_is_seeded(self):
        st = single_slot("param_rot")
        a = sample_class(st, 1, depolarizing(0.1), 20, seed=3)
        b = sample_class(st, 1, depolarizing(0.1), 20, seed=3)
        assert [x.key() for x in a] == [y.key() for y in b]
        assert all(x.k == 1 for x in a)

    @pytest.mark.parametrize("st", [single_slot(), two_layer(), parallel_pair(), two_layer("param_rot")])
    def test_ptm_matches_dense_simulation(self, st, rng):
        insts = sample_class(st, 2, depolarizing(0.07), 10, seed=5)
        psi = rng.normal(size=2**st.n0) + 1j * rng.normal(size=2**st.n0)
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        for inst in insts:
            got = inst.ptm_matrix() @ rep_vector(rho).entries
            np.testing.assert_allclose(got, rep_vector(dense_run(inst, rho)).entries, atol=1e-12)

    def test_entangling_slot(self, rng):
        st = CircuitStructure(2, ((Slot((1, 0), "entangler2"),), (Slot((0,), "clifford1"), Slot((1,), "pauli1"))))
        rho = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
        for inst in sample_class(st, 1, depolarizing(0.1), 8, seed=2):
            np.testing.assert_allclose(
                inst.ptm_matrix() @ rep_vector(rho).entries, rep_vector(dense_run(inst, rho)).entries, atol=1e-12
            )


class TestEncoding:
    def test_basis_zero(self):
        np.testing.assert_allclose(encode(0, "basis", 1).entries, [0.5, 0, 0, 0.5])

    def test_angle_half_pi_is_plus(self):
        np.testing.assert_allclose(encode([np.pi / 2], "angle", 1).entries, [0.5, 0.5, 0, 0], atol=1e-15)

    def test_angle_zero_equals_basis_zero(self):
        np.testing.assert_allclose(encode([0.0], "angle", 1).entries, encode(0, "basis", 1).entries)

    def test_basis_bits(self):
        np.testing.assert_allclose(encode([1, 0], "basis", 2).entries, encode(2, "basis", 2).entries)

    @pytest.mark.parametrize("x, scheme", [([0.1, 0.2], "angle"), (4, "basis"), ([1, 2], "basis")])
    def test_bad_inputs(self, x, scheme):
        with pytest.raises(DimensionError):
            encode(x, scheme, 1 if scheme == "angle" else 2)

    def test_unknown_scheme(self):
        with pytest.raises(ParameterError):
            encode(0, "amplitude", 1)

    def test_make_samples_is_seeded(self):
        a = make_samples(5, "angle", 2, 11)
        b = make_samples(5, "angle", 2, 11)
        assert a.inputs == b.inputs
        assert a.matrix().shape == (16, 5)


class TestEvaluation:
    def _single(self, gate, placements=()):
        st = single_slot("pauli1")
        idx = next(i for i, g in enumerate(st.layers[0][0].gates.gates) if same_up_to_phase(g, gate))
        return CircuitInstance(st, (idx,), placements)

    def test_identity(self):
        inst = self._single(np.eye(2))
        assert evaluate_f(inst, encode(0, "basis", 1), pauli_observable("Z")) == pytest.approx(1)

    def test_x_gate(self):
        inst = self._single(dense_pauli("X"))
        assert evaluate_f(inst, encode(0, "basis", 1), pauli_observable("Z")) == pytest.approx(-1)

    def test_x_gate_after_depolarizing(self):
        inst = self._single(dense_pauli("X"), (((0, 0), depolarizing(0.1)),))
        assert evaluate_f(inst, encode(0, "basis", 1), pauli_observable("Z")) == pytest.approx(-0.6)

    def test_function_table_identity_class(self):
        st = single_slot("identity1")
        f = function_table(enumerate_class(st), samples_from_inputs([0, 1], "basis", 1), pauli_observable("Z"))
        np.testing.assert_allclose(f, [[1, -1]])

    def test_clifford_column_values(self):
        f = function_table(enumerate_class(single_slot()), samples_from_inputs([0], "basis", 1), default_observable(1))
        assert set(np.round(f.ravel(), 12)) == {-1.0, 0.0, 1.0}

    def test_noise_scales_entries(self):
        st = single_slot()
        s = samples_from_inputs([0, 1], "basis", 1)
        eps = 0.1
        f0 = function_table(enumerate_class(st), s, pauli_observable("Z"))
        f1 = function_table(enumerate_class(st, 1, depolarizing(eps)), s, pauli_observable("Z"))
        # rows come gate-major; each gate has one row per position, all scaled by 1 - 4 eps
        np.testing.assert_allclose(f1, np.repeat(f0, 2, axis=0) * (1 - 4 * eps), atol=1e-12)

    def test_values_bounded_by_one(self):
        st = parallel_pair()
        s = make_samples(4, "angle", 2, 0)
        f = function_table(enumerate_class(st, 1, depolarizing(0.05)), s, default_observable(2))
        assert np.abs(f).max() <= 1 + 1e-12

    def test_table_cap(self):
        with pytest.raises(ResourceCapError):
            function_table(enumerate_class(single_slot()), make_samples(3, "basis", 1, 0), pauli_observable("Z"), cap=10)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            function_table(enumerate_class(single_slot()), make_samples(3, "basis", 2, 0), pauli_observable("Z"))


class TestConvexMixture:
    @pytest.mark.parametrize("noise", [depolarizing(0.08), dephasing(0.2)])
    @pytest.mark.parametrize("st", [single_slot(), two_layer(), parallel_pair()])
    def test_extra_placement_is_mixture_of_substitutions(self, st, noise):
        for inst in sample_class(st, 2, noise, 10, seed=1):
            (pos, ch) = inst.placements[-1]
            base = inst.without_placement(inst.k - 1)
            expected = (1 - ch.probs.sum()) * base.ptm_matrix()
            for u, p in zip(ch.unitaries, ch.probs):
                expected = expected + p * base.with_placement(pos, unitary_channel(u)).ptm_matrix()
            np.testing.assert_allclose(inst.ptm_matrix(), expected, atol=1e-12)

    def test_substitutions_stay_in_class_single_slot(self):
        st = single_slot()
        noise = depolarizing(0.1)
        k0 = unique_ptms(enumerate_class(st))
        keys = {_key(m) for m in k0}
        for inst in enumerate_class(st):
            for pos in st.noise_positions:
                for u in noise.unitaries:
                    m = inst.with_placement(pos, unitary_channel(u)).ptm_matrix()
                    assert _key(m) in keys

    def test_substitutions_stay_in_class_spot_checks(self):
        noise = depolarizing(0.1)
        rng = np.random.default_rng(0)
        for st in (two_layer(), parallel_pair()):
            keys = {_key(m) for m in unique_ptms(enumerate_class(st))}
            insts = list(enumerate_class(st))
            for _ in range(100):
                inst = insts[rng.integers(len(insts))]
                pos = st.noise_positions[rng.integers(len(st.noise_positions))]
                u = noise.unitaries[rng.integers(3)]
                m = inst.with_placement(pos, unitary_channel(u)).ptm_matrix()
                assert _key(m) in keys


class TestCompatibility:
    def test_clifford_classes_accept_pauli_noise(self):
        for st in (single_slot(), two_layer(), parallel_pair(), single_slot("pauli1")):
            assert class_compatibility(st, depolarizing(0.1))
            assert class_compatibility(st, dephasing(0.1))

    def test_clifford_t_is_not_closed(self):
        res = class_compatibility(single_slot("clifford_t1"), depolarizing(0.1))
        assert not res

    def test_identity_slot_cannot_absorb(self):
        assert not placement_compatibility(single_slot("identity1"), (0, 0), depolarizing(0.1))

    def test_zero_noise_always_compatible(self):
        assert placement_compatibility(single_slot("identity1"), (0, 0), depolarizing(0.0))

    def test_resolve_epsilons(self):
        st = parallel_pair()
        assert resolve_epsilons(st, 0.1) == [[0.1, 0.1]]
        assert resolve_epsilons(two_layer(), [[0.1], [0.2]]) == [[0.1], [0.2]]
        with pytest.raises(ParameterError):
            resolve_epsilons(st, [[0.1]])

    def test_fully_noisy_places_noise_after_each_slot(self):
        st = two_layer()
        insts = list(fully_noisy_class(st, [[0.05], [0.1]]))
        assert len(insts) == 24 * 24
        assert [p for p, _ in insts[0].placements] == [(1, 0), (2, 0)]
        assert [ch.epsilon for _, ch in insts[0].placements] == [0.05, 0.1]
