import numpy as np
import pytest

import qpmkit as qk
from qpmkit.chain import (
    ChainKind,
    OperatorSubspace,
    QuantumChain,
    SuperOperator,
    hermitian_basis,
)
from qpmkit.errors import (
    BasisInsufficiencyError,
    SubspaceError,
    ValidationError,
)

from helpers import (
    random_hmm,
    random_kraus_family,
    random_local_qrw,
    random_quantum_density,
    random_unitary,
    single_letter_chain,
)
from oracles import hmm_path_prob, qrw_collapse_prob

AB = qk.Alphabet(("a", "b"))


class TestHermitianBasis:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_orthonormal_and_complete(self, n):
        basis = hermitian_basis(n)
        assert len(basis) == n * n
        for i, left in enumerate(basis):
            for j, right in enumerate(basis):
                inner = qk.hermitian_inner(left, right)
                assert inner == pytest.approx(1.0 if i == j else 0.0, abs=1e-12)


class TestOperatorSubspace:
    def test_expand_reconstruct_round_trip(self, rng):
        sub = OperatorSubspace.full(3)
        raw = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        mat = (raw + raw.conj().T) / 2
        coords = sub.expand(mat)
        assert np.allclose(sub.reconstruct(coords), mat, atol=1e-12)

    def test_membership_enforced(self):
        sub = OperatorSubspace.diagonal(2)
        with pytest.raises(SubspaceError):
            sub.expand(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_rejects_dependent_basis(self):
        with pytest.raises(ValidationError):
            OperatorSubspace([np.eye(2), 2 * np.eye(2)])

    def test_gram_norm_matches_direct(self, rng):
        sub = OperatorSubspace.diagonal(3)
        coords = rng.normal(size=3)
        direct = np.linalg.norm(sub.reconstruct(coords))
        assert sub.norm(coords) == pytest.approx(direct)


class TestSuperOperator:
    def test_from_action_reproduces_matrix(self, rng):
        sub = OperatorSubspace.full(2)
        u = random_unitary(rng, 2)
        op = SuperOperator.from_action(sub, lambda q: u @ q @ u.conj().T)
        rebuilt = SuperOperator.from_action(sub, op.apply)
        assert np.allclose(rebuilt.matrix, op.matrix, atol=1e-10)

    def test_coordinate_action_matches_matrix_action(self, rng):
        sub = OperatorSubspace.full(2)
        u = random_unitary(rng, 2)
        op = SuperOperator.from_action(sub, lambda q: u @ q @ u.conj().T)
        density = random_quantum_density(rng, 2).matrix
        via_coords = sub.reconstruct(op.apply_coords(sub.expand(density)))
        assert np.allclose(via_coords, u @ density @ u.conj().T, atol=1e-10)


class TestChainEval:
    def test_empty_word_is_one(self, hmm2):
        assert qk.chain_eval(qk.hmm_to_qmc(hmm2), "") == pytest.approx(1.0)

    def test_hmm_chain_matches_path_enumeration(self, hmm2):
        chain = qk.hmm_to_qmc(hmm2)
        for word in qk.words_up_to(AB, 5):
            assert qk.chain_eval(chain, word) == pytest.approx(
                hmm_path_prob(hmm2, word), abs=1e-10
            )

    def test_qrw_chain_matches_wave_oracle(self, qrw_hadamard):
        chain = qk.qrw_to_qmc(qrw_hadamard)
        for word in qk.words_up_to(AB, 4):
            assert qk.chain_eval(chain, word) == pytest.approx(
                qrw_collapse_prob(qrw_hadamard, word), abs=1e-10
            )

    @pytest.mark.parametrize("depth", [1, 2, 3, 4])
    def test_total_mass_per_length(self, hmm2, qrw_hadamard, depth):
        for chain in (qk.hmm_to_qmc(hmm2), qk.qrw_to_qmc(qrw_hadamard)):
            total = sum(
                qk.chain_eval(chain, w) for w in qk.words_of_length(chain.alphabet, depth)
            )
            assert total == pytest.approx(1.0, abs=1e-9)


class TestUnitaryToQmc:
    def test_identity_evolution(self, rng):
        density = random_quantum_density(rng, 2)
        chain = qk.unitary_to_qmc(np.eye(2), density)
        for t in range(4):
            assert qk.chain_eval(chain, ("a",) * t) == pytest.approx(1.0, abs=1e-12)

    def test_trace_preserved_under_conjugation(self, rng):
        u = random_unitary(rng, 3)
        chain = qk.unitary_to_qmc(u, random_quantum_density(rng, 3))
        report = qk.validate_chain(chain)
        assert report.ok

    def test_bit_flip(self):
        density = qk.Density.quantum(np.diag([1.0, 0.0]).astype(complex))
        sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]])
        chain = qk.unitary_to_qmc(sigma_x, density)
        flipped = chain.letter_ops["a"].apply(density.matrix)
        assert np.allclose(flipped, np.diag([0.0, 1.0]))

    def test_rejects_non_unitary(self, rng):
        with pytest.raises(ValidationError):
            qk.unitary_to_qmc(2 * np.eye(2), random_quantum_density(rng, 2))


class TestPovmToQmc:
    def test_projective_measurement_is_deterministic(self):
        projector = np.diag([1.0, 0.0]).astype(complex)
        chain = qk.povm_to_qmc(
            {"p": projector, "q": np.eye(2) - projector},
            qk.Density.quantum(projector),
        )
        assert qk.chain_eval(chain, "p") == pytest.approx(1.0)
        assert qk.chain_eval(chain, "q") == pytest.approx(0.0, abs=1e-12)

    def test_scalar_family_is_uniform_forever(self, rng):
        scale = np.eye(2) / np.sqrt(2)
        chain = qk.povm_to_qmc({"a": scale, "b": scale}, random_quantum_density(rng, 2))
        for word in qk.words_up_to(AB, 3):
            assert qk.chain_eval(chain, word) == pytest.approx(0.5 ** len(word), abs=1e-12)

    def test_random_family_probabilities_sum_to_one(self, rng):
        family = random_kraus_family(rng, 2, 3)
        for _ in range(5):
            density = random_quantum_density(rng, 2).matrix
            total = sum(
                float(np.trace(m @ density @ m.conj().T).real) for m in family.values()
            )
            assert total == pytest.approx(1.0, abs=1e-10)
        chain = qk.povm_to_qmc(family, random_quantum_density(rng, 2))
        assert qk.validate_chain(chain).ok

    def test_incomplete_family_rejected(self, rng):
        with pytest.raises(ValidationError):
            qk.povm_to_qmc({"a": np.eye(2) * 0.5}, random_quantum_density(rng, 2))


class TestQrwToQmc:
    def test_permutation_walk_first_symbol(self):
        nodes = qk.Alphabet(("a", "b"))
        qrw = qk.QrwParam(
            nodes,
            (("a", "b"), ("b", "a")),
            ("c",),
            np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
            np.array([1.0, 0.0], dtype=complex),
        )
        chain = qk.qrw_to_qmc(qrw)
        assert qk.chain_eval(chain, "b") == pytest.approx(1.0)

    def test_summed_operators_preserve_trace(self, rng):
        chain = qk.qrw_to_qmc(random_local_qrw(rng, 3, 2))
        for _ in range(5):
            raw = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
            mat = (raw + raw.conj().T) / 2
            coords = chain.subspace.expand(mat)
            image = chain.subspace.reconstruct(coords @ chain.total_matrix)
            assert np.trace(image).real == pytest.approx(np.trace(mat).real, abs=1e-9)

    def test_random_walk_matches_oracle(self, rng):
        qrw = random_local_qrw(rng, 2, 2)
        chain = qk.qrw_to_qmc(qrw)
        for word in qk.words_up_to(qrw.nodes, 4):
            assert qk.chain_eval(chain, word) == pytest.approx(
                qrw_collapse_prob(qrw, word), abs=1e-10
            )

    def test_invalid_walk_rejected(self, qrw_hadamard):
        broken = qk.QrwParam(
            qrw_hadamard.nodes,
            qrw_hadamard.edges,
            qrw_hadamard.coins,
            qrw_hadamard.unitary * 1.01,
            qrw_hadamard.wave,
        )
        with pytest.raises(ValidationError):
            qk.qrw_to_qmc(broken)


class TestHmmToQmc:
    def test_one_state_scales_by_emission(self):
        hmm = qk.HmmParam(("s0",), AB, [[0.3, 0.7]], [1.0], [[1.0]])
        chain = qk.hmm_to_qmc(hmm)
        assert np.allclose(chain.letter_ops["a"].matrix, [[0.3]])
        assert qk.chain_eval(chain, "ab") == pytest.approx(0.21)

    def test_matches_forward_values(self, hmm2):
        chain = qk.hmm_to_qmc(hmm2)
        for word in qk.words_up_to(AB, 5):
            assert qk.chain_eval(chain, word) == pytest.approx(
                qk.hmm_eval(hmm2, word), abs=1e-12
            )

    def test_operators_preserve_nonnegative_diagonals(self, hmm2, rng):
        chain = qk.hmm_to_qmc(hmm2)
        for _ in range(10):
            coords = rng.random(2)
            for op in chain.letter_ops.values():
                assert op.apply_coords(coords).min() >= -1e-12


class TestFinitaryToQpm:
    def test_coin_collapses_to_one_dimension(self, coin_finitary):
        chain = qk.finitary_to_qpm(coin_finitary)
        assert chain.subspace.dim == 1
        assert np.allclose(chain.letter_ops["a"].matrix, [[0.5]])
        assert np.allclose(chain.letter_ops["b"].matrix, [[0.5]])
        assert np.allclose(chain.initial.matrix, [[1.0]])

    def test_reproduces_hmm_process(self, hmm2):
        chain = qk.finitary_to_qpm(qk.hmm_to_finitary(hmm2))
        for word in qk.words_up_to(AB, 5):
            assert qk.chain_eval(chain, word) == pytest.approx(
                qk.hmm_eval(hmm2, word), abs=1e-9
            )

    def test_initial_trace_is_one(self, hmm3_rank3):
        chain = qk.finitary_to_qpm(qk.hmm_to_finitary(hmm3_rank3))
        assert np.trace(chain.initial.matrix).real == pytest.approx(1.0, abs=1e-8)

    def test_validates_as_predictor_model(self, hmm2):
        chain = qk.finitary_to_qpm(qk.hmm_to_finitary(hmm2))
        report = qk.validate_chain(chain)
        assert report.ok
        assert report.horizon == qk.DEFAULTS.qpm_horizon

    def test_insufficient_row_basis_is_detected(self):
        # a period-4 cycle labeled aabb: at horizon 2 the selected rows
        # cannot express the b-shift of the aa row, at the declared
        # dimension the conversion is exact
        cycle = qk.ffmc_to_hmm(
            ("s0", "s1", "s2", "s3"),
            {"s0": "a", "s1": "a", "s2": "b", "s3": "b"},
            [1.0, 0.0, 0.0, 0.0],
            [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0]],
            AB,
        )
        finitary = qk.hmm_to_finitary(cycle)
        with pytest.raises(BasisInsufficiencyError):
            qk.finitary_to_qpm(finitary, horizon=2)
        chain = qk.finitary_to_qpm(finitary, horizon=4)
        for word in qk.words_up_to(AB, 5):
            assert qk.chain_eval(chain, word) == pytest.approx(
                qk.hmm_eval(cycle, word), abs=1e-9
            )

    def test_rejects_non_process_parametrization(self):
        broken = qk.FinitaryParam(
            AB, {"a": [[0.9]], "b": [[0.4]]}, [1.0], [1.0], standard_form=False
        )
        with pytest.raises(ValidationError):
            qk.finitary_to_qpm(broken)


class TestQpmToFinitary:
    def test_hmm_round_trip_preserves_process(self, hmm2):
        finitary = qk.qpm_to_finitary(qk.hmm_to_qmc(hmm2))
        for word in qk.words_up_to(AB, 5):
            assert qk.finitary_eval(finitary, word) == pytest.approx(
                qk.hmm_eval(hmm2, word), abs=1e-10
            )

    def test_qrw_dimension_is_edge_count_squared(self, qrw_hadamard):
        chain = qk.qrw_to_qmc(qrw_hadamard)
        finitary = qk.qpm_to_finitary(chain)
        assert finitary.dimension == qrw_hadamard.dim**2 == 16
        for word in qk.words_up_to(AB, 3):
            assert qk.finitary_eval(finitary, word) == pytest.approx(
                qk.chain_eval(chain, word), abs=1e-12
            )

    def test_identity_chain(self):
        chain = single_letter_chain(np.eye(2), [0.5, 0.5])
        finitary = qk.qpm_to_finitary(chain)
        assert np.allclose(finitary.letter_matrices["a"], np.eye(2))
        for t in range(5):
            assert qk.finitary_eval(finitary, ("a",) * t) == pytest.approx(1.0)

    def test_round_trip_through_row_basis_preserves_process(self, hmm2):
        chain = qk.finitary_to_qpm(qk.hmm_to_finitary(hmm2))
        finitary = qk.qpm_to_finitary(chain)
        rebuilt = qk.finitary_to_qpm(finitary)
        for word in qk.words_up_to(AB, 5):
            assert qk.chain_eval(rebuilt, word) == pytest.approx(
                qk.hmm_eval(hmm2, word), abs=1e-9
            )


class TestValidateChain:
    def test_hmm_chain_is_clean(self, hmm2):
        report = qk.validate_chain(qk.hmm_to_qmc(hmm2))
        assert report.ok
        assert report.violations == []

    def test_scaled_operator_breaks_trace_preservation(self, hmm2):
        chain = qk.hmm_to_qmc(hmm2)
        scaled = QuantumChain(
            chain.alphabet,
            chain.subspace,
            {
                "a": SuperOperator(chain.subspace, chain.letter_ops["a"].matrix * 1.1),
                "b": chain.letter_ops["b"],
            },
            chain.initial,
            ChainKind.QMC,
        )
        report = qk.validate_chain(scaled)
        assert any(v.code == "trace-preservation" for v in report.violations)

    def test_signed_density_fails_as_markov_chain(self):
        diag = np.array([-1 / 3, 1 / 3, 1 / 3, 1 / 3, 1 / 3])
        sub = OperatorSubspace.diagonal(5)
        chain = QuantumChain(
            qk.Alphabet(("a",)),
            sub,
            {"a": SuperOperator(sub, np.eye(5))},
            qk.Density(np.diag(diag).astype(complex), qk.DensityKind.QUANTUM),
            ChainKind.QMC,
        )
        report = qk.validate_chain(chain)
        assert any(v.code == "initial-positivity" for v in report.violations)

    def test_signed_density_passes_as_predictor_model(self):
        diag = np.array([-1 / 3, 1 / 3, 1 / 3, 1 / 3, 1 / 3])
        chain = single_letter_chain(np.eye(5), diag, kind=ChainKind.QPM)
        report = qk.validate_chain(chain)
        assert report.ok
        assert report.horizon == qk.DEFAULTS.qpm_horizon

    def test_word_probability_window_violations_detected(self):
        ops = {"a": np.array([[1.2, 0.0], [0.0, 0.3]]), "b": np.array([[-0.2, 0.0], [0.0, 0.7]])}
        sub = OperatorSubspace.diagonal(2)
        chain = QuantumChain(
            AB,
            sub,
            {sym: SuperOperator(sub, mat) for sym, mat in ops.items()},
            qk.Density.generalized(np.diag([1.0, 0.0]).astype(complex)),
            ChainKind.QPM,
        )
        report = qk.validate_chain(chain, horizon=2)
        assert any(v.code == "word-probability" for v in report.violations)

    def test_negative_diagonal_operator_is_flagged_exactly(self):
        ops = {
            "a": np.array([[-0.5, 0.0], [0.0, 0.5]]),
            "b": np.array([[1.5, 0.0], [0.0, 0.5]]),
        }
        sub = OperatorSubspace.diagonal(2)
        chain = QuantumChain(
            AB,
            sub,
            {sym: SuperOperator(sub, mat) for sym, mat in ops.items()},
            qk.Density.quantum(np.diag([0.5, 0.5]).astype(complex)),
            ChainKind.QMC,
        )
        report = qk.validate_chain(chain)
        assert any(v.code == "positivity" for v in report.violations)

    def test_kraus_constructions_prove_complete_positivity(self, rng):
        chain = qk.povm_to_qmc(random_kraus_family(rng, 2, 2), random_quantum_density(rng, 2))
        report = qk.validate_chain(chain)
        assert report.ok
        assert any("completely positive" in note for note in report.evidence)

    def test_positive_but_not_completely_positive_map_is_evidence_only(self, rng):
        # reduction-style map Q -> (tr Q) I - Q: positive on H_2, Choi indefinite
        sub = OperatorSubspace.full(2)
        op = SuperOperator.from_action(
            sub, lambda q: np.trace(q) * np.eye(2) - q
        )
        chain = QuantumChain(
            qk.Alphabet(("a",)),
            sub,
            {"a": op},
            random_quantum_density(rng, 2),
            ChainKind.QMC,
        )
        report = qk.validate_chain(chain, positivity_samples=300)
        assert report.ok
        assert any("unproven" in note for note in report.evidence)

    def test_genuinely_non_positive_map_is_caught(self, rng):
        # Q -> 2 Q - (tr Q)/2 I is trace-preserving on H_2 but maps pure
        # states to indefinite matrices
        sub = OperatorSubspace.full(2)
        op = SuperOperator.from_action(
            sub, lambda q: 2.0 * q - (np.trace(q) / 2.0) * np.eye(2)
        )
        chain = QuantumChain(
            qk.Alphabet(("a",)),
            sub,
            {"a": op},
            random_quantum_density(rng, 2),
            ChainKind.QMC,
        )
        report = qk.validate_chain(chain, positivity_samples=200)
        assert any(v.code == "positivity" for v in report.violations)

    def test_sampling_without_identity_in_subspace(self, rng):
        # one-dimensional subspace: rejection sampling, no identity shift
        sub = OperatorSubspace([np.diag([1.0, 0.0]).astype(complex)])
        good = QuantumChain(
            qk.Alphabet(("a", "b")),
            sub,
            {
                "a": SuperOperator(sub, np.array([[0.6]])),
                "b": SuperOperator(sub, np.array([[0.4]])),
            },
            qk.Density.quantum(np.diag([1.0, 0.0]).astype(complex)),
            ChainKind.QMC,
        )
        report = qk.validate_chain(good, positivity_samples=100)
        assert report.ok
        bad = QuantumChain(
            qk.Alphabet(("a", "b")),
            sub,
            {
                "a": SuperOperator(sub, np.array([[1.5]])),
                "b": SuperOperator(sub, np.array([[-0.5]])),
            },
            qk.Density.quantum(np.diag([1.0, 0.0]).astype(complex)),
            ChainKind.QMC,
        )
        report = qk.validate_chain(bad, positivity_samples=100)
        assert any(v.code == "positivity" for v in report.violations)

    def test_as_qpm_relabels_markov_chains(self, hmm2):
        chain = qk.hmm_to_qmc(hmm2)
        relabeled = qk.as_qpm(chain)
        assert relabeled.kind is ChainKind.QPM
        assert qk.as_qpm(relabeled) is relabeled
        for word in qk.words_up_to(AB, 3):
            assert qk.chain_eval(relabeled, word) == pytest.approx(
                qk.chain_eval(chain, word)
            )

    def test_intermediate_subspace_sampling_paths(self, rng):
        # span{I, sigma_x} contains the identity, enabling shifted sampling
        basis = [np.eye(2, dtype=complex), np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)]
        sub = OperatorSubspace(basis)
        good = QuantumChain(
            qk.Alphabet(("a",)),
            sub,
            {"a": SuperOperator(sub, np.diag([1.0, 0.5]))},
            qk.Density.quantum(np.eye(2, dtype=complex) / 2),
            ChainKind.QMC,
        )
        report = qk.validate_chain(good, positivity_samples=300)
        assert report.ok
        bad = QuantumChain(
            qk.Alphabet(("a",)),
            sub,
            {"a": SuperOperator(sub, np.diag([1.0, 1.5]))},
            qk.Density.quantum(np.eye(2, dtype=complex) / 2),
            ChainKind.QMC,
        )
        report = qk.validate_chain(bad, positivity_samples=300)
        assert any(v.code == "positivity" for v in report.violations)


class TestConversionTriangle:
    def test_all_routes_define_the_same_process(self, rng):
        for _ in range(5):
            hmm = random_hmm(rng)
            finitary = qk.hmm_to_finitary(hmm)
            markov = qk.hmm_to_qmc(hmm)
            predictor = qk.finitary_to_qpm(finitary)
            for word in qk.words_up_to(hmm.alphabet, 4):
                base = qk.hmm_eval(hmm, word)
                assert qk.finitary_eval(finitary, word) == pytest.approx(base, abs=1e-9)
                assert qk.chain_eval(markov, word) == pytest.approx(base, abs=1e-9)
                assert qk.chain_eval(predictor, word) == pytest.approx(base, abs=1e-9)

    def test_trace_preservation_on_every_basis_element(self, rng):
        chains = [
            qk.hmm_to_qmc(random_hmm(rng)),
            qk.qrw_to_qmc(random_local_qrw(rng, 2, 2)),
        ]
        for chain in chains:
            drift = chain.total_matrix @ chain.subspace.traces - chain.subspace.traces
            assert np.max(np.abs(drift)) <= 1e-10
