import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from oracles import dense_expectation, outcome_distribution
from sttuep.qsim import (
    BasisString,
    PauliObservable,
    StateVector,
    expectation,
    haar_random_state,
    named_state,
    outcome_eigenvalues,
    rotate,
    sample_batch,
    sample_in_basis,
)

S2 = 1.0 / np.sqrt(2.0)


def random_observable(n, rng, max_weight=None):
    weight = int(rng.integers(1, (max_weight or n) + 1))
    support = rng.choice(n, size=weight, replace=False)
    return PauliObservable(n, {int(q): "XYZ"[rng.integers(3)] for q in support})


class TestStateConstruction:
    def test_haar_single_qubit_is_unit_norm(self):
        state = haar_random_state(1, seed=5)
        assert state.amplitudes.shape == (2,)
        assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0, abs=1e-12)

    def test_haar_is_deterministic_per_seed(self):
        a = haar_random_state(4, seed=11)
        b = haar_random_state(4, seed=11)
        np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
        assert not np.array_equal(a.amplitudes, haar_random_state(4, seed=12).amplitudes)

    def test_haar_marginal_population(self):
        # |a_0|^2 ~ Beta(1, 3) for d = 4: mean 1/4, variance 3/80
        rng = np.random.default_rng(0)
        pops = np.array([abs(haar_random_state(2, rng).amplitudes[0]) ** 2 for _ in range(10_000)])
        se = np.sqrt(3 / 80 / pops.size)
        assert abs(pops.mean() - 0.25) < 3 * se

    @pytest.mark.parametrize("n", [0, 25])
    def test_haar_rejects_out_of_range(self, n):
        with pytest.raises(ValueError):
            haar_random_state(n, seed=0)

    def test_named_states(self):
        np.testing.assert_allclose(named_state("all_zero", 2).amplitudes, [1, 0, 0, 0])
        np.testing.assert_allclose(named_state("ghz", 2).amplitudes, [S2, 0, 0, S2])
        np.testing.assert_allclose(named_state("plus_all", 1).amplitudes, [S2, S2])
        with pytest.raises(ValueError):
            named_state("w_state", 3)

    def test_state_validation(self):
        with pytest.raises(ValueError):
            StateVector(2, np.ones(3))
        with pytest.raises(ValueError):
            StateVector(1, np.array([1.0, 1.0]))

    def test_state_is_immutable(self):
        state = named_state("ghz", 2)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0.0

    @pytest.mark.parametrize("kind", ["all_zero", "ghz", "plus_all"])
    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_named_states_normalized(self, kind, n):
        assert np.linalg.norm(named_state(kind, n).amplitudes) == pytest.approx(1.0, abs=1e-10)


class TestObservables:
    def test_weight_and_support(self):
        obs = PauliObservable(5, {3: "z", 1: "X"})
        assert obs.support == (1, 3)
        assert obs.weight == 2
        assert obs.label() == "IXIZI"
        assert PauliObservable.from_string("IXIZI") == obs

    @pytest.mark.parametrize("terms", [{}, {2: "X"}, {0: "Q"}])
    def test_invalid_observables(self, terms):
        with pytest.raises(ValueError):
            PauliObservable(2, terms)

    def test_basis_string(self):
        basis = BasisString(3, "xyz")
        assert basis.letters == "XYZ"
        np.testing.assert_array_equal(basis.codes, [0, 1, 2])
        assert BasisString.from_codes([2, 0]) == BasisString(2, "ZX")
        with pytest.raises(ValueError):
            BasisString(2, "XI")


class TestExpectation:
    def test_eigenstate(self):
        assert expectation(named_state("all_zero", 2), PauliObservable(2, {0: "Z"})) == 1.0

    def test_bell_state(self):
        ghz = named_state("ghz", 2)
        assert expectation(ghz, PauliObservable.from_string("XX")) == pytest.approx(1.0)
        assert expectation(ghz, PauliObservable.from_string("YY")) == pytest.approx(-1.0)
        assert expectation(ghz, PauliObservable(2, {0: "Z"})) == pytest.approx(0.0)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    def test_matches_dense_matrix(self, n):
        rng = np.random.default_rng(n)
        for _ in range(10):
            state = haar_random_state(n, rng)
            obs = random_observable(n, rng)
            assert expectation(state, obs) == pytest.approx(
                dense_expectation(state.amplitudes, obs.label()), abs=1e-9
            )

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(3)
        state = haar_random_state(4, rng)
        shifted = StateVector(4, state.amplitudes * np.exp(1.234j))
        for _ in range(10):
            obs = random_observable(4, rng)
            assert abs(expectation(state, obs) - expectation(shifted, obs)) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            expectation(named_state("ghz", 2), PauliObservable(3, {0: "X"}))


class TestSampling:
    def test_z_basis_of_zero_state(self):
        rng = np.random.default_rng(0)
        state = named_state("all_zero", 1)
        draws = [sample_in_basis(state, BasisString(1, "Z"), rng)[0] for _ in range(200)]
        assert set(draws) == {0}

    def test_x_basis_of_zero_state(self):
        rng = np.random.default_rng(1)
        state = named_state("all_zero", 1)
        draws = np.array([sample_in_basis(state, BasisString(1, "X"), rng)[0] for _ in range(4000)])
        assert abs(draws.mean() - 0.5) < 4 * np.sqrt(0.25 / draws.size)

    def test_single_draw_chi_square(self):
        rng = np.random.default_rng(7)
        state = haar_random_state(3, rng)
        basis = BasisString(3, "XYZ")
        expected = outcome_distribution(state.amplitudes, "XYZ")
        draws = np.array([sample_in_basis(state, basis, rng) for _ in range(100_000)])
        counts = np.bincount(draws @ [4, 2, 1], minlength=8)
        assert chisquare(counts, expected * draws.shape[0]).pvalue > 0.01

    @pytest.mark.parametrize("basis", ["XYZ", "YYX", "ZZZ"])
    def test_batch_chi_square(self, basis):
        rng = np.random.default_rng(8)
        state = haar_random_state(3, rng)
        codes = np.tile(BasisString(3, basis).codes, (100_000, 1))
        draws = sample_batch(state, codes, rng)
        counts = np.bincount(draws.astype(int) @ [4, 2, 1], minlength=8)
        expected = outcome_distribution(state.amplitudes, basis) * codes.shape[0]
        assert chisquare(counts, expected).pvalue > 0.01

    def test_batch_mixed_bases_chi_square(self):
        # one contingency per basis for a 2-qubit state with every basis interleaved
        rng = np.random.default_rng(9)
        state = haar_random_state(2, rng)
        codes = rng.integers(0, 3, size=(180_000, 2), dtype=np.int8)
        draws = sample_batch(state, codes, rng)
        for c0 in range(3):
            for c1 in range(3):
                rows = (codes[:, 0] == c0) & (codes[:, 1] == c1)
                basis = "XYZ"[c0] + "XYZ"[c1]
                counts = np.bincount(draws[rows].astype(int) @ [2, 1], minlength=4)
                expected = outcome_distribution(state.amplitudes, basis) * rows.sum()
                assert chisquare(counts, expected).pvalue > 1e-3

    def test_batch_on_larger_state_with_small_chunks(self):
        rng = np.random.default_rng(10)
        state = haar_random_state(6, rng)
        basis = "XZYXZY"
        codes = np.tile(BasisString(6, basis).codes, (60_000, 1))
        draws = sample_batch(state, codes, rng, max_amplitudes=1 << 10)
        counts = np.bincount(draws.astype(int) @ (1 << np.arange(5, -1, -1)), minlength=64)
        expected = outcome_distribution(state.amplitudes, basis) * codes.shape[0]
        keep = expected > 5
        observed = np.append(counts[keep], counts[~keep].sum())
        expected = np.append(expected[keep], expected[~keep].sum())
        assert chisquare(observed, expected).pvalue > 0.01

    def test_sampling_does_not_mutate_state(self):
        rng = np.random.default_rng(0)
        state = haar_random_state(3, rng)
        before = state.amplitudes.copy()
        sample_in_basis(state, BasisString(3, "XYX"), rng)
        sample_batch(state, rng.integers(0, 3, size=(50, 3)), rng)
        np.testing.assert_array_equal(state.amplitudes, before)

    def test_all_z_basis_applies_no_rotation(self):
        state = haar_random_state(4, seed=2)
        np.testing.assert_array_equal(rotate(state, BasisString(4, "ZZZZ")), state.amplitudes)

    @pytest.mark.parametrize("letter", "XYZ")
    def test_single_qubit_mean_eigenvalue(self, letter):
        rng = np.random.default_rng(ord(letter))
        state = haar_random_state(3, rng)
        qubit = 1
        codes = np.full((100_000, 3), 2, dtype=np.int8)
        codes[:, qubit] = "XYZ".index(letter)
        eig = outcome_eigenvalues(sample_batch(state, codes, rng)[:, qubit])
        exact = expectation(state, PauliObservable(3, {qubit: letter}))
        se = np.sqrt(max(1 - exact**2, 1e-12) / eig.size)
        assert abs(eig.mean() - exact) < 4 * se

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_in_basis(named_state("ghz", 2), BasisString(3, "XXX"), rng)
        with pytest.raises(ValueError):
            sample_batch(named_state("ghz", 2), np.zeros((4, 3), dtype=int), rng)


@pytest.mark.parametrize(
    "bits, eig",
    [((0, 0), (1, 1)), ((1, 0, 1), (-1, 1, -1)), ((1,) * 7, (-1,) * 7)],
)
def test_outcome_eigenvalues(bits, eig):
    np.testing.assert_array_equal(outcome_eigenvalues(bits), eig)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_haar_states_are_normalized(n, seed):
    state = haar_random_state(n, seed)
    assert abs(np.vdot(state.amplitudes, state.amplitudes).real - 1.0) < 1e-10
