import numpy as np
import pytest

from otlab import numerics
from otlab.numerics import (
    DensityOperator,
    Ensemble,
    InvalidMeasurementError,
    InvalidOperatorError,
    InvalidStateError,
    Povm,
    PureState,
    classical_mutual_information,
    fidelity,
    haar_random_pure,
    holevo,
    mutual_information,
    partial_trace,
    random_povm,
    trace_distance,
    von_neumann_entropy,
)

SQRT_HALF = 1.0 / np.sqrt(2.0)


def _proj(vec):
    vec = np.asarray(vec, dtype=complex)
    return DensityOperator.from_matrix(np.outer(vec, vec.conj()))


def _random_mixed_pair(rng, dim=3):
    return (numerics.random_density_operator(dim, rng),
            numerics.random_density_operator(dim, rng))


class TestValidation:
    def test_pure_state_norm(self):
        with pytest.raises(InvalidStateError):
            PureState.from_amplitudes([1.0, 1.0, 0.0])
        state = PureState.from_amplitudes([SQRT_HALF, SQRT_HALF, 0.0])
        assert state.dim == 3

    def test_density_rejects_non_hermitian(self):
        mat = np.array([[0.5, 0.5], [0.0, 0.5]])
        with pytest.raises(InvalidOperatorError):
            DensityOperator.from_matrix(mat)

    def test_density_rejects_wrong_trace(self):
        with pytest.raises(InvalidOperatorError):
            DensityOperator.from_matrix(np.eye(2))

    def test_density_eigenvalue_floor(self):
        # Drift inside the tolerance band is accepted, genuine negativity is not.
        DensityOperator.from_matrix(np.diag([1.0 + 5e-11, 0.0, -5e-11]))
        with pytest.raises(InvalidOperatorError):
            DensityOperator.from_matrix(np.diag([1.00000001, 0.0, -1e-8]))

    def test_povm_completeness(self):
        with pytest.raises(InvalidMeasurementError):
            Povm.from_elements([np.eye(3) * 0.5])

    def test_povm_positivity(self):
        bad = [np.diag([1.5, 1.0, 1.0]), np.diag([-0.5, 0.0, 0.0])]
        with pytest.raises(InvalidMeasurementError):
            Povm.from_elements(bad)
        quasi = Povm.from_elements(bad, require_psd=False)
        assert not quasi.is_psd
        assert quasi.min_eigenvalue == pytest.approx(-0.5)

    def test_ensemble_probabilities(self):
        op = _proj([1, 0, 0])
        with pytest.raises(ValueError):
            Ensemble(((0.6, op), (0.6, op)))


class TestEntropy:
    def test_maximally_mixed_qutrit(self):
        rho = DensityOperator.from_matrix(np.eye(3) / 3)
        assert von_neumann_entropy(rho) == pytest.approx(np.log2(3), abs=1e-12)

    def test_pure_projector(self):
        assert von_neumann_entropy(_proj([SQRT_HALF, 0, SQRT_HALF])) == pytest.approx(0.0, abs=1e-12)

    def test_dyadic_spectrum(self):
        rho = DensityOperator.from_matrix(np.diag([0.5, 0.25, 0.25]))
        assert von_neumann_entropy(rho) == pytest.approx(1.5, abs=1e-12)

    def test_matches_shannon_on_random_diagonals(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            probs = rng.dirichlet([1.0, 1.0, 1.0])
            rho = DensityOperator.from_matrix(np.diag(probs))
            shannon = -np.sum(numerics.xlog2(probs))
            assert abs(von_neumann_entropy(rho) - shannon) < 1e-10

    def test_range(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            val = von_neumann_entropy(numerics.random_density_operator(3, rng))
            assert 0.0 <= val <= np.log2(3) + 1e-12


class TestTraceDistance:
    def test_identical(self):
        rho = _proj([1, 0, 0])
        assert trace_distance(rho, rho) == 0.0

    def test_half_for_overlapping_mixtures(self):
        rho = DensityOperator.from_matrix(np.diag([0.5, 0.0, 0.5]))
        sigma = DensityOperator.from_matrix(np.diag([0.0, 0.5, 0.5]))
        assert trace_distance(rho, sigma) == pytest.approx(0.5, abs=1e-12)

    def test_orthogonal_pure_pair_max(self):
        # y-ensemble members at a=b=1/sqrt2, c=0 are orthogonal pure states.
        plus = _proj([SQRT_HALF, SQRT_HALF, 0.0])
        minus = _proj([SQRT_HALF, -SQRT_HALF, 0.0])
        assert trace_distance(plus, minus) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            a, b = _random_mixed_pair(rng)
            c = numerics.random_density_operator(3, rng)
            assert trace_distance(a, b) == pytest.approx(trace_distance(b, a), abs=1e-12)
            assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            trace_distance(_proj([1, 0]), _proj([1, 0, 0]))


class TestFidelity:
    def test_self(self):
        rho = numerics.random_density_operator(3, np.random.default_rng(1))
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_half_overlap_pure_pair(self):
        tau00 = _proj([SQRT_HALF, 0.0, SQRT_HALF])
        tau10 = _proj([0.0, SQRT_HALF, SQRT_HALF])
        assert fidelity(tau00, tau10) == pytest.approx(0.5, abs=1e-12)

    def test_orthogonal(self):
        assert fidelity(_proj([1, 0, 0]), _proj([0, 1, 0])) == pytest.approx(0.0, abs=1e-12)

    def test_pure_inputs_overlap(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            u = haar_random_pure(3, rng).amplitudes
            v = haar_random_pure(3, rng).amplitudes
            f = fidelity(_proj(u), _proj(v))
            assert f == pytest.approx(abs(np.vdot(u, v)), abs=1e-10)

    def test_bound_against_trace_distance(self):
        rng = np.random.default_rng(15)
        for _ in range(1000):
            rho, sigma = _random_mixed_pair(rng)
            d = trace_distance(rho, sigma)
            f = fidelity(rho, sigma)
            assert d <= np.sqrt(max(0.0, 1.0 - f * f)) + 1e-9


class TestPartialTrace:
    def test_product_state(self):
        state = np.kron([1, 0, 0], [0, 1, 0])
        reduced = partial_trace(_proj(state), (3, 3), keep=0)
        assert np.allclose(reduced.matrix, np.diag([1, 0, 0]), atol=1e-12)

    def test_bell_like(self):
        state = np.zeros(9)
        state[0] = state[4] = SQRT_HALF  # (|00> + |11>)/sqrt2 on two qutrits
        reduced = partial_trace(_proj(state), (3, 3), keep=1)
        assert np.allclose(reduced.matrix, np.diag([0.5, 0.5, 0.0]), atol=1e-12)

    def test_entangled_half_half(self):
        state = np.zeros(9)
        state[0] = state[8] = SQRT_HALF  # (|00> + |22>)/sqrt2
        reduced = partial_trace(_proj(state), (3, 3), keep=1)
        assert np.allclose(reduced.matrix, np.diag([0.5, 0.0, 0.5]), atol=1e-12)

    def test_preserves_trace_and_positivity(self):
        rng = np.random.default_rng(16)
        for _ in range(1000):
            psi = haar_random_pure(9, rng)
            reduced = partial_trace(psi.projector(), (3, 3), keep=int(rng.integers(2)))
            assert abs(np.trace(reduced.matrix) - 1.0) < 1e-12
            assert reduced.eigenvalues().min() > -1e-10

    def test_bad_factorization(self):
        with pytest.raises(ValueError):
            partial_trace(_proj([1, 0, 0]), (2, 2), keep=0)


class TestHaar:
    def test_deterministic_and_normalized(self):
        a = haar_random_pure(9, np.random.default_rng(42))
        b = haar_random_pure(9, np.random.default_rng(42))
        assert np.array_equal(a.amplitudes, b.amplitudes)
        assert abs(np.linalg.norm(a.amplitudes) - 1.0) < 1e-12

    def test_distinct_seeds(self):
        a = haar_random_pure(3, np.random.default_rng(1))
        b = haar_random_pure(3, np.random.default_rng(2))
        assert not np.allclose(a.amplitudes, b.amplitudes)

    def test_amplitude_moment(self):
        rng = np.random.default_rng(17)
        mean = np.mean([abs(haar_random_pure(3, rng).amplitudes[0]) ** 2
                        for _ in range(100_000)])
        assert abs(mean - 1.0 / 3.0) < 0.01

    def test_unitary_invariance(self):
        # The |<e0|psi>|^2 statistic must not move under a fixed rotation.
        rng = np.random.default_rng(18)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        raw, rotated = [], []
        for _ in range(50_000):
            psi = haar_random_pure(3, rng).amplitudes
            raw.append(abs(psi[0]) ** 2)
            rotated.append(abs((q @ psi)[0]) ** 2)
        assert abs(np.mean(raw) - np.mean(rotated)) < 0.01
        assert abs(np.var(raw) - np.var(rotated)) < 0.01

    def test_domain(self):
        with pytest.raises(ValueError):
            haar_random_pure(1, np.random.default_rng(0))


class TestInformation:
    def test_perfect_discrimination(self):
        ens = Ensemble.uniform([_proj([1, 0, 0]), _proj([0, 1, 0])])
        povm = Povm.projective(np.eye(3, dtype=complex))
        assert mutual_information(ens, povm) == pytest.approx(1.0, abs=1e-12)

    def test_trivial_measurement(self):
        ens = Ensemble.uniform([_proj([1, 0, 0]), _proj([0, 1, 0])])
        povm = Povm.from_elements([np.eye(3)])
        assert mutual_information(ens, povm) == 0.0

    def test_dimension_mismatch(self):
        ens = Ensemble.uniform([_proj([1, 0])])
        povm = Povm.projective(np.eye(3, dtype=complex))
        with pytest.raises(InvalidMeasurementError):
            mutual_information(ens, povm)

    def test_holevo_single_state(self):
        ens = Ensemble(((1.0, _proj([1, 0, 0])),))
        assert holevo(ens) == 0.0

    def test_holevo_orthogonal_pair(self):
        ens = Ensemble.uniform([_proj([1, 0]), _proj([0, 1])])
        assert holevo(ens) == pytest.approx(1.0, abs=1e-12)

    def test_holevo_dominates_mutual_information(self):
        rng = np.random.default_rng(19)
        for _ in range(1000):
            ens = Ensemble.uniform([numerics.random_density_operator(3, rng, rank=1)
                                    for _ in range(3)])
            povm = random_povm(3, int(rng.integers(2, 6)), rng)
            assert mutual_information(ens, povm) <= holevo(ens) + 1e-9

    def test_classical_mi_bounds(self):
        joint = np.array([[0.5, 0.0], [0.0, 0.5]])
        assert classical_mutual_information(joint) == pytest.approx(1.0)
        assert classical_mutual_information(np.full((2, 2), 0.25)) == pytest.approx(0.0)


class TestRandomPovm:
    def test_valid_and_real_option(self):
        rng = np.random.default_rng(20)
        for real in (False, True):
            povm = random_povm(3, 5, rng, real=real)
            total = sum(povm.elements)
            assert np.allclose(total, np.eye(3), atol=1e-10)
            if real:
                assert all(np.abs(m.imag).max() < 1e-15 for m in povm.elements)
