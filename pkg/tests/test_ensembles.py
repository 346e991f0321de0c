import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from rprsd import montecarlo
from rprsd.ensembles import (
    Ensemble,
    MeasurementMatrix,
    SparseSignal,
    coherence,
    generate_matrix,
    generate_signal,
    measure,
)
from rprsd.errors import DimensionMismatchError, InvalidDimensionError
from rprsd.seeding import derive_seed


def pairwise_coherence_oracle(A):
    """Direct double loop over column pairs with explicit summation."""
    M, N = A.shape
    best = 0.0
    for i in range(N):
        for j in range(i + 1, N):
            s = 0j
            for m in range(M):
                s += A[m, i].conjugate() * A[m, j]
            best = max(best, abs(s))
    return best


class TestGenerateMatrix:
    def test_single_entry_has_unit_modulus(self):
        A = generate_matrix("rpr", 1, 1, 99)
        assert abs(abs(A.entries[0, 0]) - 1.0) < 1e-12

    def test_rpr_4x8_moduli_and_norms(self):
        A = generate_matrix(Ensemble.RPR, 4, 8, 42)
        assert A.shape == (4, 8)
        np.testing.assert_allclose(np.abs(A.entries), 0.5, atol=1e-12, rtol=0)
        np.testing.assert_allclose(np.linalg.norm(A.entries, axis=0), 1.0, atol=1e-10, rtol=0)

    def test_phase_uniformity_chi_square(self):
        counts = np.zeros(16, dtype=np.int64)
        for i in range(100_000):
            A = generate_matrix("rpr", 64, 1, derive_seed(5, i))
            ph = np.mod(np.angle(A.entries[:, 0]), 2 * np.pi)
            counts += np.bincount(np.minimum((ph / (2 * np.pi) * 16).astype(int), 15), minlength=16)
        assert stats.chisquare(counts).pvalue > 0.001

    def test_bernoulli_entries_exact(self):
        A = generate_matrix("bernoulli", 9, 30, 3)
        assert np.all(A.entries.imag == 0.0)
        assert set(np.unique(A.entries.real)) == {-1 / 3, 1 / 3}
        np.testing.assert_allclose(np.linalg.norm(A.entries, axis=0), 1.0, atol=1e-12, rtol=0)

    def test_gaussian_second_moment(self):
        M = 16
        A = generate_matrix("gaussian", M, 20_000, 11)
        p = np.abs(A.entries) ** 2
        se = p.std() / np.sqrt(p.size)
        assert abs(p.mean() - 1 / M) < 4 * se
        # circular symmetry: real and imaginary parts share the variance
        assert abs(A.entries.real.var() - A.entries.imag.var()) < 0.02 / M

    def test_determinism_bit_identical(self):
        for ens in ("rpr", "bernoulli", "gaussian", "real_gaussian"):
            a = generate_matrix(ens, 7, 13, 123456789).entries
            b = generate_matrix(ens, 7, 13, 123456789).entries
            assert a.tobytes() == b.tobytes()
            c = generate_matrix(ens, 7, 13, 123456790).entries
            assert a.tobytes() != c.tobytes()

    def test_column_major_storage(self):
        A = generate_matrix("rpr", 5, 3, 1)
        assert A.entries.flags.f_contiguous
        assert A.entries.dtype == np.complex128
        assert not A.entries.flags.writeable

    @pytest.mark.parametrize("M,N", [(0, 3), (3, 0), (-1, 2)])
    def test_invalid_dimension(self, M, N):
        with pytest.raises(InvalidDimensionError):
            generate_matrix("rpr", M, N, 0)

    def test_identity_hook(self):
        A = generate_matrix("identity", 6, 4, 0)
        np.testing.assert_array_equal(A.entries, np.eye(6, 4))
        with pytest.raises(InvalidDimensionError):
            generate_matrix("identity", 3, 4, 0)

    @settings(max_examples=60, deadline=None)
    @given(
        M=st.integers(1, 40),
        N=st.integers(1, 40),
        seed=st.integers(0, 2**64 - 1),
    )
    def test_rpr_invariants_property(self, M, N, seed):
        A = generate_matrix("rpr", M, N, seed)
        assert np.max(np.abs(np.abs(A.entries) - 1 / np.sqrt(M))) <= 1e-12
        assert np.max(np.abs(np.linalg.norm(A.entries, axis=0) - 1)) <= 1e-10
        assert A.entries.tobytes() == generate_matrix("rpr", M, N, seed).entries.tobytes()


class TestSerialization:
    def test_json_descriptor_roundtrip(self):
        A = generate_matrix("rpr", 6, 9, 2**63 + 5)
        d = json.loads(A.to_json())
        assert d == {"ensemble": "rpr", "M": 6, "N": 9, "seed": 2**63 + 5}
        B = MeasurementMatrix.from_json(A.to_json())
        assert B.entries.tobytes() == A.entries.tobytes()

    def test_csv_roundtrip(self):
        A = generate_matrix("gaussian", 3, 4, 8)
        text = A.to_csv()
        assert text.splitlines()[0] == "m,n,re,im"
        assert len(text.splitlines()) == 13
        B = MeasurementMatrix.from_csv(text)
        np.testing.assert_array_equal(B.entries, A.entries)

    def test_custom_matrix_has_no_descriptor(self):
        with pytest.raises(ValueError):
            MeasurementMatrix.from_array(np.eye(2)).descriptor()

    def test_signal_json_roundtrip(self):
        x = generate_signal(10, 3, "given", 4, values=[1 + 2j, -3, 0.5j])
        y = SparseSignal.from_json(x.to_json())
        assert y.support == x.support
        np.testing.assert_array_equal(y.values, x.values)


class TestCoherence:
    def test_identical_columns(self, backend):
        a = generate_matrix("rpr", 5, 1, 0).entries[:, 0]
        A = MeasurementMatrix.from_array(np.stack([a, a], axis=1))
        assert coherence(A) == pytest.approx(1.0, abs=1e-14)

    def test_dft_is_incoherent(self, backend):
        M = 8
        F = np.exp(-2j * np.pi * np.outer(np.arange(M), np.arange(M)) / M) / np.sqrt(M)
        assert coherence(MeasurementMatrix.from_array(F)) < 1e-12

    def test_matches_pairwise_oracle(self, backend):
        A = generate_matrix("rpr", 4, 3, 17)
        assert abs(coherence(A) - pairwise_coherence_oracle(A.entries)) <= 1e-12

    def test_matches_oracle_wider(self, backend):
        for seed in range(5):
            A = generate_matrix("rpr", 12, 20, seed)
            assert abs(coherence(A) - pairwise_coherence_oracle(A.entries)) <= 1e-12

    def test_needs_two_columns(self, backend):
        with pytest.raises(InvalidDimensionError):
            coherence(generate_matrix("rpr", 4, 1, 0))

    @settings(max_examples=40, deadline=None)
    @given(M=st.integers(1, 16), N=st.integers(2, 16), seed=st.integers(0, 10**9), ens=st.sampled_from(["rpr", "bernoulli"]))
    def test_unit_norm_ensembles_bounded(self, M, N, seed, ens):
        mu = coherence(generate_matrix(ens, M, N, seed))
        assert 0.0 <= mu <= 1.0 + 1e-12

    def test_inner_product_distribution_matches_flat_model(self):
        # |a_i^H a_j| over fresh matrices vs |p^H u| with u flat, two-sample KS
        M, n = 16, 20_000
        vals = np.empty(n)
        for i in range(n):
            A = generate_matrix("rpr", M, 2, derive_seed(77, i)).entries
            vals[i] = abs(np.vdot(A[:, 0], A[:, 1]))
        ref = montecarlo.sample_inner_product(M, n, 78).sorted_values
        assert stats.ks_2samp(vals, ref).pvalue > 0.001


class TestSignals:
    def test_full_support(self):
        x = generate_signal(5, 5, "unit_coefficients", 0)
        assert x.support == (0, 1, 2, 3, 4)
        np.testing.assert_array_equal(x.values, np.ones(5))

    def test_two_of_two_hundred(self):
        x = generate_signal(200, 2, "unit_coefficients", 7)
        assert len(set(x.support)) == 2
        assert all(0 <= i < 200 for i in x.support)
        np.testing.assert_array_equal(x.values, [1, 1])
        d = x.dense()
        assert np.count_nonzero(d) == 2 and set(np.flatnonzero(d)) == set(x.support)

    def test_inclusion_frequency(self):
        counts = np.zeros(10)
        draws = 100_000
        for i in range(draws):
            counts[list(generate_signal(10, 3, "unit_coefficients", derive_seed(3, i)).support)] += 1
        np.testing.assert_allclose(counts / draws, 0.3, atol=0.01)

    def test_errors(self):
        with pytest.raises(InvalidDimensionError):
            generate_signal(3, 4)
        with pytest.raises(ValueError):
            generate_signal(5, 2, "given", 0, values=[1.0, 0.0])
        with pytest.raises(DimensionMismatchError):
            generate_signal(5, 2, "given", 0, values=[1.0])
        with pytest.raises(ValueError):
            SparseSignal(5, (1, 1), [1, 2])

    def test_given_values_follow_sorted_support(self):
        x = SparseSignal(6, (4, 1), [2.0, 3.0])
        assert x.support == (1, 4)
        np.testing.assert_array_equal(x.values, [3.0, 2.0])


class TestMeasure:
    def test_identity_matrix(self):
        A = MeasurementMatrix.from_array(np.eye(6))
        x = SparseSignal(6, (0, 3, 5), [1 - 1j, 2, -0.5j])
        np.testing.assert_array_equal(measure(A, x).vector, x.dense())

    def test_single_column(self):
        A = generate_matrix("rpr", 8, 10, 4)
        y = measure(A, SparseSignal(10, (6,), [1.0]))
        np.testing.assert_array_equal(y.vector, A.column(6))

    def test_dense_product_oracle(self):
        A = generate_matrix("rpr", 8, 16, 21)
        x = generate_signal(16, 2, "given", 5, values=[0.3 + 1j, -2.0])
        dense = np.array([[A.entries[m, n] for n in range(16)] for m in range(8)])
        ref = np.array([sum(dense[m, n] * x.dense()[n] for n in range(16)) for m in range(8)])
        y = measure(A, x)
        assert np.max(np.abs(y.vector - ref)) <= 1e-12
        assert y.signal is x and y.matrix is A

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            measure(generate_matrix("rpr", 4, 5, 0), generate_signal(6, 1))
