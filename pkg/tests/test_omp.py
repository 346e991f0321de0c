import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rprsd.ensembles import MeasurementMatrix, SparseSignal, coherence, generate_matrix, generate_signal, measure
from rprsd.errors import DegenerateColumnsError, DegenerateRatioError, DimensionMismatchError, InvalidDimensionError
from rprsd.omp import OmpConfig, greedy_ratio, least_squares, omp_detect


def ratio_oracle(A, support, r):
    """Selection ratio by explicit loops over both column blocks."""
    N = A.shape[1]
    on = max(abs(sum(A[m, n].conjugate() * r[m] for m in range(A.shape[0]))) for n in support)
    off = max(abs(sum(A[m, n].conjugate() * r[m] for m in range(A.shape[0]))) for n in range(N) if n not in support)
    return off / on


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestLeastSquares:
    def test_orthonormal_columns_project(self, rng):
        Q, _ = np.linalg.qr(random_complex(rng, 10, 4))
        y = random_complex(rng, 10)
        np.testing.assert_allclose(least_squares(Q, y), Q.conj().T @ y, atol=1e-12)

    def test_single_column(self, rng):
        a = random_complex(rng, 7)
        y = random_complex(rng, 7)
        z = least_squares(a[:, None], y)
        assert z.shape == (1,)
        assert abs(z[0] - np.vdot(a, y) / np.vdot(a, a)) < 1e-12

    def test_normal_equation_oracle(self):
        rng = np.random.default_rng(8)
        A = random_complex(rng, 8, 3)
        y = random_complex(rng, 8)
        G = A.conj().T @ A
        ref = np.linalg.inv(G) @ (A.conj().T @ y)
        z = least_squares(A, y)
        assert np.linalg.norm(z - ref) <= 1e-9 * np.linalg.norm(ref)
        assert np.max(np.abs(A.conj().T @ (y - A @ z))) <= 1e-8 * np.linalg.norm(y)

    def test_rank_deficient(self, rng):
        a = random_complex(rng, 6)
        A = np.stack([a, 2 * a], axis=1)
        with pytest.raises(DegenerateColumnsError):
            least_squares(A, random_complex(rng, 6))

    def test_shape_errors(self, rng):
        with pytest.raises(DimensionMismatchError):
            least_squares(random_complex(rng, 5, 2), random_complex(rng, 4))
        with pytest.raises(DimensionMismatchError):
            least_squares(random_complex(rng, 2, 3), random_complex(rng, 2))


class TestGreedyRatio:
    def test_zero_for_support_column_with_orthonormal_dictionary(self):
        A = np.eye(6, dtype=complex)
        assert greedy_ratio(A, [1, 4], A[:, 4]) == 0.0

    def test_off_support_column_fails_condition(self):
        A = generate_matrix("rpr", 16, 10, 3)
        S = [0, 1, 2]
        r = A.column(7)
        rho = greedy_ratio(A, S, r)
        assert rho >= 1.0 / coherence(A) - 1e-12
        assert rho >= 1.0

    def test_direct_evaluation_oracle(self):
        A = generate_matrix("rpr", 16, 8, 12)
        r = random_complex(np.random.default_rng(1), 16)
        assert abs(greedy_ratio(A, {2, 5}, r) - ratio_oracle(A.entries, [2, 5], r)) <= 1e-12

    def test_degenerate_denominator(self):
        A = np.eye(4, dtype=complex)
        with pytest.raises(DegenerateRatioError):
            greedy_ratio(A, [0], A[:, 2])

    def test_bad_support(self):
        A = np.eye(3, dtype=complex)
        with pytest.raises(ValueError):
            greedy_ratio(A, [], A[:, 0])
        with pytest.raises(ValueError):
            greedy_ratio(A, [0, 1, 2], A[:, 0])


class TestOmpDetect:
    def test_identity_recovers_in_magnitude_order(self, backend):
        A = MeasurementMatrix.from_array(np.eye(12))
        x = SparseSignal(12, (2, 5, 9, 10), [0.5, -3.0, 2j, 1.5])
        tr = omp_detect(A, measure(A, x), OmpConfig(4))
        assert tr.selected == (5, 9, 10, 2)
        assert tr.residual_norms[-1] == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(tr.coefficient_estimates[-1], [-3.0, 2j, 1.5, 0.5], atol=1e-14)

    def test_single_sparse_exhaustive_oracle(self, backend):
        for seed in range(10):
            A = generate_matrix("rpr", 12, 30, seed)
            s = seed % 30
            y = A.column(s)
            corr = [abs(np.vdot(A.column(n), y)) for n in range(30)]
            assert int(np.argmax(corr)) == s
            assert coherence(A) < 1
            assert omp_detect(A, y, OmpConfig(1)).selected == (s,)

    def test_ratio_condition_implies_recovery_small(self, backend):
        held = 0
        for seed in range(40):
            A = generate_matrix("rpr", 8, 16, seed)
            x = generate_signal(16, 2, seed=seed + 1000)
            y = measure(A, x).vector
            tr = omp_detect(A, y, OmpConfig(2), true_support=x.support)
            oracle = [ratio_oracle(A.entries, x.support, tr.residuals[t]) for t in range(2)]
            np.testing.assert_allclose(tr.greedy_ratios, oracle, rtol=1e-10)
            if all(r < 1 for r in oracle):
                held += 1
                assert tr.detected == set(x.support)
        assert held > 0

    def test_trace_invariants(self, backend):
        A = generate_matrix("rpr", 32, 64, 9)
        x = generate_signal(64, 5, "given", 4, values=[1, -1j, 0.5, 2, 1 + 1j])
        y = measure(A, x).vector
        tr = omp_detect(A, y, OmpConfig(5))
        assert len(tr.selected) == len(set(tr.selected)) == 5
        assert len(tr.residual_norms) == 6
        norms = np.array(tr.residual_norms)
        assert np.all(np.diff(norms) <= 1e-12 * norms[0])
        for t in range(1, 6):
            A_S = A.entries[:, list(tr.selected[:t])]
            assert np.max(np.abs(A_S.conj().T @ tr.residuals[t])) <= 1e-8
            assert np.linalg.norm(y - A_S @ tr.coefficient_estimates[t - 1] - tr.residuals[t]) <= 1e-10

    def test_runs_all_iterations_after_zero_residual(self, backend):
        A = MeasurementMatrix.from_array(np.eye(5))
        x = SparseSignal(5, (1,), [1.0])
        tr = omp_detect(A, measure(A, x), OmpConfig(3))
        assert len(tr.selected) == 3 and tr.selected[0] == 1
        # ties on an all-zero residual go to the lowest unselected index
        assert tr.selected[1:] == (0, 2)

    def test_tie_break_lowest_index(self, backend):
        A = MeasurementMatrix.from_array(np.eye(4))
        y = np.array([1.0, 0, 1.0, 1.0], dtype=complex)
        assert omp_detect(A, y, OmpConfig(1)).selected == (0,)

    def test_degenerate_columns(self, backend):
        a = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
        A = MeasurementMatrix.from_array(np.stack([a, a], axis=1))
        with pytest.raises(DegenerateColumnsError):
            omp_detect(A, 3 * a.astype(complex), OmpConfig(2))

    def test_dimension_errors(self):
        A = generate_matrix("rpr", 4, 6, 0)
        with pytest.raises(DimensionMismatchError):
            omp_detect(A, np.ones(5, complex), OmpConfig(1))
        with pytest.raises(InvalidDimensionError):
            omp_detect(A, np.ones(4, complex), OmpConfig(5))
        with pytest.raises(InvalidDimensionError):
            OmpConfig(0)

    def test_json(self):
        A = generate_matrix("rpr", 16, 20, 2)
        x = generate_signal(20, 2, seed=5)
        tr = omp_detect(A, measure(A, x), OmpConfig(2), true_support=x.support)
        d = json.loads(tr.to_json(one_based=True))
        assert set(d) == {"selected", "residual_norms", "greedy_ratios"}
        assert d["selected"] == [i + 1 for i in tr.selected]
        assert len(d["residual_norms"]) == 3 and len(d["greedy_ratios"]) == 2

    def test_backends_agree(self):
        from rprsd import _backend

        ck = _backend.compiled_kernels()
        if ck is None:
            pytest.skip("compiled kernels not built")
        for seed in range(30):
            A = generate_matrix("rpr", 24, 48, seed)
            y = measure(A, generate_signal(48, 4, seed=seed)).vector
            a = _backend.python_kernels.omp(A.entries, np.ascontiguousarray(y), 4, 1e-10)
            b = ck.omp(A.entries, np.ascontiguousarray(y), 4, 1e-10)
            np.testing.assert_array_equal(a[0], b[0])
            np.testing.assert_allclose(a[1], b[1], atol=1e-12)
            np.testing.assert_allclose(a[2], b[2], atol=1e-10)
            np.testing.assert_allclose(a[3], b[3], atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32), K=st.integers(1, 4), perm_seed=st.integers(0, 2**32))
    def test_permutation_equivariance(self, seed, K, perm_seed):
        M, N = 16, 24
        A = generate_matrix("rpr", M, N, seed)
        x = generate_signal(N, K, "given", seed, values=np.arange(1, K + 1) * (1 + 0.5j))
        y = measure(A, x).vector
        perm = np.random.default_rng(perm_seed).permutation(N)
        # column n of B is column perm[n] of A
        B = MeasurementMatrix.from_array(A.entries[:, perm])
        inv = np.argsort(perm)
        sel_a = omp_detect(A, y, OmpConfig(K)).selected
        sel_b = omp_detect(B, y, OmpConfig(K)).selected
        assert tuple(int(inv[i]) for i in sel_a) == sel_b
