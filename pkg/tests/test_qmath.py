import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvdarwin.qmath import (SX, SY, SZ, DensityOperator, InvalidStateError, NotHermitianError,
                            binary_entropy, entropy_of_spectrum, hermitian_eigensystem,
                            kron_all, matrix_fractional_power, overlap, partial_trace,
                            random_density_matrix, spin_rotation, tensor_product,
                            von_neumann_entropy)

BELL = np.array([1, 0, 0, 1]) / math.sqrt(2)


def loop_partial_trace(m, dims, keep):
    """Element-by-element reference partial trace."""
    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    kd = [dims[i] for i in keep]
    td = [dims[i] for i in traced]
    out = np.zeros((int(np.prod(kd)), int(np.prod(kd))), dtype=complex)

    def flat(idx):
        return int(np.ravel_multi_index(idx, dims))

    for a in itertools.product(*[range(d) for d in kd]):
        for b in itertools.product(*[range(d) for d in kd]):
            s = 0j
            for t in itertools.product(*[range(d) for d in td]):
                ia, ib = [0] * n, [0] * n
                for pos, k in enumerate(keep):
                    ia[k], ib[k] = a[pos], b[pos]
                for pos, k in enumerate(traced):
                    ia[k] = ib[k] = t[pos]
                s += m[flat(ia), flat(ib)]
            ra = int(np.ravel_multi_index(a, kd)) if kd else 0
            rb = int(np.ravel_multi_index(b, kd)) if kd else 0
            out[ra, rb] = s
    return out


class TestDensityOperator:
    def test_pure_state_accepted(self):
        rho = DensityOperator.from_pure(BELL, (2, 2))
        assert rho.dim == 4

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidStateError):
            DensityOperator(np.array([[0.5, 0.1], [0.2, 0.5]]), (2,))

    def test_rejects_bad_trace(self):
        with pytest.raises(InvalidStateError):
            DensityOperator(np.eye(2), (2,))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(InvalidStateError):
            DensityOperator(np.array([[1.2, 0], [0, -0.2]]), (2,))

    def test_rejects_dims_mismatch(self):
        with pytest.raises(InvalidStateError):
            DensityOperator(np.eye(4) / 4, (2, 3))


class TestPartialTrace:
    @pytest.mark.parametrize("dims,keep", [((2, 2), [0]), ((2, 2), [1]), ((2, 3, 2), [0, 2]),
                                           ((2, 2, 2), [1]), ((3, 2), [1])])
    def test_matches_loop_oracle(self, dims, keep, rng):
        d = int(np.prod(dims))
        m = random_density_matrix(d, rng)
        expected = loop_partial_trace(m, dims, keep)
        got = partial_trace(DensityOperator(m, dims), keep)
        np.testing.assert_allclose(got.matrix, expected, atol=1e-13)
        assert got.dims == tuple(dims[k] for k in keep)

    def test_bell_reduces_to_maximally_mixed(self):
        rho = DensityOperator.from_pure(BELL, (2, 2))
        np.testing.assert_allclose(partial_trace(rho, [1]).matrix, np.eye(2) / 2, atol=1e-15)

    def test_keep_nothing_is_trace(self, rng):
        rho = DensityOperator(random_density_matrix(4, rng), (2, 2))
        assert partial_trace(rho, []).matrix[0, 0] == pytest.approx(1.0)

    def test_bad_index(self):
        with pytest.raises(IndexError):
            partial_trace(DensityOperator(np.eye(4) / 4, (2, 2)), [2])

    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_preserves_trace_and_positivity(self, seed, n):
        rng = np.random.default_rng(seed)
        rho = DensityOperator(random_density_matrix(2**n, rng), (2,) * n)
        keep = sorted(rng.choice(n, size=rng.integers(0, n + 1), replace=False))
        red = partial_trace(rho, keep)
        assert np.trace(red.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(red.matrix).min() > -1e-12


class TestEntropy:
    def test_pure_state_zero(self):
        assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0

    def test_maximally_mixed_qubit(self):
        assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-15)

    def test_maximally_mixed_dimension(self):
        assert von_neumann_entropy(np.eye(8) / 8) == pytest.approx(3.0, abs=1e-14)

    def test_binary_entropy_closed_form(self):
        p = 0.2
        assert binary_entropy(p) == pytest.approx(-p * math.log2(p) - (1 - p) * math.log2(1 - p))

    def test_negative_spectrum_rejected(self):
        with pytest.raises(InvalidStateError):
            entropy_of_spectrum([1.1, -0.1])

    @given(st.integers(0, 2**32 - 1), st.integers(1, 3))
    def test_entropy_bounds(self, seed, n):
        rho = random_density_matrix(2**n, np.random.default_rng(seed))
        h = von_neumann_entropy(rho)
        assert -1e-12 <= h <= n + 1e-12

    @given(st.integers(0, 2**32 - 1))
    def test_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density_matrix(4, rng)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        assert von_neumann_entropy(q @ rho @ q.conj().T) == pytest.approx(
            von_neumann_entropy(rho), abs=1e-10)


class TestLinearAlgebra:
    def test_tensor_product_order(self):
        a = np.diag([1.0, 0.0])
        b = np.diag([0.0, 1.0])
        np.testing.assert_array_equal(tensor_product(a, b), np.diag([0, 1, 0, 0]))

    def test_tensor_product_rejects_nan(self):
        with pytest.raises(ValueError):
            tensor_product(np.array([[np.nan]]), np.eye(2))

    def test_kron_all_matches_nested(self):
        np.testing.assert_array_equal(kron_all(SX, SY, SZ), np.kron(np.kron(SX, SY), SZ))

    def test_eigensystem_reconstructs(self, rng):
        m = random_density_matrix(6, rng)
        w, v = hermitian_eigensystem(m)
        np.testing.assert_allclose((v * w) @ v.conj().T, m, atol=1e-13)
        assert np.all(np.diff(w) >= 0)

    def test_eigensystem_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            hermitian_eigensystem(np.array([[0, 1], [0, 0]]))

    def test_fractional_power_square_root(self, rng):
        m = random_density_matrix(4, rng)
        r = matrix_fractional_power(m, 0.5)
        np.testing.assert_allclose(r @ r, m, atol=1e-12)

    def test_fractional_power_zero_is_support_projector(self):
        p = matrix_fractional_power(np.diag([1.0, 0.0]), 0.0)
        np.testing.assert_allclose(p, np.diag([1.0, 0.0]), atol=1e-15)

    def test_fractional_power_rejects_exponent(self):
        with pytest.raises(ValueError):
            matrix_fractional_power(np.eye(2) / 2, 1.5)

    def test_overlap_conjugates_first(self):
        assert overlap([1j, 0], [1, 0]) == pytest.approx(-1j)

    def test_overlap_dimension_mismatch(self):
        with pytest.raises(ValueError):
            overlap([1, 0], [1, 0, 0])

    def test_spin_rotation_pi_about_x_flips(self):
        u = spin_rotation("x", math.pi)
        assert abs(u @ np.array([1, 0]))[1] == pytest.approx(1.0)

    def test_spin_rotation_phase_axis_matches_named(self):
        np.testing.assert_allclose(spin_rotation(math.pi / 2, 0.7), spin_rotation("y", 0.7),
                                   atol=1e-15)
