import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symclone.algebra import (
    DensityMatrix,
    PureQubit,
    SizeLimitError,
    partial_trace,
    permutation_operator,
    state_fidelity,
    symmetric_basis_state,
    symmetric_populations,
    symmetric_projector,
    tensor,
    tensor_all,
    WeightedOperator,
)


def random_qubit(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return PureQubit(v[0], v[1])


def random_density(rng, n):
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    m = a @ a.conj().T
    return DensityMatrix(m / np.trace(m))


def projector_by_weight(m):
    """Closed form of the permutation average: entry 1/C(m,k) between basis
    strings of equal Hamming weight k, zero otherwise."""
    dim = 2**m
    w = [bin(i).count("1") for i in range(dim)]
    p = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(dim):
            if w[i] == w[j]:
                p[i, j] = 1 / math.comb(m, w[i])
    return p


qubits = st.tuples(
    st.floats(0, math.pi), st.floats(0, 2 * math.pi)
).map(lambda t: PureQubit.from_bloch(*t))


class TestPureQubit:
    def test_norm_enforced(self):
        with pytest.raises(ValueError):
            PureQubit(1, 1)

    def test_named_states(self):
        assert PureQubit.named("H+iV").amplitude_v == pytest.approx(1j / math.sqrt(2))
        with pytest.raises(ValueError):
            PureQubit.named("D")

    @given(qubits)
    def test_orthogonal(self, q):
        assert abs(np.vdot(q.vector, q.orthogonal().vector)) < 1e-12


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.eye(2))

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="semidefinite"):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_size_limit(self):
        with pytest.raises(SizeLimitError):
            DensityMatrix.maximally_mixed(9)

    def test_weighted_operator(self):
        op = WeightedOperator.of(np.diag([0.25, 0.25]))
        assert op.weight == pytest.approx(0.5)
        assert op.normalized().distance(np.eye(2) / 2) < 1e-15


class TestProjector:
    def test_m1_identity(self):
        assert np.array_equal(symmetric_projector(1).matrix, np.eye(2))

    def test_m2_symmetrizer(self):
        swap = permutation_operator([1, 0])
        assert np.abs(symmetric_projector(2).matrix - (np.eye(4) + swap) / 2).max() < 1e-15
        assert np.trace(symmetric_projector(2).matrix) == pytest.approx(3)

    @pytest.mark.parametrize("label", ["H", "H+V", "H+iV"])
    def test_m3_four_term_expansion(self, label):
        phi = PureQubit.named(label)
        expansion = sum(
            np.outer(v, v.conj()) for v in (symmetric_basis_state(3, k, phi) for k in range(4))
        )
        assert np.abs(symmetric_projector(3).matrix - expansion).max() < 1e-12

    @pytest.mark.parametrize("m", range(1, 9))
    def test_matches_weight_closed_form(self, m):
        assert np.abs(symmetric_projector(m).matrix - projector_by_weight(m)).max() < 1e-12

    @pytest.mark.parametrize("m", range(1, 7))
    def test_invariants(self, m):
        p = symmetric_projector(m).matrix
        assert np.abs(p @ p - p).max() < 1e-12
        assert np.abs(p - p.conj().T).max() < 1e-12
        assert abs(np.trace(p) - (m + 1)) < 1e-9
        for i, j in itertools.combinations(range(m), 2):
            perm = list(range(m))
            perm[i], perm[j] = j, i
            u = permutation_operator(perm)
            assert np.abs(u @ p @ u.T - p).max() < 1e-12

    @pytest.mark.parametrize("m", [0, 9])
    def test_out_of_range(self, m):
        with pytest.raises(SizeLimitError):
            symmetric_projector(m)

    def test_fixes_product_states(self):
        rng = np.random.default_rng(11)
        for m in range(1, 6):
            p = symmetric_projector(m).matrix
            for _ in range(200):
                q = random_qubit(rng)
                v = tensor_all(q.vector[:, None] for _ in range(m)).ravel()
                assert np.abs(p @ v - v).max() < 1e-12

    @pytest.mark.parametrize("m", range(2, 6))
    def test_chain_identity(self, m):
        p = symmetric_projector(m).matrix
        q = np.kron(symmetric_projector(m - 1).matrix, np.eye(2))
        assert np.abs(p @ q - p).max() < 1e-12

    @given(qubits, st.integers(1, 5))
    def test_basis_orthonormal_and_spanning(self, q, m):
        basis = np.array([symmetric_basis_state(m, k, q) for k in range(m + 1)])
        assert np.abs(basis.conj() @ basis.T - np.eye(m + 1)).max() < 1e-12
        span = basis.T @ basis.conj()
        assert np.abs(span - symmetric_projector(m).matrix).max() < 1e-12


class TestTensorAndTrace:
    def test_tensor_examples(self):
        h = PureQubit.named("H").projector()
        mixed = DensityMatrix.maximally_mixed(1)
        assert np.allclose(tensor(h, mixed).entries, np.diag([0.5, 0.5, 0, 0]))
        assert np.allclose(tensor(mixed, mixed).entries, np.eye(4) / 4)

    def test_tensor_limit(self):
        with pytest.raises(SizeLimitError):
            tensor(DensityMatrix.maximally_mixed(5), DensityMatrix.maximally_mixed(4))

    def test_trace_multiplicative(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 4))
        b = rng.normal(size=(2, 2))
        assert np.trace(tensor(a, b)) == pytest.approx(np.trace(a) * np.trace(b))

    def test_product_factorizes(self):
        rng = np.random.default_rng(5)
        a, b = random_density(rng, 2), random_density(rng, 1)
        ab = tensor(a, b)
        assert partial_trace(ab, [0, 1]).distance(a) < 1e-12
        assert partial_trace(ab, [2]).distance(b) < 1e-12

    def test_matches_elementwise_sum(self):
        rng = np.random.default_rng(8)
        rho = random_density(rng, 3).entries
        # trace out slot 1 by explicit index sums
        ref = np.zeros((4, 4), dtype=complex)
        for a0, a2, b0, b2, t in itertools.product(range(2), repeat=5):
            ref[2 * a0 + a2, 2 * b0 + b2] += rho[4 * a0 + 2 * t + a2, 4 * b0 + 2 * t + b2]
        assert np.abs(partial_trace(rho, [0, 2]) - ref).max() < 1e-14

    def test_invalid_slots(self):
        with pytest.raises(ValueError):
            partial_trace(np.eye(4) / 4, [2])
        with pytest.raises(ValueError):
            partial_trace(np.eye(4) / 4, [])

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_trace_preserving_and_positive(self, seed, n):
        rng = np.random.default_rng(seed)
        rho = random_density(rng, n)
        keep = sorted(rng.choice(n, size=rng.integers(1, n + 1), replace=False))
        red = partial_trace(rho, keep)
        assert np.trace(red.entries) == pytest.approx(1, abs=1e-12)
        assert np.linalg.eigvalsh(red.entries)[0] > -1e-10


class TestFidelity:
    def test_examples(self):
        phi = PureQubit.named("H+iV")
        assert state_fidelity(phi.projector(), phi) == pytest.approx(1)
        assert state_fidelity(np.eye(2) / 2, phi) == pytest.approx(0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            state_fidelity(np.eye(4) / 4, PureQubit.named("H"))

    def test_populations_of_symmetric_state(self):
        phi = PureQubit.named("H+V")
        v = symmetric_basis_state(3, 1, phi)
        pops = symmetric_populations(np.outer(v, v.conj()), phi)
        assert pops == pytest.approx([0, 1, 0, 0], abs=1e-12)
