import numpy as np
import pytest

from helpers import probe_pair_at_tau, random_density, random_hermitian, random_unitary
from nmflow import qmat
from nmflow.errors import DimMismatchError, NonHermitianError, NotAStateError
from nmflow.qmat import SIGMA_X, SIGMA_Y, SIGMA_Z


def test_herm_eig_diagonal():
    vals, vecs = qmat.herm_eig(np.diag([3.0, 1.0]).astype(complex))
    np.testing.assert_allclose(vals, [3.0, 1.0])
    np.testing.assert_allclose(np.abs(vecs), np.eye(2), atol=1e-12)


def test_herm_eig_sigma_x():
    vals, vecs = qmat.herm_eig(SIGMA_X)
    np.testing.assert_allclose(vals, [1.0, -1.0], atol=1e-12)
    hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    # Columns match the Hadamard columns up to a per-column phase.
    for k in range(2):
        overlap = abs(np.vdot(hadamard[:, k], vecs[:, k]))
        assert overlap == pytest.approx(1.0, abs=1e-12)


def test_herm_eig_max_entangled_projector():
    vals, _ = qmat.herm_eig(qmat.maximally_entangled(2))
    np.testing.assert_allclose(vals, [1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitianError):
        qmat.herm_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_trace_norm_sigma_z():
    assert qmat.trace_norm(SIGMA_Z) == pytest.approx(2.0, abs=1e-14)


def test_trace_norm_zero():
    rho = random_density(np.random.default_rng(0), 4)
    assert qmat.trace_norm(rho - rho) == pytest.approx(0.0, abs=1e-15)


def test_trace_norm_probe_pair_difference():
    # Analytic oracle: the difference splits into p * phi+ on the two-qubit
    # block plus -(p/2) * identity on the |2> branch, so ||diff||_1 = 2p.
    p = 0.3
    rho1, rho2 = probe_pair_at_tau(p)
    assert qmat.trace_norm(rho1 - rho2) == pytest.approx(0.6, abs=1e-12)
    # Independent check: raw eigvalsh of the explicitly assembled difference.
    direct = np.sum(np.abs(np.linalg.eigvalsh(rho1 - rho2)))
    assert direct == pytest.approx(2 * p, abs=1e-12)


def test_kron_identities():
    np.testing.assert_allclose(qmat.kron(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_allclose(qmat.kron(SIGMA_Z, SIGMA_Z), np.diag([1.0, -1.0, -1.0, 1.0]))
    proj0 = np.array([[1.0, 0.0], [0.0, 0.0]])
    top_left = qmat.kron(proj0, SIGMA_X)
    np.testing.assert_allclose(top_left[:2, :2], SIGMA_X)
    np.testing.assert_allclose(top_left[2:, 2:], 0.0)


def test_partial_trace_product():
    rng = np.random.default_rng(1)
    a = random_density(rng, 3)
    b = random_density(rng, 2)
    np.testing.assert_allclose(qmat.partial_trace(np.kron(a, b), (3, 2), keep=1), b, atol=1e-13)
    np.testing.assert_allclose(qmat.partial_trace(np.kron(a, b), (3, 2), keep=0), a, atol=1e-13)


def test_partial_trace_max_entangled_reductions():
    phi = qmat.maximally_entangled(2)
    np.testing.assert_allclose(qmat.partial_trace(phi, (2, 2), keep=1), np.eye(2) / 2, atol=1e-14)
    np.testing.assert_allclose(qmat.partial_trace(phi, (2, 2), keep=0), np.eye(2) / 2, atol=1e-14)


def test_partial_trace_dim_mismatch():
    with pytest.raises(DimMismatchError):
        qmat.partial_trace(np.eye(4), (2, 3), keep=0)


def test_partial_transpose_product():
    rng = np.random.default_rng(2)
    a = random_hermitian(rng, 2)
    b = random_hermitian(rng, 2)
    got = qmat.partial_transpose(np.kron(a, b), (2, 2), subsystem=1)
    np.testing.assert_allclose(got, np.kron(a, b.T), atol=1e-14)


def test_partial_transpose_max_entangled_spectrum():
    pt = qmat.partial_transpose(qmat.maximally_entangled(2), (2, 2), subsystem=0)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(pt)), [-0.5, 0.5, 0.5, 0.5], atol=1e-14)


def test_partial_transpose_involutive_bit_exact():
    rng = np.random.default_rng(3)
    m = random_hermitian(rng, 6)
    twice = qmat.partial_transpose(qmat.partial_transpose(m, (2, 3), 1), (2, 3), 1)
    assert np.array_equal(twice, m)


def test_coords_maximally_mixed():
    basis = qmat.operator_basis((2, 2))
    rho = qmat.DensityState(np.eye(4) / 4, (2, 2))
    a = qmat.coords(rho, basis)
    np.testing.assert_allclose(a, [0.25] + [0.0] * 15, atol=1e-15)


def test_coords_max_entangled():
    # Oracle: direct trace inner products, computed here without qmat.coords.
    basis = qmat.operator_basis((2, 2))
    phi = qmat.maximally_entangled(2)
    a = qmat.coords(phi, basis)
    expected = np.array([np.real(np.trace(phi @ e)) / 4.0 for e in basis.elements])
    np.testing.assert_allclose(a, expected, atol=1e-15)
    # Nonzero only on identity, XX, YY, ZZ with values 1/4, 1/4, -1/4, 1/4.
    idx = {0: 0.25, 5: 0.25, 10: -0.25, 15: 0.25}
    for i, ai in enumerate(a):
        assert ai == pytest.approx(idx.get(i, 0.0), abs=1e-14)


def test_probe_state_pauli_coordinates():
    # rho1 carries p/4 on XX, -p/4 on YY, p/4 on ZZ over the embedded Paulis.
    p = 0.45
    rho1, _ = probe_pair_at_tau(p)
    for op2, sign in ((SIGMA_X, 1.0), (SIGMA_Y, -1.0), (SIGMA_Z, 1.0)):
        emb = np.zeros((3, 3), dtype=complex)
        emb[:2, :2] = op2
        e = np.kron(emb, op2)
        coeff = np.real(np.trace(rho1 @ e)) / np.real(np.trace(e @ e))
        assert coeff == pytest.approx(sign * p / 4.0, abs=1e-14)


def test_from_coords_round_trip():
    rng = np.random.default_rng(4)
    basis = qmat.operator_basis((2, 2))
    for _ in range(50):
        rho = qmat.DensityState(random_density(rng, 4), (2, 2))
        back = qmat.from_coords(qmat.coords(rho, basis), basis)
        np.testing.assert_allclose(back.matrix, rho.matrix, atol=1e-12)


def test_from_coords_rejects_non_state():
    basis = qmat.operator_basis((2,))
    a = np.array([0.5, 0.9, 0.0, 0.0])  # Bloch length > 1: not PSD
    with pytest.raises(NotAStateError):
        qmat.from_coords(a, basis)


def test_operator_basis_orthonormality():
    for dims in ((2,), (2, 2), (3, 2)):
        basis = qmat.operator_basis(dims)
        d = basis.total_dim
        assert basis.size == d * d
        np.testing.assert_allclose(basis.elements[0], np.eye(d), atol=0)
        gram = np.array([[np.trace(a @ b) for b in basis.elements] for a in basis.elements])
        np.testing.assert_allclose(gram, d * np.eye(d * d), atol=1e-12)
        for e in basis.elements:
            assert qmat.herm_defect(e) == 0.0


def test_herm_eig_reconstruction_random():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        d = int(rng.integers(2, 17))
        m = random_hermitian(rng, d, scale=float(rng.uniform(0.1, 5.0)))
        vals, vecs = qmat.herm_eig(m)
        recon = (vecs * vals) @ vecs.conj().T
        bound = 1e-9 * (1.0 + np.max(np.abs(m)))
        assert np.max(np.abs(recon - m)) <= bound
        assert np.all(np.diff(vals) <= 1e-12)


def test_trace_norm_triangle_and_unitary_invariance():
    rng = np.random.default_rng(6)
    for _ in range(100):
        d = int(rng.integers(2, 9))
        a = random_hermitian(rng, d)
        b = random_hermitian(rng, d)
        u = random_unitary(rng, d)
        assert qmat.trace_norm(a + b) <= qmat.trace_norm(a) + qmat.trace_norm(b) + 1e-10
        assert qmat.trace_norm(u @ a @ u.conj().T) == pytest.approx(qmat.trace_norm(a), rel=1e-10)


def test_partial_trace_kron_identity():
    rng = np.random.default_rng(7)
    for _ in range(100):
        da = int(rng.integers(2, 5))
        db = int(rng.integers(2, 5))
        a = random_hermitian(rng, da)
        b = random_hermitian(rng, db)
        got = qmat.partial_trace(np.kron(a, b), (da, db), keep=0)
        np.testing.assert_allclose(got, np.trace(b) * a, atol=1e-12)


def test_partial_trace_preserves_trace_and_linearity():
    rng = np.random.default_rng(8)
    m1 = random_hermitian(rng, 12)
    m2 = random_hermitian(rng, 12)
    t1 = qmat.partial_trace(m1, (2, 3, 2), keep=(0, 2))
    assert np.trace(t1) == pytest.approx(np.trace(m1), abs=1e-12)
    lin = qmat.partial_trace(2.0 * m1 - 0.5 * m2, (2, 3, 2), keep=(0, 2))
    np.testing.assert_allclose(lin, 2.0 * t1 - 0.5 * qmat.partial_trace(m2, (2, 3, 2), keep=(0, 2)),
                               atol=1e-12)
