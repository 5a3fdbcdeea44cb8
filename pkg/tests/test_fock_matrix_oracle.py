import math

import numpy as np
import pytest

from conftest import random_hermitian
from wegnerflow.core_model import DivergenceReport, WegnerFlowError
from wegnerflow.flow_engine import IntegratorConfig
from wegnerflow.fock_matrix_oracle import (
    DenseHermitianMatrix,
    build_fock_matrix,
    eigenvalue_error_vs_truncation,
    hermitian_eigenvalues,
    integrate_matrix_flow,
    matrix_flow_rhs,
    read_matrix_text,
    roundoff_floor,
    write_matrix_text,
)

EX2 = np.array([[1.0, 0.1], [0.1, 0.0]])


def commutator_oracle(h):
    """Generic [[H_d, H], H] by explicit matrix products."""
    hd = np.diag(np.diag(h))
    eta = hd @ h - h @ hd
    return eta @ h - h @ eta


def test_build_fock_example():
    H = build_fock_matrix(1, 0.25, 0, 4).entries
    assert H.shape == (5, 5)
    assert H[2, 0] == pytest.approx(0.25 * math.sqrt(2), abs=1e-15)
    assert H[4, 2] == pytest.approx(0.25 * math.sqrt(12), abs=1e-15)
    assert H[1, 0] == 0 and H[3, 0] == 0
    np.testing.assert_array_equal(np.diag(H).real, [0, 1, 2, 3, 4])


def test_build_fock_shift_and_errors():
    a = build_fock_matrix(1, 0.25, 0, 6).entries
    b = build_fock_matrix(1, 0.25, 3, 6).entries
    np.testing.assert_array_equal(b - a, 3 * np.eye(7))
    with pytest.raises(WegnerFlowError):
        build_fock_matrix(1, 0.25, 0, 1)


def test_build_fock_against_ladder_operators():
    N = 10
    a = np.diag(np.sqrt(np.arange(1, N + 1)), 1)
    ad = a.T
    ref = 1.3 * ad @ a + 0.4 * (ad @ ad + a @ a) - 0.7 * np.eye(N + 1)
    np.testing.assert_allclose(build_fock_matrix(1.3, 0.4, -0.7, N).entries, ref, atol=1e-14)


def test_parity_sectors_decouple():
    m = build_fock_matrix(1, 0.3, 0, 12)
    even, odd = m.sector(0), m.sector(1)
    assert even.dim == 7 and odd.dim == 6
    full = np.sort(hermitian_eigenvalues(m))
    split = np.sort(np.concatenate([hermitian_eigenvalues(even), hermitian_eigenvalues(odd)]))
    np.testing.assert_allclose(full, split, atol=1e-12)
    with pytest.raises(WegnerFlowError):
        m.sector(2)


def test_two_by_two_eigenvalues():
    w = hermitian_eigenvalues(DenseHermitianMatrix(EX2))
    np.testing.assert_allclose(w, [(1 - math.sqrt(1.04)) / 2, (1 + math.sqrt(1.04)) / 2],
                               atol=1e-15)


def test_non_hermitian_rejected():
    with pytest.raises(WegnerFlowError, match="not Hermitian"):
        DenseHermitianMatrix([[1, 2], [0, 1]])
    with pytest.raises(WegnerFlowError):
        DenseHermitianMatrix([[1, 2, 3]])


def test_matrix_is_read_only():
    m = DenseHermitianMatrix(EX2)
    with pytest.raises(ValueError):
        m.entries[0, 0] = 5


def test_matrix_flow_rhs_example():
    f = matrix_flow_rhs(DenseHermitianMatrix(EX2))
    np.testing.assert_allclose(f, [[0.02, -0.1], [-0.1, -0.02]], atol=1e-16)


def test_matrix_flow_rhs_matches_commutator(rng):
    for dim in (2, 5, 9):
        h = random_hermitian(rng, dim)
        np.testing.assert_allclose(matrix_flow_rhs(h), commutator_oracle(h), atol=1e-12)
        # trace of every power is conserved: tr(f) = 0 and tr(h f) = 0
        f = matrix_flow_rhs(h)
        assert abs(np.trace(f)) < 1e-12 and abs(np.trace(h @ f)) < 1e-11


def test_matrix_flow_two_by_two():
    traj, diag = integrate_matrix_flow(DenseHermitianMatrix(EX2))
    assert traj.converged
    exact = [(1 + math.sqrt(1.04)) / 2, (1 - math.sqrt(1.04)) / 2]
    np.testing.assert_allclose(traj.terminal.diagonal(), exact, atol=1e-10)
    assert diag.offdiag_norm < 1e-10 * np.linalg.norm(EX2)
    assert diag.spectrum_drift < 1e-10


def test_matrix_flow_degenerate_stall():
    traj, _ = integrate_matrix_flow(DenseHermitianMatrix([[0, 1], [1, 0]]))
    assert isinstance(traj.terminal, DivergenceReport)
    assert traj.terminal.reason == "degenerate stall"
    np.testing.assert_allclose(traj.matrices[-1], [[0, 1], [1, 0]])


def test_matrix_flow_diagonal_input_unchanged():
    m = DenseHermitianMatrix(np.diag([3.0, -1.0, 2.0]))
    traj, diag = integrate_matrix_flow(m)
    assert traj.converged and traj.terminal == m
    assert diag.offdiag_norm == 0


def test_matrix_flow_fock_even_sector():
    m = build_fock_matrix(1, 0.25, 0, 12).sector(0)
    traj, diag = integrate_matrix_flow(m)
    assert traj.converged
    np.testing.assert_allclose(np.sort(traj.terminal.diagonal()), hermitian_eigenvalues(m),
                               atol=1e-9 * m.norm)
    assert np.all(np.diff(traj.step_offdiag) <= 0)


def test_matrix_flow_size_limit():
    with pytest.raises(WegnerFlowError):
        integrate_matrix_flow(DenseHermitianMatrix(np.eye(65)))


def test_matrix_flow_budget_reports():
    traj, _ = integrate_matrix_flow(DenseHermitianMatrix(EX2), IntegratorConfig(l_max=0.01))
    assert isinstance(traj.terminal, DivergenceReport)
    assert traj.terminal.reason == "l_max reached before convergence"


def test_text_roundtrip(rng):
    m = DenseHermitianMatrix(random_hermitian(rng, 4))
    assert read_matrix_text(write_matrix_text(m)) == m
    real = DenseHermitianMatrix(EX2)
    text = write_matrix_text(real)
    assert text == "2\n1 0.10000000000000001\n0.10000000000000001 0\n"
    assert read_matrix_text(text) == real


@pytest.mark.parametrize("text", ["", "2\n1 0\n", "x\n", "2\n1 2\n0 1\n", "2\n1 a\n0 1\n"])
def test_text_errors(text):
    with pytest.raises(WegnerFlowError):
        read_matrix_text(text)


def test_truncation_error_shrinks():
    sol_levels = [math.sqrt(0.75) * n + (math.sqrt(0.75) - 1) / 2 for n in range(5)]
    err = eigenvalue_error_vs_truncation(1, 0.25, 0, sol_levels, sizes=(10, 25, 50))
    assert err[10] > err[25] > max(err[50], roundoff_floor(1, 0.25, 0, 50))


def test_text_complex_entries():
    m = DenseHermitianMatrix([[1, 2 - 0.5j], [2 + 0.5j, -1]])
    text = write_matrix_text(m)
    assert text.splitlines()[1] == "1 2-0.5J"
    assert read_matrix_text(text.replace("J", "j")) == m
