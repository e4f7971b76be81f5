import numpy as np
import pytest

from mpsrestrict.chain import fixed_point, transfer_apply
from mpsrestrict.models import BUILTINS, aklt, aklt_pauli, clock, damping, jordan, markov


def test_registry_contents():
    assert set(BUILTINS) == {"aklt", "aklt-pauli", "jordan", "markov", "clock", "damping"}
    for factory in BUILTINS.values():
        K = factory()
        gram = sum(A.conj().T @ A for A in K.ops)
        assert np.linalg.norm(gram - np.eye(K.D)) < 1e-10


def test_aklt_matrices():
    K = aklt()
    s3 = 1.0 / np.sqrt(3.0)
    s23 = np.sqrt(2.0 / 3.0)
    assert np.allclose(K.ops[0], -s3 * np.diag([1.0, -1.0]), atol=1e-15)
    assert np.allclose(K.ops[1], [[0, 0], [s23, 0]], atol=1e-15)
    assert np.allclose(K.ops[2], [[0, -s23], [0, 0]], atol=1e-15)


def test_aklt_pauli_matrices_unitary_up_to_scale():
    K = aklt_pauli()
    for A in K.ops:
        assert np.allclose(3.0 * (A.conj().T @ A), np.eye(2), atol=1e-12)


def test_jordan_structure():
    K = jordan(3)
    assert K.d == 2 and K.D == 4
    assert np.allclose(K.ops[0], np.diag([1.0, 1.0, 1.0], k=-1), atol=1e-15)
    expected = np.zeros((4, 4))
    expected[3, 3] = 1.0
    assert np.allclose(K.ops[1], expected, atol=1e-15)
    with pytest.raises(ValueError):
        jordan(0)


def test_markov_encoding_and_validation():
    K = markov()
    assert K.d == 4 and K.D == 2
    # A_(0,1) = sqrt(0.2) |1><0| lives at flat index 1
    assert K.ops[1][1, 0] == pytest.approx(np.sqrt(0.2), abs=1e-15)
    assert np.count_nonzero(K.ops[1]) == 1
    with pytest.raises(ValueError):
        markov([[0.5, 0.6], [0.3, 0.7]])
    with pytest.raises(ValueError):
        markov([[1.2, -0.2], [0.3, 0.7]])
    with pytest.raises(ValueError):
        markov([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def test_clock_replacement_property():
    K = clock(4)
    assert K.d == 16 and K.D == 4
    rng = np.random.default_rng(0)
    chi = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    out = transfer_apply(K, chi)
    assert np.linalg.norm(out - np.trace(chi) * np.eye(4) / 4.0) < 1e-12
    with pytest.raises(ValueError):
        clock(1)


def test_damping_parameters():
    K = damping(0.25)
    assert np.allclose(K.ops[0], np.diag([1.0, np.sqrt(0.75)]), atol=1e-15)
    assert K.ops[1][0, 1] == pytest.approx(0.5, abs=1e-15)
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            damping(bad)
    # edge values are allowed
    damping(0.0)
    damping(1.0)


def test_fixed_points_of_builtins():
    assert np.allclose(fixed_point(aklt()).rho, np.eye(2) / 2, atol=1e-10)
    assert np.allclose(fixed_point(clock(3)).rho, np.eye(3) / 3, atol=1e-10)
    rho = fixed_point(markov()).rho
    assert np.allclose(rho, np.diag([0.6, 0.4]), atol=1e-10)
    rho = fixed_point(jordan(2)).rho
    assert np.allclose(rho, np.diag([0.0, 0.0, 1.0]), atol=1e-10)
