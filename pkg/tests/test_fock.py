import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omtrans import fock
from omtrans.errors import InvalidArgument


def test_row_major_index():
    space = fock.make_space([2, 3, 4])
    assert space.index((1, 2, 3)) == (1 * 3 + 2) * 4 + 3
    assert space.occupation(space.index((0, 1, 2))) == (0, 1, 2)
    assert space.total_dim == 24


def test_cap_keeps_relative_order():
    full = fock.make_space([3, 3, 3, 5])
    capped = fock.make_space([3, 3, 3, 5], excitation_cap=2, capped_modes=(0, 1, 2))
    assert all(sum(s[:3]) <= 2 for s in capped.states)
    idx = [full.index(tuple(s)) for s in capped.states]
    assert idx == sorted(idx)
    big = fock.make_space([3, 3], excitation_cap=10)
    assert np.array_equal(big.states, fock.make_space([3, 3]).states)
    with pytest.raises(InvalidArgument):
        capped.index((2, 1, 0, 0))


@pytest.mark.parametrize("dims", [[], [0, 2], [2] * 5])
def test_bad_dims(dims):
    with pytest.raises(InvalidArgument):
        fock.make_space(dims)


def test_ladder_matrix_elements():
    space = fock.make_space([5, 3])
    a = fock.annihilator(space, 0).toarray()
    for n in range(1, 5):
        for k in range(3):
            assert a[space.index((n - 1, k)), space.index((n, k))] == pytest.approx(math.sqrt(n))
    assert np.allclose(fock.creator(space, 0).toarray(), a.conj().T)


def test_commutator_away_from_cutoff():
    space = fock.make_space([6])
    a = fock.annihilator(space, 0)
    c = fock.commutator(a, a.dag()).toarray()
    assert np.allclose(np.diag(c)[:-1], 1.0)
    assert np.allclose(c - np.diag(np.diag(c)), 0.0)


def test_number_and_compose():
    space = fock.make_space([4, 4])
    n = fock.number(space, 1).toarray()
    assert np.allclose(np.diag(n), space.states[:, 1])
    a = fock.annihilator(space, 1)
    comp = fock.compose([(a.dag() @ a, 2.0), (fock.identity(space), -1.0)]).toarray()
    assert np.allclose(comp, 2 * n - np.eye(space.total_dim))


def test_mismatched_spaces():
    a = fock.annihilator(fock.make_space([3]), 0)
    b = fock.annihilator(fock.make_space([4]), 0)
    with pytest.raises(InvalidArgument):
        fock.multiply(a, b)
    with pytest.raises(InvalidArgument):
        fock.annihilator(fock.make_space([3]), 2)


def test_displacement_identity_at_zero():
    space = fock.make_space([5, 7])
    assert np.allclose(fock.displacement(space, 1, 0.0).toarray(), np.eye(35))


def _taylor_expm(m, terms=60):
    out = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    return out


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5))
def test_displacement_matches_series(beta):
    space = fock.make_space([8])
    a = fock.annihilator(space, 0).toarray()
    ref = _taylor_expm(beta * (a - a.conj().T))
    got = fock.displacement(space, 0, beta).toarray()
    assert np.allclose(got, ref, atol=1e-12)
    assert np.allclose(got @ got.conj().T, np.eye(8), atol=1e-12)


def test_displacement_coherent_state():
    space = fock.make_space([40])
    beta = 0.7
    psi = fock.displacement(space, 0, beta).toarray()[:, 0]
    ref = np.array([math.exp(-beta ** 2 / 2) * (-beta) ** n / math.sqrt(math.factorial(n))
                    for n in range(40)])
    assert np.allclose(psi, ref, atol=1e-12)


@pytest.mark.parametrize("beta", [0.1, 0.5, 1.0])
def test_displacement_inverse(beta):
    space = fock.make_space([math.ceil(10 * (beta ** 2 + 1)) + 1])
    prod = fock.displacement(space, 0, beta) @ fock.displacement(space, 0, -beta)
    assert np.allclose(prod.toarray(), np.eye(space.total_dim), atol=1e-8)
