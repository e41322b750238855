import math

import numpy as np
import pytest

from basis import enumerate_sector
from entanglement import (
    BRANCHES,
    ReducedDensity,
    bell_target,
    bound_pair_bell_target,
    bound_pair_configurations,
    concurrence,
    fidelity,
    global_entanglement,
    pair_concurrence,
    phase_fidelity,
    reduce,
    select_branch,
    three_defect_eigenstate,
    w_target,
)
from errors import DomainError
from evolve import StateVector


@pytest.fixture
def one():
    return enumerate_sector(6, 1)


def random_state(basis, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    return StateVector(basis, amps / np.linalg.norm(amps))


def test_reduce_single_excitation(one):
    psi = StateVector.from_configuration(one, [2])
    rho = reduce(psi, [2])
    np.testing.assert_allclose(rho.matrix, [[0, 0], [0, 1]], atol=1e-12)
    rho = reduce(psi, [1, 2])
    # first listed site is the most significant bit: |01⟩ means site 2 excited
    np.testing.assert_allclose(np.diag(rho.matrix).real, [0, 1, 0, 0], atol=1e-12)


def test_reduce_w_state_purity():
    basis = enumerate_sector(3, 1)
    psi = w_target(basis, 1, 2, 3)
    rho = reduce(psi, [1])
    np.testing.assert_allclose(rho.matrix, np.diag([2 / 3, 1 / 3]), atol=1e-12)
    assert rho.purity() == pytest.approx(5 / 9)
    assert rho.eigenvalues().sum() == pytest.approx(1.0)


def test_reduce_argument_checks(one):
    psi = StateVector.from_configuration(one, [1])
    with pytest.raises(DomainError):
        reduce(psi, [])
    with pytest.raises(DomainError):
        reduce(psi, [0])
    with pytest.raises(DomainError):
        reduce(psi, [7])
    with pytest.raises(DomainError):
        reduce(psi, [1, 1])
    with pytest.raises(DomainError):
        reduce(psi, [1, 2, 3, 4, 5])


def test_reduced_density_validation():
    with pytest.raises(DomainError):
        ReducedDensity((1,), np.eye(2))
    with pytest.raises(DomainError):
        ReducedDensity((1,), np.array([[0.5, 0.3], [0.1, 0.5]]))
    with pytest.raises(DomainError):
        ReducedDensity((1, 2), np.eye(2) / 2)


def test_concurrence_limits(one):
    assert pair_concurrence(bell_target(one, 1, 3), 1, 3) == pytest.approx(1.0, abs=1e-9)
    assert pair_concurrence(bell_target(one, 1, 3, 1j), 1, 3) == pytest.approx(1.0, abs=1e-9)
    assert pair_concurrence(StateVector.from_configuration(one, [1]), 1, 3) == pytest.approx(0.0, abs=1e-9)
    # a Bell pair elsewhere leaves sites 1 and 3 unentangled
    assert pair_concurrence(bell_target(one, 4, 5), 1, 3) == pytest.approx(0.0, abs=1e-9)


def test_concurrence_of_w_pairs():
    basis = enumerate_sector(3, 1)
    psi = w_target(basis, 1, 2, 3)
    for a, b in ((1, 2), (2, 3), (1, 3)):
        assert pair_concurrence(psi, a, b) == pytest.approx(2 / 3, abs=1e-9)


def test_concurrence_needs_two_qubits_and_psd():
    with pytest.raises(DomainError):
        concurrence(ReducedDensity((1,), np.diag([0.5, 0.5])))
    with pytest.raises(DomainError):
        concurrence(ReducedDensity((1, 2), np.diag([1.1, -0.1, 0.0, 0.0])))


def test_global_entanglement_values():
    basis = enumerate_sector(8, 1)
    assert global_entanglement(StateVector.from_configuration(basis, [4])) == pytest.approx(0.0)
    assert global_entanglement(bell_target(basis, 1, 3)) == pytest.approx(2 / 8)
    assert global_entanglement(w_target(enumerate_sector(3, 1), 1, 2, 3)) == pytest.approx(8 / 9)


def test_global_entanglement_ignores_configuration_phases():
    basis = enumerate_sector(6, 2)
    psi = random_state(basis, 7)
    phases = np.exp(1j * np.linspace(0.0, 3.0, len(basis)))
    rotated = StateVector(basis, psi.amplitudes * phases)
    assert global_entanglement(rotated) == pytest.approx(global_entanglement(psi), abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_measures_stay_in_range(seed):
    basis = enumerate_sector(6, 2)
    psi = random_state(basis, seed)
    assert 0.0 <= global_entanglement(psi) <= 1.0
    assert 0.0 <= pair_concurrence(psi, 2, 5) <= 1.0
    assert 0.0 <= fidelity(psi, psi) <= 1.0 + 1e-12


def test_fidelities(one):
    target = bell_target(one, 1, 3)
    twisted = bell_target(one, 1, 3, -1)
    assert fidelity(target, target) == pytest.approx(1.0)
    assert fidelity(twisted, target) == pytest.approx(0.0, abs=1e-12)
    assert phase_fidelity(twisted, target) == pytest.approx(1.0)
    assert phase_fidelity(StateVector.from_configuration(one, [1]), target) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        fidelity(target, StateVector.from_configuration(enumerate_sector(6, 2), [1, 2]))


def test_targets(one):
    with pytest.raises(DomainError):
        bell_target(one, 2, 2)
    with pytest.raises(DomainError):
        bell_target(one, 2, 8)  # site 8 is site 2 on a ring of 6
    bell = bell_target(one, 2, 5, -1j)
    assert bell.amplitudes[one.index_of(one.configuration([5]))] == pytest.approx(-1j / math.sqrt(2))
    with pytest.raises(DomainError):
        bell_target(one, 1, 2, 2.0)
    with pytest.raises(DomainError):
        bell_target(enumerate_sector(6, 2), 1, 2)

    w = w_target(one, 2, 3, 4, 1j)
    assert w.amplitudes[one.index_of(one.configuration([3]))] == pytest.approx(1 / math.sqrt(3))
    assert w.amplitudes[one.index_of(one.configuration([2]))] == pytest.approx(1j / math.sqrt(3))


def test_bound_pair_targets():
    basis = enumerate_sector(6, 2)
    left, right = bound_pair_configurations(basis, 1)
    assert left.sites == (1, 6) and right.sites == (1, 2)
    psi = bound_pair_bell_target(basis, 3, 1j)
    assert fidelity(psi, psi) == pytest.approx(1.0)
    assert pair_concurrence(psi, 2, 4) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(DomainError):
        bound_pair_configurations(enumerate_sector(6, 1), 3)


def test_three_defect_eigenstates_are_orthonormal(one):
    states = [three_defect_eigenstate(one, 2, label) for label in "abc"]
    gram = np.array([[np.vdot(a.amplitudes, b.amplitudes) for b in states] for a in states])
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)
    with pytest.raises(DomainError):
        three_defect_eigenstate(one, 2, "d")


def test_select_branch(one):
    psi = bell_target(one, 1, 3, 1j)
    label, target, f = select_branch(psi, lambda s: bell_target(one, 1, 3, s))
    assert label == "+i"
    assert f == pytest.approx(1.0)
    assert target is not None
    assert set(BRANCHES) == {"+", "-", "+i", "-i"}


def full_register(psi):
    """Dense 2^L amplitude vector, bit n-1 of the index flagging site n."""
    full = np.zeros(2 ** psi.basis.L, dtype=complex)
    full[psi.basis.masks] = psi.amplitudes
    return full


def test_reduce_matches_a_dense_partial_trace():
    basis = enumerate_sector(5, 2)
    psi = random_state(basis, 11)
    L = basis.L
    # C-order reshape puts site L on axis 0
    tensor = full_register(psi).reshape([2] * L)
    for subset in [(1, 2), (4, 2), (3,), (5, 1, 3)]:
        kept = [L - s for s in subset]
        rest = [axis for axis in range(L) if axis not in kept]
        A = np.transpose(tensor, kept + rest).reshape(2 ** len(subset), -1)
        rho = reduce(psi, subset)
        np.testing.assert_allclose(rho.matrix, A @ A.conj().T, atol=1e-12)
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)


def test_reduce_of_a_superposition_with_distinct_environments(one):
    alpha, beta = 0.6, 0.8j
    first = StateVector.from_configuration(one, [1])
    fourth = StateVector.from_configuration(one, [4])
    psi = StateVector(one, alpha * first.amplitudes + beta * fourth.amplitudes)
    # site 4 stays in the traced environment, so no coherence survives between the branches
    expected = abs(alpha) ** 2 * reduce(first, (1, 2)).matrix + abs(beta) ** 2 * reduce(fourth, (1, 2)).matrix
    np.testing.assert_allclose(reduce(psi, (1, 2)).matrix, expected, atol=1e-12)


def test_concurrence_ignores_local_z_phases():
    basis = enumerate_sector(6, 2)
    rng = np.random.default_rng(3)
    for seed in range(4):
        psi = random_state(basis, seed)
        angles = rng.uniform(0.0, 2 * math.pi, size=basis.L)
        rotated = StateVector(basis, psi.amplitudes * np.exp(1j * basis.occupations() @ angles))
        for pair in [(1, 2), (2, 5), (6, 3)]:
            assert pair_concurrence(rotated, *pair) == pytest.approx(pair_concurrence(psi, *pair), abs=1e-9)
        assert global_entanglement(rotated) == pytest.approx(global_entanglement(psi), abs=1e-12)


def test_measures_stay_in_range_over_many_states():
    rng = np.random.default_rng(2024)
    sectors = [enumerate_sector(5, N) for N in (1, 2, 3)]
    for k in range(1000):
        basis = sectors[k % len(sectors)]
        amps = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        psi = StateVector(basis, amps / np.linalg.norm(amps))
        n1, n2 = rng.choice(np.arange(1, 6), size=2, replace=False)
        assert 0.0 <= pair_concurrence(psi, int(n1), int(n2)) <= 1.0
        assert 0.0 <= global_entanglement(psi) <= 1.0
