from functools import reduce

import numpy as np
import pytest

import hamiltonian
from basis import OPEN, PERIODIC, enumerate_sector
from errors import DomainError
from hamiltonian import (
    LINEAR,
    QUADRATIC,
    ChainSpec,
    SiteDetuning,
    build_at_time,
    build_static,
    defect_block,
    schedule_of,
    with_detuning,
)

# single-site operators, ordering (down, up)
I2 = np.eye(2)
SZ = np.diag([-1.0, 1.0])
SP = np.array([[0.0, 0.0], [2.0, 0.0]])  # σx + iσy
SM = SP.T


def site_op(op, n, L):
    factors = [I2] * L
    factors[L - n] = op  # leftmost factor is the highest bit, i.e. site L
    return reduce(np.kron, factors)


def chain_bonds(L, boundary):
    """Nearest-neighbour pairs as the sum over n reads them: (n, n+1), the wrap term included when periodic."""
    last = L if boundary == PERIODIC else L - 1
    return [(n, n % L + 1) for n in range(1, last + 1)]


def pauli_hamiltonian(spec: ChainSpec) -> np.ndarray:
    L = spec.L
    H = sum(spec.level_spacing(n) / 2 * site_op(SZ, n, L) for n in range(1, L + 1))
    for na, nb in chain_bonds(L, spec.boundary):
        H = H + spec.J * spec.Delta / 4 * site_op(SZ, na, L) @ site_op(SZ, nb, L)
        H = H + spec.J / 8 * (site_op(SP, na, L) @ site_op(SM, nb, L) + site_op(SM, na, L) @ site_op(SP, nb, L))
    return H


def make_spec(L, boundary):
    defects = {1: 2.5, 3: 0.7} if L >= 3 else {2: 1.5}
    return ChainSpec(L=L, J=1.0, Delta=1.3, epsilon=100.0, defects=defects, boundary=boundary)


@pytest.mark.parametrize("boundary", [PERIODIC, OPEN])
@pytest.mark.parametrize("L", [2, 3, 4, 5, 6])
def test_sector_blocks_match_pauli_construction(L, boundary):
    spec = make_spec(L, boundary)
    full = pauli_hamiltonian(spec)
    E0 = full[0, 0]
    assert E0 == pytest.approx(spec.ground_energy(), abs=1e-9)
    for N in range(L + 1):
        raw = build_static(spec, N, raw=True)
        rows = raw.basis.masks
        np.testing.assert_allclose(raw.entries, full[np.ix_(rows, rows)], atol=1e-9, rtol=0)
        shifted = build_static(spec, N)
        np.testing.assert_allclose(shifted.entries, full[np.ix_(rows, rows)] - E0 * np.eye(len(rows)), atol=1e-9, rtol=0)


def test_sectors_are_not_coupled():
    spec = make_spec(5, PERIODIC)
    full = pauli_hamiltonian(spec)
    counts = np.array([bin(i).count("1") for i in range(2 ** spec.L)])
    coupled = np.abs(full) > 0
    assert not np.any(coupled & (counts[:, None] != counts[None, :]))


def test_single_excitation_band():
    spec = ChainSpec(L=12)
    values = np.linalg.eigvalsh(build_static(spec, 1).entries)
    expected = np.sort(spec.single_excitation_energy() + spec.J * np.cos(2 * np.pi * np.arange(12) / 12))
    np.testing.assert_allclose(values, expected, atol=1e-10, rtol=0)


def test_empty_sector_is_zero():
    H = build_static(ChainSpec(L=6), 0)
    assert H.entries.shape == (1, 1)
    assert H.entries[0, 0] == 0.0


def test_hop_and_diagonal_values():
    spec = ChainSpec(L=6, J=1.0, Delta=2.0, epsilon=1000.0, defects={2: 10.0})
    H = build_static(spec, 1)
    basis = H.basis
    i1, i2 = basis.index_of(basis.configuration([1])), basis.index_of(basis.configuration([2]))
    assert H.entries[i1, i1] == pytest.approx(spec.single_excitation_energy())
    assert H.entries[i2, i2] == pytest.approx(spec.single_excitation_energy() + 10.0)
    assert H.entries[i1, i2] == pytest.approx(0.5)
    assert not H.entries.flags.writeable


def test_open_chain_ends():
    spec = ChainSpec(L=4, Delta=2.0, boundary=OPEN)
    H = build_static(spec, 1)
    i1 = H.basis.index_of(H.basis.configuration([1]))
    assert H.entries[i1, i1] == pytest.approx(spec.epsilon - spec.J * spec.Delta / 2)


def test_chain_validation():
    with pytest.raises(DomainError):
        ChainSpec(L=1)
    with pytest.raises(DomainError):
        ChainSpec(L=4, J=0.0)
    with pytest.raises(DomainError):
        ChainSpec(L=4, Delta=-1.0)
    with pytest.raises(DomainError):
        ChainSpec(L=4, defects={5: 1.0})
    with pytest.raises(DomainError):
        ChainSpec(L=4, defects={2: -1.0})
    with pytest.raises(DomainError):
        ChainSpec(L=4, boundary="twisted")


def test_regime_warning_is_attached_not_raised():
    spec = ChainSpec(L=4, epsilon=5.0, defects={1: 2.0})
    assert spec.warnings and "epsilon" in spec.warnings[0]
    assert ChainSpec(L=4).warnings == ()


def test_epsilon_only_shifts_the_reference():
    low = build_static(ChainSpec(L=6, epsilon=200.0, defects={2: 10.0}), 2).entries
    high = build_static(ChainSpec(L=6, epsilon=1000.0, defects={2: 10.0}), 2).entries
    np.testing.assert_allclose(high - low, 1600.0 * np.eye(len(low)), atol=1e-9)


def test_detuning_offsets():
    linear = SiteDetuning(1, LINEAR, 2.0, 1.0)
    quadratic = SiteDetuning(1, QUADRATIC, 2.0, 1.0)
    assert linear.offset(0.5) == 0.0
    assert linear.offset(3.0) == pytest.approx(4.0)
    assert quadratic.offset(3.0) == pytest.approx(8.0)
    schedule = schedule_of(linear, SiteDetuning(2))
    assert schedule.is_active(0.0, 2.0)
    assert not schedule.is_active(0.0, 1.0)
    assert not schedule_of(SiteDetuning(2, LINEAR, 0.0)).is_active(0.0, 10.0)
    with pytest.raises(DomainError):
        SiteDetuning(1, "cubic", 1.0)
    with pytest.raises(DomainError):
        SiteDetuning(1, LINEAR, -1.0)


@pytest.mark.parametrize("N", [1, 2])
def test_build_at_time_equals_shifted_level_spacing(N):
    spec = ChainSpec(L=6, defects={1: 10.0})
    schedule = schedule_of(SiteDetuning(2, LINEAR, 1.5, 0.0))
    shifted = spec.with_defects({1: 10.0, 2: 3.0})
    np.testing.assert_allclose(build_at_time(spec, schedule, N, 2.0).entries, build_static(shifted, N).entries, atol=1e-9)
    with pytest.raises(DomainError):
        build_at_time(spec, schedule, N, -1.0)


def test_detuning_on_a_block_only_touches_its_support():
    spec = ChainSpec(L=8, defects={1: 10.0, 2: 10.0})
    block = defect_block(spec, [1, 2])
    moved = with_detuning(block, schedule_of(SiteDetuning(1, LINEAR, 1.0, 0.0)), 3.0)
    np.testing.assert_allclose(np.diag(moved.entries) - np.diag(block.entries), [3.0, 0.0])


def test_defect_block():
    spec = ChainSpec(L=8, defects={1: 10.0, 2: 10.0})
    block = defect_block(spec, [1, 2])
    E = spec.single_excitation_energy() + 10.0
    np.testing.assert_allclose(block.entries, [[E, 0.5], [0.5, E]])
    assert [c.sites for c in block.configurations] == [(1,), (2,)]
    assert not block.is_full()
    with pytest.raises(DomainError):
        defect_block(ChainSpec(L=8, defects={1: 10.0, 2: 12.0}), [1, 2])
    with pytest.raises(DomainError):
        defect_block(spec, [1, 5])
    with pytest.raises(DomainError):
        defect_block(spec, [1, 2], N=2)


def test_dense_memory_guard(monkeypatch):
    monkeypatch.setattr(hamiltonian, "DENSE_MEMORY_FRACTION", 1e-30)
    with pytest.raises(DomainError):
        build_static(ChainSpec(L=6), 3)


def test_sector_basis_reused_by_block_and_chain():
    spec = ChainSpec(L=8, defects={1: 10.0, 2: 10.0})
    assert defect_block(spec, [1, 2]).basis.states == enumerate_sector(8, 1).states


def test_two_site_ring_counts_its_pair_twice():
    ring = build_static(ChainSpec(L=2, Delta=1.0), 1)
    line = build_static(ChainSpec(L=2, Delta=1.0, boundary=OPEN), 1)
    assert ring.entries[0, 1] == pytest.approx(1.0)
    assert line.entries[0, 1] == pytest.approx(0.5)
    assert chain_bonds(2, PERIODIC) == [(1, 2), (2, 1)]
