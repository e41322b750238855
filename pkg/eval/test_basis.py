import pytest
from scipy.special import comb

from basis import MAX_SITES, OPEN, PERIODIC, Configuration, bonds, configuration_of, enumerate_sector
from errors import DomainError


@pytest.mark.parametrize("L,N", [(2, 1), (4, 2), (6, 3), (8, 1), (9, 4)])
def test_sector_size_and_order(L, N):
    basis = enumerate_sector(L, N)
    assert len(basis) == comb(L, N, exact=True)
    bits = [c.bits for c in basis.states]
    assert bits == sorted(bits)
    assert all(c.count == N for c in basis.states)
    assert all(basis.index_of(c) == i for i, c in enumerate(basis.states))


def test_empty_and_full_sectors():
    assert [c.bits for c in enumerate_sector(5, 0).states] == [0]
    assert [c.bits for c in enumerate_sector(5, 5).states] == [0b11111]


def test_sector_limits():
    with pytest.raises(DomainError):
        enumerate_sector(1, 0)
    with pytest.raises(DomainError):
        enumerate_sector(4, 5)
    with pytest.raises(DomainError):
        enumerate_sector(4, -1)
    with pytest.raises(DomainError):
        enumerate_sector(MAX_SITES + 1, 1)


def test_site_labels_are_cyclic_and_one_based():
    config = configuration_of([3, 1], 5)
    assert config.sites == (1, 3)
    assert config.label() == "φ(1,3)"
    assert configuration_of([6], 5) == configuration_of([1], 5)
    assert configuration_of([0], 5).sites == (5,)
    assert config.occupied(6) and not config.occupied(2)


def test_duplicate_sites_after_reduction():
    with pytest.raises(DomainError):
        configuration_of([1, 9], 8)


def test_bonds_by_boundary():
    assert bonds(4, PERIODIC) == [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert bonds(4, OPEN) == [(0, 1), (1, 2), (2, 3)]
    # the two-site ring counts its single pair twice
    assert bonds(2, PERIODIC) == [(0, 1), (1, 0)]
    with pytest.raises(DomainError):
        bonds(4, "twisted")


def test_hops():
    one = configuration_of([1], 4)
    assert sorted(c.sites for c in one.hops(PERIODIC)) == [(2,), (4,)]
    assert [c.sites for c in one.hops(OPEN)] == [(2,)]
    pair = configuration_of([1, 2], 5)
    assert sorted(c.sites for c in pair.hops(PERIODIC)) == [(1, 3), (2, 5)]


def test_index_of_rejects_foreign_configurations():
    basis = enumerate_sector(6, 2)
    with pytest.raises(DomainError):
        basis.index_of(configuration_of([1], 6))
    with pytest.raises(DomainError):
        basis.index_of(Configuration(0b11, 7))
    with pytest.raises(DomainError):
        basis.configuration([2])


def test_occupations():
    basis = enumerate_sector(6, 2)
    occ = basis.occupations()
    assert occ.shape == (15, 6)
    assert (occ.sum(axis=1) == 2).all()
    row = basis.index_of(basis.configuration([2, 5]))
    assert list(occ[row]) == [0, 1, 0, 0, 1, 0]
    assert not occ.flags.writeable
