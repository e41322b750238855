"""Fixed-excitation-number computational basis (one conserved S_z sector).

A configuration is an occupation bitmask: bit ``n-1`` set means site ``n`` carries an
excitation (spin up). Sites are labelled 1..L on every public surface, matching the
``φ(n, m)`` notation, and are read cyclically (site n+L is site n).

Sector states are generated in ascending bitmask order with the next-bit-permutation
trick, so the ordinal of a configuration never depends on how the sector was built.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
from dotenv import load_dotenv
from scipy.special import comb

from errors import DomainError

load_dotenv()

# Site cap for full-sector dense work. Single-excitation sectors stay tiny well past it.
MAX_SITES = int(os.getenv("XXZ_MAX_SITES", "24"))

PERIODIC = "periodic"
OPEN = "open"


@dataclass(frozen=True)
class Configuration:
    bits: int
    L: int

    @property
    def count(self) -> int:
        return bin(self.bits).count("1")

    @property
    def sites(self) -> tuple[int, ...]:
        """Excited sites, 1-based and ascending."""
        return tuple(n + 1 for n in range(self.L) if self.bits >> n & 1)

    def occupied(self, site: int) -> bool:
        return bool(self.bits >> ((site - 1) % self.L) & 1)

    def hops(self, boundary: str = PERIODIC) -> list[Configuration]:
        """Configurations reachable by moving one excitation to an empty nearest neighbour."""
        reached = []
        for i, j in bonds(self.L, boundary):
            if (self.bits >> i & 1) != (self.bits >> j & 1):
                reached.append(Configuration(self.bits ^ (1 << i) ^ (1 << j), self.L))
        return reached

    def label(self) -> str:
        return "φ(" + ",".join(str(s) for s in self.sites) + ")"


def bonds(L: int, boundary: str = PERIODIC) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds as 0-based site pairs (n, n+1); the wrap bond only when periodic.

    For L = 2 a periodic chain counts the pair twice, as the sum over n does.
    """
    if boundary not in (PERIODIC, OPEN):
        raise DomainError(f"boundary must be '{PERIODIC}' or '{OPEN}', got {boundary!r}")
    last = L if boundary == PERIODIC else L - 1
    return [(n, (n + 1) % L) for n in range(last)]


def configuration_of(sites: Iterable[int], L: int) -> Configuration:
    """Build the configuration with exactly the listed (cyclically reduced) sites excited."""
    bits = 0
    for site in sites:
        n = (int(site) - 1) % L
        if bits >> n & 1:
            raise DomainError(f"duplicate site label {site} (site {n + 1} modulo L={L})")
        bits |= 1 << n
    return Configuration(bits, L)


def _next_bit_permutation(x: int) -> int:
    u = x & -x
    v = x + u
    return v | (((v ^ x) // u) >> 2)


@dataclass(frozen=True)
class SectorBasis:
    L: int
    N: int
    states: tuple[Configuration, ...]
    index: dict[int, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.states)

    def index_of(self, config: Configuration) -> int:
        if config.L != self.L or config.count != self.N:
            raise DomainError(f"{config.label()} does not belong to the (L={self.L}, N={self.N}) sector")
        return self.index[config.bits]

    def configuration(self, sites: Iterable[int]) -> Configuration:
        config = configuration_of(sites, self.L)
        self.index_of(config)
        return config

    @cached_property
    def masks(self) -> np.ndarray:
        return np.array([c.bits for c in self.states], dtype=np.int64)

    @cached_property
    def _occupations(self) -> np.ndarray:
        occ = (self.masks[:, None] >> np.arange(self.L)[None, :]) & 1
        occ = occ.astype(float)
        occ.setflags(write=False)
        return occ

    def occupations(self) -> np.ndarray:
        """0/1 matrix of shape (dim, L): column n-1 flags configurations with site n excited."""
        return self._occupations


def enumerate_sector(L: int, N: int) -> SectorBasis:
    """All binomial(L, N) configurations with N excitations, in ascending bitmask order."""
    if L < 2:
        raise DomainError(f"a chain needs at least 2 sites, got L={L}")
    if L > MAX_SITES:
        raise DomainError(f"L={L} exceeds the dense sector cap XXZ_MAX_SITES={MAX_SITES}")
    if not 0 <= N <= L:
        raise DomainError(f"excitation number must satisfy 0 <= N <= L, got N={N}, L={L}")

    dim = int(comb(L, N, exact=True))
    masks = [(1 << N) - 1]
    for _ in range(dim - 1):
        masks.append(_next_bit_permutation(masks[-1]))
    states = tuple(Configuration(m, L) for m in masks)
    return SectorBasis(L=L, N=N, states=states, index={m: i for i, m in enumerate(masks)})
