"""Sector-restricted XXZ + Zeeman Hamiltonian, energies counted from the all-down ground state.

    H = Σ_n ε_n/2 σ^z_n + Σ_n [ JΔ/4 σ^z_n σ^z_{n+1} + J/8 (σ^+_n σ^-_{n+1} + σ^-_n σ^+_{n+1}) ]

Ladder convention: σ^± = σ^x ± iσ^y, with no factor 1/2. With it the J/8 prefactor gives a
single-hop matrix element of J/2, the only normalisation consistent with an effective
hopping J/2 between adjacent defects and a one-excitation band E₁ ± J.

Diagonal of a configuration, measured from E₀ = -Σ ε_n/2 + (bonds)·JΔ/4:
    Σ_{excited n} (ε + d_n) - (JΔ/2)·(number of anti-aligned bonds)

A periodic two-site ring carries its pair twice, so there the hop is J rather than J/2.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np
import psutil
from dotenv import load_dotenv

from basis import OPEN, PERIODIC, SectorBasis, bonds, enumerate_sector
from errors import DomainError

load_dotenv()

DENSE_MEMORY_FRACTION = float(os.getenv("XXZ_DENSE_MEMORY_FRACTION", "0.5"))

# ε is "much larger" than J, JΔ and d_n below this ratio we only warn.
REGIME_RATIO = 10.0

NONE = "none"
LINEAR = "linear"
QUADRATIC = "quadratic"
SHAPES = (NONE, LINEAR, QUADRATIC)


@dataclass(frozen=True)
class ChainSpec:
    L: int
    J: float = 1.0
    Delta: float = 1.0
    epsilon: float = 1000.0
    defects: Mapping[int, float] = field(default_factory=dict)
    boundary: str = PERIODIC
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.L < 2:
            raise DomainError(f"a chain needs at least 2 sites, got L={self.L}")
        if self.J <= 0:
            raise DomainError(f"hopping J must be positive, got {self.J}")
        if self.Delta < 0:
            raise DomainError(f"anisotropy Delta must be >= 0, got {self.Delta}")
        if self.boundary not in (PERIODIC, OPEN):
            raise DomainError(f"boundary must be '{PERIODIC}' or '{OPEN}', got {self.boundary!r}")
        clean = {}
        for site, d in self.defects.items():
            site = int(site)
            if not 1 <= site <= self.L:
                raise DomainError(f"defect site {site} outside 1..{self.L}")
            if d <= 0:
                raise DomainError(f"defect offset on site {site} must be positive, got {d}")
            clean[site] = float(d)
        object.__setattr__(self, "defects", dict(sorted(clean.items())))

        largest = max([self.J, self.J * self.Delta, *self.defects.values()])
        if self.epsilon < REGIME_RATIO * largest:
            msg = (f"epsilon={self.epsilon} is not >> max(J, J*Delta, d_n)={largest}; "
                   "the all-down state may not be the ground state")
            print(f"[hamiltonian] WARNING: {msg}", flush=True)
            object.__setattr__(self, "warnings", (*self.warnings, msg))

    def level_spacing(self, site: int) -> float:
        return self.epsilon + self.defects.get(int(site), 0.0)

    def offset(self, site: int) -> float:
        return self.defects.get(int(site), 0.0)

    def bond_count(self) -> int:
        return len(bonds(self.L, self.boundary))

    def ground_energy(self) -> float:
        """E₀ of the all-down state, the zero of every sector matrix."""
        zeeman = sum(self.level_spacing(n) for n in range(1, self.L + 1))
        return -zeeman / 2 + self.bond_count() * self.J * self.Delta / 4

    def single_excitation_energy(self) -> float:
        """E₁ = ε - JΔ, the bulk single-excitation level."""
        return self.epsilon - self.J * self.Delta

    def with_defects(self, defects: Mapping[int, float]) -> ChainSpec:
        return replace(self, defects=dict(defects), warnings=())

    def with_delta(self, delta: float) -> ChainSpec:
        return replace(self, Delta=delta, warnings=())


@dataclass(frozen=True)
class SiteDetuning:
    site: int
    shape: str = NONE
    rate: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise DomainError(f"detuning shape must be one of {SHAPES}, got {self.shape!r}")
        if self.rate < 0:
            raise DomainError(f"detuning rate must be >= 0, got {self.rate}")

    def offset(self, t: float) -> float:
        if self.shape == NONE or t < self.t0:
            return 0.0
        if self.shape == LINEAR:
            return self.rate * (t - self.t0)
        return self.rate * (t - self.t0) ** 2


@dataclass(frozen=True)
class DetuningSchedule:
    entries: tuple[SiteDetuning, ...] = ()

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(e.site for e in self.entries)

    def offsets(self, t: float) -> np.ndarray:
        return np.array([e.offset(t) for e in self.entries], dtype=float)

    def is_active(self, t_start: float, t_end: float) -> bool:
        """Whether any entry shifts a level somewhere inside [t_start, t_end]."""
        return any(e.shape != NONE and e.rate > 0 and e.t0 < t_end for e in self.entries)


def schedule_of(*entries: SiteDetuning) -> DetuningSchedule:
    return DetuningSchedule(tuple(entries))


@dataclass(frozen=True)
class SectorMatrix:
    basis: SectorBasis
    entries: np.ndarray
    support: tuple[int, ...]
    raw: bool = False

    @property
    def configurations(self):
        return tuple(self.basis.states[i] for i in self.support)

    def is_full(self) -> bool:
        return len(self.support) == len(self.basis)


def _check_dense_memory(dim: int) -> None:
    needed = dim * dim * 8
    available = psutil.virtual_memory().available
    if needed > DENSE_MEMORY_FRACTION * available:
        raise DomainError(
            f"dense sector matrix of dimension {dim} needs {needed / 1e9:.2f} GB, "
            f"more than {DENSE_MEMORY_FRACTION:.0%} of the {available / 1e9:.2f} GB available"
        )


def build_static(spec: ChainSpec, N: int, raw: bool = False) -> SectorMatrix:
    """The Hamiltonian on the N-excitation sector; the ground-state energy is subtracted unless ``raw``."""
    basis = enumerate_sector(spec.L, N)
    dim = len(basis)
    _check_dense_memory(dim)

    spacings = np.array([spec.level_spacing(n) for n in range(1, spec.L + 1)])
    bond_list = bonds(spec.L, spec.boundary)
    ising = spec.J * spec.Delta / 2
    hop = spec.J / 2

    H = np.zeros((dim, dim))
    for i, config in enumerate(basis.states):
        bits = config.bits
        diagonal = 0.0
        for n in range(spec.L):
            if bits >> n & 1:
                diagonal += spacings[n]
        for a, b in bond_list:
            if (bits >> a & 1) != (bits >> b & 1):
                diagonal -= ising
                j = basis.index[bits ^ (1 << a) ^ (1 << b)]
                H[i, j] += hop
        H[i, i] = diagonal

    if raw:
        H[np.diag_indices(dim)] += spec.ground_energy()
    H.setflags(write=False)
    return SectorMatrix(basis=basis, entries=H, support=tuple(range(dim)), raw=raw)


def detuning_masks(matrix: SectorMatrix, schedule: DetuningSchedule) -> np.ndarray:
    """Occupation of each detuned site on the matrix support, shape (entries, support)."""
    occ = matrix.basis.occupations()[list(matrix.support)]
    if not schedule.entries:
        return np.zeros((0, len(matrix.support)))
    for site in schedule.sites:
        if not 1 <= site <= matrix.basis.L:
            raise DomainError(f"detuned site {site} outside 1..{matrix.basis.L}")
    return occ[:, [s - 1 for s in schedule.sites]].T.copy()


def with_detuning(matrix: SectorMatrix, schedule: DetuningSchedule, t: float) -> SectorMatrix:
    """Add δ_n(t) to the diagonal of every configuration with site n excited."""
    shift = schedule.offsets(t) @ detuning_masks(matrix, schedule) if schedule.entries else 0.0
    entries = matrix.entries + np.diag(np.broadcast_to(shift, (len(matrix.support),)))
    entries.setflags(write=False)
    return replace(matrix, entries=entries)


def build_at_time(spec: ChainSpec, schedule: DetuningSchedule, N: int, t: float) -> SectorMatrix:
    """``build_static`` with ε_n replaced by ε_n + δ_n(t)."""
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    return with_detuning(build_static(spec, N), schedule, t)


def defect_block(spec: ChainSpec, defect_sites: Iterable[int], N: int = 1) -> SectorMatrix:
    """Restriction of ``build_static`` to the configurations with the excitation on a defect."""
    if N != 1:
        raise DomainError(f"defect blocks are defined for one excitation, got N={N}")
    sites = [int(s) for s in defect_sites]
    if not sites:
        raise DomainError("defect_block needs at least one site")
    offsets = {spec.offset(s) for s in sites}
    if len(offsets) != 1 or 0.0 in offsets:
        raise DomainError(f"defect sites {sites} must all carry the same positive offset, got {sorted(offsets)}")

    full = build_static(spec, 1)
    support = tuple(full.basis.index_of(full.basis.configuration([s])) for s in sites)
    block = full.entries[np.ix_(support, support)].copy()
    block.setflags(write=False)
    return SectorMatrix(basis=full.basis, entries=block, support=support)

