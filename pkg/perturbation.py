"""Closed-form effective models for resonant defects and bound pairs.

Every model is a few-level ``SectorMatrix`` over the resonant configurations, embedded in the
full sector basis through its ``support`` so it can be propagated like any chain matrix.
Energies follow the hamiltonian module: counted from the all-down ground state, E₁ = ε - JΔ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import comb

from basis import PERIODIC, bonds, enumerate_sector
from entanglement import bound_pair_configurations
from errors import DomainError
from evolve import EigenSystem, diagonalize
from hamiltonian import ChainSpec, SectorMatrix, build_static

# Resonant-defect treatment is trusted only for d > DEFECT_RATIO * J.
DEFECT_RATIO = 5.0
# JΔ ≫ d ≫ J, read as a factor of at least BOUND_PAIR_RATIO at each step.
BOUND_PAIR_RATIO = 2.0
BAND_TOLERANCE_FACTOR = 3.0

TWO_DEFECT = "two_defect"
THREE_DEFECT = "three_defect"
BOUND_PAIR = "bound_pair"


@dataclass(frozen=True)
class EffectiveModel:
    kind: str
    sites: tuple[int, ...]
    matrix: SectorMatrix
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    splitting: float
    order: int
    extrapolated: bool = False
    params: dict = field(default_factory=dict, compare=False)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def dimension(self) -> int:
        return len(self.matrix.support)

    @property
    def configurations(self):
        return self.matrix.configurations

    def period(self) -> float:
        return 2 * math.pi / self.splitting

    def as_eigensystem(self) -> EigenSystem:
        """The analytic eigenpairs, ready for ``propagate_static``."""
        return EigenSystem(basis=self.matrix.basis, support=self.matrix.support,
                           eigenvalues=self.eigenvalues, eigenvectors=self.eigenvectors)


@dataclass(frozen=True)
class BandPrediction:
    label: str
    center: float
    half_width: float
    count: int

    def __post_init__(self):
        if self.half_width < 0:
            raise DomainError(f"band {self.label!r} has negative half-width {self.half_width}")

    def contains(self, energy: float, tolerance: float = 0.0) -> bool:
        return abs(energy - self.center) <= self.half_width + tolerance


@dataclass
class BandAssignment:
    table: pd.DataFrame
    labels: list[Optional[str]]
    unassigned: list[float]
    ambiguous: list[float]

    def is_complete(self) -> bool:
        return not self.unassigned and not self.ambiguous


def _warn(messages: list[str], msg: str) -> None:
    print(f"[perturbation] WARNING: {msg}", flush=True)
    messages.append(msg)


def _cyclic(spec: ChainSpec, site: int) -> int:
    return (int(site) - 1) % spec.L + 1


def _common_offset(spec: ChainSpec, sites: Sequence[int]) -> float:
    offsets = {spec.offset(s) for s in sites}
    if len(offsets) != 1 or 0.0 in offsets:
        raise DomainError(f"sites {tuple(sites)} must all carry the same positive defect offset, got {sorted(offsets)}")
    return offsets.pop()


def _block(spec: ChainSpec, N: int, site_lists: Sequence[Sequence[int]], entries: np.ndarray) -> SectorMatrix:
    basis = enumerate_sector(spec.L, N)
    support = tuple(basis.index_of(basis.configuration(s)) for s in site_lists)
    entries = np.array(entries, dtype=float)
    entries.setflags(write=False)
    return SectorMatrix(basis=basis, entries=entries, support=support)


def _two_level(diagonal: float, hopping: float) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenpairs of [[a, b], [b, a]] with b > 0: a-b on (1,-1)/√2, a+b on (1,1)/√2."""
    r = 1 / math.sqrt(2)
    return np.array([diagonal - hopping, diagonal + hopping]), np.array([[r, r], [-r, r]])


def _defect_warnings(spec: ChainSpec, d: float) -> list[str]:
    messages = list(spec.warnings)
    if d <= DEFECT_RATIO * spec.J:
        _warn(messages, f"defect offset d={d} is not >> J={spec.J}; the effective model may be inaccurate")
    return messages


def separation(spec: ChainSpec, n1: int, n2: int) -> int:
    """μ: number of bulk sites between n1 and n2 along the shorter path."""
    gap = abs(_cyclic(spec, n1) - _cyclic(spec, n2))
    if spec.boundary == PERIODIC:
        gap = min(gap, spec.L - gap)
    return gap - 1


def two_defect_model(spec: ChainSpec, n1: int, n2: int) -> EffectiveModel:
    n1, n2 = _cyclic(spec, n1), _cyclic(spec, n2)
    if n1 == n2:
        raise DomainError(f"two-defect model needs distinct sites, got {n1} twice")
    d = _common_offset(spec, (n1, n2))
    mu = separation(spec, n1, n2)
    messages = _defect_warnings(spec, d)
    J, E1 = spec.J, spec.single_excitation_energy()

    if mu == 0:
        diagonal, hopping, order = E1 + d, J / 2, 1
    elif mu == 1:
        diagonal, hopping, order = E1 + d + J ** 2 / (2 * d), J ** 2 / (4 * d), 2
    else:
        # Only the hopping is carried to order μ+1; diagonal shifts stay at first order.
        diagonal, hopping, order = E1 + d, (J / 2) * (J / (2 * d)) ** mu, mu + 1

    values, vectors = _two_level(diagonal, hopping)
    return EffectiveModel(
        kind=TWO_DEFECT,
        sites=(n1, n2),
        matrix=_block(spec, 1, ([n1], [n2]), [[diagonal, hopping], [hopping, diagonal]]),
        eigenvalues=values,
        eigenvectors=vectors,
        splitting=2 * hopping,
        order=order,
        extrapolated=mu >= 2,
        params={"J": J, "d": d, "mu": mu},
        warnings=tuple(messages),
    )


def oscillation_period(spec: ChainSpec, mu: int, d: Optional[float] = None) -> float:
    """T_μ = (2π/J)(2d/J)^μ; ``d`` defaults to the largest defect offset of the chain."""
    if mu < 0:
        raise DomainError(f"separation mu must be >= 0, got {mu}")
    if d is None:
        if not spec.defects:
            raise DomainError("oscillation_period needs a defect offset d")
        d = max(spec.defects.values())
    if d <= 0:
        raise DomainError(f"defect offset must be positive, got {d}")
    return (2 * math.pi / spec.J) * (2 * d / spec.J) ** mu


def _require(model: EffectiveModel, *kinds: str) -> None:
    if model.kind not in kinds:
        raise DomainError(f"expected a {' or '.join(kinds)} model, got {model.kind}")


def bell_times(model: EffectiveModel, k_max: int) -> list[float]:
    """t_B = πk / [2(E₊ - E₋)] for odd k ≤ k_max."""
    _require(model, TWO_DEFECT, BOUND_PAIR)
    return [math.pi * k / (2 * model.splitting) for k in range(1, k_max + 1, 2)]


def bell_probability(model: EffectiveModel, t):
    """Probability to find the excitation back on the first configuration: (1 + cos ΔE t)/2."""
    _require(model, TWO_DEFECT, BOUND_PAIR)
    return (1 + np.cos(model.splitting * np.asarray(t))) / 2


def three_defect_model(spec: ChainSpec, n1: int) -> EffectiveModel:
    sites = tuple(_cyclic(spec, n1 + k) for k in range(3))
    if len(set(sites)) != 3:
        raise DomainError(f"three adjacent defects need L >= 3, got L={spec.L}")
    if spec.boundary != PERIODIC and sites[0] > spec.L - 2:
        raise DomainError(f"sites {sites} are not adjacent on an open chain")
    d = _common_offset(spec, sites)
    messages = _defect_warnings(spec, d)
    J, E1 = spec.J, spec.single_excitation_energy()
    a = E1 + d
    h = J / 2

    r = math.sqrt(2) / 2
    # columns ψ_c, ψ_b, ψ_a
    vectors = np.array([
        [0.5, -r, 0.5],
        [-r, 0.0, r],
        [0.5, r, 0.5],
    ])
    values = np.array([a - J / math.sqrt(2), a, a + J / math.sqrt(2)])
    return EffectiveModel(
        kind=THREE_DEFECT,
        sites=sites,
        matrix=_block(spec, 1, [[s] for s in sites], [[a, h, 0.0], [h, a, h], [0.0, h, a]]),
        eigenvalues=values,
        eigenvectors=vectors,
        splitting=math.sqrt(2) * J,
        order=1,
        params={"J": J, "d": d},
        warnings=tuple(messages),
    )


def w_probabilities(model: EffectiveModel, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Site probabilities (n1, n2, n3) starting from the middle site."""
    _require(model, THREE_DEFECT)
    c = np.cos(model.splitting * np.asarray(t))
    outer = (1 - c) / 4
    return outer, (1 + c) / 2, outer


def w_times(model: EffectiveModel, k_max: int) -> list[float]:
    """t_W = [(-1)^k arccos(-1/3) + 2π(k - ⌊k/2⌋)] / (E_a - E_c) for k = 0..k_max."""
    _require(model, THREE_DEFECT)
    a = math.acos(-1 / 3)
    return [((-1) ** k * a + 2 * math.pi * (k - k // 2)) / model.splitting for k in range(k_max + 1)]


def cosine_crossings(omega: float, value: float, count: int) -> list[float]:
    """The first ``count`` instants t ≥ 0 with cos(ωt) = value, ascending."""
    if omega <= 0:
        raise DomainError(f"angular frequency must be positive, got {omega}")
    if not -1 <= value <= 1:
        raise DomainError(f"cosine value must lie in [-1, 1], got {value}")
    a = math.acos(value)
    times: list[float] = []
    m = 0
    while len(times) < count:
        for phase in (2 * math.pi * m + a, 2 * math.pi * (m + 1) - a):
            if len(times) < count and (not times or phase / omega > times[-1] + 1e-15):
                times.append(phase / omega)
        m += 1
    return times


def bound_pair_model(spec: ChainSpec, n1: int) -> EffectiveModel:
    n1 = _cyclic(spec, n1)
    if set(spec.defects) != {n1}:
        raise DomainError(f"bound-pair model needs exactly one defect, on site {n1}; got {sorted(spec.defects)}")
    d = spec.offset(n1)
    J, JD = spec.J, spec.J * spec.Delta
    messages = list(spec.warnings)
    if JD < BOUND_PAIR_RATIO * d or d < BOUND_PAIR_RATIO * J:
        _warn(messages, f"bound-pair regime J*Delta >> d >> J not met (J*Delta={JD}, d={d}, J={J})")
    if JD == 0:
        raise DomainError("bound-pair model needs Delta > 0")

    basis = enumerate_sector(spec.L, 2)
    left, right = bound_pair_configurations(basis, n1)
    coupling = J ** 2 / (4 * (JD + d))
    diagonal = 2 * spec.single_excitation_energy() + d + JD + J / (4 * spec.Delta) + coupling
    values, vectors = _two_level(diagonal, coupling)
    return EffectiveModel(
        kind=BOUND_PAIR,
        sites=(n1,),
        matrix=_block(spec, 2, (left.sites, right.sites), [[diagonal, coupling], [coupling, diagonal]]),
        eigenvalues=values,
        eigenvectors=vectors,
        splitting=2 * coupling,
        order=2,
        params={"J": J, "Delta": spec.Delta, "d": d},
        warnings=tuple(messages),
    )


def bound_pair_times(model: EffectiveModel, k_max: int) -> list[float]:
    """t_BP = 2(JΔ + d)[π/2 + kπ]/J² for odd k ≤ k_max.

    Every integer k gives a half-population instant; only the odd ones are returned.
    """
    _require(model, BOUND_PAIR)
    J, d = model.params["J"], model.params["d"]
    scale = 2 * (J * model.params["Delta"] + d) / J ** 2
    return [scale * (math.pi / 2 + k * math.pi) for k in range(1, k_max + 1, 2)]


def _adjacent_pairs(spec: ChainSpec) -> int:
    return len({frozenset(b) for b in bonds(spec.L, spec.boundary)})


def band_layout(spec: ChainSpec, N: int, has_defect: Optional[bool] = None) -> list[BandPrediction]:
    if has_defect is None:
        has_defect = bool(spec.defects)
    if has_defect != bool(spec.defects):
        raise DomainError(f"has_defect={has_defect} contradicts the chain's defects {dict(spec.defects)}")
    if spec.boundary != PERIODIC:
        raise DomainError("band layouts are derived for periodic chains")
    J, L, E1 = spec.J, spec.L, spec.single_excitation_energy()

    if N == 1:
        bands = [BandPrediction("bulk", E1, J, L - len(spec.defects))]
        by_offset: dict[float, int] = {}
        for d in spec.defects.values():
            by_offset[d] = by_offset.get(d, 0) + 1
        for d, count in sorted(by_offset.items()):
            label = "defect" if len(by_offset) == 1 else f"defect_d={d:g}"
            bands.append(BandPrediction(label, E1 + d, J, count))
        return bands

    if N != 2:
        raise DomainError(f"band layouts are available for N in {{1, 2}}, got N={N}")
    if spec.Delta == 0:
        raise DomainError("two-excitation bands need Delta > 0")

    JD = J * spec.Delta
    narrow = J / (2 * spec.Delta)
    pair_center = 2 * E1 + JD + narrow
    if not has_defect:
        pairs = _adjacent_pairs(spec)
        return [
            BandPrediction("free", 2 * E1, 2 * J, int(comb(L, 2, exact=True)) - pairs),
            BandPrediction("bound_pair", pair_center, narrow, pairs),
        ]

    if len(spec.defects) != 1:
        raise DomainError(f"two-excitation layout supports one defect, got {len(spec.defects)}")
    if L < 4:
        raise DomainError(f"two-excitation layout with a defect needs L >= 4, got L={L}")
    n1, d = next(iter(spec.defects.items()))
    model = bound_pair_model(spec, n1)
    return [
        BandPrediction("free", 2 * E1, 2 * J, int(comb(L - 1, 2, exact=True)) - (L - 2)),
        BandPrediction("trapped", 2 * E1 + d, 2 * J, L - 3),
        BandPrediction("bound_pair", pair_center, narrow, L - 2),
        BandPrediction("defect_bound", float(model.eigenvalues.mean()), model.splitting / 2, 2),
    ]


def band_tolerance(spec: ChainSpec) -> float:
    """3J² / (JΔ + d), d the largest defect offset (0 without defects)."""
    d = max(spec.defects.values(), default=0.0)
    denominator = spec.J * spec.Delta + d
    if denominator <= 0:
        raise DomainError("band tolerance needs J*Delta + d > 0")
    return BAND_TOLERANCE_FACTOR * spec.J ** 2 / denominator


def assign_bands(eigenvalues: Sequence[float], bands: Sequence[BandPrediction], tolerance: float) -> BandAssignment:
    """Place each eigenvalue in the unique band whose widened window contains it."""
    if tolerance < 0:
        raise DomainError(f"tolerance must be >= 0, got {tolerance}")
    labels: list[Optional[str]] = []
    unassigned, ambiguous = [], []
    members: dict[str, list[float]] = {b.label: [] for b in bands}
    for energy in eigenvalues:
        energy = float(energy)
        hits = [b for b in bands if b.contains(energy, tolerance)]
        if len(hits) == 1:
            labels.append(hits[0].label)
            members[hits[0].label].append(energy)
        else:
            labels.append(None)
            (unassigned if not hits else ambiguous).append(energy)

    rows = []
    for b in bands:
        found = members[b.label]
        rows.append({
            "band": b.label,
            "center": b.center,
            "half_width": b.half_width,
            "predicted_count": b.count,
            "member_count": len(found),
            "max_deviation": max((abs(e - b.center) for e in found), default=0.0),
            "measured_half_width": (max(found) - min(found)) / 2 if found else 0.0,
        })
    return BandAssignment(table=pd.DataFrame(rows), labels=labels, unassigned=unassigned, ambiguous=ambiguous)


def measured_splitting(spec: ChainSpec, configurations: Sequence[Sequence[int]]) -> float:
    """Exact-diagonalization splitting of the two eigenstates carrying most weight on ``configurations``."""
    if len(configurations) < 2:
        raise DomainError("measured_splitting needs at least two configurations")
    N = len(configurations[0])
    if any(len(c) != N for c in configurations):
        raise DomainError("all configurations must carry the same number of excitations")
    eig = diagonalize(build_static(spec, N))
    basis = eig.basis
    rows = [basis.index_of(basis.configuration(c)) for c in configurations]
    weight = np.sum(np.abs(eig.eigenvectors[rows, :]) ** 2, axis=0)
    first, second = np.argsort(weight)[::-1][:2]
    return float(abs(eig.eigenvalues[first] - eig.eigenvalues[second]))
