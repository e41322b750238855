"""Create-then-freeze experiments: Bell pairs, W triplets and bound-pair Bell states.

Each run evolves statically up to the creation instant predicted by the effective model,
switches on the detuning there, and integrates to the horizon. Maintenance is scored over the
final tenth of the horizon.

``eigenstate_entanglement`` is the static companion: how entangled the one-excitation
eigenstates of a chain of detuned defect pairs are.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from basis import PERIODIC
from entanglement import (
    bell_target,
    bound_pair_bell_target,
    fidelity,
    global_entanglement,
    pair_concurrence,
    phase_fidelity,
    select_branch,
    w_target,
)
from errors import DomainError
from evolve import (
    DEFAULT_SNAPSHOTS,
    StateVector,
    TimeSeries,
    diagonalize,
    propagate_scheduled,
    propagate_static,
    site_probabilities,
)
from hamiltonian import LINEAR, SHAPES, ChainSpec, DetuningSchedule, SiteDetuning, build_static, schedule_of
from perturbation import (
    EffectiveModel,
    bell_times,
    bound_pair_model,
    bound_pair_times,
    separation,
    three_defect_model,
    two_defect_model,
    w_times,
)

BELL = "bell"
W = "w"
BOUND_PAIR = "bound_pair"
KINDS = (BELL, W, BOUND_PAIR)

EFFECTIVE = "effective"
FULL_CHAIN = "full_chain"
FRAMES = (EFFECTIVE, FULL_CHAIN)

LEFT = "left"
RIGHT = "right"

SWEEP_PARAMETERS = ("D", "D1", "D2", "d", "Delta", "mu")
FINAL_WINDOW = 0.1
SCORED_CHANNELS = ("fid_raw", "fid_phase", "concurrence", "Q")


@dataclass(frozen=True)
class ProtocolSpec:
    kind: str
    chain: ChainSpec
    defect_sites: tuple[int, ...]
    shape: str = LINEAR
    D: float = 0.0
    D1: float = 0.0
    D2: float = 0.0
    detuned_site: str = LEFT
    frame: str = EFFECTIVE
    horizon: Optional[float] = None
    snapshots: int = DEFAULT_SNAPSHOTS
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"protocol kind must be one of {KINDS}, got {self.kind!r}")
        if self.frame not in FRAMES:
            raise DomainError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        if self.shape not in SHAPES:
            raise DomainError(f"detuning shape must be one of {SHAPES}, got {self.shape!r}")
        if self.detuned_site not in (LEFT, RIGHT):
            raise DomainError(f"detuned_site must be '{LEFT}' or '{RIGHT}', got {self.detuned_site!r}")
        sites = tuple((int(s) - 1) % self.chain.L + 1 for s in self.defect_sites)
        expected = {BELL: 2, W: 3, BOUND_PAIR: 1}[self.kind]
        if len(sites) != expected:
            raise DomainError(f"a {self.kind} protocol takes {expected} defect site(s), got {len(sites)}")
        if self.kind == W and sites[1:] != tuple((sites[0] + k - 1) % self.chain.L + 1 for k in (1, 2)):
            raise DomainError(f"w protocol needs three adjacent defects n1, n1+1, n1+2, got {sites}")
        if self.horizon is not None and self.horizon <= 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if self.snapshots < 2:
            raise DomainError(f"snapshots must be >= 2, got {self.snapshots}")
        if self.tolerance <= 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")
        object.__setattr__(self, "defect_sites", sites)

    @property
    def N(self) -> int:
        return 2 if self.kind == BOUND_PAIR else 1


@dataclass
class ProtocolResult:
    pspec: ProtocolSpec
    series: TimeSeries
    t_create: float
    branch: str
    scores: dict
    model: EffectiveModel
    warnings: tuple[str, ...] = field(default=())

    def summary(self) -> dict:
        p = self.pspec
        first = p.defect_sites[0]
        row = {
            "kind": p.kind,
            "frame": p.frame,
            "shape": p.shape,
            "D": p.D,
            "D1": p.D1,
            "D2": p.D2,
            "d": p.chain.offset(first),
            "Delta": p.chain.Delta,
            "mu": separation(p.chain, *p.defect_sites) if p.kind == BELL else None,
            "t_create": self.t_create,
            "horizon": float(self.series.times[-1]),
            "branch": self.branch,
        }
        row.update(self.scores)
        return row


def _site(chain: ChainSpec, n: int) -> int:
    return (n - 1) % chain.L + 1


def _schedule(pspec: ProtocolSpec, t_create: float) -> DetuningSchedule:
    sites = pspec.defect_sites
    if pspec.kind == BELL:
        return schedule_of(SiteDetuning(sites[0], pspec.shape, pspec.D, t_create))
    if pspec.kind == W:
        # n3 stays fixed
        return schedule_of(
            SiteDetuning(sites[0], pspec.shape, pspec.D1, t_create),
            SiteDetuning(sites[1], pspec.shape, pspec.D2, t_create),
        )
    step = -1 if pspec.detuned_site == LEFT else 1
    return schedule_of(SiteDetuning(_site(pspec.chain, sites[0] + step), pspec.shape, pspec.D, t_create))


def _setup(pspec: ProtocolSpec):
    """Model, initial state, creation instant, target builder, concurrence pair, expected site populations."""
    chain, sites = pspec.chain, pspec.defect_sites
    if pspec.kind == BELL:
        n1, n2 = sites
        model = two_defect_model(chain, n1, n2)
        basis = model.matrix.basis
        return (model, StateVector.from_configuration(basis, [n1]), bell_times(model, 1)[0],
                lambda s: bell_target(basis, n1, n2, s), (n1, n2), {n1: 0.5, n2: 0.5})
    if pspec.kind == W:
        n1, n2, n3 = sites
        model = three_defect_model(chain, n1)
        basis = model.matrix.basis
        return (model, StateVector.from_configuration(basis, [n2]), w_times(model, 0)[0],
                lambda p: w_target(basis, n1, n2, n3, p), (n1, n2), {n: 1 / 3 for n in sites})
    (n1,) = sites
    left, right = _site(chain, n1 - 1), _site(chain, n1 + 1)
    model = bound_pair_model(chain, n1)
    basis = model.matrix.basis
    return (model, StateVector.from_configuration(basis, [left, n1]), bound_pair_times(model, 1)[0],
            lambda s: bound_pair_bell_target(basis, n1, s), (left, right), {left: 0.5, n1: 1.0, right: 0.5})


def _time_grid(horizon: float, snapshots: int, t_create: float) -> np.ndarray:
    return np.unique(np.concatenate([np.linspace(0.0, horizon, snapshots), [t_create]]))


def _run(pspec: ProtocolSpec) -> ProtocolResult:
    model, psi0, t_create, builder, pair, expected = _setup(pspec)
    horizon = pspec.horizon if pspec.horizon is not None else t_create + 2 * model.period()
    if horizon <= t_create:
        raise DomainError(f"horizon {horizon} must exceed the creation instant {t_create:.6g}")

    if pspec.frame == EFFECTIVE:
        static = model.matrix
        eig = model.as_eigensystem()
    else:
        static = build_static(pspec.chain, pspec.N)
        eig = diagonalize(static)

    grid = _time_grid(horizon, pspec.snapshots, t_create)
    before = grid[grid < t_create]
    after = grid[grid >= t_create]
    states = [propagate_static(eig, psi0, t) for t in before]
    created = propagate_static(eig, psi0, t_create)
    tail = propagate_scheduled(pspec.chain, _schedule(pspec, t_create), created, t_create, horizon,
                               tolerance=pspec.tolerance, static=static, times=after)
    states.extend(tail.states)

    branch, target, _ = select_branch(created, builder)
    channels: dict[str, list[float]] = {f"P_site_{n}": [] for n in expected}
    channels.update({name: [] for name in SCORED_CHANNELS})
    for psi in states:
        probs = site_probabilities(psi)
        for n in expected:
            channels[f"P_site_{n}"].append(float(probs[n - 1]))
        channels["fid_raw"].append(fidelity(psi, target))
        channels["fid_phase"].append(phase_fidelity(psi, target))
        channels["concurrence"].append(pair_concurrence(psi, *pair))
        channels["Q"].append(global_entanglement(psi))

    series = TimeSeries(
        times=grid,
        states=states,
        channels={k: np.array(v) for k, v in channels.items()},
        meta={**tail.meta, "frame": pspec.frame, "t_create": t_create, "branch": branch},
    )
    scores = _scores(series, horizon, expected, created, target, pair)
    warnings = tuple(model.warnings)
    return ProtocolResult(pspec=pspec, series=series, t_create=t_create, branch=branch,
                          scores=scores, model=model, warnings=warnings)


def _scores(series: TimeSeries, horizon: float, expected: dict, created: StateVector, target: StateVector, pair) -> dict:
    window = series.times >= (1 - FINAL_WINDOW) * horizon
    scores = {}
    for name in SCORED_CHANNELS:
        values = series.channels[name][window]
        scores[f"{name}_mean"] = float(values.mean())
        scores[f"{name}_min"] = float(values.min())
    scores["max_prob_deviation"] = float(max(
        np.max(np.abs(series.channels[f"P_site_{n}"][window] - value)) for n, value in expected.items()
    ))
    scores["creation_concurrence"] = pair_concurrence(created, *pair)
    scores["creation_fid_phase"] = phase_fidelity(created, target)
    scores["creation_fid_raw"] = fidelity(created, target)
    return scores


def run_bell(pspec: ProtocolSpec) -> ProtocolResult:
    if pspec.kind != BELL:
        raise DomainError(f"run_bell expects a bell protocol, got {pspec.kind}")
    return _run(pspec)


def run_w(pspec: ProtocolSpec) -> ProtocolResult:
    if pspec.kind != W:
        raise DomainError(f"run_w expects a w protocol, got {pspec.kind}")
    return _run(pspec)


def run_bound_pair(pspec: ProtocolSpec) -> ProtocolResult:
    if pspec.kind != BOUND_PAIR:
        raise DomainError(f"run_bound_pair expects a bound_pair protocol, got {pspec.kind}")
    return _run(pspec)


RUNNERS: dict[str, Callable[[ProtocolSpec], ProtocolResult]] = {
    BELL: run_bell,
    W: run_w,
    BOUND_PAIR: run_bound_pair,
}


def run_protocol(pspec: ProtocolSpec) -> ProtocolResult:
    return RUNNERS[pspec.kind](pspec)


def with_parameter(pspec: ProtocolSpec, parameter: str, value) -> ProtocolSpec:
    """Copy of ``pspec`` with one sweepable parameter replaced."""
    if parameter not in SWEEP_PARAMETERS:
        raise DomainError(f"unknown sweep parameter {parameter!r}; allowed: {', '.join(SWEEP_PARAMETERS)}")
    if parameter in ("D", "D1", "D2"):
        return replace(pspec, **{parameter: float(value)})
    chain = pspec.chain
    if parameter == "Delta":
        return replace(pspec, chain=chain.with_delta(float(value)))
    if parameter == "d":
        return replace(pspec, chain=chain.with_defects({s: float(value) for s in chain.defects}))

    if pspec.kind != BELL:
        raise DomainError("the mu parameter only applies to bell protocols")
    mu = int(value)
    if mu != value or mu < 0:
        raise DomainError(f"mu must be a non-negative integer, got {value}")
    n1 = pspec.defect_sites[0]
    n2 = _site(chain, n1 + mu + 1)
    if n2 == n1:
        raise DomainError(f"mu={mu} wraps onto site {n1} on a chain of L={chain.L}")
    d = chain.offset(n1)
    others = {s: v for s, v in chain.defects.items() if s not in pspec.defect_sites}
    return replace(pspec, chain=chain.with_defects({**others, n1: d, n2: d}), defect_sites=(n1, n2))


def sweep(pspec: ProtocolSpec, parameter: str, values: Sequence, jobs: int = 1) -> pd.DataFrame:
    """One summary row per value, in input order; runs fan out over ``jobs`` threads."""
    if jobs < 1:
        raise DomainError(f"jobs must be >= 1, got {jobs}")
    if parameter not in SWEEP_PARAMETERS:
        raise DomainError(f"unknown sweep parameter {parameter!r}; allowed: {', '.join(SWEEP_PARAMETERS)}")
    variants = [with_parameter(pspec, parameter, v) for v in values]
    if not variants:
        return pd.DataFrame(columns=["parameter", "value"])

    print(f"[protocols] sweeping {parameter} over {len(variants)} value(s) with {jobs} job(s)", flush=True)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(run_protocol, variants))
    rows = [{"parameter": parameter, "value": v, **r.summary()} for v, r in zip(values, results)]
    return pd.DataFrame(rows)


@dataclass
class EigenstateEntanglement:
    table: pd.DataFrame
    mean_concurrence: float
    mean_Q: float


def paired_chain(L: int, spacing: float, J: float = 1.0, Delta: float = 1.0, epsilon: float = 1000.0,
                 boundary: str = PERIODIC) -> ChainSpec:
    """Sites (2k+1, 2k+2) form pair k, both offset by k·spacing; pair 0 carries no defect."""
    if L < 4 or L % 2:
        raise DomainError(f"a paired chain needs an even L >= 4, got L={L}")
    if spacing <= 0:
        raise DomainError(f"pair spacing must be positive, got {spacing}")
    defects = {site: k * spacing for k in range(1, L // 2) for site in (2 * k + 1, 2 * k + 2)}
    return ChainSpec(L=L, J=J, Delta=Delta, epsilon=epsilon, defects=defects, boundary=boundary)


def eigenstate_entanglement(spec: ChainSpec, pairs: Optional[Sequence[tuple[int, int]]] = None) -> EigenstateEntanglement:
    """Concurrence of every one-excitation eigenstate on the pair that holds most of its weight."""
    if pairs is None:
        pairs = [(n, n + 1) for n in range(1, spec.L, 2)]
    pairs = [(int(a), int(b)) for a, b in pairs]
    if not pairs:
        raise DomainError("eigenstate_entanglement needs at least one pair")
    for a, b in pairs:
        if a == b or not (1 <= a <= spec.L and 1 <= b <= spec.L):
            raise DomainError(f"pair ({a}, {b}) must name two distinct sites in 1..{spec.L}")

    eig = diagonalize(build_static(spec, 1))
    rows = []
    for energy, vector in zip(eig.eigenvalues, eig.eigenvectors.T):
        amps = np.zeros(len(eig.basis), dtype=complex)
        amps[list(eig.support)] = vector
        psi = StateVector(eig.basis, amps)
        probs = site_probabilities(psi)
        weights = [probs[a - 1] + probs[b - 1] for a, b in pairs]
        n1, n2 = pairs[int(np.argmax(weights))]
        rows.append({
            "energy": float(energy),
            "n1": n1,
            "n2": n2,
            "pair_weight": float(max(weights)),
            "concurrence": pair_concurrence(psi, n1, n2),
            "Q": global_entanglement(psi),
        })
    table = pd.DataFrame(rows)
    return EigenstateEntanglement(table=table, mean_concurrence=float(table["concurrence"].mean()),
                                  mean_Q=float(table["Q"].mean()))
