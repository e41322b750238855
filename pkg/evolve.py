"""Time evolution inside one excitation sector.

Static Hamiltonians are propagated exactly through their eigen-decomposition. Detuning
schedules are integrated with a fixed-step classical fourth-order Runge-Kutta stepper whose
step is halved until every basis probability at every snapshot moves by less than the
requested tolerance between two refinements and the raw norm drift stays within
``NORM_DRIFT_PER_TIME``.

Matrices may act on a subset of the sector (``SectorMatrix.support``): defect blocks and
effective models evolve amplitudes on their support and leave the state embedded in the
full sector basis, so every observable is computed the same way in both frames.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from basis import Configuration, SectorBasis
from errors import DomainError, NumericalError
from hamiltonian import ChainSpec, DetuningSchedule, SectorMatrix, build_static, detuning_masks

load_dotenv()

COURANT = float(os.getenv("XXZ_RK4_COURANT", "0.1"))
MAX_REFINEMENTS = int(os.getenv("XXZ_RK4_MAX_REFINEMENTS", "10"))
NORM_TOLERANCE = 1e-9
NORM_DRIFT_PER_TIME = 1e-9
DEFAULT_SNAPSHOTS = 200


def same_sector(a: SectorBasis, b: SectorBasis) -> bool:
    return a is b or (a.L == b.L and a.N == b.N)


@dataclass(frozen=True)
class StateVector:
    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (len(self.basis),):
            raise DomainError(f"expected {len(self.basis)} amplitudes, got shape {amps.shape}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"state is not normalized (norm={norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_configuration(cls, basis: SectorBasis, config: Configuration | Sequence[int]) -> StateVector:
        if not isinstance(config, Configuration):
            config = basis.configuration(config)
        amps = np.zeros(len(basis), dtype=complex)
        amps[basis.index_of(config)] = 1.0
        return cls(basis, amps)

    @classmethod
    def from_amplitudes(cls, basis: SectorBasis, weights: Mapping[Configuration, complex], normalize: bool = False) -> StateVector:
        amps = np.zeros(len(basis), dtype=complex)
        for config, value in weights.items():
            amps[basis.index_of(config)] += value
        if normalize:
            amps /= np.linalg.norm(amps)
        return cls(basis, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class EigenSystem:
    basis: SectorBasis
    support: tuple[int, ...]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass
class TimeSeries:
    times: np.ndarray
    states: list[StateVector] = field(default_factory=list)
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"t": self.times})
        for name, values in self.channels.items():
            frame[name] = values
        return frame

    def extend(self, other: TimeSeries) -> TimeSeries:
        """Concatenate a later series; a snapshot repeated at the seam is kept once."""
        skip = 1 if len(self.times) and len(other.times) and other.times[0] == self.times[-1] else 0
        return TimeSeries(
            times=np.concatenate([self.times, other.times[skip:]]),
            states=[*self.states, *other.states[skip:]],
            channels={k: np.concatenate([v, other.channels[k][skip:]]) for k, v in self.channels.items()},
            meta={**self.meta, **other.meta},
        )


def diagonalize(H: SectorMatrix) -> EigenSystem:
    """Full real spectral decomposition, eigenvalues ascending."""
    entries = H.entries
    scale = max(1.0, float(np.max(np.abs(entries)))) if entries.size else 1.0
    if not np.allclose(entries, entries.T, rtol=0.0, atol=1e-12 * scale):
        raise DomainError("diagonalize expects a symmetric matrix")
    try:
        values, vectors = np.linalg.eigh(entries)
    except np.linalg.LinAlgError as exc:
        condition = float(np.linalg.cond(entries))
        raise NumericalError(f"eigen-decomposition did not converge (condition number {condition:.3e}): {exc}",
                             condition=condition) from exc
    return EigenSystem(basis=H.basis, support=H.support, eigenvalues=values, eigenvectors=vectors)


def _support_amplitudes(basis: SectorBasis, support: tuple[int, ...], psi: StateVector) -> np.ndarray:
    if not same_sector(basis, psi.basis):
        raise DomainError(f"state lives in (L={psi.basis.L}, N={psi.basis.N}), "
                          f"matrix in (L={basis.L}, N={basis.N})")
    if len(support) != len(basis):
        outside = np.ones(len(basis), dtype=bool)
        outside[list(support)] = False
        leaked = float(np.sum(np.abs(psi.amplitudes[outside]) ** 2))
        if leaked > 1e-12:
            raise DomainError(f"state has weight {leaked:.3e} outside the matrix support")
    return np.array(psi.amplitudes[list(support)])


def _embed(basis: SectorBasis, support: tuple[int, ...], values: np.ndarray) -> StateVector:
    amps = np.zeros(len(basis), dtype=complex)
    amps[list(support)] = values
    return StateVector(basis, amps)


def propagate_static(eig: EigenSystem, psi0: StateVector, t: float) -> StateVector:
    """ψ(t) = V exp(-iEt) V† ψ0."""
    a = _support_amplitudes(eig.basis, eig.support, psi0)
    V = eig.eigenvectors
    coefficients = V.conj().T @ a
    return _embed(eig.basis, eig.support, V @ (np.exp(-1j * eig.eigenvalues * t) * coefficients))


def expectation(H: SectorMatrix, psi: StateVector) -> float:
    a = _support_amplitudes(H.basis, H.support, psi)
    return float(np.real(np.vdot(a, H.entries @ a)))


def rk4_integrate(rhs: Callable[[float, np.ndarray], np.ndarray], y: np.ndarray, t0: float, t1: float, n_steps: int) -> np.ndarray:
    """Classical explicit RK4 with ``n_steps`` equal steps from t0 to t1."""
    if n_steps <= 0:
        return y
    h = (t1 - t0) / n_steps
    half = h / 2
    for step in range(n_steps):
        t = t0 + step * h
        k1 = rhs(t, y)
        k2 = rhs(t + half, y + half * k1)
        k3 = rhs(t + half, y + half * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def _snapshot_grid(t_start: float, t_end: float, snapshots: int, times: Optional[Sequence[float]]) -> np.ndarray:
    if times is None:
        if snapshots < 2:
            raise DomainError(f"need at least 2 snapshots, got {snapshots}")
        return np.linspace(t_start, t_end, snapshots)
    grid = np.asarray(times, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("snapshot times must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("snapshot times must be strictly increasing")
    if grid[0] < t_start or grid[-1] > t_end:
        raise DomainError(f"snapshot times must lie in [{t_start}, {t_end}]")
    return grid


def propagate_scheduled(
    spec: ChainSpec,
    schedule: DetuningSchedule,
    psi0: StateVector,
    t_start: float,
    t_end: float,
    tolerance: float = 1e-6,
    snapshots: int = DEFAULT_SNAPSHOTS,
    static: Optional[SectorMatrix] = None,
    times: Optional[Sequence[float]] = None,
) -> TimeSeries:
    """Integrate i dψ/dt = (H_static + Σ_n δ_n(t) n̂_n) ψ and return the snapshots.

    ``static`` defaults to the full-chain sector matrix of ``spec``; pass an effective-model
    matrix to integrate in the few-level frame instead.
    """
    if t_end <= t_start:
        raise DomainError(f"t_end must exceed t_start, got [{t_start}, {t_end}]")
    if tolerance <= 0:
        raise DomainError(f"tolerance must be positive, got {tolerance}")
    if static is None:
        static = build_static(spec, psi0.basis.N)
    grid = _snapshot_grid(t_start, t_end, snapshots, times)

    if not schedule.is_active(t_start, t_end):
        eig = diagonalize(static)
        states = [propagate_static(eig, psi0, t - t_start) for t in grid]
        return TimeSeries(times=grid, states=states, meta={"method": "spectral"})

    support = static.support
    a0 = _support_amplitudes(static.basis, support, psi0)
    masks = detuning_masks(static, schedule)
    reference = float(static.entries.diagonal()[int(np.argmax(np.abs(a0)))])
    H0 = static.entries - reference * np.eye(len(support))
    base_norm = float(np.linalg.norm(H0, 2))

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return -1j * (H0 @ y + (schedule.offsets(t) @ masks) * y)

    edges = np.concatenate([[t_start], grid])
    base_steps = []
    for ta, tb in zip(edges[:-1], edges[1:]):
        if tb <= ta:
            base_steps.append(0)
            continue
        bound = base_norm + float(np.sum(np.abs(schedule.offsets(tb))))
        base_steps.append(max(1, math.ceil((tb - ta) * bound / COURANT)))
    if not any(base_steps):
        # every snapshot sits at t_start
        return TimeSeries(times=grid, states=[psi0] * len(grid),
                          meta={"method": "rk4", "refinement_level": 0, "smallest_step": 0.0, "total_steps": 0,
                                "observable_change": 0.0, "renormalizations": 0, "max_norm_drift_per_time": 0.0})

    def run(level: int):
        y = a0.astype(complex)
        snaps, renormalized, worst_drift = [], 0, 0.0
        for (ta, tb), n in zip(zip(edges[:-1], edges[1:]), base_steps):
            if n:
                before = float(np.linalg.norm(y))
                y = rk4_integrate(rhs, y, ta, tb, n * 2 ** level)
                after = float(np.linalg.norm(y))
                drift = abs(after - before) / (tb - ta)
                worst_drift = max(worst_drift, drift)
                # the offset from 1 is also capped so slow drift cannot accumulate across intervals
                if drift > NORM_DRIFT_PER_TIME or abs(after - 1.0) > 0.1 * NORM_TOLERANCE:
                    y = y / np.linalg.norm(y)
                    renormalized += 1
            snaps.append(y.copy())
        return np.array(snaps), renormalized, worst_drift

    def smallest_step(level: int) -> float:
        steps = [(tb - ta) / (n * 2 ** level) for (ta, tb), n in zip(zip(edges[:-1], edges[1:]), base_steps) if n]
        return min(steps)

    previous = run(0)
    level = 1
    while True:
        if level > MAX_REFINEMENTS:
            raise NumericalError(
                f"RK4 step-size underflow: no convergence to {tolerance:g} "
                f"(norm drift <= {NORM_DRIFT_PER_TIME:g} per unit time) after {MAX_REFINEMENTS} halvings",
                last_step=smallest_step(level - 1),
            )
        current = run(level)
        change = float(np.max(np.abs(np.abs(current[0]) ** 2 - np.abs(previous[0]) ** 2)))
        # converged once the observables settle and the raw norm drift meets its bound
        if change < tolerance and current[2] <= NORM_DRIFT_PER_TIME:
            break
        previous = current
        level += 1

    amplitudes, renormalized, worst_drift = current
    if renormalized:
        print(f"[evolve] renormalized the state on {renormalized} of {len(grid)} snapshot interval(s); "
              f"worst norm drift {worst_drift:.3e} per unit time", flush=True)

    phases = np.exp(-1j * reference * (grid - t_start))
    states = [_embed(static.basis, support, y * p) for y, p in zip(amplitudes, phases)]
    return TimeSeries(
        times=grid,
        states=states,
        meta={
            "method": "rk4",
            "refinement_level": level,
            "smallest_step": smallest_step(level),
            "total_steps": int(sum(base_steps) * 2 ** level),
            "observable_change": change,
            "renormalizations": renormalized,
            "max_norm_drift_per_time": worst_drift,
        },
    )


def site_probabilities(psi: StateVector) -> np.ndarray:
    """Occupation probability of sites 1..L (index n-1); sums to N."""
    return np.abs(psi.amplitudes) ** 2 @ psi.basis.occupations()


def basis_probability(psi: StateVector, config: Configuration) -> float:
    return float(abs(psi.amplitudes[psi.basis.index_of(config)]) ** 2)
