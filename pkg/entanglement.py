"""Entanglement and fidelity diagnostics on sector states.

Qubit convention for reduced density matrices: |1⟩ is an excited site (spin up), and the
first site of a subset is the most significant bit of the matrix index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from basis import SectorBasis
from errors import DomainError
from evolve import StateVector, same_sector, site_probabilities

MAX_SUBSET = 4
PSD_FLOOR = -1e-12

# branch label -> complex unit
BRANCHES = {"+": 1.0 + 0j, "-": -1.0 + 0j, "+i": 1j, "-i": -1j}

_YY = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex)


@dataclass(frozen=True)
class ReducedDensity:
    sites: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        dim = 2 ** len(self.sites)
        if rho.shape != (dim, dim):
            raise DomainError(f"density matrix over {len(self.sites)} qubit(s) must be {dim}x{dim}, got {rho.shape}")
        if not np.allclose(rho, rho.conj().T, rtol=0.0, atol=1e-12):
            raise DomainError("density matrix is not Hermitian")
        trace = float(np.real(np.trace(rho)))
        if abs(trace - 1.0) > 1e-9:
            raise DomainError(f"density matrix trace is {trace:.12g}, expected 1")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def _check_sites(L: int, sites: Sequence[int]) -> tuple[int, ...]:
    sites = tuple(int(s) for s in sites)
    for s in sites:
        if not 1 <= s <= L:
            raise DomainError(f"site {s} outside 1..{L}")
    if len(set(sites)) != len(sites):
        raise DomainError(f"sites must be distinct, got {sites}")
    return sites


def reduce(psi: StateVector, subset: Sequence[int]) -> ReducedDensity:
    """Partial trace of |ψ⟩⟨ψ| over every site outside ``subset``."""
    sites = _check_sites(psi.basis.L, subset)
    if not sites:
        raise DomainError("reduce needs a non-empty subset")
    if len(sites) > MAX_SUBSET:
        raise DomainError(f"subsets are limited to {MAX_SUBSET} sites, got {len(sites)}")

    masks = psi.basis.masks
    m = len(sites)
    column = np.zeros(len(masks), dtype=np.int64)
    subset_bits = 0
    for k, s in enumerate(sites):
        column |= ((masks >> (s - 1)) & 1) << (m - 1 - k)
        subset_bits |= 1 << (s - 1)
    _, row = np.unique(masks & ~subset_bits, return_inverse=True)

    M = np.zeros((int(row.max()) + 1, 2 ** m), dtype=complex)
    M[row, column] = psi.amplitudes
    rho = M.T @ M.conj()
    return ReducedDensity(sites, rho / np.real(np.trace(rho)))


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(rho)
    if values.min() < PSD_FLOOR:
        raise DomainError(f"density matrix has eigenvalue {values.min():.3e} below the PSD floor {PSD_FLOOR:g}")
    values = np.clip(values, 0.0, None)
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def concurrence(rho: ReducedDensity) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    The λ's are the singular values of √ρ · (σy⊗σy) √ρ* (σy⊗σy), i.e. the square roots of the
    eigenvalues of ρρ̃, obtained without taking a square root of a non-Hermitian product.
    """
    if len(rho.sites) != 2:
        raise DomainError(f"concurrence is defined on two qubits, got {len(rho.sites)}")
    root = _psd_sqrt(rho.matrix)
    lambdas = np.linalg.svd(root @ _YY @ root.conj() @ _YY, compute_uv=False)
    value = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]
    return float(min(1.0, max(0.0, value)))


def pair_concurrence(psi: StateVector, n1: int, n2: int) -> float:
    return concurrence(reduce(psi, (n1, n2)))


def global_entanglement(psi: StateVector) -> float:
    """Q = 2 - (2/L) Σ_n tr ρ_n²."""
    # Excitation number is conserved, so every single-site ρ_n is diagonal: diag(1-p_n, p_n).
    p = site_probabilities(psi)
    purities = (1 - p) ** 2 + p ** 2
    return float(min(1.0, max(0.0, 2.0 - 2.0 / psi.basis.L * purities.sum())))


def _check_same_basis(psi: StateVector, target: StateVector) -> None:
    if not same_sector(psi.basis, target.basis):
        raise DomainError(f"states live in different sectors: (L={psi.basis.L}, N={psi.basis.N}) "
                          f"vs (L={target.basis.L}, N={target.basis.N})")


def fidelity(psi: StateVector, target: StateVector) -> float:
    _check_same_basis(psi, target)
    return float(abs(np.vdot(target.amplitudes, psi.amplitudes)) ** 2)


def phase_fidelity(psi: StateVector, target: StateVector) -> float:
    """Overlap maximised over a free phase on each basis configuration: (Σ_j |t_j||a_j|)²."""
    _check_same_basis(psi, target)
    return float(min(1.0, np.sum(np.abs(target.amplitudes) * np.abs(psi.amplitudes)) ** 2))


def _unit(sign: complex) -> complex:
    sign = complex(sign)
    if abs(abs(sign) - 1.0) > 1e-12:
        raise DomainError(f"branch sign must be a complex unit, got {sign}")
    return sign


def _need_sector(basis: SectorBasis, N: int, what: str) -> None:
    if basis.N != N:
        raise DomainError(f"{what} lives in the N={N} sector, basis has N={basis.N}")


def _distinct(L: int, sites: Sequence[int]) -> list[int]:
    reduced = [(int(s) - 1) % L + 1 for s in sites]
    if len(set(reduced)) != len(reduced):
        raise DomainError(f"sites {tuple(sites)} coincide on a chain of L={L}")
    return reduced


def bell_target(basis: SectorBasis, n1: int, n2: int, sign: complex = 1) -> StateVector:
    """(φ(n1) + sign·φ(n2))/√2."""
    _need_sector(basis, 1, "a defect Bell state")
    n1, n2 = _distinct(basis.L, (n1, n2))
    s = _unit(sign)
    return StateVector.from_amplitudes(basis, {
        basis.configuration([n1]): 1 / math.sqrt(2),
        basis.configuration([n2]): s / math.sqrt(2),
    })


def w_target(basis: SectorBasis, n1: int, n2: int, n3: int, phase: complex = 1) -> StateVector:
    """(phase·φ(n1) + φ(n2) + phase·φ(n3))/√3; ``phase`` = 1 is the textbook W state."""
    _need_sector(basis, 1, "a W state")
    n1, n2, n3 = _distinct(basis.L, (n1, n2, n3))
    p = _unit(phase)
    amp = 1 / math.sqrt(3)
    return StateVector.from_amplitudes(basis, {
        basis.configuration([n1]): p * amp,
        basis.configuration([n2]): amp,
        basis.configuration([n3]): p * amp,
    })


def bound_pair_configurations(basis: SectorBasis, n1: int):
    """φ(n1-1, n1) and φ(n1, n1+1), the two pair positions that share the defect."""
    _need_sector(basis, 2, "a bound pair")
    if basis.L < 3:
        raise DomainError(f"a bound pair around a defect needs L >= 3, got L={basis.L}")
    return basis.configuration([n1 - 1, n1]), basis.configuration([n1, n1 + 1])


def bound_pair_bell_target(basis: SectorBasis, n1: int, sign: complex = 1) -> StateVector:
    """(φ(n1-1, n1) + sign·φ(n1, n1+1))/√2."""
    left, right = bound_pair_configurations(basis, n1)
    s = _unit(sign)
    return StateVector.from_amplitudes(basis, {left: 1 / math.sqrt(2), right: s / math.sqrt(2)})


def three_defect_eigenstate(basis: SectorBasis, n1: int, label: str) -> StateVector:
    """Eigenvectors of the three adjacent equal-defect block on n1, n1+1, n1+2.

    a: ½[φ1 + √2 φ2 + φ3]   b: [-φ1 + φ3]/√2   c: ½[φ1 - √2 φ2 + φ3]
    """
    _need_sector(basis, 1, "a three-defect eigenstate")
    weights = {
        "a": (0.5, math.sqrt(2) / 2, 0.5),
        "b": (-1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)),
        "c": (0.5, -math.sqrt(2) / 2, 0.5),
    }
    if label not in weights:
        raise DomainError(f"three-defect eigenstate label must be one of {sorted(weights)}, got {label!r}")
    sites = _distinct(basis.L, (n1, n1 + 1, n1 + 2))
    return StateVector.from_amplitudes(
        basis, {basis.configuration([s]): w for s, w in zip(sites, weights[label])}
    )


def select_branch(psi: StateVector, builder: Callable[[complex], StateVector]) -> tuple[str, StateVector, float]:
    """Branch (label, target, raw fidelity) among ±1, ±i that overlaps ψ best; ties keep the first."""
    best = None
    for label, sign in BRANCHES.items():
        target = builder(sign)
        f = fidelity(psi, target)
        if best is None or f > best[2] + 1e-12:
            best = (label, target, f)
    return best
