"""Density states, entanglement entropy relative to a TPS, and time evolution."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import DimensionMismatch, NotProductState, ValidationError, ZeroVector
from .numkernel import (
    as_matrix,
    dagger,
    frob,
    haar_unitary,
    kron_all,
    partial_trace,
    unitary_exp,
)
from .spectrum import Hamiltonian, cluster_spectrum

if TYPE_CHECKING:
    from .tps import TensorProductStructure

log = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-12
STATE_TOL = 1e-10


@dataclass(frozen=True)
class DensityState:
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = as_matrix(self.rho)
        dim = rho.shape[0]
        if frob(rho - dagger(rho)) > STATE_TOL * max(1.0, frob(rho)):
            raise ValidationError("density matrix is not Hermitian")
        rho = 0.5 * (rho + dagger(rho))
        if abs(np.trace(rho) - 1) > STATE_TOL * dim:
            raise ValidationError(f"density matrix has trace {np.trace(rho).real:.12g}")
        if np.linalg.eigvalsh(rho)[0] < -STATE_TOL:
            raise ValidationError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


@dataclass(frozen=True)
class EntropyProfile:
    per_factor: tuple[float, ...]
    mutual_information: np.ndarray = field(repr=False)

    @property
    def sorted_multiset(self) -> tuple[float, ...]:
        return tuple(sorted(self.per_factor))


def pure_state(vector) -> DensityState:
    psi = np.asarray(vector, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if norm == 0 or not np.isfinite(norm):
        raise ZeroVector("state vector must be nonzero and finite")
    psi = psi / norm
    return DensityState(np.outer(psi, psi.conj()))


def basis_state(index: int, dim: int) -> DensityState:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1
    return pure_state(v)


def maximally_mixed(dim: int) -> DensityState:
    return DensityState(np.eye(dim, dtype=complex) / dim)


def product_state(factors: Sequence[DensityState]) -> DensityState:
    if not factors:
        raise ValidationError("need at least one factor")
    return DensityState(kron_all([f.rho for f in factors]))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in nats; eigenvalues below 1e-12 contribute nothing."""
    w = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    w = w[w > EIGEN_FLOOR]
    return float(-np.sum(w * np.log(w))) + 0.0


def evolve(state: DensityState, h, t: float) -> DensityState:
    hm = h if isinstance(h, Hamiltonian) else cluster_spectrum(h)
    if hm.dim != state.dim:
        raise DimensionMismatch(f"Hamiltonian is {hm.dim}-dimensional, state is {state.dim}")
    if t == 0:
        return state
    u = unitary_exp(hm.decomposition, t)
    return DensityState(u @ state.rho @ dagger(u))


def _local_rho(state: DensityState, tps: "TensorProductStructure") -> np.ndarray:
    if state.dim != tps.dim:
        raise DimensionMismatch(f"state is {state.dim}-dimensional, TPS is {tps.dim}")
    f = tps.frame
    return dagger(f) @ state.rho @ f


def marginals(state: DensityState, tps: "TensorProductStructure") -> list[np.ndarray]:
    rho = _local_rho(state, tps)
    return [partial_trace(rho, tps.factor_dims, [j]) for j in range(tps.n)]


def entropy_profile(state: DensityState, tps: "TensorProductStructure") -> EntropyProfile:
    rho = _local_rho(state, tps)
    dims = tps.factor_dims
    n = len(dims)
    singles = [von_neumann_entropy(partial_trace(rho, dims, [j])) for j in range(n)]
    mi = np.zeros((n, n))
    for j, k in itertools.combinations(range(n), 2):
        s_jk = von_neumann_entropy(partial_trace(rho, dims, [j, k]))
        mi[j, k] = mi[k, j] = singles[j] + singles[k] - s_jk
    mi.setflags(write=False)
    return EntropyProfile(tuple(singles), mi)


def product_residual(state: DensityState, tps: "TensorProductStructure") -> float:
    """``||ρ − ⊗_j tr_{≠j} ρ||_F`` in the TPS frame."""
    rho = _local_rho(state, tps)
    margs = [partial_trace(rho, tps.factor_dims, [j]) for j in range(tps.n)]
    return frob(rho - kron_all(margs))


def entropy_trajectory(
    state0: DensityState,
    h,
    tps: "TensorProductStructure",
    t_grid: Sequence[float],
) -> list[tuple[float, EntropyProfile]]:
    ts = [float(t) for t in t_grid]
    if not all(math.isfinite(t) for t in ts) or any(b < a for a, b in zip(ts, ts[1:])):
        raise ValidationError("t_grid must be finite and ascending")
    hm = h if isinstance(h, Hamiltonian) else cluster_spectrum(h)
    out = [(t, entropy_profile(evolve(state0, hm, t), tps)) for t in ts]
    log.debug("entropy trajectory: empirical Lipschitz bound %.6g", empirical_lipschitz(out))
    return out


def empirical_lipschitz(trajectory: Sequence[tuple[float, EntropyProfile]]) -> float:
    """Largest observed ``|ΔS_j| / Δt`` between adjacent grid points."""
    best = 0.0
    for (t0, p0), (t1, p1) in zip(trajectory, trajectory[1:]):
        if t1 > t0:
            jump = max(abs(a - b) for a, b in zip(p0.per_factor, p1.per_factor))
            best = max(best, jump / (t1 - t0))
    return best


def max_entropy_jump(trajectory: Sequence[tuple[float, EntropyProfile]]) -> float:
    return max(
        (max(abs(a - b) for a, b in zip(p0.per_factor, p1.per_factor))
         for (_, p0), (_, p1) in zip(trajectory, trajectory[1:])),
        default=0.0,
    )


@dataclass(frozen=True)
class PersistencePoint:
    t: float
    residual: float
    max_entropy: float


@dataclass(frozen=True)
class PersistenceReport:
    points: tuple[PersistencePoint, ...]
    tol: float
    verdict: str

    @property
    def entangling(self) -> bool:
        return self.verdict == ENTANGLING

    @property
    def max_residual(self) -> float:
        return max((p.residual for p in self.points), default=0.0)

    @property
    def max_entropy(self) -> float:
        return max((p.max_entropy for p in self.points), default=0.0)


ENTANGLING = "entangling"
NON_ENTANGLING = "non-entangling"


def default_separability_tol(dim: int) -> float:
    return 1e-7 * dim


def separability_persistence_test(
    state0: DensityState,
    h,
    tps: "TensorProductStructure",
    t_grid: Sequence[float],
    tol: float | None = None,
) -> PersistenceReport:
    """Evolve a product state and watch whether it stays a product of its marginals.

    The product check compares ρ with the tensor product of its own
    single-factor marginals. That is exact for pure states and for the
    product mixed states used here; it is not a general separability test.
    """
    if tol is None:
        tol = default_separability_tol(state0.dim)
    r0 = product_residual(state0, tps)
    if r0 > tol:
        raise NotProductState(f"initial product residual {r0:.3e} exceeds tol {tol:.3e}")
    hm = h if isinstance(h, Hamiltonian) else cluster_spectrum(h)
    points = []
    for t in t_grid:
        st = evolve(state0, hm, float(t))
        prof = entropy_profile(st, tps)
        points.append(PersistencePoint(float(t), product_residual(st, tps), max(prof.per_factor)))
    verdict = ENTANGLING if any(p.residual > tol for p in points) else NON_ENTANGLING
    return PersistenceReport(tuple(points), float(tol), verdict)


# -- probe family --------------------------------------------------------------


def probe_family(dim: int, rng: np.random.Generator, n_random: int = 8) -> list[tuple[str, DensityState]]:
    """Computational basis states, the uniform superposition, and Haar-random pure states."""
    probes = [(f"basis:{i}", basis_state(i, dim)) for i in range(dim)]
    probes.append(("uniform", pure_state(np.ones(dim))))
    for r in range(n_random):
        probes.append((f"haar:{r}", pure_state(haar_unitary(dim, rng)[:, 0])))
    return probes
