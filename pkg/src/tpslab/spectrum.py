"""Eigenvalue clustering, the commutant of a Hamiltonian, and sampling inside it."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AngleLengthMismatch, AmbiguousClusteringWarning, ValidationError
from .numkernel import (
    DEFAULT_RANK_TOL,
    SpectralDecomposition,
    commutation_map,
    dagger,
    eigh,
    haar_unitary,
    nullspace_dim,
)

CLUSTER_REL_TOL = 1e-8


@dataclass(frozen=True)
class Cluster:
    value: float
    multiplicity: int
    start: int
    stop: int  # exclusive column index into the eigenvector matrix


@dataclass(frozen=True)
class Hamiltonian:
    matrix: np.ndarray
    decomposition: SpectralDecomposition
    clusters: tuple[Cluster, ...]
    cluster_tol: float
    ambiguous_gaps: tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(c.multiplicity for c in self.clusters)

    @property
    def ambiguous(self) -> bool:
        return bool(self.ambiguous_gaps)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.decomposition.eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.decomposition.eigenvectors


@dataclass(frozen=True)
class CommutantDescription:
    multiplicities: tuple[int, ...]
    dimension: int
    torus_dimension: int


def _orthonormalize(block: np.ndarray) -> np.ndarray:
    # QR with the diagonal of R made positive: a fixed, deterministic gauge.
    q, r = np.linalg.qr(block)
    d = np.diagonal(r)
    phases = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1)
    return q * phases


def cluster_spectrum(h, cluster_tol: float | None = None) -> Hamiltonian:
    """Group the ascending eigenvalues of ``h`` into degenerate clusters.

    Consecutive eigenvalues whose gap is at most ``cluster_tol`` share a
    cluster. The default tolerance is ``1e-8 * ||h||_2``. A gap that falls in
    ``(tol, 10 tol)`` is recorded in ``ambiguous_gaps`` and reported with an
    :class:`AmbiguousClusteringWarning`; it is not an error.
    """
    if isinstance(h, Hamiltonian):
        h = h.matrix
    dec = eigh(h)
    m = 0.5 * (np.asarray(h, dtype=complex) + dagger(np.asarray(h, dtype=complex)))
    w = dec.eigenvalues
    if cluster_tol is None:
        scale = float(np.max(np.abs(w))) if len(w) else 0.0
        cluster_tol = CLUSTER_REL_TOL * scale if scale > 0 else CLUSTER_REL_TOL
    if not cluster_tol > 0:
        raise ValidationError(f"cluster_tol must be positive, got {cluster_tol}")

    gaps = np.diff(w)
    ambiguous = tuple(float(g) for g in gaps if cluster_tol < g < 10 * cluster_tol)
    if ambiguous:
        warnings.warn(
            f"{len(ambiguous)} eigenvalue gap(s) within a decade above cluster_tol={cluster_tol:.3e}",
            AmbiguousClusteringWarning,
            stacklevel=2,
        )

    bounds = [0] + [i + 1 for i, g in enumerate(gaps) if g > cluster_tol] + [len(w)]
    clusters = []
    v = np.array(dec.eigenvectors)
    for start, stop in zip(bounds[:-1], bounds[1:]):
        clusters.append(Cluster(float(np.mean(w[start:stop])), stop - start, start, stop))
        if stop - start > 1:
            v[:, start:stop] = _orthonormalize(v[:, start:stop])
    v.setflags(write=False)
    m.setflags(write=False)
    return Hamiltonian(
        matrix=m,
        decomposition=SpectralDecomposition(dec.eigenvalues, v),
        clusters=tuple(clusters),
        cluster_tol=float(cluster_tol),
        ambiguous_gaps=ambiguous,
    )


def commutant_dimension(h: Hamiltonian) -> CommutantDescription:
    mult = h.multiplicities
    return CommutantDescription(
        multiplicities=mult,
        dimension=sum(m * m for m in mult),
        torus_dimension=sum(mult),
    )


def commutant_oracle_dimension(h, tol: float = DEFAULT_RANK_TOL) -> int:
    """Independent check: nullspace dimension of the vectorized commutation map.

    The rank threshold is measured against ``2 ||H||_2``, the largest norm the
    map can have, so that ``H = c I`` (a map of pure round-off) comes out right.
    """
    m = h.matrix if isinstance(h, Hamiltonian) else np.asarray(h, dtype=complex)
    return nullspace_dim(commutation_map(m), tol, scale=2 * np.linalg.norm(m, 2))


def sample_commuting_unitary(h: Hamiltonian, rng: np.random.Generator) -> np.ndarray:
    """``V · blockdiag(U_1, …, U_k) · V†`` with each ``U_i`` Haar on its eigenspace."""
    v = h.eigenvectors
    block = np.zeros((h.dim, h.dim), dtype=complex)
    for c in h.clusters:
        block[c.start:c.stop, c.start:c.stop] = haar_unitary(c.multiplicity, rng)
    return v @ block @ dagger(v)


def sample_torus_element(h: Hamiltonian, angles: Sequence[float]) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (h.dim,):
        raise AngleLengthMismatch(f"need {h.dim} angles, got shape {angles.shape}")
    v = h.eigenvectors
    return (v * np.exp(1j * angles)) @ dagger(v)


def planted_hamiltonian(
    multiplicities: Sequence[int],
    rng: np.random.Generator,
    *,
    levels: Sequence[float] | None = None,
) -> np.ndarray:
    """Random Hermitian matrix whose eigenvalue multiplicities are exactly ``multiplicities``.

    Levels default to well-separated ascending values so the planted
    structure is far from any clustering tolerance.
    """
    mult = [int(m) for m in multiplicities]
    if not mult or min(mult) < 1:
        raise ValidationError(f"multiplicities must be positive, got {mult}")
    k = len(mult)
    if levels is None:
        steps = 0.5 + rng.random(k)
        levels = np.cumsum(steps) - steps.sum() / 2
    if len(levels) != k:
        raise ValidationError("need one level per multiplicity")
    diag = np.repeat(np.asarray(levels, dtype=float), mult)
    u = haar_unitary(len(diag), rng)
    h = (u * diag) @ dagger(u)
    return 0.5 * (h + dagger(h))


def gue(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Sample from the Gaussian unitary ensemble (unit-variance off-diagonals)."""
    a = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    return (a + dagger(a)) / 2
