"""Tensor product structures, their observable algebras, and dimension counting.

A TPS is stored as the factor dimensions plus a *frame*: the unitary that
carries the reference product basis ``C^{d_1} ⊗ … ⊗ C^{d_n}`` onto the
Hilbert space. Observable algebras are derived from it on demand.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DimensionOverflow, InvalidFactorDim, NotUnitary
from .numkernel import (
    DEFAULT_DIMENSION_CAP,
    DEFAULT_RANK_TOL,
    as_matrix,
    dagger,
    embed,
    frob,
    singular_rank,
    unitarity_residual,
)

UNITARY_TOL = 1e-9
COMMUTATOR_TOL = 1e-8


def _check_dims(factor_dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in factor_dims)
    if not dims:
        raise InvalidFactorDim("need at least one factor")
    bad = [d for d in dims if d < 2]
    if bad:
        raise InvalidFactorDim(f"every factor dimension must be >= 2, got {dims}")
    return dims


@dataclass(frozen=True)
class TensorProductStructure:
    factor_dims: tuple[int, ...]
    frame: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = _check_dims(self.factor_dims)
        frame = as_matrix(self.frame)
        dim = math.prod(dims)
        if frame.shape[0] != dim:
            raise DimensionMismatch(f"frame is {frame.shape[0]}-dimensional, factors give {dim}")
        if unitarity_residual(frame) > UNITARY_TOL * dim:
            raise NotUnitary("frame is not unitary")
        frame = frame.copy()
        frame.setflags(write=False)
        object.__setattr__(self, "factor_dims", dims)
        object.__setattr__(self, "frame", frame)

    @property
    def dim(self) -> int:
        return math.prod(self.factor_dims)

    @property
    def n(self) -> int:
        return len(self.factor_dims)

    def to_json(self) -> dict:
        from .numkernel import matrix_to_json

        return {"factor_dims": list(self.factor_dims), "frame": matrix_to_json(self.frame)}

    @classmethod
    def from_json(cls, obj: dict) -> "TensorProductStructure":
        from .numkernel import matrix_from_json

        dims = _check_dims(obj["factor_dims"])
        if "frame" in obj and obj["frame"] is not None:
            frame = matrix_from_json(obj["frame"])
        else:
            frame = np.eye(math.prod(dims), dtype=complex)
        return cls(dims, frame)


@dataclass(frozen=True)
class ObservableAlgebra:
    factor_index: int
    generators: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.generators)


@dataclass(frozen=True)
class DimensionLedger:
    factor_dims: tuple[int, ...]
    dim_u_tps: int
    dim_u_h_lower: int
    dim_u_h_upper: int
    D_H: int
    D_TPS: int
    gap: int

    def as_dict(self) -> dict:
        return {
            "factor_dims": list(self.factor_dims),
            "n": len(self.factor_dims),
            "dim_u_tps": self.dim_u_tps,
            "dim_u_h_lower": self.dim_u_h_lower,
            "dim_u_h_upper": self.dim_u_h_upper,
            "D_H": self.D_H,
            "D_TPS": self.D_TPS,
            "gap": self.gap,
        }


@dataclass(frozen=True)
class ProbeReport:
    probe_id: str
    entropies_a: tuple[float, ...]
    entropies_b: tuple[float, ...]
    discrepancy: float


@dataclass(frozen=True)
class TpsEquivalenceWitness:
    verdict: str
    probe_reports: tuple[ProbeReport, ...]
    threshold: float
    reason: str = ""

    @property
    def certified(self) -> bool:
        return self.verdict == NONEQUIVALENT

    @property
    def max_discrepancy(self) -> float:
        return max((p.discrepancy for p in self.probe_reports), default=0.0)


NONEQUIVALENT = "NonequivalentCertified"
NOT_DISTINGUISHED = "NotDistinguished"


# -- construction --------------------------------------------------------------


def standard_tps(factor_dims: Sequence[int]) -> TensorProductStructure:
    dims = _check_dims(factor_dims)
    return TensorProductStructure(dims, np.eye(math.prod(dims), dtype=complex))


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Identity followed by the d²−1 generalized Gell-Mann matrices."""
    basis = [np.eye(d, dtype=complex)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            basis += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        basis.append(np.diag(diag * math.sqrt(2 / (l * (l + 1)))).astype(complex))
    return basis


def algebras_of(
    tps: TensorProductStructure, *, cap: int = DEFAULT_DIMENSION_CAP
) -> list[ObservableAlgebra]:
    if tps.dim > cap:
        raise DimensionOverflow(f"dimension {tps.dim} exceeds cap {cap}")
    f = tps.frame
    algs = []
    for j, d in enumerate(tps.factor_dims):
        gens = tuple(f @ embed(g, tps.factor_dims, j, cap=cap) @ dagger(f) for g in hermitian_basis(d))
        algs.append(ObservableAlgebra(j, gens))
    return algs


def transform_tps(tps: TensorProductStructure, s) -> TensorProductStructure:
    """Carry a TPS along a unitary: the new frame is ``S · frame``."""
    s = as_matrix(s)
    if s.shape[0] != tps.dim:
        raise DimensionMismatch(f"unitary is {s.shape[0]}-dimensional, TPS is {tps.dim}")
    if unitarity_residual(s) > UNITARY_TOL * tps.dim:
        raise NotUnitary("transform is not unitary")
    return TensorProductStructure(tps.factor_dims, s @ tps.frame)


def local_unitary(us: Sequence[np.ndarray]) -> np.ndarray:
    return _kron_list(list(us))


def _kron_list(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def permutation_operator(factor_dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary sending factor ``k`` of the input to slot ``perm[k]`` of the output.

    Only permutations between factors of equal dimension map the space to
    itself; others are rejected.
    """
    dims = tuple(int(d) for d in factor_dims)
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(len(dims))):
        raise DimensionMismatch(f"{perm} is not a permutation of {len(dims)} factors")
    if any(dims[k] != dims[perm[k]] for k in range(len(dims))):
        raise DimensionMismatch(f"permutation {perm} mixes factors of different dimension {dims}")
    dim = math.prod(dims)
    # out axes: axis perm[k] carries input axis k
    inv = [0] * len(dims)
    for k, p in enumerate(perm):
        inv[p] = k
    idx = np.arange(dim).reshape(dims).transpose(inv).reshape(-1)
    p = np.zeros((dim, dim), dtype=complex)
    p[np.arange(dim), idx] = 1
    return p


def swap_operator(d: int) -> np.ndarray:
    return permutation_operator((d, d), (1, 0))


# -- observable-algebra conditions ---------------------------------------------


def _vec_stack(gens: Sequence[np.ndarray]) -> np.ndarray:
    return np.array([g.reshape(-1) for g in gens])


def span_dim(gens: Sequence[np.ndarray], tol: float = DEFAULT_RANK_TOL) -> int:
    return singular_rank(_vec_stack(gens), tol)


def _orthonormal_rows(vecs: np.ndarray, tol: float) -> np.ndarray:
    if len(vecs) == 0:
        return vecs
    u, s, vh = np.linalg.svd(vecs, full_matrices=False)
    if s[0] == 0:
        return vh[:0]
    return vh[s > tol * s[0]]


def generated_span_dim(gens: Sequence[np.ndarray], tol: float = DEFAULT_RANK_TOL, max_rounds: int = 64) -> int:
    """Dimension of the unital algebra generated by ``gens`` (closure under products)."""
    dim = gens[0].shape[0]
    basis = _orthonormal_rows(_vec_stack([np.eye(dim, dtype=complex), *gens]), tol)
    scale = max(frob(g) for g in gens) or 1.0
    for _ in range(max_rounds):
        mats = [b.reshape(dim, dim) for b in basis]
        prods = [m @ g / scale for m in mats for g in gens]
        new = _orthonormal_rows(np.vstack([basis, _vec_stack(prods)]), tol)
        if len(new) == len(basis):
            return len(basis)
        basis = new
        if len(basis) == dim * dim:
            return len(basis)
    return len(basis)


@dataclass(frozen=True)
class TpsConditionsReport:
    max_commutator: float
    intersection_dims: dict
    joint_dim: int
    ambient_dim: int

    @property
    def commuting(self) -> bool:
        return self.max_commutator <= COMMUTATOR_TOL

    @property
    def trivial_intersections(self) -> bool:
        return all(v == 1 for v in self.intersection_dims.values())

    @property
    def full(self) -> bool:
        return self.joint_dim == self.ambient_dim**2

    @property
    def passed(self) -> bool:
        return self.commuting and self.trivial_intersections and self.full

    def as_dict(self) -> dict:
        return {
            "max_commutator": self.max_commutator,
            "intersection_dims": {f"{j},{k}": v for (j, k), v in sorted(self.intersection_dims.items())},
            "joint_dim": self.joint_dim,
            "ambient_dim": self.ambient_dim,
            "commuting": self.commuting,
            "trivial_intersections": self.trivial_intersections,
            "full": self.full,
            "passed": self.passed,
        }


def check_tps_conditions(algebras: Sequence[ObservableAlgebra], tol: float = DEFAULT_RANK_TOL) -> TpsConditionsReport:
    """Pairwise commutation, trivial pairwise intersection, and joint fullness."""
    gens = [list(a.generators) for a in algebras]
    dim = gens[0][0].shape[0]
    if any(g.shape != (dim, dim) for gs in gens for g in gs):
        raise DimensionMismatch("algebras do not share an ambient dimension")
    worst = 0.0
    inter = {}
    ranks = [span_dim(gs, tol) for gs in gens]
    for j, k in itertools.combinations(range(len(gens)), 2):
        for a in gens[j]:
            for b in gens[k]:
                worst = max(worst, frob(a @ b - b @ a))
        inter[(j, k)] = ranks[j] + ranks[k] - span_dim(gens[j] + gens[k], tol)
    joint = generated_span_dim([g for gs in gens for g in gs], tol)
    return TpsConditionsReport(worst, inter, joint, dim)


def _span_projector(gens: Sequence[np.ndarray], tol: float) -> np.ndarray:
    basis = _orthonormal_rows(_vec_stack(gens), tol)
    return basis.T @ basis.conj()


def algebra_set_distance(
    algs_a: Sequence[ObservableAlgebra],
    algs_b: Sequence[ObservableAlgebra],
    tol: float = DEFAULT_RANK_TOL,
) -> float:
    """Distance between two unordered families of algebras.

    Each algebra is identified with the orthogonal projector onto its span;
    the result is the minimum over matchings of the largest projector
    difference (spectral norm). Zero iff the families agree as sets.
    """
    if len(algs_a) != len(algs_b):
        return math.inf
    pa = [_span_projector(a.generators, tol) for a in algs_a]
    pb = [_span_projector(b.generators, tol) for b in algs_b]
    if pa and pa[0].shape != pb[0].shape:
        raise DimensionMismatch("algebra families live on different spaces")
    cost = np.array([[np.linalg.norm(x - y, 2) for y in pb] for x in pa])
    n = len(pa)
    return float(min(max(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))))


# -- dimension counting --------------------------------------------------------


def dimension_ledger(factor_dims: Sequence[int]) -> DimensionLedger:
    dims = _check_dims(factor_dims)
    n = len(dims)
    prod = math.prod(dims)
    d_tps = sum(dims) - n + 1
    return DimensionLedger(
        factor_dims=dims,
        dim_u_tps=sum(d * d for d in dims) - n + 1,
        dim_u_h_lower=prod,
        dim_u_h_upper=prod * prod,
        D_H=prod,
        D_TPS=d_tps,
        gap=prod - d_tps,
    )


def local_unitary_group_dimension(
    tps: TensorProductStructure, tol: float = DEFAULT_RANK_TOL, *, cap: int = DEFAULT_DIMENSION_CAP
) -> int:
    """Real rank of the embedded local Lie algebras u(d_j) plus the global phase.

    Computed from matrices, not from the closed form, so the two can be
    compared.
    """
    gens = [1j * g for alg in algebras_of(tps, cap=cap) for g in alg.generators]
    gens.append(1j * np.eye(tps.dim, dtype=complex))
    flat = _vec_stack(gens)
    real = np.hstack([flat.real, flat.imag])
    return singular_rank(real, tol)


# -- nonequivalence certificates -----------------------------------------------

CERTIFICATE_THRESHOLD = 1e-6


def certify_nonequivalence(
    tps_a: TensorProductStructure,
    tps_b: TensorProductStructure,
    probes: Sequence,
    threshold: float = CERTIFICATE_THRESHOLD,
) -> TpsEquivalenceWitness:
    """Compare sorted single-factor entropies of probe states under two TPSs.

    Local unitaries and permutations of equal factors leave the sorted
    entropies unchanged, so a discrepancy above ``threshold`` proves the two
    TPSs are not related by such a symmetry. ``NotDistinguished`` proves
    nothing.

    ``probes`` holds ``DensityState`` objects or ``(id, DensityState)`` pairs.
    """
    from .entangle import entropy_profile

    if tps_a.dim != tps_b.dim:
        raise DimensionMismatch(f"TPS dimensions differ: {tps_a.dim} vs {tps_b.dim}")
    if sorted(tps_a.factor_dims) != sorted(tps_b.factor_dims):
        return TpsEquivalenceWitness(
            NONEQUIVALENT, (), threshold,
            reason=f"factor dimensions differ: {tps_a.factor_dims} vs {tps_b.factor_dims}",
        )
    reports = []
    for i, probe in enumerate(probes):
        pid, state = probe if isinstance(probe, tuple) else (f"probe:{i}", probe)
        sa = entropy_profile(state, tps_a).sorted_multiset
        sb = entropy_profile(state, tps_b).sorted_multiset
        disc = max(abs(x - y) for x, y in zip(sa, sb))
        reports.append(ProbeReport(pid, sa, sb, disc))
    hit = any(r.discrepancy > threshold for r in reports)
    return TpsEquivalenceWitness(NONEQUIVALENT if hit else NOT_DISTINGUISHED, tuple(reports), threshold)
