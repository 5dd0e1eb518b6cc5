"""Dense complex linear algebra used by every other module.

Operators are plain ``numpy`` arrays of dtype ``complex128``. Functions never
mutate their arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionOverflow,
    EmptyKeepSet,
    NoConvergence,
    NotHermitian,
    ValidationError,
)

DEFAULT_DIMENSION_CAP = 4096
DEFAULT_RANK_TOL = 1e-8
HERMITIAN_TOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator for a 64-bit seed."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.random.Generator(np.random.Philox(seed))


def as_matrix(a, *, square: bool = True) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def frob(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def hermiticity_residual(a: np.ndarray) -> float:
    return frob(a - dagger(a))


def unitarity_residual(u: np.ndarray) -> float:
    return frob(dagger(u) @ u - np.eye(u.shape[0]))


def require_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = as_matrix(a)
    res = hermiticity_residual(m)
    if res > tol * frob(m):
        raise NotHermitian(f"||A - A^+||_F = {res:.3e} exceeds {tol:g} * ||A||_F")
    return m


# -- matrix JSON ---------------------------------------------------------------


def matrix_to_json(a: np.ndarray) -> dict:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from exc
    if rows < 1 or cols < 1:
        raise ValidationError("rows and cols must be positive")
    if len(entries) != rows * cols:
        raise DimensionMismatch(
            f"matrix JSON has {len(entries)} entries, expected {rows}x{cols}"
        )
    data = np.array([complex(re, im) for re, im in entries], dtype=complex)
    return as_matrix(data.reshape(rows, cols), square=False)


# -- decompositions ------------------------------------------------------------


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and a unitary whose columns are the eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def eigh(a, tol: float = HERMITIAN_TOL) -> SpectralDecomposition:
    m = require_hermitian(a, tol)
    m = 0.5 * (m + dagger(m))
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(w, v)


def kron(a, b, *, cap: int = DEFAULT_DIMENSION_CAP) -> np.ndarray:
    a = as_matrix(a, square=False)
    b = as_matrix(b, square=False)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > cap:
        raise DimensionOverflow(f"kron result {rows}x{cols} exceeds cap {cap}")
    return np.kron(a, b)


def kron_all(mats: Iterable[np.ndarray], *, cap: int = DEFAULT_DIMENSION_CAP) -> np.ndarray:
    return reduce(lambda x, y: kron(x, y, cap=cap), mats)


def embed(op: np.ndarray, dims: Sequence[int], j: int, *, cap: int = DEFAULT_DIMENSION_CAP) -> np.ndarray:
    """``I ⊗ … ⊗ op ⊗ … ⊗ I`` with ``op`` in slot ``j``."""
    if op.shape != (dims[j], dims[j]):
        raise DimensionMismatch(f"operator shape {op.shape} does not fit factor {j} of {tuple(dims)}")
    parts = [op if k == j else np.eye(d, dtype=complex) for k, d in enumerate(dims)]
    return kron_all(parts, cap=cap)


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduce ``rho`` onto the factors listed in ``keep``.

    Kept factors appear in ascending index order in the result.
    """
    rho = as_matrix(rho)
    dims = [int(d) for d in dims]
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise EmptyKeepSet("keep must name at least one factor")
    if math.prod(dims) != rho.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not multiply to {rho.shape[0]}")
    n = len(dims)
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionMismatch(f"keep {keep} out of range for {n} factors")
    traced = [k for k in range(n) if k not in keep]
    t = rho.reshape(dims + dims)
    # trace out the highest index first so the remaining axis numbers stay valid
    for k in reversed(traced):
        m = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + m)
        dims = dims[:k] + dims[k + 1:]
    d = math.prod(dims)
    return t.reshape(d, d)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    Columns of Q are rescaled by the phases of diag(R), otherwise the
    distribution is not Haar.
    """
    dim = int(dim)
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases


def singular_rank(a, tol: float = DEFAULT_RANK_TOL, scale: float | None = None) -> int:
    """Count singular values above ``tol * scale`` (``scale`` defaults to s_max)."""
    a = np.asarray(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    ref = s[0] if scale is None else scale
    if ref == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * ref))


def nullspace_dim(a, tol: float = DEFAULT_RANK_TOL, scale: float | None = None) -> int:
    """Column count minus the numerical rank.

    Pass ``scale`` when the matrix may be pure round-off (e.g. the
    commutation map of a multiple of the identity); otherwise the threshold
    is relative to the largest singular value.
    """
    a = as_matrix(a, square=False)
    return a.shape[1] - singular_rank(a, tol, scale)


def commutation_map(h) -> np.ndarray:
    """Matrix of ``S -> S H - H S`` acting on row-major ``vec(S)``."""
    h = as_matrix(h)
    eye = np.eye(h.shape[0], dtype=complex)
    return np.kron(eye, h.T) - np.kron(h, eye)


def unitary_exp(h, t: float, sign: int = 1) -> np.ndarray:
    """``exp(sign * (-i) * H * t)`` through the spectral decomposition."""
    if sign not in (1, -1):
        raise ValidationError(f"sign must be +1 or -1, got {sign}")
    dec = h if isinstance(h, SpectralDecomposition) else eigh(h)
    v = dec.eigenvectors
    phases = np.exp(-1j * sign * float(t) * dec.eigenvalues)
    return (v * phases) @ dagger(v)
