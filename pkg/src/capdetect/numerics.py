"""Dense complex linear algebra with an explicit tolerance policy.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The helpers here
validate their inputs (Hermiticity, positivity, unit trace) and raise
:class:`ValidationError` rather than silently repairing bad data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

HERMITIAN_TOL = 1e-12
STATE_TOL = 1e-10
PSD_TOL = 1e-8


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class UnsupportedError(ValueError):
    """Request lies outside the supported size or order budget."""


def _default_eps_grid() -> Tuple[float, ...]:
    return tuple(10.0 ** -k for k in range(1, 9))


@dataclass(frozen=True)
class ToleranceConfig:
    rank_rtol: float = 1e-9
    rank_atol: float = 1e-12
    detection_gap: float = 1e-7
    eps_grid: Tuple[float, ...] = field(default_factory=_default_eps_grid)
    haar_samples: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("rank_rtol", "rank_atol", "detection_gap"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        grid = tuple(float(e) for e in self.eps_grid)
        if not grid:
            raise ValidationError("eps_grid must be nonempty")
        if any(not 0.0 < e < 1.0 for e in grid):
            raise ValidationError("eps_grid entries must lie in (0, 1)")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("eps_grid must be strictly decreasing")
        if self.haar_samples < 0:
            raise ValidationError("haar_samples must be nonnegative")
        object.__setattr__(self, "eps_grid", grid)

    def with_(self, **changes) -> "ToleranceConfig":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return ToleranceConfig(**values)

    def threshold(self, largest: float) -> float:
        """Cut-off below which a singular value or eigenvalue counts as zero."""
        return max(self.rank_rtol * largest, self.rank_atol)


DEFAULT_TOL = ToleranceConfig()


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------

def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValidationError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def as_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate Hermiticity (relative to the matrix scale) and symmetrize."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValidationError(f"expected a nonempty square matrix, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > tol * scale:
        raise ValidationError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return 0.5 * (m + m.conj().T)


def as_density_matrix(a) -> np.ndarray:
    rho = as_hermitian(a)
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > STATE_TOL:
        raise ValidationError(f"density matrix has trace {tr!r}")
    lmin = float(np.linalg.eigvalsh(rho)[0])
    if lmin < -STATE_TOL:
        raise ValidationError(f"density matrix has eigenvalue {lmin:.3e} < 0")
    return rho


def as_pure_state(v) -> np.ndarray:
    psi = np.asarray(v, dtype=complex).reshape(-1)
    if psi.size == 0 or not np.all(np.isfinite(psi)):
        raise ValidationError("state vector must be finite and nonempty")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > STATE_TOL:
        raise ValidationError(f"state vector has norm {norm!r}")
    return psi


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector_onto(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


# ---------------------------------------------------------------------------
# spectral helpers
# ---------------------------------------------------------------------------

def hermitian_eig(a) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in ascending order and the matching unitary eigenbasis."""
    h = as_hermitian(a)
    w, v = np.linalg.eigh(h)
    return w, v


def numerical_rank(a, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    m = as_matrix(a)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol.threshold(float(s[0]))))


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector together with an orthonormal basis of its range."""

    basis: np.ndarray  # dim x rank, orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def _psd_split(a, tol: ToleranceConfig):
    w, v = hermitian_eig(a)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[0] < -PSD_TOL * scale:
        raise ValidationError(f"matrix is not positive semidefinite (eigenvalue {w[0]:.3e})")
    cut = tol.threshold(max(float(w[-1]), 0.0))
    small = w <= cut
    return w, v, small


def kernel_projector(a, tol: ToleranceConfig = DEFAULT_TOL) -> Projector:
    """Projector onto the numerical null space of a PSD matrix."""
    _, v, small = _psd_split(a, tol)
    return Projector(v[:, small])


def range_projector(a, tol: ToleranceConfig = DEFAULT_TOL) -> Projector:
    """Projector onto the numerical range of a PSD matrix."""
    _, v, small = _psd_split(a, tol)
    return Projector(v[:, ~small])


def spectral_split(a, tol: ToleranceConfig = DEFAULT_TOL):
    """Return ``(eigenvalues, threshold, kernel Projector, range Projector)``."""
    w, v, small = _psd_split(a, tol)
    cut = tol.threshold(max(float(w[-1]), 0.0))
    return w, cut, Projector(v[:, small]), Projector(v[:, ~small])


def von_neumann_entropy(rho) -> float:
    """Entropy in bits, with ``0 log 0 = 0``."""
    r = as_hermitian(rho)
    tr = float(np.real(np.trace(r)))
    if abs(tr - 1.0) > STATE_TOL:
        raise ValidationError(f"density matrix has trace {tr!r}")
    w = np.linalg.eigvalsh(r)
    if w[0] < -STATE_TOL:
        raise ValidationError(f"density matrix has eigenvalue {w[0]:.3e} < 0")
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def partial_trace(m, keep: str, d1: int, d2: int) -> np.ndarray:
    """Trace out one factor of a matrix on ``C^d1 (x) C^d2``.

    ``keep="first"`` returns the reduced matrix on ``C^d1``; ``keep="second"``
    the one on ``C^d2``.
    """
    m = as_matrix(m)
    n = d1 * d2
    if m.shape != (n, n):
        raise ValidationError(f"expected a {n}x{n} matrix, got {m.shape}")
    t = m.reshape(d1, d2, d1, d2)
    if keep == "first":
        return np.einsum("ajbj->ab", t)
    if keep == "second":
        return np.einsum("iaib->ab", t)
    raise ValidationError(f"keep must be 'first' or 'second', not {keep!r}")


def vec(x) -> np.ndarray:
    """Row-major vectorization: ``vec X = sum X_ij |i>|j>``."""
    return as_matrix(x).reshape(-1).copy()


def unvec(v, d1: int, d2: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    if d2 is None:
        if d1 <= 0 or v.size % d1:
            raise ValidationError(f"length {v.size} is not divisible by {d1}")
        d2 = v.size // d1
    if d1 * d2 != v.size:
        raise ValidationError(f"length {v.size} does not factor as {d1}x{d2}")
    return v.reshape(d1, d2).copy()


def schmidt_decomposition(psi, d1: int, d2: int, tol: ToleranceConfig = DEFAULT_TOL):
    """Schmidt coefficients (descending, nonzero only) with left/right vectors.

    Returns ``(coeffs, left, right)`` where ``left[:, i]`` and ``right[:, i]``
    are orthonormal and ``psi = sum_i coeffs[i] left[:, i] (x) right[:, i]``.
    """
    psi = as_pure_state(psi)
    if psi.size != d1 * d2:
        raise ValidationError(f"state of length {psi.size} does not live on {d1}x{d2}")
    u, s, vh = np.linalg.svd(psi.reshape(d1, d2), full_matrices=False)
    keep = s > tol.threshold(float(s[0]))
    return s[keep], u[:, keep], vh[keep].T


# ---------------------------------------------------------------------------
# random sampling
# ---------------------------------------------------------------------------

def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ g.conj().T
    return rho / np.real(np.trace(rho))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out
