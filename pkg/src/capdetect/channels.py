"""Quantum channels in Kraus form, their Choi matrices, and canonical complements.

Conventions
-----------
* A channel ``M_{d_in} -> M_{d_out}`` holds Kraus operators of shape
  ``(d_out, d_in)`` stacked into an array of shape ``(k, d_out, d_in)``.
* The Choi matrix lives on ``C^{d_out} (x) C^{d_in}``:
  ``J = sum_ij Phi(|i><j|) (x) |i><j| = sum_k vec(A_k) vec(A_k)^dagger``
  with row-major ``vec``.
* A Stinespring isometry ``V`` maps ``C^{d_in}`` into
  ``C^{d_out} (x) C^{d_env}`` with the output factor first, so
  ``V = sum_k A_k (x) |k>_env``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .numerics import (
    DEFAULT_TOL,
    ToleranceConfig,
    UnsupportedError,
    ValidationError,
    as_density_matrix,
    as_hermitian,
    as_matrix,
    numerical_rank,
    partial_trace,
)

TP_TOL = 1e-9
MAX_TENSOR_DIM = 4096


@dataclass(frozen=True, eq=False)
class Channel:
    d_in: int
    d_out: int
    kraus: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.kraus, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise ValidationError("a channel needs a nonempty list of Kraus operators")
        if ops.shape[1:] != (self.d_out, self.d_in):
            raise ValidationError(
                f"Kraus operators have shape {ops.shape[1:]}, expected {(self.d_out, self.d_in)}"
            )
        if not np.all(np.isfinite(ops)):
            raise ValidationError("Kraus operators have non-finite entries")
        gram = np.einsum("kab,kac->bc", ops.conj(), ops)
        err = float(np.max(np.abs(gram - np.eye(self.d_in))))
        if err > TP_TOL:
            raise ValidationError(f"Kraus operators are not trace preserving (violation {err:.3e})")
        ops.setflags(write=False)
        object.__setattr__(self, "kraus", ops)

    @classmethod
    def from_kraus(cls, ops: Sequence) -> "Channel":
        arr = np.asarray([as_matrix(a) for a in ops], dtype=complex)
        return cls(d_in=arr.shape[2], d_out=arr.shape[1], kraus=arr)

    @property
    def num_kraus(self) -> int:
        return self.kraus.shape[0]

    def __call__(self, x) -> np.ndarray:
        return apply_map(self, x)

    def __repr__(self):
        return f"Channel(d_in={self.d_in}, d_out={self.d_out}, num_kraus={self.num_kraus})"


@dataclass(frozen=True, eq=False)
class StinespringIsometry:
    d_in: int
    d_out: int
    d_env: int
    V: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.V, dtype=complex)
        if v.shape != (self.d_out * self.d_env, self.d_in):
            raise ValidationError(f"isometry has shape {v.shape}")
        err = float(np.max(np.abs(v.conj().T @ v - np.eye(self.d_in))))
        if err > TP_TOL:
            raise ValidationError(f"V is not an isometry (violation {err:.3e})")
        v.setflags(write=False)
        object.__setattr__(self, "V", v)

    def dilate(self, x) -> np.ndarray:
        return self.V @ x @ self.V.conj().T


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    d_in: int
    d_out: int
    J: np.ndarray


@dataclass(frozen=True, eq=False)
class ComplementaryPair:
    channel: Channel
    complement: Channel
    isometry: StinespringIsometry

    @property
    def d_in(self) -> int:
        return self.channel.d_in

    @property
    def d_out(self) -> int:
        return self.channel.d_out

    @property
    def d_env(self) -> int:
        return self.complement.d_out


# ---------------------------------------------------------------------------
# action, adjoint, Choi
# ---------------------------------------------------------------------------

def apply_map(ch: Channel, x) -> np.ndarray:
    """Kraus action on an arbitrary (not necessarily positive) input matrix."""
    x = as_matrix(x)
    if x.shape != (ch.d_in, ch.d_in):
        raise ValidationError(f"input has shape {x.shape}, channel expects {ch.d_in}x{ch.d_in}")
    a = ch.kraus
    return np.sum(a @ x @ a.conj().transpose(0, 2, 1), axis=0)


def apply(ch: Channel, rho) -> np.ndarray:
    """Apply a channel to a density matrix."""
    rho = as_density_matrix(rho)
    if rho.shape[0] != ch.d_in:
        raise ValidationError(f"state has dimension {rho.shape[0]}, channel expects {ch.d_in}")
    out = apply_map(ch, rho)
    return 0.5 * (out + out.conj().T)


def adjoint_apply(ch: Channel, y) -> np.ndarray:
    y = as_hermitian(y)
    if y.shape[0] != ch.d_out:
        raise ValidationError(f"operator has dimension {y.shape[0]}, adjoint expects {ch.d_out}")
    a = ch.kraus
    out = np.sum(a.conj().transpose(0, 2, 1) @ y @ a, axis=0)
    return 0.5 * (out + out.conj().T)


def choi(ch: Channel) -> ChoiMatrix:
    vecs = ch.kraus.reshape(ch.num_kraus, -1)
    j = vecs.T @ vecs.conj()
    return ChoiMatrix(ch.d_in, ch.d_out, 0.5 * (j + j.conj().T))


def choi_of_action(action: Callable[[np.ndarray], np.ndarray], d_in: int, d_out: int) -> np.ndarray:
    """Choi matrix of a linear map given only by its action on matrix units."""
    j = np.zeros((d_out, d_in, d_out, d_in), dtype=complex)
    for i in range(d_in):
        for k in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[i, k] = 1.0
            j[:, i, :, k] = action(e)
    return j.reshape(d_out * d_in, d_out * d_in)


def minimal_kraus_from_choi(j, d_in: int, d_out: int, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Linearly independent Kraus set from the Choi eigendecomposition.

    Operators are ordered by descending Choi eigenvalue; inside a numerically
    degenerate cluster the order is lexicographic in the phase-fixed
    eigenvector entries.
    """
    j = as_hermitian(j, tol=1e-10)
    w, v = np.linalg.eigh(j)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[0] < -1e-8 * scale:
        raise ValidationError(f"Choi matrix is not positive semidefinite (eigenvalue {w[0]:.3e})")
    return _canonical_ops(w, v, d_in, d_out, tol)


def _canonical_ops(w, v, d_in, d_out, tol):
    keep = w > tol.threshold(max(float(w[-1]), 0.0))
    w, v = w[keep], v[:, keep]
    cols = []
    for idx in range(v.shape[1]):
        col = v[:, idx]
        lead = np.flatnonzero(np.abs(col) > 1e-12)[0]
        col = col * (abs(col[lead]) / col[lead])
        key = tuple(np.round(np.concatenate([col.real, col.imag]), 10))
        cols.append((-round(float(w[idx]), 10), key, idx, col))
    cols.sort(key=lambda t: (t[0], t[1]))
    ops = [np.sqrt(w[t[2]]) * t[3].reshape(d_out, d_in) for t in cols]
    return np.asarray(ops)


def channel_from_choi(j, d_in: int, d_out: int, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    return Channel(d_in, d_out, minimal_kraus_from_choi(j, d_in, d_out, tol))


def channel_from_action(action, d_in: int, d_out: int, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    return channel_from_choi(choi_of_action(action, d_in, d_out), d_in, d_out, tol)


def minimize(ch: Channel, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    """Same channel with a minimal (linearly independent) Kraus set."""
    m = ch.kraus.reshape(ch.num_kraus, -1)
    if m.shape[0] >= m.shape[1]:
        return channel_from_choi(choi(ch).J, ch.d_in, ch.d_out, tol)
    # Choi = M^T conj(M) shares its nonzero spectrum with the small Gram matrix
    gram = m.conj() @ m.T
    w, u = np.linalg.eigh(0.5 * (gram + gram.conj().T))
    w = np.clip(w, 0.0, None)
    v = m.T @ u
    norms = np.sqrt(np.maximum(w, np.finfo(float).tiny))
    return Channel(ch.d_in, ch.d_out, _canonical_ops(w, v / norms, ch.d_in, ch.d_out, tol))


# ---------------------------------------------------------------------------
# minimal dimensions
# ---------------------------------------------------------------------------

def minimal_env_dim(ch: Channel, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    return numerical_rank(choi(ch).J, tol)


def minimal_out_dim(ch: Channel, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    return numerical_rank(apply_map(ch, np.eye(ch.d_in) / ch.d_in), tol)


# ---------------------------------------------------------------------------
# Stinespring dilation and complements
# ---------------------------------------------------------------------------

def isometry_from_kraus(ops: np.ndarray) -> np.ndarray:
    """``V = sum_k A_k (x) |k>`` as a ``(d_out*k) x d_in`` matrix."""
    k, d_out, d_in = ops.shape
    return np.transpose(ops, (1, 0, 2)).reshape(d_out * k, d_in)


def stinespring(ch: Channel, tol: ToleranceConfig = DEFAULT_TOL) -> StinespringIsometry:
    ops = minimize(ch, tol).kraus
    k = ops.shape[0]
    return StinespringIsometry(ch.d_in, ch.d_out, k, isometry_from_kraus(ops))


def complement_kraus(ops: np.ndarray) -> np.ndarray:
    """Kraus operators ``(<a| (x) 1) V`` of the complementary map."""
    # B_a[k, b] = A_k[a, b]
    return np.transpose(ops, (1, 0, 2)).copy()


def pair_from_isometry(v, d_out: int, d_env: int, tol: ToleranceConfig = DEFAULT_TOL,
                       channel: Channel | None = None) -> ComplementaryPair:
    """Complementary pair traced out of an explicit isometry ``V``."""
    v = as_matrix(v)
    d_in = v.shape[1]
    iso = StinespringIsometry(d_in, d_out, d_env, v)
    ops = v.reshape(d_out, d_env, d_in)  # ops[a, k, b] = <a k|V|b>
    env_kraus = ops  # complement Kraus: B_a[k, b]
    out_kraus = np.transpose(ops, (1, 0, 2))  # channel Kraus: A_k[a, b]
    if channel is None:
        channel = minimize(Channel(d_in, d_out, out_kraus), tol)
    comp = minimize(Channel(d_in, d_env, env_kraus), tol)
    return ComplementaryPair(channel, comp, iso)


def complement(ch: Channel, tol: ToleranceConfig = DEFAULT_TOL) -> ComplementaryPair:
    """Canonical minimal complementary pair for ``ch``.

    The environment is the span of a minimal Kraus set, so ``d_env`` equals the
    Choi rank. The channel itself is kept exactly as supplied.
    """
    ops = minimize(ch, tol).kraus
    k = ops.shape[0]
    iso = StinespringIsometry(ch.d_in, ch.d_out, k, isometry_from_kraus(ops))
    comp = minimize(Channel(ch.d_in, k, complement_kraus(ops)), tol)
    return ComplementaryPair(ch, comp, iso)


def complement_entries(ch: Channel, x) -> np.ndarray:
    """Kraus-free complement ``[Phi_c(X)]_ij = Tr(A_j^dagger A_i X)`` over the given Kraus set."""
    x = as_matrix(x)
    a = ch.kraus
    return np.einsum("jab,iac,cb->ij", a.conj(), a, x, optimize=True)


# ---------------------------------------------------------------------------
# tensor powers
# ---------------------------------------------------------------------------

def tensor_power(ch: Channel, n: int) -> Channel:
    if n == 1:
        return ch
    if n != 2:
        raise UnsupportedError(f"tensor powers are limited to n <= 2, got n={n}")
    if (ch.d_in * ch.d_out) ** n > MAX_TENSOR_DIM:
        raise UnsupportedError(
            f"tensor power exceeds the size budget ({(ch.d_in * ch.d_out) ** n} > {MAX_TENSOR_DIM})"
        )
    ops = np.asarray([np.kron(a, b) for a in ch.kraus for b in ch.kraus])
    return Channel(ch.d_in ** 2, ch.d_out ** 2, ops)


def tensor_pair(pair: ComplementaryPair, n: int = 2, tol: ToleranceConfig = DEFAULT_TOL) -> ComplementaryPair:
    if n == 1:
        return pair
    return complement(tensor_power(pair.channel, n), tol)


def identity_channel(d: int) -> Channel:
    return Channel(d, d, np.eye(d, dtype=complex)[None])


def trace_out_check(pair: ComplementaryPair, x) -> tuple[np.ndarray, np.ndarray]:
    """Outputs of the dilation with the environment and output traced out, respectively."""
    iso = pair.isometry
    big = iso.dilate(as_matrix(x))
    return (partial_trace(big, "first", iso.d_out, iso.d_env),
            partial_trace(big, "second", iso.d_out, iso.d_env))
