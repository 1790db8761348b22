"""Constructors for the standard channel families and their probe states.

Every family is defined by its closed-form action; Kraus operators come from
the eigendecomposition of the resulting Choi matrix, so each constructor
returns a minimal Kraus set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Tuple

import numpy as np

from .channels import (
    Channel,
    ComplementaryPair,
    channel_from_action,
    channel_from_choi,
    choi,
    complement,
    pair_from_isometry,
)
from .numerics import (
    DEFAULT_TOL,
    ToleranceConfig,
    ValidationError,
    as_matrix,
    haar_unitary,
    ket,
)

ZERO_TOL = 1e-10
PARAM_SLACK = 1e-12

FAMILIES = (
    "depolarizing",
    "transpose_depolarizing",
    "werner_holevo",
    "pauli",
    "mad",
    "duc",
    "cduc",
    "dephasing",
    "unitary_dilation",
)


# ---------------------------------------------------------------------------
# depolarizing / transpose-depolarizing / Werner-Holevo
# ---------------------------------------------------------------------------

def depolarizing_range(d: int) -> Tuple[float, float]:
    return 0.0, d * d / (d * d - 1.0)


def transpose_depolarizing_range(d: int) -> Tuple[float, float]:
    return d / (d + 1.0), d / (d - 1.0)


def _check_range(name, value, lo, hi):
    if not (lo - PARAM_SLACK <= value <= hi + PARAM_SLACK):
        raise ValidationError(f"{name}={value!r} lies outside the CP range [{lo!r}, {hi!r}]")


def make_depolarizing(d: int, p: float, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    if d < 2:
        raise ValidationError("depolarizing channel needs d >= 2")
    _check_range("p", p, *depolarizing_range(d))

    def action(x):
        return (1 - p) * x + p * np.trace(x) * np.eye(d) / d

    return channel_from_action(action, d, d, tol)


def make_transpose_depolarizing(d: int, q: float, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    if d < 2:
        raise ValidationError("transpose-depolarizing channel needs d >= 2")
    _check_range("q", q, *transpose_depolarizing_range(d))

    def action(x):
        return (1 - q) * x.T + q * np.trace(x) * np.eye(d) / d

    return channel_from_action(action, d, d, tol)


def make_werner_holevo(d: int, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    if d < 2:
        raise ValidationError("Werner-Holevo channel needs d >= 2")

    def action(x):
        return (np.trace(x) * np.eye(d) - x.T) / (d - 1)

    return channel_from_action(action, d, d, tol)


# ---------------------------------------------------------------------------
# generalized Pauli
# ---------------------------------------------------------------------------

def shift_matrix(d: int) -> np.ndarray:
    """``X = sum_k |k+1><k|`` (indices mod d)."""
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def clock_matrix(d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def weyl_operator(d: int, i: int, j: int) -> np.ndarray:
    return np.linalg.matrix_power(shift_matrix(d), i) @ np.linalg.matrix_power(clock_matrix(d), j)


def _check_probability_matrix(P, d):
    P = np.asarray(P, dtype=float)
    if P.shape != (d, d):
        raise ValidationError(f"probability matrix must be {d}x{d}, got {P.shape}")
    if np.any(P < 0):
        i, j = np.argwhere(P < 0)[0]
        raise ValidationError(f"probability matrix has negative entry at ({i}, {j})")
    if abs(P.sum() - 1.0) > 1e-10:
        raise ValidationError(f"probability matrix sums to {P.sum()!r}")
    return P


def make_pauli(d: int, P) -> Channel:
    P = _check_probability_matrix(P, d)
    ops = [np.sqrt(P[i, j]) * weyl_operator(d, i, j)
           for i in range(d) for j in range(d) if P[i, j] > 0]
    return Channel(d, d, np.asarray(ops))


def pauli_hypotheses(P) -> Dict[str, bool]:
    """The support conditions under which the complement is known to have capacity.

    Row and column conditions are reported separately.
    """
    P = np.asarray(P, dtype=float)
    d = P.shape[0]
    nz = P > ZERO_TOL
    return {
        "enough_nonzeros": int(nz.sum()) >= d + 1,
        "every_row_nonzero": bool(np.all(nz.any(axis=1))),
        "every_column_nonzero": bool(np.all(nz.any(axis=0))),
    }


# ---------------------------------------------------------------------------
# multi-level amplitude damping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MadParams:
    """Decay rates ``gamma[(j, i)]`` for transitions from level ``j`` down to ``i < j``."""

    d: int
    gamma: Mapping[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        rates = {}
        for (j, i), g in dict(self.gamma).items():
            j, i, g = int(j), int(i), float(g)
            if not 0 <= i < j < self.d:
                raise ValidationError(f"invalid transition {j}->{i} for d={self.d}")
            if g < 0:
                raise ValidationError(f"decay rate {j}->{i} is negative ({g!r})")
            rates[(j, i)] = g
        for j in range(1, self.d):
            total = sum(rates.get((j, i), 0.0) for i in range(j))
            if total > 1 + PARAM_SLACK:
                raise ValidationError(f"decay rates out of level {j} sum to {total!r} > 1")
        object.__setattr__(self, "gamma", rates)

    def rate(self, j: int, i: int) -> float:
        return self.gamma.get((j, i), 0.0)

    def outflow(self, j: int) -> float:
        return sum(self.rate(j, i) for i in range(j))

    def inflow_sources(self, i: int) -> List[int]:
        return [k for k in range(i + 1, self.d) if self.rate(k, i) > ZERO_TOL]

    @classmethod
    def from_list(cls, d: int, entries) -> "MadParams":
        """Build from ``[{"from": j, "to": i, "rate": g}, ...]``."""
        return cls(d, {(int(e["from"]), int(e["to"])): float(e["rate"]) for e in entries})

    def to_list(self):
        return [{"from": j, "to": i, "rate": g} for (j, i), g in sorted(self.gamma.items())]


def mad_depleted_levels(gamma: MadParams) -> set:
    out = set()
    for j in range(1, gamma.d):
        if not gamma.inflow_sources(j) and abs(gamma.outflow(j) - 1.0) <= ZERO_TOL:
            out.add(j)
    return out


def mad_n1(gamma: MadParams) -> int:
    return gamma.d - len(mad_depleted_levels(gamma))


def mad_n2(gamma: MadParams) -> int:
    return sum(1 for g in gamma.gamma.values() if g > ZERO_TOL)


def mad_kraus(gamma: MadParams) -> np.ndarray:
    d = gamma.d
    a0 = np.zeros((d, d), dtype=complex)
    a0[0, 0] = 1.0
    for j in range(1, d):
        a0[j, j] = np.sqrt(max(0.0, 1.0 - gamma.outflow(j)))
    ops = [a0]
    for (j, i), g in sorted(gamma.gamma.items()):
        if g > 0:
            a = np.zeros((d, d), dtype=complex)
            a[i, j] = np.sqrt(g)
            ops.append(a)
    return np.asarray(ops)


def make_mad(d: int, gamma, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    if not isinstance(gamma, MadParams):
        gamma = MadParams(d, gamma)
    if gamma.d != d:
        raise ValidationError("MadParams dimension mismatch")
    return channel_from_choi(choi(Channel(d, d, mad_kraus(gamma))).J, d, d, tol)


def mad_hypotheses(gamma: MadParams) -> Dict[str, bool]:
    """Hypotheses of the two sufficient conditions for MAD channels."""
    n1, n2 = mad_n1(gamma), mad_n2(gamma)
    depleted = mad_depleted_levels(gamma)
    live = [j for j in range(gamma.d - 1) if j not in depleted]
    bullet1 = (1 + n2 > n1) and all(gamma.inflow_sources(j) for j in live)
    bullet2 = (1 + n2 < n1) and all(len(gamma.inflow_sources(j)) <= 1 for j in live)
    return {"complement_positive": bullet1, "channel_positive": bullet2}


# ---------------------------------------------------------------------------
# (conjugate) diagonal unitary covariant channels
# ---------------------------------------------------------------------------

def _ab(A, B):
    A = np.asarray(as_matrix(A))
    B = np.asarray(as_matrix(B))
    d = A.shape[0]
    if A.shape != (d, d) or B.shape != (d, d):
        raise ValidationError("A and B must be square matrices of equal size")
    if np.max(np.abs(A.imag)) > ZERO_TOL or np.any(A.real < -ZERO_TOL):
        i, j = np.argwhere((A.real < -ZERO_TOL) | (np.abs(A.imag) > ZERO_TOL))[0]
        raise ValidationError(f"A must be entrywise nonnegative; fails at ({i}, {j})")
    A = np.clip(A.real, 0.0, None)
    if np.max(np.abs(np.diag(A) - np.diag(B))) > ZERO_TOL:
        raise ValidationError("A and B must have equal diagonals")
    cols = A.sum(axis=0)
    if np.max(np.abs(cols - 1.0)) > 1e-9:
        j = int(np.argmax(np.abs(cols - 1.0)))
        raise ValidationError(f"column {j} of A sums to {cols[j]!r}; trace preservation needs 1")
    return A, B, d


def cduc_action(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=complex)
    off = B - np.diag(np.diag(B))

    def action(x):
        return np.diag(A @ np.diag(x)) + off * x

    return action


def duc_action(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=complex)
    off = B - np.diag(np.diag(B))

    def action(x):
        return np.diag(A @ np.diag(x)) + off * x.T

    return action


def make_cduc(A, B, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    """Conjugate-covariant family ``X -> diag(A diag X) + B~ (.) X``; CP iff ``B >= 0``."""
    A, B, d = _ab(A, B)
    if np.max(np.abs(B - B.conj().T)) > ZERO_TOL:
        raise ValidationError("B must be Hermitian")
    w = np.linalg.eigvalsh(0.5 * (B + B.conj().T))
    if w[0] < -1e-9 * max(1.0, w[-1]):
        raise ValidationError(f"B must be positive semidefinite (eigenvalue {w[0]:.3e})")
    return channel_from_action(cduc_action(A, B), d, d, tol)


def make_duc(A, B, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    """Covariant family ``X -> diag(A diag X) + B~ (.) X^T``; CP iff ``A_ij A_ji >= |B_ij|^2``."""
    A, B, d = _ab(A, B)
    if np.max(np.abs(B - B.conj().T)) > ZERO_TOL:
        raise ValidationError("B must be Hermitian")
    for i in range(d):
        for j in range(i + 1, d):
            if A[i, j] * A[j, i] < abs(B[i, j]) ** 2 - 1e-12:
                raise ValidationError(f"A_ij A_ji >= |B_ij|^2 fails at ({i}, {j})")
    return channel_from_action(duc_action(A, B), d, d, tol)


def _nz(x) -> bool:
    return abs(x) > ZERO_TOL


def cduc_min_dims(A, B) -> Tuple[int, int]:
    """Closed-form ``(d_out*, d_env*)`` of the conjugate-covariant channel."""
    A = np.asarray(A)
    B = np.asarray(B, dtype=complex)
    d = A.shape[0]
    out = int(sum(any(_nz(A[i, j]) for j in range(d)) for i in range(d)))
    s = np.linalg.svd(B, compute_uv=False)
    rank_b = int(np.sum(s > max(1e-9 * s[0], 1e-12))) if s.size and s[0] > 0 else 0
    env = rank_b + sum(1 for i in range(d) for j in range(d) if i != j and _nz(A[i, j]))
    return out, env


def duc_min_dims(A, B) -> Tuple[int, int]:
    """Closed-form ``(d_out*, d_env*)`` of the covariant (transposing) channel."""
    A = np.asarray(A)
    B = np.asarray(B, dtype=complex)
    d = A.shape[0]
    out = int(sum(any(_nz(A[i, j]) for j in range(d)) for i in range(d)))
    env = sum(1 for i in range(d) if _nz(A[i, i]))
    for i in range(d):
        for j in range(i + 1, d):
            block = np.array([[A[i, j], B[i, j]], [B[j, i], A[j, i]]], dtype=complex)
            s = np.linalg.svd(block, compute_uv=False)
            env += int(np.sum(s > max(1e-9 * s[0], 1e-12))) if s[0] > 0 else 0
    return out, env


def psi_transform(X, psi) -> np.ndarray:
    """Reweight a two-entries-per-row matrix by the amplitudes of ``psi``.

    Each row keeps its two nonzero positions ``(i1, i2)``; the entry at ``i1``
    is multiplied by ``psi[i2]`` and the entry at ``i2`` by ``psi[i1]``.
    """
    X = np.asarray(X, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    out = np.zeros_like(X)
    for i, row in enumerate(X):
        cols = np.flatnonzero(row != 0)
        if cols.size != 2:
            raise ValidationError(f"row {i} must have exactly two nonzero entries")
        a, b = cols
        out[i, a] = row[a] * psi[b]
        out[i, b] = row[b] * psi[a]
    return out


# ---------------------------------------------------------------------------
# dephasing
# ---------------------------------------------------------------------------

def make_dephasing(d: int, B, tol: ToleranceConfig = DEFAULT_TOL) -> Channel:
    B = as_matrix(B)
    if B.shape != (d, d):
        raise ValidationError(f"correlation matrix must be {d}x{d}")
    if np.max(np.abs(np.diag(B) - 1.0)) > ZERO_TOL:
        raise ValidationError("correlation matrix must have unit diagonal")
    if np.max(np.abs(B - B.conj().T)) > ZERO_TOL:
        raise ValidationError("correlation matrix must be Hermitian")
    w = np.linalg.eigvalsh(0.5 * (B + B.conj().T))
    if w[0] < -1e-9 * max(1.0, w[-1]):
        raise ValidationError(f"correlation matrix must be positive semidefinite (eigenvalue {w[0]:.3e})")
    return channel_from_action(lambda x: B * x, d, d, tol)


def random_correlation_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Gram matrix of ``d`` random unit vectors in ``C^rank``."""
    r = d if rank is None else rank
    vecs = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    b = vecs @ vecs.conj().T
    np.fill_diagonal(b, 1.0)
    return b


# ---------------------------------------------------------------------------
# unitary dilation
# ---------------------------------------------------------------------------

def make_unitary_dilation(d: int, V, tol: ToleranceConfig = DEFAULT_TOL) -> ComplementaryPair:
    """Pair ``(Tr_2 V.V^dagger, Tr_1 V.V^dagger)`` for a unitary on ``C^d (x) C^d``."""
    V = as_matrix(V)
    n = d * d
    if V.shape != (n, n):
        raise ValidationError(f"unitary must be {n}x{n}, got {V.shape}")
    err = max(float(np.max(np.abs(V.conj().T @ V - np.eye(n)))),
              float(np.max(np.abs(V @ V.conj().T - np.eye(n)))))
    if err > 1e-9:
        raise ValidationError(f"matrix is not unitary (violation {err:.3e})")
    return pair_from_isometry(V, d, d, tol)


# ---------------------------------------------------------------------------
# FamilySpec and probe states
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FamilySpec:
    """A named family, its dimension and parameter block.

    For ``unitary_dilation`` ``d`` is the factor dimension, so the channel acts
    on ``C^{d^2}``; the unitary is given as ``params["unitary"]`` or drawn
    Haar-randomly from ``params["seed"]``.
    """

    family: str
    d: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        fam = self.family.replace("-", "_")
        if fam not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if int(self.d) < 1:
            raise ValidationError("d must be positive")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def input_dim(self) -> int:
        return self.d * self.d if self.family == "unitary_dilation" else self.d


@dataclass(frozen=True, eq=False)
class ProbeState:
    label: str
    vector: np.ndarray


def basis_states(d: int) -> List[ProbeState]:
    return [ProbeState(f"basis[{i}]", ket(i, d)) for i in range(d)]


def uniform_state(d: int) -> ProbeState:
    return ProbeState("uniform", np.ones(d, dtype=complex) / np.sqrt(d))


def fourier_states(d: int) -> List[ProbeState]:
    w = np.exp(2j * np.pi / d)
    return [ProbeState(f"fourier[{k}]", w ** (k * np.arange(d)) / np.sqrt(d)) for k in range(d)]


def dedupe(states: List[ProbeState]) -> List[ProbeState]:
    """Drop states equal to an earlier one up to a global phase."""
    out: List[ProbeState] = []
    for s in states:
        if all(abs(abs(np.vdot(t.vector, s.vector)) - 1.0) > 1e-12 for t in out):
            out.append(s)
    return out


def dilation_unitary(spec: FamilySpec) -> np.ndarray:
    p = spec.params
    if "unitary" in p:
        return as_matrix(p["unitary"])
    return haar_unitary(spec.d * spec.d, np.random.default_rng(int(p.get("seed", 0))))


def canonical_witness_states(spec: FamilySpec) -> List[ProbeState]:
    """Family-specific probe states first, then the standard basis and the uniform state."""
    d = spec.input_dim
    fam = spec.family
    first: List[ProbeState] = []
    if fam == "werner_holevo":
        first = [ProbeState("ket0", ket(0, d))]
    elif fam == "pauli":
        first = basis_states(d) + fourier_states(d)
    elif fam in ("mad", "duc", "cduc"):
        first = [uniform_state(d)]
    elif fam == "dephasing":
        first = basis_states(d)
    elif fam == "unitary_dilation":
        n = spec.d
        V = dilation_unitary(spec)
        first = [ProbeState("V^dag|01>", V.conj().T @ np.kron(ket(0, n), ket(1 % n, n)))]
        first += [ProbeState(f"V^dag|{a}{b}>", V.conj().T @ np.kron(ket(a, n), ket(b, n)))
                  for a in range(n) for b in range(n)]
    return dedupe(first + basis_states(d) + [uniform_state(d)])


def build_family(spec: FamilySpec, tol: ToleranceConfig = DEFAULT_TOL):
    """Channel described by ``spec``; for unitary dilations the full pair."""
    fam, d, p = spec.family, spec.d, spec.params
    try:
        if fam == "depolarizing":
            return make_depolarizing(d, float(p["p"]), tol)
        if fam == "transpose_depolarizing":
            return make_transpose_depolarizing(d, float(p["q"]), tol)
        if fam == "werner_holevo":
            return make_werner_holevo(d, tol)
        if fam == "pauli":
            return make_pauli(d, np.asarray(p["P"], dtype=float).reshape(d, d))
        if fam == "mad":
            g = p.get("gamma", [])
            gamma = g if isinstance(g, MadParams) else MadParams.from_list(d, g)
            return make_mad(d, gamma, tol)
        if fam == "duc":
            return make_duc(p["A"], p["B"], tol)
        if fam == "cduc":
            return make_cduc(p["A"], p["B"], tol)
        if fam == "dephasing":
            return make_dephasing(d, p["B"], tol)
        if fam == "unitary_dilation":
            return make_unitary_dilation(d, dilation_unitary(spec), tol)
    except KeyError as exc:
        raise ValidationError(f"family {fam!r} is missing parameter {exc.args[0]!r}") from None
    raise ValidationError(f"unknown family {fam!r}")  # pragma: no cover


def family_pair(spec: FamilySpec, tol: ToleranceConfig = DEFAULT_TOL) -> ComplementaryPair:
    built = build_family(spec, tol)
    return built if isinstance(built, ComplementaryPair) else complement(built, tol)
