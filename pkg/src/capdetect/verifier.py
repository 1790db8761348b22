"""Numerical cross-checks for detections.

* coherent-information sweeps along ``rho(eps) = (1-eps) psi psi^dagger + eps sigma``,
  whose derivative diverges like ``gap * log2(1/eps)``;
* first-order eigenvalue perturbation of the output kernel block;
* sampled maximal rank of a matrix subspace against the Flanders bound.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .channels import ComplementaryPair, apply_map
from .numerics import (
    DEFAULT_TOL,
    ToleranceConfig,
    ValidationError,
    as_density_matrix,
    as_matrix,
    as_pure_state,
    numerical_rank,
    projector_onto,
    spectral_split,
    unvec,
    von_neumann_entropy,
)

DIRECTIONS = ("channel", "complement")
SLOPE_FLOOR = 1e-9
PERTURBATION_STEP = 1e-6


def _maps(pair: ComplementaryPair, direction: str):
    if direction == "channel":
        return pair.channel, pair.complement
    if direction == "complement":
        return pair.complement, pair.channel
    raise ValidationError(f"direction must be one of {DIRECTIONS}, not {direction!r}")


def _output(ch, rho) -> np.ndarray:
    out = apply_map(ch, rho)
    out = 0.5 * (out + out.conj().T)
    return out / np.real(np.trace(out))


def coherent_information(pair: ComplementaryPair, rho, direction: str = "channel") -> float:
    """``S(Phi(rho)) - S(Phi_c(rho))`` in bits (roles swapped for the complement)."""
    rho = as_density_matrix(rho)
    if rho.shape[0] != pair.d_in:
        raise ValidationError(f"state has dimension {rho.shape[0]}, channel expects {pair.d_in}")
    a, b = _maps(pair, direction)
    return von_neumann_entropy(_output(a, rho)) - von_neumann_entropy(_output(b, rho))


def _ic_line(pair, psi_proj, sigma, eps, direction):
    a, b = _maps(pair, direction)
    rho = (1 - eps) * psi_proj + eps * sigma
    return von_neumann_entropy(_output(a, rho)) - von_neumann_entropy(_output(b, rho))


def kernel_traces(pair: ComplementaryPair, psi, sigma, tol: ToleranceConfig = DEFAULT_TOL) -> Tuple[float, float]:
    """``(Tr(K Phi(sigma)), Tr(K_c Phi_c(sigma)))`` for the pure state ``psi``."""
    p = projector_onto(psi)
    k = spectral_split(apply_map(pair.channel, p), tol)[2]
    kc = spectral_split(apply_map(pair.complement, p), tol)[2]
    t1 = np.real(np.trace(k.matrix @ apply_map(pair.channel, sigma)))
    t2 = np.real(np.trace(kc.matrix @ apply_map(pair.complement, sigma)))
    return float(t1), float(t2)


@dataclass(frozen=True)
class SweepResult:
    eps_values: Tuple[float, ...]
    ic_values: Tuple[float, ...]
    best_eps: float
    best_ic: float
    slope_predicted: float
    slope_fitted: float
    anchor_ic: float
    direction: str = "channel"

    @property
    def positive(self) -> bool:
        return self.best_ic > 0


def fit_log_slope(eps: Sequence[float], derivs: Sequence[float]) -> Tuple[float, float]:
    """Least-squares ``(a, b)`` in ``deriv = a log2(1/eps) + b``."""
    x = np.log2(1.0 / np.asarray(eps, dtype=float))
    design = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(design, np.asarray(derivs, dtype=float), rcond=None)
    return float(a), float(b)


def sweep(pair: ComplementaryPair, psi, sigma, tol: ToleranceConfig = DEFAULT_TOL,
          direction: str = "channel") -> SweepResult:
    """Coherent information along the segment from ``psi`` towards ``sigma``."""
    psi = as_pure_state(psi)
    sigma = as_density_matrix(sigma)
    p = projector_onto(psi)
    eps = tuple(tol.eps_grid)
    ic = tuple(_ic_line(pair, p, sigma, e, direction) for e in eps)
    best = int(np.argmax(ic))

    t_fwd, t_rev = kernel_traces(pair, psi, sigma, tol)
    predicted = t_fwd - t_rev if direction == "channel" else t_rev - t_fwd

    small = sorted(eps)[:3]
    derivs = []
    for e in small:
        h = e / 10.0
        derivs.append((_ic_line(pair, p, sigma, e + h, direction)
                       - _ic_line(pair, p, sigma, e - h, direction)) / (2 * h))
    fitted, _ = fit_log_slope(small, derivs)
    return SweepResult(
        eps_values=eps,
        ic_values=ic,
        best_eps=eps[best],
        best_ic=ic[best],
        slope_predicted=predicted,
        slope_fitted=fitted,
        anchor_ic=_ic_line(pair, p, sigma, 0.0, direction),
        direction=direction,
    )


@dataclass(frozen=True)
class PerturbationCheck:
    predicted_slopes: Tuple[float, ...]
    fitted_slopes: Tuple[float, ...]
    max_rel_err: float
    block_trace: float = 0.0
    direction: str = "channel"

    @property
    def passed(self) -> bool:
        return (len(self.predicted_slopes) == len(self.fitted_slopes)
                and self.max_rel_err < 1e-3)


def perturbation_slopes(pair: ComplementaryPair, psi, sigma, direction: str = "channel",
                        tol: ToleranceConfig = DEFAULT_TOL, step: float = PERTURBATION_STEP) -> PerturbationCheck:
    """Compare first-order kernel eigenvalue slopes with finite differences.

    The predicted slopes are the eigenvalues of ``K Phi(sigma) K`` on the
    kernel of ``Phi(psi psi^dagger)``. The fitted ones come from the smallest
    eigenvalues of ``Phi(rho(h))`` with a Richardson-corrected quotient.
    """
    psi = as_pure_state(psi)
    sigma = as_density_matrix(sigma)
    ch, _ = _maps(pair, direction)
    p = projector_onto(psi)
    k = spectral_split(apply_map(ch, p), tol)[2]
    if k.rank == 0:
        return PerturbationCheck((), (), 0.0, 0.0, direction)

    out_sigma = apply_map(ch, sigma)
    block = k.basis.conj().T @ out_sigma @ k.basis
    block = 0.5 * (block + block.conj().T)
    lam = np.linalg.eigvalsh(block)
    predicted = np.sort(lam[lam > SLOPE_FLOOR])

    def low(eps):
        w = np.linalg.eigvalsh(_output(ch, (1 - eps) * p + eps * sigma))
        return w[: k.rank]

    fitted = 2 * low(step) / step - low(2 * step) / (2 * step)
    fitted = np.sort(fitted[fitted > SLOPE_FLOOR])

    if predicted.size != fitted.size:
        err = float("inf")
    elif predicted.size == 0:
        err = 0.0
    else:
        err = float(np.max(np.abs(fitted - predicted) / np.abs(predicted)))
    return PerturbationCheck(tuple(predicted.tolist()), tuple(fitted.tolist()), err,
                             float(np.sum(lam)), direction)


# ---------------------------------------------------------------------------
# matrix subspaces
# ---------------------------------------------------------------------------

def flanders_check(basis: Sequence, samples: int = 200, tol: ToleranceConfig = DEFAULT_TOL,
                   rng: np.random.Generator | None = None) -> Tuple[int, bool]:
    """Sampled maximal rank ``r`` of ``span(basis)`` and whether ``dim <= r max(d1, d2)``.

    Sampling can only underestimate ``r``, so a ``False`` here does not by
    itself refute the bound.
    """
    mats = [as_matrix(b) for b in basis]
    if not mats:
        raise ValidationError("basis must be nonempty")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ValidationError("basis matrices must share a shape")
    stack = np.asarray(mats)
    dim = len(mats)
    if numerical_rank(stack.reshape(dim, -1), tol) != dim:
        raise ValidationError("basis matrices are linearly dependent")
    rng = np.random.default_rng(tol.rng_seed) if rng is None else rng
    best = max(numerical_rank(m, tol) for m in mats)
    for _ in range(samples):
        c = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        best = max(best, numerical_rank(np.tensordot(c, stack, axes=1), tol))
        if best == min(shape):
            break
    return best, dim <= best * max(shape)


def stinespring_subspace(pair: ComplementaryPair) -> List[np.ndarray]:
    """``unvec(V|i>)`` as ``d_out x d_env`` matrices, one per input basis vector."""
    iso = pair.isometry
    return [unvec(iso.V[:, i], iso.d_out, iso.d_env) for i in range(iso.d_in)]
