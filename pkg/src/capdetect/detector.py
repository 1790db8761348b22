"""Kernel-projector detection of positive quantum capacity.

For a pure probe ``psi`` the operator

    D(psi) = Phi^*(K) - Phi_c^*(K_c)

on the input space, with ``K`` and ``K_c`` the kernel projectors of the two
outputs, decides both directions at once: a positive eigenvalue certifies
that the channel has positive single-shot coherent information, a negative
one certifies the same for the complement. The eigenvector projectors are
the witness states.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .channels import (
    ComplementaryPair,
    adjoint_apply,
    apply_map,
    minimal_env_dim,
    minimal_out_dim,
    tensor_pair,
)
from .numerics import (
    DEFAULT_TOL,
    Projector,
    ToleranceConfig,
    ValidationError,
    as_density_matrix,
    as_pure_state,
    haar_state,
    maximally_mixed,
    projector_onto,
    spectral_split,
)
from .zoo import FamilySpec, ProbeState, basis_states, canonical_witness_states, dedupe, uniform_state


class Verdict(str, enum.Enum):
    POSITIVE_Q = "POSITIVE_Q"
    POSITIVE_Q_COMPLEMENT = "POSITIVE_Q_COMPLEMENT"
    BOTH_POSITIVE = "BOTH_POSITIVE"
    UNDETECTED = "UNDETECTED"


class Rule(str, enum.Enum):
    DIM_RULE_OUT = "dim_rule_out"
    DIM_RULE_ENV = "dim_rule_env"
    DIM_RULE_INPUT = "dim_rule_input"
    MAX_RANK_RULE = "max_rank_rule"
    TRACE_TEST = "trace_test"
    OPERATOR_INEQUALITY = "operator_inequality"
    NONE = "none"


RULE_ORDER = (
    Rule.DIM_RULE_OUT,
    Rule.DIM_RULE_ENV,
    Rule.DIM_RULE_INPUT,
    Rule.MAX_RANK_RULE,
    Rule.TRACE_TEST,
    Rule.OPERATOR_INEQUALITY,
)

CERTIFIED = "certified"
INCONCLUSIVE_GAP = "INCONCLUSIVE_GAP"
NO_GAP = "no_gap"
UNRELIABLE = "unreliable"

UNSTABLE_FACTOR = 10.0
RETRY_RTOL_FACTOR = 1e-2


@dataclass(frozen=True, eq=False)
class ProbeResult:
    label: str
    psi: np.ndarray
    out_rank: int
    env_rank: int
    lambda_max: float
    lambda_min: float
    trace_fwd: float
    trace_rev: float
    witness_sigma_fwd: Optional[np.ndarray]
    witness_sigma_rev: Optional[np.ndarray]
    status: str
    unstable: bool = False
    detection_gap: float = DEFAULT_TOL.detection_gap

    @property
    def reliable(self) -> bool:
        return self.status != UNRELIABLE

    @property
    def certifies_fwd(self) -> bool:
        return self.reliable and self.lambda_max > self.detection_gap

    @property
    def certifies_rev(self) -> bool:
        return self.reliable and -self.lambda_min > self.detection_gap

    @property
    def reference_gap(self) -> float:
        """``Tr(K Phi(sigma)) - Tr(K_c Phi_c(sigma))`` at the reference ``sigma``."""
        return self.trace_fwd - self.trace_rev


@dataclass(frozen=True)
class RuleHit:
    rule: Rule
    direction: str  # "fwd" (channel) or "rev" (complement)


@dataclass(eq=False)
class DetectionReport:
    verdict: Verdict
    rule_fired: Rule
    probes: List[ProbeResult]
    implications: List[str]
    d_in: int
    d_out_min: int
    d_env_min: int
    max_rank_found: int
    rules_fired: List[Rule] = field(default_factory=list)
    fwd_probe: Optional[int] = None
    rev_probe: Optional[int] = None
    family: Optional[FamilySpec] = None
    n_copies: int = 1

    @property
    def best_gap_fwd(self) -> float:
        vals = [p.lambda_max for p in self.probes if p.reliable]
        return max(vals) if vals else 0.0

    @property
    def best_gap_rev(self) -> float:
        vals = [-p.lambda_min for p in self.probes if p.reliable]
        return max(vals) if vals else 0.0

    @property
    def witness_probe(self) -> Optional[ProbeResult]:
        if self.verdict in (Verdict.POSITIVE_Q, Verdict.BOTH_POSITIVE) and self.fwd_probe is not None:
            return self.probes[self.fwd_probe]
        if self.rev_probe is not None:
            return self.probes[self.rev_probe]
        return None

    @property
    def witness_psi_label(self) -> str:
        p = self.witness_probe
        return p.label if p is not None else ""

    @property
    def message(self) -> str:
        if self.verdict is Verdict.UNDETECTED:
            return "no positivity certificate found"
        return f"certificate via {self.rule_fired.value}"


# ---------------------------------------------------------------------------
# single probe
# ---------------------------------------------------------------------------

def _near_threshold(w: np.ndarray, cut: float) -> bool:
    return bool(np.any((w > cut / UNSTABLE_FACTOR) & (w <= cut * UNSTABLE_FACTOR)))


def _kernels(out: np.ndarray, env: np.ndarray, tol: ToleranceConfig):
    w1, cut1, k1, r1 = spectral_split(out, tol)
    w2, cut2, k2, r2 = spectral_split(env, tol)
    unstable = _near_threshold(w1, cut1) or _near_threshold(w2, cut2)
    return k1, r1, k2, r2, unstable


def _extreme_witness(vec: np.ndarray) -> np.ndarray:
    return projector_onto(vec)


def probe(pair: ComplementaryPair, psi, tol: ToleranceConfig = DEFAULT_TOL, sigma=None,
          label: str = "psi") -> ProbeResult:
    """Spectral test of one pure input state.

    ``trace_fwd`` and ``trace_rev`` are evaluated at the reference state
    ``sigma`` (the maximally mixed state unless given).
    """
    psi = as_pure_state(psi)
    if psi.size != pair.d_in:
        raise ValidationError(f"probe has dimension {psi.size}, channel expects {pair.d_in}")
    rho = projector_onto(psi)
    out = apply_map(pair.channel, rho)
    env = apply_map(pair.complement, rho)
    out = 0.5 * (out + out.conj().T)
    env = 0.5 * (env + env.conj().T)

    k, r, kc, rc, unstable = _kernels(out, env, tol)
    status = None
    if unstable:
        tight = tol.with_(rank_rtol=tol.rank_rtol * RETRY_RTOL_FACTOR)
        k2, _, kc2, _, _ = _kernels(out, env, tight)
        if k2.rank != k.rank or kc2.rank != kc.rank:
            status = UNRELIABLE

    D = adjoint_apply(pair.channel, k.matrix) - adjoint_apply(pair.complement, kc.matrix)
    D = 0.5 * (D + D.conj().T)
    w, v = np.linalg.eigh(D)
    lmin, lmax = float(w[0]), float(w[-1])

    sig = maximally_mixed(pair.d_in) if sigma is None else as_density_matrix(sigma)
    if sig.shape[0] != pair.d_in:
        raise ValidationError("reference state has the wrong dimension")
    t_fwd = float(np.real(np.trace(k.matrix @ apply_map(pair.channel, sig))))
    t_rev = float(np.real(np.trace(kc.matrix @ apply_map(pair.complement, sig))))

    gap = tol.detection_gap
    if status is None:
        if lmax > gap or -lmin > gap:
            status = CERTIFIED
        elif lmax > 0 or lmin < 0:
            status = INCONCLUSIVE_GAP if max(lmax, -lmin) > tol.rank_atol else NO_GAP
        else:
            status = NO_GAP
    return ProbeResult(
        label=label,
        psi=psi,
        out_rank=r.rank,
        env_rank=rc.rank,
        lambda_max=lmax,
        lambda_min=lmin,
        trace_fwd=t_fwd,
        trace_rev=t_rev,
        witness_sigma_fwd=_extreme_witness(v[:, -1]) if lmax > 0 else None,
        witness_sigma_rev=_extreme_witness(v[:, 0]) if lmin < 0 else None,
        status=status,
        unstable=unstable,
        detection_gap=gap,
    )


def detection_operator(pair: ComplementaryPair, psi, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """``Phi^*(K) - Phi_c^*(K_c)`` for the pure state ``psi``."""
    rho = projector_onto(as_pure_state(psi))
    k = spectral_split(apply_map(pair.channel, rho), tol)[2]
    kc = spectral_split(apply_map(pair.complement, rho), tol)[2]
    return adjoint_apply(pair.channel, k.matrix) - adjoint_apply(pair.complement, kc.matrix)


def operator_inequality_violation(pair: ComplementaryPair, psi, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Largest eigenvalue of ``Phi_c^*(R_c) - Phi^*(R)``; positive means the inequality fails."""
    rho = projector_onto(as_pure_state(psi))
    r = spectral_split(apply_map(pair.channel, rho), tol)[3]
    rc = spectral_split(apply_map(pair.complement, rho), tol)[3]
    m = adjoint_apply(pair.complement, rc.matrix) - adjoint_apply(pair.channel, r.matrix)
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[-1])


def witness_gap(pair: ComplementaryPair, psi, sigma, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """``Tr(K Phi(sigma)) - Tr(K_c Phi_c(sigma))`` recomputed from scratch."""
    rho = projector_onto(as_pure_state(psi))
    k = spectral_split(apply_map(pair.channel, rho), tol)[2]
    kc = spectral_split(apply_map(pair.complement, rho), tol)[2]
    sigma = np.asarray(sigma, dtype=complex)
    return float(np.real(np.trace(k.matrix @ apply_map(pair.channel, sigma))
                         - np.trace(kc.matrix @ apply_map(pair.complement, sigma))))


# ---------------------------------------------------------------------------
# dimension rules
# ---------------------------------------------------------------------------

def dimension_rules(d_in: int, d_out: int, d_env: int, max_rank_found: int = 0) -> List[RuleHit]:
    """Integer dimension criteria, in precedence order."""
    hits: List[RuleHit] = []
    if d_out > d_env and d_out > d_in * (d_env - 1):
        hits.append(RuleHit(Rule.DIM_RULE_OUT, "fwd"))
    if d_env > d_out and d_env > d_in * (d_out - 1):
        hits.append(RuleHit(Rule.DIM_RULE_ENV, "rev"))
    if d_out > d_env and d_in > d_out * (d_env - 1):
        hits.append(RuleHit(Rule.DIM_RULE_INPUT, "fwd"))
    if d_env > d_out and d_in > d_env * (d_out - 1):
        hits.append(RuleHit(Rule.DIM_RULE_INPUT, "rev"))
    if d_out != d_env and max_rank_found == min(d_out, d_env):
        hits.append(RuleHit(Rule.MAX_RANK_RULE, "fwd" if d_out > d_env else "rev"))
    return hits


def pair_dimension_rules(pair: ComplementaryPair, max_rank_found: int,
                         tol: ToleranceConfig = DEFAULT_TOL) -> List[RuleHit]:
    return dimension_rules(pair.d_in, minimal_out_dim(pair.channel, tol),
                           minimal_env_dim(pair.channel, tol), max_rank_found)


def verdict_from(fwd: bool, rev: bool) -> Verdict:
    if fwd and rev:
        return Verdict.BOTH_POSITIVE
    if fwd:
        return Verdict.POSITIVE_Q
    if rev:
        return Verdict.POSITIVE_Q_COMPLEMENT
    return Verdict.UNDETECTED


# ---------------------------------------------------------------------------
# probe lists
# ---------------------------------------------------------------------------

def haar_probes(d: int, count: int, seed: int, start: int = 0) -> List[ProbeState]:
    """Haar-random states; probe ``k`` uses its own generator seeded by ``(seed, k)``."""
    return [ProbeState(f"haar[{k}]", haar_state(d, np.random.default_rng([seed, k])))
            for k in range(start, start + count)]


def default_probes(d: int, tol: ToleranceConfig = DEFAULT_TOL,
                   family: Optional[FamilySpec] = None) -> List[ProbeState]:
    """Canonical witnesses, basis states, the uniform state, then Haar samples."""
    head = canonical_witness_states(family) if family is not None else basis_states(d) + [uniform_state(d)]
    return dedupe(head) + haar_probes(d, tol.haar_samples, tol.rng_seed)


def maximally_entangled(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def two_copy_probes(d: int, count: int, seed: int,
                    family: Optional[FamilySpec] = None) -> List[ProbeState]:
    """Probe states on ``C^d (x) C^d``: entangled and product states first, then Haar samples."""
    single = canonical_witness_states(family) if family is not None else basis_states(d) + [uniform_state(d)]
    single = dedupe(single)
    states = [ProbeState("max_entangled", maximally_entangled(d))]
    states += [ProbeState(f"{s.label}*{s.label}", np.kron(s.vector, s.vector)) for s in single]
    states += [ProbeState(f"{a.label}*{b.label}", np.kron(a.vector, b.vector))
               for a in single for b in single if a is not b]
    states = dedupe(states)
    return states[:count] + haar_probes(d * d, max(0, count - len(states)), seed)


# ---------------------------------------------------------------------------
# search and reports
# ---------------------------------------------------------------------------

def _run_probes(pair, probes, tol):
    out = []
    for s in probes:
        if isinstance(s, ProbeState):
            out.append(probe(pair, s.vector, tol, label=s.label))
        else:
            out.append(probe(pair, s, tol, label=f"probe[{len(out)}]"))
    return out


def search(pair: ComplementaryPair, probes: Sequence, tol: ToleranceConfig = DEFAULT_TOL,
           family: Optional[FamilySpec] = None, n_copies: int = 1) -> DetectionReport:
    """Run the dimension rules and every probe, then assemble the verdict."""
    if len(probes) == 0:
        raise ValidationError("search needs at least one probe state")
    d_out = minimal_out_dim(pair.channel, tol)
    d_env = minimal_env_dim(pair.channel, tol)
    results = _run_probes(pair, probes, tol)
    reliable = [p for p in results if p.reliable]
    max_rank = max((p.out_rank for p in reliable), default=0)

    hits = dimension_rules(pair.d_in, d_out, d_env, max_rank)
    fwd_probe = next((i for i, p in enumerate(results) if p.certifies_fwd), None)
    rev_probe = next((i for i, p in enumerate(results) if p.certifies_rev), None)
    gap = tol.detection_gap
    for i, p in enumerate(results):
        if p.certifies_fwd:
            rule = Rule.TRACE_TEST if p.reference_gap > gap else Rule.OPERATOR_INEQUALITY
            hits.append(RuleHit(rule, "fwd"))
        if p.certifies_rev:
            rule = Rule.TRACE_TEST if -p.reference_gap > gap else Rule.OPERATOR_INEQUALITY
            hits.append(RuleHit(rule, "rev"))

    # prefer a probe certified at the reference state as the cited witness
    for i, p in enumerate(results):
        if p.certifies_fwd and p.reference_gap > gap:
            fwd_probe = i
            break
    for i, p in enumerate(results):
        if p.certifies_rev and -p.reference_gap > gap:
            rev_probe = i
            break

    fwd = any(h.direction == "fwd" for h in hits)
    rev = any(h.direction == "rev" for h in hits)
    verdict = verdict_from(fwd, rev)
    fired = sorted({h.rule for h in hits}, key=RULE_ORDER.index)
    report = DetectionReport(
        verdict=verdict,
        rule_fired=fired[0] if fired else Rule.NONE,
        probes=results,
        implications=[],
        d_in=pair.d_in,
        d_out_min=d_out,
        d_env_min=d_env,
        max_rank_found=max_rank,
        rules_fired=fired,
        fwd_probe=fwd_probe,
        rev_probe=rev_probe,
        family=family,
        n_copies=n_copies,
    )
    report.implications = implications(report)
    return report


def detect(pair: ComplementaryPair, tol: ToleranceConfig = DEFAULT_TOL,
           family: Optional[FamilySpec] = None, probes: Optional[Sequence] = None) -> DetectionReport:
    if probes is None:
        probes = default_probes(pair.d_in, tol, family)
    return search(pair, probes, tol, family)


def nshot_probe(pair: ComplementaryPair, psi, tol: ToleranceConfig = DEFAULT_TOL,
                label: str = "psi", two_copy: Optional[ComplementaryPair] = None) -> ProbeResult:
    """Probe the two-copy channel with a state on ``C^d (x) C^d``."""
    big = two_copy if two_copy is not None else tensor_pair(pair, 2, tol)
    return probe(big, psi, tol, label=label)


def nshot_search(pair: ComplementaryPair, tol: ToleranceConfig = DEFAULT_TOL, count: int = 50,
                 family: Optional[FamilySpec] = None) -> DetectionReport:
    big = tensor_pair(pair, 2, tol)
    probes = two_copy_probes(pair.d_in, count, tol.rng_seed, family)
    return search(big, probes, tol, family, n_copies=2)


FWD_IMPLICATIONS = ("not anti-degradable", "not transpose anti-degradable")
REV_IMPLICATIONS = ("not more capable", "not degradable", "not transpose degradable")


def implications(report: DetectionReport, pair: Optional[ComplementaryPair] = None) -> List[str]:
    """Structural consequences of a verdict for the channel."""
    out: List[str] = []
    if report.verdict in (Verdict.POSITIVE_Q_COMPLEMENT, Verdict.BOTH_POSITIVE):
        out.extend(REV_IMPLICATIONS)
    if report.verdict in (Verdict.POSITIVE_Q, Verdict.BOTH_POSITIVE):
        out.extend(FWD_IMPLICATIONS)
    # structure theorems for more capable channels, used contrapositively
    more_capable_excluded = "not more capable" in out
    if not more_capable_excluded:
        d_in, d_out, d_env = report.d_in, report.d_out_min, report.d_env_min
        if report.max_rank_found == d_out and d_out != d_env:
            out.append("not more capable (full-rank pure output with unequal minimal dimensions)")
        elif d_out == 2 and (d_env > 2 or d_in > 3):
            out.append("not more capable (minimal output dimension 2 with d_env > 2 or d > 3)")
    return out
