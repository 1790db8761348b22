import numpy as np
import pytest

from capdetect.channels import Channel, ComplementaryPair, complement, identity_channel
from capdetect.detector import (
    CERTIFIED,
    NO_GAP,
    Rule,
    Verdict,
    default_probes,
    detect,
    detection_operator,
    dimension_rules,
    haar_probes,
    implications,
    maximally_entangled,
    nshot_probe,
    nshot_search,
    operator_inequality_violation,
    probe,
    search,
    two_copy_probes,
    witness_gap,
)
from capdetect.numerics import (
    DEFAULT_TOL,
    ValidationError,
    haar_state,
    haar_unitary,
    ket,
    maximally_mixed,
    projector_onto,
    random_density_matrix,
)
from capdetect.zoo import (
    FamilySpec,
    family_pair,
    make_dephasing,
    make_werner_holevo,
    random_correlation_matrix,
)

from conftest import random_pair


def test_identity_probe():
    pair = complement(identity_channel(2))
    r = probe(pair, ket(0, 2))
    assert r.out_rank == 1 and r.env_rank == 1
    D = detection_operator(pair, ket(0, 2))
    assert np.allclose(D, np.diag([0.0, 1.0]), atol=1e-12)
    assert r.lambda_max == pytest.approx(1.0)
    assert r.certifies_fwd and not r.certifies_rev
    assert np.allclose(r.witness_sigma_fwd, np.diag([0.0, 1.0]))
    assert r.status == CERTIFIED


@pytest.mark.parametrize("d", [4, 5, 6])
def test_werner_holevo_traces(d):
    pair = complement(make_werner_holevo(d))
    r = probe(pair, ket(0, d), sigma=maximally_mixed(d))
    assert r.trace_fwd == pytest.approx(1 / d, abs=1e-9)
    assert r.trace_rev == pytest.approx((d - 2) / d, abs=1e-9)
    assert r.lambda_min < -DEFAULT_TOL.detection_gap
    assert r.certifies_rev


def test_werner_holevo_three_balanced():
    pair = complement(make_werner_holevo(3))
    r = probe(pair, ket(0, 3))
    assert abs(r.trace_fwd - r.trace_rev) < 1e-9
    assert not r.certifies_fwd and not r.certifies_rev


def test_probe_rejects_dimension():
    pair = complement(identity_channel(2))
    with pytest.raises(ValidationError):
        probe(pair, ket(0, 3))


def test_dimension_rules_examples():
    hits = dimension_rules(3, 3, 9)
    assert (Rule.DIM_RULE_ENV, "rev") in {(h.rule, h.direction) for h in hits}
    hits = dimension_rules(3, 3, 1)
    assert hits[0].rule == Rule.DIM_RULE_OUT and hits[0].direction == "fwd"
    # Werner-Holevo d=4: pure outputs have rank 3 < min(4, 6)
    assert all(h.rule != Rule.MAX_RANK_RULE for h in dimension_rules(4, 4, 6, 3))
    hit = dimension_rules(4, 4, 6, 4)
    assert (Rule.MAX_RANK_RULE, "rev") in {(h.rule, h.direction) for h in hit}
    assert dimension_rules(2, 2, 2, 2) == []
    hits = dimension_rules(7, 2, 3)
    assert (Rule.DIM_RULE_INPUT, "rev") in {(h.rule, h.direction) for h in hits}


def test_search_verdicts():
    rep = detect(complement(identity_channel(3)))
    assert rep.verdict == Verdict.POSITIVE_Q
    assert rep.rule_fired == Rule.DIM_RULE_OUT
    assert "not anti-degradable" in rep.implications

    spec = FamilySpec("werner_holevo", 4)
    rep = detect(family_pair(spec), family=spec)
    assert rep.verdict == Verdict.POSITIVE_Q_COMPLEMENT
    assert rep.rule_fired == Rule.TRACE_TEST
    assert rep.witness_psi_label == "ket0"
    assert "not degradable" in rep.implications

    rep = detect(complement(make_dephasing(3, np.eye(3))))
    assert rep.verdict == Verdict.UNDETECTED
    assert rep.rule_fired == Rule.NONE
    assert rep.message == "no positivity certificate found"


def test_search_needs_probes():
    with pytest.raises(ValidationError):
        search(complement(identity_channel(2)), [])


def test_dephasing_operator_inequality(rng):
    B = random_correlation_matrix(3, rng)
    pair = complement(make_dephasing(3, B))
    r = probe(pair, ket(0, 3))
    assert r.certifies_fwd
    assert operator_inequality_violation(pair, ket(0, 3)) > 0
    assert detect(pair).verdict == Verdict.POSITIVE_Q


def test_unitary_dilation_both():
    spec = FamilySpec("unitary_dilation", 2, {"seed": 7})
    rep = detect(family_pair(spec), family=spec)
    assert rep.verdict == Verdict.BOTH_POSITIVE
    assert set(implications(rep)) >= {"not degradable", "not anti-degradable"}


def test_certificate_soundness(rng):
    for _ in range(10):
        pair = random_pair(3, 3, 2, rng)
        rep = detect(pair, DEFAULT_TOL.with_(haar_samples=20))
        for p in rep.probes:
            if p.certifies_fwd:
                assert witness_gap(pair, p.psi, p.witness_sigma_fwd) > DEFAULT_TOL.detection_gap
            if p.certifies_rev:
                assert -witness_gap(pair, p.psi, p.witness_sigma_rev) > DEFAULT_TOL.detection_gap


def test_lambda_max_is_max_over_states(rng):
    pair = random_pair(3, 2, 3, rng)
    psi = haar_state(3, rng)
    r = probe(pair, psi)
    D = detection_operator(pair, psi)
    samples = [np.real(np.trace(random_density_matrix(3, rng) @ D)) for _ in range(500)]
    assert max(samples) <= r.lambda_max + 1e-6
    assert min(samples) >= r.lambda_min - 1e-6
    if r.witness_sigma_fwd is not None:
        assert np.real(np.trace(r.witness_sigma_fwd @ D)) == pytest.approx(r.lambda_max, abs=1e-9)


def test_isometry_invariance(rng):
    pair = random_pair(3, 3, 2, rng)
    w = haar_unitary(5, rng)[:, : pair.d_env]
    comp = Channel(pair.d_in, 5, np.asarray([w @ b for b in pair.complement.kraus]))
    twisted = ComplementaryPair(pair.channel, comp, pair.isometry)
    for _ in range(5):
        psi = haar_state(3, rng)
        a, b = probe(pair, psi), probe(twisted, psi)
        assert abs(a.lambda_max - b.lambda_max) < 1e-8
        assert abs(a.lambda_min - b.lambda_min) < 1e-8
        assert abs(a.reference_gap - b.reference_gap) < 1e-8


def test_probe_lists_deterministic():
    a = haar_probes(3, 4, seed=5)
    b = haar_probes(3, 2, seed=5, start=2)
    assert np.allclose(a[2].vector, b[0].vector)
    tol = DEFAULT_TOL.with_(haar_samples=3)
    labels = [p.label for p in default_probes(2, tol)]
    assert labels == ["basis[0]", "basis[1]", "uniform", "haar[0]", "haar[1]", "haar[2]"]
    probes = two_copy_probes(2, 10, seed=0)
    assert probes[0].label == "max_entangled"
    assert np.allclose(probes[0].vector, maximally_entangled(2))
    assert len(probes) == 10


def test_nshot():
    pair = complement(identity_channel(2))
    r = nshot_probe(pair, maximally_entangled(2))
    assert r.certifies_fwd
    assert nshot_search(pair, count=10).verdict == Verdict.POSITIVE_Q
    deph = complement(make_dephasing(2, np.eye(2)))
    rep = nshot_search(deph, count=50)
    assert rep.verdict == Verdict.UNDETECTED
    assert rep.n_copies == 2


def test_two_copy_product_gap(rng):
    pair = random_pair(2, 2, 2, rng)
    psi = haar_state(2, rng)
    single = probe(pair, psi)
    double = nshot_probe(pair, np.kron(psi, psi))
    assert double.lambda_max >= single.lambda_max - 1e-9


def test_undetected_probe_status():
    pair = complement(make_dephasing(2, np.eye(2)))
    r = probe(pair, ket(0, 2))
    assert r.status == NO_GAP


def test_verdict_soundness_invariant(rng):
    for _ in range(5):
        pair = random_pair(2, 3, 2, rng)
        rep = detect(pair, DEFAULT_TOL.with_(haar_samples=10))
        if rep.verdict != Verdict.UNDETECTED:
            gaps = any(p.certifies_fwd or p.certifies_rev for p in rep.probes)
            dims = bool(dimension_rules(rep.d_in, rep.d_out_min, rep.d_env_min, rep.max_rank_found))
            assert gaps or dims


def test_amplitude_damping_never_channel_positive():
    for g in (0.5, 0.7, 0.9):
        k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]])
        k1 = np.array([[0, np.sqrt(g)], [0, 0]])
        pair = complement(Channel(2, 2, np.array([k0, k1])))
        rep = detect(pair)
        assert rep.verdict not in (Verdict.POSITIVE_Q, Verdict.BOTH_POSITIVE)
        assert not any(p.certifies_fwd for p in rep.probes)


def test_reference_state_sigma():
    pair = complement(make_werner_holevo(4))
    sigma = projector_onto(ket(1, 4))
    r = probe(pair, ket(0, 4), sigma=sigma)
    # Phi(|1><1|) = (1 - |1><1|)/3 on the kernel |0><0|; the complement trace
    # averages to 1/2 over the basis and vanishes at |0>, so 2/3 elsewhere
    assert r.trace_fwd == pytest.approx(1 / 3, abs=1e-9)
    assert r.trace_rev == pytest.approx(2 / 3, abs=1e-9)
