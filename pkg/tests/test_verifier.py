import numpy as np
import pytest

from capdetect.channels import Channel, complement, identity_channel
from capdetect.detector import detect
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
from capdetect.verifier import (
    coherent_information,
    fit_log_slope,
    flanders_check,
    kernel_traces,
    perturbation_slopes,
    stinespring_subspace,
    sweep,
)
from capdetect.zoo import make_dephasing, make_unitary_dilation, make_werner_holevo

from conftest import random_pair


def amplitude_damping(g):
    k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]])
    k1 = np.array([[0, np.sqrt(g)], [0, 0]])
    return Channel(2, 2, np.array([k0, k1]))


def h2(p):
    return -(p * np.log2(p) + (1 - p) * np.log2(1 - p))


def test_coherent_information_examples(rng):
    pair = random_pair(3, 2, 3, rng)
    assert coherent_information(pair, projector_onto(haar_state(3, rng))) == pytest.approx(0.0, abs=1e-8)
    assert coherent_information(complement(identity_channel(4)), maximally_mixed(4)) == pytest.approx(2.0)
    assert coherent_information(complement(amplitude_damping(0.25)), maximally_mixed(2)) > 0
    with pytest.raises(ValidationError):
        coherent_information(pair, maximally_mixed(2))


def test_coherent_information_directions_antisymmetric(rng):
    pair = random_pair(2, 3, 2, rng)
    rho = random_density_matrix(2, rng)
    assert coherent_information(pair, rho, "complement") == pytest.approx(-coherent_information(pair, rho))
    with pytest.raises(ValidationError):
        coherent_information(pair, rho, "sideways")


def test_sweep_identity_closed_form():
    pair = complement(identity_channel(2))
    res = sweep(pair, ket(0, 2), maximally_mixed(2))
    for e, ic in zip(res.eps_values, res.ic_values):
        assert ic == pytest.approx(h2(1 - e / 2), abs=1e-9)
    assert res.best_ic == max(res.ic_values)
    assert res.anchor_ic == pytest.approx(0.0, abs=1e-8)


def test_sweep_werner_holevo_four():
    pair = complement(make_werner_holevo(4))
    fwd = sweep(pair, ket(0, 4), maximally_mixed(4))
    assert all(v < 0 for v in fwd.ic_values)
    rev = sweep(pair, ket(0, 4), maximally_mixed(4), direction="complement")
    assert rev.positive
    assert rev.slope_predicted == pytest.approx(0.25, abs=1e-9)
    assert 0.5 * rev.slope_predicted <= rev.slope_fitted <= 1.5 * rev.slope_predicted


def test_sweep_zero_gap():
    pair = complement(make_dephasing(3, np.eye(3)))
    res = sweep(pair, ket(0, 3), maximally_mixed(3))
    assert res.slope_predicted == pytest.approx(0.0, abs=1e-12)
    assert abs(res.slope_fitted) < 1e-3


def test_sweep_values_recomputable(rng):
    pair = random_pair(3, 3, 2, rng)
    psi = haar_state(3, rng)
    sigma = random_density_matrix(3, rng)
    res = sweep(pair, psi, sigma)
    p = projector_onto(psi)
    for e, ic in zip(res.eps_values, res.ic_values):
        assert coherent_information(pair, (1 - e) * p + e * sigma) == pytest.approx(ic, abs=1e-9)


def test_fit_log_slope_exact():
    eps = [1e-6, 1e-7, 1e-8]
    a, b = fit_log_slope(eps, [0.3 * np.log2(1 / e) + 0.1 for e in eps])
    assert a == pytest.approx(0.3)
    assert b == pytest.approx(0.1)


def test_kernel_traces_werner_holevo():
    pair = complement(make_werner_holevo(5))
    t_fwd, t_rev = kernel_traces(pair, ket(0, 5), maximally_mixed(5))
    assert t_fwd == pytest.approx(1 / 5, abs=1e-9)
    assert t_rev == pytest.approx(3 / 5, abs=1e-9)


def test_perturbation_identity():
    pair = complement(identity_channel(2))
    chk = perturbation_slopes(pair, ket(0, 2), maximally_mixed(2))
    assert chk.predicted_slopes == pytest.approx((0.5,))
    assert chk.fitted_slopes == pytest.approx((0.5,), rel=1e-6)
    assert chk.passed


def test_perturbation_werner_holevo_complement():
    pair = complement(make_werner_holevo(4))
    chk = perturbation_slopes(pair, ket(0, 4), maximally_mixed(4), "complement")
    assert sum(chk.predicted_slopes) == pytest.approx(0.5, abs=1e-9)
    assert chk.passed


def test_perturbation_empty_kernel():
    pair = complement(Channel(2, 2, np.array([np.eye(2) / np.sqrt(2), np.diag([1, -1]) / np.sqrt(2)])))
    chk = perturbation_slopes(pair, (ket(0, 2) + ket(1, 2)) / np.sqrt(2), maximally_mixed(2))
    assert chk.predicted_slopes == () and chk.passed


def test_perturbation_random(rng):
    for _ in range(10):
        pair = random_pair(3, 3, 2, rng)
        psi = haar_state(3, rng)
        for direction in ("channel", "complement"):
            chk = perturbation_slopes(pair, psi, maximally_mixed(3), direction)
            assert chk.passed, chk
            t_fwd, t_rev = kernel_traces(pair, psi, maximally_mixed(3))
            target = t_fwd if direction == "channel" else t_rev
            assert sum(chk.predicted_slopes) == pytest.approx(target, abs=1e-9)


def test_flanders_examples(rng):
    d = 3
    full = [np.outer(ket(i, d), ket(j, d)) for i in range(d) for j in range(d)]
    r, ok = flanders_check(full, rng=rng)
    assert (r, ok) == (3, True)
    r, ok = flanders_check([np.outer(ket(0, 3), ket(0, 3))], rng=rng)
    assert (r, ok) == (1, True)
    anti = []
    for i in range(3):
        for j in range(i + 1, 3):
            m = np.zeros((3, 3))
            m[i, j], m[j, i] = 1, -1
            anti.append(m)
    r, ok = flanders_check(anti, rng=rng)
    assert (r, ok) == (2, True)
    with pytest.raises(ValidationError):
        flanders_check([np.eye(2), 2 * np.eye(2)])


def test_stinespring_subspace_examples(rng):
    mats = stinespring_subspace(complement(identity_channel(3)))
    assert len(mats) == 3 and mats[0].shape == (3, 1)
    assert flanders_check(mats, rng=rng)[0] == 1
    mats = stinespring_subspace(make_unitary_dilation(2, haar_unitary(4, rng)))
    assert flanders_check(mats, rng=rng)[0] == 2
    mats = stinespring_subspace(complement(make_werner_holevo(4)))
    assert flanders_check(mats, rng=rng)[0] == 3


def test_sweep_matches_detection(rng):
    for _ in range(5):
        pair = random_pair(2, 3, 2, rng)
        rep = detect(pair, DEFAULT_TOL.with_(haar_samples=5))
        for p in rep.probes:
            g = p.reference_gap
            if abs(g) > 1e-4:
                direction = "channel" if g > 0 else "complement"
                res = sweep(pair, p.psi, maximally_mixed(2), direction=direction)
                assert res.positive
                assert 0.5 * abs(g) <= res.slope_fitted <= 1.5 * abs(g)
