import math

import numpy as np
import pytest

from floqex.core import expand_inductive, fold_constant_order
from floqex.errors import DegenerateConstantSystem
from floqex.models import (
    OscillatorParams,
    build_oscillator,
    classify_oscillator_ep,
    oscillator_physical_evaluator,
    oscillator_resonant_omega,
)
from floqex.oracle import compare_exponents, exponents_from_monodromy, integrate_monodromy
from floqex.spectral import conjugate_pairing_check, detect_first_order_ep

OMEGA = 0.75


def make(c, k, a=1, b=1, phi=0.0, omega=OMEGA, **kw):
    return OscillatorParams.from_omega(c, k, a, b, phi, omega, **kw)


def test_constant_order_values():
    fam = build_oscillator(make(0.3, 0.3))
    assert np.allclose(
        np.diag(fam.a0), [-0.15 - 0.5268j, -0.15 + 0.5268j], atol=1e-4
    )
    fam2 = build_oscillator(make(0.146, 0.146))
    # -0.0730 - 0.3750i sits on the diagonal (first slot in this ordering)
    assert abs(fam2.a0[0, 0] - (-0.0730 - 0.3750j)) < 1e-4
    assert abs(fam2.a0[1, 1] - (-0.0730 + 0.3750j)) < 1e-4


def test_builder_requires_coprime_indices():
    with pytest.raises(ValueError):
        make(0.3, 0.3, a=2, b=4)


def test_degenerate_constant_system():
    with pytest.raises(DegenerateConstantSystem):
        build_oscillator(make(2.0, 1.0))  # c^2 = 4k


def test_zero_modulation_amplitude_means_constant_orders():
    fam = build_oscillator(make(0.3, 0.3))
    scaled = type(fam)(fam.a0, (fam.perturbation(1) * 0.0, fam.perturbation(2)), fam.period)
    exp = expand_inductive(scaled, 2)
    assert np.abs(exp.f[1]).max() == 0.0
    assert np.abs(exp.f[2]).max() == 0.0


def test_resonant_coefficient_values_at_near_crossing():
    # c = k = 0.146 with unit equal indices and no phase shift
    fam = build_oscillator(make(0.146, 0.146))
    a1 = fam.perturbation(1)
    w12 = a1.coeff(-1)[0, 1]
    w21 = a1.coeff(1)[1, 0]
    assert abs(w12 - 0.6667j) < 1e-3
    # the two resonant entries are conjugates of each other
    assert abs(w21 - np.conj(w12)) < 1e-14
    # legacy variant reproduces the published value for the second entry
    fam_leg = build_oscillator(make(0.146, 0.146, legacy_coupling_sign=True))
    w21_leg = fam_leg.perturbation(1).coeff(1)[1, 0]
    assert abs(w21_leg - (-0.5 + 0.5694j)) < 1e-3


def test_constant_modulation_first_order_matrix():
    # a=1, b=0 keeps a constant spring modulation: F1 gains a diagonal
    fam = build_oscillator(make(0.3, 0.3, a=1, b=0))
    exp = expand_inductive(fam, 1)
    f1 = exp.f[1]
    expected = np.array(
        [[-0.4746j, 0.3236 - 0.2932j], [0.3236 + 0.2932j, 0.4746j]]
    )
    assert np.abs(f1 - expected).max() < 1e-4


def test_family_matches_physical_system():
    # the eigenbasis family and the raw (x, x') system must share exponents
    p = make(0.3, 0.3)
    fam = build_oscillator(p)
    eps = 0.05
    mono_fam = integrate_monodromy(fam.evaluator(eps), fam.period, 1024)
    mono_phys = integrate_monodromy(oscillator_physical_evaluator(p, eps), fam.period, 1024)
    match = compare_exponents(
        list(exponents_from_monodromy(mono_fam).values),
        exponents_from_monodromy(mono_phys),
        fam.period,
    )
    assert match.max_residual < 1e-10


def test_legacy_sign_breaks_physical_match():
    # documents why the default coupling sign is what it is
    p = make(0.3, 0.3, legacy_coupling_sign=True)
    fam = build_oscillator(p)
    eps = 0.05
    mono_fam = integrate_monodromy(fam.evaluator(eps), fam.period, 1024)
    mono_phys = integrate_monodromy(oscillator_physical_evaluator(p, eps), fam.period, 1024)
    match = compare_exponents(
        list(exponents_from_monodromy(mono_fam).values),
        exponents_from_monodromy(mono_phys),
        fam.period,
    )
    assert match.max_residual > 1e-4


def test_conjugate_pairing_of_oracle_exponents():
    p = make(0.4, 0.7, a=2, b=3, phi=0.9)
    fam = build_oscillator(p)
    mono = integrate_monodromy(fam.evaluator(0.08), fam.period, 1024)
    orc = exponents_from_monodromy(mono)
    assert conjugate_pairing_check(list(orc.values), fam.period)


def test_classifier_distinct_indices_never_fire(rng):
    for _ in range(20):
        c = 0.1 + 3.0 * rng.random()
        k = 0.1 + 3.0 * rng.random()
        if abs(c * c - 4 * k) < 1e-2:
            continue
        cls = classify_oscillator_ep(make(c, k, a=2, b=3, phi=float(rng.random())))
        assert not cls.verdict


def test_classifier_phase_formula():
    # k = 1, c = 1: the nulling phase is pi/3
    cls = classify_oscillator_ep(make(1.0, 1.0, phi=math.pi / 3, omega=math.sqrt(3)))
    assert cls.k_unit and cls.c_in_range and cls.phases_real
    assert abs(cls.phases[0].real - math.pi / 3) < 1e-9
    assert cls.matched_phase is not None
    # both resonant entries vanish there, so no exceptional point
    assert cls.both_entries_vanish
    assert not cls.verdict


def test_classifier_detector_coherence_default_sign():
    # at the nulling phase both witnesses drop below tolerance together
    c = 1.0
    omega = math.sqrt(4 - c * c)
    p = make(c, 1.0, phi=math.pi / 3, omega=omega)
    fam = build_oscillator(p)
    fold = fold_constant_order(fam.a0, fam.period)
    assert fold.classes == ((0, 1),)
    (rep,) = detect_first_order_ep(fam, fold)
    assert not rep.verdict
    assert abs(rep.witness_ij) < 1e-10 and abs(rep.witness_ji) < 1e-10


def test_classifier_detector_coherence_legacy_sign():
    # the legacy variant separates the phases and the detector fires
    c = 1.0
    omega = math.sqrt(4 - c * c)
    p = make(c, 1.0, phi=math.pi / 3, omega=omega, legacy_coupling_sign=True)
    cls = classify_oscillator_ep(p)
    assert cls.verdict
    fam = build_oscillator(p)
    (rep,) = detect_first_order_ep(fam)
    assert rep.verdict
    assert (abs(rep.witness_ij) < 1e-10) != (abs(rep.witness_ji) < 1e-10)


def test_classifier_wrong_k_fails():
    cls = classify_oscillator_ep(make(1.0, 2.0, phi=0.3, omega=math.sqrt(7)))
    assert not cls.k_unit and not cls.verdict


def test_resonant_omega_helper():
    p = make(1.0, 1.0, omega=1.0)
    assert abs(oscillator_resonant_omega(p, 1) - math.sqrt(3)) < 1e-12
    assert abs(oscillator_resonant_omega(p, 2) - math.sqrt(3) / 2) < 1e-12


def test_a1_evaluates_to_cosine_combination():
    # A_1(t) must equal zeta(t)/2 * Z + kappa(t)/alpha * K pointwise
    p = make(0.4, 0.9, a=2, b=3, phi=0.0)
    fam = build_oscillator(p)
    a1 = fam.perturbation(1)
    alpha = p.alpha
    z = np.array([[-1 - p.c / alpha, -1 - p.c / alpha],
                  [-1 + p.c / alpha, -1 + p.c / alpha]])
    kap = np.array([[1.0, (p.c + alpha) ** 2 / (4 * p.k)],
                    [-((p.c - alpha) ** 2) / (4 * p.k), -1.0]])
    from floqex.fourier import fm_evaluate
    for t in (0.0, 0.3, 1.7, 4.1):
        zeta = math.cos(p.omega * p.a * t)
        kappa = math.cos(p.omega * p.b * t + p.phi)
        direct = 0.5 * zeta * z + (kappa / alpha) * kap
        assert np.abs(fm_evaluate(a1, t) - direct).max() < 1e-12
