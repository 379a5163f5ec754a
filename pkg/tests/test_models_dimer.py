import math

import numpy as np
import pytest

from floqex.core import expand_inductive, fold_constant_order
from floqex.errors import (
    DegeneracyCheckFailed,
    DegenerateConstantSystem,
    NonPositiveMaterialParameter,
    SeriesPeriodMismatch,
)
from floqex.folding import fold_complex
from floqex.fourier import ScalarFourierSeries
from floqex.models import (
    CapacitanceMatrix,
    DimerParams,
    build_dimer,
    build_hill_system,
    classify_dimer_ep,
    dimer_ep_modulation,
    dimer_resonant_omegas,
)
from floqex.oracle import (
    compare_exponents,
    exponents_from_monodromy,
    integrate_monodromy,
    residual_slope,
)
from floqex.spectral import (
    conjugate_pairing_check,
    detect_first_order_ep,
    exponent_asymptotics,
    resonant_frequencies,
)


def modes(cap, delta=1.0, vol=1.0):
    pref = math.sqrt(delta / (2.0 * vol))
    return (
        pref * math.sqrt(cap.trace + cap.alpha),
        pref * math.sqrt(cap.trace - cap.alpha),
    )


def dimer(cap, omega, eta=((), ()), gamma=((), ()), delta=1.0, vol=1.0, **kw):
    period = 2 * math.pi / omega

    def series(spec):
        if isinstance(spec, ScalarFourierSeries):
            return spec
        return ScalarFourierSeries(period, dict(spec))

    return DimerParams(
        cap, delta, vol,
        series(eta[0]), series(eta[1]), series(gamma[0]), series(gamma[1]),
        period, **kw,
    )


def hill_exponents(p, eps, steps=2048):
    hs = build_hill_system(p, eps)
    mono = integrate_monodromy(hs.first_order_evaluator(), p.period, steps)
    return exponents_from_monodromy(mono)


CAP = CapacitanceMatrix(2.0, 1.0, 0.6)


def test_constant_order_matches_hill_spectrum():
    p = dimer(CAP, 1.0)
    fam = build_dimer(p, "rho")
    hs = build_hill_system(p, 0.0)
    m0 = hs.m_of_t(0.3)
    assert np.abs(m0 - (p.delta / p.vol) * CAP.matrix()).max() < 1e-14
    rates = np.sqrt(np.linalg.eigvals(m0).real)
    expected = sorted(np.abs(np.imag(np.diag(fam.a0))))
    assert np.allclose(sorted(np.concatenate([rates, rates])), expected, atol=1e-12)


def test_hill_exponents_at_zero_eps():
    p = dimer(CAP, 1.0)
    fam = build_dimer(p, "rho")
    orc = hill_exponents(p, 0.0)
    asym = [fold_complex(z, p.period)[0] for z in np.diag(fam.a0)]
    match = compare_exponents(asym, orc, p.period)
    assert match.max_residual < 1e-10


def test_symmetric_modulation_structure():
    # equal density series kill the density channel outright; equal modulus
    # series kill the off-diagonal blocks but keep the diagonal ones (a
    # shared modulus modulation still modulates the system)
    s = {1: 0.2 + 0.1j, -1: 0.2 - 0.1j}
    p = dimer(CAP, 1.0, eta=(s, s), gamma=(s, s))
    fam_rho = build_dimer(p, "rho")
    assert fam_rho.perturbation(1).max_abs() < 1e-15
    assert fam_rho.perturbation(2).max_abs() < 1e-15
    fam_both = build_dimer(p, "both")
    a1 = fam_both.perturbation(1)
    for m in a1.frequencies():
        c = a1.coeff(m)
        assert np.abs(c[:2, 2:]).max() < 1e-15
        assert np.abs(c[2:, :2]).max() < 1e-15
    assert a1.max_abs() > 1e-3  # the diagonal modulus blocks survive


def test_diagonal_capacitance_case_split():
    capd = CapacitanceMatrix(2.0, 1.0, 0.0)
    p = dimer(capd, 1.0, eta=({1: 0.5}, ()))
    fam = build_dimer(p, "rho")
    a1 = fam.perturbation(1)
    c = a1.coeff(1)
    assert np.abs(c[:2, 2:]).max() == 0.0      # upper block dies for c11 > c22
    assert np.abs(c[2:, :2]).max() > 0.1       # lower block survives


def test_series_period_mismatch():
    with pytest.raises(SeriesPeriodMismatch):
        DimerParams(
            CAP, 1.0, 1.0,
            ScalarFourierSeries(1.0, {1: 0.1}),
            ScalarFourierSeries.zero(2.0),
            ScalarFourierSeries.zero(2.0),
            ScalarFourierSeries.zero(2.0),
            2.0,
        )


def test_singular_capacitance_rejected():
    with pytest.raises(DegenerateConstantSystem):
        build_dimer(dimer(CapacitanceMatrix(1.0, 1.0, 1.0), 1.0), "rho")


def test_nonpositive_material_parameter():
    p = dimer(CAP, 1.0, eta=({0: 1.0, 1: 3.0, -1: 3.0}, ()))
    with pytest.raises(NonPositiveMaterialParameter):
        build_hill_system(p, 0.5)


def test_dual_oracle_rho_second_order():
    # built family with its second order tracks the physical system to
    # cubic order, including at a resonant fold
    delta, vol = 1.3, 0.7
    cap = CAP
    wp, wm = modes(cap, delta, vol)
    omega = wp - wm
    e1 = {1: 0.25 * np.exp(0.2j), -1: 0.25 * np.exp(-0.2j)}
    e2 = {2: 0.15 * np.exp(-0.4j), -2: 0.15 * np.exp(0.4j)}
    p = dimer(cap, omega, eta=(e1, e2), delta=delta, vol=vol)
    fam = build_dimer(p, "rho")
    exp = expand_inductive(fam, 2)
    eps_list = (0.04, 0.02, 0.01)
    resid = []
    for eps in eps_list:
        asym = [fold_complex(z, p.period)[0] for z in exp.eigenvalues(eps)]
        resid.append(compare_exponents(asym, hill_exponents(p, eps), p.period).max_residual)
    assert residual_slope(eps_list, resid) >= 2.5


def test_dual_oracle_kappa_first_order_and_potential_scale():
    cap = CapacitanceMatrix(3.0, 1.0, 1.0)
    wp, wm = modes(cap)
    omega = wp - wm
    g1 = {1: 0.2 * np.exp(0.3j), -1: 0.2 * np.exp(-0.3j)}
    p = dimer(cap, omega, gamma=(g1, ()))
    fam = build_dimer(p, "kappa")
    exp = expand_inductive(fam, 1)
    eps_list = (0.02, 0.01, 0.005)
    resid = []
    for eps in eps_list:
        asym = [fold_complex(z, p.period)[0] for z in exp.eigenvalues(eps)]
        resid.append(compare_exponents(asym, hill_exponents(p, eps), p.period).max_residual)
    assert residual_slope(eps_list, resid) >= 1.7
    # the halved legacy potential scale leaves a first-order defect
    p_leg = dimer(cap, omega, gamma=(g1, ()), legacy_potential_scale=True)
    fam_leg = build_dimer(p_leg, "kappa")
    exp_leg = expand_inductive(fam_leg, 1)
    resid_leg = []
    for eps in eps_list:
        asym = [fold_complex(z, p.period)[0] for z in exp_leg.eigenvalues(eps)]
        resid_leg.append(
            compare_exponents(asym, hill_exponents(p_leg, eps), p.period).max_residual
        )
    assert residual_slope(eps_list, resid_leg) < 1.5


def test_a2_volume_variant_measured():
    # the uniform sqrt(2*vol) prefactor keeps the cubic convergence that
    # the mixed-power variant loses
    delta, vol = 1.3, 0.7
    wp, wm = modes(CAP, delta, vol)
    omega = wp - wm
    e1 = {1: 0.25, -1: 0.25}
    e2 = {2: 0.15, -2: 0.15}
    eps_list = (0.04, 0.02, 0.01)
    slopes = {}
    for legacy in (False, True):
        p = dimer(CAP, omega, eta=(e1, e2), delta=delta, vol=vol, legacy_a2_volume=legacy)
        fam = build_dimer(p, "rho")
        exp = expand_inductive(fam, 2)
        resid = []
        for eps in eps_list:
            asym = [fold_complex(z, p.period)[0] for z in exp.eigenvalues(eps)]
            resid.append(
                compare_exponents(asym, hill_exponents(p, eps), p.period).max_residual
            )
        slopes[legacy] = residual_slope(eps_list, resid)
    assert slopes[False] >= 2.7
    assert slopes[True] < 2.6


def test_first_order_matrix_is_offdiagonal_with_constant_density_part():
    # mean-zero modulus series keep diag(F1) = 0 even when the densities
    # carry constant parts
    cap = CAP
    p = dimer(
        cap, 0.9,
        eta=({0: 0.3, 1: 0.2, -1: 0.2}, {0: -0.1}),
        gamma=({1: 0.1, -1: 0.1}, {2: 0.05, -2: 0.05}),
    )
    fam = build_dimer(p, "both")
    exp = expand_inductive(fam, 1)
    assert np.abs(np.diag(exp.f[1])).max() < 1e-14


def test_simultaneous_crossings_share_resonant_frequencies():
    wp, wm = modes(CAP)
    for omega in (wp - wm, (wp + wm) / 2):
        p = dimer(CAP, omega)
        fam = build_dimer(p, "rho")
        fold = fold_constant_order(fam.a0, fam.period)
        multi = fold.multiple_classes()
        assert len(multi) == 2
        sets = [resonant_frequencies(fold, cl) for cl in multi]
        assert sets[0] == sets[1]


def test_conjugate_pairing_for_real_dimer_runs(rng):
    for _ in range(3):
        cap = CapacitanceMatrix(1.5 + rng.random(), 0.8 + 0.5 * rng.random(),
                                0.3 * rng.random())
        omega = 0.7 + 0.5 * rng.random()
        period = 2 * math.pi / omega
        e1 = ScalarFourierSeries.cosine(period, 1, 0.4 * rng.random(), 2 * math.pi * rng.random())
        g1 = ScalarFourierSeries.cosine(period, 2, 0.4 * rng.random(), 2 * math.pi * rng.random())
        z = ScalarFourierSeries.zero(period)
        p = DimerParams(cap, 1.0, 1.0, e1, z, g1, z, period)
        orc = hill_exponents(p, 0.05, steps=1024)
        assert conjugate_pairing_check(list(orc.values), period)


def test_rho_intra_branch_pairs_never_split_linearly():
    # folds of the (0,1) or (2,3) kind keep lambda1 = 0 under density-only
    # modulation: those witnesses live in the zero diagonal blocks
    wp, wm = modes(CAP)
    p = dimer(CAP, 2 * wp, eta=({1: 0.4, -1: 0.4}, ()))
    fam = build_dimer(p, "rho")
    fold = fold_constant_order(fam.a0, fam.period)
    assert (0, 1) in fold.classes
    exp = expand_inductive(fam, 2, folding=fold)
    asym = exponent_asymptotics(exp)
    for e in asym:
        if e.index in (0, 1):
            assert abs(complex(e.lambda1)) < 1e-12


# ------------------------------------------------------------- classifier


def test_classifier_lemma_nondegeneracy_guard():
    bad = CapacitanceMatrix(4.0, 1.0, 0.0)  # rate ratio 1/3 is rational
    with pytest.raises(DegeneracyCheckFailed):
        classify_dimer_ep(dimer(bad, 0.5), "rho")


def test_classifier_rho_known_point():
    capd = CapacitanceMatrix(2.0, 1.0, 0.0)
    omega = math.sqrt(2.0) - 1.0
    p = dimer(capd, omega, eta=({1: 1.0}, ()))
    cls = classify_dimer_ep(p, "rho")
    assert cls.verdict
    assert cls.case == "difference" and cls.n == 1
    assert cls.c12_zero
    assert {pv.pair for pv in cls.pairs} == {(0, 2), (1, 3)}
    fam = build_dimer(p, "rho")
    fold = fold_constant_order(fam.a0, fam.period)
    assert fold.classes == ((0, 2), (1, 3))
    reports = detect_first_order_ep(fam, fold)
    assert any(r.verdict for r in reports)


def test_classifier_rho_with_coupling_never_fires_for_real_modulation(rng):
    for _ in range(40):
        cap = CapacitanceMatrix(
            1.0 + 2.0 * rng.random(),
            0.5 + rng.random(),
            (0.1 + 0.7 * rng.random()) * np.exp(2j * math.pi * rng.random()),
        )
        try:
            wp, wm = modes(cap)
            n = int(rng.integers(1, 4))
            omega = (wp - wm) / n if rng.random() < 0.5 else (wp + wm) / n
            period = 2 * math.pi / omega
            e1 = ScalarFourierSeries.cosine(period, n, 0.2 + rng.random(), 2 * math.pi * rng.random())
            e2 = ScalarFourierSeries.cosine(period, n, rng.random(), 2 * math.pi * rng.random())
            z = ScalarFourierSeries.zero(period)
            p = DimerParams(cap, 1.0, 1.0, e1, e2, z, z, period)
            cls = classify_dimer_ep(p, "rho")
        except DegeneracyCheckFailed:
            continue
        assert not cls.verdict
        fam = build_dimer(p, "rho")
        reports = detect_first_order_ep(fam, fold_constant_order(fam.a0, fam.period))
        assert not any(r.verdict for r in reports)


def test_classifier_kappa_diagonal_capacitance():
    capd = CapacitanceMatrix(2.0, 1.0, 0.0)
    omega = math.sqrt(2.0) - 1.0
    p = dimer(capd, omega, gamma=({1: 0.3, -1: 0.3}, ()))
    cls = classify_dimer_ep(p, "kappa")
    assert cls.verdict and cls.case == "difference"
    fam = build_dimer(p, "kappa")
    reports = detect_first_order_ep(fam, fold_constant_order(fam.a0, fam.period))
    assert any(r.verdict for r in reports)


def test_classifier_both_channels_ratio_parameterization():
    cap = CapacitanceMatrix(3.0, 1.0, 1.0)   # sqrt(det)/alpha = 1/2 exactly
    wp, wm = modes(cap)
    omega = wp - wm
    period = 2 * math.pi / omega
    g_amp, g_ph = 0.4, 0.7
    g1 = ScalarFourierSeries.cosine(period, 1, g_amp, g_ph)
    z = ScalarFourierSeries.zero(period)
    probe = DimerParams(cap, 1.0, 1.0, z, z, g1, z, period)
    r = dimer_ep_modulation(probe, "difference", "upper", 1)
    assert abs(r - 0.5) < 1e-12
    e1 = ScalarFourierSeries.cosine(period, 1, r * g_amp, g_ph)
    p = DimerParams(cap, 1.0, 1.0, e1, z, g1, z, period)
    fam = build_dimer(p, "both")
    a1 = fam.perturbation(1)
    for m in (-1, 1):
        assert np.abs(a1.coeff(m)[:2, 2:]).max() < 1e-12   # nulled block
        assert np.abs(a1.coeff(m)[2:, :2]).max() > 1e-3    # partner block
    cls = classify_dimer_ep(p, "both")
    assert cls.verdict and not cls.c12_zero
    reports = detect_first_order_ep(fam, fold_constant_order(fam.a0, fam.period))
    assert any(r_.verdict for r_ in reports)
    # detuning the ratio switches the verdict off
    e_bad = ScalarFourierSeries.cosine(period, 1, 1.07 * r * g_amp, g_ph)
    p_bad = DimerParams(cap, 1.0, 1.0, e_bad, z, g1, z, period)
    assert not classify_dimer_ep(p_bad, "both").verdict


def test_classifier_coherent_with_detector_on_grid(rng):
    agree = fired = total = 0
    for _ in range(200):
        cap = CapacitanceMatrix(
            1.0 + 2.0 * rng.random(),
            0.5 + rng.random(),
            (0.8 * rng.random()) * np.exp(2j * math.pi * rng.random())
            if rng.random() < 0.7
            else 0.0,
        )
        delta = 0.5 + rng.random()
        vol = 0.5 + rng.random()
        wp, wm = modes(cap, delta, vol)
        if rng.random() < 0.7:
            n = int(rng.integers(1, 4))
            omega = (wp - wm) / n if rng.random() < 0.5 else (wp + wm) / n
        else:
            omega = 0.3 + rng.random()
        period = 2 * math.pi / omega
        channels = ("rho", "kappa", "both")[int(rng.integers(0, 3))]

        def rnd(active):
            if not active:
                return ScalarFourierSeries.zero(period)
            return ScalarFourierSeries.cosine(
                period, int(rng.integers(1, 4)), 0.2 + rng.random(), 2 * math.pi * rng.random()
            )

        p = DimerParams(
            cap, delta, vol,
            rnd(channels in ("rho", "both")),
            rnd(channels in ("rho", "both") and rng.random() < 0.5),
            rnd(channels in ("kappa", "both")),
            rnd(channels in ("kappa", "both") and rng.random() < 0.5),
            period,
        )
        try:
            cls = classify_dimer_ep(p, channels)
            fam = build_dimer(p, channels)
            reports = detect_first_order_ep(fam, fold_constant_order(fam.a0, fam.period))
        except DegeneracyCheckFailed:
            continue
        det = any(r.verdict for r in reports)
        total += 1
        fired += det
        agree += det == cls.verdict
    assert total > 120
    assert agree == total
    assert fired >= 5


def test_admissible_omegas_match_folds():
    oms = dimer_resonant_omegas(dimer(CAP, 1.0), n_max=3)
    wp, wm = modes(CAP)
    assert np.allclose(oms["difference"], [(wp - wm) / n for n in (1, 2, 3)])
    assert np.allclose(oms["sum"], [(wp + wm) / n for n in (1, 2, 3)])
    for omega in (oms["difference"][1], oms["sum"][2]):
        fam = build_dimer(dimer(CAP, omega), "rho")
        fold = fold_constant_order(fam.a0, fam.period)
        assert fold.multiple_classes()
