"""Model builders: the modulated harmonic oscillator and the resonator dimer.

Both models arrive as second-order equations; the builders emit the
first-order family in the basis that diagonalizes the unmodulated
coefficient, which is what the expansion machinery consumes.  The dimer
additionally gets a direct Hill-equation evaluator so the integration
oracle can run on the unreduced physical system.

Known-discrepancy flags
-----------------------
Earlier hand-derivations of these models circulated with three slips that
the oracle cross-checks in the test suite expose: the sign of the
oscillator's (2,1) spring-coupling entry, a factor two on the dimer
blocks that stem from the potential term (the second-derivative blocks),
and a volume power on one second-order dimer block.  The defaults here
follow the eigenbasis reduction, which the direct integration confirms;
``legacy_*`` switches reproduce the older variants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import CoefficientFamily
from .errors import (
    DegenerateConstantSystem,
    DegeneracyCheckFailed,
    NonPositiveMaterialParameter,
    SeriesPeriodMismatch,
)
from .fourier import FourierMatrix, ScalarFourierSeries, periods_equal

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Classical harmonic oscillator with modulated damping and restoring force
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OscillatorParams:
    """x'' + (c + eps*cos(2*pi*a*t/T)) x' + (k + eps*cos(2*pi*b*t/T + phi)) x = 0.

    Unit mass.  ``a`` and ``b`` are integer multiples of the base
    modulation frequency and must be coprime; ``phi`` is the relative
    phase of the restoring-force modulation.
    """

    c: float
    k: float
    a: int
    b: int
    phi: float
    period: float
    legacy_coupling_sign: bool = False

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("spring constant must be positive")
        if self.c < 0:
            raise ValueError("damping must be nonnegative")
        if self.a < 0 or self.b < 0:
            raise ValueError("modulation indices must be nonnegative")
        if math.gcd(self.a, self.b) != 1:
            raise ValueError("modulation indices must be coprime")
        if self.period <= 0:
            raise ValueError("period must be positive")

    @classmethod
    def from_omega(cls, c, k, a, b, phi, omega, **kw):
        return cls(c, k, a, b, phi, TWO_PI / omega, **kw)

    @property
    def omega(self) -> float:
        return TWO_PI / self.period

    @property
    def alpha(self) -> complex:
        return complex(np.sqrt(complex(self.c ** 2 - 4.0 * self.k)))


def oscillator_resonant_omega(p: OscillatorParams, n: int = 1) -> float:
    """Base frequency folding the two constant-order exponents together."""
    sep = abs(p.alpha.imag)
    if sep == 0.0:
        raise DegenerateConstantSystem("constant-order exponents are real-split")
    return sep / n


def _oscillator_matrices(p: OscillatorParams):
    alpha = p.alpha
    if abs(alpha) < 1e-12 * max(1.0, p.c, p.k):
        raise DegenerateConstantSystem(
            "c^2 = 4k: the unmodulated system is defective and the "
            "eigenbasis reduction does not exist"
        )
    c, k = p.c, p.k
    a0 = np.diag([-(c + alpha) / 2.0, -(c - alpha) / 2.0])
    z = np.array(
        [
            [-1.0 - c / alpha, -1.0 - c / alpha],
            [-1.0 + c / alpha, -1.0 + c / alpha],
        ],
        dtype=complex,
    )
    k21 = (c - alpha) ** 2 / (4.0 * k)
    if not p.legacy_coupling_sign:
        k21 = -k21
    kappa_mat = np.array(
        [[1.0, (c + alpha) ** 2 / (4.0 * k)], [k21, -1.0]], dtype=complex
    )
    return a0, z, kappa_mat, alpha


def build_oscillator(p: OscillatorParams) -> CoefficientFamily:
    """First-order family for the modulated oscillator.

    The damping modulation contributes Z/4 at frequencies -a and +a, the
    restoring-force modulation exp(-i*phi)K/(2*alpha) at -b and
    exp(+i*phi)K/(2*alpha) at +b; coinciding slots add.  A zero-frequency
    modulation index contributes its positive-frequency coefficient once,
    matching the published constant-modulation expansion.  Higher orders
    vanish identically.
    """
    a0, z, kappa_mat, alpha = _oscillator_matrices(p)
    coeffs: dict[int, np.ndarray] = {}

    def add(m: int, mat: np.ndarray):
        coeffs[m] = coeffs.get(m, 0) + mat

    if p.a == 0:
        add(0, z / 4.0)
    else:
        add(-p.a, z / 4.0)
        add(p.a, z / 4.0)
    if p.b == 0:
        add(0, np.exp(1j * p.phi) / (2.0 * alpha) * kappa_mat)
    else:
        add(-p.b, np.exp(-1j * p.phi) / (2.0 * alpha) * kappa_mat)
        add(p.b, np.exp(1j * p.phi) / (2.0 * alpha) * kappa_mat)
    a1 = FourierMatrix(2, p.period, coeffs)
    a2 = FourierMatrix.zero(2, p.period)
    return CoefficientFamily(a0, (a1, a2), p.period, label="oscillator")


def oscillator_physical_evaluator(p: OscillatorParams, eps: float):
    """t -> coefficient of the untransformed first-order system.

    Feeds the oracle with the raw (x, x') form so the eigenbasis
    reduction itself is under test, not assumed.  Zero-frequency
    modulation indices carry the same half-weight convention as
    ``build_oscillator``.
    """
    omega = p.omega

    def zeta(t):
        if p.a == 0:
            return 0.5
        return math.cos(omega * p.a * t)

    def kap(t):
        if p.b == 0:
            return 0.5 * np.exp(1j * p.phi)
        return math.cos(omega * p.b * t + p.phi)

    def evaluate(t: float) -> np.ndarray:
        return np.array(
            [
                [0.0, 1.0],
                [-(p.k + eps * kap(t)), -(p.c + eps * zeta(t))],
            ],
            dtype=complex,
        )

    return evaluate


@dataclass(frozen=True, eq=False)
class OscillatorEpClassification:
    verdict: bool
    phases: tuple               # phases nulling the (1,2) and (2,1) entries
    phases_real: bool           # both phases real, i.e. reachable by a shift
    k_unit: bool
    c_in_range: bool
    both_entries_vanish: bool   # at the matching phase, both resonant entries die
    matched_phase: float | None
    note: str


def _phase_mod(phi: float) -> float:
    return phi % TWO_PI


def classify_oscillator_ep(p: OscillatorParams, tol: float = 1e-9) -> OscillatorEpClassification:
    """Closed-form first-order exceptional-point test for the oscillator.

    Distinct modulation indices can never produce one: each resonant slot
    then holds a single matrix whose off-diagonal entries cannot vanish
    for positive spring constants.  For equal indices the two nulling
    phases exist only when k = 1 and c < 2; under the default coupling
    sign they coincide and kill both resonant entries at once, so the
    exclusive criterion still fails and the verdict stays negative.  The
    legacy sign variant separates the phases and reports a verdict, which
    is how the older derivations arrived at oscillator exceptional
    points.
    """
    if p.a != p.b:
        return OscillatorEpClassification(
            False, (None, None), False, False, False, False, None,
            "distinct modulation indices: resonant entries cannot vanish",
        )
    alpha = p.alpha
    c, k = p.c, p.k
    w12_target = 2.0 * k / (alpha + c)
    w21_target = 2.0 * k / (alpha - c) if p.legacy_coupling_sign else 2.0 * k / (c - alpha)
    phi12 = 1j * np.log(w12_target)
    phi21 = -1j * np.log(w21_target)
    phases_real = bool(abs(phi12.imag) < tol and abs(phi21.imag) < tol)
    k_unit = bool(abs(k - 1.0) < tol)
    c_in_range = 0.0 < c < 2.0
    matched = None
    for cand in (phi12, phi21):
        if abs(cand.imag) < tol:
            d = abs((_phase_mod(cand.real) - _phase_mod(p.phi) + math.pi) % TWO_PI - math.pi)
            if d < tol:
                matched = float(cand.real)
                break
    feasible = k_unit and c_in_range and phases_real
    if p.legacy_coupling_sign:
        verdict = bool(feasible and matched is not None)
        both = False
        note = "legacy coupling sign: the two nulling phases differ by pi"
    else:
        both = bool(feasible and matched is not None)
        verdict = False
        note = (
            "the resonant entries are complex conjugates for every phase, "
            "so exactly one can never vanish alone; at the nulling phase "
            "both vanish and the first-order split is suppressed"
        )
    return OscillatorEpClassification(
        verdict,
        (complex(phi12), complex(phi21)),
        phases_real,
        k_unit,
        c_in_range,
        both,
        matched,
        note,
    )


# ---------------------------------------------------------------------------
# Dimer of time-modulated subwavelength resonators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CapacitanceMatrix:
    """Hermitian 2x2 matrix encoding the resonator geometry."""

    c11: float
    c22: float
    c12: complex = 0.0

    @property
    def alpha(self) -> float:
        return math.sqrt((self.c11 - self.c22) ** 2 + 4.0 * abs(self.c12) ** 2)

    @property
    def trace(self) -> float:
        return self.c11 + self.c22

    @property
    def det(self) -> float:
        return self.c11 * self.c22 - abs(self.c12) ** 2

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.c11, self.c12], [np.conj(self.c12), self.c22]], dtype=complex
        )


@dataclass(frozen=True, eq=False)
class DimerParams:
    """Contrast delta, common volume, and the four modulation series.

    The material laws are 1/rho_i = 1 + eps*eta_i and
    1/kappa_i = 1 + eps*gamma_i; the reference wave speed is normalized
    so the unmodulated Hill matrix is (delta/vol) times the capacitance
    matrix.
    """

    cap: CapacitanceMatrix
    delta: float
    vol: float
    eta1: ScalarFourierSeries
    eta2: ScalarFourierSeries
    gamma1: ScalarFourierSeries
    gamma2: ScalarFourierSeries
    period: float
    legacy_potential_scale: bool = False
    legacy_a2_volume: bool = False

    def __post_init__(self):
        if self.delta <= 0 or self.vol <= 0:
            raise ValueError("contrast and volume must be positive")
        for s in (self.eta1, self.eta2, self.gamma1, self.gamma2):
            if not periods_equal(s.period, self.period):
                raise SeriesPeriodMismatch(
                    f"series period {s.period} != model period {self.period}"
                )

    @property
    def omega(self) -> float:
        return TWO_PI / self.period

    def mode_rates(self):
        """(omega_plus, omega_minus): |Im| of the four constant exponents."""
        cap = self.cap
        pref = math.sqrt(self.delta / (2.0 * self.vol))
        sp = np.sqrt(complex(cap.trace + cap.alpha))
        sm = np.sqrt(complex(cap.trace - cap.alpha))
        return pref * sp, pref * sm


def dimer_resonant_omegas(p: DimerParams, n_max: int = 8) -> dict:
    """Admissible base frequencies that fold mode pairs together.

    "difference" entries pair each decaying mode with the other branch's
    decaying mode (and likewise the growing ones); "sum" entries pair
    opposite-sign modes across branches.
    """
    wp, wm = p.mode_rates()
    if abs(wp.imag) > 1e-12 * abs(wp) or abs(wm.imag) > 1e-12 * abs(wm):
        raise DegeneracyCheckFailed("indefinite capacitance matrix")
    wp, wm = wp.real, wm.real
    return {
        "difference": [(wp - wm) / n for n in range(1, n_max + 1)],
        "sum": [(wp + wm) / n for n in range(1, n_max + 1)],
    }


def _dimer_scalars(p: DimerParams):
    cap = p.cap
    alpha = cap.alpha
    s = cap.trace
    beta = cap.c11 - cap.c22
    det = cap.det
    scale = max(abs(cap.c11), abs(cap.c22), abs(cap.c12), 1e-30)
    if abs(det) < 1e-12 * scale ** 2:
        raise DegenerateConstantSystem(
            "singular capacitance matrix: a constant-order rate vanishes"
        )
    if alpha < 1e-12 * scale:
        raise DegenerateConstantSystem(
            "proportional-to-identity capacitance matrix: the closed forms "
            "divide by the branch gap"
        )
    sp = np.sqrt(complex(s + alpha))
    sm = np.sqrt(complex(s - alpha))
    return alpha, s, beta, det, sp, sm


_UPPER_SIGNS = np.array([[1.0, -1.0], [1.0, -1.0]])


def _block4(upper_left, upper_right, lower_left, lower_right) -> np.ndarray:
    out = np.zeros((4, 4), dtype=complex)
    out[:2, :2] = upper_left
    out[:2, 2:] = upper_right
    out[2:, :2] = lower_left
    out[2:, 2:] = lower_right
    return out


def _series_times_blocks(period: float, parts) -> FourierMatrix:
    """Accumulate sum_j series_j * block_j into one matrix series."""
    coeffs: dict[int, np.ndarray] = {}
    for series, block in parts:
        for m, v in series.coeffs.items():
            coeffs[m] = coeffs.get(m, 0) + v * block
    return FourierMatrix(4, period, coeffs)


def build_dimer(p: DimerParams, channels: str = "both") -> CoefficientFamily:
    """First-order dimer family in the constant eigenbasis.

    ``channels`` selects which material law is modulated: "rho" uses the
    density series eta_i (and carries the second-order coefficient),
    "kappa" the bulk-modulus series gamma_i, "both" their sum at first
    order.  The kappa channel's second order has no closed form here, so
    those families stop at first order.
    """
    if channels not in ("rho", "kappa", "both"):
        raise ValueError("channels must be 'rho', 'kappa', or 'both'")
    alpha, s, beta, det, sp, sm = _dimer_scalars(p)
    pref0 = math.sqrt(p.delta / (2.0 * p.vol))
    a0 = 1j * pref0 * np.diag([-sp, sp, -sm, sm])

    zero2 = np.zeros((2, 2))
    d_eta = p.eta1 - p.eta2
    d_gamma = p.gamma1 - p.gamma2
    parts = []

    if channels in ("rho", "both"):
        c_rho = 1j * math.sqrt(p.delta) / (2.0 * math.sqrt(2.0 * p.vol))
        upper = c_rho * (-(beta - alpha) / sm) * _UPPER_SIGNS
        lower = c_rho * (-(beta + alpha) / sp) * _UPPER_SIGNS
        parts.append((d_eta, _block4(zero2, upper, lower, zero2)))

    if channels in ("kappa", "both"):
        c_kap = 1j * math.sqrt(p.delta) / (4.0 * math.sqrt(2.0 * p.vol))
        a11 = (sp / alpha) * _UPPER_SIGNS
        a22 = (sm / alpha) * _UPPER_SIGNS
        a12 = ((alpha - beta) / (alpha * sm)) * s * (-_UPPER_SIGNS)
        a21 = ((alpha + beta) / (alpha * sp)) * s * (-_UPPER_SIGNS)
        g_plus = p.gamma1 * (alpha + beta) + p.gamma2 * (alpha - beta)
        g_minus = p.gamma2 * (alpha + beta) + p.gamma1 * (alpha - beta)
        parts.append((g_plus * c_kap, _block4(a11, zero2, zero2, zero2)))
        parts.append((g_minus * c_kap, _block4(zero2, zero2, zero2, a22)))
        parts.append((d_gamma * c_kap, _block4(zero2, a12, zero2, zero2)))
        parts.append((d_gamma * c_kap, _block4(zero2, zero2, a21, zero2)))

        b_scale = 0.125 if p.legacy_potential_scale else 0.25
        c_pot = 1j * b_scale * math.sqrt(p.vol / (2.0 * p.delta))
        dd1 = p.gamma1.differentiate().differentiate()
        dd2 = p.gamma2.differentiate().differentiate()
        b11 = (
            (p.cap.c22 * (alpha + beta) - 2.0 * abs(p.cap.c12) ** 2) * dd1
            + (p.cap.c11 * (alpha - beta) - 2.0 * abs(p.cap.c12) ** 2) * dd2
        ) * complex(c_pot * sp / (alpha * det))
        b22 = (
            (p.cap.c22 * (alpha - beta) + 2.0 * abs(p.cap.c12) ** 2) * dd1
            + (p.cap.c11 * (alpha + beta) + 2.0 * abs(p.cap.c12) ** 2) * dd2
        ) * complex(c_pot * sm / (alpha * det))
        dd_diff = dd1 - dd2
        b12 = dd_diff * complex(c_pot * (beta - alpha) / (alpha * sm))
        b21 = dd_diff * complex(-c_pot * (beta + alpha) / (alpha * sp))
        parts.append((b11, _block4(_UPPER_SIGNS, zero2, zero2, zero2)))
        parts.append((b22, _block4(zero2, zero2, zero2, _UPPER_SIGNS)))
        parts.append((b12, _block4(zero2, _UPPER_SIGNS, zero2, zero2)))
        parts.append((b21, _block4(zero2, zero2, _UPPER_SIGNS, zero2)))

    a1 = _series_times_blocks(p.period, parts)

    perturbations = [a1]
    if channels == "rho":
        c2 = 1j * math.sqrt(p.delta) / math.sqrt(2.0 * p.vol)
        c2_21 = (
            1j * math.sqrt(p.delta) / (math.sqrt(2.0) * p.vol)
            if p.legacy_a2_volume
            else c2
        )
        sq_diff = d_eta * d_eta
        sq_mix = p.eta1 * p.eta1 - p.eta2 * p.eta2
        cross = d_eta * p.eta2
        c12sq = abs(p.cap.c12) ** 2
        a2_parts = [
            (
                sq_diff * complex(c2 * c12sq / (alpha * sp)),
                _block4(-_UPPER_SIGNS, zero2, zero2, zero2),
            ),
            (
                sq_diff * complex(c2 * c12sq / (alpha * sm)),
                _block4(zero2, zero2, zero2, _UPPER_SIGNS),
            ),
            (
                sq_mix * complex(c2 * c12sq / (alpha * sm))
                + cross * complex(c2 * beta * (beta - alpha) / (2.0 * alpha * sm)),
                _block4(zero2, -_UPPER_SIGNS, zero2, zero2),
            ),
            (
                sq_mix * complex(c2_21 * c12sq / (alpha * sp))
                + cross * complex(c2_21 * beta * (beta + alpha) / (2.0 * alpha * sp)),
                _block4(zero2, zero2, _UPPER_SIGNS, zero2),
            ),
        ]
        perturbations.append(_series_times_blocks(p.period, a2_parts))

    return CoefficientFamily(a0, tuple(perturbations), p.period, label=f"dimer-{channels}")


@dataclass(frozen=True, eq=False)
class HillSystem:
    """Psi'' + M(t) Psi = 0 evaluator for the physical dimer at fixed eps."""

    params: DimerParams
    eps: float

    def __post_init__(self):
        ts = np.linspace(0.0, self.params.period, 257)
        for s in (self.params.eta1, self.params.eta2, self.params.gamma1, self.params.gamma2):
            vals = np.array([1.0 + self.eps * s.evaluate(t) for t in ts])
            if np.min(vals.real) <= 0.0:
                raise NonPositiveMaterialParameter(
                    "1 + eps * modulation must stay positive over the period"
                )
        dg = (self.params.gamma1.differentiate(), self.params.gamma2.differentiate())
        object.__setattr__(self, "_dgamma", dg)
        object.__setattr__(
            self, "_ddgamma", (dg[0].differentiate(), dg[1].differentiate())
        )

    @property
    def dim(self) -> int:
        return 4

    def m_of_t(self, t: float) -> np.ndarray:
        p = self.params
        eps = self.eps
        cmat = p.cap.matrix()
        eta = np.array([p.eta1.evaluate(t), p.eta2.evaluate(t)])
        gam = np.array([p.gamma1.evaluate(t), p.gamma2.evaluate(t)])
        rho_inv = 1.0 + eps * eta
        kap_inv = 1.0 + eps * gam
        delta_i = p.delta / rho_inv
        v_i = np.sqrt(rho_inv / kap_inv)
        w1 = v_i * delta_i ** 1.5 / p.vol
        w2 = v_i / np.sqrt(delta_i)
        m = (w1[:, None] * cmat) * w2[None, :]
        dgam = np.array([self._dgamma[0].evaluate(t), self._dgamma[1].evaluate(t)])
        ddgam = np.array([self._ddgamma[0].evaluate(t), self._ddgamma[1].evaluate(t)])
        w3 = -(eps / 2.0) * ddgam / kap_inv + (eps ** 2 / 4.0) * dgam ** 2 / kap_inv ** 2
        return m + np.diag(w3)

    def first_order_evaluator(self):
        def evaluate(t: float) -> np.ndarray:
            m = self.m_of_t(t)
            out = np.zeros((4, 4), dtype=complex)
            out[0, 2] = 1.0
            out[1, 3] = 1.0
            out[2:, :2] = -m
            return out

        return evaluate


def build_hill_system(p: DimerParams, eps: float) -> HillSystem:
    return HillSystem(p, eps)


def ratio_to_nearest_rational(x: float, max_den: int = 64) -> float:
    best = math.inf
    for q in range(1, max_den + 1):
        p_num = round(x * q)
        best = min(best, abs(x - p_num / q))
    return best


def check_branch_gap_irrational(p: DimerParams, max_den: int = 64, tol: float = 1e-9):
    """Surrogate for the classification's non-degeneracy hypothesis.

    The ratio of the two branch rates must stay away from every rational
    with a bounded denominator, else distinct fold coincidences can
    happen at once and the constellation logic is unreliable.
    """
    wp, wm = p.mode_rates()
    if abs(wp.imag) > 1e-12 * abs(wp) or abs(wm.imag) > 1e-12 * abs(wm):
        raise DegeneracyCheckFailed("indefinite capacitance matrix")
    ratio = (wp.real - wm.real) / (wp.real + wm.real)
    dist = ratio_to_nearest_rational(ratio, max_den)
    if dist < tol:
        frac = Fraction(ratio).limit_denominator(max_den)
        raise DegeneracyCheckFailed(
            f"branch-rate ratio {ratio} is within {dist:.2e} of {frac}; "
            "fold coincidences may overlap"
        )
    return ratio, dist


@dataclass(frozen=True, eq=False)
class DimerPairVerdict:
    verdict: bool
    pair: tuple
    resonant_frequency: int
    vanishing: str | None
    witness_ij: complex
    witness_ji: complex


@dataclass(frozen=True, eq=False)
class DimerEpClassification:
    verdict: bool
    channels: str
    case: str | None            # "difference", "sum", "intra", or None
    n: int | None
    pairs: tuple
    admissible_omegas: dict
    ratio_reference: float      # sqrt(det C)/alpha, the on-resonance ratio
    c12_zero: bool
    exclusion_near: bool
    notes: str = ""


def _match_resonance(omega: float, admissible: dict, rtol: float = 1e-9):
    for case in ("difference", "sum"):
        for idx, cand in enumerate(admissible[case]):
            if abs(omega - cand) <= rtol * max(abs(omega), abs(cand)):
                return case, idx + 1
    return None, None


def classify_dimer_ep(
    p: DimerParams,
    channels: str = "both",
    n_max: int = 8,
    tol_ep: float | None = None,
    omega_rtol: float = 1e-9,
) -> DimerEpClassification:
    """Closed-form first-order exceptional-point classification.

    Works directly from the block scalars of the first-order coefficient,
    so it is an independent check of the pairwise detector run on the
    built family.  The off-diagonal blocks carry

        upper(nu) = c_rho*h_nu - (c_kap*S/alpha)*g_nu + (c_pot/alpha)*nu^2*Omega^2*g_nu
        lower(nu) = c_rho*h_nu + (c_kap*S/alpha)*g_nu - (c_pot/alpha)*nu^2*Omega^2*g_nu

    times the geometric factors (alpha -+ beta); h and g are the density
    and modulus difference coefficients.  A block also dies identically
    when its geometric factor vanishes, which happens exactly for a
    diagonal capacitance matrix.  On resonance the scalar conditions
    reduce to h_nu = +-(sqrt(det C)/alpha) * g_nu with the sign tied to
    the block, so an exceptional point needs exactly one of the two
    relations to hold.
    """
    if channels not in ("rho", "kappa", "both"):
        raise ValueError("channels must be 'rho', 'kappa', or 'both'")
    alpha, s, beta, det, sp, sm = _dimer_scalars(p)
    check_branch_gap_irrational(p)
    admissible = dimer_resonant_omegas(p, n_max)
    omega = p.omega
    scale_c = max(abs(p.cap.c11), abs(p.cap.c22), 1e-30)
    c12_zero = abs(p.cap.c12) <= 1e-12 * scale_c
    ratio_ref = math.sqrt(max(det, 0.0)) / alpha

    d_eta = p.eta1 - p.eta2
    d_gamma = p.gamma1 - p.gamma2
    use_eta = channels in ("rho", "both")
    use_gamma = channels in ("kappa", "both")

    c_rho = math.sqrt(p.delta) / (2.0 * math.sqrt(2.0 * p.vol))
    c_kap = math.sqrt(p.delta) / (4.0 * math.sqrt(2.0 * p.vol))
    b_scale = 0.125 if p.legacy_potential_scale else 0.25
    c_pot = b_scale * math.sqrt(p.vol / (2.0 * p.delta))

    def upper_scalar(nu: int) -> complex:
        acc = 0.0 + 0.0j
        if use_eta:
            acc += c_rho * d_eta.coeff(nu)
        if use_gamma:
            acc += -(c_kap * s / alpha) * d_gamma.coeff(nu)
            acc += (c_pot / alpha) * (nu * omega) ** 2 * d_gamma.coeff(nu)
        return acc

    def lower_scalar(nu: int) -> complex:
        acc = 0.0 + 0.0j
        if use_eta:
            acc += c_rho * d_eta.coeff(nu)
        if use_gamma:
            acc += (c_kap * s / alpha) * d_gamma.coeff(nu)
            acc += -(c_pot / alpha) * (nu * omega) ** 2 * d_gamma.coeff(nu)
        return acc

    scale = max(
        c_rho * d_eta.max_abs() if use_eta else 0.0,
        (c_kap * s / alpha) * d_gamma.max_abs() if use_gamma else 0.0,
        (c_pot / alpha) * (n_max * omega) ** 2 * d_gamma.max_abs() if use_gamma else 0.0,
        1e-30,
    )
    tol = 1e-10 * scale if tol_ep is None else tol_ep
    geo_upper_zero = abs(alpha - beta) <= 1e-12 * max(alpha, scale_c)
    geo_lower_zero = abs(alpha + beta) <= 1e-12 * max(alpha, scale_c)

    case, n = _match_resonance(omega, admissible, omega_rtol)
    exclusion_near = False
    pairs = []
    if case is not None:
        if use_gamma:
            target = (p.delta / p.vol) * s
            exclusion_near = abs((n * omega) ** 2 - target) <= 1e-6 * max(abs(target), 1.0)
        pair_list = [((0, 2), -n), ((1, 3), n)] if case == "difference" else [
            ((0, 3), -n),
            ((1, 2), n),
        ]
        for (i, j), nu in pair_list:
            wij = 0.0 + 0.0j if geo_upper_zero else upper_scalar(nu)
            wji = 0.0 + 0.0j if geo_lower_zero else lower_scalar(-nu)
            zij = abs(wij) < tol
            zji = abs(wji) < tol
            verdict = zij != zji
            pairs.append(
                DimerPairVerdict(
                    verdict,
                    (i, j),
                    nu,
                    "ij" if (verdict and zij) else ("ji" if verdict else None),
                    wij,
                    wji,
                )
            )
    else:
        # an intra-branch fold (same-sign mode pairs) can still occur
        wp, wm = (w.real for w in p.mode_rates())
        for rate, (i, j) in ((wp, (0, 1)), (wm, (2, 3))):
            for nn in range(1, n_max + 1):
                if abs(omega - 2.0 * rate / nn) <= omega_rtol * max(omega, 1.0):
                    case = "intra"
                    n = nn
                    # both witnesses live in a diagonal block: for the rho
                    # channel they vanish together, for kappa they are
                    # negatives of each other; either way no exclusive zero
                    pairs.append(
                        DimerPairVerdict(False, (i, j), nn, None, 0.0, 0.0)
                    )

    verdict = any(pv.verdict for pv in pairs)
    notes = []
    if case in ("difference", "sum") and not c12_zero and channels in ("rho", "kappa"):
        notes.append(
            "for real modulations a single channel needs a diagonal "
            "capacitance matrix; with coupling both resonant blocks stay nonzero"
        )
    if exclusion_near:
        notes.append(
            "resonance sits within 1e-6 of the potential-term cancellation "
            "n^2*Omega^2 = (delta/vol)*(C11+C22); the modulus channel "
            "contribution nearly vanishes"
        )
    return DimerEpClassification(
        verdict,
        channels,
        case,
        n,
        tuple(pairs),
        admissible,
        ratio_ref,
        c12_zero,
        exclusion_near,
        "; ".join(notes),
    )


def dimer_ep_modulation(
    p: DimerParams, case: str = "difference", block: str = "upper", n: int = 1
) -> float:
    """Ratio h/g that nulls one off-diagonal block on resonance.

    Returns the real coefficient r with (eta1-eta2)^(n) = r*(gamma1-gamma2)^(n)
    for the requested block and fold case; the opposite block then needs
    -r.  Useful for constructing two-channel exceptional points.
    """
    alpha, s, beta, det, sp, sm = _dimer_scalars(p)
    if det <= 0:
        raise DegeneracyCheckFailed("needs a positive-definite capacitance matrix")
    r = math.sqrt(det) / alpha
    sign = 1.0 if case == "difference" else -1.0
    if block == "lower":
        sign = -sign
    return sign * r
