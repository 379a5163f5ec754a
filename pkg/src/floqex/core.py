"""Constant-order folding and the inductive Floquet-Lyapunov expansion.

Given a family A(eps, t) = A0 + eps*A1(t) + eps^2*A2(t) + ... with A0
constant diagonal and finite Fourier perturbations, this module computes
the expansion F(eps) = F0 + eps*F1 + ... of the exponent matrix and
P(eps, t) = P0(t) + eps*P1(t) + ... of the periodic reduction, order by
order.  Closed first- and second-order shortcuts are provided alongside
the general recursion and must agree with it; the tests enforce this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDenominator,
    NotDiagonal,
    OrderUnavailable,
    PairNotDegenerate,
)
from .folding import cylinder_distance, fold_imag
from .fourier import FourierMatrix, fm_differentiate, fm_evaluate, fm_multiply


def _diag_of(a0) -> np.ndarray:
    a0 = np.asarray(a0, dtype=complex)
    if a0.ndim == 1:
        return a0
    if a0.ndim != 2 or a0.shape[0] != a0.shape[1]:
        raise NotDiagonal(f"expected a square matrix, got shape {a0.shape}")
    off = a0 - np.diag(np.diag(a0))
    if np.abs(off).max() > 0.0:
        raise NotDiagonal("constant-order coefficient must be exactly diagonal")
    return np.diag(a0)


def default_fold_tol(a0_diag: np.ndarray) -> float:
    scale = max(1.0, float(np.abs(a0_diag).max(initial=0.0)))
    return 1e-9 * scale


@dataclass(frozen=True, eq=False)
class FoldingResult:
    """Folded constant-order exponents and their bookkeeping."""

    f0: np.ndarray                 # diagonal entries, folded
    folding_numbers: np.ndarray    # integers n_i with a0_ii = f0_ii + n_i*2*pi*i/T
    classes: tuple                 # partition of indices by equal f0 entries
    period: float
    tol: float

    @property
    def dim(self) -> int:
        return len(self.f0)

    @property
    def f0_matrix(self) -> np.ndarray:
        return np.diag(self.f0)

    def class_of(self) -> np.ndarray:
        out = np.empty(self.dim, dtype=int)
        for ci, members in enumerate(self.classes):
            for k in members:
                out[k] = ci
        return out

    def a0(self) -> np.ndarray:
        omega = 2.0 * math.pi / self.period
        return self.f0 + 1j * omega * self.folding_numbers

    def multiple_classes(self):
        return [c for c in self.classes if len(c) >= 2]

    def shifted(self, index: int, by: int = 1) -> "FoldingResult":
        """Alternative representative: move entry ``index`` by ``by`` zones.

        Used to verify that eigenvalue perturbations do not depend on the
        representative choice.
        """
        omega = 2.0 * math.pi / self.period
        f0 = self.f0.copy()
        ns = self.folding_numbers.copy()
        f0[index] = f0[index] - 1j * omega * by
        ns[index] = ns[index] + by
        classes = _group_classes(f0, self.tol)
        return FoldingResult(f0, ns, classes, self.period, self.tol)


def _group_classes(f0: np.ndarray, tol: float) -> tuple:
    n = len(f0)
    labels = [-1] * n
    classes: list[list[int]] = []
    for i in range(n):
        if labels[i] >= 0:
            continue
        members = [i]
        labels[i] = len(classes)
        for j in range(i + 1, n):
            if labels[j] < 0 and abs(f0[i] - f0[j]) < tol:
                labels[j] = labels[i]
                members.append(j)
        classes.append(members)
    return tuple(tuple(c) for c in classes)


def fold_constant_order(a0, period: float, tol_fold: float | None = None) -> FoldingResult:
    """Fold the diagonal constant order into the first Brillouin zone.

    Real parts are preserved; imaginary parts are reduced modulo
    2*pi/period into [-pi/T, pi/T) with the right edge wrapped down.
    Indices whose folded values coincide within the tolerance form one
    multiplicity class.
    """
    diag = _diag_of(a0)
    if period <= 0:
        raise ValueError("period must be positive")
    tol = default_fold_tol(diag) if tol_fold is None else float(tol_fold)
    f0 = np.empty(len(diag), dtype=complex)
    ns = np.empty(len(diag), dtype=int)
    for i, z in enumerate(diag):
        im, n = fold_imag(z.imag, period, tol)
        f0[i] = complex(z.real, im)
        ns[i] = n
    classes = _group_classes(f0, tol)
    return FoldingResult(f0, ns, classes, period, tol)


def near_degenerate_pairs(folding: FoldingResult, tol: float):
    """Pairs whose folded exponents are close on the cylinder.

    Catches crossings where two entries sit at opposite zone edges, which
    the strip distance used for class formation cannot see.
    """
    pairs = []
    n = folding.dim
    for i in range(n):
        for j in range(i + 1, n):
            if cylinder_distance(folding.f0[i], folding.f0[j], folding.period) < tol:
                pairs.append((i, j))
    return pairs


@dataclass(frozen=True, eq=False)
class CoefficientFamily:
    """A0 + eps*A1(t) + eps^2*A2(t) + ... with diagonal constant order."""

    a0: np.ndarray
    perturbations: tuple
    period: float
    label: str = ""

    def __post_init__(self):
        diag = _diag_of(self.a0)
        object.__setattr__(self, "a0", np.diag(diag))
        perts = tuple(self.perturbations)
        if not perts:
            raise ValueError("at least one perturbation order is required")
        for p in perts:
            if p.dim != len(diag):
                raise NotDiagonal("perturbation dimension mismatch")
            if abs(p.period - self.period) > 1e-12 * max(self.period, p.period):
                raise ValueError("perturbation period mismatch")
        object.__setattr__(self, "perturbations", perts)

    @property
    def dim(self) -> int:
        return self.a0.shape[0]

    @property
    def max_order(self) -> int:
        return len(self.perturbations)

    def a0_diag(self) -> np.ndarray:
        return np.diag(self.a0)

    def perturbation(self, n: int) -> FourierMatrix:
        """A_n(t) for n >= 1."""
        return self.perturbations[n - 1]

    def evaluator(self, eps: float):
        """t -> A(eps, t), for the direct-integration oracle."""
        a0 = self.a0

        def evaluate(t: float) -> np.ndarray:
            out = a0.astype(complex).copy()
            scale = eps
            for p in self.perturbations:
                out = out + scale * fm_evaluate(p, t)
                scale *= eps
            return out

        return evaluate

    def trace_constant(self, eps: float) -> complex:
        """Constant Fourier coefficient of trace A(eps, t); the exact mean."""
        total = complex(np.trace(self.a0))
        scale = eps
        for p in self.perturbations:
            total += scale * complex(np.trace(p.coeff(0)))
            scale *= eps
        return total


@dataclass(frozen=True, eq=False)
class FloquetExpansion:
    """Computed orders of the exponent matrix and reduction transform."""

    folding: FoldingResult
    f: tuple          # (F0, ..., Fn) constant matrices
    p: tuple          # (P0, ..., Pn) FourierMatrix
    order: int
    family: CoefficientFamily = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.folding.dim

    def truncated_exponent_matrix(self, eps: float) -> np.ndarray:
        out = np.zeros_like(self.f[0])
        for n, fn in enumerate(self.f):
            out = out + (eps ** n) * fn
        return out

    def eigenvalues(self, eps: float) -> np.ndarray:
        return np.linalg.eigvals(self.truncated_exponent_matrix(eps))

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "period": self.folding.period,
            "order": self.order,
            "folding_numbers": [int(n) for n in self.folding.folding_numbers],
            "f": [
                {"re": np.real(fn).tolist(), "im": np.imag(fn).tolist()}
                for fn in self.f
            ],
            "p": [pn.to_json() for pn in self.p],
        }


def _p0_series(folding: FoldingResult) -> FourierMatrix:
    """exp((A0 - F0) t) as an exact diagonal series with unit coefficients."""
    n = folding.dim
    coeffs: dict[int, np.ndarray] = {}
    for k in range(n):
        m = int(folding.folding_numbers[k])
        block = coeffs.setdefault(m, np.zeros((n, n), dtype=complex))
        block[k, k] = 1.0
    return FourierMatrix(n, folding.period, coeffs)


def _degenerate_tol(a0_diag: np.ndarray, omega: float) -> float:
    return 1e-12 * max(1.0, float(np.abs(a0_diag).max(initial=0.0)), omega)


def _solve_order(phi: FourierMatrix, folding: FoldingResult, a0_diag: np.ndarray):
    """One step of the recursion: (F_j, P_j) from the inhomogeneity."""
    n = folding.dim
    omega = 2.0 * math.pi / folding.period
    f0 = folding.f0
    ns = folding.folding_numbers
    class_of = folding.class_of()
    same = class_of[:, None] == class_of[None, :]
    degen_tol = _degenerate_tol(a0_diag, omega)

    fj = np.zeros((n, n), dtype=complex)
    # Degenerate branch: read the resonant coefficient, row by row.
    for k in range(n):
        row_phi = phi.coeff(int(ns[k]))
        fj[k, same[k]] = row_phi[k, same[k]]

    p_coeffs: dict[int, np.ndarray] = {}
    support = set(phi.frequencies())
    support.update(int(m) for m in ns)
    distinct_sum = np.zeros((n, n), dtype=complex)
    total = np.zeros((n, n), dtype=complex)
    for m in sorted(support):
        cm = phi.coeff(m)
        denom = 1j * omega * m - a0_diag[:, None] + f0[None, :]
        comp = ns[:, None] == m  # row k absorbs the compensating coefficient
        small = (np.abs(denom) < degen_tol) & ~comp & (np.abs(cm) > 0)
        if small.any():
            k, l = np.argwhere(small)[0]
            raise DegenerateDenominator(
                f"denominator vanished at frequency m={m}, entry ({k},{l}); "
                "two constant-order entries are congruent modulo 2*pi*i/T "
                "but were not merged into one class"
            )
        pm = np.zeros((n, n), dtype=complex)
        keep = ~comp & (np.abs(cm) > 0)
        pm[keep] = cm[keep] / denom[keep]
        p_coeffs[m] = pm
        total = total + pm
        # Distinct branch of F_j: the full resolvent sum, including m = n_k.
        contrib = np.zeros((n, n), dtype=complex)
        ok = ~same & (np.abs(cm) > 0)
        bad = ok & (np.abs(denom) < degen_tol)
        if bad.any():
            k, l = np.argwhere(bad)[0]
            raise DegenerateDenominator(
                f"denominator vanished at frequency m={m}, entry ({k},{l})"
            )
        contrib[ok] = cm[ok] / denom[ok]
        distinct_sum = distinct_sum + contrib

    gap = f0[None, :] - f0[:, None]
    fj[~same] = (gap * distinct_sum)[~same]

    # P_j(0) = 0: the coefficient at row frequency n_k absorbs minus the rest.
    for k in range(n):
        m = int(ns[k])
        block = p_coeffs.setdefault(m, np.zeros((n, n), dtype=complex))
        block[k, :] = -total[k, :]
    pj = FourierMatrix(n, folding.period, p_coeffs)
    return fj, pj


def expand_inductive(
    family: CoefficientFamily,
    order: int,
    pad: bool = False,
    folding: FoldingResult | None = None,
    tol_fold: float | None = None,
) -> FloquetExpansion:
    """Compute (F_0..F_order) and (P_0..P_order) by the order-by-order recursion.

    Missing higher perturbations are treated as zero only when ``pad`` is
    set; otherwise requesting an order beyond the family raises.  An
    explicit ``folding`` overrides the canonical representative choice.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if order > family.max_order and not pad:
        raise OrderUnavailable(
            f"family provides perturbations through order {family.max_order}; "
            f"order {order} requires pad=True"
        )
    a0_diag = family.a0_diag()
    if folding is None:
        folding = fold_constant_order(a0_diag, family.period, tol_fold)
    zero = FourierMatrix.zero(family.dim, family.period)

    f_list = [folding.f0_matrix]
    p_list = [_p0_series(folding)]
    for j in range(1, order + 1):
        aj = family.perturbation(j) if j <= family.max_order else zero
        phi = fm_multiply(aj, p_list[0])
        for i in range(1, j):
            ai = family.perturbation(i) if i <= family.max_order else zero
            phi = phi + fm_multiply(ai, p_list[j - i]) - p_list[j - i].right_const(f_list[i])
        fj, pj = _solve_order(phi, folding, a0_diag)
        f_list.append(fj)
        p_list.append(pj)
    return FloquetExpansion(folding, tuple(f_list), tuple(p_list), order, family)


def recursion_residual(family: CoefficientFamily, expansion: FloquetExpansion, j: int) -> float:
    """Max-abs coefficient defect of dP_j/dt = sum_i (A_i P_{j-i} - P_{j-i} F_i)."""
    if j < 1 or j > expansion.order:
        raise ValueError("order out of range")
    zero = FourierMatrix.zero(family.dim, family.period)
    rhs = expansion.p[j].left_const(family.a0) - expansion.p[j].right_const(expansion.f[0])
    for i in range(1, j + 1):
        ai = family.perturbation(i) if i <= family.max_order else zero
        rhs = rhs + fm_multiply(ai, expansion.p[j - i]) - expansion.p[j - i].right_const(expansion.f[i])
    defect = fm_differentiate(expansion.p[j]) - rhs
    return defect.max_abs()


def p_at_zero_defect(expansion: FloquetExpansion, j: int) -> float:
    """Max-abs of P_j(0); zero for j >= 1 by construction."""
    total = np.zeros((expansion.dim, expansion.dim), dtype=complex)
    for m in expansion.p[j].frequencies():
        total = total + expansion.p[j].coeff(m)
    if j == 0:
        total = total - np.eye(expansion.dim)
    return float(np.abs(total).max())


def first_order_closed(
    family: CoefficientFamily, folding: FoldingResult | None = None
) -> tuple[np.ndarray, FourierMatrix]:
    """Closed forms for F_1 and P_1, bypassing the recursion.

    Must reproduce ``expand_inductive`` at order 1 to rounding; the test
    suite checks this on randomized families.
    """
    a0_diag = family.a0_diag()
    if folding is None:
        folding = fold_constant_order(a0_diag, family.period)
    a1 = family.perturbation(1)
    n = family.dim
    omega = 2.0 * math.pi / family.period
    f0 = folding.f0
    ns = folding.folding_numbers
    class_of = folding.class_of()
    same = class_of[:, None] == class_of[None, :]
    degen_tol = _degenerate_tol(a0_diag, omega)

    f1 = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            if same[k, l]:
                f1[k, l] = a1.coeff(int(ns[k] - ns[l]))[k, l]
            else:
                acc = 0.0 + 0.0j
                for m in a1.frequencies():
                    num = a1.coeff(m)[k, l]
                    if num == 0.0:
                        continue
                    den = 1j * omega * m + a0_diag[l] - a0_diag[k]
                    if abs(den) < degen_tol:
                        raise DegenerateDenominator(
                            f"first-order denominator vanished at m={m}, entry ({k},{l})"
                        )
                    acc += num / den
                f1[k, l] = (f0[l] - f0[k]) * acc

    p_coeffs: dict[int, np.ndarray] = {}
    for k in range(n):
        for l in range(n):
            for mu in a1.frequencies():
                num = a1.coeff(mu)[k, l]
                if num == 0.0:
                    continue
                m = mu + int(ns[l])
                if m == ns[k]:
                    continue
                den = 1j * omega * m - a0_diag[k] + f0[l]
                if abs(den) < degen_tol:
                    raise DegenerateDenominator(
                        f"first-order denominator vanished at m={m}, entry ({k},{l})"
                    )
                block = p_coeffs.setdefault(m, np.zeros((n, n), dtype=complex))
                block[k, l] += num / den
    totals = np.zeros((n, n), dtype=complex)
    for block in p_coeffs.values():
        totals = totals + block
    for k in range(n):
        m = int(ns[k])
        block = p_coeffs.setdefault(m, np.zeros((n, n), dtype=complex))
        block[k, :] = -totals[k, :]
    p1 = FourierMatrix(n, family.period, p_coeffs)
    return f1, p1


def second_order_entries(
    family: CoefficientFamily,
    pairs,
    folding: FoldingResult | None = None,
    f1: np.ndarray | None = None,
    variant: str = "f1",
) -> dict:
    """Closed-form (F_2)_{kl} for index pairs inside one multiplicity class.

    ``variant='f1'`` uses the first-order exponent matrix directly;
    ``variant='a1'`` substitutes its closed form, so the result depends on
    the modulation coefficients alone.  Both must agree to rounding.
    """
    if variant not in ("f1", "a1"):
        raise ValueError("variant must be 'f1' or 'a1'")
    a0_diag = family.a0_diag()
    if folding is None:
        folding = fold_constant_order(a0_diag, family.period)
    if f1 is None:
        f1, _ = first_order_closed(family, folding)
    a1 = family.perturbation(1)
    a2 = family.perturbation(2) if family.max_order >= 2 else FourierMatrix.zero(
        family.dim, family.period
    )
    n = family.dim
    omega = 2.0 * math.pi / family.period
    f0 = folding.f0
    ns = folding.folding_numbers
    class_of = folding.class_of()
    degen_tol = _degenerate_tol(a0_diag, omega)
    freqs = a1.frequencies()

    def resolvent_sum_right(j: int, l: int) -> complex:
        # sum_m (A1^m)_{jl} / (i*omega*m + a0_l - a0_j), all m
        acc = 0.0 + 0.0j
        for m in freqs:
            num = a1.coeff(m)[j, l]
            if num == 0.0:
                continue
            den = 1j * omega * m + a0_diag[l] - a0_diag[j]
            if abs(den) < degen_tol:
                raise DegenerateDenominator(f"vanishing denominator at m={m} ({j},{l})")
            acc += num / den
        return acc

    out = {}
    for (k, l) in pairs:
        if class_of[k] != class_of[l]:
            raise PairNotDegenerate(f"entries {k} and {l} are in different classes")
        # term 1: resonant coefficient of A1(t) P1(t)
        t1 = 0.0 + 0.0j
        for j in range(n):
            for m in freqs:
                if m == ns[j] - ns[l]:
                    continue
                num2 = a1.coeff(m)[j, l]
                if num2 == 0.0:
                    continue
                num1 = (
                    a1.coeff(int(ns[k] - ns[l]) - m)[k, j]
                    - a1.coeff(int(ns[k] - ns[j]))[k, j]
                )
                den = 1j * omega * m + a0_diag[l] - a0_diag[j]
                if abs(den) < degen_tol:
                    raise DegenerateDenominator(f"vanishing denominator at m={m} ({j},{l})")
                t1 += num1 * num2 / den
        # term 2: minus the resonant coefficient of P1(t) F1
        t2 = 0.0 + 0.0j
        for j in range(n):
            if variant == "f1":
                w = f1[j, l]
                if w == 0.0:
                    continue
                acc = 0.0 + 0.0j
                for m in freqs:
                    if m == ns[k] - ns[j]:
                        continue
                    num = a1.coeff(m)[k, j]
                    if num == 0.0:
                        continue
                    den = 1j * omega * m + a0_diag[j] - a0_diag[k]
                    if abs(den) < degen_tol:
                        raise DegenerateDenominator(f"vanishing denominator at m={m} ({k},{j})")
                    acc += num / den
                t2 += acc * w
            else:
                acc = 0.0 + 0.0j
                for m in freqs:
                    if m == ns[k] - ns[j]:
                        continue
                    num = a1.coeff(m)[k, j]
                    if num == 0.0:
                        continue
                    den = 1j * omega * m + a0_diag[j] - a0_diag[k]
                    if abs(den) < degen_tol:
                        raise DegenerateDenominator(f"vanishing denominator at m={m} ({k},{j})")
                    acc += num / den
                if class_of[j] == class_of[l]:
                    w = a1.coeff(int(ns[j] - ns[l]))[j, l]
                else:
                    w = (f0[l] - f0[j]) * resolvent_sum_right(j, l)
                t2 += acc * w
        # term 3: resonant coefficient of A2(t) P0(t)
        t3 = a2.coeff(int(ns[k] - ns[l]))[k, l]
        out[(k, l)] = t1 + t2 + t3
    return out


@dataclass(frozen=True)
class SeriesEvaluation:
    matrix: np.ndarray
    truncation_bound: float


def _exp_tail(x: float, start: int, max_terms: int = 400) -> float:
    """sum_{j >= start} x^j / j!"""
    if start < 0:
        start = 0
    term = x ** start / math.factorial(start) if start < 170 else 0.0
    total = 0.0
    j = start
    while j < start + max_terms:
        total += term
        j += 1
        term *= x / j
        if term < 1e-300:
            break
    return total


def fundamental_solution_series(
    expansion: FloquetExpansion, eps: float, t: float, terms: int = 60
) -> SeriesEvaluation:
    """Evaluate the fundamental solution through second order in eps.

    X = P0 e^{F0 t}
        + eps (P1 e^{F0 t} + P0 D1)
        + eps^2 (P2 e^{F0 t} + P1 D1 + P0 D2),
    where D1 and D2 are the first and second eps-derivatives of
    exp((F0 + eps F1 + eps^2 F2) t) at eps = 0, computed as truncated
    matrix-power sums.  The reported bound covers the power-sum tails.
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    order = expansion.order
    f0 = expansion.f[0]
    f1 = expansion.f[1] if order >= 1 else np.zeros_like(f0)
    f2 = expansion.f[2] if order >= 2 else np.zeros_like(f0)
    n = expansion.dim
    d0 = np.diag(f0)
    e_f0t = np.diag(np.exp(d0 * t))

    # Recursions: C_k = sum_{i<k} F0^i F1 F0^{k-1-i}, likewise C2_k for F2,
    # and Q_k = sum_{a+b+c=k-2} F0^a F1 F0^b F1 F0^c.
    d1 = np.zeros((n, n), dtype=complex)
    d2 = np.zeros((n, n), dtype=complex)
    c_k = np.zeros((n, n), dtype=complex)
    c2_k = np.zeros((n, n), dtype=complex)
    q_k = np.zeros((n, n), dtype=complex)
    f0_pow = np.eye(n, dtype=complex)  # F0^{k-1} inside the loop
    t_fac = 1.0
    for k in range(1, terms + 1):
        q_k = f0 @ q_k + f1 @ c_k
        c_k = f0 @ c_k + f1 @ f0_pow
        c2_k = f0 @ c2_k + f2 @ f0_pow
        t_fac = t_fac * t / k
        d1 = d1 + t_fac * c_k
        d2 = d2 + t_fac * (c2_k + q_k)
        f0_pow = f0_pow @ f0

    p0t = fm_evaluate(expansion.p[0], t)
    x = p0t @ e_f0t
    if order >= 1:
        p1t = fm_evaluate(expansion.p[1], t)
        x = x + eps * (p1t @ e_f0t + p0t @ d1)
    if order >= 2:
        p2t = fm_evaluate(expansion.p[2], t)
        x = x + eps ** 2 * (p2t @ e_f0t + p1t @ d1 + p0t @ d2)

    # Tail bounds for the truncated power sums.
    nf0 = float(np.linalg.norm(f0, 2))
    nf1 = float(np.linalg.norm(f1, 2))
    nf2 = float(np.linalg.norm(f2, 2))
    at = abs(t)
    x0 = nf0 * at
    tail1 = nf1 * at * _exp_tail(x0, terms)
    tail2 = nf2 * at * _exp_tail(x0, terms) + 0.5 * (nf1 * at) ** 2 * _exp_tail(x0, max(terms - 1, 0))
    pnorm = [sum(np.linalg.norm(c, 2) for c in p.coeffs.values()) for p in expansion.p]
    bound = abs(eps) * pnorm[0] * tail1
    if order >= 2:
        bound += abs(eps) ** 2 * (pnorm[0] * tail2 + pnorm[1] * tail1)
    return SeriesEvaluation(x, float(bound))
