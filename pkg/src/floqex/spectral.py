"""Asymptotic eigenvalue perturbation of the exponent matrix.

Restricting the computed orders to the eigenspace of a repeated
constant-order exponent gives a small effective Hamiltonian whose
eigenvalues carry the exponent asymptotics through second order.  The
first-order exceptional-point criterion lives here too: a class pair is
flagged when exactly one of its two resonant modulation entries vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CoefficientFamily, FoldingResult, fold_constant_order
from .errors import ConstantModulationPresent, NotAClass, NotMultiple
from .folding import cylinder_distance


def resonant_frequencies(folding: FoldingResult, class_indices) -> set:
    """Integer folding-number differences within one multiplicity class.

    Modulating at these frequencies is what can move a repeated exponent
    at first order.  A class with equal folding numbers yields {0}; that
    literal value is returned and left to the caller to interpret.
    """
    members = sorted(class_indices)
    if len(members) < 2:
        raise NotMultiple("resonant frequencies need a class with >= 2 members")
    ns = folding.folding_numbers
    out = set()
    for i in members:
        for j in members:
            if i != j:
                out.add(int(ns[j] - ns[i]))
    return out


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    """Orders 0..2 of the exponent matrix restricted to one class."""

    class_indices: tuple
    h0: np.ndarray
    h1: np.ndarray
    h2: np.ndarray | None
    g: np.ndarray  # diagonal auxiliary weights used for the second order

    @property
    def dim(self) -> int:
        return len(self.class_indices)

    def matrix(self, eps: float) -> np.ndarray:
        out = self.h0 + eps * self.h1
        if self.h2 is not None:
            out = out + eps ** 2 * self.h2
        return out

    def eigenvalues(self, eps: float) -> np.ndarray:
        return np.linalg.eigvals(self.matrix(eps))


def effective_hamiltonian(f, class_indices, tol: float | None = None) -> EffectiveHamiltonian:
    """Restrict (F0, F1[, F2]) to a multiplicity class.

    The second order picks up the coupling through the complement:
    h2_{kl} = sum_{n outside} F1_{kn} F1_{nl} / (f0_class - F0_nn) + F2_{kl}.
    """
    f0 = np.asarray(f[0], dtype=complex)
    n = f0.shape[0]
    members = tuple(sorted(class_indices))
    if not members or any(i < 0 or i >= n for i in members):
        raise NotAClass(f"invalid class indices {class_indices}")
    d0 = np.diag(f0)
    ref = d0[members[0]]
    scale = max(1.0, float(np.abs(d0).max()))
    tol = 1e-9 * scale if tol is None else tol
    for i in members:
        if abs(d0[i] - ref) > tol:
            raise NotAClass(f"index {i} is not degenerate with index {members[0]}")
    outside = [j for j in range(n) if j not in members]
    for j in outside:
        if abs(d0[j] - ref) <= tol:
            raise NotAClass(f"index {j} belongs to the class but was not listed")

    idx = np.asarray(members)
    h0 = f0[np.ix_(idx, idx)]
    f1 = np.asarray(f[1], dtype=complex) if len(f) >= 2 else np.zeros_like(f0)
    h1 = f1[np.ix_(idx, idx)]
    g = np.zeros(n, dtype=complex)
    for j in outside:
        g[j] = 1.0 / (ref - d0[j])
    h2 = None
    if len(f) >= 3 and f[2] is not None:
        f2 = np.asarray(f[2], dtype=complex)
        h2 = f2[np.ix_(idx, idx)].astype(complex)
        for a, k in enumerate(members):
            for b, l in enumerate(members):
                acc = 0.0 + 0.0j
                for j in outside:
                    acc += f1[k, j] * f1[j, l] * g[j]
                h2[a, b] += acc
    return EffectiveHamiltonian(members, h0, h1, h2, g)


@dataclass(frozen=True, eq=False)
class ExponentAsymptotics:
    """f(eps) ~ f0 + eps*lambda1 + eps^2*lambda2 for one exponent branch."""

    index: int
    f0: complex
    lambda1: complex
    lambda2: complex | None
    branch_note: str = ""


def _two_by_two_second_order(h: EffectiveHamiltonian):
    """lambda2 for a 2x2 class with distinct first-order eigenvalues."""
    evals, v = np.linalg.eig(h.h1)
    corr = np.linalg.inv(v) @ h.h2 @ v
    return [(evals[i], corr[i, i]) for i in range(2)]


def perturb_exponents(h: EffectiveHamiltonian, tol: float = 1e-12) -> list:
    """Exponent asymptotics for every member of the class.

    Classes of dimension one and two use the closed forms; larger classes
    fall back to numerical eigenvalues of h1 (and of h2 when h1 vanishes)
    and are flagged in ``branch_note``.
    """
    f0 = h.h0[0, 0]
    scale = max(1.0, float(np.abs(h.h1).max()))
    h1_zero = np.abs(h.h1).max() <= tol * scale or np.abs(h.h1).max() == 0.0

    if h.dim == 1:
        lam2 = h.h2[0, 0] if h.h2 is not None else None
        return [ExponentAsymptotics(h.class_indices[0], f0, h.h1[0, 0], lam2)]

    if h.dim == 2:
        if h1_zero:
            lam2 = np.linalg.eigvals(h.h2) if h.h2 is not None else [None, None]
            return [
                ExponentAsymptotics(
                    h.class_indices[i], f0, 0.0, lam2[i],
                    "first order vanishes; split is quadratic",
                )
                for i in range(2)
            ]
        mean = 0.5 * (h.h1[0, 0] + h.h1[1, 1])
        half_gap = 0.5 * (h.h1[0, 0] - h.h1[1, 1])
        rad = half_gap ** 2 + h.h1[0, 1] * h.h1[1, 0]
        root = np.sqrt(complex(rad))  # principal branch
        lam1 = (mean + root, mean - root)
        if abs(root) <= tol * scale:
            # repeated first-order eigenvalue: the branch is not analytic
            # unless h1 is scalar, so no second order is reported
            note = "plus/minus pair, principal square root; degenerate first order"
            return [
                ExponentAsymptotics(h.class_indices[i], f0, lam1[i], None, note)
                for i in range(2)
            ]
        if h.h2 is not None:
            second = _two_by_two_second_order(h)
            # match the closed-form lambda1 ordering to the eig output
            out = []
            used = set()
            for i in range(2):
                j = min(
                    (jj for jj in range(2) if jj not in used),
                    key=lambda jj: abs(second[jj][0] - lam1[i]),
                )
                used.add(j)
                out.append(
                    ExponentAsymptotics(
                        h.class_indices[i],
                        f0,
                        lam1[i],
                        second[j][1],
                        "plus/minus pair, principal square root",
                    )
                )
            return out
        return [
            ExponentAsymptotics(
                h.class_indices[i], f0, lam1[i], None,
                "plus/minus pair, principal square root",
            )
            for i in range(2)
        ]

    # dimension > 2: outside the closed forms
    note = "class dimension > 2: numerical eigenvalues"
    if h1_zero and h.h2 is not None:
        lam2 = np.linalg.eigvals(h.h2)
        return [
            ExponentAsymptotics(h.class_indices[i], f0, 0.0, lam2[i], note)
            for i in range(h.dim)
        ]
    lam1 = np.linalg.eigvals(h.h1)
    return [
        ExponentAsymptotics(h.class_indices[i], f0, lam1[i], None, note)
        for i in range(h.dim)
    ]


@dataclass(frozen=True, eq=False)
class EpReport:
    """Verdict of the first-order exceptional-point criterion for one pair."""

    verdict: bool
    pair: tuple
    resonant_frequency: int
    vanishing: str | None        # "ij", "ji", or None
    witness_ij: complex
    witness_ji: complex
    tol: float

    def to_json(self) -> dict:
        return {
            "pair": [int(self.pair[0]), int(self.pair[1])],
            "n": int(self.resonant_frequency),
            "verdict": bool(self.verdict),
            "vanishing": self.vanishing,
            "witnesses": {
                "ij": [float(np.real(self.witness_ij)), float(np.imag(self.witness_ij))],
                "ji": [float(np.real(self.witness_ji)), float(np.imag(self.witness_ji))],
            },
        }


def detect_first_order_ep(
    family: CoefficientFamily,
    folding: FoldingResult | None = None,
    tol_ep: float | None = None,
) -> list:
    """Apply the first-order criterion to every pair in every repeated class.

    Requires a mean-zero first-order modulation.  The verdict is an
    exclusive-or: exactly one of the two resonant entries must vanish.
    """
    a1 = family.perturbation(1)
    norm = max(a1.max_abs(), 1e-30)
    if np.abs(a1.coeff(0)).max() > 1e-12 * norm:
        raise ConstantModulationPresent(
            "the first-order modulation has a constant Fourier part; the "
            "criterion assumes it vanishes"
        )
    if folding is None:
        folding = fold_constant_order(family.a0_diag(), family.period)
    tol = 1e-10 * norm if tol_ep is None else tol_ep
    ns = folding.folding_numbers
    reports = []
    for members in folding.multiple_classes():
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                i, j = members[a], members[b]
                nij = int(ns[i] - ns[j])
                wij = a1.coeff(nij)[i, j]
                wji = a1.coeff(-nij)[j, i]
                zij = bool(abs(wij) < tol)
                zji = bool(abs(wji) < tol)
                verdict = zij != zji
                vanishing = "ij" if (verdict and zij) else ("ji" if verdict else None)
                reports.append(
                    EpReport(verdict, (i, j), nij, vanishing,
                             complex(wij), complex(wji), float(tol))
                )
    return reports


def conjugate_pairing_check(exponents, period: float, tol: float = 1e-8) -> bool:
    """True iff the multiset is conjugation-invariant modulo 2*pi*i/T.

    Holds for any system that a constant transform turns into one with
    real coefficients.
    """
    remaining = list(exponents)
    while remaining:
        f = remaining.pop()
        target = np.conj(f)
        best = None
        best_d = math.inf
        for idx, g in enumerate(remaining):
            d = cylinder_distance(complex(target), complex(g), period)
            if d < best_d:
                best, best_d = idx, d
        if best_d < tol:
            remaining.pop(best)
        elif cylinder_distance(complex(target), complex(f), period) < tol:
            continue  # self-conjugate modulo the zone height
        else:
            return False
    return True


def exponent_asymptotics(expansion, tol: float | None = None) -> list:
    """Per-index asymptotics for all classes of an expansion."""
    folding = expansion.folding
    f = list(expansion.f)
    out = []
    for members in folding.classes:
        h = effective_hamiltonian(f, members, tol)
        out.extend(perturb_exponents(h))
    return sorted(out, key=lambda e: e.index)
