"""Ground truth by direct integration of the fundamental solution.

A fixed-step RK4 march over one period gives the monodromy matrix; its
eigenvalues give the exponents.  Everything here is deliberately
independent of the expansion code so the two routes can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import StepCountTooSmall
from .folding import cylinder_distance, fold_complex

DEFAULT_STEPS = 4096


@dataclass(frozen=True, eq=False)
class Monodromy:
    x_at_period: np.ndarray
    period: float
    step_count: int
    richardson_error_estimate: float


def _rk4_march(evaluator, period: float, steps: int) -> np.ndarray:
    n = np.asarray(evaluator(0.0)).shape[0]
    x = np.eye(n, dtype=complex)
    h = period / steps
    for i in range(steps):
        t = i * h
        a1 = np.asarray(evaluator(t), dtype=complex)
        a2 = np.asarray(evaluator(t + 0.5 * h), dtype=complex)
        a4 = np.asarray(evaluator(t + h), dtype=complex)
        k1 = a1 @ x
        k2 = a2 @ (x + 0.5 * h * k1)
        k3 = a2 @ (x + 0.5 * h * k2)
        k4 = a4 @ (x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def integrate_monodromy(evaluator, period: float, steps: int = DEFAULT_STEPS) -> Monodromy:
    """March dX/dt = A(t) X from the identity over one period.

    The error estimate comes from a half-resolution re-run:
    ||X_h - X_2h|| / 15 for a fourth-order method.
    """
    if steps < 64 or steps % 2 != 0:
        raise StepCountTooSmall("steps must be an even integer >= 64")
    x_fine = _rk4_march(evaluator, period, steps)
    x_coarse = _rk4_march(evaluator, period, steps // 2)
    est = float(np.linalg.norm(x_fine - x_coarse, 2)) / 15.0
    return Monodromy(x_fine, period, steps, est)


@dataclass(frozen=True, eq=False)
class OracleExponents:
    values: np.ndarray
    period: float
    near_defective: bool

    def __iter__(self):
        return iter(self.values)


def exponents_from_monodromy(m: Monodromy, period: float | None = None) -> OracleExponents:
    """Exponents from the monodromy eigenvalues, folded into the zone.

    The logarithm branch arg in [-pi, pi) matches the folding convention;
    an eigenvalue on the negative real axis maps to Im f = -pi/T exactly.
    A near-repeated monodromy spectrum sets ``near_defective`` instead of
    failing, since the exponents themselves are still meaningful.
    """
    period = m.period if period is None else period
    xi = np.linalg.eigvals(m.x_at_period)
    sep = math.inf
    for i in range(len(xi)):
        for j in range(i + 1, len(xi)):
            sep = min(sep, abs(xi[i] - xi[j]))
    near_defective = sep < 1e-12
    values = np.empty(len(xi), dtype=complex)
    for i, z in enumerate(xi):
        arg = float(np.angle(z))
        if arg >= math.pi:  # numpy returns (-pi, pi]; move the edge down
            arg = -math.pi
        f = math.log(abs(z)) / period + 1j * arg / period
        values[i], _ = fold_complex(f, period)
    order = np.lexsort((values.real, values.imag))
    return OracleExponents(values[order], period, near_defective)


@dataclass(frozen=True, eq=False)
class ExponentMatch:
    pairing: dict            # oracle index -> asymptotic index
    residuals: np.ndarray    # per oracle index, cylinder distance to its match
    max_residual: float


def compare_exponents(asym, orc: OracleExponents, period: float) -> ExponentMatch:
    """Minimum-cost matching of two exponent lists on the cylinder."""
    avals = list(asym)
    ovals = list(orc.values)
    if len(avals) != len(ovals):
        raise ValueError("exponent lists must have equal length")
    n = len(avals)
    cost = np.empty((n, n), dtype=float)
    for i in range(n):
        for j in range(n):
            cost[i, j] = cylinder_distance(complex(ovals[i]), complex(avals[j]), period)
    rows, cols = linear_sum_assignment(cost)
    pairing = {int(r): int(c) for r, c in zip(rows, cols)}
    residuals = np.array([cost[r, c] for r, c in zip(rows, cols)])
    return ExponentMatch(pairing, residuals, float(residuals.max(initial=0.0)))


def liouville_residual(m: Monodromy, trace_integral: complex) -> float:
    """Relative defect of det X(T) = exp(integral of trace A).

    For a finite Fourier family the trace integral over one period is the
    period times the constant trace coefficient, which is exact.
    """
    det = complex(np.linalg.det(m.x_at_period))
    expected = complex(np.exp(trace_integral))
    return abs(det - expected) / max(abs(expected), 1e-300)


def residual_slope(eps_list, residuals) -> float:
    """Least-squares slope of log residual against log eps."""
    x = np.log(np.asarray(eps_list, dtype=float))
    y = np.log(np.asarray(residuals, dtype=float))
    x = x - x.mean()
    return float((x @ (y - y.mean())) / (x @ x))
