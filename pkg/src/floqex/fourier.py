"""Exact arithmetic on finite Fourier series of matrix-valued periodic functions.

A series is stored sparsely as a map from the integer frequency index m to
the (complex) coefficient of exp(i*2*pi*m*t/T).  All operations are exact
for finite series: products are finite convolutions, never truncations.
"""

from __future__ import annotations

import numpy as np

from .errors import BandwidthExceeded, DimensionMismatch, PeriodMismatch

# Coefficients whose largest entry falls below DROP_REL times the largest
# entry of the whole series are treated as rounding dust and removed.
DROP_REL = 1e-14
DEFAULT_BANDWIDTH_CAP = 256
PERIOD_RTOL = 1e-12


def periods_equal(t1: float, t2: float) -> bool:
    return abs(t1 - t2) <= PERIOD_RTOL * max(abs(t1), abs(t2))


def _as_coeff_array(value, dim: int) -> np.ndarray:
    arr = np.asarray(value, dtype=complex)
    if arr.shape != (dim, dim):
        raise DimensionMismatch(
            f"coefficient shape {arr.shape} does not match dim {dim}"
        )
    return arr


class FourierMatrix:
    """Finite Fourier series of a T-periodic N x N matrix function.

    Immutable after construction; the coefficient arrays are frozen.
    """

    __slots__ = ("dim", "period", "coeffs", "bandwidth_cap")

    def __init__(self, dim, period, coeffs=None, bandwidth_cap=DEFAULT_BANDWIDTH_CAP):
        if dim <= 0:
            raise DimensionMismatch("dim must be a positive integer")
        if period <= 0:
            raise ValueError("period must be positive")
        self.dim = int(dim)
        self.period = float(period)
        self.bandwidth_cap = int(bandwidth_cap)
        cleaned = {}
        if coeffs:
            arrays = {int(m): _as_coeff_array(c, self.dim) for m, c in coeffs.items()}
            scale = max((np.abs(a).max() for a in arrays.values()), default=0.0)
            tol = DROP_REL * scale
            for m, a in arrays.items():
                if np.abs(a).max() > tol and np.abs(a).max() > 0.0:
                    if abs(m) > self.bandwidth_cap:
                        raise BandwidthExceeded(
                            f"frequency {m} exceeds cap {self.bandwidth_cap}"
                        )
                    a = a.copy()
                    a.flags.writeable = False
                    cleaned[m] = a
        self.coeffs = cleaned

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, dim, period, bandwidth_cap=DEFAULT_BANDWIDTH_CAP):
        return cls(dim, period, {}, bandwidth_cap)

    @classmethod
    def constant(cls, matrix, period, bandwidth_cap=DEFAULT_BANDWIDTH_CAP):
        matrix = np.asarray(matrix, dtype=complex)
        return cls(matrix.shape[0], period, {0: matrix}, bandwidth_cap)

    # -- basic queries ------------------------------------------------

    def coeff(self, m: int) -> np.ndarray:
        c = self.coeffs.get(int(m))
        if c is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return c

    def frequencies(self):
        return sorted(self.coeffs)

    @property
    def bandwidth(self) -> int:
        return max((abs(m) for m in self.coeffs), default=0)

    def max_abs(self) -> float:
        return max((np.abs(c).max() for c in self.coeffs.values()), default=0.0)

    def is_real_valued(self, tol=1e-12) -> bool:
        """c_{-m} == conj(c_m) entrywise, so the time signal is real."""
        scale = max(1.0, self.max_abs())
        for m, c in self.coeffs.items():
            if np.abs(self.coeff(-m) - np.conj(c)).max() > tol * scale:
                return False
        return True

    # -- arithmetic ---------------------------------------------------

    def _check_compatible(self, other: "FourierMatrix"):
        if self.dim != other.dim:
            raise DimensionMismatch(f"{self.dim} != {other.dim}")
        if not periods_equal(self.period, other.period):
            raise PeriodMismatch(f"{self.period} != {other.period}")

    def __add__(self, other: "FourierMatrix") -> "FourierMatrix":
        self._check_compatible(other)
        out = {m: c.copy() for m, c in self.coeffs.items()}
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return FourierMatrix(self.dim, self.period, out, self.bandwidth_cap)

    def __sub__(self, other: "FourierMatrix") -> "FourierMatrix":
        return self + (other * (-1.0))

    def __mul__(self, scalar) -> "FourierMatrix":
        return FourierMatrix(
            self.dim,
            self.period,
            {m: c * scalar for m, c in self.coeffs.items()},
            self.bandwidth_cap,
        )

    __rmul__ = __mul__

    def right_const(self, matrix) -> "FourierMatrix":
        """Series times a constant matrix."""
        matrix = np.asarray(matrix, dtype=complex)
        return FourierMatrix(
            self.dim,
            self.period,
            {m: c @ matrix for m, c in self.coeffs.items()},
            self.bandwidth_cap,
        )

    def left_const(self, matrix) -> "FourierMatrix":
        """Constant matrix times the series."""
        matrix = np.asarray(matrix, dtype=complex)
        return FourierMatrix(
            self.dim,
            self.period,
            {m: matrix @ c for m, c in self.coeffs.items()},
            self.bandwidth_cap,
        )

    def trace_series(self) -> "ScalarFourierSeries":
        return ScalarFourierSeries(
            self.period, {m: np.trace(c) for m, c in self.coeffs.items()}
        )

    def __repr__(self):
        return (
            f"FourierMatrix(dim={self.dim}, period={self.period}, "
            f"freqs={self.frequencies()})"
        )

    # -- serialization ------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "period": self.period,
            "coeffs": [
                {
                    "m": m,
                    "re": np.real(self.coeffs[m]).tolist(),
                    "im": np.imag(self.coeffs[m]).tolist(),
                }
                for m in self.frequencies()
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "FourierMatrix":
        coeffs = {
            int(entry["m"]): np.asarray(entry["re"], dtype=float)
            + 1j * np.asarray(entry["im"], dtype=float)
            for entry in data["coeffs"]
        }
        return cls(int(data["dim"]), float(data["period"]), coeffs)


def fm_multiply(a: FourierMatrix, b: FourierMatrix) -> FourierMatrix:
    """Pointwise product of two series, as an exact finite convolution."""
    a._check_compatible(b)
    cap = min(a.bandwidth_cap, b.bandwidth_cap)
    out: dict[int, np.ndarray] = {}
    for ma, ca in a.coeffs.items():
        for mb, cb in b.coeffs.items():
            m = ma + mb
            if abs(m) > cap:
                raise BandwidthExceeded(
                    f"product frequency {m} exceeds cap {cap}; raise the cap "
                    "rather than truncate"
                )
            prod = ca @ cb
            if m in out:
                out[m] = out[m] + prod
            else:
                out[m] = prod
    return FourierMatrix(a.dim, a.period, out, cap)


def fm_differentiate(a: FourierMatrix) -> FourierMatrix:
    """Time derivative; the constant term drops out."""
    omega = 2.0 * np.pi / a.period
    return FourierMatrix(
        a.dim,
        a.period,
        {m: (1j * omega * m) * c for m, c in a.coeffs.items() if m != 0},
        a.bandwidth_cap,
    )


def fm_evaluate(a: FourierMatrix, t: float) -> np.ndarray:
    """Value of the series at time t."""
    omega = 2.0 * np.pi / a.period
    out = np.zeros((a.dim, a.dim), dtype=complex)
    for m, c in a.coeffs.items():
        out = out + c * np.exp(1j * omega * m * t)
    return out


class ScalarFourierSeries:
    """Finite Fourier series of a scalar T-periodic function."""

    __slots__ = ("period", "coeffs")

    def __init__(self, period, coeffs=None):
        if period <= 0:
            raise ValueError("period must be positive")
        self.period = float(period)
        cleaned = {}
        if coeffs:
            vals = {int(m): complex(c) for m, c in coeffs.items()}
            scale = max((abs(v) for v in vals.values()), default=0.0)
            tol = DROP_REL * scale
            for m, v in vals.items():
                if abs(v) > tol and abs(v) > 0.0:
                    cleaned[m] = v
        self.coeffs = cleaned

    @classmethod
    def zero(cls, period):
        return cls(period, {})

    @classmethod
    def cosine(cls, period, freq: int, amplitude=1.0, phase=0.0):
        """amplitude * cos(2*pi*freq*t/T + phase)."""
        half = 0.5 * amplitude
        if freq == 0:
            return cls(period, {0: amplitude * np.cos(phase)})
        return cls(
            period,
            {freq: half * np.exp(1j * phase), -freq: half * np.exp(-1j * phase)},
        )

    def coeff(self, m: int) -> complex:
        return self.coeffs.get(int(m), 0.0 + 0.0j)

    def frequencies(self):
        return sorted(self.coeffs)

    @property
    def bandwidth(self) -> int:
        return max((abs(m) for m in self.coeffs), default=0)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def is_real_valued(self, tol=1e-12) -> bool:
        scale = max(1.0, self.max_abs())
        return all(
            abs(self.coeff(-m) - np.conj(c)) <= tol * scale
            for m, c in self.coeffs.items()
        )

    def _check_period(self, other):
        if not periods_equal(self.period, other.period):
            raise PeriodMismatch(f"{self.period} != {other.period}")

    def __add__(self, other):
        if isinstance(other, ScalarFourierSeries):
            self._check_period(other)
            out = dict(self.coeffs)
            for m, v in other.coeffs.items():
                out[m] = out.get(m, 0.0) + v
            return ScalarFourierSeries(self.period, out)
        out = dict(self.coeffs)
        out[0] = out.get(0, 0.0) + complex(other)
        return ScalarFourierSeries(self.period, out)

    def __sub__(self, other):
        return self + (other * (-1.0))

    def __mul__(self, other):
        if isinstance(other, ScalarFourierSeries):
            self._check_period(other)
            out: dict[int, complex] = {}
            for ma, va in self.coeffs.items():
                for mb, vb in other.coeffs.items():
                    out[ma + mb] = out.get(ma + mb, 0.0) + va * vb
            return ScalarFourierSeries(self.period, out)
        return ScalarFourierSeries(
            self.period, {m: v * other for m, v in self.coeffs.items()}
        )

    __rmul__ = __mul__

    def differentiate(self) -> "ScalarFourierSeries":
        omega = 2.0 * np.pi / self.period
        return ScalarFourierSeries(
            self.period,
            {m: (1j * omega * m) * v for m, v in self.coeffs.items() if m != 0},
        )

    def evaluate(self, t: float) -> complex:
        omega = 2.0 * np.pi / self.period
        return sum(
            (v * np.exp(1j * omega * m * t) for m, v in self.coeffs.items()),
            start=0.0 + 0.0j,
        )

    def times_matrix(self, matrix, dim=None) -> FourierMatrix:
        """Embed the scalar series as series * (constant matrix)."""
        matrix = np.asarray(matrix, dtype=complex)
        return FourierMatrix(
            matrix.shape[0],
            self.period,
            {m: v * matrix for m, v in self.coeffs.items()},
        )

    def to_json(self) -> list:
        return [
            {"m": m, "re": float(np.real(self.coeffs[m])), "im": float(np.imag(self.coeffs[m]))}
            for m in self.frequencies()
        ]

    @classmethod
    def from_json(cls, period, entries) -> "ScalarFourierSeries":
        return cls(
            period,
            {int(e["m"]): float(e.get("re", 0.0)) + 1j * float(e.get("im", 0.0)) for e in entries},
        )

    def __repr__(self):
        return f"ScalarFourierSeries(period={self.period}, freqs={self.frequencies()})"
