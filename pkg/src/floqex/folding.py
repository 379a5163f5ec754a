"""Folding of complex exponents into the first (temporal) Brillouin zone.

The canonical strip is Im(z) in [-pi/T, pi/T), left edge included.  A value
whose imaginary part lands within ``tol`` of the right edge is wrapped down
to the left edge (one extra fold), so behavior at a zone boundary is
deterministic.  The same helper backs both the expansion code and the
direct-integration oracle, keeping a single convention end to end.
"""

from __future__ import annotations

import math


def fold_imag(im: float, period: float, tol: float = 0.0) -> tuple[float, int]:
    """Return (folded_im, n) with im == folded_im + n * (2*pi/period).

    folded_im lies in [-pi/T, pi/T) up to ``tol`` slack at the left edge
    when the wrap-down rule fires.
    """
    omega = 2.0 * math.pi / period
    edge = math.pi / period
    n = math.floor((im + edge) / omega)
    folded = im - n * omega
    # Rounding can land a hair outside on either side; repair first.
    if folded >= edge:
        folded -= omega
        n += 1
    elif folded < -edge - tol:
        folded += omega
        n -= 1
    # Wrap-down rule at the right edge.
    if tol > 0.0 and (edge - folded) <= tol:
        folded -= omega
        n += 1
    return folded, n


def fold_complex(z: complex, period: float, tol: float = 0.0) -> tuple[complex, int]:
    """Fold the imaginary part; the real part is untouched."""
    folded, n = fold_imag(z.imag, period, tol)
    return complex(z.real, folded), n


def cylinder_distance(f: complex, g: complex, period: float) -> float:
    """|Re difference| plus the wrapped |Im difference|.

    Exponents are defined modulo 2*pi*i/T, so the imaginary axis is a
    circle; the real axis is not periodic.
    """
    omega = 2.0 * math.pi / period
    dre = abs(f.real - g.real)
    dim = f.imag - g.imag
    wrapped = min(abs(dim + k * omega) for k in (-1, 0, 1))
    return dre + wrapped
