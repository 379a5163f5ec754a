import math

import numpy as np
import pytest

from floqex.core import CoefficientFamily, fold_constant_order
from floqex.folding import cylinder_distance
from floqex.fourier import FourierMatrix


def random_fourier_matrix(rng, dim, period, bandwidth=2, scale=0.4, real_valued=False):
    coeffs = {}
    for m in range(1, bandwidth + 1):
        c = scale * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
        coeffs[m] = c
        coeffs[-m] = np.conj(c) if real_valued else scale * (
            rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        )
    if not real_valued:
        coeffs[0] = scale * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    return FourierMatrix(dim, period, coeffs)


def random_family(rng, dim=None, orders=2, bandwidth=2, zero_mean=False, min_gap=0.05):
    """Random admissible family with well-separated folded entries."""
    dim = dim or int(rng.integers(2, 5))
    omega = 0.6 + rng.random()
    period = 2.0 * math.pi / omega
    for _ in range(100):
        diag = 0.5 * rng.standard_normal(dim) + 1j * 1.5 * rng.standard_normal(dim)
        folded = fold_constant_order(np.diag(diag), period)
        ok = all(
            cylinder_distance(folded.f0[i], folded.f0[j], period) > min_gap
            for i in range(dim)
            for j in range(i + 1, dim)
        )
        # keep entries away from the zone edge too
        edge = math.pi / period
        ok = ok and all(edge - abs(z.imag) > min_gap for z in folded.f0)
        if ok:
            break
    perts = []
    for _ in range(orders):
        p = random_fourier_matrix(rng, dim, period, bandwidth)
        if zero_mean and 0 in p.coeffs:
            coeffs = {m: c for m, c in p.coeffs.items() if m != 0}
            p = FourierMatrix(dim, period, coeffs)
        perts.append(p)
    return CoefficientFamily(np.diag(diag), tuple(perts), period)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
