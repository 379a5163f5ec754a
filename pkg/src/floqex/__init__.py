"""Asymptotic expansions of Floquet exponents for modulated linear systems.

The package computes order-by-order expansions of the exponent matrix and
the periodic reduction transform for families A0 + eps*A1(t) + ... with
diagonal constant order and finite Fourier modulations, classifies
first-order asymptotic exceptional points, and validates everything
against a direct-integration oracle.
"""

__version__ = "0.1.0"

from .core import (
    CoefficientFamily,
    FloquetExpansion,
    FoldingResult,
    expand_inductive,
    first_order_closed,
    fold_constant_order,
    fundamental_solution_series,
    second_order_entries,
)
from .fourier import (
    FourierMatrix,
    ScalarFourierSeries,
    fm_differentiate,
    fm_evaluate,
    fm_multiply,
)
from .models import (
    CapacitanceMatrix,
    DimerParams,
    HillSystem,
    OscillatorParams,
    build_dimer,
    build_hill_system,
    build_oscillator,
    classify_dimer_ep,
    classify_oscillator_ep,
)
from .oracle import (
    Monodromy,
    OracleExponents,
    compare_exponents,
    exponents_from_monodromy,
    integrate_monodromy,
)
from .spectral import (
    EffectiveHamiltonian,
    EpReport,
    conjugate_pairing_check,
    detect_first_order_ep,
    effective_hamiltonian,
    perturb_exponents,
    resonant_frequencies,
)

__all__ = [
    "__version__",
    "CoefficientFamily",
    "FloquetExpansion",
    "FoldingResult",
    "expand_inductive",
    "first_order_closed",
    "fold_constant_order",
    "fundamental_solution_series",
    "second_order_entries",
    "FourierMatrix",
    "ScalarFourierSeries",
    "fm_differentiate",
    "fm_evaluate",
    "fm_multiply",
    "CapacitanceMatrix",
    "DimerParams",
    "HillSystem",
    "OscillatorParams",
    "build_dimer",
    "build_hill_system",
    "build_oscillator",
    "classify_dimer_ep",
    "classify_oscillator_ep",
    "Monodromy",
    "OracleExponents",
    "compare_exponents",
    "exponents_from_monodromy",
    "integrate_monodromy",
    "EffectiveHamiltonian",
    "EpReport",
    "conjugate_pairing_check",
    "detect_first_order_ep",
    "effective_hamiltonian",
    "perturb_exponents",
    "resonant_frequencies",
]
