"""nldlab: a desk-scale laboratory for mass conservation in nonlinear diffusion.

Subpackages map to the main concerns: exponent algebra (`regimes`), exact
solutions (`closed_forms`), the radial finite-volume solver (`solver`), the
fractional Laplacian toolbox (`fractional`), post-processing (`diagnostics`),
parameter-limit scans (`limits`) and the command-line driver (`cli`).
"""

from .specs import EquationSpec, Family
from .regimes import (
    Regime,
    RegimeReport,
    SimilarityExponents,
    anisotropic_exponents,
    classify,
    critical_exponent,
    dnle_exponents,
    similarity_exponents,
)

__version__ = "0.1.0"

__all__ = [
    "EquationSpec",
    "Family",
    "Regime",
    "RegimeReport",
    "SimilarityExponents",
    "anisotropic_exponents",
    "classify",
    "critical_exponent",
    "dnle_exponents",
    "similarity_exponents",
    "__version__",
]
