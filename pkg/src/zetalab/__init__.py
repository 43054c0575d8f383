"""zetalab: exact p-adic special values of F-gauges."""

from .bockstein import BocksteinError, EndoComplex, EndoModule, bockstein_char, stable_bockstein_char, uk_valuation
from .cli import __version__, main
from .gauge import (
    DieudonneGauge,
    FilteredTorsionGauge,
    FiltrationLevel,
    GaugeError,
    GaugeSpec,
    HodgeTable,
    Summand,
    Tier,
    TorsionGauge,
)
from .isocrystal import DieudonneMatrix, IsocrystalCharPoly, IsocrystalError, slope_decomposition
from .padic_core import FpModule, PAdicContext, PAdicError, QMatrix, RatPolynomial, ZetalabError
from .schema import InputDocument, InputError, MatrixDocument, UnresolvedNameError
from .zeta import ZetaError, ZetaFunction, artin_tate_check, verify_theorem, zeta_from_gauge

__all__ = [
    "__version__",
    "main",
    "ZetalabError",
    "PAdicError",
    "BocksteinError",
    "IsocrystalError",
    "GaugeError",
    "ZetaError",
    "InputError",
    "UnresolvedNameError",
    "PAdicContext",
    "QMatrix",
    "RatPolynomial",
    "FpModule",
    "EndoModule",
    "EndoComplex",
    "bockstein_char",
    "stable_bockstein_char",
    "uk_valuation",
    "IsocrystalCharPoly",
    "DieudonneMatrix",
    "slope_decomposition",
    "HodgeTable",
    "DieudonneGauge",
    "TorsionGauge",
    "FilteredTorsionGauge",
    "FiltrationLevel",
    "Summand",
    "Tier",
    "GaugeSpec",
    "ZetaFunction",
    "zeta_from_gauge",
    "verify_theorem",
    "artin_tate_check",
    "InputDocument",
    "MatrixDocument",
]
