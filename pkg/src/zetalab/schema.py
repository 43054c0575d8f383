"""
Input documents for the command line.

Rationals travel as integers or strings such as "3/5"; floats are rejected so
that exactness survives serialization.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, StrictInt, StrictStr, field_validator

try:
    from .bockstein import EndoModule
    from .gauge import (
        DieudonneGauge,
        FilteredTorsionGauge,
        FiltrationLevel,
        GaugeSpec,
        HodgeTable,
        Summand,
        Tier,
        TorsionGauge,
        gauge_from_dieudonne,
    )
    from .isocrystal import IsocrystalCharPoly, SlopeDatum, dm_lattice
    from .padic_core import PAdicContext, Presentation, QMatrix, RatPolynomial, ZetalabError, to_fraction
    from .zeta import SurfaceData
except ImportError:
    from bockstein import EndoModule
    from gauge import (
        DieudonneGauge,
        FilteredTorsionGauge,
        FiltrationLevel,
        GaugeSpec,
        HodgeTable,
        Summand,
        Tier,
        TorsionGauge,
        gauge_from_dieudonne,
    )
    from isocrystal import IsocrystalCharPoly, SlopeDatum, dm_lattice
    from padic_core import PAdicContext, Presentation, QMatrix, RatPolynomial, ZetalabError, to_fraction
    from zeta import SurfaceData

Rational = Union[StrictInt, StrictStr]


class InputError(ZetalabError):
    pass


class UnresolvedNameError(ZetalabError):
    pass


def _check_rational(value: Rational) -> Rational:
    if isinstance(value, str):
        try:
            Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not an exact rational: '{value}'")
    return value


def _matrix(rows: List[List[Rational]], ncols: Optional[int] = None) -> QMatrix:
    return QMatrix.of([[to_fraction(x) for x in row] for row in rows], ncols)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HodgeEntry(_Strict):
    i: int = Field(..., description="Hodge index i")
    j: int = Field(..., description="Hodge index j")
    h: int = Field(..., ge=0, description="Hodge number h^{i,j}")


def _hodge(entries: Optional[List[HodgeEntry]]) -> Optional[HodgeTable]:
    if entries is None:
        return None
    return HodgeTable(tuple(((e.i, e.j), e.h) for e in entries))


class _SummandBase(_Strict):
    degree: int = Field(0, description="Cohomological degree of the summand")
    twist: int = Field(0, description="Breuil-Kisin twist applied to this summand")
    hodge: Optional[List[HodgeEntry]] = Field(None, description="Declared Hodge numbers, untwisted")
    label: str = Field("", description="Free-form name used in diagnostics")


class CharPolySummand(_SummandBase):
    tier: Literal["charpoly"]
    coefficients: List[Rational] = Field(..., min_length=1, description="Ascending coefficients of det(1 - tF^n)")

    @field_validator("coefficients")
    @classmethod
    def check_exact(cls, v: List[Rational]) -> List[Rational]:
        return [_check_rational(x) for x in v]

    def to_summand(self, ctx: PAdicContext) -> Summand:
        ic = IsocrystalCharPoly(ctx, RatPolynomial(tuple(to_fraction(c) for c in self.coefficients)))
        return Summand(Tier.CHARPOLY, self.degree, ic, self.twist, _hodge(self.hodge), self.label)


class SlopeEntry(_Strict):
    slope: Rational = Field(..., description="Slope as an exact rational")
    multiplicity: int = Field(..., gt=0, description="Multiplicity of the slope")

    @field_validator("slope")
    @classmethod
    def check_exact(cls, v: Rational) -> Rational:
        return _check_rational(v)


class SlopesSummand(_SummandBase):
    tier: Literal["slopes"]
    slopes: List[SlopeEntry] = Field(..., min_length=1, description="Slope multiset")

    def to_summand(self, ctx: PAdicContext) -> Summand:
        data = tuple(SlopeDatum(to_fraction(e.slope), e.multiplicity) for e in self.slopes)
        return Summand(Tier.SLOPES, self.degree, data, self.twist, _hodge(self.hodge), self.label)


class DieudonneSummand(_SummandBase):
    tier: Literal["dieudonne"]
    t_rank: int = Field(..., ge=0, description="Rank of the T part (unit elementary divisors)")
    w_rank: int = Field(..., ge=0, description="Rank of the W part (elementary divisor p)")
    frobenius: List[List[Rational]] = Field(..., description="Matrix of F, rows; T generators first")

    def _frobenius(self) -> QMatrix:
        return _matrix(self.frobenius, self.t_rank + self.w_rank)

    def to_summand(self, ctx: PAdicContext) -> Summand:
        g = DieudonneGauge(ctx, self.t_rank, self.w_rank, self._frobenius(), self.degree)
        return Summand.of_gauge(g, self.twist, _hodge(self.hodge), self.label)


class TorsionSummand(DieudonneSummand):
    tier: Literal["torsion"]
    modulus_exponent: int = Field(..., ge=1, description="m with p^m killing the summand")

    def to_summand(self, ctx: PAdicContext) -> Summand:
        g = TorsionGauge(ctx, self.t_rank, self.w_rank, self._frobenius(), self.degree, self.modulus_exponent)
        return Summand.of_gauge(g, self.twist, _hodge(self.hodge), self.label)


class LevelModel(_Strict):
    exponents: List[int] = Field(..., description="Fil^r as Z/p^e1 + Z/p^e2 + ..., generators in this order")
    can: List[List[Rational]] = Field(..., description="can: Fil^r -> M^u on generators, rows indexed by M^u")
    phi: List[List[Rational]] = Field(..., description="phi: Fil^r -> M^u on generators, rows indexed by M^u")


class FilteredTorsionSummand(_SummandBase):
    tier: Literal["filtered_torsion"]
    exponents: List[int] = Field(..., min_length=1, description="M^u as Z/p^e1 + Z/p^e2 + ...")
    frobenius: List[List[Rational]] = Field(..., description="phi on Fil^0 = M^u, rows")
    levels: List[LevelModel] = Field(default_factory=list, description="Fil^1, Fil^2, ... up to the stable level")
    modulus_exponent: int = Field(..., ge=1, description="m with p^m killing the summand")

    def to_summand(self, ctx: PAdicContext) -> Summand:
        size = len(self.exponents)
        levels = tuple(
            FiltrationLevel(
                Presentation.torsion(level.exponents, ctx),
                _matrix(level.can, len(level.exponents)),
                _matrix(level.phi, len(level.exponents)),
            )
            for level in self.levels
        )
        g = FilteredTorsionGauge(
            ctx,
            Presentation.torsion(self.exponents, ctx),
            _matrix(self.frobenius, size),
            levels,
            self.degree,
            self.modulus_exponent,
        )
        return Summand.of_gauge(g, self.twist, _hodge(self.hodge), self.label)


class LatticeSummand(_SummandBase):
    tier: Literal["lattice"]
    s: int = Field(..., ge=0, description="Numerator of the slope s/r")
    r: int = Field(..., gt=0, description="Denominator of the slope s/r")

    def to_summand(self, ctx: PAdicContext) -> Summand:
        g = gauge_from_dieudonne(dm_lattice(self.s, self.r, ctx), self.degree)
        return Summand.of_gauge(g, self.twist, _hodge(self.hodge), self.label or f"E_{self.s}/{self.r}")


SummandModel = Annotated[
    Union[CharPolySummand, SlopesSummand, DieudonneSummand, TorsionSummand, FilteredTorsionSummand, LatticeSummand],
    Field(discriminator="tier"),
]


class GaugeModel(_Strict):
    summands: List[SummandModel] = Field(..., min_length=1, description="Direct summands")
    shift: int = Field(0, description="Global shift [k]")
    twist: int = Field(0, description="Global Breuil-Kisin twist {i}")
    hodge: Optional[List[HodgeEntry]] = Field(None, description="Hodge table of the vector-bundle part")

    def to_spec(self, ctx: PAdicContext) -> GaugeSpec:
        summands = tuple(s.to_summand(ctx) for s in self.summands)
        return GaugeSpec(ctx, summands, self.shift, self.twist, _hodge(self.hodge))


class SurfaceModel(_Strict):
    gauge: str = Field(..., description="Name of the gauge holding the surface's zeta factors")
    gram: List[List[StrictInt]] = Field(..., min_length=1, description="Intersection matrix D_i.D_j")
    ns_torsion_order: int = Field(1, ge=1, description="Order of the torsion of NS(X)")
    picard_variety_dim: int = Field(0, ge=0, description="Dimension of the Picard variety")
    chi_O: int = Field(1, description="chi(X, O_X)")

    def to_surface(self) -> SurfaceData:
        return SurfaceData(_matrix(self.gram), self.ns_torsion_order, self.picard_variety_dim, self.chi_O)


class InputDocument(_Strict):
    schema_version: Literal["zetalab/input-v1"] = Field(..., description="Input schema version")
    p: int = Field(..., ge=2, description="Residue characteristic")
    n: int = Field(1, ge=1, description="q = p^n")
    gauges: Dict[str, GaugeModel] = Field(default_factory=dict, description="Named gauge descriptions")
    surfaces: Dict[str, SurfaceModel] = Field(default_factory=dict, description="Named surface data")

    def context(self) -> PAdicContext:
        try:
            return PAdicContext(self.p, self.n)
        except ZetalabError as e:
            raise InputError(f"Invalid field: {e}")

    def gauge(self, name: str) -> GaugeSpec:
        if name not in self.gauges:
            raise UnresolvedNameError(f"unknown gauge '{name}'")
        try:
            return self.gauges[name].to_spec(self.context())
        except InputError:
            raise
        except ZetalabError as e:
            raise InputError(f"Failed to parse gauge '{name}': {e}")

    def surface(self, name: str) -> SurfaceModel:
        if name not in self.surfaces:
            raise UnresolvedNameError(f"unknown surface '{name}'")
        surface = self.surfaces[name]
        if surface.gauge not in self.gauges:
            raise UnresolvedNameError(f"surface '{name}' refers to unknown gauge '{surface.gauge}'")
        return surface


class MatrixDocument(_Strict):
    schema_version: Literal["zetalab/matrix-v1"] = Field(..., description="Matrix schema version")
    p: int = Field(..., ge=2, description="Residue characteristic")
    matrix: List[List[Rational]] = Field(..., min_length=1, description="theta on generators, rows")
    relations: Optional[List[List[Rational]]] = Field(
        None, description="Relation matrix, one row per generator; columns are relations"
    )

    def to_endo_module(self) -> EndoModule:
        try:
            ctx = PAdicContext(self.p)
            theta = _matrix(self.matrix)
            if self.relations is None:
                return EndoModule.free(theta, ctx)
            relations = _matrix(self.relations)
            return EndoModule.of(Presentation(theta.nrows, relations), theta, ctx)
        except ZetalabError as e:
            raise InputError(f"Failed to parse matrix document: {e}")
