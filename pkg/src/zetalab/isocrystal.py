"""
Isocrystals over F_q, stored through det(1 - t F^n).

Slopes are read off the Newton polygon, simple objects E_{s/r} have
char poly 1 - p^s t^r, and for q = p explicit Dieudonne lattices are built
as matrices of F acting on columns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, List, Sequence

try:
    from .padic_core import (
        PAdicContext,
        QMatrix,
        RatPolynomial,
        ZetalabError,
        newton_slopes,
        root_multiplicity,
    )
except ImportError:
    from padic_core import (
        PAdicContext,
        QMatrix,
        RatPolynomial,
        ZetalabError,
        newton_slopes,
        root_multiplicity,
    )

logger = logging.getLogger(__name__)


class IsocrystalError(ZetalabError):
    pass


@dataclass(frozen=True)
class IsocrystalCharPoly:
    ctx: PAdicContext
    P: RatPolynomial

    def __post_init__(self):
        if self.P.coefficient(0) != 1:
            raise IsocrystalError(f"char poly must satisfy P(0) = 1, got {self.P}")

    @classmethod
    def of(cls, ctx: PAdicContext, *coefficients) -> "IsocrystalCharPoly":
        return cls(ctx, RatPolynomial.of(*coefficients))

    @property
    def dimension(self) -> int:
        return self.P.degree

    def direct_sum(self, other: "IsocrystalCharPoly") -> "IsocrystalCharPoly":
        if other.ctx != self.ctx:
            raise IsocrystalError("cannot add isocrystals over different fields")
        return IsocrystalCharPoly(self.ctx, self.P * other.P)

    def __str__(self) -> str:
        return str(self.P)


@dataclass(frozen=True)
class SlopeDatum:
    slope: Fraction
    multiplicity: int

    def __post_init__(self):
        object.__setattr__(self, "slope", Fraction(self.slope))
        if self.multiplicity <= 0:
            raise IsocrystalError(f"slope multiplicity must be positive, got {self.multiplicity}")

    def to_dict(self) -> dict:
        return {"slope": str(self.slope), "multiplicity": self.multiplicity}


def _require_prime_field(ctx: PAdicContext, what: str) -> None:
    if ctx.n != 1:
        raise IsocrystalError(f"{what} requires q = p (n = 1), got n = {ctx.n}")


@dataclass(frozen=True)
class DieudonneMatrix:
    """Matrix of F on a lattice, acting on column vectors; p A^-1 must be p-integral."""

    ctx: PAdicContext
    A: QMatrix

    def __post_init__(self):
        _require_prime_field(self.ctx, "a Dieudonne matrix")
        if self.A.nrows != self.A.ncols:
            raise IsocrystalError(f"Dieudonne matrix must be square, got shape {self.A.shape}")
        if not self.A.is_p_integral(self.ctx):
            raise IsocrystalError(f"F is not p-integral: {self.A}")
        if self.A.determinant() == 0:
            raise IsocrystalError("F must be injective (det F = 0)")
        if not self.A.inverse().scale(self.ctx.p).is_p_integral(self.ctx):
            raise IsocrystalError(f"pM is not contained in F(M) for F = {self.A}")

    @property
    def rank(self) -> int:
        return self.A.nrows

    def isocrystal(self) -> IsocrystalCharPoly:
        return IsocrystalCharPoly(self.ctx, self.A.reciprocal_charpoly())


def simple_charpoly(s: int, r: int, ctx: PAdicContext) -> IsocrystalCharPoly:
    """det(1 - tF) of E_{s/r}: 1 - p^s t^r."""
    if r <= 0:
        raise IsocrystalError(f"E_(s/r) needs r > 0, got r = {r}")
    if gcd(s, r) != 1:
        raise IsocrystalError(f"s and r must be coprime, got ({s}, {r})")
    _require_prime_field(ctx, "simple_charpoly")
    coefficients = [Fraction(0)] * (r + 1)
    coefficients[0] = Fraction(1)
    coefficients[r] = -ctx.power(s)
    return IsocrystalCharPoly(ctx, RatPolynomial(tuple(coefficients)))


def slope_decomposition(ic: IsocrystalCharPoly) -> List[SlopeDatum]:
    polygon = newton_slopes(ic.P, ic.ctx)
    return [SlopeDatum(v / ic.ctx.n, m) for v, m in polygon.multiplicities()]


def charpoly_from_slopes(slopes: Iterable[SlopeDatum], ctx: PAdicContext) -> IsocrystalCharPoly:
    """
    The char poly of the sum of simple isocrystals with the given slopes:
    each slope s/r of multiplicity m contributes (1 - q^s t^r)^(m/r).
    """
    P = RatPolynomial.one()
    for datum in slopes:
        s, r = datum.slope.numerator, datum.slope.denominator
        if datum.multiplicity % r:
            raise IsocrystalError(
                f"slope {datum.slope} needs a multiplicity divisible by {r}, got {datum.multiplicity}"
            )
        coefficients = [Fraction(0)] * (r + 1)
        coefficients[0] = Fraction(1)
        coefficients[r] = -ctx.q_power(s)
        P = P * RatPolynomial(tuple(coefficients)) ** (datum.multiplicity // r)
    return IsocrystalCharPoly(ctx, P)


def bk_twist(ic: IsocrystalCharPoly, i: int) -> IsocrystalCharPoly:
    """Breuil-Kisin twist {i}: P(t) -> P(q^-i t); slopes move by -i."""
    if i == 0:
        return ic
    return IsocrystalCharPoly(ic.ctx, ic.P.scale_variable(ic.ctx.q_power(-i)))


def is_effective(ic: IsocrystalCharPoly) -> bool:
    return all(d.slope >= 0 for d in slope_decomposition(ic))


def frobenius_eigenspace_dim(ic: IsocrystalCharPoly, m: int) -> int:
    """Multiplicity of q^m as a reciprocal root of P."""
    return root_multiplicity(ic.P, ic.ctx.q_power(m))[0]


def dm_lattice(s: int, r: int, ctx: PAdicContext) -> DieudonneMatrix:
    """
    A Dieudonne lattice in E_{s/r} for 0 <= s <= r.

    In the basis b_i = e_i / p^(s-i) (i <= s), b_i = e_i (i > s) of the standard
    action F(e_1) = p^s e_r, F(e_j) = e_(j-1), F cycles the basis and carries
    a factor p on exactly s of the r arrows: F(b_1) = p b_r, F(b_j) = p b_(j-1)
    for 2 <= j <= s, and F(b_j) = b_(j-1) otherwise. Column j of the result is F(b_(j+1)).
    """
    if r <= 0 or not 0 <= s <= r:
        raise IsocrystalError(f"dm_lattice needs 0 <= s <= r, got ({s}, {r})")
    if gcd(s, r) != 1:
        raise IsocrystalError(f"s and r must be coprime, got ({s}, {r})")
    _require_prime_field(ctx, "dm_lattice")
    rows = [[Fraction(0)] * r for _ in range(r)]
    for col in range(r):
        target = (col - 1) % r
        rows[target][col] = Fraction(ctx.p) if col < s else Fraction(1)
    logger.debug(f"dm_lattice({s},{r}) at p={ctx.p}")
    return DieudonneMatrix(ctx, QMatrix.of(rows, r))


def slope_union(parts: Sequence[IsocrystalCharPoly]) -> List[SlopeDatum]:
    """Slopes of a direct sum, merged."""
    counts: dict = {}
    for ic in parts:
        for datum in slope_decomposition(ic):
            counts[datum.slope] = counts.get(datum.slope, 0) + datum.multiplicity
    return [SlopeDatum(s, m) for s, m in sorted(counts.items())]
