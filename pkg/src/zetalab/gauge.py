"""
Desk model of dualizable F-gauges.

A gauge is a direct sum of per-degree summands at one of four tiers:

- charpoly: an isocrystal given by det(1 - t F^n) plus declared Hodge numbers
- slopes: an isocrystal given by its slope multiset
- dieudonne: a p-divisible normal form (T, W, F) over Z_p, q = p
- torsion: the same shape reduced mod p^m, or a finite-length gauge given
  by its filtration levels

Dieudonne summands and their reductions carry the Nygaard filtration
Fil^r = p^r T + p^(r-1) W, which is what the syntomic complex and the
Nygaard characteristic are computed from.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

try:
    from .bockstein import EndoModule, stable_bockstein_char, zero_is_semisimple
    from .isocrystal import (
        DieudonneMatrix,
        IsocrystalCharPoly,
        SlopeDatum,
        bk_twist,
        charpoly_from_slopes,
    )
    from .padic_core import (
        FpModule,
        ModuleMap,
        PAdicContext,
        PAdicError,
        Presentation,
        QMatrix,
        ZetalabError,
        cokernel,
        kernel,
        newton_slopes,
        p_local_snf,
        root_multiplicity,
        valuation,
    )
except ImportError:
    from bockstein import EndoModule, stable_bockstein_char, zero_is_semisimple
    from isocrystal import (
        DieudonneMatrix,
        IsocrystalCharPoly,
        SlopeDatum,
        bk_twist,
        charpoly_from_slopes,
    )
    from padic_core import (
        FpModule,
        ModuleMap,
        PAdicContext,
        PAdicError,
        Presentation,
        QMatrix,
        ZetalabError,
        cokernel,
        kernel,
        newton_slopes,
        p_local_snf,
        root_multiplicity,
        valuation,
    )

logger = logging.getLogger(__name__)


class GaugeError(ZetalabError):
    pass


def sign(k: int) -> int:
    """(-1)^k for any integer k."""
    return -1 if k % 2 else 1


# ---------------------------------------------------------------------------
# Hodge tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HodgeTable:
    """Finitely supported h^{i,j}, stored as sorted ((i, j), h) pairs with h > 0."""

    entries: Tuple[Tuple[Tuple[int, int], int], ...] = ()

    def __post_init__(self):
        merged: Dict[Tuple[int, int], int] = {}
        for (i, j), h in self.entries:
            if h < 0:
                raise GaugeError(f"negative Hodge number h^({i},{j}) = {h}")
            merged[(int(i), int(j))] = merged.get((int(i), int(j)), 0) + int(h)
        object.__setattr__(self, "entries", tuple(sorted((k, h) for k, h in merged.items() if h)))

    @classmethod
    def of(cls, mapping: Mapping[Tuple[int, int], int]) -> "HodgeTable":
        return cls(tuple(mapping.items()))

    def as_dict(self) -> Dict[Tuple[int, int], int]:
        return dict(self.entries)

    def get(self, i: int, j: int) -> int:
        return self.as_dict().get((i, j), 0)

    def __add__(self, other: "HodgeTable") -> "HodgeTable":
        return HodgeTable(self.entries + other.entries)

    def twisted(self, t: int) -> "HodgeTable":
        """Table of M{t}: (i, j) -> (i - t, j + t)."""
        return HodgeTable(tuple(((i - t, j + t), h) for (i, j), h in self.entries))

    def shifted(self, k: int) -> "HodgeTable":
        """Table of M[k] placed k degrees higher: (i, j) -> (i, j + k)."""
        return HodgeTable(tuple(((i, j + k), h) for (i, j), h in self.entries))

    def degrees(self) -> List[int]:
        return sorted({i + j for (i, j), _ in self.entries})

    def degree_dimension(self, d: int) -> int:
        return sum(h for (i, j), h in self.entries if i + j == d)

    def hodge_range(self) -> Optional[Tuple[int, int]]:
        if not self.entries:
            return None
        weights = [i for (i, _), _ in self.entries]
        return min(weights), max(weights)

    def to_list(self) -> List[dict]:
        return [{"i": i, "j": j, "h": h} for (i, j), h in self.entries]

    def __str__(self) -> str:
        if not self.entries:
            return "{}"
        return "{" + ", ".join(f"h^({i},{j})={h}" for (i, j), h in self.entries) + "}"


def weighted_hodge_euler(h: HodgeTable, r: int) -> int:
    """sum over i <= r of (-1)^(i+j) (r - i) h^{i,j}."""
    return sum(sign(i + j) * (r - i) * n for (i, j), n in h.entries if i <= r)


def hodge_from_pdiv(dim_g: int, dim_g_dual: int) -> HodgeTable:
    """h^{0,0} = dim G^dual, h^{1,-1} = dim G."""
    if dim_g < 0 or dim_g_dual < 0:
        raise GaugeError(f"dimensions must be nonnegative, got ({dim_g}, {dim_g_dual})")
    return HodgeTable.of({(0, 0): dim_g_dual, (1, -1): dim_g})


# ---------------------------------------------------------------------------
# Dieudonne and torsion gauges
# ---------------------------------------------------------------------------


class _NygaardData(ABC):
    """Matrices shared by free and torsion gauges; generators are T first, then W."""

    ctx: PAdicContext
    t_rank: int
    w_rank: int
    F: QMatrix
    degree: int

    def _validate_shape(self) -> None:
        if self.ctx.n != 1:
            raise GaugeError(f"direct syntomic route requires q = p, got q = {self.ctx.q}")
        if self.t_rank < 0 or self.w_rank < 0:
            raise GaugeError(f"ranks must be nonnegative, got T={self.t_rank}, W={self.w_rank}")
        size = self.t_rank + self.w_rank
        if self.F.shape != (size, size):
            raise GaugeError(f"F has shape {self.F.shape}, expected {(size, size)}")
        if not self.F.is_p_integral(self.ctx):
            raise GaugeError(f"F is not p-integral: {self.F}")
        if not self.phi.is_p_integral(self.ctx):
            raise GaugeError(f"F/p is not p-integral on the W generators: {self.F}")

    @property
    def rank(self) -> int:
        return self.t_rank + self.w_rank

    @property
    def phi(self) -> QMatrix:
        """(x, y) -> F(x) + F(y)/p."""
        return self.F @ QMatrix.diagonal([1] * self.t_rank + [Fraction(1, self.ctx.p)] * self.w_rank)

    def can(self, r: int) -> QMatrix:
        """Fil^r -> M^u in the identification Fil^r = T + W."""
        if r <= 0:
            return QMatrix.identity(self.rank)
        return QMatrix.diagonal([self.ctx.power(r)] * self.t_rank + [self.ctx.power(r - 1)] * self.w_rank)

    def syntomic_matrix(self, r: int) -> QMatrix:
        """p^-r F - can on Fil^r, written on T + W."""
        if r <= 0:
            return self.F.scale(self.ctx.power(-r)) - QMatrix.identity(self.rank)
        return self.phi - self.can(r)

    def pdiv_hodge(self) -> HodgeTable:
        """Hodge table of the underlying p-divisible datum, in this gauge's degree."""
        return hodge_from_pdiv(self.w_rank, self.t_rank).shifted(self.degree)

    @abstractmethod
    def presentation(self) -> Presentation: ...

    def _endomorphism(self, matrix: QMatrix) -> ModuleMap:
        module = self.presentation()
        return ModuleMap(module, module, matrix, self.ctx)

    def can_map(self, r: int) -> ModuleMap:
        return self._endomorphism(self.can(r))

    def syntomic_map(self, r: int) -> ModuleMap:
        return self._endomorphism(self.syntomic_matrix(r))


@dataclass(frozen=True)
class DieudonneGauge(_NygaardData):
    ctx: PAdicContext
    t_rank: int
    w_rank: int
    F: QMatrix
    degree: int = 0

    def __post_init__(self):
        self._validate_shape()
        det = self.phi.determinant()
        if self.rank and (det == 0 or valuation(det, self.ctx) != 0):
            raise GaugeError(f"Frobenius on the graded pieces is not invertible for F = {self.F}")

    def presentation(self) -> Presentation:
        return Presentation.free(self.rank)

    def isocrystal(self) -> IsocrystalCharPoly:
        return IsocrystalCharPoly(self.ctx, self.F.reciprocal_charpoly())

    def derived_hodge(self) -> HodgeTable:
        return self.pdiv_hodge()


@dataclass(frozen=True)
class TorsionGauge(_NygaardData):
    """Derived reduction mod p^m of a Dieudonne-shaped datum."""

    ctx: PAdicContext
    t_rank: int
    w_rank: int
    F: QMatrix
    degree: int = 0
    modulus_exponent: int = 1

    def __post_init__(self):
        if self.modulus_exponent < 1:
            raise GaugeError(f"modulus exponent must be positive, got {self.modulus_exponent}")
        self._validate_shape()

    def presentation(self) -> Presentation:
        return Presentation.cyclic_power(self.rank, self.modulus_exponent, self.ctx)

    def derived_hodge(self) -> HodgeTable:
        """The reduction's table sits in degrees d and d - 1."""
        base = self.pdiv_hodge()
        return base + base.shifted(-1)


@dataclass(frozen=True)
class FiltrationLevel:
    """Fil^r as a finite module, with can and phi written in M^u's generators."""

    module: Presentation
    can: QMatrix
    phi: QMatrix


@dataclass(frozen=True)
class FilteredTorsionGauge:
    """
    Finite-length gauge given level by level.

    M^u and Fil^1..Fil^top are finite modules killed by p^m, so their lengths
    may differ and the Nygaard characteristic need not vanish. Below the
    window Fil^r = M^u with phi_r = p^-r frobenius; above it Fil^r = Fil^top
    with can_r = p^(r - top) can_top and phi_r = phi_top, which must map
    Fil^top isomorphically onto M^u.
    """

    ctx: PAdicContext
    underlying: Presentation
    frobenius: QMatrix
    levels: Tuple[FiltrationLevel, ...] = ()
    degree: int = 0
    modulus_exponent: int = 1

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.ctx.n != 1:
            raise GaugeError(f"direct syntomic route requires q = p, got q = {self.ctx.q}")
        if self.modulus_exponent < 1:
            raise GaugeError(f"modulus exponent must be positive, got {self.modulus_exponent}")
        for r in range(self.top + 1):
            self._check_killed(r)
            self.syntomic_map(r)
            self.can_map(r)
        top = self._level(self.top)
        phi_top = self._map(top.module, top.phi, f"phi on Fil^{self.top}")
        if not (kernel(phi_top).is_zero() and cokernel(phi_top).is_zero()):
            raise GaugeError(f"Frobenius on Fil^{self.top} is not an isomorphism onto M^u")

    @property
    def top(self) -> int:
        return len(self.levels)

    def _level(self, r: int) -> FiltrationLevel:
        if r <= 0 or not self.levels:
            return FiltrationLevel(self.underlying, QMatrix.identity(self.underlying.generators), self.frobenius)
        return self.levels[min(r, self.top) - 1]

    def _check_killed(self, r: int) -> None:
        module = self._level(r).module.module(self.ctx)
        if not module.is_finite or any(e > self.modulus_exponent for e in module.torsion_exponents):
            where = "M^u" if r <= 0 else f"Fil^{r}"
            raise GaugeError(f"{where} = {module} is not killed by p^{self.modulus_exponent}")

    def _map(self, source: Presentation, matrix: QMatrix, what: str) -> ModuleMap:
        try:
            return ModuleMap(source, self.underlying, matrix, self.ctx)
        except PAdicError as e:
            raise GaugeError(f"{what} is not a map of modules: {e}")

    def can_map(self, r: int) -> ModuleMap:
        level = self._level(r)
        can = level.can.scale(self.ctx.power(max(0, r - self.top)))
        return self._map(level.module, can, f"can on Fil^{r}")

    def phi_matrix(self, r: int) -> QMatrix:
        level = self._level(r)
        return level.phi.scale(self.ctx.power(-r)) if r <= 0 else level.phi

    def syntomic_map(self, r: int) -> ModuleMap:
        level = self._level(r)
        return self._map(level.module, self.phi_matrix(r) - self.can_map(r).matrix, f"phi - can on Fil^{r}")

    def derived_hodge(self) -> Optional[HodgeTable]:
        """The levels do not determine a table; summands carry a declared one."""
        return None


AnyGauge = Union[DieudonneGauge, TorsionGauge, FilteredTorsionGauge]


def nygaard_characteristic(g: AnyGauge, r: int) -> int:
    """
    chi^l(M^u / Fil^r M), i.e. length(coker can) - length(ker can), with the
    sign (-1)^degree of the gauge's placement.
    """
    can = g.can_map(r)
    value = cokernel(can).length() - kernel(can).length()
    return sign(g.degree) * value


def check_niceob(g: AnyGauge, r: int, hodge: Optional[HodgeTable] = None) -> bool:
    table = hodge if hodge is not None else g.derived_hodge()
    if table is None:
        logger.warning(f"no Hodge table to compare the Nygaard characteristic with at r={r}")
        return False
    nygaard = nygaard_characteristic(g, r)
    expected = g.ctx.n * weighted_hodge_euler(table, r)
    if nygaard != expected:
        logger.warning(f"Nygaard characteristic {nygaard} != n*chi = {expected} at r={r}")
        return False
    return True


def syntomic_cohomology(g: AnyGauge, r: int) -> Tuple[FpModule, FpModule]:
    """(H^d, H^(d+1)) of Fil^r M -> M^u, d = the gauge's degree."""
    if g.ctx.n != 1:
        raise GaugeError("direct syntomic route requires q = p")
    f = g.syntomic_map(r)
    return kernel(f), cokernel(f)


@dataclass(frozen=True)
class DescentReport:
    degree: int
    ranks: Tuple[int, int]
    alternating_sum: int
    u: Optional[Tuple[int, ...]]

    @property
    def holds(self) -> bool:
        return self.alternating_sum == 0 and self.u is not None

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "ranks": list(self.ranks),
            "alternating_sum": self.alternating_sum,
            "u": list(self.u) if self.u is not None else None,
            "holds": self.holds,
        }


def descent_rank_checks(g: AnyGauge, r: int) -> DescentReport:
    h0, h1 = syntomic_cohomology(g, r)
    ranks = (h0.free_rank, h1.free_rank)
    alternating = sign(g.degree) * (ranks[0] - ranks[1])
    # rank H^i = u_(i-1) + u_i with u vanishing outside [d, d+1]
    u0 = ranks[0]
    u1 = ranks[1] - u0
    u = (u0,) if u1 == 0 else None
    return DescentReport(g.degree, ranks, alternating, u)


def bockstein_theta(g: DieudonneGauge, r: int) -> QMatrix:
    """F - p^r for r > 0, p^-r F - 1 otherwise."""
    if r > 0:
        return g.F - QMatrix.identity(g.rank).scale(g.ctx.power(r))
    return g.F.scale(g.ctx.power(-r)) - QMatrix.identity(g.rank)


@dataclass(frozen=True)
class SyntomicOrder:
    value: Optional[int]
    applicable: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"value": self.value, "applicable": self.applicable, "note": self.note}


def order_of_vanishing_syn(g: AnyGauge, r: int, assume_semisimple: bool = False) -> SyntomicOrder:
    """sum (-1)^i i rank H^i_syn, valid when q^r is a semisimple eigenvalue of F."""
    if isinstance(g, DieudonneGauge) and not assume_semisimple:
        if g.rank and not zero_is_semisimple(EndoModule.free(bockstein_theta(g, r), g.ctx)):
            return SyntomicOrder(None, False, "formula not applicable")
    h0, h1 = syntomic_cohomology(g, r)
    d = g.degree
    value = sign(d) * d * h0.free_rank + sign(d + 1) * (d + 1) * h1.free_rank
    return SyntomicOrder(value, True)


def mu_exponent_via_bockstein(g: DieudonneGauge, r: int) -> int:
    """
    Unit-root excess at slope r from the stable Bockstein characteristic of
    theta = F - p^r (or p^-r F - 1), after removing the contribution of the
    eigenvalues off slope r.
    """
    if not g.rank:
        return 0
    chi_s = stable_bockstein_char(EndoModule.free(bockstein_theta(g, r), g.ctx))
    if r <= 0:
        return -chi_s
    _, cofactor = root_multiplicity(g.F.reciprocal_charpoly(), g.ctx.power(r))
    slopes = newton_slopes(cofactor, g.ctx).slopes
    below = sum(s for s in slopes if s < r)
    at_or_above = sum(1 for s in slopes if s >= r)
    excess = -chi_s - below - r * at_or_above
    if excess.denominator != 1:
        raise AssertionError(f"non-integral unit-root excess {excess}")
    return int(excess)


def pdiv_invariants(slopes: Sequence[SlopeDatum]) -> Tuple[int, int]:
    """(dim G, height G) from the slopes of a p-divisible group."""
    dim = Fraction(0)
    height = 0
    for datum in slopes:
        if not 0 <= datum.slope <= 1:
            raise GaugeError(f"slope {datum.slope} outside [0, 1]")
        dim += datum.slope * datum.multiplicity
        height += datum.multiplicity
    if dim.denominator != 1:
        raise GaugeError(f"not realizable: dimension {dim} is not an integer")
    return int(dim), height


def gauge_from_dieudonne(dm: DieudonneMatrix, degree: int = 0) -> DieudonneGauge:
    """
    Normal form of a Dieudonne module: with L F R = D the p-local Smith form,
    the basis given by the columns of R splits M = T + W along the unit and
    p elementary divisors, and F becomes R^-1 L^-1 D.
    """
    snf = p_local_snf(dm.A, dm.ctx)
    if snf.kernel_rank or any(v > 1 for v in snf.valuations):
        raise GaugeError(f"elementary divisors of F must be 1 or p, got valuations {snf.valuations}")
    D = QMatrix.diagonal([dm.ctx.power(v) for v in snf.valuations])
    F = snf.right_inverse @ snf.left_inverse @ D
    t_rank = sum(1 for v in snf.valuations if v == 0)
    return DieudonneGauge(dm.ctx, t_rank, dm.rank - t_rank, F, degree)


# ---------------------------------------------------------------------------
# Gauge specifications
# ---------------------------------------------------------------------------


class Tier(str, Enum):
    CHARPOLY = "charpoly"
    SLOPES = "slopes"
    DIEUDONNE = "dieudonne"
    TORSION = "torsion"


Payload = Union[IsocrystalCharPoly, Tuple[SlopeDatum, ...], DieudonneGauge, TorsionGauge, FilteredTorsionGauge]


@dataclass(frozen=True)
class Summand:
    """
    One summand placed in cohomological degree `degree`, twisted by `twist`.
    A declared Hodge table is given in untwisted coordinates at that degree.
    """

    tier: Tier
    degree: int
    payload: Payload
    twist: int = 0
    hodge: Optional[HodgeTable] = None
    label: str = ""

    def __post_init__(self):
        if self.tier in (Tier.DIEUDONNE, Tier.TORSION):
            expected = (DieudonneGauge,) if self.tier is Tier.DIEUDONNE else (TorsionGauge, FilteredTorsionGauge)
            if not isinstance(self.payload, expected):
                names = " or ".join(t.__name__ for t in expected)
                raise GaugeError(f"{self.tier.value} summand needs a {names}")
            if self.payload.degree != self.degree:
                raise GaugeError(
                    f"summand degree {self.degree} disagrees with gauge degree {self.payload.degree}"
                )
        elif self.tier is Tier.CHARPOLY and not isinstance(self.payload, IsocrystalCharPoly):
            raise GaugeError("charpoly summand needs an IsocrystalCharPoly")
        elif self.tier is Tier.SLOPES:
            object.__setattr__(self, "payload", tuple(self.payload))

    @classmethod
    def of_gauge(cls, g: AnyGauge, twist: int = 0, hodge: Optional[HodgeTable] = None, label: str = "") -> "Summand":
        tier = Tier.DIEUDONNE if isinstance(g, DieudonneGauge) else Tier.TORSION
        return cls(tier, g.degree, g, twist, hodge, label)

    @property
    def is_vector_bundle(self) -> bool:
        return self.tier is not Tier.TORSION

    @property
    def gauge(self) -> Optional[AnyGauge]:
        return self.payload if self.tier in (Tier.DIEUDONNE, Tier.TORSION) else None

    def effective_weight(self, r: int) -> int:
        return r + self.twist

    def isocrystal(self, ctx: PAdicContext) -> Optional[IsocrystalCharPoly]:
        """det(1 - t F^n) of the twisted summand, None for torsion."""
        if self.tier is Tier.CHARPOLY:
            base = self.payload
        elif self.tier is Tier.SLOPES:
            base = charpoly_from_slopes(self.payload, ctx)
        elif self.tier is Tier.DIEUDONNE:
            base = self.payload.isocrystal()
        else:
            return None
        return bk_twist(base, self.twist)

    def derived_hodge(self) -> Optional[HodgeTable]:
        table = None if self.gauge is None else self.gauge.derived_hodge()
        return None if table is None else table.twisted(self.twist)

    def declared_hodge(self) -> Optional[HodgeTable]:
        return None if self.hodge is None else self.hodge.twisted(self.twist)

    def hodge_table(self) -> Optional[HodgeTable]:
        derived = self.derived_hodge()
        return derived if derived is not None else self.declared_hodge()

    def shifted(self, k: int) -> "Summand":
        payload = self.payload
        if self.gauge is not None:
            payload = replace(self.gauge, degree=self.gauge.degree + k)
        hodge = None if self.hodge is None else self.hodge.shifted(k)
        return replace(self, degree=self.degree + k, payload=payload, hodge=hodge)

    def twisted(self, i: int) -> "Summand":
        return replace(self, twist=self.twist + i)

    def describe(self) -> str:
        name = f" {self.label}" if self.label else ""
        return f"{self.tier.value}{name} in degree {self.degree}" + (f", twist {self.twist}" if self.twist else "")


@dataclass(frozen=True)
class GaugeSpec:
    ctx: PAdicContext
    summands: Tuple[Summand, ...]
    shift: int = 0
    twist: int = 0
    hodge: Optional[HodgeTable] = None

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))
        for s in self.summands:
            payload_ctx = getattr(s.payload, "ctx", self.ctx)
            if payload_ctx != self.ctx:
                raise GaugeError(f"summand {s.describe()} lives over {payload_ctx}, gauge over {self.ctx}")

    def normalized(self) -> Tuple[Summand, ...]:
        """Summands with the global shift and twist folded in."""
        out = []
        for s in self.summands:
            if self.shift:
                s = s.shifted(self.shift)
            if self.twist:
                s = s.twisted(self.twist)
            out.append(s)
        return tuple(out)

    def gauge_hodge(self) -> Optional[HodgeTable]:
        if self.hodge is None:
            return None
        return self.hodge.shifted(self.shift).twisted(self.twist)

    def vector_bundle_hodge(self) -> Optional[HodgeTable]:
        """Gauge-level table if declared, else the sum of the summand tables."""
        declared = self.gauge_hodge()
        if declared is not None:
            return declared
        total = HodgeTable()
        for s in self.normalized():
            if not s.is_vector_bundle:
                continue
            table = s.hodge_table()
            if table is None:
                return None
            total = total + table
        return total

    def torsion_hodge(self) -> Optional[HodgeTable]:
        total = HodgeTable()
        for s in self.normalized():
            if s.is_vector_bundle:
                continue
            table = s.hodge_table()
            if table is None:
                return None
            total = total + table
        return total

    def hodge_table(self) -> Optional[HodgeTable]:
        vb = self.vector_bundle_hodge()
        torsion = self.torsion_hodge()
        if vb is None or torsion is None:
            return None
        return vb + torsion

    def dimensions(self) -> Dict[int, int]:
        dims: Dict[int, int] = {}
        for s in self.normalized():
            ic = s.isocrystal(self.ctx)
            if ic is not None:
                dims[s.degree] = dims.get(s.degree, 0) + ic.dimension
        return dims

    def consistency_issues(self) -> List[str]:
        issues: List[str] = []
        for s in self.normalized():
            declared = s.declared_hodge()
            if declared is None:
                continue
            derived = s.derived_hodge()
            if derived is not None and derived != declared:
                issues.append(f"Hodge conflict in {s.describe()}: declared {declared}, derived {derived}")
                continue
            ic = s.isocrystal(self.ctx)
            if ic is None:
                stray = [d for d in declared.degrees() if d not in (s.degree - 1, s.degree)]
                if stray:
                    issues.append(
                        f"Hodge entries of {s.describe()} lie outside degrees {s.degree - 1}, {s.degree}: {stray}"
                    )
                continue
            stray = [d for d in declared.degrees() if d != s.degree]
            if stray:
                issues.append(f"Hodge entries of {s.describe()} lie outside its degree: {stray}")
            if declared.degree_dimension(s.degree) != ic.dimension:
                issues.append(
                    f"Hodge numbers of {s.describe()} sum to {declared.degree_dimension(s.degree)}, "
                    f"dimension is {ic.dimension}"
                )
        gauge_level = self.gauge_hodge()
        if gauge_level is not None:
            dims = self.dimensions()
            for d in sorted(set(dims) | set(gauge_level.degrees())):
                if gauge_level.degree_dimension(d) != dims.get(d, 0):
                    issues.append(
                        f"gauge Hodge table has dimension {gauge_level.degree_dimension(d)} in degree {d}, "
                        f"isocrystal dimension is {dims.get(d, 0)}"
                    )
            summed = HodgeTable()
            complete = True
            for s in self.normalized():
                if not s.is_vector_bundle:
                    continue
                table = s.hodge_table()
                if table is None:
                    complete = False
                    break
                summed = summed + table
            if complete and summed != gauge_level:
                issues.append(f"Hodge conflict: gauge table {gauge_level}, summands give {summed}")
        elif self.vector_bundle_hodge() is None:
            missing = [s.describe() for s in self.normalized() if s.is_vector_bundle and s.hodge_table() is None]
            issues.append(f"missing Hodge data for {', '.join(missing)}")
        unfilled = [s.describe() for s in self.normalized() if not s.is_vector_bundle and s.hodge_table() is None]
        if unfilled:
            issues.append(f"missing Hodge data for {', '.join(unfilled)}")
        return issues

    def weight_range(self, margin: int) -> Tuple[int, int]:
        """[min Hodge i - margin, max Hodge i + margin], or [-margin, margin] without data."""
        table = self.hodge_table()
        bounds = table.hodge_range() if table is not None else None
        if bounds is None:
            return -margin, margin
        return bounds[0] - margin, bounds[1] + margin


def direct_sum(*specs: GaugeSpec) -> GaugeSpec:
    if not specs:
        raise GaugeError("direct sum of nothing")
    ctx = specs[0].ctx
    if any(s.ctx != ctx for s in specs):
        raise GaugeError("cannot add gauges over different fields")
    summands: List[Summand] = []
    hodge: Optional[HodgeTable] = HodgeTable()
    for spec in specs:
        summands.extend(spec.normalized())
        part = spec.vector_bundle_hodge()
        hodge = None if hodge is None or part is None else hodge + part
    # keep summand tables authoritative unless some part only had a gauge-level table
    if all(spec.hodge is None for spec in specs):
        hodge = None
    return GaugeSpec(ctx, tuple(summands), hodge=hodge)


def shifted(spec: GaugeSpec, k: int) -> GaugeSpec:
    return replace(spec, shift=spec.shift + k)


def twisted(spec: GaugeSpec, i: int) -> GaugeSpec:
    return replace(spec, twist=spec.twist + i)


def summands_by_degree(spec: GaugeSpec) -> Dict[int, List[Summand]]:
    grouped: Dict[int, List[Summand]] = {}
    for s in spec.normalized():
        grouped.setdefault(s.degree, []).append(s)
    return grouped


def gauge_checks(s: Summand, r: int) -> dict:
    """Nygaard, niceob, syntomic and descent data for a Dieudonne or torsion summand."""
    g = s.gauge
    if g is None:
        raise GaugeError(f"{s.describe()} carries no filtration data")
    w = s.effective_weight(r)
    h0, h1 = syntomic_cohomology(g, w)
    nygaard = nygaard_characteristic(g, w)
    declared = s.hodge if g.derived_hodge() is None else None
    report = {
        "summand": s.describe(),
        "effective_weight": w,
        "nygaard": nygaard,
        "niceob": check_niceob(g, w, declared),
        "syntomic": [h0.to_dict(), h1.to_dict()],
        "descent": descent_rank_checks(g, w).to_dict(),
    }
    if not isinstance(g, DieudonneGauge):
        # Euler characteristic of the syntomic complex of a torsion gauge
        report["syntomic_euler"] = sign(g.degree) * (h0.length() - h1.length())
        report["syntomic_euler_ok"] = report["syntomic_euler"] == -nygaard
    return report
