"""
Exact p-adic arithmetic for zetalab.

Everything here works over the rationals with p-locality checks: valuations,
polynomials with rational coefficients and their Newton polygons, the p-local
Smith normal form, and finitely presented Z_p-modules (kernels, cokernels,
lengths) built on top of it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from sympy import QQ, isprime
from sympy.polys.densearith import dup_add, dup_div, dup_mul, dup_pow
from sympy.polys.densetools import dup_scale
from sympy.polys.matrices import DomainMatrix

logger = logging.getLogger(__name__)

RationalLike = Union[int, Fraction, str]


class ZetalabError(Exception):
    pass


class PAdicError(ZetalabError):
    pass


def to_fraction(x) -> Fraction:
    """Coerce ints, Fractions, strings like "3/5" and sympy rationals to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise PAdicError(f"not an exact rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise PAdicError(f"cannot parse rational '{x}': {e}")
    if isinstance(x, float):
        raise PAdicError(f"floats are not exact rationals: {x!r}")
    numerator = getattr(x, "numerator", None)
    denominator = getattr(x, "denominator", None)
    if numerator is None or denominator is None:
        raise PAdicError(f"not an exact rational: {x!r}")
    # sympy's Rational exposes these as properties, gmpy's mpq as attributes
    if callable(numerator):
        numerator, denominator = numerator(), denominator()
    return Fraction(int(numerator), int(denominator))


@dataclass(frozen=True)
class PAdicContext:
    """The arithmetic frame: residue characteristic p and q = p^n."""

    p: int
    n: int = 1

    def __post_init__(self):
        if not isinstance(self.p, int) or not isprime(self.p):
            raise PAdicError(f"p must be a prime, got {self.p!r}")
        if not isinstance(self.n, int) or self.n < 1:
            raise PAdicError(f"n must be a positive integer, got {self.n!r}")

    @property
    def q(self) -> int:
        return self.p ** self.n

    def power(self, e: int) -> Fraction:
        """p^e as an exact rational (e may be negative)."""
        return Fraction(self.p) ** e

    def q_power(self, e: int) -> Fraction:
        return Fraction(self.q) ** e


def _int_valuation(m: int, p: int) -> int:
    v = 0
    while m % p == 0:
        m //= p
        v += 1
    return v


def valuation(x, ctx: PAdicContext) -> int:
    """v_p(x) for a nonzero rational x."""
    x = to_fraction(x)
    if x == 0:
        raise PAdicError("valuation of zero undefined")
    return _int_valuation(abs(x.numerator), ctx.p) - _int_valuation(x.denominator, ctx.p)


def is_p_integral(x, ctx: PAdicContext) -> bool:
    return to_fraction(x).denominator % ctx.p != 0


@dataclass(frozen=True)
class ValuedRational:
    """A nonzero exact rational viewed through the p-adic absolute value."""

    value: Fraction
    ctx: PAdicContext

    def __post_init__(self):
        object.__setattr__(self, "value", to_fraction(self.value))
        if self.value == 0:
            raise PAdicError("valuation of zero undefined")

    @property
    def valuation(self) -> int:
        return valuation(self.value, self.ctx)

    @property
    def norm_exponent(self) -> int:
        """a with |x|_p = p^a."""
        return -self.valuation

    @property
    def norm(self) -> Fraction:
        return self.ctx.power(self.norm_exponent)

    @property
    def unit_part(self) -> Fraction:
        return self.value / self.ctx.power(self.valuation)

    def __mul__(self, other: "ValuedRational") -> "ValuedRational":
        return ValuedRational(self.value * other.value, self.ctx)


# ---------------------------------------------------------------------------
# Polynomials and Newton polygons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatPolynomial:
    """Polynomial with exact rational coefficients, ascending degree."""

    coefficients: Tuple[Fraction, ...] = ()

    def __post_init__(self):
        coeffs = [to_fraction(c) for c in self.coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def of(cls, *coefficients: RationalLike) -> "RatPolynomial":
        return cls(tuple(to_fraction(c) for c in coefficients))

    @classmethod
    def one(cls) -> "RatPolynomial":
        return cls((Fraction(1),))

    @classmethod
    def linear_factor(cls, u) -> "RatPolynomial":
        """1 - u t."""
        return cls((Fraction(1), -to_fraction(u)))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return not self.coefficients

    def coefficient(self, k: int) -> Fraction:
        return self.coefficients[k] if 0 <= k < len(self.coefficients) else Fraction(0)

    def __call__(self, t) -> Fraction:
        t = to_fraction(t)
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * t + c
        return acc

    def dense(self) -> list:
        """Descending list of QQ elements, the layout of sympy's dup_* routines."""
        return [QQ(c.numerator, c.denominator) for c in reversed(self.coefficients)]

    @classmethod
    def from_dense(cls, rep: Sequence) -> "RatPolynomial":
        return cls(tuple(to_fraction(c) for c in reversed(rep)))

    def __add__(self, other: "RatPolynomial") -> "RatPolynomial":
        return RatPolynomial.from_dense(dup_add(self.dense(), other.dense(), QQ))

    def __mul__(self, other: "RatPolynomial") -> "RatPolynomial":
        return RatPolynomial.from_dense(dup_mul(self.dense(), other.dense(), QQ))

    def __pow__(self, e: int) -> "RatPolynomial":
        if e < 0:
            raise PAdicError("negative powers of polynomials are not polynomials")
        return RatPolynomial.from_dense(dup_pow(self.dense(), e, QQ))

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatPolynomial):
            return NotImplemented
        return self.coefficients == other.coefficients

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def scale_variable(self, c) -> "RatPolynomial":
        """P(c t)."""
        c = to_fraction(c)
        return RatPolynomial.from_dense(dup_scale(self.dense(), QQ(c.numerator, c.denominator), QQ))

    def divmod_linear(self, u) -> Tuple["RatPolynomial", Fraction]:
        """Divide by (1 - u t); returns (quotient, remainder)."""
        u = to_fraction(u)
        if u == 0:
            return self, Fraction(0)
        divisor = RatPolynomial.linear_factor(u).dense()
        quotient, remainder = dup_div(self.dense(), divisor, QQ)
        constant = RatPolynomial.from_dense(remainder).coefficient(0)
        return RatPolynomial.from_dense(quotient), constant

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for k, c in enumerate(self.coefficients):
            if c == 0:
                continue
            mag = abs(c)
            coeff = "" if (mag == 1 and k > 0) else str(mag)
            var = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
            body = f"{coeff}{var}" if coeff and var else (coeff or var)
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        first_sign, first_body = terms[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out


def root_multiplicity(P: RatPolynomial, u) -> Tuple[int, RatPolynomial]:
    """Largest m with (1 - u t)^m dividing P, and the cofactor P*."""
    if P.is_zero():
        raise PAdicError("multiplicity in the zero polynomial is infinite")
    m = 0
    current = P
    while current.degree >= 1:
        quotient, remainder = current.divmod_linear(u)
        if remainder != 0:
            break
        current = quotient
        m += 1
    return m, current


def lower_convex_hull(points: Sequence[Tuple[int, Fraction]]) -> List[Tuple[int, Fraction]]:
    """Lower hull of points sorted by abscissa (monotone chain)."""
    hull: List[Tuple[int, Fraction]] = []
    for x, y in sorted(points):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly below the chord
            if (y2 - y1) * (x - x1) >= (y - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append((x, Fraction(y)))
    return hull


def polygon_segments(coefficients: Sequence[Fraction], ctx: PAdicContext) -> List[Tuple[Fraction, int]]:
    """(slope, horizontal length) for each side of the Newton polygon of sum a_i x^i."""
    points = [(i, Fraction(valuation(a, ctx))) for i, a in enumerate(coefficients) if a != 0]
    hull = lower_convex_hull(points)
    return [
        ((y2 - y1) / (x2 - x1), x2 - x1)
        for (x1, y1), (x2, y2) in zip(hull, hull[1:])
    ]


def root_valuations(coefficients: Sequence[Fraction], ctx: PAdicContext) -> Tuple[Fraction, ...]:
    """Valuations of the nonzero roots of sum a_i x^i, with multiplicity, ascending."""
    coefficients = [to_fraction(a) for a in coefficients]
    out: List[Fraction] = []
    for slope, length in polygon_segments(coefficients, ctx):
        out.extend([-slope] * length)
    return tuple(sorted(out))


@dataclass(frozen=True)
class NewtonPolygonResult:
    """v_p of the reciprocal roots of a zeta factor, ascending, with multiplicity."""

    slopes: Tuple[Fraction, ...]

    @property
    def total_multiplicity(self) -> int:
        return len(self.slopes)

    def multiplicities(self) -> List[Tuple[Fraction, int]]:
        grouped: List[Tuple[Fraction, int]] = []
        for s in self.slopes:
            if grouped and grouped[-1][0] == s:
                grouped[-1] = (s, grouped[-1][1] + 1)
            else:
                grouped.append((s, 1))
        return grouped


def newton_slopes(P: RatPolynomial, ctx: PAdicContext) -> NewtonPolygonResult:
    """
    Valuations v_p(u) of the reciprocal roots u of P.

    For P(t) = prod(1 - u t) these are the slopes of the lower convex hull of
    {(i, v_p(a_i))}, which is the negated root-valuation list of P itself.
    """
    if P.coefficient(0) != 1:
        raise PAdicError(f"not a zeta factor: constant term of {P} is {P.coefficient(0)}")
    slopes: List[Fraction] = []
    for slope, length in polygon_segments(P.coefficients, ctx):
        slopes.extend([slope] * length)
    return NewtonPolygonResult(tuple(sorted(slopes)))


# ---------------------------------------------------------------------------
# Matrices and the p-local Smith normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QMatrix:
    """Immutable matrix of exact rationals with an explicit shape."""

    rows: Tuple[Tuple[Fraction, ...], ...]
    ncols: int

    def __post_init__(self):
        rows = tuple(tuple(to_fraction(x) for x in row) for row in self.rows)
        for row in rows:
            if len(row) != self.ncols:
                raise PAdicError(f"ragged matrix: row of length {len(row)} in a {self.ncols}-column matrix")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def of(cls, rows: Iterable[Iterable[RationalLike]], ncols: Optional[int] = None) -> "QMatrix":
        rows = [list(r) for r in rows]
        if ncols is None:
            if not rows:
                raise PAdicError("column count of an empty matrix must be given")
            ncols = len(rows[0])
        return cls(tuple(tuple(r) for r in rows), ncols)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "QMatrix":
        return cls(tuple((Fraction(0),) * ncols for _ in range(nrows)), ncols)

    @classmethod
    def identity(cls, size: int) -> "QMatrix":
        return cls.diagonal([1] * size)

    @classmethod
    def diagonal(cls, entries: Sequence[RationalLike]) -> "QMatrix":
        size = len(entries)
        return cls(
            tuple(tuple(entries[i] if i == j else 0 for j in range(size)) for i in range(size)),
            size,
        )

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[RationalLike]], nrows: int) -> "QMatrix":
        return cls(tuple(tuple(col[i] for col in columns) for i in range(nrows)), len(columns))

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.nrows, self.ncols

    def __getitem__(self, index: Tuple[int, int]) -> Fraction:
        i, j = index
        return self.rows[i][j]

    def column(self, j: int) -> Tuple[Fraction, ...]:
        return tuple(row[j] for row in self.rows)

    def columns(self) -> List[Tuple[Fraction, ...]]:
        return [self.column(j) for j in range(self.ncols)]

    def transpose(self) -> "QMatrix":
        return QMatrix(tuple(self.column(j) for j in range(self.ncols)), self.nrows)

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        if self.ncols != other.nrows:
            raise PAdicError(f"shape mismatch {self.shape} @ {other.shape}")
        if 0 in (self.nrows, self.ncols, other.ncols):
            return QMatrix.zeros(self.nrows, other.ncols)
        product = self.to_domain_matrix().matmul(other.to_domain_matrix())
        return QMatrix.from_domain_matrix(product)

    def __add__(self, other: "QMatrix") -> "QMatrix":
        if self.shape != other.shape:
            raise PAdicError(f"shape mismatch {self.shape} + {other.shape}")
        return QMatrix(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)),
            self.ncols,
        )

    def __neg__(self) -> "QMatrix":
        return self.scale(-1)

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        return self + (-other)

    def scale(self, c) -> "QMatrix":
        c = to_fraction(c)
        return QMatrix(tuple(tuple(c * a for a in row) for row in self.rows), self.ncols)

    def power(self, k: int) -> "QMatrix":
        if self.nrows != self.ncols:
            raise PAdicError("only square matrices have powers")
        result = QMatrix.identity(self.nrows)
        for _ in range(k):
            result = result @ self
        return result

    def hstack(self, *others: "QMatrix") -> "QMatrix":
        for other in others:
            if other.nrows != self.nrows:
                raise PAdicError(f"cannot stack {self.shape} beside {other.shape}")
        rows = []
        for i in range(self.nrows):
            row = list(self.rows[i])
            for other in others:
                row.extend(other.rows[i])
            rows.append(tuple(row))
        return QMatrix(tuple(rows), self.ncols + sum(o.ncols for o in others))

    def submatrix(self, row_indices: Sequence[int], col_indices: Sequence[int]) -> "QMatrix":
        return QMatrix(
            tuple(tuple(self.rows[i][j] for j in col_indices) for i in row_indices),
            len(col_indices),
        )

    def block_diagonal(self, other: "QMatrix") -> "QMatrix":
        top = self.hstack(QMatrix.zeros(self.nrows, other.ncols))
        bottom = QMatrix.zeros(other.nrows, self.ncols).hstack(other)
        return QMatrix(top.rows + bottom.rows, self.ncols + other.ncols)

    def is_zero(self) -> bool:
        return all(a == 0 for row in self.rows for a in row)

    def is_p_integral(self, ctx: PAdicContext) -> bool:
        return all(is_p_integral(a, ctx) for row in self.rows for a in row)

    def to_domain_matrix(self) -> DomainMatrix:
        return DomainMatrix(
            [[QQ(a.numerator, a.denominator) for a in row] for row in self.rows],
            self.shape,
            QQ,
        )

    @classmethod
    def from_domain_matrix(cls, dm: DomainMatrix) -> "QMatrix":
        return cls(tuple(tuple(to_fraction(a) for a in row) for row in dm.to_list()), dm.shape[1])

    def rank(self) -> int:
        if self.nrows == 0 or self.ncols == 0:
            return 0
        return int(self.to_domain_matrix().rank())

    def determinant(self) -> Fraction:
        if self.nrows != self.ncols:
            raise PAdicError("determinant of a non-square matrix")
        if self.nrows == 0:
            return Fraction(1)
        return to_fraction(self.to_domain_matrix().det())

    def inverse(self) -> "QMatrix":
        if self.determinant() == 0:
            raise PAdicError("matrix is singular")
        if self.nrows == 0:
            return self
        return QMatrix.from_domain_matrix(self.to_domain_matrix().inv())

    def charpoly(self) -> Tuple[Fraction, ...]:
        """Coefficients of det(x I - A), leading coefficient first (fraction-free Berkowitz)."""
        if self.nrows != self.ncols:
            raise PAdicError("characteristic polynomial of a non-square matrix")
        if self.nrows == 0:
            return (Fraction(1),)
        return tuple(to_fraction(c) for c in self.to_domain_matrix().charpoly())

    def reciprocal_charpoly(self) -> RatPolynomial:
        """det(1 - t A) as an ascending-coefficient polynomial."""
        return RatPolynomial(self.charpoly())

    def __str__(self) -> str:
        return "[" + ", ".join("[" + ", ".join(str(a) for a in row) + "]" for row in self.rows) + "]"


@dataclass(frozen=True)
class SmithForm:
    """
    left @ A @ right = diag(p^d_1, ..., p^d_k, 0, ...), with left and right
    invertible over the p-local ring. left_inverse and right_inverse are
    tracked alongside so callers never need to invert.
    """

    valuations: Tuple[int, ...]
    kernel_rank: int
    left: QMatrix = field(repr=False)
    left_inverse: QMatrix = field(repr=False)
    right: QMatrix = field(repr=False)
    right_inverse: QMatrix = field(repr=False)

    @property
    def rank(self) -> int:
        return len(self.valuations)

    def __iter__(self):
        # allows `valuations, kernel_rank = p_local_snf(A, ctx)`
        return iter((self.valuations, self.kernel_rank))


def _mutable(m: QMatrix) -> List[List[Fraction]]:
    return [list(row) for row in m.rows]


def _frozen(rows: List[List[Fraction]], ncols: int) -> QMatrix:
    return QMatrix(tuple(tuple(r) for r in rows), ncols)


def p_local_snf(A: QMatrix, ctx: PAdicContext) -> SmithForm:
    """
    Smith normal form over Z_(p).

    Pivots are chosen at minimal valuation over the remaining block, first in
    row-major order, so the result (including transforms) is deterministic.
    """
    if not A.is_p_integral(ctx):
        raise PAdicError(f"matrix has a non-p-integral entry for p={ctx.p}")
    m, n = A.shape
    a = _mutable(A)
    left = _mutable(QMatrix.identity(m))
    left_inv = _mutable(QMatrix.identity(m))
    right = _mutable(QMatrix.identity(n))
    right_inv = _mutable(QMatrix.identity(n))
    vals: List[int] = []

    for step in range(min(m, n)):
        best: Optional[int] = None
        pivot = None
        for i in range(step, m):
            row = a[i]
            for j in range(step, n):
                if row[j] == 0:
                    continue
                v = valuation(row[j], ctx)
                if best is None or v < best:
                    best, pivot = v, (i, j)
        if pivot is None:
            break
        pi, pj = pivot

        if pi != step:
            a[step], a[pi] = a[pi], a[step]
            left[step], left[pi] = left[pi], left[step]
            for row in left_inv:
                row[step], row[pi] = row[pi], row[step]
        if pj != step:
            for row in a:
                row[step], row[pj] = row[pj], row[step]
            for row in right:
                row[step], row[pj] = row[pj], row[step]
            right_inv[step], right_inv[pj] = right_inv[pj], right_inv[step]

        unit = a[step][step] / ctx.power(best)
        a[step] = [x / unit for x in a[step]]
        left[step] = [x / unit for x in left[step]]
        for row in left_inv:
            row[step] *= unit
        piv = a[step][step]

        for i in range(step + 1, m):
            c = a[i][step] / piv
            if c == 0:
                continue
            a[i] = [x - c * y for x, y in zip(a[i], a[step])]
            left[i] = [x - c * y for x, y in zip(left[i], left[step])]
            for row in left_inv:
                row[step] += c * row[i]

        for j in range(step + 1, n):
            c = a[step][j] / piv
            if c == 0:
                continue
            for row in a:
                row[j] -= c * row[step]
            for row in right:
                row[j] -= c * row[step]
            right_inv[step] = [x + c * y for x, y in zip(right_inv[step], right_inv[j])]

        vals.append(best)

    logger.debug(f"p-local SNF of {m}x{n} matrix at p={ctx.p}: valuations {vals}")
    return SmithForm(
        valuations=tuple(vals),
        kernel_rank=n - len(vals),
        left=_frozen(left, m),
        left_inverse=_frozen(left_inv, m),
        right=_frozen(right, n),
        right_inverse=_frozen(right_inv, n),
    )


# ---------------------------------------------------------------------------
# Finitely presented Z_p-modules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FpModule:
    """Z_p^free_rank plus cyclic summands Z_p/p^e, exponents sorted ascending."""

    free_rank: int = 0
    torsion_exponents: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise PAdicError(f"negative free rank {self.free_rank}")
        exps = tuple(sorted(int(e) for e in self.torsion_exponents))
        if any(e <= 0 for e in exps):
            raise PAdicError(f"torsion exponents must be positive, got {exps}")
        object.__setattr__(self, "torsion_exponents", exps)

    @classmethod
    def zero(cls) -> "FpModule":
        return cls(0, ())

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion_exponents

    def length(self) -> int:
        if self.free_rank:
            raise PAdicError(f"infinite length: module {self} has free rank {self.free_rank}")
        return sum(self.torsion_exponents)

    def presentation(self, ctx: PAdicContext) -> "Presentation":
        """Torsion generators first (relation p^e), then the free ones."""
        k = len(self.torsion_exponents)
        g = k + self.free_rank
        relations = QMatrix.from_columns(
            [[ctx.power(e) if i == col else 0 for i in range(g)] for col, e in enumerate(self.torsion_exponents)],
            g,
        )
        return Presentation(g, relations)

    def to_dict(self) -> dict:
        return {"free_rank": self.free_rank, "torsion_exponents": list(self.torsion_exponents)}

    def __str__(self) -> str:
        parts = []
        if self.free_rank:
            parts.append("Z_p" if self.free_rank == 1 else f"Z_p^{self.free_rank}")
        for e in self.torsion_exponents:
            parts.append("Z/p" if e == 1 else f"Z/p^{e}")
        return " + ".join(parts) if parts else "0"


def length(module: Union[FpModule, "Presentation"], ctx: Optional[PAdicContext] = None) -> int:
    """Length of a finite module; presentations need a context."""
    if isinstance(module, Presentation):
        if ctx is None:
            raise PAdicError("length of a presentation needs a p-adic context")
        module = module.module(ctx)
    return module.length()


@dataclass(frozen=True)
class Presentation:
    """Z_(p)^generators modulo the column span of relations."""

    generators: int
    relations: QMatrix

    def __post_init__(self):
        if self.relations.nrows != self.generators:
            raise PAdicError(
                f"relation matrix has {self.relations.nrows} rows for {self.generators} generators"
            )

    @classmethod
    def free(cls, rank: int) -> "Presentation":
        return cls(rank, QMatrix.zeros(rank, 0))

    @classmethod
    def cyclic_power(cls, rank: int, exponent: int, ctx: PAdicContext) -> "Presentation":
        """(Z/p^exponent)^rank."""
        return cls(rank, QMatrix.identity(rank).scale(ctx.power(exponent)))

    @classmethod
    def torsion(cls, exponents: Sequence[int], ctx: PAdicContext) -> "Presentation":
        """Z/p^e1 + Z/p^e2 + ... with generators in the given order."""
        if any(e < 1 for e in exponents):
            raise PAdicError(f"torsion exponents must be positive, got {list(exponents)}")
        return cls(len(exponents), QMatrix.diagonal([ctx.power(e) for e in exponents]))

    def module(self, ctx: PAdicContext) -> FpModule:
        snf = p_local_snf(self.relations, ctx)
        return FpModule(self.generators - snf.rank, tuple(d for d in snf.valuations if d > 0))

    def direct_sum(self, other: "Presentation") -> "Presentation":
        return Presentation(self.generators + other.generators, self.relations.block_diagonal(other.relations))


def in_span(relations: QMatrix, vectors: QMatrix, ctx: PAdicContext) -> bool:
    """Whether every column of `vectors` lies in the Z_(p)-span of the columns of `relations`."""
    if not vectors.is_p_integral(ctx):
        return False
    if vectors.ncols == 0:
        return True
    snf = p_local_snf(relations, ctx)
    y = snf.left @ vectors
    for i, row in enumerate(y.rows):
        for x in row:
            if i >= snf.rank:
                if x != 0:
                    return False
            elif x != 0 and valuation(x, ctx) < snf.valuations[i]:
                return False
    return True


@dataclass(frozen=True)
class ModuleMap:
    """A map of presented modules given on generators; relations must go to relations."""

    source: Presentation
    target: Presentation
    matrix: QMatrix
    ctx: PAdicContext

    def __post_init__(self):
        if self.matrix.shape != (self.target.generators, self.source.generators):
            raise PAdicError(
                f"map matrix has shape {self.matrix.shape}, expected "
                f"{(self.target.generators, self.source.generators)}"
            )
        if not self.matrix.is_p_integral(self.ctx):
            raise PAdicError(f"map matrix is not p-integral for p={self.ctx.p}")
        if not in_span(self.target.relations, self.matrix @ self.source.relations, self.ctx):
            raise PAdicError("map does not carry relations to relations")

    def compose(self, other: "ModuleMap") -> "ModuleMap":
        """self after other."""
        return ModuleMap(other.source, self.target, self.matrix @ other.matrix, self.ctx)


@dataclass(frozen=True)
class Subquotient:
    """
    A submodule L of Z_(p)^g given by a basis (columns), and the quotient of L
    by some relations expressed in that basis.
    """

    basis: QMatrix
    presentation: Presentation
    _snf: SmithForm = field(repr=False)
    ctx: PAdicContext = field(repr=False)

    def coordinates(self, vectors: QMatrix) -> QMatrix:
        """Express columns lying in span(basis) in basis coordinates."""
        k = self._snf.rank
        y = self._snf.left @ vectors
        for i in range(k, y.nrows):
            if any(x != 0 for x in y.rows[i]):
                raise PAdicError("vector is not in the span of the basis")
        rows = tuple(
            tuple(x / self.ctx.power(self._snf.valuations[i]) for x in y.rows[i]) for i in range(k)
        )
        coords = QMatrix(rows, vectors.ncols)
        if not coords.is_p_integral(self.ctx):
            raise PAdicError("vector is not in the lattice spanned by the basis")
        return coords


def lattice_basis(generators: QMatrix, ctx: PAdicContext) -> Tuple[QMatrix, SmithForm]:
    """A Z_(p)-basis of the span of the columns, via L^-1 D."""
    snf = p_local_snf(generators, ctx)
    cols = []
    for i, d in enumerate(snf.valuations):
        scale = ctx.power(d)
        cols.append([x * scale for x in snf.left_inverse.column(i)])
    return QMatrix.from_columns(cols, generators.nrows), snf


def kernel_subquotient(f: ModuleMap) -> Subquotient:
    """
    Kernel of f as {x : A x in span R_target} modulo R_source.

    The preimage lattice is the projection of the integral kernel of
    [A | -R_target]; its basis comes from a second Smith form.
    """
    ctx = f.ctx
    g = f.source.generators
    block = f.matrix.hstack(-f.target.relations)
    snf = p_local_snf(block, ctx)
    kernel_cols = [snf.right.column(j)[:g] for j in range(snf.rank, block.ncols)]
    gens = QMatrix.from_columns(kernel_cols, g) if kernel_cols else QMatrix.zeros(g, 0)
    basis, basis_snf = lattice_basis(gens, ctx)
    sub = Subquotient(basis, Presentation(basis.ncols, QMatrix.zeros(basis.ncols, 0)), basis_snf, ctx)
    relations = sub.coordinates(f.source.relations)
    return Subquotient(basis, Presentation(basis.ncols, relations), basis_snf, ctx)


def cokernel_presentation(f: ModuleMap) -> Presentation:
    return Presentation(f.target.generators, f.target.relations.hstack(f.matrix))


def kernel(f: ModuleMap) -> FpModule:
    return kernel_subquotient(f).presentation.module(f.ctx)


def cokernel(f: ModuleMap) -> FpModule:
    return cokernel_presentation(f).module(f.ctx)
