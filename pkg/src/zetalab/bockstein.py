"""
Bockstein complexes and their length characteristics.

For a module M with endomorphism theta the Bockstein complex is the two-term
complex [ker theta -> coker theta] given by the composite M^theta -> M -> M_theta.
Complexes with an endomorphism are reduced degreewise through their cohomology.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

try:
    from .padic_core import (
        FpModule,
        ModuleMap,
        PAdicContext,
        PAdicError,
        Presentation,
        QMatrix,
        ZetalabError,
        cokernel,
        cokernel_presentation,
        kernel,
        kernel_subquotient,
        p_local_snf,
        valuation,
        in_span,
    )
except ImportError:
    from padic_core import (
        FpModule,
        ModuleMap,
        PAdicContext,
        PAdicError,
        Presentation,
        QMatrix,
        ZetalabError,
        cokernel,
        cokernel_presentation,
        kernel,
        kernel_subquotient,
        p_local_snf,
        valuation,
        in_span,
    )

logger = logging.getLogger(__name__)


class BocksteinError(ZetalabError):
    pass


@dataclass(frozen=True)
class EndoModule:
    """A presented module with an endomorphism theta (given on generators)."""

    module: Presentation
    theta: ModuleMap

    def __post_init__(self):
        if self.theta.source != self.module or self.theta.target != self.module:
            raise BocksteinError("theta must be an endomorphism of the given module")

    @classmethod
    def of(cls, module: Presentation, matrix: QMatrix, ctx: PAdicContext) -> "EndoModule":
        try:
            return cls(module, ModuleMap(module, module, matrix, ctx))
        except PAdicError as e:
            raise BocksteinError(f"Failed to build endomorphism: {e}")

    @classmethod
    def free(cls, matrix: QMatrix, ctx: PAdicContext) -> "EndoModule":
        return cls.of(Presentation.free(matrix.nrows), matrix, ctx)

    @property
    def ctx(self) -> PAdicContext:
        return self.theta.ctx

    @property
    def matrix(self) -> QMatrix:
        return self.theta.matrix

    def power(self, k: int) -> "EndoModule":
        return EndoModule.of(self.module, self.matrix.power(k), self.ctx)

    def compose(self, other: "EndoModule") -> "EndoModule":
        """theta after other.theta on the same module."""
        if other.module != self.module:
            raise BocksteinError("endomorphisms live on different modules")
        return EndoModule.of(self.module, self.matrix @ other.matrix, self.ctx)


@dataclass(frozen=True)
class BocksteinData:
    kernel: FpModule
    cokernel: FpModule
    connecting: ModuleMap


def bockstein_complex(em: EndoModule) -> BocksteinData:
    """Kernel, cokernel and the connecting map M^theta -> M -> M_theta."""
    ker = kernel_subquotient(em.theta)
    coker = cokernel_presentation(em.theta)
    connecting = ModuleMap(ker.presentation, coker, ker.basis, em.ctx)
    return BocksteinData(
        kernel=ker.presentation.module(em.ctx),
        cokernel=coker.module(em.ctx),
        connecting=connecting,
    )


def bockstein_char(em: EndoModule) -> Optional[int]:
    """length(ker c) - length(coker c) for the connecting map c, or None if undefined."""
    data = bockstein_complex(em)
    h0 = kernel(data.connecting)
    h1 = cokernel(data.connecting)
    if not (h0.is_finite and h1.is_finite):
        return None
    return h0.length() - h1.length()


def rational_kernel_rank(em: EndoModule) -> int:
    """dim ker of theta on M tensor Q, i.e. g - rank[theta | relations]."""
    stacked = em.matrix.hstack(em.module.relations)
    return em.module.generators - stacked.rank()


def zero_is_semisimple(em: EndoModule) -> bool:
    """Whether 0 is a semisimple eigenvalue of theta[1/p] (kernel rank stable at once)."""
    return rational_kernel_rank(em) == rational_kernel_rank(em.power(2))


def stabilization_index(em: EndoModule) -> int:
    """Smallest k >= 1 with rank ker(theta^k) = rank ker(theta^(k+1)) over Q."""
    cap = em.module.generators + 1
    previous = rational_kernel_rank(em)
    for k in range(1, cap + 1):
        following = rational_kernel_rank(em.power(k + 1))
        if following == previous:
            return k
        previous = following
    raise AssertionError(f"kernel filtration did not stabilize within {cap} steps")


def bockstein_char_powers(em: EndoModule, k_max: int) -> Tuple[int, List[Optional[int]]]:
    """Stabilization index and chi(Bock(M, theta^k)) for k = 1..k_max."""
    index = stabilization_index(em)
    values = [bockstein_char(em.power(k)) for k in range(1, k_max + 1)]
    return index, values


@dataclass(frozen=True)
class EndoComplex:
    """
    A bounded complex of presented modules M^start .. M^(start+len-1) with a
    compatible endomorphism theta in every degree.
    """

    start: int
    modules: Tuple[Presentation, ...]
    differentials: Tuple[QMatrix, ...]
    thetas: Tuple[QMatrix, ...]
    ctx: PAdicContext

    def __post_init__(self):
        count = len(self.modules)
        if count == 0:
            raise BocksteinError("a complex needs at least one degree")
        if len(self.differentials) != count - 1 or len(self.thetas) != count:
            raise BocksteinError(
                f"expected {count - 1} differentials and {count} thetas, "
                f"got {len(self.differentials)} and {len(self.thetas)}"
            )
        try:
            for i, d in enumerate(self.differentials):
                ModuleMap(self.modules[i], self.modules[i + 1], d, self.ctx)
            for i, t in enumerate(self.thetas):
                ModuleMap(self.modules[i], self.modules[i], t, self.ctx)
        except PAdicError as e:
            raise BocksteinError(f"Invalid complex: {e}")
        for i in range(count - 2):
            composite = self.differentials[i + 1] @ self.differentials[i]
            if not in_span(self.modules[i + 2].relations, composite, self.ctx):
                raise BocksteinError(f"d o d is not zero out of degree {self.start + i}")
        for i, d in enumerate(self.differentials):
            defect = self.thetas[i + 1] @ d - d @ self.thetas[i]
            if not in_span(self.modules[i + 1].relations, defect, self.ctx):
                raise BocksteinError(f"theta does not commute with d out of degree {self.start + i}")

    @classmethod
    def concentrated(cls, em: EndoModule, degree: int = 0) -> "EndoComplex":
        return cls(degree, (em.module,), (), (em.matrix,), em.ctx)

    @property
    def degrees(self) -> range:
        return range(self.start, self.start + len(self.modules))

    def cohomology(self, degree: int) -> EndoModule:
        """H^degree with the endomorphism induced by theta."""
        i = degree - self.start
        if i < 0 or i >= len(self.modules):
            raise BocksteinError(f"degree {degree} outside the complex")
        here = self.modules[i]
        if i + 1 < len(self.modules):
            outgoing = ModuleMap(here, self.modules[i + 1], self.differentials[i], self.ctx)
        else:
            outgoing = ModuleMap(here, Presentation.free(0), QMatrix.zeros(0, here.generators), self.ctx)
        cycles = kernel_subquotient(outgoing)
        relations = cycles.presentation.relations
        if i > 0:
            boundaries = cycles.coordinates(self.differentials[i - 1])
            relations = relations.hstack(boundaries)
        theta = cycles.coordinates(self.thetas[i] @ cycles.basis)
        return EndoModule.of(Presentation(cycles.basis.ncols, relations), theta, self.ctx)

    def power(self, k: int) -> "EndoComplex":
        return EndoComplex(
            self.start,
            self.modules,
            self.differentials,
            tuple(t.power(k) for t in self.thetas),
            self.ctx,
        )


def _sign(degree: int) -> int:
    return -1 if degree % 2 else 1


def bockstein_char_complex(ec: EndoComplex) -> Optional[int]:
    """Alternating sum of the degreewise characteristics of H^i, or None."""
    total = 0
    for degree in ec.degrees:
        value = bockstein_char(ec.cohomology(degree))
        if value is None:
            return None
        total += _sign(degree) * value
    return total


def stable_bockstein_char(x: Union[EndoModule, EndoComplex]) -> int:
    """
    chi(Bock(., theta^k)) / k for k past the point where the rational kernel
    filtration of theta stops growing (in every cohomological degree).
    """
    if isinstance(x, EndoModule):
        x = EndoComplex.concentrated(x)
    pieces = [x.cohomology(degree) for degree in x.degrees]
    k = max(stabilization_index(h) for h in pieces)
    total = 0
    for degree, h in zip(x.degrees, pieces):
        value = bockstein_char(h.power(k))
        if value is None:
            raise AssertionError(f"Bockstein characteristic undefined past stabilization (k={k})")
        total += _sign(degree) * value
    if total % k:
        raise AssertionError(f"chi(Bock(theta^{k})) = {total} is not divisible by {k}")
    logger.debug(f"stable Bockstein characteristic: k={k}, chi={total}")
    return total // k


def _free_quotient_block(em: EndoModule) -> QMatrix:
    """theta on M tensor Q, in coordinates where the relations span the first rank coordinates."""
    snf = p_local_snf(em.module.relations, em.ctx)
    rotated = snf.left @ em.matrix @ snf.left_inverse
    keep = list(range(snf.rank, em.module.generators))
    return rotated.submatrix(keep, keep)


def uk_valuation(em: EndoModule) -> int:
    """-v_p of the product of the nonzero eigenvalues of theta on the free quotient."""
    block = _free_quotient_block(em)
    coeffs = list(block.charpoly())
    # strip the t^z factor: trailing zero coefficients of the descending list
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    constant = coeffs[-1]
    if len(coeffs) == 1:
        return 0
    return -valuation(constant, em.ctx)


# ---------------------------------------------------------------------------
# Extensions
# ---------------------------------------------------------------------------


def extension(sub: EndoModule, quotient: EndoModule, coupling: QMatrix) -> EndoModule:
    """
    The middle term of 0 -> sub -> E -> quotient -> 0 split as modules, with
    theta_E = [[theta_sub, coupling], [0, theta_quotient]].
    """
    if coupling.shape != (sub.module.generators, quotient.module.generators):
        raise BocksteinError(
            f"coupling has shape {coupling.shape}, expected "
            f"{(sub.module.generators, quotient.module.generators)}"
        )
    top = sub.matrix.hstack(coupling)
    bottom = QMatrix.zeros(quotient.module.generators, sub.module.generators).hstack(quotient.matrix)
    theta = QMatrix(top.rows + bottom.rows, top.ncols)
    return EndoModule.of(sub.module.direct_sum(quotient.module), theta, sub.ctx)


@dataclass(frozen=True)
class AdditivityReport:
    plain: Tuple[Optional[int], Optional[int], Optional[int]]
    stable: Tuple[int, int, int]

    @property
    def plain_additive(self) -> Optional[bool]:
        sub, middle, quotient = self.plain
        if None in self.plain:
            return None
        return middle == sub + quotient

    @property
    def stable_additive(self) -> bool:
        sub, middle, quotient = self.stable
        return middle == sub + quotient


def additivity_report(sub: EndoModule, quotient: EndoModule, coupling: QMatrix) -> AdditivityReport:
    middle = extension(sub, quotient, coupling)
    return AdditivityReport(
        plain=(bockstein_char(sub), bockstein_char(middle), bockstein_char(quotient)),
        stable=(stable_bockstein_char(sub), stable_bockstein_char(middle), stable_bockstein_char(quotient)),
    )


def scaling_identity_holds(em: EndoModule, extra: int = 2) -> bool:
    """(r+1) chi(theta^r) = r chi(theta^(r+1)) for r from the stabilization index on."""
    k = stabilization_index(em)
    values = [bockstein_char(em.power(r)) for r in range(k, k + extra + 2)]
    for offset in range(len(values) - 1):
        r = k + offset
        if values[offset] is None or values[offset + 1] is None:
            return False
        if (r + 1) * values[offset] != r * values[offset + 1]:
            return False
    return True


def characteristic_summary(em: EndoModule) -> dict:
    """Plain and stable characteristics with the data that explains them."""
    data = bockstein_complex(em)
    plain = bockstein_char(em)
    return {
        "kernel": str(data.kernel),
        "cokernel": str(data.cokernel),
        "plain": plain,
        "stable": stable_bockstein_char(em),
        "eigenvalue_route": uk_valuation(em),
        "stabilization_index": stabilization_index(em),
        "zero_semisimple": zero_is_semisimple(em),
    }
