import json
from fractions import Fraction
from pathlib import Path

import pytest

from .gauge import (
    DieudonneGauge,
    GaugeSpec,
    HodgeTable,
    Summand,
    Tier,
    direct_sum,
    gauge_from_dieudonne,
    mu_exponent_via_bockstein,
    shifted,
    sign,
    twisted,
)
from .isocrystal import IsocrystalCharPoly, dm_lattice
from .padic_core import PAdicContext, QMatrix, RatPolynomial
from .schema import InputDocument
from .zeta import (
    SurfaceData,
    Verdict,
    ZetaError,
    ZetaFunction,
    artin_tate_check,
    degree_diagnostics,
    mu_route_b,
    ord_at,
    slope_deficit,
    special_value,
    special_value_norm,
    surface_beta,
    surface_report,
    twist_shift_laws,
    unit_root_excess,
    verify_theorem,
    zeta_from_gauge,
)

CORPUS = Path(__file__).parent / "corpus"
WEIGHTS = range(-3, 6)


def load_corpus(name):
    with open(CORPUS / name) as f:
        return InputDocument.model_validate(json.load(f))


def corpus_gauge(name, shift=0, twist=0):
    return twisted(shifted(load_corpus("gauges.json").gauge(name), shift), twist)


def degree_totals(*reports):
    totals = {}
    for report in reports:
        for d in report.degrees:
            old = totals.get(d.degree, (0, 0, 0, 0))
            totals[d.degree] = tuple(x + y for x, y in zip(old, (d.multiplicity, d.nu, d.sigma, d.excess)))
    return totals


def charpoly(ctx, degree, coefficients, hodge=None):
    return Summand(Tier.CHARPOLY, degree, IsocrystalCharPoly.of(ctx, *coefficients), hodge=hodge)


@pytest.fixture
def ctx():
    return PAdicContext(5)


@pytest.fixture
def unit_spec(ctx):
    return GaugeSpec(ctx, (Summand.of_gauge(DieudonneGauge(ctx, 1, 0, QMatrix.of([[1]]))),))


@pytest.fixture
def elliptic(ctx):
    summands = (
        charpoly(ctx, 0, (1, -1), HodgeTable.of({(0, 0): 1})),
        charpoly(ctx, 1, (1, -1, 5), HodgeTable.of({(1, 0): 1, (0, 1): 1})),
        charpoly(ctx, 2, (1, -5), HodgeTable.of({(1, 1): 1})),
    )
    return GaugeSpec(ctx, summands)


@pytest.fixture
def projective_plane(ctx):
    summands = (charpoly(ctx, 0, (1, -1)), charpoly(ctx, 2, (1, -5)), charpoly(ctx, 4, (1, -25)))
    return GaugeSpec(ctx, summands, hodge=HodgeTable.of({(0, 0): 1, (1, 1): 1, (2, 2): 1}))


class TestZetaFunction:

    def test_from_unit_gauge(self, unit_spec):
        z = zeta_from_gauge(unit_spec)
        assert z.as_dict() == {0: RatPolynomial.of(1, -1)}
        assert zeta_from_gauge(GaugeSpec(unit_spec.ctx, unit_spec.summands, shift=1)).as_dict() == {
            1: RatPolynomial.of(1, -1)
        }

    def test_factors_in_same_degree_multiply(self, ctx):
        z = ZetaFunction.of(ctx, {1: RatPolynomial.of(1, -1)}) * ZetaFunction.of(ctx, {1: RatPolynomial.of(1, -5)})
        assert z.factor(1) == RatPolynomial.of(1, -6, 5)
        assert z.factor(0) == RatPolynomial.one()

    def test_factor_must_start_with_one(self, ctx):
        with pytest.raises(ZetaError, match="P\\(0\\) = 2"):
            ZetaFunction.of(ctx, {0: RatPolynomial.of(2, 1)})

    def test_evaluate_and_pole(self, elliptic):
        z = zeta_from_gauge(elliptic)
        assert z.evaluate(Fraction(1, 2)) == Fraction(-7, 3)
        with pytest.raises(ZetaError, match="pole at t = 1"):
            z.evaluate(1)

    def test_twist_and_shift(self, ctx):
        z = ZetaFunction.of(ctx, {0: RatPolynomial.of(1, -1)})
        assert z.twisted(1).factor(0) == RatPolynomial.of(1, Fraction(-1, 5))
        assert z.shifted(2).degrees == [2]
        assert z.to_dict() == {"0": ["1", "-1"]}


class TestSpecialValue:

    def test_orders(self, unit_spec, elliptic, projective_plane):
        assert ord_at(zeta_from_gauge(unit_spec), 0) == -1
        assert ord_at(zeta_from_gauge(unit_spec), 1) == 0
        assert ord_at(zeta_from_gauge(elliptic), 1) == -1
        assert ord_at(zeta_from_gauge(projective_plane), 1) == -1

    def test_elliptic_curve_at_one(self, elliptic):
        z = zeta_from_gauge(elliptic)
        assert special_value(z, 1) == Fraction(5, 4)
        assert special_value_norm(z, 1) == -1

    def test_projective_plane_norm(self, projective_plane):
        assert special_value_norm(zeta_from_gauge(projective_plane), 1) == -1

    def test_slope_deficit(self, ctx):
        assert slope_deficit(RatPolynomial.of(1, -1, 5), 1, ctx) == 1
        assert slope_deficit(RatPolynomial.of(1, 0, -5), 1, ctx) == 1
        assert slope_deficit(RatPolynomial.of(1, -1, 5), 0, ctx) == 0

    def test_unit_root_excess(self, ctx):
        # u^2 - u + 5: the unit root is congruent to 1 mod p
        assert unit_root_excess(RatPolynomial.of(1, -1, 5), 0, ctx) == 1
        assert unit_root_excess(RatPolynomial.of(1, -1, 5), 1, ctx) == 1
        assert unit_root_excess(RatPolynomial.of(1, 0, 5), 1, ctx) == 0
        assert unit_root_excess(RatPolynomial.of(1, -1), 0, ctx) == 0

    def test_degree_diagnostics(self, elliptic):
        d = degree_diagnostics(zeta_from_gauge(elliptic), 1, 1)
        assert (d.multiplicity, d.nu, d.sigma, d.excess) == (0, 0, 1, 1)
        assert d.to_dict()["e_split"] == 1

    def test_mu_route_b(self, ctx, elliptic, unit_spec):
        assert mu_route_b(zeta_from_gauge(elliptic), 1).exponent == 1
        supersingular = ZetaFunction.of(ctx, {1: RatPolynomial.of(1, 0, 5)})
        assert mu_route_b(supersingular, 1).exponent == 0
        assert mu_route_b(zeta_from_gauge(unit_spec), 0).exponent == 0
        assert mu_route_b(zeta_from_gauge(elliptic), 1).consistent


class TestVerifyTheorem:

    def test_elliptic_curve(self, elliptic):
        report = verify_theorem(elliptic, 1)
        assert report.verdict is Verdict.VERIFIED
        assert (report.rho, report.lhs_exponent, report.mu_exponent, report.chi) == (-1, -1, 1, 0)
        assert report.limit == Fraction(5, 4)
        assert report.to_dict()["lhs_norm"] == "p^-1"

    def test_elliptic_curve_at_zero(self, elliptic):
        report = verify_theorem(elliptic, 0)
        assert (report.lhs_exponent, report.mu_exponent, report.chi) == (-1, 1, 0)
        assert report.verdict is Verdict.VERIFIED

    def test_projective_plane(self, projective_plane):
        report = verify_theorem(projective_plane, 1)
        assert (report.lhs_exponent, report.mu_exponent, report.chi) == (-1, 0, 1)
        assert report.verdict is Verdict.VERIFIED

    def test_unit_gauge(self, unit_spec):
        report = verify_theorem(unit_spec, 1)
        assert (report.rho, report.lhs_exponent, report.mu_exponent, report.chi) == (0, -1, 0, 1)
        assert report.verdict is Verdict.VERIFIED

    def test_ordinary_dieudonne(self, ctx):
        g = DieudonneGauge(ctx, 1, 1, QMatrix.diagonal([1, 5]), degree=1)
        report = verify_theorem(GaugeSpec(ctx, (Summand.of_gauge(g),)), 1)
        assert (report.rho, report.lhs_exponent, report.mu_exponent, report.chi) == (1, 1, 0, -1)
        assert report.verdict is Verdict.VERIFIED

    @pytest.mark.parametrize("r,a,chi", [(1, 0, 0), (2, 1, -1)])
    def test_multiplicative(self, ctx, r, a, chi):
        g = DieudonneGauge(ctx, 0, 1, QMatrix.of([[5]]), degree=1)
        report = verify_theorem(GaugeSpec(ctx, (Summand.of_gauge(g),)), r)
        assert (report.lhs_exponent, report.chi) == (a, chi)
        assert report.verdict is Verdict.VERIFIED

    def test_wrong_hodge_table_is_inconsistent(self, ctx):
        spec = GaugeSpec(ctx, (charpoly(ctx, 0, (1, -5), HodgeTable.of({(0, 0): 1})),))
        report = verify_theorem(spec, 1)
        assert report.verdict is Verdict.INCONSISTENT
        assert any("slope-Hodge" in issue for issue in report.issues)

    def test_missing_hodge_is_inconsistent(self, ctx):
        report = verify_theorem(GaugeSpec(ctx, (charpoly(ctx, 2, (1, -5)),)), 1)
        assert report.chi is None
        assert report.verdict is Verdict.INCONSISTENT

    def test_corpus_is_verified(self):
        for name in ("gauges.json", "gauges_f25.json"):
            document = load_corpus(name)
            for gauge in document.gauges:
                spec = document.gauge(gauge)
                for r in WEIGHTS:
                    report = verify_theorem(spec, r)
                    assert report.verdict is Verdict.VERIFIED, (name, gauge, r, report.issues)

    def test_inconsistent_corpus(self):
        document = load_corpus("inconsistent.json")
        for gauge in document.gauges:
            assert verify_theorem(document.gauge(gauge), 1).verdict is Verdict.INCONSISTENT, gauge

    def test_elliptic_curve_over_f25(self):
        report = verify_theorem(load_corpus("gauges_f25.json").gauge("elliptic_a1"), 1)
        assert (report.lhs_exponent, report.mu_exponent, report.chi) == (-2, 2, 0)

    @pytest.mark.parametrize("s,r", [(0, 1), (1, 1), (1, 2), (1, 3), (2, 3)])
    def test_bockstein_excess_matches_polygon(self, ctx, s, r):
        g = gauge_from_dieudonne(dm_lattice(s, r, ctx), degree=1)
        for w in WEIGHTS:
            assert mu_exponent_via_bockstein(g, w) == unit_root_excess(g.isocrystal().P, w, ctx)

    def test_lhs_exponent_is_special_value_norm(self):
        document = load_corpus("gauges.json")
        for gauge in document.gauges:
            spec = document.gauge(gauge)
            z = zeta_from_gauge(spec)
            for r in WEIGHTS:
                report = verify_theorem(spec, r)
                assert report.lhs_exponent == special_value_norm(z, r), (gauge, r)
                assert report.lhs_exponent == sum(sign(d.degree) * d.nu for d in report.degrees), (gauge, r)

    def test_filtered_torsion(self):
        report = verify_theorem(corpus_gauge("filtered_torsion"), 1)
        assert (report.rho, report.lhs_exponent, report.mu_exponent, report.chi) == (0, 0, 1, -1)
        assert report.torsion_mu_exponent == 1
        assert report.verdict is Verdict.VERIFIED
        assert report.checks[0]["nygaard"] == -1

    def test_filtered_torsion_away_from_the_jump(self):
        for r in WEIGHTS:
            if r == 1:
                continue
            report = verify_theorem(corpus_gauge("filtered_torsion"), r)
            assert (report.mu_exponent, report.chi, report.torsion_mu_exponent) == (0, 0, 0), r

    def test_filtered_torsion_with_short_filtration(self):
        report = verify_theorem(load_corpus("inconsistent.json").gauge("filtered_torsion_short_fil1"), 1)
        assert report.verdict is Verdict.INCONSISTENT
        assert any("Nygaard characteristic disagrees" in issue for issue in report.issues)


class TestDirectSum:

    @pytest.mark.parametrize(
        "left,right",
        [
            (("elliptic_a1",), ("p2",)),
            (("unit",), ("elliptic_a1_shift1",)),
            (("elliptic_a1", 1), ("multiplicative",)),
            (("unit", 0, 2), ("p1xp1",)),
            (("lattice_1_2", 0, -1), ("filtered_torsion",)),
            (("unit_plus_torsion",), ("filtered_torsion", 1)),
            (("elliptic_supersingular", -1, 1), ("torsion_ordinary_m2", 0, -1)),
        ],
    )
    def test_invariants_add(self, left, right):
        g, h = corpus_gauge(*left), corpus_gauge(*right)
        total = direct_sum(g, h)
        for r in WEIGHTS:
            parts = [verify_theorem(g, r), verify_theorem(h, r)]
            whole = verify_theorem(total, r)
            for attr in ("rho", "lhs_exponent", "mu_exponent", "chi", "torsion_mu_exponent"):
                assert getattr(whole, attr) == sum(getattr(p, attr) for p in parts), (attr, r)
            assert degree_totals(whole) == degree_totals(*parts), r


class TestLaws:

    @pytest.mark.parametrize("i", [-2, -1, 0, 1, 2])
    def test_twist_and_shift_laws(self, unit_spec, elliptic, i):
        for spec in (unit_spec, elliptic):
            checks = twist_shift_laws(spec, i, 1, range(-1, 3))
            assert all(c.holds for c in checks), [c.to_dict() for c in checks if not c.holds]

    def test_even_shift(self, elliptic):
        assert all(c.holds for c in twist_shift_laws(elliptic, 0, 2, [1]))


class TestSurfaces:

    def test_surface_beta(self, ctx):
        assert surface_beta(0, QMatrix.of([[1]]), 1, ctx) == 1
        assert surface_beta(0, QMatrix.of([[1]]), 5, ctx) == Fraction(1, 25)
        assert surface_beta(0, QMatrix.of([[5]]), 1, ctx) == 5

    def test_singular_gram(self, ctx):
        with pytest.raises(ZetaError, match="singular Gram matrix"):
            surface_beta(0, QMatrix.of([[1, 1], [1, 1]]), 1, ctx)

    def test_surface_validation(self):
        with pytest.raises(ZetaError, match="must be square"):
            SurfaceData(QMatrix.of([[1, 0]]))
        with pytest.raises(ZetaError, match="torsion order must be positive"):
            SurfaceData(QMatrix.of([[1]]), ns_torsion_order=0)

    def test_projective_plane(self, projective_plane):
        report = surface_report(projective_plane, SurfaceData(QMatrix.of([[1]])))
        assert report["rho"] == 1
        assert report["verdict"] == "consistent"
        assert report["parity"] == "even"
        assert report["mu_exponent"] == 0

    def test_quadric(self):
        document = load_corpus("gauges.json")
        surface = document.surface("p1xp1")
        report = surface_report(document.gauge(surface.gauge), surface.to_surface())
        assert report["rho"] == 2
        assert report["agrees"]

    def test_corrupted_chi_is_detected(self, ctx):
        at = artin_tate_check(RatPolynomial.of(1, -5), SurfaceData(QMatrix.of([[1]]), chi_O=2), 0, ctx)
        assert not at.agrees
        assert at.parity == "odd"
        assert at.verdict == "Artin-Tate inconsistency"

    def test_gram_size_must_match_rho(self, ctx):
        at = artin_tate_check(RatPolynomial.of(1, -5), SurfaceData(QMatrix.identity(2)), 0, ctx)
        assert not at.gram_size_ok
        assert at.to_dict()["verdict"] == "Artin-Tate inconsistency"
