import random
from fractions import Fraction
from math import gcd

import pytest

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
    check_niceob,
    descent_rank_checks,
    direct_sum,
    gauge_checks,
    gauge_from_dieudonne,
    hodge_from_pdiv,
    mu_exponent_via_bockstein,
    nygaard_characteristic,
    order_of_vanishing_syn,
    pdiv_invariants,
    shifted,
    sign,
    summands_by_degree,
    syntomic_cohomology,
    twisted,
    weighted_hodge_euler,
    _NygaardData,
)
from .isocrystal import DieudonneMatrix, IsocrystalCharPoly, SlopeDatum, dm_lattice, slope_decomposition
from .padic_core import FpModule, PAdicContext, Presentation, QMatrix

WEIGHTS = range(-3, 6)


@pytest.fixture
def ctx():
    return PAdicContext(5)


@pytest.fixture
def unit(ctx):
    return DieudonneGauge(ctx, 1, 0, QMatrix.of([[1]]))


@pytest.fixture
def mu_type(ctx):
    return DieudonneGauge(ctx, 0, 1, QMatrix.of([[5]]))


@pytest.fixture
def ordinary(ctx):
    return DieudonneGauge(ctx, 1, 1, QMatrix.diagonal([1, 5]))


@pytest.fixture
def dieudonne_corpus(ctx, unit, mu_type, ordinary):
    gauges = [unit, mu_type, ordinary, DieudonneGauge(ctx, 1, 1, QMatrix.of([[0, 5], [1, 0]]), degree=1)]
    for s, r in [(0, 1), (1, 1), (1, 2), (1, 3), (2, 3)]:
        gauges.append(gauge_from_dieudonne(dm_lattice(s, r, ctx), degree=1))
    return gauges


FILTERED_HODGE = HodgeTable.of({(0, -1): 1, (1, -1): 2, (2, -3): 1})


def torsion_level(ctx, exponent, can, phi):
    return FiltrationLevel(Presentation.torsion([exponent], ctx), QMatrix.of([[can]]), QMatrix.of([[phi]]))


@pytest.fixture
def filtered(ctx):
    # Fil^1 = Z/p^2 maps onto M^u = Z/p, Fil^2 = Z/p is stable
    levels = (torsion_level(ctx, 2, 1, 1), torsion_level(ctx, 1, 5, 1))
    return FilteredTorsionGauge(ctx, Presentation.torsion([1], ctx), QMatrix.of([[0]]), levels, modulus_exponent=2)


def random_filtered_gauge(rng, ctx):
    a = rng.randint(1, 3)
    levels, exponents = [], [a]
    for _ in range(rng.randint(0, 2)):
        b = rng.randint(1, 3)
        scale = 5 ** max(0, a - b)
        levels.append(torsion_level(ctx, b, scale * rng.randint(0, 4), scale * rng.randint(0, 4)))
        exponents.append(b)
    if levels:
        levels.append(torsion_level(ctx, a, rng.randint(0, 4), rng.randint(1, 4)))
        frobenius = rng.randint(0, 4)
    else:
        frobenius = rng.randint(1, 4)
    return FilteredTorsionGauge(
        ctx,
        Presentation.torsion([a], ctx),
        QMatrix.of([[frobenius]]),
        tuple(levels),
        degree=rng.randint(-1, 1),
        modulus_exponent=max(exponents),
    )


class TestHodgeTable:

    def test_merges_and_drops_zeros(self):
        table = HodgeTable((((0, 0), 1), ((0, 0), 1), ((1, 1), 0)))
        assert table.as_dict() == {(0, 0): 2}
        assert table.get(1, 1) == 0

    def test_negative_entries_raise(self):
        with pytest.raises(GaugeError, match="negative Hodge number"):
            HodgeTable.of({(0, 0): -1})

    def test_twist_and_shift(self):
        table = HodgeTable.of({(0, 0): 1})
        assert table.twisted(1) == HodgeTable.of({(-1, 1): 1})
        assert table.shifted(1) == HodgeTable.of({(0, 1): 1})
        assert table.twisted(2).twisted(-2) == table

    def test_degrees_and_range(self):
        table = HodgeTable.of({(0, 0): 1, (1, 0): 1, (0, 1): 1, (1, 1): 1})
        assert table.degrees() == [0, 1, 2]
        assert table.degree_dimension(1) == 2
        assert table.hodge_range() == (0, 1)
        assert HodgeTable().hodge_range() is None
        assert str(HodgeTable()) == "{}"

    def test_to_list(self):
        assert HodgeTable.of({(1, -1): 2}).to_list() == [{"i": 1, "j": -1, "h": 2}]


class TestWeightedHodgeEuler:

    def test_elliptic_curve_at_one(self):
        table = HodgeTable.of({(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 1})
        assert weighted_hodge_euler(table, 1) == 0

    @pytest.mark.parametrize("r", range(1, 6))
    def test_pdiv_positive_weights(self, r):
        table = hodge_from_pdiv(1, 2)
        assert weighted_hodge_euler(table, r) == r * 2 + (r - 1) * 1

    @pytest.mark.parametrize("r", range(-3, 1))
    def test_pdiv_nonpositive_weights(self, r):
        assert weighted_hodge_euler(hodge_from_pdiv(1, 2), r) == 0

    def test_hodge_from_pdiv(self):
        assert hodge_from_pdiv(1, 1) == HodgeTable.of({(0, 0): 1, (1, -1): 1})
        assert hodge_from_pdiv(0, 1) == HodgeTable.of({(0, 0): 1})
        assert hodge_from_pdiv(1, 0) == HodgeTable.of({(1, -1): 1})
        with pytest.raises(GaugeError, match="nonnegative"):
            hodge_from_pdiv(-1, 0)

    def test_sign(self):
        assert [sign(k) for k in (-2, -1, 0, 1, 2)] == [1, -1, 1, -1, 1]


class TestDieudonneGauge:

    def test_phi_must_be_invertible(self, ctx):
        with pytest.raises(GaugeError, match="not invertible"):
            DieudonneGauge(ctx, 1, 0, QMatrix.of([[5]]))

    def test_w_columns_divisible_by_p(self, ctx):
        with pytest.raises(GaugeError, match="F/p is not p-integral"):
            DieudonneGauge(ctx, 0, 1, QMatrix.of([[1]]))

    def test_integrality(self, ctx):
        with pytest.raises(GaugeError, match="F is not p-integral"):
            DieudonneGauge(ctx, 1, 0, QMatrix.of([[Fraction(1, 5)]]))

    def test_shape(self, ctx):
        with pytest.raises(GaugeError, match="expected \\(2, 2\\)"):
            DieudonneGauge(ctx, 1, 1, QMatrix.of([[1]]))

    def test_prime_field_only(self):
        with pytest.raises(GaugeError, match="direct syntomic route requires q = p"):
            DieudonneGauge(PAdicContext(5, 2), 1, 0, QMatrix.of([[1]]))

    def test_torsion_modulus(self, ctx):
        with pytest.raises(GaugeError, match="modulus exponent must be positive"):
            TorsionGauge(ctx, 1, 0, QMatrix.of([[1]]), modulus_exponent=0)

    def test_derived_hodge(self, ordinary):
        assert ordinary.derived_hodge() == hodge_from_pdiv(1, 1)
        moved = DieudonneGauge(ordinary.ctx, 1, 1, ordinary.F, degree=1)
        assert moved.derived_hodge() == HodgeTable.of({(0, 1): 1, (1, 0): 1})

    def test_torsion_derived_hodge_spans_two_degrees(self, ctx):
        g = TorsionGauge(ctx, 1, 0, QMatrix.of([[1]]))
        assert g.derived_hodge() == HodgeTable.of({(0, 0): 1, (0, -1): 1})

    def test_gauges_must_present_their_module(self, ctx):
        class Unpresented(_NygaardData):
            pass

        with pytest.raises(TypeError, match="abstract"):
            Unpresented()
        assert DieudonneGauge(ctx, 1, 0, QMatrix.of([[1]])).presentation() == Presentation.free(1)
        torsion = TorsionGauge(ctx, 1, 0, QMatrix.of([[1]]), modulus_exponent=2)
        assert torsion.presentation() == Presentation.cyclic_power(1, 2, ctx)


class TestNygaard:

    def test_known_values(self, unit, mu_type, ordinary):
        assert nygaard_characteristic(unit, 1) == 1
        assert nygaard_characteristic(mu_type, 1) == 0
        assert nygaard_characteristic(ordinary, 1) == 1

    @pytest.mark.parametrize("r", WEIGHTS)
    def test_free_gauges_follow_ranks(self, ordinary, r):
        expected = r + (r - 1) if r >= 1 else 0
        assert nygaard_characteristic(ordinary, r) == expected

    def test_niceob_on_corpus(self, dieudonne_corpus):
        for g in dieudonne_corpus:
            for r in WEIGHTS:
                assert check_niceob(g, r), (g, r)

    def test_niceob_rejects_corrupted_table(self, unit):
        assert not check_niceob(unit, 1, HodgeTable.of({(1, -1): 1}))

    def test_niceob_on_torsion(self, ctx):
        g = TorsionGauge(ctx, 1, 1, QMatrix.diagonal([1, 5]), modulus_exponent=2)
        for r in WEIGHTS:
            assert check_niceob(g, r)


class TestSyntomic:

    def test_unit_gauge(self, unit):
        assert syntomic_cohomology(unit, 0) == (FpModule(1), FpModule(1))
        assert syntomic_cohomology(unit, 1) == (FpModule.zero(), FpModule.zero())

    def test_mu_type(self, mu_type):
        assert syntomic_cohomology(mu_type, 1) == (FpModule(1), FpModule(1))

    def test_descent(self, unit, mu_type):
        report = descent_rank_checks(unit, 0)
        assert report.ranks == (1, 1)
        assert report.alternating_sum == 0
        assert report.u == (1,)
        assert descent_rank_checks(unit, 1).ranks == (0, 0)
        assert descent_rank_checks(mu_type, 1).holds

    def test_descent_on_corpus(self, dieudonne_corpus):
        for g in dieudonne_corpus:
            for r in WEIGHTS:
                assert descent_rank_checks(g, r).holds

    def test_order_of_vanishing(self, unit, mu_type):
        assert order_of_vanishing_syn(unit, 0).value == -1
        assert order_of_vanishing_syn(unit, 1).value == 0
        assert order_of_vanishing_syn(mu_type, 1).value == -1

    def test_order_not_applicable_without_semisimplicity(self, ctx):
        g = DieudonneGauge(ctx, 0, 2, QMatrix.of([[5, 5], [0, 5]]))
        order = order_of_vanishing_syn(g, 1)
        assert not order.applicable
        assert order.note == "formula not applicable"
        assert order_of_vanishing_syn(g, 1, assume_semisimple=True).applicable

    def test_torsion_syntomic_euler(self, ctx):
        rng = random.Random(11)
        for _ in range(30):
            t, w = rng.randint(0, 2), rng.randint(0, 2)
            if t + w == 0:
                continue
            rows = [
                [rng.randint(-4, 4) * (5 if col >= t else 1) for col in range(t + w)]
                for _ in range(t + w)
            ]
            g = TorsionGauge(ctx, t, w, QMatrix.of(rows), degree=rng.randint(-1, 1), modulus_exponent=rng.randint(1, 3))
            for r in range(-2, 4):
                h0, h1 = syntomic_cohomology(g, r)
                assert sign(g.degree) * (h0.length() - h1.length()) == -nygaard_characteristic(g, r)

    def test_bockstein_excess_for_elliptic(self, ordinary):
        supersingular = DieudonneGauge(ordinary.ctx, 1, 1, QMatrix.of([[0, 5], [1, 0]]))
        assert mu_exponent_via_bockstein(supersingular, 1) == 0
        assert mu_exponent_via_bockstein(ordinary, 1) == 0


class TestFilteredTorsionGauge:

    def test_nygaard_values(self, filtered):
        assert {r: nygaard_characteristic(filtered, r) for r in WEIGHTS} == {r: -1 if r == 1 else 0 for r in WEIGHTS}

    def test_niceob_against_declared_table(self, filtered):
        for r in WEIGHTS:
            assert check_niceob(filtered, r, FILTERED_HODGE), r

    def test_niceob_catches_table_of_equal_lengths(self, filtered):
        # the table of a reduced Dieudonne module predicts zero at every weight
        assert not check_niceob(filtered, 1, HodgeTable.of({(0, 0): 1, (0, -1): 1}))
        assert not check_niceob(filtered, 1)

    def test_syntomic_cohomology(self, filtered):
        h0, h1 = syntomic_cohomology(filtered, 1)
        assert (h0.length(), h1.length()) == (2, 1)
        h0, h1 = syntomic_cohomology(filtered, 3)
        assert (h0.length(), h1.length()) == (0, 0)

    def test_stable_levels(self, filtered):
        assert filtered.top == 2
        assert filtered.can_map(4).matrix == QMatrix.of([[125]])
        assert filtered.phi_matrix(-2) == QMatrix.of([[0]])
        assert filtered.derived_hodge() is None

    def test_wrong_modulus_exponent(self, ctx, filtered):
        with pytest.raises(GaugeError, match=r"Fil\^1 = .* is not killed by p\^1"):
            FilteredTorsionGauge(ctx, filtered.underlying, filtered.frobenius, filtered.levels, modulus_exponent=1)

    def test_frobenius_on_top_must_be_onto(self, ctx, filtered):
        levels = (filtered.levels[0], torsion_level(ctx, 1, 5, 0))
        with pytest.raises(GaugeError, match=r"Frobenius on Fil\^2 is not an isomorphism onto M\^u"):
            FilteredTorsionGauge(ctx, filtered.underlying, filtered.frobenius, levels, modulus_exponent=2)

    def test_frobenius_without_levels_must_be_onto(self, ctx):
        with pytest.raises(GaugeError, match=r"Frobenius on Fil\^0 is not an isomorphism"):
            FilteredTorsionGauge(ctx, Presentation.torsion([1], ctx), QMatrix.of([[5]]))

    def test_levels_must_map_into_underlying(self, ctx):
        underlying = Presentation.torsion([2], ctx)
        with pytest.raises(GaugeError, match="is not a map of modules"):
            FilteredTorsionGauge(ctx, underlying, QMatrix.of([[0]]), (torsion_level(ctx, 1, 1, 5),), modulus_exponent=2)

    def test_syntomic_euler_on_random_gauges(self, ctx):
        rng = random.Random(17)
        for _ in range(40):
            g = random_filtered_gauge(rng, ctx)
            for r in range(-2, 5):
                h0, h1 = syntomic_cohomology(g, r)
                assert sign(g.degree) * (h0.length() - h1.length()) == -nygaard_characteristic(g, r)

    def test_gauge_checks(self, filtered):
        report = gauge_checks(Summand.of_gauge(filtered, hodge=FILTERED_HODGE), 1)
        assert report["nygaard"] == -1
        assert report["niceob"]
        assert report["syntomic_euler"] == 1
        assert report["syntomic_euler_ok"]

    def test_gauge_checks_flag_wrong_lengths(self, ctx, filtered):
        # Fil^1 declared with the length of M^u
        levels = (torsion_level(ctx, 1, 1, 1), filtered.levels[1])
        g = FilteredTorsionGauge(ctx, filtered.underlying, filtered.frobenius, levels, modulus_exponent=2)
        report = gauge_checks(Summand.of_gauge(g, hodge=FILTERED_HODGE), 1)
        assert report["nygaard"] == 0
        assert not report["niceob"]

    def test_summand_tier(self, filtered):
        s = Summand.of_gauge(filtered, hodge=FILTERED_HODGE)
        assert s.tier is Tier.TORSION
        assert not s.is_vector_bundle
        assert s.hodge_table() == FILTERED_HODGE

    def test_spec_reports_missing_table(self, ctx, filtered):
        spec = GaugeSpec(ctx, (Summand.of_gauge(filtered),))
        assert spec.hodge_table() is None
        assert any("missing Hodge data" in issue for issue in spec.consistency_issues())


class TestPdivInvariants:

    def test_examples(self):
        assert pdiv_invariants([SlopeDatum(Fraction(1, 2), 2)]) == (1, 2)
        assert pdiv_invariants([SlopeDatum(Fraction(0), 1)]) == (0, 1)
        assert pdiv_invariants([SlopeDatum(Fraction(1), 1)]) == (1, 1)

    def test_errors(self):
        with pytest.raises(GaugeError, match="outside"):
            pdiv_invariants([SlopeDatum(Fraction(3, 2), 2)])
        with pytest.raises(GaugeError, match="not realizable"):
            pdiv_invariants([SlopeDatum(Fraction(1, 2), 1)])

    def test_lattices(self, ctx):
        for r in range(1, 7):
            for s in range(0, r + 1):
                if gcd(s, r) != 1:
                    continue
                ic = dm_lattice(s, r, ctx).isocrystal()
                assert pdiv_invariants(slope_decomposition(ic)) == (s, r)


class TestNormalForm:

    def test_supersingular(self, ctx):
        dm = DieudonneMatrix(ctx, QMatrix.of([[0, 5], [1, 0]]))
        g = gauge_from_dieudonne(dm, degree=1)
        assert (g.t_rank, g.w_rank) == (1, 1)
        assert g.isocrystal() == dm.isocrystal()

    @pytest.mark.parametrize("s,r", [(0, 1), (1, 1), (1, 2), (1, 3), (2, 3)])
    def test_lattice_ranks(self, ctx, s, r):
        g = gauge_from_dieudonne(dm_lattice(s, r, ctx))
        assert (g.w_rank, g.t_rank) == (s, r - s)
        assert g.isocrystal() == dm_lattice(s, r, ctx).isocrystal()


class TestGaugeSpec:

    def test_unit_spec(self, ctx, unit):
        spec = GaugeSpec(ctx, (Summand.of_gauge(unit),))
        assert spec.hodge_table() == HodgeTable.of({(0, 0): 1})
        assert spec.weight_range(2) == (-2, 2)
        assert spec.consistency_issues() == []
        assert spec.dimensions() == {0: 1}

    def test_twist_and_shift(self, ctx, unit):
        spec = GaugeSpec(ctx, (Summand.of_gauge(unit),))
        assert twisted(spec, 1).hodge_table() == HodgeTable.of({(-1, 1): 1})
        moved = shifted(spec, 1)
        assert moved.hodge_table() == HodgeTable.of({(0, 1): 1})
        assert moved.normalized()[0].gauge.degree == 1
        assert list(summands_by_degree(moved)) == [1]

    def test_missing_hodge(self, ctx):
        s = Summand(Tier.CHARPOLY, 2, IsocrystalCharPoly.of(ctx, 1, -5))
        issues = GaugeSpec(ctx, (s,)).consistency_issues()
        assert issues and "missing Hodge data" in issues[0]
        assert GaugeSpec(ctx, (s,)).hodge_table() is None

    def test_declared_dimension_mismatch(self, ctx):
        s = Summand(Tier.CHARPOLY, 0, IsocrystalCharPoly.of(ctx, 1, -1), hodge=HodgeTable.of({(0, 0): 2}))
        issues = GaugeSpec(ctx, (s,)).consistency_issues()
        assert any("sum to 2, dimension is 1" in issue for issue in issues)

    def test_declared_outside_degree(self, ctx):
        s = Summand(Tier.CHARPOLY, 0, IsocrystalCharPoly.of(ctx, 1, -1), hodge=HodgeTable.of({(1, 1): 1}))
        issues = GaugeSpec(ctx, (s,)).consistency_issues()
        assert any("outside its degree" in issue for issue in issues)

    def test_declared_conflicts_with_derived(self, ctx, unit):
        s = Summand.of_gauge(unit, hodge=HodgeTable.of({(1, -1): 1}))
        issues = GaugeSpec(ctx, (s,)).consistency_issues()
        assert any("Hodge conflict" in issue for issue in issues)

    def test_gauge_level_table(self, ctx):
        summands = tuple(
            Summand(Tier.CHARPOLY, d, IsocrystalCharPoly.of(ctx, 1, -(5 ** (d // 2)))) for d in (0, 2, 4)
        )
        table = HodgeTable.of({(0, 0): 1, (1, 1): 1, (2, 2): 1})
        spec = GaugeSpec(ctx, summands, hodge=table)
        assert spec.consistency_issues() == []
        assert spec.hodge_table() == table
        wrong = GaugeSpec(ctx, summands, hodge=HodgeTable.of({(0, 0): 1, (1, 1): 2}))
        assert any("gauge Hodge table has dimension" in issue for issue in wrong.consistency_issues())

    def test_summand_validation(self, ctx, unit):
        with pytest.raises(GaugeError, match="needs a DieudonneGauge"):
            Summand(Tier.DIEUDONNE, 0, IsocrystalCharPoly.of(ctx, 1, -1))
        with pytest.raises(GaugeError, match="disagrees with gauge degree"):
            Summand(Tier.DIEUDONNE, 1, unit)

    def test_slopes_summand(self, ctx):
        s = Summand(Tier.SLOPES, 1, [SlopeDatum(Fraction(1, 2), 2)], hodge=HodgeTable.of({(1, 0): 1, (0, 1): 1}))
        assert s.isocrystal(ctx) == IsocrystalCharPoly.of(ctx, 1, 0, -5)
        assert GaugeSpec(ctx, (s,)).consistency_issues() == []

    def test_direct_sum(self, ctx, unit, ordinary):
        a = GaugeSpec(ctx, (Summand.of_gauge(unit),))
        b = GaugeSpec(ctx, (Summand.of_gauge(DieudonneGauge(ctx, 1, 1, ordinary.F, degree=1)),))
        total = direct_sum(a, shifted(b, 1))
        assert total.hodge is None
        assert total.dimensions() == {0: 1, 2: 2}
        assert total.hodge_table() == HodgeTable.of({(0, 0): 1, (0, 2): 1, (1, 1): 1})

    def test_direct_sum_errors(self, ctx, unit):
        with pytest.raises(GaugeError, match="direct sum of nothing"):
            direct_sum()
        f3 = PAdicContext(3)
        other = GaugeSpec(f3, (Summand.of_gauge(DieudonneGauge(f3, 1, 0, QMatrix.of([[1]]))),))
        with pytest.raises(GaugeError, match="different fields"):
            direct_sum(GaugeSpec(ctx, (Summand.of_gauge(unit),)), other)

    def test_gauge_checks_for_torsion(self, ctx):
        g = TorsionGauge(ctx, 1, 1, QMatrix.diagonal([1, 5]), modulus_exponent=2)
        report = gauge_checks(Summand.of_gauge(g), 1)
        assert report["niceob"]
        assert report["syntomic_euler_ok"]
        assert report["descent"]["holds"]

    def test_gauge_checks_need_filtration(self, ctx):
        s = Summand(Tier.CHARPOLY, 0, IsocrystalCharPoly.of(ctx, 1, -1))
        with pytest.raises(GaugeError, match="carries no filtration data"):
            gauge_checks(s, 0)
