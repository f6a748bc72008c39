import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scale_equate.errors import AnchorExhaustedError, DegenerateInputError, DomainError
from scale_equate.irt_equate import (LinkingTransform, _worst, invert_tcc, irt_true_score_equate,
                                     mean_sigma_link, select_anchor, tcc)
from scale_equate.rasch import ItemParams, irf

FIES = ("WORRIED", "HEALTHY", "FEWFOOD", "SKIPPED", "ATELESS", "RUNOUT", "HUNGRY", "WHLDAY")
severities = st.lists(st.floats(-3, 3), min_size=2, max_size=12)


class TestMeanSigma:
    def test_shift(self):
        link = mean_sigma_link([-1, 0, 1], [-0.5, 0.5, 1.5])
        assert link.slope == pytest.approx(1.0, abs=1e-15)
        assert link.intercept == pytest.approx(0.5, abs=1e-15)

    def test_identity(self):
        link = mean_sigma_link([-1.2, 0.3, 0.9], [-1.2, 0.3, 0.9])
        assert (link.slope, link.intercept) == (1.0, 0.0)
        np.testing.assert_array_equal(link.displacements, 0.0)

    def test_halved_spread(self):
        link = mean_sigma_link([-2, 0, 2], [-1, 0, 1])
        assert (link.slope, link.intercept) == (0.5, 0.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateInputError):
            mean_sigma_link([0.4, 0.4], [0.0, 1.0])
        with pytest.raises(DegenerateInputError):
            mean_sigma_link([0.4], [0.0])

    @given(severities, st.floats(0.2, 5), st.floats(-3, 3), st.randoms(use_true_random=False))
    def test_moments_matched(self, bp, a, b, rnd):
        bp = np.asarray(bp)
        if bp.std() < 1e-3:
            return
        noise = np.array([rnd.uniform(-0.3, 0.3) for _ in bp])
        bq = a * bp + b + noise
        if bq.std() < 1e-3:
            return
        link = mean_sigma_link(bp, bq)
        moved = link.apply(bp)
        assert moved.mean() == pytest.approx(bq.mean(), abs=1e-10)
        assert moved.std() == pytest.approx(bq.std(), abs=1e-10)
        back = mean_sigma_link(bq, bp)
        assert back.slope == pytest.approx(1 / link.slope, rel=1e-12)
        assert back.intercept == pytest.approx(-link.intercept / link.slope, abs=1e-12)

    def test_inverse_transform(self):
        link = LinkingTransform(1.7, -0.4)
        th = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(link.inverse().apply(link.apply(th)), th, atol=1e-14)
        np.testing.assert_allclose(link.invert(link.apply(th)), th, atol=1e-14)

    def test_positive_slope_required(self):
        with pytest.raises(DegenerateInputError):
            LinkingTransform(0.0, 1.0)


class TestSelectAnchor:
    def test_identical_forms(self):
        b = ItemParams.fixed(FIES[:7], np.linspace(-1.5, 1.5, 7))
        sel = select_anchor(b, b, FIES[:7])
        assert sel.anchors == FIES[:7] and sel.removed == ()

    def test_planted_outlier(self):
        sev = np.linspace(-1.5, 1.5, 8)
        other = sev.copy()
        other[5] += 2.0
        bx, by = ItemParams.fixed(FIES, sev), ItemParams.fixed(FIES, other)
        sel = select_anchor(bx, by, FIES)
        assert [c for c, _ in sel.removed] == [FIES[5]]
        assert len(sel.anchors) == 7
        np.testing.assert_allclose(sel.link.displacements, 0.0, atol=1e-12)
        assert (sel.link.slope, sel.link.intercept) == pytest.approx((1.0, 0.0))

    def test_unique_a_priori_excluded(self):
        rng = np.random.default_rng(0)
        sev = rng.normal(size=8)
        bx = ItemParams.fixed(FIES, sev)
        by = ItemParams.fixed(FIES, sev + rng.normal(scale=0.1, size=8))
        sel = select_anchor(bx, by, FIES, unique_a_priori=["WHLDAY"])
        assert "WHLDAY" not in sel.anchors
        assert sel.excluded_a_priori == ("WHLDAY",)
        assert all(c != "WHLDAY" for c, _ in sel.removed)

    def test_final_displacements_within_tolerance(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            sev = rng.normal(size=8)
            bx = ItemParams.fixed(FIES, sev)
            by = ItemParams.fixed(FIES, sev + rng.normal(scale=0.5, size=8))
            try:
                sel = select_anchor(bx, by, FIES, tol=0.5)
            except AnchorExhaustedError:
                continue
            assert np.all(sel.link.displacements <= 0.5)
            assert len(sel.removed) <= 6

    def test_exhaustion_carries_trace(self):
        # two items always link exactly, so exhaustion shows up when the pair left
        # after a removal has no spread to link on
        bx = ItemParams.fixed(("A", "B", "C"), [-1.0, -1.0, 0.0])
        by = ItemParams.fixed(("A", "B", "C"), [-1.0, 0.0, -1.0])
        with pytest.raises(AnchorExhaustedError) as err:
            select_anchor(bx, by, ("A", "B", "C"), tol=0.01)
        assert [c for c, _ in err.value.trace] == ["B"]

    def test_tie_broken_by_code(self):
        # a symmetric stretch: Mean/Sigma absorbs the slope and leaves the two
        # inner items equally displaced with equal |b|; the first code goes
        codes = ("N", "M1", "M2", "M3", "P")
        bx = ItemParams.fixed(codes, [-2.0, -0.5, 0.0, 0.5, 2.0])
        by = ItemParams.fixed(codes, [-3.0, -0.5, 0.0, 0.5, 3.0])
        sel = select_anchor(bx, by, codes, tol=0.1)
        assert sel.removed[0][0] == "M1"

    def test_tie_rule(self):
        assert _worst([0.7, 0.7, 0.2], [0.5, 1.5, 3.0], ["A", "B", "C"]) == 1
        assert _worst([0.7, 0.7, 0.2], [1.5, 1.5, 3.0], ["B", "A", "C"]) == 1
        assert _worst([0.7, 0.9, 0.2], [9.0, 0.0, 0.0], ["A", "B", "C"]) == 1

    def test_too_few_candidates(self):
        b = ItemParams.fixed(("A", "B"), [0.0, 1.0])
        with pytest.raises(AnchorExhaustedError):
            select_anchor(b, b, ("A", "B"), unique_a_priori=("B",))


class TestTCC:
    def test_single_item(self):
        assert tcc(0.7, [0.7]) == 0.5

    def test_three_items(self):
        expected = irf(0, -1) + irf(0, 0) + irf(0, 1)
        assert tcc(0.0, [-1, 0, 1]) == pytest.approx(expected, abs=1e-15)
        assert tcc(0.0, [-1, 0, 1]) == pytest.approx(1.5, abs=1e-15)

    def test_limits(self):
        assert tcc(1e4, [0, 1, 2]) == 3.0
        assert tcc(-1e4, [0, 1, 2]) == 0.0

    def test_inversion_examples(self):
        assert invert_tcc(1.0, [-1, 1]) == pytest.approx(0.0, abs=1e-10)
        assert invert_tcc(1.5, [-1, 0, 1]) == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("t", [0.0, 3.0, -1.0, 3.2])
    def test_domain(self, t):
        with pytest.raises(DomainError):
            invert_tcc(t, [-1, 0, 1])

    @settings(max_examples=50)
    @given(severities)
    def test_round_trip(self, b):
        J = len(b)
        for t in np.linspace(0.05, J - 0.05, 17):
            assert tcc(invert_tcc(t, b), b) == pytest.approx(t, abs=1e-9)


class TestTrueScoreEquating:
    @settings(max_examples=30)
    @given(severities)
    def test_self_equating(self, sev):
        b = ItemParams.fixed([f"I{j}" for j in range(len(sev))], sev)
        e = irt_true_score_equate(b, b, LinkingTransform.identity()).equated
        J = len(sev)
        assert e[0] == 0.0 and e[J] == J
        np.testing.assert_allclose(e, np.arange(J + 1), atol=1e-8)

    def test_positive_shift_raises_scores(self):
        b = ItemParams.fixed([f"I{j}" for j in range(8)], np.linspace(-2, 2, 8))
        e = irt_true_score_equate(b, b, LinkingTransform(1.0, 0.5)).equated
        assert np.all(e[1:-1] > np.arange(1, 8))
        assert np.all(np.diff(e) > 0)

    def test_different_lengths(self):
        bx = ItemParams.fixed([f"X{j}" for j in range(6)], np.linspace(-1, 1, 6))
        by = ItemParams.fixed([f"Y{j}" for j in range(10)], np.linspace(-2, 2, 10))
        t = irt_true_score_equate(bx, by, LinkingTransform.identity(), "adult", "children")
        assert t.equated[0] == 0 and t.equated[-1] == 10 and t.target_max == 10
        assert t.method == "irt-ts" and (t.source, t.target) == ("adult", "children")
        for x in range(1, 6):
            assert t.equated[x] == pytest.approx(tcc(invert_tcc(x, bx.severities),
                                                     by.severities), abs=1e-12)
