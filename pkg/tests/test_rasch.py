import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scale_equate.errors import DiagnosticsError, NonIdentifiableError
from scale_equate.ingest import ResponseMatrix
from scale_equate.rasch import (conditional_loglik, estimate_person_params, fit_cml,
                                fit_statistics, irf, log_esf, tcc)
from scale_equate.simulate import SimSpec, simulate_responses

from conftest import matrix


def brute_esf(b):
    """gamma_r = sum over patterns with score r of exp(-x.b)."""
    J = len(b)
    g = np.zeros(J + 1)
    for pat in itertools.product([0, 1], repeat=J):
        g[sum(pat)] += math.exp(-np.dot(pat, b))
    return g


def brute_conditional_loglik(b, x, w):
    pats = np.array(list(itertools.product([0, 1], repeat=len(b))))
    total = 0.0
    for row, wi in zip(x, w):
        r = row.sum()
        den = sum(math.exp(-p @ b) for p in pats if p.sum() == r)
        total += wi * (-row @ b - math.log(den))
    return total


class TestIRF:
    def test_zero_distance(self):
        assert irf(0.3, 0.3) == 0.5

    def test_limits(self):
        assert irf(1e6, 0) == 1.0
        assert irf(-1e6, 0) == 0.0
        assert irf(800.0, -800.0) == 1.0  # no overflow warning

    def test_value(self):
        # 1 / (1 + e^-1)
        assert irf(1.0, 0.0) == pytest.approx(0.7310585786300049, abs=1e-15)

    @given(st.floats(-30, 30), st.floats(-30, 30))
    def test_symmetry(self, theta, b):
        assert irf(theta, b) == pytest.approx(1 - irf(-theta, -b), abs=1e-15)

    def test_monotone(self):
        th = np.linspace(-5, 5, 101)
        assert np.all(np.diff(irf(th, 0.2)) > 0)
        assert np.all(np.diff(irf(0.2, th)) < 0)


class TestESF:
    @pytest.mark.parametrize("b", [[0.3], [-1, 0, 1], [2.1, -0.4, 0.9, -1.7, 0.05]])
    def test_against_enumeration(self, b):
        np.testing.assert_allclose(np.exp(log_esf(b)), brute_esf(b), rtol=1e-12)

    def test_long_scale_no_overflow(self):
        b = np.linspace(-6, 6, 64)
        lg = log_esf(b)
        assert np.all(np.isfinite(lg))
        # gamma_J = prod exp(-b) = exp(-sum b) = 1 for centred b
        assert lg[-1] == pytest.approx(0.0, abs=1e-9)


class TestConditionalLikelihood:
    def test_brute_force_small(self):
        rng = np.random.default_rng(2)
        b = np.array([-0.8, 0.1, 0.4, 0.3])
        x = rng.integers(0, 2, (50, 4)).astype(float)
        w = rng.random(50)
        assert conditional_loglik(b, x, w) == pytest.approx(
            brute_conditional_loglik(b, x, w), abs=1e-10)

    def test_extremes_contribute_zero(self):
        b = np.array([-1.0, 0.5, 0.5])
        x = np.array([[0, 0, 0], [1, 1, 1]], dtype=float)
        assert conditional_loglik(b, x) == pytest.approx(0.0, abs=1e-12)


class TestFitCML:
    def test_recovers_severities(self):
        b = np.array([-1.0, 0.0, 1.0])
        m = simulate_responses(SimSpec(b, 5000, seed=7))
        est = fit_cml(m)
        # joint criterion: each within 3 se and Mahalanobis-free max check
        assert np.all(np.abs(est.severities - b) < 3 * est.se)
        assert abs(est.severities.mean()) < 1e-10

    def test_identical_columns_equal_estimates(self):
        rng = np.random.default_rng(1)
        b = np.array([-1.0, 0.0, 0.0, 1.0])
        m = simulate_responses(SimSpec(b, 2000, seed=9))
        cells = np.array(m.cells)
        cells[:, 2] = cells[:, 1]
        est = fit_cml(ResponseMatrix(m.items, cells, m.weights))
        assert est.severities[1] == pytest.approx(est.severities[2], abs=1e-9)

    def test_duplicate_rows_equal_doubled_weights(self, sim8):
        _, m = sim8
        a = fit_cml(m)
        doubled = fit_cml(m.with_weights(2 * m.weights))
        dup = fit_cml(ResponseMatrix(m.items, np.vstack([m.cells, m.cells]),
                                     np.concatenate([m.weights, m.weights])))
        np.testing.assert_allclose(a.severities, doubled.severities, atol=1e-12)
        np.testing.assert_allclose(a.severities, dup.severities, atol=1e-10)
        np.testing.assert_allclose(a.se, doubled.se, rtol=1e-12)

    def test_weight_rescaling_invariance(self):
        m = simulate_responses(SimSpec([-1, -0.2, 0.4, 1.3], 1500, seed=4, weight_sigma=0.5))
        a = fit_cml(m)
        for c in (1e-3, 7.0, 1e6):
            np.testing.assert_allclose(fit_cml(m.with_weights(c * m.weights)).severities,
                                       a.severities, atol=1e-10)

    def test_column_permutation(self):
        m = simulate_responses(SimSpec([-1.5, -0.3, 0.2, 0.7, 1.1], 2000, seed=5))
        perm = [3, 0, 4, 2, 1]
        mp = ResponseMatrix([m.items[j] for j in perm], m.cells[:, perm], m.weights)
        np.testing.assert_allclose(fit_cml(mp).severities, fit_cml(m).severities[perm],
                                   atol=1e-10)

    def test_maximises_conditional_likelihood(self):
        m = simulate_responses(SimSpec([-1, 0, 0.5, 1], 800, seed=6))
        est = fit_cml(m)
        x = m.cells
        best = conditional_loglik(est.severities, x)
        rng = np.random.default_rng(0)
        for _ in range(20):
            d = rng.normal(scale=0.05, size=4)
            assert conditional_loglik(est.severities + d, x) <= best + 1e-9

    @pytest.mark.parametrize("value", [0.0, 1.0])
    def test_constant_item_not_identifiable(self, value):
        m = simulate_responses(SimSpec([-1, 0, 1], 300, seed=1,
                                       codes=["A", "B", "C"]))
        cells = np.array(m.cells)
        cells[:, 1] = value
        with pytest.raises(NonIdentifiableError) as err:
            fit_cml(ResponseMatrix(m.items, cells, m.weights))
        assert err.value.item == "B"


class TestPersonParams:
    def test_symmetric_two_items(self):
        p = estimate_person_params([-1.0, 1.0])
        assert p.theta[1] == pytest.approx(0.0, abs=1e-12)

    def test_grid_search_oracle(self):
        b = np.array([-1.0, 0.0, 1.0])
        grid = np.arange(-6, 6 + 1e-9, 1e-4)
        # log-likelihood of raw score 2 as a function of theta (constant terms dropped)
        ll = 2 * grid - np.log1p(np.exp(grid[:, None] - b)).sum(axis=1)
        theta_grid = grid[np.argmax(ll)]
        p = estimate_person_params(b)
        assert p.theta[2] == pytest.approx(theta_grid, abs=1e-4)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-4, 4), min_size=2, max_size=15))
    def test_monotone_positive_se_self_consistent(self, b):
        p = estimate_person_params(b)
        assert np.all(np.diff(p.theta) > 0)
        assert np.all(p.se > 0)
        np.testing.assert_allclose(tcc(p.theta, b), p.target, atol=1e-8)
        assert p.target[0] == 0.5 and p.target[-1] == len(b) - 0.5
        assert p.pseudo[0] and p.pseudo[-1] and not p.pseudo[1:-1].any()

    def test_se_is_inverse_root_information(self):
        b = np.array([-1.0, 0.0, 1.0])
        p = estimate_person_params(b)
        P = irf(p.theta[1], b)
        assert p.se[1] == pytest.approx(1 / np.sqrt(np.sum(P * (1 - P))))


class TestFitStatistics:
    def test_model_data_infit_near_one(self):
        # 15 items (the longest forms in practice) spanning the same range as sim8;
        # wider spans push the extreme items' infit lower (see test below)
        b = np.linspace(-2, 2, 15)
        m = simulate_responses(SimSpec(b, 5000, seed=21))
        est = fit_cml(m)
        f = fit_statistics(m, est, estimate_person_params(est))
        assert np.all((f.infit > 0.9) & (f.infit < 1.1))
        assert f.acceptable()

    def test_short_scale_infit_deflation(self, sim8):
        # ML plug-in abilities absorb one residual degree of freedom: infit ~ (J-1)/J
        _, m = sim8
        est = fit_cml(m)
        f = fit_statistics(m, est, estimate_person_params(est))
        assert np.all((f.infit > 0.8) & (f.infit < 1.05))
        assert np.mean(f.infit) == pytest.approx(7 / 8, abs=0.05)
        assert f.acceptable()  # screening band (0.7, 1.3), |r| < 0.4

    def test_report_invariants(self, sim8):
        _, m = sim8
        est = fit_cml(m)
        f = fit_statistics(m, est, estimate_person_params(est))
        np.testing.assert_array_equal(np.diag(f.residual_corr), 1.0)
        np.testing.assert_array_equal(f.residual_corr, f.residual_corr.T)
        assert np.all(f.infit > 0) and np.all(f.outfit > 0)
        assert 0 <= f.reliability <= 1
        assert np.all(np.diff(f.eigenvalues) <= 1e-12)
        assert f.eigenvalues.sum() == pytest.approx(8.0)

    def test_reliability_formula(self, sim8):
        _, m = sim8
        est = fit_cml(m)
        p = estimate_person_params(est)
        f = fit_statistics(m, est, p)
        r = m.cells.sum(axis=1).astype(int)
        keep = (r > 0) & (r < 8)
        th, se = p.theta[r[keep]], p.se[r[keep]]
        assert f.reliability == pytest.approx(1 - np.mean(se ** 2) / np.var(th))

    def test_screening_flags_local_dependence(self):
        b = np.linspace(-2, 2, 8)
        m = simulate_responses(SimSpec(b, 3000, seed=2))
        cells = np.array(m.cells)
        cells[:, 4] = cells[:, 3]  # a duplicated item is locally dependent
        mm = ResponseMatrix(m.items, cells, m.weights)
        est = fit_cml(mm)
        f = fit_statistics(mm, est, estimate_person_params(est))
        assert abs(f.residual_corr[3, 4]) >= 0.4
        assert f.item_status()[3] == "WARN" and not f.acceptable()

    def test_degenerate_scores(self):
        m = matrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        est = fit_cml(m)
        with pytest.raises(DiagnosticsError):
            fit_statistics(m, est, estimate_person_params(est))
