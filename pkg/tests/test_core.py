import itertools

import numpy as np
import pytest

import maxfilt as mf
from conftest import permutation_matrices, sign_group


class TestMaxFilter:
    def test_orthogonal_gives_norm_product(self):
        g = mf.FullOrthogonal(3)
        z = np.array([0.0, 1.0, 0.0])
        assert mf.max_filter(g, z, [1.0, 2.0, 2.0]).value == pytest.approx(3.0, abs=1e-12)

    def test_sign_group_gives_abs(self):
        g = sign_group(2)
        res = mf.max_filter(g, [1.0, 0.0], [-2.0, 5.0])
        assert res.value == pytest.approx(2.0, abs=1e-12)

    def test_permutation_group_picks_top_entry(self):
        g = mf.Enumerated(tuple(permutation_matrices(3)))
        z = np.array([1.0, 0.0, 0.0])
        x = np.array([3.0, 1.0, 2.0])
        # independent enumeration over all six relabelings
        expected = max(z @ p @ x for p in permutation_matrices(3))
        assert expected == 3.0
        assert mf.max_filter(g, z, x).value == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(mf.DimensionMismatch):
            mf.max_filter(mf.CyclicShift(4), [1.0, 0.0], [1.0, 0.0, 0.0, 0.0])

    def test_nan_rejected(self):
        with pytest.raises(mf.ValidationError):
            mf.max_filter(mf.CyclicShift(2), [np.nan, 0.0], [1.0, 0.0])

    def test_witness_achieves_value(self):
        rng = np.random.default_rng(7)
        g = mf.CyclicShift(6)
        z, x = rng.standard_normal(6), rng.standard_normal(6)
        res = mf.max_filter(g, z, x)
        for w in res.witnesses:
            assert z @ mf.apply_witness(g, w, x) == pytest.approx(res.value, abs=1e-9)


class TestQuotientDistance:
    def test_same_point_is_zero(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(5)
        assert mf.quotient_distance(mf.FullPermutation(5), x, x) == 0.0

    def test_sign_orbit_collapses(self):
        assert mf.quotient_distance(sign_group(1), [1.0], [-1.0]) == pytest.approx(0.0, abs=1e-9)

    def test_permuted_copy_is_zero_and_zero_vector_gives_norm(self):
        g = mf.Enumerated(tuple(permutation_matrices(3)))
        x = np.array([1.0, 2.0, 3.0])
        assert mf.quotient_distance(g, x, [3.0, 1.0, 2.0]) == pytest.approx(0.0, abs=1e-9)
        # min over all six relabelings of ||x - P 0|| is just ||x||
        expected = min(np.linalg.norm(x - p @ np.zeros(3)) for p in permutation_matrices(3))
        assert expected == pytest.approx(np.sqrt(14.0))
        assert mf.quotient_distance(g, x, np.zeros(3)) == pytest.approx(expected, abs=1e-12)


class TestFilterBank:
    def test_single_template(self):
        g = mf.CyclicShift(4)
        z = np.array([1.0, 0.0, 0.0, 0.0])
        x = np.array([0.0, 2.0, 0.0, 0.0])
        feats = mf.filter_bank_apply(g, [z], x)
        assert feats.shape == (1,)
        assert feats[0] == pytest.approx(mf.max_filter(g, z, x).value)

    def test_self_template_gives_norm_squared(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(6)
        feats = mf.filter_bank_apply(mf.FullPermutation(6), [x], x)
        assert feats[0] == pytest.approx(float(x @ x), rel=1e-12)

    def test_same_orbit_gives_identical_features(self):
        g = mf.CyclicShift(4)
        bank = [t.vector for t in mf.random_sphere_templates(8, 4, rng_seed=11)]
        x = np.array([1.0, 0.0, 0.0, 0.0])
        x2 = np.array([0.0, 1.0, 0.0, 0.0])
        # same orbit: x2 is a one-step shift, verified by enumerating all four
        assert any(np.allclose(np.roll(x, a), x2) for a in range(4))
        np.testing.assert_allclose(mf.filter_bank_apply(g, bank, x),
                                   mf.filter_bank_apply(g, bank, x2), atol=1e-12)

    def test_empty_bank_rejected(self):
        with pytest.raises(mf.ValidationError):
            mf.filter_bank_apply(mf.CyclicShift(4), [], np.zeros(4))


class TestBruteForceOracle:
    def test_cyclic_enumeration(self):
        res = mf.brute_force_max_filter(mf.CyclicShift(4), [1.0, 0.0, 0.0, 0.0],
                                        [0.0, 0.0, 5.0, 0.0])
        assert res.value == pytest.approx(5.0, abs=1e-12)
        assert 2 in res.witnesses
        assert not res.approximate

    def test_permutation_enumeration(self):
        z = np.array([1.0, 1.0, 0.0])
        x = np.array([2.0, -1.0, 3.0])
        expected = max(sum(z[i] * x[p[i]] for i in range(3))
                       for p in itertools.permutations(range(3)))
        assert expected == 5.0
        res = mf.brute_force_max_filter(mf.FullPermutation(3), z, x)
        assert res.value == pytest.approx(expected, abs=1e-12)

    def test_phase_grid_is_flagged_approximate(self):
        res = mf.brute_force_max_filter(mf.PhaseCircle(2), [1.0 + 0j, 0.0],
                                        [1j, 0.0], resolution=10_000)
        assert res.approximate
        assert res.value == pytest.approx(1.0, abs=1e-6)

    def test_enumeration_cap(self):
        with pytest.raises(mf.EnumerationCapExceeded):
            mf.brute_force_max_filter(mf.FullPermutation(9), np.zeros(9), np.zeros(9))


class TestEnumeratedValidation:
    def test_not_closed_rejected(self):
        theta = 0.3
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        with pytest.raises(mf.ValidationError):
            mf.Enumerated((np.eye(2), rot))

    def test_not_orthogonal_rejected(self):
        with pytest.raises(mf.ValidationError):
            mf.Enumerated((np.eye(2) * 2.0,))

    def test_valid_group_accepted(self):
        g = mf.Enumerated(tuple(permutation_matrices(3)))
        assert g.order == 6
