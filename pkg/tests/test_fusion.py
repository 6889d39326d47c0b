import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from pfintegrity.camera import softmax_distribution
from pfintegrity.errors import LengthMismatch
from pfintegrity.fusion import (
    PROB_FLOOR,
    alpha_objective,
    fuse_joint,
    kl_divergence,
    mixture_of_experts,
    normalize_alphas,
    optimal_alpha,
    weigh_experts,
)

simplex = st.integers(2, 30).flatmap(
    lambda n: st.lists(st.floats(1e-6, 1.0), min_size=n, max_size=n)
).map(lambda v: np.asarray(v) / np.sum(v))


class TestKL:
    def test_identity(self):
        p = np.array([0.2, 0.3, 0.5])
        assert kl_divergence(p, p) == 0.0

    def test_point_mass_vs_half(self):
        assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2), rel=1e-15)

    def test_asymmetric(self):
        p, q = [0.5, 0.5], [0.9, 0.1]
        assert kl_divergence(p, q) == pytest.approx(0.5108256, abs=1e-6)
        assert kl_divergence(q, p) == pytest.approx(0.3680642, abs=1e-6)

    def test_zero_q_is_floored(self):
        assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == pytest.approx(
            0.5 * math.log(0.5) + 0.5 * math.log(0.5 / PROB_FLOOR))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            kl_divergence([0.5, 0.5], [1.0])

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_nonnegative(self, data):
        p = data.draw(simplex)
        q = data.draw(st.lists(st.floats(1e-6, 1.0), min_size=p.size, max_size=p.size))
        q = np.asarray(q) / np.sum(q)
        assert kl_divergence(p, q) >= -1e-12


class TestAlpha:
    def test_identical_distributions(self):
        p = np.array([0.1, 0.6, 0.3])
        assert optimal_alpha(p, p) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_unit_divergence(self):
        P = [math.exp(-1), 1 - math.exp(-1)]
        assert optimal_alpha([1.0, 0.0], P) == pytest.approx(math.exp(-2), rel=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_matches_numeric_minimizer(self, data):
        P = data.draw(simplex)
        Q = data.draw(st.lists(st.floats(1e-4, 1.0), min_size=P.size, max_size=P.size))
        Q = np.asarray(Q) / np.sum(Q)
        closed = optimal_alpha(Q, P)
        res = minimize_scalar(lambda a: alpha_objective(a, Q, P), bounds=(1e-12, 10 * closed + 1),
                              method="bounded", options={"xatol": 1e-12})
        assert closed == pytest.approx(res.x, rel=1e-4)
        assert alpha_objective(closed, Q, P) <= res.fun + 1e-12

    def test_objective_convex(self):
        rng = np.random.default_rng(0)
        P, Q = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8))
        a = np.linspace(0.01, 2, 200)
        f = np.array([alpha_objective(x, Q, P) for x in a])
        assert np.all(np.diff(f, 2) > 0)

    def test_faulty_expert_suppressed_monotonically(self):
        # particles on a line, GNSS distribution centred at 0, expert centre moved away
        x = np.linspace(-30, 30, 121)
        P = softmax_distribution(-0.5 * (x / 3.0) ** 2)
        alphas = [optimal_alpha(softmax_distribution(-np.abs(x - d) / 5.0), P)
                  for d in np.linspace(0, 30, 31)]
        assert np.all(np.diff(alphas) < 0)


class TestMixture:
    def test_normalize(self):
        np.testing.assert_allclose(normalize_alphas([1, 3]), [0.25, 0.75])

    @pytest.mark.parametrize("bad", [[], [1.0, 0.0], [1.0, -2.0]])
    def test_normalize_rejects(self, bad):
        with pytest.raises(ValueError):
            normalize_alphas(bad)

    def test_mixture_table(self):
        q = mixture_of_experts([[1, 0], [0, 1]], [0.25, 0.75])
        np.testing.assert_allclose(q, [0.25, 0.75])

    def test_weigh_experts_equal_for_identical(self):
        P = np.array([0.2, 0.3, 0.5])
        moe = weigh_experts([P, P, P], P)
        np.testing.assert_allclose(moe.alphas, 1 / 3)
        np.testing.assert_allclose(moe.probs, P)

    @settings(max_examples=40, deadline=None)
    @given(st.data(), st.integers(1, 5))
    def test_mixture_on_simplex(self, data, k):
        P = data.draw(simplex)
        experts = [data.draw(st.lists(st.floats(1e-6, 1.0), min_size=P.size, max_size=P.size))
                   for _ in range(k)]
        experts = [np.asarray(e) / np.sum(e) for e in experts]
        moe = weigh_experts(experts, P)
        assert abs(moe.probs.sum() - 1) < 1e-9 and np.all(moe.probs >= 0)
        assert abs(moe.alphas.sum() - 1) < 1e-12
        # more consistent with P means a larger weight
        order = np.argsort([kl_divergence(e, P) for e in experts])
        assert np.all(np.diff(moe.alphas_raw[order]) <= 1e-12)


class TestJoint:
    def test_argmax_where_both_agree(self):
        P = [0.1, 0.6, 0.3]
        Q = [0.2, 0.5, 0.3]
        assert int(np.argmax(fuse_joint(P, Q))) == 1

    def test_symmetric(self):
        P, Q = [0.1, 0.6, 0.3], [0.2, 0.5, 0.3]
        np.testing.assert_array_equal(fuse_joint(P, Q), fuse_joint(Q, P))

    def test_zero_floored(self):
        out = fuse_joint([0.0, 1.0], [1.0, 1.0])
        assert np.isfinite(out).all() and out[0] == pytest.approx(math.log(PROB_FLOOR))
