"""Loss values, gradients, and the chain rule through activations."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segact import (clamp_probability, loss_gradient_wrt_logits,
                    make_activation, make_loss)

ALL_LOSSES = ("bce", "mse", "dice")
ALL_ACTIVATIONS = ("cdf", "sigmoid", "isqrt", "arctan", "softsign",
                   "linear", "hardtanh")


class TestValues:
    def test_bce_of_half_is_log_two(self):
        assert make_loss("bce").value([0.5], [1.0]) == \
            pytest.approx(math.log(2.0), abs=1e-12)

    def test_bce_matches_softsign_single_prediction(self):
        p = clamp_probability(make_activation("softsign")(-6.0))
        value = make_loss("bce").value([p], [1.0])
        assert value == pytest.approx(math.log(14.0), abs=1e-3)
        assert value == pytest.approx(2.6390573, abs=1e-6)

    def test_bce_matches_sigmoid_single_prediction(self):
        p = clamp_probability(make_activation("sigmoid")(-6.0))
        value = make_loss("bce").value([p], [1.0])
        assert value == pytest.approx(math.log(1.0 + math.e ** 6), abs=1e-4)

    def test_soft_dice_perfect_overlap(self):
        y = [1.0, 0.0, 1.0]
        assert make_loss("dice").value(y, y) == pytest.approx(0.0, abs=1e-6)

    def test_mse_two_pixels(self):
        assert make_loss("mse").value([0.25, 0.75], [0.0, 1.0]) == \
            pytest.approx(0.0625, abs=1e-15)

    def test_contract_errors(self):
        loss = make_loss("bce")
        with pytest.raises(ValueError):
            loss.value([], [])
        with pytest.raises(ValueError):
            loss.value([0.5, 0.5], [1.0])
        with pytest.raises(ValueError):
            loss.value([0.5], [0.4])  # targets must be binary
        with pytest.raises(ValueError):
            loss.value([1.5], [1.0])  # probabilities must be in [0, 1]


class TestGradients:
    def test_mse_gradient_single_pixel(self):
        np.testing.assert_allclose(
            make_loss("mse").grad([0.5], [1.0]), [-1.0])

    def test_bce_gradient_single_background_pixel(self):
        np.testing.assert_allclose(
            make_loss("bce").grad([0.5], [0.0]), [2.0])

    @pytest.mark.parametrize("name", ALL_LOSSES)
    def test_gradient_matches_finite_differences(self, name):
        loss = make_loss(name)
        rng = np.random.default_rng(11)
        yhat = rng.uniform(0.05, 0.95, 20)
        y = (rng.random(20) < 0.4).astype(float)
        analytic = loss.grad(yhat, y)
        h = 1e-6
        for i in range(yhat.size):
            up, dn = yhat.copy(), yhat.copy()
            up[i] += h
            dn[i] -= h
            fd = (loss.value(up, y) - loss.value(dn, y)) / (2.0 * h)
            assert analytic[i] == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_soft_dice_couples_pixels(self):
        loss = make_loss("dice")
        g = loss.grad([0.5, 0.5], [1.0, 0.0])
        # The background pixel still gets a nonzero gradient.
        assert g[1] != 0.0


class TestChainRule:
    def test_bce_sigmoid_at_zero(self):
        g = loss_gradient_wrt_logits("bce", "sigmoid", [0.0], [1.0])
        np.testing.assert_allclose(g, [-0.5])

    def test_bce_sigmoid_simplification(self):
        # d/dx of -log(sigmoid(x)) is sigmoid(x) - 1.
        sig = make_activation("sigmoid")
        for x in (-3.0, -1.0, 0.5, 2.0):
            g = loss_gradient_wrt_logits("bce", "sigmoid", [x], [1.0])
            assert g[0] == pytest.approx(sig(x) - 1.0, rel=1e-12)

    def test_mse_hardtanh_outside_support(self):
        g = loss_gradient_wrt_logits("mse", "hardtanh", [-0.5], [1.0])
        np.testing.assert_allclose(g, [0.0])

    def test_clamped_pixels_get_zero_gradient(self):
        # sigmoid(40) rounds to 1.0 and is clamped down to 1 - 1e-7.
        g = loss_gradient_wrt_logits("bce", "sigmoid", [40.0], [0.0])
        np.testing.assert_allclose(g, [0.0])

    @pytest.mark.parametrize("loss_name", ALL_LOSSES)
    @pytest.mark.parametrize("act_name", ALL_ACTIVATIONS)
    def test_consistency_with_finite_differences(self, loss_name, act_name):
        loss = make_loss(loss_name)
        activation = make_activation(act_name)
        rng = np.random.default_rng(hash((loss_name, act_name)) % 2 ** 32)
        if act_name in ("linear", "hardtanh"):
            bounds = (-4.0, 4.0) if act_name == "linear" else None
            lo, hi = -2.0, 3.0
        else:
            bounds = None
            dom = activation.effective_domain(0.0025)
            lo, hi = dom.lo, dom.hi
        x = rng.uniform(lo, hi, 100)
        if act_name == "hardtanh":
            # Keep clear of the kinks at 0 and 1.
            x = x[(np.abs(x) > 1e-3) & (np.abs(x - 1.0) > 1e-3)]
        y = (rng.random(x.size) < 0.5).astype(float)
        analytic = loss_gradient_wrt_logits(loss, activation, x, y,
                                            bounds=bounds)
        h = 1e-5

        def value_at(logits):
            p = clamp_probability(
                np.asarray(activation(logits, bounds=bounds), dtype=float))
            return loss.value(p, y)

        for i in range(x.size):
            up, dn = x.copy(), x.copy()
            up[i] += h
            dn[i] -= h
            fd = (value_at(up) - value_at(dn)) / (2.0 * h)
            rel = abs(analytic[i] - fd) / max(1e-8, abs(analytic[i]))
            assert rel < 1e-5 or abs(analytic[i] - fd) < 1e-10


class TestInvariants:
    @given(st.integers(min_value=1, max_value=60),
           st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_bounds(self, n, seed):
        rng = np.random.default_rng(seed)
        yhat = clamp_probability(rng.uniform(0.0, 1.0, n))
        y = (rng.random(n) < 0.5).astype(float)
        assert 0.0 <= make_loss("dice").value(yhat, y) <= 1.0
        assert 0.0 <= make_loss("mse").value(yhat, y) <= 1.0
        assert 0.0 <= make_loss("bce").value(yhat, y) <= -math.log(1e-7)

    def test_perfect_prediction_near_zero(self):
        # Masks from the generator always contain both classes.
        rng = np.random.default_rng(4)
        for _ in range(20):
            y = (rng.random(50) < 0.3).astype(float)
            if y.sum() in (0, 50):
                continue
            yhat = clamp_probability(y)
            for name in ALL_LOSSES:
                assert make_loss(name).value(yhat, y) < 1e-5

    @given(st.integers(min_value=2, max_value=80),
           st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_soft_dice_permutation_invariance(self, n, seed):
        rng = np.random.default_rng(seed)
        yhat = rng.uniform(0.01, 0.99, n)
        y = (rng.random(n) < 0.5).astype(float)
        perm = rng.permutation(n)
        dice = make_loss("dice")
        # Equal up to float summation order.
        assert dice.value(yhat, y) == pytest.approx(
            dice.value(yhat[perm], y[perm]), rel=1e-12, abs=1e-15)


def test_registry_and_aliases():
    assert make_loss("soft_dice").name == "dice"
    assert make_loss("binary_cross_entropy").name == "bce"
    existing = make_loss("mse")
    assert make_loss(existing) is existing
    with pytest.raises(ValueError):
        make_loss("focal")
    with pytest.raises(ValueError):
        make_loss("dice", denom_epsilon=0.0)
