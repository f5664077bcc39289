import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from panolayout.loss import EPS, class_weights, multi_scale_loss, weighted_bce, weighted_bce_logits


def test_class_weights_five_percent():
    gt = np.zeros(1000)
    gt[:50] = 1.0
    w1, w0 = class_weights(gt)
    assert abs(w1 - 20.0) < 1e-6
    assert abs(w0 - 1000 / 950) < 1e-6
    assert abs(w0 - 1.0526) < 1e-4


@given(st.integers(1, 99))
def test_weights_balance_classes(n1):
    gt = np.zeros(100)
    gt[:n1] = 1.0
    w1, w0 = class_weights(gt)
    # each class contributes N in total weight
    assert w1 * n1 == pytest.approx(100) and w0 * (100 - n1) == pytest.approx(100)


def test_empty_class_warns_and_zeroes():
    with pytest.warns(RuntimeWarning):
        w1, w0 = class_weights(np.zeros(10))
    assert w1 == 0.0 and w0 == 1.0


def test_soft_targets_binarized_for_counts():
    gt = np.array([0.2, 0.6, 0.9, 0.0])
    assert class_weights(gt) == (2.0, 2.0)


def test_perfect_prediction_loss_is_small():
    gt = np.array([0.0, 1.0, 1.0, 0.0])
    loss, _ = weighted_bce(gt, gt)
    # clipped at eps, so the loss is N * -log(1 - eps) rather than zero
    assert loss == pytest.approx(4 * 2.0 * -np.log1p(-EPS), rel=1e-6)


def test_uniform_prediction_loss():
    gt = np.zeros(20)
    gt[:4] = 1
    loss, _ = weighted_bce(np.full(20, 0.5), gt)
    # every pixel costs w_t * ln 2; the weights sum to 2N
    assert loss == pytest.approx(2 * 20 * np.log(2))


def test_clipping_zeroes_gradient():
    gt = np.array([1.0, 0.0, 1.0, 0.0])
    pred = np.array([0.0, 1.0, 0.5, 0.5])
    loss, g = weighted_bce(pred, gt)
    assert np.isfinite(loss)
    assert g[0] == 0.0 and g[1] == 0.0 and g[2] != 0.0


def test_logits_agree_with_probabilities(rng):
    gt = (rng.uniform(size=30) > 0.7).astype(float)
    z = rng.normal(size=30)
    a, _ = weighted_bce_logits(z, gt)
    b, _ = weighted_bce(1 / (1 + np.exp(-z)), gt)
    assert a == pytest.approx(b)


def test_multi_scale_sums_scales(rng):
    gts = [{"edge": (rng.uniform(size=(4, 8)) > 0.5).astype(float), "corner": (rng.uniform(size=(4, 8)) > 0.8).astype(float)}]
    preds = [{"edge": rng.uniform(0.1, 0.9, size=(4, 8)), "corner": rng.uniform(0.1, 0.9, size=(4, 8))}]
    total, _ = multi_scale_loss(preds * 2, gts * 2)
    single = weighted_bce(preds[0]["edge"], gts[0]["edge"])[0] + weighted_bce(preds[0]["corner"], gts[0]["corner"])[0]
    assert total == pytest.approx(2 * single)
    with pytest.raises(ValueError):
        multi_scale_loss(preds, gts * 2)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        weighted_bce(np.zeros(3), np.zeros(4))


def test_no_warning_on_normal_maps():
    gt = np.zeros(10)
    gt[3] = 1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        weighted_bce(np.full(10, 0.3), gt)
