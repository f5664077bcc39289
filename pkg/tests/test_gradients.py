"""Analytic backward passes against central finite differences (double precision)."""

import numpy as np
import pytest

from panolayout import conv, micro, offsets
from panolayout.conv import ConvLayer
from panolayout.gradcheck import gradient_check, numerical_gradient, relative_error
from panolayout.loss import multi_scale_loss, weighted_bce, weighted_bce_logits
from panolayout.offsets import KernelSpec
from panolayout.sphere import ImageGeometry


def loss_of(out, g):
    return float(np.sum(out * g))


@pytest.mark.parametrize("padding", ["zero", "valid", "wrap"])
@pytest.mark.parametrize("stride", [1, 2])
def test_standard_conv_gradients(rng, padding, stride):
    x = rng.normal(size=(2, 7, 9))
    layer = ConvLayer.init(rng, 2, 3, 3, stride)
    layer.bias = rng.normal(size=3)
    out = conv.conv_standard(x, layer, padding)
    g = rng.normal(size=out.shape)
    gx, gw, gb = conv.conv_standard_backward(x, layer, g, padding)

    def f_w(w):
        return loss_of(conv.conv_standard(x, ConvLayer(w, layer.bias, stride), padding), g)

    def f_b(b):
        return loss_of(conv.conv_standard(x, ConvLayer(layer.weight, b, stride), padding), g)

    def f_x(xx):
        return loss_of(conv.conv_standard(xx, layer, padding), g)

    assert gradient_check(f_w, gw, layer.weight) < 1e-6
    assert gradient_check(f_b, gb, layer.bias) < 1e-6
    assert gradient_check(f_x, gx, x) < 1e-6


@pytest.mark.parametrize("r,stride", [(3, 1), (3, 2), (5, 1)])
def test_equi_conv_gradients(rng, r, stride):
    geom = ImageGeometry(24, 12)
    spec = KernelSpec.matching(geom, r)
    field = offsets.offset_field(geom, spec)
    x = rng.normal(size=(2,) + geom.shape)
    layer = ConvLayer.init(rng, 2, 2, r, stride, spec)
    layer.bias = rng.normal(size=2)
    out = conv.conv_equi(x, layer, field)
    g = rng.normal(size=out.shape)
    gx, gw, gb = conv.conv_equi_backward(x, layer, field, g)

    def f_w(w):
        return loss_of(conv.conv_equi(x, ConvLayer(w, layer.bias, stride, spec), field), g)

    def f_x(xx):
        return loss_of(conv.conv_equi(xx, layer, field), g)

    def f_b(b):
        return loss_of(conv.conv_equi(x, ConvLayer(layer.weight, b, stride, spec), field), g)

    assert gradient_check(f_w, gw, layer.weight) < 1e-6
    assert gradient_check(f_x, gx, x) < 1e-5
    assert gradient_check(f_b, gb, layer.bias) < 1e-6


def test_equi_backward_reuses_columns(rng):
    geom = ImageGeometry(16, 8)
    spec = KernelSpec.matching(geom, 3)
    field = offsets.offset_field(geom, spec)
    x = rng.normal(size=(2,) + geom.shape)
    layer = ConvLayer.init(rng, 2, 3, 3, spec=spec)
    g = rng.normal(size=(3,) + geom.shape)
    cols = conv.equi_columns(x, field)
    a = conv.conv_equi_backward(x, layer, field, g)
    b = conv.conv_equi_backward(x, layer, field, g, cols=cols)
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)


def test_weighted_bce_gradient(rng):
    gt = np.zeros((6, 8))
    gt[2:4, 3:6] = 1.0
    gt[0, 0] = 0.7  # soft positive
    pred = rng.uniform(0.05, 0.95, size=gt.shape)
    for soft in (True, False):
        _, g = weighted_bce(pred, gt, soft=soft)
        assert gradient_check(lambda p: weighted_bce(p, gt, soft=soft)[0], g, pred, step=1e-6) < 1e-7


def test_weighted_bce_logits_gradient(rng):
    gt = (rng.uniform(size=(5, 7)) > 0.8).astype(float)
    z = rng.normal(scale=2.0, size=gt.shape)
    _, g = weighted_bce_logits(z, gt)
    assert gradient_check(lambda zz: weighted_bce_logits(zz, gt)[0], g, z, step=1e-6) < 1e-7


def test_multi_scale_gradient(rng):
    shapes = [(4, 8), (8, 16)]
    gts = []
    preds = []
    for s in shapes:
        gts.append({"edge": (rng.uniform(size=s) > 0.7).astype(float), "corner": (rng.uniform(size=s) > 0.9).astype(float)})
        preds.append({"edge": rng.uniform(0.05, 0.95, size=s), "corner": rng.uniform(0.05, 0.95, size=s)})
    _, grads = multi_scale_loss(preds, gts)
    for k in range(len(shapes)):
        for m in ("edge", "corner"):
            def f(p, k=k, m=m):
                trial = [dict(d) for d in preds]
                trial[k][m] = p
                return multi_scale_loss(trial, gts)[0]

            assert gradient_check(f, grads[k][m], preds[k][m], step=1e-6) < 1e-7


@pytest.mark.parametrize("equi", [True, False])
def test_micro_net_parameter_gradients(rng, equi):
    geom = ImageGeometry(16, 8)
    net = micro.MicroNet.build(geom, [2, 3, 2], seed=3, equi=equi)
    x = rng.normal(size=(2,) + geom.shape)
    target = (rng.uniform(size=(2,) + geom.shape) > 0.7).astype(float)
    _, grads = micro.loss_and_grad(net, x, target)
    params = net.params()
    for i in range(len(params)):
        def f(p, i=i):
            trial = list(params)
            trial[i] = p
            net.set_params(trial)
            out = micro.loss_and_grad(net, x, target)[0]
            net.set_params(params)
            return out

        idx = rng.choice(params[i].size, size=min(12, params[i].size), replace=False)
        assert gradient_check(f, grads[i], params[i], step=1e-6, indices=idx) < 1e-6


def test_numerical_gradient_of_quadratic():
    x = np.array([1.0, -2.0, 3.0])
    num = numerical_gradient(lambda v: float(np.sum(v ** 2)), x)
    np.testing.assert_allclose(num, 2 * x, atol=1e-9)
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
