import numpy as np
import pytest

from panolayout import gt, micro, synth
from panolayout.sphere import ImageGeometry

G = ImageGeometry(32, 16)


@pytest.fixture
def sample():
    rng = np.random.default_rng(4)
    room = synth.random_room(rng)
    img = micro.standardize(synth.panorama(G, room, rng))
    return img, gt.render_gt_maps(synth.labels_for(G, room)).as_array()


def net(seed=0, **kw):
    return micro.MicroNet.build(G, [3, 6, 2], seed, **kw)


def test_zero_epochs(sample):
    n = net()
    before = [p.copy() for p in n.params()]
    assert micro.train_micro(n, [sample], 0) == []
    for a, b in zip(before, n.params()):
        np.testing.assert_array_equal(a, b)


def test_deterministic_per_seed(sample):
    h1 = micro.train_micro(net(1), [sample], 5, seed=2)
    h2 = micro.train_micro(net(1), [sample], 5, seed=2)
    assert h1 == h2
    assert h1 != micro.train_micro(net(3), [sample], 5, seed=2)


def test_dropout_deterministic(sample):
    h1 = micro.train_micro(net(1, dropout=0.2), [sample], 4, seed=5)
    h2 = micro.train_micro(net(1, dropout=0.2), [sample], 4, seed=5)
    assert h1 == h2


@pytest.mark.parametrize("equi", [True, False])
def test_loss_decreases(sample, equi):
    h = micro.train_micro(net(0, equi=equi), [sample], 40, lr=1e-2)
    assert h[-1] < h[0]


def test_nan_raises(sample):
    img, target = sample
    bad = img.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(micro.TrainingDiverged):
        micro.train_micro(net(), [(bad, target)], 2)


def test_gradients_match_finite_differences(sample):
    img, target = sample
    n = net(7)
    loss, grads = micro.loss_and_grad(n, img, target)
    params = n.params()
    rng = np.random.default_rng(0)
    eps = 1e-6
    for pi in (0, 2, 3):
        for _ in range(3):
            idx = tuple(rng.integers(0, s) for s in params[pi].shape)
            p = [q.copy() for q in params]
            p[pi][idx] += eps
            n.set_params(p)
            lp, _ = micro.loss_and_grad(n, img, target)
            p[pi][idx] -= 2 * eps
            n.set_params(p)
            lm, _ = micro.loss_and_grad(n, img, target)
            assert abs((lp - lm) / (2 * eps) - grads[pi][idx]) < 1e-6 * max(1, abs(grads[pi][idx]))
        n.set_params(params)


def test_predict_range(sample):
    p = net().predict(sample[0])
    assert p.shape == (2, 16, 32) and p.min() > 0 and p.max() < 1


def test_standardize():
    x = np.random.default_rng(0).normal(3, 2, size=(3, 4, 8))
    s = micro.standardize(x)
    np.testing.assert_allclose(s.mean(axis=(1, 2)), 0, atol=1e-12)
    np.testing.assert_allclose(s.std(axis=(1, 2)), 1, atol=1e-12)
    assert np.all(micro.standardize(np.ones((1, 2, 2))) == 0)


def test_multi_scale_targets():
    t = np.zeros((2, 16, 32))
    t[0, 3, 5] = 1
    levels = micro.multi_scale_targets(t, 3)
    assert [l["edge"].shape for l in levels] == [(4, 8), (8, 16), (16, 32)]
    assert levels[0]["edge"][0, 1] == 1
