"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import os
import math
import shutil
import tempfile
import unittest
import numpy
from numpy.testing import assert_allclose, assert_array_equal
from tclnet.utils import fileio
from tclnet.utils.config import RunConfig
from tclnet.autodiff import Tensor, PreconditionError, grad_check, numerical_grad
from tclnet.autodiff.gradcheck import relative_error
from tclnet.autodiff import functions as F
from tclnet.net import pipeline
from tclnet.net.layers import Linear, count_parameters
from tclnet.reid.synth import VideoClip

def small_config(**kwds):
    cfg = dict(frame_height=16, frame_width=8, channels=1, stage_channels=[2, 3, 4],
               blocks_per_stage=1, head_channels=5, erase_height=1, frames_per_clip=4,
               train_frames=2, num_ids=3, clips_per_id=3, n_gallery=1, n_query=1)
    cfg.update(kwds)
    return RunConfig(**cfg).validate()

def make_model(cfg, num_classes=3, seed=0):
    return pipeline.TCLNet.from_config(cfg, num_classes, numpy.random.default_rng(seed))

def random_clip(rng, t=4, identity=0):
    return VideoClip(frames=rng.normal(size=(t, 1, 16, 8)), identity=identity)

def triplet_oracle(v, labels, margin):
    vn = v / numpy.linalg.norm(v, axis=1, keepdims=True)
    n = len(labels)
    losses = []
    for a in range(n):
        dp = [math.sqrt(max(2 - 2 * vn[a].dot(vn[p]), 1e-12)) for p in range(n) if p != a and labels[p] == labels[a]]
        dn = [math.sqrt(max(2 - 2 * vn[a].dot(vn[q]), 1e-12)) for q in range(n) if labels[q] != labels[a]]
        if dp and dn:
            losses.append(max(0., max(dp) - min(dn) + margin))
    return sum(losses) / len(losses)
# triplet_oracle()

class TestSegments(unittest.TestCase):
    def test_divide(self):
        self.assertEqual(pipeline.segment_divide(list(range(8)), 2), [[0, 1], [2, 3], [4, 5], [6, 7]])
        self.assertEqual(pipeline.segment_divide(list(range(6)), 3), [[0, 1, 2], [3, 4, 5]])
        with self.assertRaises(PreconditionError):
            pipeline.segment_divide(list(range(7)), 2)

    def test_clip_frames(self):
        frames = numpy.arange(5.)[:, None]
        assert_array_equal(pipeline.clip_frames(frames, 2), frames[:4])
        assert_array_equal(pipeline.clip_frames(frames, 2, pad=True)[:, 0], [0, 1, 2, 3, 4, 4])
        assert_array_equal(pipeline.clip_frames(frames[:1], 2, pad=True)[:, 0], [0, 0])
        with self.assertRaises(PreconditionError):
            pipeline.clip_frames(frames[:1], 2)
        with self.assertRaises(PreconditionError):
            pipeline.clip_frames(frames[:0], 2)

    def test_descriptor(self):
        rng = numpy.random.default_rng(0)
        vs = [rng.normal(size=5), rng.normal(size=5)]
        d = pipeline.VideoDescriptor(vs)
        self.assertEqual(d.test_vector.shape, (10,))
        self.assertAlmostEqual(numpy.linalg.norm(d.test_vector[:5]), 1., delta=1e-12)
        self.assertAlmostEqual(numpy.linalg.norm(d.test_vector), math.sqrt(2), delta=1e-12)
        scaled = pipeline.VideoDescriptor([vs[0] * 3.5, vs[1]])
        assert_allclose(scaled.test_vector, d.test_vector, rtol=1e-12)
# class TestSegments

class TestModel(unittest.TestCase):
    def test_forward_shapes(self):
        cfg = small_config()
        model = make_model(cfg)
        x = numpy.random.default_rng(0).normal(size=(2, 4, 1, 16, 8))
        vs, arts = model(Tensor(x))
        self.assertEqual([v.shape for v in vs], [(2, 5), (2, 5)])
        self.assertEqual(len(arts), 2)
        self.assertEqual(arts[1].gate.shape, (4, 4, 2))
        with self.assertRaises(PreconditionError):
            model(Tensor(x[:, :3]))

    def test_temporal_average(self):
        cfg = small_config(tsb=False)
        model = make_model(cfg).eval()
        frames = numpy.random.default_rng(1).normal(size=(6, 1, 16, 8))
        vs, _ = model(Tensor(frames[None]))
        seg_vs = [model(Tensor(frames[None, 2*l:2*l+2]))[0] for l in range(3)]
        for i in range(2):
            ref = numpy.mean([s[i].data[0] for s in seg_vs], axis=0)
            assert_allclose(vs[i].data[0], ref, rtol=1e-12, atol=1e-12)

    def test_truncation(self):
        model = make_model(small_config())
        rng = numpy.random.default_rng(2)
        clip = random_clip(rng, t=5)
        d5 = pipeline.extract_descriptors(model, [clip])[0]
        d4 = pipeline.extract_descriptors(model, [VideoClip(frames=clip.frames[:4], identity=0)])[0]
        assert_array_equal(d5.test_vector, d4.test_vector)
        self.assertTrue(model.training)

    def test_single_learner_matches_baseline(self):
        model = make_model(small_config(n_learners=1, tsb=False))
        clips = [random_clip(numpy.random.default_rng(3), t=4)]
        d = pipeline.extract_descriptors(model, clips)[0]
        b = pipeline.baseline_forward(model, clips)[0]
        assert_array_equal(d.vectors[0], b.vectors[0])

    def test_arm_parameters(self):
        with_seo = make_model(small_config(tsb=False, seo=True)).state_dict()
        without = make_model(small_config(tsb=False, seo=False)).state_dict()
        self.assertEqual([(k, v.shape) for k, v in with_seo.items()], [(k, v.shape) for k, v in without.items()])
        full = make_model(small_config(tsb=True))
        extra = set(full.state_dict()) - set(with_seo)
        self.assertTrue(extra)
        self.assertTrue(all(k.startswith("backbone.tsbs.") for k in extra))
        self.assertEqual(count_parameters(full) - count_parameters(make_model(small_config(tsb=False))), 2 * 3)

    def test_gradient_wrt_projection(self):
        cfg = small_config()
        model = make_model(cfg).eval()
        model.backbone.tsbs[0].bn.gamma.data[:] = 0.5
        x = Tensor(numpy.random.default_rng(4).normal(size=(2, 4, 1, 16, 8)))
        f = lambda _: pipeline.ce_heads_loss(model(x)[0], [0, 2], model.classifiers)
        self.assertLess(grad_check(f, model.tse.w), 1e-4)

    def test_full_pipeline_gradients(self):
        # loose floor for entries whose gradient is at the level of the difference noise
        cfg = small_config()
        for seed in range(3):
            model = make_model(cfg, seed=seed).eval()
            model.backbone.tsbs[0].bn.gamma.data[:] = 0.5
            x = Tensor(numpy.random.default_rng(10 + seed).normal(size=(2, 4, 1, 16, 8)))
            f = lambda _: pipeline.ce_heads_loss(model(x)[0], [0, 2], model.classifiers)
            for name, p in (("stage1", model.backbone.stages[0].blocks[0].weight),
                            ("tsb_gamma", model.backbone.tsbs[0].bn.gamma),
                            ("trunk", model.learners.trunk.weight)):
                with self.subTest(seed=seed, param=name):
                    model.zero_grad()
                    f(p).backward()
                    analytic = p.grad.copy()
                    model.zero_grad()
                    numeric = numerical_grad(f, p, eps=1e-5)
                    self.assertGreater(numpy.abs(analytic).max(), 1e-6)
                    self.assertLess(relative_error(analytic, numeric, floor=1e-4).max(), 1e-4)
            self.assertLess(grad_check(f, model.backbone.tsbs[0].bn.gamma), 1e-4)

    def test_load_model(self):
        tmpdir = tempfile.mkdtemp(prefix="tclnet_test")
        try:
            cfg = small_config(seed=3)
            model = make_model(cfg, num_classes=3, seed=9)
            fn = os.path.join(tmpdir, "model.tclk")
            fileio.save_checkpoint(fn, model.state_dict(), cfg.to_text(), epoch=2, seed=cfg.seed,
                                   extra=dict(num_classes=3))
            loaded, lcfg, header = pipeline.load_model(fn)
            self.assertEqual(lcfg, cfg)
            self.assertEqual(header["epoch"], 2)
            clips = [random_clip(numpy.random.default_rng(5))]
            assert_array_equal(pipeline.extract_descriptors(loaded, clips)[0].test_vector,
                               pipeline.extract_descriptors(model, clips)[0].test_vector)
        finally:
            shutil.rmtree(tmpdir)
# class TestModel

class TestLosses(unittest.TestCase):
    def test_uniform_logits(self):
        rng = numpy.random.default_rng(0)
        heads = [Linear(4, 5, rng) for _ in range(2)]
        for h in heads:
            h.weight.data[:] = 0.
            h.bias.data[:] = 0.
        vs = [Tensor(rng.normal(size=(3, 4))) for _ in range(2)]
        loss = pipeline.ce_heads_loss(vs, [0, 4, 2], heads)
        self.assertAlmostEqual(loss.item(), 2 * math.log(5), delta=1e-12)

    def test_saturated(self):
        rng = numpy.random.default_rng(1)
        head = Linear(4, 3, rng)
        head.weight.data[:] = 0.
        head.bias.data[:] = [40., 0., 0.]
        loss = pipeline.ce_heads_loss([Tensor(rng.normal(size=(2, 4)))], [0, 0], [head])
        self.assertLess(loss.item(), 1e-6)
        with self.assertRaises(PreconditionError):
            pipeline.ce_heads_loss([Tensor(numpy.zeros((2, 4)))], [0, 3], [head])
        with self.assertRaises(PreconditionError):
            pipeline.ce_heads_loss([Tensor(numpy.zeros((2, 4)))] * 2, [0, 1], [head])

    def test_ce_gradient(self):
        for seed in range(3):
            rng = numpy.random.default_rng(seed)
            heads = [Linear(4, 3, rng) for _ in range(2)]
            vs = [Tensor.param(rng.normal(size=(5, 4))) for _ in range(2)]
            labels = rng.integers(0, 3, size=5)
            f = lambda _: pipeline.ce_heads_loss(vs, labels, heads)
            self.assertLess(grad_check(f, heads[1].weight), 1e-5)
            self.assertLess(grad_check(f, vs[0]), 1e-5)

    def test_triplet_examples(self):
        same = numpy.tile([1., 0.], (4, 1))
        loss, n = pipeline.batch_hard_triplet_loss(same, [0, 0, 1, 1], 0.3)
        self.assertEqual(n, 4)
        self.assertAlmostEqual(loss.item(), 0.3, delta=1e-12)
        apart = numpy.array([[1., 0.], [1., 0.01], [0., 1.], [0.01, 1.]])
        loss, _ = pipeline.batch_hard_triplet_loss(apart, [0, 0, 1, 1], 0.3)
        self.assertEqual(loss.item(), 0.)

    def test_triplet_oracle(self):
        for seed in range(5):
            rng = numpy.random.default_rng(seed)
            v = rng.normal(size=(8, 5))
            labels = numpy.array([0, 0, 1, 1, 2, 2, 3, 3])
            loss, n = pipeline.batch_hard_triplet_loss(v, labels, 0.3)
            self.assertEqual(n, 8)
            self.assertAlmostEqual(loss.item(), triplet_oracle(v, labels, 0.3), delta=1e-10)
            perm = rng.permutation(8)
            lp, _ = pipeline.batch_hard_triplet_loss(v[perm], labels[perm], 0.3)
            self.assertAlmostEqual(lp.item(), loss.item(), delta=1e-12)

    def test_triplet_without_negatives(self):
        loss, n = pipeline.batch_hard_triplet_loss(numpy.eye(3), [1, 1, 1], 0.3)
        self.assertEqual(n, 0)
        self.assertEqual(loss.item(), 0.)

    def test_triplet_gradient(self):
        rng = numpy.random.default_rng(7)
        v = Tensor.param(rng.normal(size=(6, 4)))
        f = lambda t: pipeline.batch_hard_triplet_loss(t, [0, 0, 1, 1, 2, 2], 1.5)[0]
        self.assertLess(grad_check(f, v), 1e-4)
# class TestLosses

if __name__ == '__main__':
    unittest.main()
