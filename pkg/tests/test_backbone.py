"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import unittest
import numpy
from numpy.testing import assert_allclose
from tclnet.autodiff import Tensor, DimensionError, PreconditionError
from tclnet.net.layers import count_parameters
from tclnet.net import backbone

def small_config(**kwds):
    cfg = dict(stage_channels=[2, 3, 4], blocks_per_stage=1, in_channels=1,
               frame_height=16, frame_width=8, head_channels=5, tsb_stages=[])
    cfg.update(kwds)
    return backbone.BackboneConfig(**cfg).validate()

class TestBackbone(unittest.TestCase):
    def test_default_output(self):
        cfg = backbone.BackboneConfig(tsb_stages=[])
        self.assertEqual(cfg.output_size(), (16, 8))
        net = backbone.Backbone(cfg, numpy.random.default_rng(0))
        x = numpy.random.default_rng(1).normal(size=(1, 1, 3, 64, 32))
        self.assertEqual(net(Tensor(x)).shape, (1, 1, 64, 16, 8))

    def test_trace(self):
        x = Tensor(numpy.random.default_rng(0).normal(size=(1, 3, 1, 16, 8)))
        traces = {}
        for stage in (2, 3):
            net = backbone.Backbone(small_config(tsb_stages=[stage]), numpy.random.default_rng(5))
            net.tsbs[0].bn.gamma.data[:] = 1.
            trace = []
            net(x, trace=trace)
            traces[stage] = trace
        self.assertEqual([n for n, _ in traces[2]], ["stage1", "stage2", "tsb2", "stage3"])
        self.assertEqual([n for n, _ in traces[3]], ["stage1", "stage2", "stage3", "tsb3"])
        self.assertEqual(traces[2][1], traces[3][1])
        self.assertNotEqual(traces[2][1][1], traces[2][2][1])
        self.assertNotEqual(traces[2][3], traces[3][2])

    def test_fresh_tsb_is_identity(self):
        net = backbone.Backbone(small_config(tsb_stages=[2]), numpy.random.default_rng(2))
        trace = []
        net(Tensor(numpy.random.default_rng(3).normal(size=(2, 2, 1, 16, 8))), trace=trace)
        self.assertEqual(trace[1][1], trace[2][1])

    def test_frames_independent_without_tsb(self):
        net = backbone.Backbone(small_config(), numpy.random.default_rng(4)).eval()
        frames = list(numpy.random.default_rng(5).normal(size=(3, 1, 16, 8)))
        maps = backbone.backbone_forward(frames, net)
        for f, m in zip(frames, maps):
            single = backbone.backbone_forward([f], net)[0]
            assert_allclose(m.data, single.data, rtol=1e-12, atol=1e-12)

    def test_inconsistent_frames(self):
        net = backbone.Backbone(small_config(), numpy.random.default_rng(6))
        with self.assertRaises(DimensionError):
            backbone.backbone_forward([numpy.zeros((1, 16, 8)), numpy.zeros((1, 8, 8))], net)
        with self.assertRaises(PreconditionError):
            backbone.backbone_forward([], net)

    def test_tsb_parameters(self):
        plain = backbone.Backbone(small_config(), numpy.random.default_rng(7))
        boosted = backbone.Backbone(small_config(tsb_stages=[2]), numpy.random.default_rng(7))
        self.assertEqual(count_parameters(boosted) - count_parameters(plain), 2 * 3)

    def test_validate(self):
        with self.assertRaises(PreconditionError):
            small_config(head_channels=3)
        with self.assertRaises(PreconditionError):
            small_config(tsb_stages=[4])
        with self.assertRaises(PreconditionError):
            small_config(stage_channels=[2, 3])
# class TestBackbone

if __name__ == '__main__':
    unittest.main()
