"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import math
import unittest
import numpy
from numpy.testing import assert_allclose, assert_array_equal
from tclnet.autodiff import Tensor, PreconditionError, DimensionError, grad_check
from tclnet.autodiff import functions as F
from tclnet.net.layers import count_parameters, count_buffers
from tclnet.net import tsb

def randomize_bn(bn, rng):
    d = bn.gamma.shape[0]
    bn.gamma.data = rng.uniform(0.5, 1.5, size=d)
    bn.beta.data = rng.normal(size=d)
    bn.running_mean[:] = rng.normal(size=d)
    bn.running_var[:] = rng.uniform(0.5, 2., size=d)

def tsb_oracle(X, bn, tau, eps=1e-5):
    """explicit loops over frames and positions; BN in eval mode"""
    b, t, d, h, w = X.shape
    out = numpy.empty_like(X)
    for bi in range(b):
        for ti in range(t):
            q = X[bi, ti].mean(axis=(1, 2))
            q = q / numpy.linalg.norm(q)
            descs = [X[bi, s, :, i, j] for s in range(t) if s != ti for i in range(h) for j in range(w)]
            logits = [tau * numpy.dot(q, m) / numpy.linalg.norm(m) for m in descs]
            top = max(logits)
            wts = [math.exp(l - top) for l in logits]
            z = sum(wts)
            o = sum(wt / z * m for wt, m in zip(wts, descs))
            e = bn.gamma.data * (o - bn.running_mean) / numpy.sqrt(bn.running_var + eps) + bn.beta.data
            out[bi, ti] = X[bi, ti] + e[:, None, None]
    return out
# tsb_oracle()

class TestAttention(unittest.TestCase):
    def test_identical_rows(self):
        A = tsb.attention_weights(numpy.array([1., 2., 3.]), numpy.tile([0.5, -1., 2.], (4, 1)), 16.).data
        assert_allclose(A, numpy.full(4, 0.25), rtol=1e-14)

    def test_two_rows(self):
        A = tsb.attention_weights(numpy.array([1., 0.]), numpy.eye(2), 1.).data
        assert_allclose(A, [math.e / (math.e + 1), 1 / (math.e + 1)], rtol=1e-14)
        self.assertAlmostEqual(A[0], 0.7311, places=4)

    def test_loop_oracle(self):
        rng = numpy.random.default_rng(0)
        q, M = rng.normal(size=5), rng.normal(size=(7, 5))
        A = tsb.attention_weights(q, M, 16.).data
        cos = [q.dot(m) / numpy.linalg.norm(q) / numpy.linalg.norm(m) for m in M]
        z = sum(math.exp(16. * c) for c in cos)
        for i in range(7):
            self.assertAlmostEqual(A[i], math.exp(16. * cos[i]) / z, delta=1e-12)
        self.assertAlmostEqual(A.sum(), 1., delta=1e-12)
        self.assertEqual(numpy.argmin(A), numpy.argmin(cos))

    def test_monotone(self):
        rng = numpy.random.default_rng(1)
        q, M = rng.normal(size=4), rng.normal(size=(5, 4))
        A = tsb.attention_weights(q, M, 4.).data
        M2 = M.copy()
        M2[0] = 0.7 * M[0] / numpy.linalg.norm(M[0]) + 0.3 * q / numpy.linalg.norm(q)
        A2 = tsb.attention_weights(q, M2, 4.).data
        self.assertGreater(A2[0], A[0])

    def test_zero_query(self):
        A = tsb.attention_weights(numpy.zeros(3), numpy.random.default_rng(2).normal(size=(4, 3)), 16.).data
        self.assertTrue(numpy.isfinite(A).all())
        assert_allclose(A, numpy.full(4, 0.25), rtol=1e-14)

    def test_gradient(self):
        for seed in range(3):
            rng = numpy.random.default_rng(seed)
            q, M = Tensor.param(rng.normal(size=4)), Tensor.param(rng.normal(size=(6, 4)))
            r = rng.normal(size=6)
            f = lambda _: F.sum(tsb.attention_weights(q, M, 2.) * r)
            self.assertLess(grad_check(f, q), 1e-5)
            self.assertLess(grad_check(f, M), 1e-5)

    def test_errors(self):
        with self.assertRaises(DimensionError):
            tsb.attention_weights(numpy.zeros(3), numpy.zeros((4, 2)), 1.)
        with self.assertRaises(PreconditionError):
            tsb.TsbConfig(temperature=0.).validate()
# class TestAttention

class TestPropagate(unittest.TestCase):
    def test_zero_gamma(self):
        rng = numpy.random.default_rng(0)
        m = tsb.TSB(3, tsb.TsbConfig())
        Q, M = rng.normal(size=(3, 4, 2)), rng.normal(size=(2, 3, 4, 2))
        assert_array_equal(tsb.propagate(Q, M, m.bn, 16.).data, Q)

    def test_empty_memory(self):
        m = tsb.TSB(3, tsb.TsbConfig())
        Q = numpy.ones((3, 2, 2))
        assert_array_equal(tsb.propagate(Q, numpy.zeros((0, 3, 2, 2)), m.bn, 16.).data, Q)

    def test_constant_memory(self):
        rng = numpy.random.default_rng(1)
        m = tsb.TSB(3, tsb.TsbConfig())
        randomize_bn(m.bn, rng)
        m.eval()
        c = numpy.array([0.3, -1., 2.])
        M = numpy.broadcast_to(c[None, :, None, None], (3, 3, 4, 2)).copy()
        Q = rng.normal(size=(3, 4, 2))
        E = tsb.propagate(Q, M, m.bn, 16.).data
        bn = m.bn.gamma.data * (c - m.bn.running_mean) / numpy.sqrt(m.bn.running_var + 1e-5) + m.bn.beta.data
        assert_allclose(E, Q + bn[:, None, None], rtol=1e-12, atol=1e-12)

    def test_matches_module(self):
        rng = numpy.random.default_rng(2)
        m = tsb.TSB(3, tsb.TsbConfig(temperature=4.))
        randomize_bn(m.bn, rng)
        m.eval()
        X = rng.normal(size=(1, 4, 3, 3, 2))
        out = m(Tensor(X)).data
        assert_allclose(out, tsb_oracle(X, m.bn, 4.), rtol=1e-10, atol=1e-10)
        for t in range(4):
            others = numpy.stack([X[0, s] for s in range(4) if s != t])
            E = tsb.propagate(X[0, t], others, m.bn, 4.).data
            assert_allclose(out[0, t], E, rtol=1e-10, atol=1e-10)
        listed = tsb.tsb_forward([X[0, t] for t in range(4)], m)
        assert_allclose(numpy.stack([e.data for e in listed]), out[0], rtol=0, atol=0)

    def test_gradient(self):
        for seed in range(3):
            rng = numpy.random.default_rng(seed)
            m = tsb.TSB(3, tsb.TsbConfig(temperature=2.))
            randomize_bn(m.bn, rng)
            m.eval()
            Q, M = Tensor.param(rng.normal(size=(3, 2, 2))), Tensor.param(rng.normal(size=(2, 3, 2, 2)))
            r = rng.normal(size=(3, 2, 2))
            f = lambda _: F.sum(tsb.propagate(Q, M, m.bn, 2.) * r)
            self.assertLess(grad_check(f, Q), 1e-4)
            self.assertLess(grad_check(f, M), 1e-4)
# class TestPropagate

class TestTSBModule(unittest.TestCase):
    def test_fresh_is_identity(self):
        X = numpy.random.default_rng(0).normal(size=(2, 3, 4, 3, 2))
        assert_array_equal(tsb.TSB(4, tsb.TsbConfig())(Tensor(X)).data, X)

    def test_single_frame(self):
        m = tsb.TSB(4, tsb.TsbConfig())
        randomize_bn(m.bn, numpy.random.default_rng(1))
        X = numpy.random.default_rng(2).normal(size=(2, 1, 4, 3, 2))
        assert_array_equal(m(Tensor(X)).data, X)
        self.assertIsNone(m.last_attention)

    def test_identical_frames(self):
        rng = numpy.random.default_rng(3)
        m = tsb.TSB(3, tsb.TsbConfig())
        randomize_bn(m.bn, rng)
        frame = numpy.broadcast_to(rng.normal(size=(3, 1, 1)), (3, 2, 2))
        X = numpy.broadcast_to(frame, (1, 4, 3, 2, 2)).copy()
        out = m(Tensor(X)).data
        for t in range(1, 4):
            assert_allclose(out[0, t], out[0, 0], rtol=1e-12, atol=1e-12)
        A = m.last_attention[0]
        for t in range(4):
            others = numpy.delete(A[t], t, axis=0)
            assert_allclose(others, numpy.full(others.shape, 1. / 12), rtol=1e-12)

    def test_attention_rows(self):
        rng = numpy.random.default_rng(4)
        m = tsb.TSB(3, tsb.TsbConfig())
        m(Tensor(rng.normal(size=(2, 3, 3, 2, 2))))
        A = m.last_attention
        self.assertEqual(A.shape, (2, 3, 3, 2, 2))
        assert_allclose(A.sum(axis=(2, 3, 4)), numpy.ones((2, 3)), rtol=0, atol=1e-12)
        for t in range(3):
            assert_array_equal(A[:, t, t], 0.)

    def test_permutation(self):
        rng = numpy.random.default_rng(5)
        m = tsb.TSB(3, tsb.TsbConfig())
        randomize_bn(m.bn, rng)
        X = rng.normal(size=(2, 4, 3, 2, 3))
        for training in (True, False):
            m.train(training)
            out = m(Tensor(X)).data
            rev = m(Tensor(X[:, ::-1].copy())).data
            assert_allclose(rev, out[:, ::-1], rtol=1e-12, atol=1e-12)

    def test_gradient(self):
        for seed in range(3):
            rng = numpy.random.default_rng(seed)
            m = tsb.TSB(3, tsb.TsbConfig(temperature=2.))
            randomize_bn(m.bn, rng)
            X = Tensor.param(rng.normal(size=(2, 3, 3, 2, 2)))
            r = rng.normal(size=X.shape)
            f = lambda _: F.sum(m(X) * r)
            self.assertLess(grad_check(f, X), 1e-4)
            self.assertLess(grad_check(f, m.bn.gamma), 1e-4)

    def test_parameter_count(self):
        m = tsb.TSB(7, tsb.TsbConfig())
        self.assertEqual(count_parameters(m), 14)
        self.assertEqual(count_buffers(m), 14)

    def test_errors(self):
        with self.assertRaises(DimensionError):
            tsb.TSB(3, tsb.TsbConfig())(Tensor(numpy.zeros((3, 3, 2, 2))))
        with self.assertRaises(PreconditionError):
            tsb.tsb_forward([], tsb.TSB(3, tsb.TsbConfig()))
# class TestTSBModule

if __name__ == '__main__':
    unittest.main()
