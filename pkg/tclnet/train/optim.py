"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import numpy

def step_decay(epoch, base_lr, decay=0.1, step=40):
    """base_lr * decay^(epoch // step); epochs count from 0"""
    return base_lr * decay ** (epoch // step)

class Adam(object):
    def __init__(self, params, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [numpy.zeros_like(p.data) for p in self.params]
        self.v = [numpy.zeros_like(p.data) for p in self.params]
    # __init__()

    def step(self, lr=None):
        lr = self.lr if lr is None else lr
        self.t += 1
        c1 = 1. - self.beta1 ** self.t
        c2 = 1. - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None: continue
            m *= self.beta1
            m += (1. - self.beta1) * p.grad
            v *= self.beta2
            v += (1. - self.beta2) * p.grad**2
            p.data = p.data - lr * (m / c1) / (numpy.sqrt(v / c2) + self.eps)
    # step()

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()
# class Adam
