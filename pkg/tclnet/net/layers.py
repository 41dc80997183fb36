"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import collections
import numpy
from tclnet.autodiff import Tensor, DimensionError, PreconditionError
from tclnet.autodiff import functions as F

class Module(object):
    """
    Parameters are Tensor attributes with requires_grad; submodules are Module
    attributes or lists of Modules; buffers are numpy arrays named in `buffers`.
    Names follow attribute order, so state dicts are reproducible.
    """
    buffers = ()
    training = True

    def children(self):
        for name, v in vars(self).items():
            if isinstance(v, Module):
                yield name, v
            elif isinstance(v, (list, tuple)) and v and all(isinstance(x, Module) for x in v):
                for i, x in enumerate(v):
                    yield "{}.{}".format(name, i), x
    # children()

    def _walk(self, prefix, seen):
        if id(self) in seen:
            return
        seen.add(id(self))
        for name, v in vars(self).items():
            if isinstance(v, Tensor) and v.requires_grad:
                yield "param", prefix + name, v
        for name in self.buffers:
            yield "buffer", prefix + name, getattr(self, name)
        for name, m in self.children():
            for x in m._walk(prefix + name + ".", seen):
                yield x
    # _walk()

    def named_parameters(self):
        return [(n, p) for kind, n, p in self._walk("", set()) if kind == "param"]

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self):
        return [(n, b) for kind, n, b in self._walk("", set()) if kind == "buffer"]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def train(self, mode=True):
        self.training = mode
        for _, m in self.children():
            m.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def state_dict(self):
        ret = collections.OrderedDict()
        for kind, n, v in self._walk("", set()):
            ret[n] = (v.data if kind == "param" else v).copy()
        return ret
    # state_dict()

    def load_state_dict(self, state):
        own = list(self._walk("", set()))
        missing = [n for _, n, _ in own if n not in state]
        unexpected = sorted(set(state) - set(n for _, n, _ in own))
        if missing or unexpected:
            raise PreconditionError("state mismatch; missing: {} unexpected: {}".format(missing, unexpected))
        for kind, n, v in own:
            arr = numpy.asarray(state[n], dtype=numpy.float64)
            if arr.shape != v.shape:
                raise DimensionError("{}: stored shape {} vs model shape {}".format(n, arr.shape, v.shape))
            if kind == "param":
                v.data = arr.copy()
            else:
                v[...] = arr
    # load_state_dict()

    def __call__(self, *args, **kwds):
        return self.forward(*args, **kwds)
# class Module

def count_parameters(module):
    return int(sum(p.size for p in module.parameters()))

def count_buffers(module):
    return int(sum(b.size for _, b in module.named_buffers()))

class BatchNorm(Module):
    buffers = ("running_mean", "running_var")

    def __init__(self, channels, gamma_init=1.):
        self.gamma = Tensor.param(numpy.full(channels, gamma_init))
        self.beta = Tensor.param(numpy.zeros(channels))
        self.running_mean = numpy.zeros(channels)
        self.running_var = numpy.ones(channels)

    def forward(self, x):
        return F.batchnorm(x, self.gamma, self.beta, self.running_mean, self.running_var, self.training)
# class BatchNorm

class ConvBlock(Module):
    """3x3 conv (pad 1, no bias) -> BN -> ReLU; He-normal init"""
    def __init__(self, in_channels, out_channels, stride, rng):
        std = numpy.sqrt(2. / (in_channels * 9))
        self.stride = stride
        self.weight = Tensor.param(rng.normal(0, std, size=(out_channels, in_channels, 3, 3)))
        self.bn = BatchNorm(out_channels)

    def forward(self, x):
        return F.relu(self.bn(F.conv2d(x, self.weight, stride=self.stride, pad=1)))
# class ConvBlock

class Linear(Module):
    def __init__(self, in_features, out_features, rng):
        b = numpy.sqrt(1. / in_features)
        self.weight = Tensor.param(rng.uniform(-b, b, size=(in_features, out_features)))
        self.bias = Tensor.param(rng.uniform(-b, b, size=out_features))

    def forward(self, x):
        return F.matmul(x, self.weight) + self.bias
# class Linear
