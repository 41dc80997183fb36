"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import numpy
import contextlib

_grad_enabled = [True]

class PreconditionError(ValueError):
    pass

class DimensionError(PreconditionError):
    pass

def as_array(x):
    return numpy.asarray(x, dtype=numpy.float64)
# as_array()

class Tensor(object):
    """
    Dense float64 array with optional gradient tracking.

    Non-leaf tensors keep references to their parents and a local backward rule
    mapping the output gradient to one gradient per parent (None if not needed).
    A tensor that does not require grad never records parents, so evaluation
    passes build no graph.
    """
    __array_ufunc__ = None # ndarray <op> Tensor falls back to the reflected Tensor operator

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None, op=None):
        self.data = as_array(data)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.parents = tuple(parents) if requires_grad else ()
        self.backward_fn = backward_fn if requires_grad else None
        self.op = op
    # __init__()

    @classmethod
    def param(cls, data):
        return cls(numpy.array(data, dtype=numpy.float64), requires_grad=True)

    @property
    def shape(self): return self.data.shape
    @property
    def ndim(self): return self.data.ndim
    @property
    def size(self): return self.data.size
    @property
    def is_leaf(self): return self.backward_fn is None

    def numpy(self): return self.data
    def item(self): return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)
    def detach(self): return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return "Tensor(shape={}, requires_grad={}{})".format(self.shape, self.requires_grad,
                                                              ", op={}".format(self.op) if self.op else "")
    def __len__(self): return len(self.data)

    # operators are defined in functions.py to keep the rules in one place
    def __add__(self, other): return F.add(self, other)
    def __radd__(self, other): return F.add(other, self)
    def __sub__(self, other): return F.sub(self, other)
    def __rsub__(self, other): return F.sub(other, self)
    def __mul__(self, other): return F.mul(self, other)
    def __rmul__(self, other): return F.mul(other, self)
    def __truediv__(self, other): return F.div(self, other)
    def __rtruediv__(self, other): return F.div(other, self)
    def __neg__(self): return F.neg(self)
    def __matmul__(self, other): return F.matmul(self, other)
    def __rmatmul__(self, other): return F.matmul(other, self)
    def __getitem__(self, idx): return F.getitem(self, idx)

    @property
    def T(self): return F.transpose(self)
    def transpose(self, *axes): return F.transpose(self, axes if axes else None)
    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)): shape = shape[0]
        return F.reshape(self, shape)
    def sum(self, axis=None, keepdims=False): return F.sum(self, axis, keepdims)
    def mean(self, axis=None, keepdims=False): return F.mean(self, axis, keepdims)
    def backward(self): backward(self)
# class Tensor

def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)

def make_result(data, parents, backward_fn, op):
    parents = tuple(parents)
    if _grad_enabled[0] and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=parents, backward_fn=backward_fn, op=op)
    return Tensor(data, op=op)
# make_result()

@contextlib.contextmanager
def no_grad():
    """operations inside record no graph"""
    prev = _grad_enabled[0]
    _grad_enabled[0] = False
    try:
        yield
    finally:
        _grad_enabled[0] = prev
# no_grad()

class ComputationTape(object):
    """
    Executed operations reachable from a root, in topological order
    (every node after its inputs). Built on demand from the dynamic graph.
    """
    def __init__(self, root):
        self.nodes = []
        if not root.requires_grad:
            return
        visited = set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                self.nodes.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))
    # __init__()

    def __len__(self): return len(self.nodes)
    def __iter__(self): return iter(self.nodes)
# class ComputationTape

def backward(loss):
    """
    Populate .grad of every requires_grad leaf reachable from a scalar loss.
    Leaf gradients accumulate over repeated calls; call zero_grad() to reset.
    """
    if loss.data.size != 1:
        raise PreconditionError("backward() needs a scalar loss, got shape {}".format(loss.shape))
    tape = ComputationTape(loss)
    if len(tape) == 0:
        raise PreconditionError("backward() on a loss that does not depend on any tensor requiring grad")

    grads = {id(loss): numpy.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            if node.grad is None:
                node.grad = numpy.array(g, dtype=numpy.float64).reshape(node.shape)
            else:
                node.grad = node.grad + g
            continue
        pgrads = node.backward_fn(g)
        for p, pg in zip(node.parents, pgrads):
            if pg is None or not p.requires_grad:
                continue
            if id(p) in grads:
                grads[id(p)] = grads[id(p)] + pg
            else:
                grads[id(p)] = pg
# backward()

from tclnet.autodiff import functions as F
