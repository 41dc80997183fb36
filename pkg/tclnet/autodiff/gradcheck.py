"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import numpy
from .tensor import Tensor, PreconditionError

def numerical_grad(f, x, eps=1e-6):
    """central differences of scalar f w.r.t. every entry of x (x.data is perturbed in place and restored)"""
    g = numpy.zeros_like(x.data)
    flat = x.data.reshape(-1) # view
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = float(f(x).data)
        flat[i] = orig - eps
        fm = float(f(x).data)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * eps)
    return g
# numerical_grad()

def relative_error(a, b, floor=1e-8):
    return numpy.abs(a - b) / numpy.maximum(numpy.maximum(numpy.abs(a), numpy.abs(b)), floor)

def grad_check(f, x, eps=1e-6):
    """
    Max relative error between the backward gradient of scalar f at x and central
    differences, with denominator max(|a|, |b|, 1e-8).
    f must be deterministic; for a non-deterministic f the result is meaningless.
    """
    if not isinstance(x, Tensor) or not x.requires_grad:
        raise PreconditionError("grad_check needs a Tensor with requires_grad=True")
    if not x.data.flags.c_contiguous:
        x.data = numpy.ascontiguousarray(x.data)
    x.zero_grad()
    y = f(x)
    if y.data.size != 1:
        raise PreconditionError("grad_check needs a scalar-valued function, got shape {}".format(y.shape))
    y.backward()
    analytic = x.grad if x.grad is not None else numpy.zeros_like(x.data)
    x.zero_grad()
    numeric = numerical_grad(f, x, eps)
    if analytic.size == 0:
        return 0.
    return float(relative_error(analytic, numeric).max())
# grad_check()
