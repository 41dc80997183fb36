"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import numpy
from numpy.lib.stride_tricks import sliding_window_view
from .tensor import Tensor, as_tensor, as_array, make_result, PreconditionError, DimensionError

MASK_VALUE = -1e30 # finite stand-in for -inf in masked softmax inputs

def unbroadcast(g, shape):
    # sum g down to shape after numpy broadcasting
    if g.shape == tuple(shape):
        return g
    ndiff = g.ndim - len(shape)
    if ndiff > 0:
        g = g.sum(axis=tuple(range(ndiff)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)
# unbroadcast()

def _axes_tuple(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)

# ---- elementwise ----

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return make_result(a.data + b.data, (a, b),
                       lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)), "add")

def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return make_result(a.data - b.data, (a, b),
                       lambda g: (unbroadcast(g, a.shape), unbroadcast(-g, b.shape)), "sub")

def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return make_result(a.data * b.data, (a, b),
                       lambda g: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)), "mul")

def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    def backward_fn(g):
        return (unbroadcast(g / b.data, a.shape),
                unbroadcast(-g * a.data / b.data**2, b.shape))
    return make_result(a.data / b.data, (a, b), backward_fn, "div")

def neg(a):
    a = as_tensor(a)
    return make_result(-a.data, (a,), lambda g: (-g,), "neg")

def exp(a):
    a = as_tensor(a)
    y = numpy.exp(a.data)
    return make_result(y, (a,), lambda g: (g * y,), "exp")

def log(a):
    a = as_tensor(a)
    return make_result(numpy.log(a.data), (a,), lambda g: (g / a.data,), "log")

def sqrt(a):
    a = as_tensor(a)
    y = numpy.sqrt(a.data)
    return make_result(y, (a,), lambda g: (0.5 * g / y,), "sqrt")

def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    return make_result(numpy.where(mask, a.data, 0.), (a,), lambda g: (g * mask,), "relu")

def clip_min(a, lo):
    a = as_tensor(a)
    mask = a.data > lo
    return make_result(numpy.where(mask, a.data, lo), (a,), lambda g: (g * mask,), "clip_min")

# ---- shape handling ----

def reshape(a, shape):
    a = as_tensor(a)
    return make_result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")

def transpose(a, axes=None):
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = numpy.argsort(axes)
    return make_result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),), "transpose")

def broadcast_to(a, shape):
    a = as_tensor(a)
    return make_result(numpy.broadcast_to(a.data, shape).copy(), (a,),
                       lambda g: (unbroadcast(g, a.shape),), "broadcast_to")

def getitem(a, idx):
    a = as_tensor(a)
    def backward_fn(g):
        ret = numpy.zeros_like(a.data)
        numpy.add.at(ret, idx, g)
        return (ret,)
    return make_result(a.data[idx], (a,), backward_fn, "getitem")

def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise PreconditionError("stack() of an empty list")
    shapes = set(t.shape for t in tensors)
    if len(shapes) > 1:
        raise DimensionError("stack() needs equal shapes, got {}".format(sorted(shapes)))
    def backward_fn(g):
        return tuple(numpy.take(g, i, axis=axis) for i in range(len(tensors)))
    return make_result(numpy.stack([t.data for t in tensors], axis=axis), tensors, backward_fn, "stack")

def concatenate(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = numpy.cumsum(sizes)[:-1]
    def backward_fn(g):
        return tuple(numpy.split(g, splits, axis=axis))
    return make_result(numpy.concatenate([t.data for t in tensors], axis=axis), tensors, backward_fn, "concatenate")

# ---- reductions ----

def sum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _axes_tuple(axis, a.ndim)
    def backward_fn(g):
        if not keepdims:
            g = numpy.expand_dims(g, axes)
        return (numpy.broadcast_to(g, a.shape).copy(),)
    return make_result(a.data.sum(axis=axes, keepdims=keepdims), (a,), backward_fn, "sum")

def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _axes_tuple(axis, a.ndim)
    count = int(numpy.prod([a.shape[i] for i in axes]))
    return sum(a, axes, keepdims) / count

def amax(a, axis):
    """max along one axis; the gradient goes to the first maximal entry"""
    a = as_tensor(a)
    idx = numpy.expand_dims(numpy.argmax(a.data, axis=axis), axis)
    y = numpy.take_along_axis(a.data, idx, axis=axis)
    def backward_fn(g):
        ret = numpy.zeros_like(a.data)
        numpy.put_along_axis(ret, idx, numpy.expand_dims(g, axis), axis=axis)
        return (ret,)
    return make_result(numpy.squeeze(y, axis=axis), (a,), backward_fn, "amax")

def amin(a, axis):
    return neg(amax(neg(a), axis))

def global_avg_pool(x):
    """[..., C, H, W] -> [..., C]"""
    x = as_tensor(x)
    if x.ndim < 3:
        raise DimensionError("global_avg_pool needs [..., C, H, W], got {}".format(x.shape))
    hw = x.shape[-2] * x.shape[-1]
    def backward_fn(g):
        return (numpy.broadcast_to((g / hw)[..., None, None], x.shape).copy(),)
    return make_result(x.data.mean(axis=(-2, -1)), (x,), backward_fn, "gap")

# ---- linear algebra ----

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    A, B = a.data, b.data
    if A.ndim == 0 or B.ndim == 0:
        raise DimensionError("matmul of a scalar: {} x {}".format(a.shape, b.shape))
    a1, b1 = A.ndim == 1, B.ndim == 1
    A2 = A[None, :] if a1 else A
    B2 = B[:, None] if b1 else B
    if A2.shape[-1] != B2.shape[-2]:
        raise DimensionError("matmul inner extents differ: {} x {}".format(a.shape, b.shape))
    out = numpy.matmul(A2, B2)
    if b1: out = out[..., 0]
    if a1: out = out[..., 0, :] if not b1 else out[..., 0]
    def backward_fn(g):
        G = g
        if b1: G = G[..., None]
        if a1: G = numpy.expand_dims(G, -2)
        gA = numpy.matmul(G, numpy.swapaxes(B2, -1, -2))
        gB = numpy.matmul(numpy.swapaxes(A2, -1, -2), G)
        return (unbroadcast(gA, A2.shape).reshape(A.shape),
                unbroadcast(gB, B2.shape).reshape(B.shape))
    return make_result(out, (a, b), backward_fn, "matmul")
# matmul()

def conv2d(x, k, stride=1, pad=0):
    """
    Direct cross-correlation. x: [C_in, H, W] or [B, C_in, H, W]; k: [C_out, C_in, kh, kw]
    """
    x, k = as_tensor(x), as_tensor(k)
    if x.ndim not in (3, 4) or k.ndim != 4:
        raise DimensionError("conv2d needs x [B,C,H,W] or [C,H,W] and k [Co,Ci,kh,kw], got {} and {}".format(x.shape, k.shape))
    if stride < 1 or pad < 0:
        raise PreconditionError("conv2d needs stride >= 1 and pad >= 0 (stride={} pad={})".format(stride, pad))
    single = x.ndim == 3
    X = x.data[None] if single else x.data
    K = k.data
    _, ci, h, w = X.shape
    co, ci2, kh, kw = K.shape
    if ci != ci2:
        raise DimensionError("conv2d channel mismatch: input {} kernel {}".format(x.shape, k.shape))
    if kh > h + 2 * pad or kw > w + 2 * pad:
        raise DimensionError("conv2d kernel {} larger than padded input {} (pad={})".format(k.shape, x.shape, pad))
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    Xp = numpy.pad(X, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad > 0 else X
    def windows():
        return sliding_window_view(Xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :ho, :wo]
    out = numpy.tensordot(windows(), K, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if single: out = out[0]

    def backward_fn(g):
        G = g[None] if single else g
        gK = numpy.tensordot(G, windows(), axes=([0, 2, 3], [0, 2, 3]))
        gcols = numpy.tensordot(G, K, axes=([1], [0])) # [B, ho, wo, ci, kh, kw]
        gXp = numpy.zeros_like(Xp)
        for i in range(kh):
            for j in range(kw):
                gXp[:, :, i:i+stride*ho:stride, j:j+stride*wo:stride] += gcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        gX = gXp[:, :, pad:pad+h, pad:pad+w]
        if single: gX = gX[0]
        return (gX, gK)
    return make_result(out, (x, k), backward_fn, "conv2d")
# conv2d()

# ---- normalization ----

def batchnorm(x, gamma, beta, running_mean, running_var, training, momentum=0.1, eps=1e-5):
    """
    x: [B, C, ...]; statistics over every axis but 1.
    running_mean/running_var are numpy arrays updated in place in training mode.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim < 2:
        raise DimensionError("batchnorm needs [B, C, ...], got {}".format(x.shape))
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise DimensionError("batchnorm gamma {} / beta {} do not match channel extent of {}".format(gamma.shape, beta.shape, x.shape))
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, c) + (1,) * (x.ndim - 2)
    if training:
        if x.shape[0] == 0:
            raise PreconditionError("batchnorm in train mode needs a nonempty batch")
        n = x.size // c
        mu = mean(x, axes, keepdims=True)
        xc = x - mu
        var = mean(xc * xc, axes, keepdims=True)
        xhat = xc / sqrt(var + eps)
        if running_mean is not None:
            v = var.data.reshape(c)
            if n > 1: v = v * n / (n - 1)
            running_mean *= (1. - momentum)
            running_mean += momentum * mu.data.reshape(c)
            running_var *= (1. - momentum)
            running_var += momentum * v
    else:
        xhat = (x - running_mean.reshape(bshape)) / numpy.sqrt(running_var.reshape(bshape) + eps)
    return xhat * reshape(gamma, bshape) + reshape(beta, bshape)
# batchnorm()

def softmax(x, axis=-1):
    x = as_tensor(x)
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError("softmax axis {} invalid for shape {}".format(axis, x.shape))
    z = numpy.exp(x.data - x.data.max(axis=axis, keepdims=True))
    y = z / z.sum(axis=axis, keepdims=True)
    def backward_fn(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)
    return make_result(y, (x,), backward_fn, "softmax")
# softmax()

def log_softmax(x, axis=-1):
    x = as_tensor(x)
    s = x.data - x.data.max(axis=axis, keepdims=True)
    lse = numpy.log(numpy.exp(s).sum(axis=axis, keepdims=True))
    y = s - lse
    def backward_fn(g):
        return (g - numpy.exp(y) * g.sum(axis=axis, keepdims=True),)
    return make_result(y, (x,), backward_fn, "log_softmax")
# log_softmax()

def l2_normalize(x, axis=-1, eps=1e-12):
    """x / max(||x||, eps) along axis"""
    x = as_tensor(x)
    n = numpy.sqrt((x.data**2).sum(axis=axis, keepdims=True))
    d = numpy.maximum(n, eps)
    y = x.data / d
    def backward_fn(g):
        proj = (g * y).sum(axis=axis, keepdims=True)
        return (numpy.where(n > eps, (g - y * proj) / d, g / d),)
    return make_result(y, (x,), backward_fn, "l2_normalize")
# l2_normalize()

def cross_entropy(logits, labels):
    """mean over the batch of -log softmax(logits)[label]"""
    logits = as_tensor(logits)
    labels = numpy.asarray(labels, dtype=int)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise DimensionError("cross_entropy needs logits [B, C] and labels [B], got {} and {}".format(logits.shape, labels.shape))
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise PreconditionError("label out of range [0, {})".format(logits.shape[1]))
    lsm = log_softmax(logits, axis=-1)
    return -mean(lsm[numpy.arange(len(labels)), labels])
# cross_entropy()
