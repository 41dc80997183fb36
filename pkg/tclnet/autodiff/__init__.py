"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
from .tensor import Tensor, ComputationTape, PreconditionError, DimensionError, as_tensor, backward, no_grad
from . import functions
from .functions import (add, sub, mul, div, neg, exp, log, sqrt, relu, clip_min,
                        reshape, transpose, broadcast_to, getitem, stack, concatenate,
                        sum, mean, amax, amin, global_avg_pool, matmul, conv2d,
                        batchnorm, softmax, log_softmax, l2_normalize, cross_entropy)
from .gradcheck import grad_check, numerical_grad
