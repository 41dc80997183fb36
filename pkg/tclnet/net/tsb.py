"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.

Temporal saliency boosting: every frame's map is a query against the local
descriptors of the other frames of its clip.
"""
from __future__ import absolute_import, division, print_function, generators
import dataclasses
import numpy
from tclnet.autodiff import PreconditionError, DimensionError
from tclnet.autodiff import functions as F
from tclnet.net.layers import Module, BatchNorm

NORM_EPS = 1e-12

@dataclasses.dataclass
class TsbConfig:
    temperature: float = 16.0
    stage: int = 2

    @classmethod
    def from_run_config(cls, cfg):
        return cls(temperature=cfg.temperature,
                   stage=cfg.tsb_stages[0] if cfg.tsb_stages else 2).validate()

    def validate(self):
        if not self.temperature > 0:
            raise PreconditionError("temperature must be positive, got {}".format(self.temperature))
        if self.stage not in (1, 2, 3):
            raise PreconditionError("TSB stage must be within 1..3")
        return self
# class TsbConfig

def attention_weights(q, M, tau):
    """q: [D], M: [S, D] -> softmax over rows of tau * cos(q, M_i)"""
    q, M = F.as_tensor(q), F.as_tensor(M)
    if M.ndim != 2 or M.shape[0] < 1 or q.shape != (M.shape[1],):
        raise DimensionError("attention_weights needs q [D] and M [S>=1, D], got {} and {}".format(q.shape, M.shape))
    qn = F.l2_normalize(q, axis=-1, eps=NORM_EPS)
    Mn = F.l2_normalize(M, axis=-1, eps=NORM_EPS)
    return F.softmax(F.matmul(Mn, qn) * tau, axis=-1)
# attention_weights()

def aggregate(q, M, tau):
    """o = M^T A; returns (o, A)"""
    A = attention_weights(q, M, tau)
    return F.matmul(A, M), A

def local_descriptors(maps):
    """[S, D, H, W] -> [S*H*W, D]"""
    s, d, h, w = maps.shape
    return F.reshape(F.transpose(maps, (0, 2, 3, 1)), (s * h * w, d))

def propagate(Q, M, bn, tau):
    """
    Q: [D, H, W] query map; M: [S, D, H, W] memory maps.
    E = BN(o broadcast over H x W) + Q with q = GAP(Q). Empty memory returns Q.
    """
    Q, M = F.as_tensor(Q), F.as_tensor(M)
    if M.shape[0] == 0:
        return Q
    if M.ndim != 4 or M.shape[1:] != Q.shape:
        raise DimensionError("propagate needs Q [D,H,W] and M [S,D,H,W] of the same map shape, got {} and {}".format(Q.shape, M.shape))
    d, h, w = Q.shape
    o, _ = aggregate(F.global_avg_pool(Q), local_descriptors(M), tau)
    omap = F.broadcast_to(F.reshape(o, (1, d, 1, 1)), (1, d, h, w))
    return bn(omap)[0] + Q
# propagate()

class TSB(Module):
    """
    Batched form of propagate over clips [B, T, D, H, W]. Queries come from the
    input maps of all frames; each frame's own descriptors are masked out of its
    memory. BN runs over the B*T broadcast o maps. The BN scale starts at zero,
    so a fresh module is the identity.
    """
    def __init__(self, channels, cfg):
        self.temperature = cfg.temperature
        self.bn = BatchNorm(channels, gamma_init=0.)
        self.last_attention = None

    def forward(self, X):
        if X.ndim != 5:
            raise DimensionError("TSB needs [B, T, D, H, W], got {}".format(X.shape))
        b, t, d, h, w = X.shape
        if t < 2:
            self.last_attention = None
            return X
        hw = h * w
        q = F.l2_normalize(F.global_avg_pool(X), axis=-1, eps=NORM_EPS) # [B, T, D]
        mem = F.reshape(F.transpose(F.reshape(X, (b, t, d, hw)), (0, 1, 3, 2)), (b, t * hw, d))
        memn = F.l2_normalize(mem, axis=-1, eps=NORM_EPS)
        logits = F.matmul(q, F.transpose(memn, (0, 2, 1))) * self.temperature # [B, T, T*HW]
        own = numpy.repeat(numpy.eye(t, dtype=bool), hw, axis=1)
        A = F.softmax(logits + numpy.where(own, F.MASK_VALUE, 0.), axis=-1)
        self.last_attention = A.data.reshape(b, t, t, h, w)
        o = F.matmul(A, mem) # [B, T, D]
        omap = F.broadcast_to(F.reshape(o, (b * t, d, 1, 1)), (b * t, d, h, w))
        return F.reshape(self.bn(omap), X.shape) + X
    # forward()
# class TSB

def tsb_forward(clip_maps, tsb):
    """list of T [D, H, W] maps -> list of T enhanced maps"""
    if not clip_maps:
        raise PreconditionError("tsb_forward needs at least one frame")
    X = F.stack(clip_maps)
    out = tsb(F.reshape(X, (1,) + X.shape))
    return [out[0, i] for i in range(len(clip_maps))]
# tsb_forward()
