"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.

Temporal saliency erasing. Frame n of a segment is erased where the features of
frames 1..n-1 respond most, so that learner n has to find other parts.
Maps are channel-first [..., D, H, W].
"""
from __future__ import absolute_import, division, print_function, generators
import dataclasses
from typing import List, Optional
import numpy
from numpy.lib.stride_tricks import sliding_window_view
from tclnet.autodiff import Tensor, PreconditionError, DimensionError
from tclnet.autodiff import functions as F
from tclnet.net.layers import Module

@dataclasses.dataclass
class SeoConfig:
    n_learners: int = 2
    erase_height: int = 3
    erase_width: Optional[int] = None # None: full map width
    stride_h: int = 1
    stride_w: int = 1
    enabled: bool = True

    @classmethod
    def from_run_config(cls, cfg):
        return cls(n_learners=cfg.n_learners, erase_height=cfg.erase_height,
                   erase_width=cfg.erase_width or None, stride_h=cfg.stride_h,
                   stride_w=cfg.stride_w, enabled=cfg.seo).validate()

    def validate(self):
        if self.n_learners < 1:
            raise PreconditionError("n_learners must be >= 1")
        if self.erase_height < 1 or (self.erase_width is not None and self.erase_width < 1):
            raise PreconditionError("erased block must be at least 1x1")
        if self.stride_h < 1 or self.stride_w < 1:
            raise PreconditionError("strides must be >= 1")
        return self
    # validate()

    def block_size(self, h, w):
        bh = self.erase_height
        bw = w if self.erase_width is None else self.erase_width
        if bh > h or bw > w:
            raise PreconditionError("erased block {}x{} does not fit in a {}x{} map".format(bh, bw, h, w))
        return bh, bw
    # block_size()
# class SeoConfig

def n_positions(h, w, cfg):
    bh, bw = cfg.block_size(h, w)
    return ((h - bh) // cfg.stride_h + 1) * ((w - bw) // cfg.stride_w + 1)

def block_scores(R, cfg):
    """sums of R over every candidate block; [..., H, W] -> [..., n_rows, n_cols]"""
    R = numpy.asarray(R.data if isinstance(R, Tensor) else R, dtype=numpy.float64)
    bh, bw = cfg.block_size(*R.shape[-2:])
    win = sliding_window_view(R, (bh, bw), axis=(-2, -1))
    return win.sum(axis=(-2, -1))[..., ::cfg.stride_h, ::cfg.stride_w]
# block_scores()

def select_block(R, cfg):
    """top-left corner of the highest-sum block; ties go to the first in row-major order"""
    scores = block_scores(R, cfg)
    i, j = numpy.unravel_index(numpy.argmax(scores), scores.shape)
    return i * cfg.stride_h, j * cfg.stride_w

def block_binarize(R, cfg):
    """
    R: [H, W] or [M, H, W]. Returns float {0,1} masks of the same shape with one
    zero block per map. The mask is a constant for differentiation.
    """
    R = numpy.asarray(R.data if isinstance(R, Tensor) else R, dtype=numpy.float64)
    if R.ndim == 2:
        return block_binarize(R[None], cfg)[0]
    if R.ndim != 3:
        raise DimensionError("block_binarize needs [H, W] or [M, H, W], got {}".format(R.shape))
    h, w = R.shape[-2:]
    bh, bw = cfg.block_size(h, w)
    scores = block_scores(R, cfg).reshape(len(R), -1)
    ncols = (w - bw) // cfg.stride_w + 1
    best = numpy.argmax(scores, axis=1)
    mask = numpy.ones_like(R)
    for m, k in enumerate(best):
        i, j = (k // ncols) * cfg.stride_h, (k % ncols) * cfg.stride_w
        mask[m, i:i+bh, j:j+bw] = 0.
    return mask
# block_binarize()

def correlation_map(Fn, fk, w):
    """
    R(i,j) = <F_n(i,j), w^T f_k>.
    Fn: [..., D, H, W]; fk: [..., D_1]; w: [D_1, D] -> [..., H, W]
    """
    Fn, fk, w = F.as_tensor(Fn), F.as_tensor(fk), F.as_tensor(w)
    if w.ndim != 2 or Fn.ndim < 3 or Fn.shape[-3] != w.shape[1] or fk.shape[-1] != w.shape[0]:
        raise DimensionError("correlation_map channel mismatch: F {} f {} w {}".format(Fn.shape, fk.shape, w.shape))
    if Fn.shape[:-3] != fk.shape[:-1]:
        raise DimensionError("correlation_map batch mismatch: F {} f {}".format(Fn.shape, fk.shape))
    p = F.matmul(fk, w) # [..., D]
    return F.sum(Fn * F.reshape(p, p.shape + (1, 1)), axis=-3)
# correlation_map()

def gate_map(Rs, B):
    """softmax over all H*W positions of prod(Rs), times the fused mask B (constant)"""
    if not Rs:
        raise PreconditionError("gate_map needs at least one correlation map")
    Rs = [F.as_tensor(r) for r in Rs]
    shapes = set(r.shape for r in Rs)
    B = numpy.asarray(B, dtype=numpy.float64)
    if len(shapes) > 1 or B.shape != Rs[0].shape:
        raise DimensionError("gate_map shapes differ: maps {} mask {}".format(sorted(shapes), B.shape))
    prod = Rs[0]
    for r in Rs[1:]:
        prod = prod * r
    shape = prod.shape
    flat = F.reshape(prod, shape[:-2] + (shape[-2] * shape[-1],))
    return F.reshape(F.softmax(flat, axis=-1), shape) * B
# gate_map()

def erase(Fn, G):
    """F_bar(i,j) = H*W * G(i,j) * F_n(i,j) over all channels"""
    Fn, G = F.as_tensor(Fn), F.as_tensor(G)
    if Fn.ndim < 3 or Fn.shape[-2:] != G.shape[-2:] or Fn.shape[:-3] != G.shape[:-2]:
        raise DimensionError("erase needs F [..., D, H, W] and G [..., H, W], got {} and {}".format(Fn.shape, G.shape))
    hw = Fn.shape[-2] * Fn.shape[-1]
    return Fn * F.reshape(G * hw, G.shape[:-2] + (1,) + G.shape[-2:])
# erase()

@dataclasses.dataclass
class SeoArtifacts:
    """
    Intermediates for frame `frame` (0-based) of a segment. Arrays may carry a
    leading batch axis; select(m) takes one sample. correlations[k] and masks[k]
    are against frame k < frame; frame 0 has none and a uniform gate.
    """
    frame: int
    correlations: List[numpy.ndarray]
    masks: List[numpy.ndarray]
    fused_mask: numpy.ndarray
    gate: numpy.ndarray
    erased: numpy.ndarray

    def select(self, m):
        return SeoArtifacts(frame=self.frame,
                            correlations=[r[m] for r in self.correlations],
                            masks=[b[m] for b in self.masks],
                            fused_mask=self.fused_mask[m], gate=self.gate[m], erased=self.erased[m])
# class SeoArtifacts

def seo_segment(F_seg, learners, w, cfg):
    """
    F_seg: [M, N, D, H, W] (M segments of N frames).
    Returns (list of N features [M, D_1], list of N SeoArtifacts).
    """
    F_seg = F.as_tensor(F_seg)
    if F_seg.ndim != 5:
        raise DimensionError("segment batch needs [M, N, D, H, W], got {}".format(F_seg.shape))
    m, n_frames, _, h, w_ = F_seg.shape
    if n_frames != len(learners):
        raise PreconditionError("segment length {} != number of learners {}".format(n_frames, len(learners)))
    feats, artifacts = [], []
    for n in range(n_frames):
        Fn = F_seg[:, n]
        if n == 0 or not cfg.enabled:
            # no previous features: uniform gate with an all-ones mask, i.e. F unchanged
            Rs, masks = [], []
            fused = numpy.ones((m, h, w_))
            gate = numpy.full((m, h, w_), 1. / (h * w_))
            Fbar = Fn
        else:
            Rs = [correlation_map(Fn, feats[k], w) for k in range(n)]
            masks = [block_binarize(r, cfg) for r in Rs]
            fused = numpy.prod(masks, axis=0)
            G = gate_map(Rs, fused)
            Fbar = erase(Fn, G)
            gate = G.data
        feats.append(F.global_avg_pool(learners(n, Fbar)))
        artifacts.append(SeoArtifacts(frame=n, correlations=[r.data for r in Rs], masks=masks,
                                      fused_mask=fused, gate=gate, erased=Fbar.data))
    return feats, artifacts
# seo_segment()

class TSE(Module):
    """owns the single projection w shared by every (n, k) pair"""
    def __init__(self, channels, head_channels, cfg, rng):
        self.cfg = cfg
        b = numpy.sqrt(1. / head_channels)
        self.w = Tensor.param(rng.uniform(-b, b, size=(head_channels, channels)))

    def forward(self, F_seg, learners):
        return seo_segment(F_seg, learners, self.w, self.cfg)
# class TSE

def tse_forward(segment, learners, w, cfg):
    """segment: list of N [D, H, W] maps -> (list of N [D_1] features, list of N SeoArtifacts)"""
    if len(segment) != len(learners):
        raise PreconditionError("segment length {} != number of learners {}".format(len(segment), len(learners)))
    X = F.stack(segment)
    feats, arts = seo_segment(F.reshape(X, (1,) + X.shape), learners, w, cfg)
    return [f[0] for f in feats], [a.select(0) for a in arts]
# tse_forward()
