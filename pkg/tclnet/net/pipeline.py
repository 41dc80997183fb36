"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import dataclasses
from typing import List
import numpy
from tclnet.utils import logger
from tclnet.utils import fileio
from tclnet.utils.config import RunConfig
from tclnet.autodiff import Tensor, PreconditionError, DimensionError, no_grad
from tclnet.autodiff import functions as F
from tclnet.net.layers import Module, Linear, count_parameters
from tclnet.net.backbone import Backbone, BackboneConfig, make_learners
from tclnet.net.tse import TSE, SeoConfig
from tclnet.net.tsb import TsbConfig

def n_segments(t, n):
    if t % n != 0:
        raise PreconditionError("clip length {} is not divisible by N={}; pad or drop frames first".format(t, n))
    return t // n

def segment_divide(maps, n):
    """T maps -> T/N consecutive segments of N maps"""
    l = n_segments(len(maps), n)
    return [list(maps[i*n:(i+1)*n]) for i in range(l)]

@dataclasses.dataclass
class VideoDescriptor:
    vectors: List[numpy.ndarray] # v_1..v_N

    @property
    def test_vector(self):
        return numpy.concatenate([F.l2_normalize(v).data for v in self.vectors])
# class VideoDescriptor

class TCLNet(Module):
    def __init__(self, backbone_cfg, seo_cfg, tsb_cfg, num_classes, rng):
        self.num_classes = num_classes
        self.backbone = Backbone(backbone_cfg, rng, tsb_cfg)
        self.learners = make_learners(backbone_cfg, seo_cfg.n_learners, rng)
        self.tse = TSE(backbone_cfg.channels, backbone_cfg.head_channels, seo_cfg, rng)
        self.classifiers = [Linear(backbone_cfg.head_channels, num_classes, rng)
                            for _ in range(seo_cfg.n_learners)]
    # __init__()

    @classmethod
    def from_config(cls, cfg, num_classes, rng):
        return cls(BackboneConfig.from_run_config(cfg), SeoConfig.from_run_config(cfg),
                   TsbConfig.from_run_config(cfg), num_classes, rng)

    @property
    def n_learners(self):
        return len(self.learners)

    def forward(self, x, trace=None):
        """
        x: [B, T, C, H, W] with T divisible by N.
        Returns (list of N video vectors [B, D_1], SeoArtifacts of every segment).
        """
        if x.ndim != 5:
            raise DimensionError("model input needs [B, T, C, H, W], got {}".format(x.shape))
        b, t = x.shape[:2]
        n = self.n_learners
        l = n_segments(t, n)
        maps = self.backbone(x, trace=trace)
        seg = F.reshape(maps, (b * l, n) + maps.shape[2:])
        feats, artifacts = self.tse(seg, self.learners)
        # temporal average pooling over the L segments
        vs = [F.mean(F.reshape(f, (b, l, f.shape[-1])), axis=1) for f in feats]
        return vs, artifacts
    # forward()

    def logits(self, vs):
        return [c(v) for c, v in zip(self.classifiers, vs)]
# class TCLNet

def test_vectors(vs):
    """differentiable concatenation of the L2-normalized learner vectors; [B, N*D_1]"""
    return F.concatenate([F.l2_normalize(v, axis=-1) for v in vs], axis=-1)

def ce_heads_loss(vs, labels, classifiers):
    if len(vs) != len(classifiers):
        raise PreconditionError("{} vectors for {} classifiers".format(len(vs), len(classifiers)))
    loss = None
    for v, c in zip(vs, classifiers):
        l = F.cross_entropy(c(v), labels)
        loss = l if loss is None else loss + l
    return loss
# ce_heads_loss()

def batch_hard_triplet_loss(v, labels, margin):
    """
    v: [B, E]. Distances sqrt(max(2 - 2 cos, 1e-12)) between L2-normalized rows.
    Returns (loss, number of anchors with a positive and a negative).
    """
    v = F.as_tensor(v)
    labels = numpy.asarray(labels)
    if v.ndim != 2 or labels.shape != (v.shape[0],):
        raise DimensionError("triplet loss needs v [B, E] and labels [B], got {} and {}".format(v.shape, labels.shape))
    same = labels[:, None] == labels[None, :]
    pos = same & ~numpy.eye(len(labels), dtype=bool)
    neg = ~same
    valid = numpy.where(pos.any(axis=1) & neg.any(axis=1))[0]
    if len(valid) == 0:
        logger.warning("no valid anchor for the triplet loss in this batch")
        return Tensor(0.), 0
    vn = F.l2_normalize(v, axis=-1)
    cos = F.matmul(vn, F.transpose(vn))
    d = F.sqrt(F.clip_min(2. - 2. * cos, 1e-12))
    hardest_pos = F.amax(d + numpy.where(pos, 0., F.MASK_VALUE), axis=1)
    hardest_neg = F.amin(d + numpy.where(neg, 0., -F.MASK_VALUE), axis=1)
    hinge = F.relu(hardest_pos[valid] - hardest_neg[valid] + margin)
    return F.mean(hinge), len(valid)
# batch_hard_triplet_loss()

def clip_frames(frames, n, pad=False):
    """drop trailing frames (or repeat the last one) so that the length is a multiple of n"""
    t = len(frames)
    if t == 0:
        raise PreconditionError("empty clip")
    r = t % n
    if r == 0:
        return frames
    if pad:
        return numpy.concatenate([frames, numpy.repeat(frames[-1:], n - r, axis=0)])
    if t < n:
        raise PreconditionError("clip of {} frames is shorter than N={}; use padding".format(t, n))
    return frames[:t - r]
# clip_frames()

def video_features(clip, model, pad=False):
    frames = clip_frames(numpy.asarray(clip.frames), model.n_learners, pad)
    vs, _ = model(Tensor(frames[None]))
    return VideoDescriptor([v.data[0].copy() for v in vs])
# video_features()

def extract_descriptors(model, clips, pad=False):
    was_training = model.training
    model.eval()
    try:
        with no_grad():
            return [video_features(c, model, pad) for c in clips]
    finally:
        model.train(was_training)
# extract_descriptors()

def baseline_forward(model, clips):
    """backbone without TSB, learner 1, GAP, temporal average pooling"""
    was_training = model.training
    model.eval()
    ret = []
    try:
        with no_grad():
            for c in clips:
                x = Tensor(numpy.asarray(c.frames)[None])
                maps = model.backbone(x, use_tsb=False)
                b, t = maps.shape[:2]
                f = F.global_avg_pool(model.learners(0, F.reshape(maps, (b * t,) + maps.shape[2:])))
                v = F.mean(F.reshape(f, (b, t, f.shape[-1])), axis=1)
                ret.append(VideoDescriptor([v.data[0].copy()]))
    finally:
        model.train(was_training)
    return ret
# baseline_forward()

def describe_model(model):
    logger.writeln("Model: N={} learners, TSB stages={}, SEO {}".format(
        model.n_learners, model.backbone.tsb_stages or "none", "on" if model.tse.cfg.enabled else "off"))
    logger.writeln(" trainable parameters: {}".format(count_parameters(model)))
# describe_model()

def load_model(filename):
    """rebuild the model stored in a checkpoint; returns (model, RunConfig, header)"""
    header, state = fileio.load_checkpoint(filename)
    if "num_classes" not in header:
        raise SystemExit("ERROR: checkpoint without model header: {}".format(filename))
    cfg = RunConfig.from_text(header["config"]).validate()
    model = TCLNet.from_config(cfg, int(header["num_classes"]), numpy.random.default_rng(cfg.seed))
    model.load_state_dict(state)
    logger.writeln(" epoch {} seed {} config {}".format(header["epoch"], header["seed"], header["config_digest"][:12]))
    return model, cfg, header
# load_model()
