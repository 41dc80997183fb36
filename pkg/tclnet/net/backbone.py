"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import hashlib
import dataclasses
from typing import List
from tclnet.autodiff import Tensor, PreconditionError, DimensionError
from tclnet.autodiff import functions as F
from tclnet.net.layers import Module, ConvBlock
from tclnet.net.tsb import TSB, TsbConfig

STAGE_STRIDES = (2, 2, 1) # 64x32 -> 16x8

@dataclasses.dataclass
class BackboneConfig:
    stage_channels: List[int] = dataclasses.field(default_factory=lambda: [16, 32, 64])
    blocks_per_stage: int = 2
    in_channels: int = 3
    frame_height: int = 64
    frame_width: int = 32
    head_channels: int = 128
    tsb_stages: List[int] = dataclasses.field(default_factory=lambda: [2])

    @classmethod
    def from_run_config(cls, cfg):
        return cls(stage_channels=list(cfg.stage_channels), blocks_per_stage=cfg.blocks_per_stage,
                   in_channels=cfg.channels, frame_height=cfg.frame_height, frame_width=cfg.frame_width,
                   head_channels=cfg.head_channels,
                   tsb_stages=list(cfg.tsb_stages) if cfg.tsb else []).validate()

    @property
    def channels(self):
        return self.stage_channels[-1]

    def output_size(self):
        h, w = self.frame_height, self.frame_width
        for s in STAGE_STRIDES:
            h, w = (h - 1) // s + 1, (w - 1) // s + 1
        return h, w
    # output_size()

    def validate(self):
        if len(self.stage_channels) != len(STAGE_STRIDES) or min(self.stage_channels) < 1:
            raise PreconditionError("stage_channels needs {} positive entries".format(len(STAGE_STRIDES)))
        if self.blocks_per_stage < 1:
            raise PreconditionError("blocks_per_stage must be >= 1")
        if self.head_channels < self.channels:
            raise PreconditionError("head channels D_1={} smaller than D={}".format(self.head_channels, self.channels))
        if any(s not in (1, 2, 3) for s in self.tsb_stages):
            raise PreconditionError("TSB stages must be within 1..3: {}".format(self.tsb_stages))
        return self
    # validate()
# class BackboneConfig

def map_hash(t):
    return hashlib.sha256(t.data.tobytes()).hexdigest()[:16]

class Backbone(Module):
    """
    Three conv stages; a TSB module follows every stage listed in tsb_stages and
    sees the whole clip. Input [B, T, C, H, W], output [B, T, D, h, w].
    """
    def __init__(self, cfg, rng, tsb_cfg=None):
        self.cfg = cfg
        self.stages = []
        cin = cfg.in_channels
        for cout, stride in zip(cfg.stage_channels, STAGE_STRIDES):
            stage = Stage([ConvBlock(cin if i == 0 else cout, cout, stride if i == 0 else 1, rng)
                           for i in range(cfg.blocks_per_stage)])
            self.stages.append(stage)
            cin = cout
        tsb_cfg = tsb_cfg or TsbConfig()
        self.tsb_stages = sorted(cfg.tsb_stages)
        self.tsbs = [TSB(cfg.stage_channels[s-1], tsb_cfg) for s in self.tsb_stages]
    # __init__()

    def forward(self, x, trace=None, use_tsb=True):
        if x.ndim != 5:
            raise DimensionError("backbone needs [B, T, C, H, W], got {}".format(x.shape))
        b, t = x.shape[:2]
        h = F.reshape(x, (b * t,) + x.shape[2:])
        for i, stage in enumerate(self.stages):
            h = stage(h)
            if trace is not None: trace.append(("stage{}".format(i+1), map_hash(h)))
            if use_tsb and (i + 1) in self.tsb_stages:
                tsb = self.tsbs[self.tsb_stages.index(i + 1)]
                h = F.reshape(tsb(F.reshape(h, (b, t) + h.shape[1:])), h.shape)
                if trace is not None: trace.append(("tsb{}".format(i+1), map_hash(h)))
        return F.reshape(h, (b, t) + h.shape[1:])
    # forward()
# class Backbone

class Stage(Module):
    def __init__(self, blocks):
        self.blocks = blocks

    def forward(self, x):
        for b in self.blocks:
            x = b(x)
        return x
# class Stage

def backbone_forward(frames, backbone, trace=None):
    """list of T [C, H, W] frames -> list of T [D, h, w] maps"""
    frames = [f if isinstance(f, Tensor) else Tensor(f) for f in frames]
    if not frames:
        raise PreconditionError("backbone_forward needs at least one frame")
    shapes = set(f.shape for f in frames)
    if len(shapes) > 1:
        raise DimensionError("frames have inconsistent shapes: {}".format(sorted(shapes)))
    out = backbone(F.reshape(F.stack(frames), (1, len(frames)) + frames[0].shape), trace=trace)
    return [out[0, i] for i in range(len(frames))]
# backbone_forward()

class LearnerStack(Module):
    """one shared trunk block followed by N private head blocks D -> D_1"""
    def __init__(self, channels, head_channels, n_learners, rng):
        if n_learners < 1:
            raise PreconditionError("need at least one learner")
        self.trunk = ConvBlock(channels, channels, 1, rng)
        self.heads = [ConvBlock(channels, head_channels, 1, rng) for _ in range(n_learners)]

    def __len__(self): return len(self.heads)

    def forward(self, n, x):
        return self.heads[n](self.trunk(x))
# class LearnerStack

def make_learners(cfg, n_learners, rng):
    return LearnerStack(cfg.channels, cfg.head_channels, n_learners, rng)
