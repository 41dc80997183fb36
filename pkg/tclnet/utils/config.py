"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import os
import hashlib
import dataclasses
from typing import List
from tclnet.utils import logger
from tclnet.autodiff import PreconditionError

LOSS_MODES = ("ce", "ce+triplet")
SEED_ENV = "TCL_SEED"

def parse_int_list(s):
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    s = s.strip()
    return [int(x) for x in s.split(",")] if s else []
# parse_int_list()

def parse_bool(s):
    if isinstance(s, bool):
        return s
    v = s.strip().lower()
    if v in ("true", "yes", "on", "1"): return True
    if v in ("false", "no", "off", "0"): return False
    raise ValueError("not a boolean: {}".format(s))
# parse_bool()

@dataclasses.dataclass
class RunConfig:
    # run
    seed: int = 0
    output_dir: str = "tclnet_out"
    corpus_dir: str = "corpus"
    # synthetic corpus
    num_ids: int = 16
    clips_per_id: int = 6
    n_gallery: int = 3
    n_query: int = 2
    frames_per_clip: int = 8
    frame_height: int = 64
    frame_width: int = 32
    channels: int = 3
    noise_sigma: float = 0.05
    occlusion_prob: float = 0.15
    share_group: int = 2
    pose_shift: int = 2
    jitter: int = 1
    # backbone
    stage_channels: List[int] = dataclasses.field(default_factory=lambda: [16, 32, 64])
    blocks_per_stage: int = 2
    head_channels: int = 128
    # temporal saliency erasing
    n_learners: int = 2
    seo: bool = True
    erase_height: int = 3
    erase_width: int = 0 # 0: full feature-map width
    stride_h: int = 1
    stride_w: int = 1
    # temporal saliency boosting
    tsb: bool = True
    tsb_stages: List[int] = dataclasses.field(default_factory=lambda: [2])
    temperature: float = 16.0
    # training
    epochs: int = 150
    lr: float = 3e-4
    lr_decay: float = 0.1
    lr_step: int = 40
    beta1: float = 0.9
    beta2: float = 0.999
    ids_per_batch: int = 8
    clips_per_identity: int = 4
    train_frames: int = 4
    loss: str = "ce"
    margin: float = 0.3
    flip: bool = True
    eval_every: int = 1
    # evaluation
    pad: bool = False
    # ablation
    ablate_seeds: int = 5
    arms: str = "base,tse_wo_seo,tse,tclnet"
    sweep: str = ""

    @property
    def batch_size(self):
        return self.ids_per_batch * self.clips_per_identity

    def validate(self):
        errors = []
        if self.n_learners < 1: errors.append("n_learners must be >= 1")
        if self.train_frames % self.n_learners != 0:
            errors.append("train_frames ({}) must be divisible by n_learners ({})".format(self.train_frames, self.n_learners))
        if self.train_frames > self.frames_per_clip:
            errors.append("train_frames exceeds frames_per_clip")
        if self.loss not in LOSS_MODES: errors.append("loss must be one of {}".format(", ".join(LOSS_MODES)))
        if self.temperature <= 0: errors.append("temperature must be positive")
        if self.erase_height < 1 or self.erase_width < 0: errors.append("invalid erased block size")
        if self.stride_h < 1 or self.stride_w < 1: errors.append("strides must be >= 1")
        if len(self.stage_channels) != 3: errors.append("stage_channels needs three stages")
        if any(s not in (1, 2, 3) for s in self.tsb_stages): errors.append("tsb_stages must be within 1..3")
        if self.head_channels < self.stage_channels[-1]: errors.append("head_channels must be >= last stage channels")
        if self.n_gallery + self.n_query > self.clips_per_id: errors.append("n_gallery + n_query exceeds clips_per_id")
        if self.ids_per_batch < 1 or self.clips_per_identity < 1: errors.append("invalid P x K sampling")
        if errors:
            raise PreconditionError("invalid configuration: " + "; ".join(errors))
        return self
    # validate()

    def replace(self, **kwds):
        return dataclasses.replace(self, **kwds)

    def to_text(self):
        lines = ["# tclnet run configuration"]
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                s = "true" if v else "false"
            elif isinstance(v, list):
                s = ",".join(str(x) for x in v)
            elif isinstance(v, float):
                s = repr(v)
            else:
                s = str(v)
            lines.append("{} = {}".format(f.name, s))
        return "\n".join(lines) + "\n"
    # to_text()

    @classmethod
    def from_text(cls, text):
        kinds = {f.name: type(getattr(cls(), f.name)) for f in dataclasses.fields(cls)}
        kwds = {}
        for i, l in enumerate(text.splitlines()):
            l = l.strip()
            if not l or l.startswith("#"):
                continue
            if "=" not in l:
                raise PreconditionError("config line {}: expected 'key = value': {}".format(i+1, l))
            k, v = [x.strip() for x in l.split("=", 1)]
            if k not in kinds:
                raise PreconditionError("config line {}: unknown key {}".format(i+1, k))
            kwds[k] = coerce(kinds[k], v)
        return cls(**kwds)
    # from_text()

    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def write(self, filename):
        with open(filename, "w") as ofs:
            ofs.write(self.to_text())
        logger.writeln("Resolved configuration written: {}".format(filename))

    @classmethod
    def read(cls, filename):
        logger.writeln("Reading configuration: {}".format(filename))
        with open(filename) as f:
            return cls.from_text(f.read())
# class RunConfig

def coerce(kind, v):
    if kind is bool: return parse_bool(v)
    if kind is list: return parse_int_list(v)
    if kind is int: return int(v)
    if kind is float: return float(v)
    return v
# coerce()

def add_config_arguments(parser):
    """one flag per RunConfig field; only flags given on the command line override"""
    parser.add_argument("--config", help="Base configuration file (key = value lines)")
    group = parser.add_argument_group("run configuration")
    defaults = RunConfig()
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        v = getattr(defaults, f.name)
        if isinstance(v, bool):
            group.add_argument(flag, dest=f.name, action="store_const", const=True, default=None,
                               help="enable {} (default: {})".format(f.name, v))
            group.add_argument("--no-" + f.name.replace("_", "-"), dest=f.name, action="store_const",
                               const=False, default=None, help="disable {}".format(f.name))
        elif isinstance(v, list):
            group.add_argument(flag, dest=f.name, type=parse_int_list, default=None, metavar="A,B,..",
                               help="default: {}".format(",".join(map(str, v))))
        elif f.name == "loss":
            group.add_argument(flag, dest=f.name, choices=LOSS_MODES, default=None,
                               help="default: {}".format(v))
        else:
            group.add_argument(flag, dest=f.name, type=type(v), default=None,
                               help="default: {}".format(v))
# add_config_arguments()

def config_from_args(args, base=None):
    """--config file (else base, e.g. a checkpoint configuration) < flags < TCL_SEED"""
    if getattr(args, "config", None):
        cfg = RunConfig.read(args.config)
    else:
        cfg = base if base is not None else RunConfig()
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(RunConfig)
                 if getattr(args, f.name, None) is not None}
    cfg = cfg.replace(**overrides)
    return apply_env(cfg).validate()
# config_from_args()

def apply_env(cfg):
    seed = os.environ.get(SEED_ENV)
    if seed:
        logger.writeln("{} overrides seed: {}".format(SEED_ENV, seed))
        cfg = cfg.replace(seed=int(seed))
    return cfg
# apply_env()
