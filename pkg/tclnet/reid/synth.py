"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.

Synthetic video re-identification corpus. A person is four horizontal bands.
Band 2 is bright (the most salient part) and identical within groups of
`share_group` identities; bands 0, 1 and 3 take per-identity levels, so those
groups can only be told apart by the less salient parts.
"""
from __future__ import absolute_import, division, print_function, generators
import os
import hashlib
import dataclasses
import numpy
import pandas
import scipy.ndimage
from tclnet.utils import logger
from tclnet.utils import fileio
from tclnet.autodiff import PreconditionError

N_BANDS = 4
SALIENT_BAND = 2
BACKGROUND = 0.2
OCCLUDER = 0.5

@dataclasses.dataclass
class SynthSpec:
    num_ids: int = 16
    clips_per_id: int = 6
    n_gallery: int = 3
    n_query: int = 2
    frames_per_clip: int = 8
    height: int = 64
    width: int = 32
    channels: int = 3
    noise_sigma: float = 0.05
    occlusion_prob: float = 0.15
    share_group: int = 2
    pose_shift: int = 2
    jitter: int = 1

    @classmethod
    def from_run_config(cls, cfg):
        return cls(num_ids=cfg.num_ids, clips_per_id=cfg.clips_per_id, n_gallery=cfg.n_gallery,
                   n_query=cfg.n_query, frames_per_clip=cfg.frames_per_clip, height=cfg.frame_height,
                   width=cfg.frame_width, channels=cfg.channels, noise_sigma=cfg.noise_sigma,
                   occlusion_prob=cfg.occlusion_prob, share_group=cfg.share_group,
                   pose_shift=cfg.pose_shift, jitter=cfg.jitter)

    def validate(self):
        if self.num_ids < 2:
            raise PreconditionError("at least 2 identities are needed, got {}".format(self.num_ids))
        if self.share_group < 2 or self.share_group > self.num_ids:
            raise PreconditionError("share_group must be within 2..num_ids")
        if self.height < N_BANDS or self.width < 4 or self.frames_per_clip < 1 or self.channels < 1:
            raise PreconditionError("frame size {}x{} / clip length too small".format(self.height, self.width))
        if self.n_gallery + self.n_query > self.clips_per_id:
            raise PreconditionError("n_gallery + n_query exceeds clips_per_id")
        if not 0 <= self.occlusion_prob <= 1 or self.noise_sigma < 0:
            raise PreconditionError("invalid noise or occlusion level")
        return self
    # validate()

    def split_of(self, k):
        if k < self.n_gallery: return "gallery"
        if k < self.n_gallery + self.n_query: return "query"
        return "spare"
# class SynthSpec

@dataclasses.dataclass
class VideoClip:
    frames: numpy.ndarray # [T, C, H, W]
    identity: int
    clip: int = 0
    camera: int = 0
    split: str = "gallery"

    def __len__(self): return len(self.frames)
# class VideoClip

def share_groups(num_ids, share_group):
    # a trailing incomplete group is merged into the previous one
    n_groups = max(1, num_ids // share_group)
    return numpy.minimum(numpy.arange(num_ids) // share_group, n_groups - 1)

def make_palette(spec, rng):
    """[num_ids, 4, C] band colors"""
    colors = numpy.zeros((spec.num_ids, N_BANDS, spec.channels))
    levels = numpy.linspace(0.05, 0.55, spec.num_ids)
    for band in range(N_BANDS):
        if band == SALIENT_BAND: continue
        for c in range(spec.channels):
            colors[:, band, c] = levels[rng.permutation(spec.num_ids)]
    groups = share_groups(spec.num_ids, spec.share_group)
    glevels = numpy.linspace(0.75, 1.0, groups.max() + 1)
    for c in range(spec.channels):
        colors[:, SALIENT_BAND, c] = glevels[rng.permutation(len(glevels))][groups]
    return colors
# make_palette()

def render_person(colors, height, width):
    """colors: [4, C] -> [C, H, W]"""
    c = colors.shape[1]
    img = numpy.full((c, height, width), BACKGROUND)
    margin = width // 8
    band = numpy.minimum(numpy.arange(height) * N_BANDS // height, N_BANDS - 1)
    img[:, :, margin:width-margin] = colors[band].T[:, :, None]
    return img
# render_person()

def shifted(img, dy, dx):
    if dy == 0 and dx == 0:
        return img.copy()
    return scipy.ndimage.shift(img, (0, dy, dx), order=0, mode="nearest")

def generate(spec, seed):
    """list of VideoClip ordered by identity then clip; a pure function of (spec, seed)"""
    spec.validate()
    rng = numpy.random.default_rng(seed)
    palette = make_palette(spec, rng)
    clips = []
    for i in range(spec.num_ids):
        person = render_person(palette[i], spec.height, spec.width)
        for k in range(spec.clips_per_id):
            pose = rng.integers(-spec.pose_shift, spec.pose_shift + 1, size=2)
            frames = numpy.empty((spec.frames_per_clip, spec.channels, spec.height, spec.width))
            for t in range(spec.frames_per_clip):
                dy, dx = pose + rng.integers(-spec.jitter, spec.jitter + 1, size=2)
                img = shifted(person, dy, dx)
                if rng.random() < spec.occlusion_prob:
                    oh = rng.integers(spec.height // 4, spec.height // 2 + 1)
                    ow = rng.integers(spec.width // 2, spec.width + 1)
                    y0 = rng.integers(0, spec.height - oh + 1)
                    x0 = rng.integers(0, spec.width - ow + 1)
                    img[:, y0:y0+oh, x0:x0+ow] = OCCLUDER
                if spec.noise_sigma > 0:
                    img = img + rng.normal(0, spec.noise_sigma, size=img.shape)
                frames[t] = img
            clips.append(VideoClip(frames=frames, identity=i, clip=k, camera=0, split=spec.split_of(k)))
    return clips
# generate()

def clip_digest(clip):
    return hashlib.sha256(numpy.ascontiguousarray(clip.frames, dtype="<f8").tobytes()).hexdigest()

def write_corpus(clips, directory):
    """one directory per identity, one .tclt file per frame, and manifest.csv"""
    fileio.makedirs(directory)
    rows = []
    for c in clips:
        rel = os.path.join("id_{:04d}".format(c.identity), "clip_{:02d}".format(c.clip))
        fileio.makedirs(os.path.join(directory, rel))
        for t, f in enumerate(c.frames):
            fileio.save_tensor(f, os.path.join(directory, rel, "frame_{:03d}.tclt".format(t)))
        rows.append(dict(identity=c.identity, clip=c.clip, split=c.split, frames=len(c.frames),
                         camera=c.camera, path=rel, sha256=clip_digest(c)))
    df = pandas.DataFrame(rows)
    df.to_csv(os.path.join(directory, "manifest.csv"), index=False)
    logger.writeln("Corpus written: {} ({} identities, {} clips)".format(directory, df.identity.nunique(), len(df)))
    return df
# write_corpus()

def read_manifest(directory):
    fn = os.path.join(directory, "manifest.csv")
    if not os.path.exists(fn):
        raise SystemExit("ERROR: no corpus found (missing {}). Run tclnet generate first.".format(fn))
    return pandas.read_csv(fn, dtype=dict(path=str, split=str))

def read_corpus(directory, splits=None):
    df = read_manifest(directory)
    if splits is not None:
        df = df[df.split.isin(splits)]
    clips = []
    for r in df.itertuples():
        frames = numpy.stack([fileio.load_tensor(os.path.join(directory, r.path, "frame_{:03d}.tclt".format(t)))
                              for t in range(r.frames)])
        clips.append(VideoClip(frames=frames, identity=int(r.identity), clip=int(r.clip),
                               camera=int(r.camera), split=r.split))
    logger.writeln("Read {} clips from {}".format(len(clips), directory))
    return clips
# read_corpus()

def corpus_summary(clips):
    df = pandas.DataFrame(dict(identity=[c.identity for c in clips], split=[c.split for c in clips]))
    return df.groupby("split").agg(clips=("identity", "size"), identities=("identity", "nunique"))
