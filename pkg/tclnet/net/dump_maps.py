"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import os
import argparse
import numpy
import pandas
from tclnet.utils import logger
from tclnet.utils import fileio
from tclnet.utils.config import add_config_arguments, config_from_args
from tclnet.autodiff import Tensor, no_grad
from tclnet.net import pipeline
from tclnet.reid import synth

def add_arguments(parser):
    parser.description = "Write TSE intermediates (R, B, G, erased maps) and TSB attention of one clip"
    parser.add_argument("--checkpoint", required=True, help="Trained model (.tclk)")
    parser.add_argument("--identity", type=int, default=0, help="Identity of the clip (default: %(default)s)")
    parser.add_argument("--clip", type=int, default=0, help="Clip index within the identity (default: %(default)s)")
    parser.add_argument("--maps-dir", default="maps", help="Output directory below output_dir (default: %(default)s)")
    add_config_arguments(parser)
# add_arguments()

def parse_args(arg_list):
    parser = argparse.ArgumentParser()
    add_arguments(parser)
    return parser.parse_args(arg_list)
# parse_args()

def attention_table(model):
    """TSB probabilities of the last forward pass of a single clip as a DataFrame"""
    rows = []
    for stage, tsb in zip(model.backbone.tsb_stages, model.backbone.tsbs):
        A = tsb.last_attention
        if A is None: continue
        _, t, _, h, w = A.shape
        for q in range(t):
            for s in range(t):
                if s == q: continue
                rr, cc = numpy.meshgrid(numpy.arange(h), numpy.arange(w), indexing="ij")
                rows.append(pandas.DataFrame(dict(stage=stage, query_frame=q, memory_frame=s,
                                                  row=rr.ravel(), col=cc.ravel(), prob=A[0, q, s].ravel())))
    if not rows:
        return pandas.DataFrame(columns=["stage", "query_frame", "memory_frame", "row", "col", "prob"])
    return pandas.concat(rows, ignore_index=True)
# attention_table()

def write_seo_artifacts(artifacts, out_dir):
    """one file per map; returns the index rows"""
    index = []
    def put(seg, frame, kind, k, arr, pgm=True):
        name = "seg{}_frame{}_{}{}".format(seg+1, frame+1, kind, "" if k is None else k+1)
        fileio.save_tensor(arr, os.path.join(out_dir, name + ".tclt"))
        if pgm and arr.ndim == 2:
            fileio.write_pgm(arr, os.path.join(out_dir, name + ".pgm"))
        index.append(dict(segment=seg+1, frame=frame+1, kind=kind,
                          ref_frame=0 if k is None else k+1, file=name + ".tclt"))
    for art in artifacts:
        for seg in range(len(art.gate)):
            a = art.select(seg)
            for k, (r, b) in enumerate(zip(a.correlations, a.masks)):
                put(seg, a.frame, "R", k, r)
                put(seg, a.frame, "B", k, b)
            put(seg, a.frame, "Bfused", None, a.fused_mask)
            put(seg, a.frame, "G", None, a.gate)
            put(seg, a.frame, "erased", None, a.erased, pgm=False)
    return index
# write_seo_artifacts()

def dump_clip_maps(model, frames, out_dir, pad=False):
    """
    frames: [T, C, H, W]. Writes SEO intermediates of every segment, index.txt
    and attention.csv to out_dir. Returns (index DataFrame, attention DataFrame).
    """
    fileio.makedirs(out_dir)
    frames = pipeline.clip_frames(numpy.asarray(frames, dtype=numpy.float64), model.n_learners, pad)
    was_training = model.training
    model.eval()
    try:
        with no_grad():
            _, artifacts = model(Tensor(frames[None]))
    finally:
        model.train(was_training)
    index = pandas.DataFrame(write_seo_artifacts(artifacts, out_dir))
    with open(os.path.join(out_dir, "index.txt"), "w") as ofs:
        ofs.write(index.to_string(index=False) + "\n")
    att = attention_table(model)
    att.to_csv(os.path.join(out_dir, "attention.csv"), index=False, float_format="%.17g")
    logger.writeln("Maps of {} frames written to {} ({} files, {} attention rows)".format(len(frames), out_dir, len(index), len(att)))
    return index, att
# dump_clip_maps()

def main(args):
    model, ckpt_cfg, _ = pipeline.load_model(args.checkpoint)
    cfg = config_from_args(args, base=ckpt_cfg)
    clips = [c for c in synth.read_corpus(cfg.corpus_dir) if c.identity == args.identity]
    if args.clip < 0 or args.clip >= len(clips):
        raise SystemExit("ERROR: identity {} has {} clips, no clip {}".format(args.identity, len(clips), args.clip))
    clip = clips[args.clip]
    if len(clip.frames) < model.n_learners:
        raise SystemExit("ERROR: clip has {} frames, fewer than N={}".format(len(clip.frames), model.n_learners))
    out_dir = os.path.join(cfg.output_dir, args.maps_dir)
    dump_clip_maps(model, clip.frames, out_dir, pad=cfg.pad)
    cfg.write(os.path.join(out_dir, "config.txt"))
# main()

if __name__ == "__main__":
    import sys
    args = parse_args(sys.argv[1:])
    main(args)
