"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import os
import argparse
from tclnet.utils import logger
from tclnet.utils import fileio
from tclnet.utils.config import add_config_arguments, config_from_args
from tclnet.net import pipeline
from tclnet.reid import synth
from tclnet.reid import evaluation

SPLITS = ("gallery", "query", "spare")

def add_arguments(parser):
    parser.description = "Retrieval evaluation (mAP/CMC under cosine distance) of a trained checkpoint"
    parser.add_argument("--checkpoint", required=True, help="Trained model (.tclk)")
    parser.add_argument("--query-split", choices=SPLITS, default="query", help="default: %(default)s")
    parser.add_argument("--gallery-split", choices=SPLITS, default="gallery", help="default: %(default)s")
    parser.add_argument("--metrics-prefix", default="eval_metrics",
                        help="Output file prefix below output_dir (default: %(default)s)")
    add_config_arguments(parser)
# add_arguments()

def parse_args(arg_list):
    parser = argparse.ArgumentParser()
    add_arguments(parser)
    return parser.parse_args(arg_list)
# parse_args()

def main(args):
    model, ckpt_cfg, _ = pipeline.load_model(args.checkpoint)
    cfg = config_from_args(args, base=ckpt_cfg)
    clips = synth.read_corpus(cfg.corpus_dir, splits=[args.query_split, args.gallery_split])
    query = [c for c in clips if c.split == args.query_split]
    gallery = [c for c in clips if c.split == args.gallery_split]
    if not query or not gallery:
        raise SystemExit("ERROR: empty split (query: {} clips, gallery: {} clips)".format(len(query), len(gallery)))
    logger.writeln("Query: {} clips ({}), gallery: {} clips ({})".format(len(query), args.query_split,
                                                                      len(gallery), args.gallery_split))
    if any(len(c) % model.n_learners for c in query + gallery):
        logger.warning("clip lengths not divisible by N={}: {}".format(model.n_learners, "padding" if cfg.pad else "truncating"))
    qd = pipeline.extract_descriptors(model, query, pad=cfg.pad)
    gd = pipeline.extract_descriptors(model, gallery, pad=cfg.pad)
    qlabels = [c.identity for c in query]
    report = evaluation.evaluate(qd, gd, qlabels, [c.identity for c in gallery])
    evaluation.log_report(report)
    fileio.makedirs(cfg.output_dir)
    evaluation.write_metrics(report, qlabels, os.path.join(cfg.output_dir, args.metrics_prefix))
    cfg.write(os.path.join(cfg.output_dir, args.metrics_prefix + "_config.txt"))
    return report
# main()

if __name__ == "__main__":
    import sys
    args = parse_args(sys.argv[1:])
    main(args)
