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
from tclnet.reid import synth

def add_arguments(parser):
    parser.description = "Generate the synthetic video re-identification corpus"
    add_config_arguments(parser)
# add_arguments()

def parse_args(arg_list):
    parser = argparse.ArgumentParser()
    add_arguments(parser)
    return parser.parse_args(arg_list)
# parse_args()

def main(args):
    cfg = config_from_args(args)
    spec = synth.SynthSpec.from_run_config(cfg).validate()
    logger.writeln("Generating {} identities x {} clips x {} frames ({}x{}, seed {})".format(
        spec.num_ids, spec.clips_per_id, spec.frames_per_clip, spec.height, spec.width, cfg.seed))
    clips = synth.generate(spec, cfg.seed)
    synth.write_corpus(clips, cfg.corpus_dir)
    cfg.write(os.path.join(cfg.corpus_dir, "config.txt"))
    logger.table(synth.corpus_summary(clips), title="Corpus summary")
    logger.writeln("manifest sha256: {}".format(fileio.file_digest(os.path.join(cfg.corpus_dir, "manifest.csv"))))
# main()

if __name__ == "__main__":
    import sys
    args = parse_args(sys.argv[1:])
    main(args)
