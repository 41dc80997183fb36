"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import argparse
from tclnet.utils import logger
from tclnet.utils.config import add_config_arguments, config_from_args
from tclnet.reid import synth
from tclnet.train.trainer import Trainer

def add_arguments(parser):
    parser.description = "Train TCLNet on a corpus written by generate"
    add_config_arguments(parser)
# add_arguments()

def parse_args(arg_list):
    parser = argparse.ArgumentParser()
    add_arguments(parser)
    return parser.parse_args(arg_list)
# parse_args()

def main(args):
    cfg = config_from_args(args)
    logger.writeln("Configuration digest: {}".format(cfg.digest()))
    clips = synth.read_corpus(cfg.corpus_dir)
    trainer = Trainer(cfg, clips)
    trainer.run()
    logger.writeln("Checkpoint: {}".format(trainer.checkpoint_file))
# main()

if __name__ == "__main__":
    import sys
    args = parse_args(sys.argv[1:])
    main(args)
