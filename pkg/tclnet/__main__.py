"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import argparse
import sys
import tclnet.reid.generate
import tclnet.reid.run_eval
import tclnet.train.run_train
import tclnet.train.ablate
import tclnet.net.dump_maps
from tclnet.utils import logger
from tclnet.autodiff import PreconditionError
from tclnet.train.trainer import DivergenceError

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

def main():
    parser = argparse.ArgumentParser(prog="tclnet",
                                     description="Temporal complementary learning for video person re-identification: "
                                     "synthetic corpus, training, evaluation and ablations.")
    parser.add_argument("-v", "--version", action="version",
                        version=logger.versions_str())
    parser.add_argument("--logfile", default="tclnet.log")
    subparsers = parser.add_subparsers(dest="command")

    modules = {"generate": tclnet.reid.generate,
               "train": tclnet.train.run_train,
               "eval": tclnet.reid.run_eval,
               "ablate": tclnet.train.ablate,
               "dump-maps": tclnet.net.dump_maps,
               }

    for n in modules:
        p = subparsers.add_parser(n)
        modules[n].add_arguments(p)

    args = parser.parse_args()

    if args.command in modules:
        logger.set_file(args.logfile)
        logger.write_header()
        try:
            modules[args.command].main(args)
        except SystemExit as e:
            if e.code in (None, 0): raise
            logger.exit_failure(str(e), EXIT_USAGE)
        except (OSError, PreconditionError) as e:
            logger.exit_failure("ERROR: {}".format(e), EXIT_USAGE)
        except (DivergenceError, FloatingPointError) as e:
            logger.exit_failure("ERROR: numerical failure: {}".format(e), EXIT_NUMERICAL)
        logger.exit_success()
    else:
        parser.print_help()

# main()

if __name__ == "__main__":
    main()
