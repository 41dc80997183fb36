"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.

Component and hyperparameter studies: every arm is trained and evaluated
with several seeds on one fixed corpus.
"""
from __future__ import absolute_import, division, print_function, generators
import os
import math
import argparse
import dataclasses
import pandas
from tclnet.utils import logger
from tclnet.utils import fileio
from tclnet.utils.config import RunConfig, add_config_arguments, config_from_args, coerce
from tclnet.net.layers import count_parameters
from tclnet.reid import synth
from tclnet.train.trainer import Trainer

ARMS = dict(base=dict(n_learners=1, tsb=False, seo=False),
            tsb_only=dict(n_learners=1, tsb=True, seo=False),
            tse_wo_seo=dict(tsb=False, seo=False),
            tse=dict(tsb=False, seo=True),
            tclnet=dict(tsb=True, seo=True),
            tclnet_tri=dict(tsb=True, seo=True, loss="ce+triplet"))

# (better arm, worse arm, rule)
DIRECTIONAL_CHECKS = (("tse", "tse_wo_seo", "wins"),
                      ("tse", "base", "wins"),
                      ("tclnet", "tse", "mean"))

def add_arguments(parser):
    parser.description = "Run ablation arms ({}) over several seeds".format(", ".join(ARMS))
    add_config_arguments(parser)
# add_arguments()

def parse_args(arg_list):
    parser = argparse.ArgumentParser()
    add_arguments(parser)
    return parser.parse_args(arg_list)
# parse_args()

def parse_arms(s):
    arms = [a.strip() for a in s.split(",") if a.strip()]
    bad = [a for a in arms if a not in ARMS]
    if not arms or bad:
        raise SystemExit("ERROR: unknown arm(s) {}; choose from {}".format(bad, ", ".join(ARMS)))
    return arms
# parse_arms()

def parse_sweep(s):
    """'field=v1,v2,...' -> (field, [values]); list fields join entries with '+' (tsb_stages=1,2,2+3)"""
    if not s:
        return None, [None]
    if "=" not in s:
        raise SystemExit("ERROR: --sweep needs field=v1,v2,...")
    field, vals = [x.strip() for x in s.split("=", 1)]
    kinds = {f.name: type(getattr(RunConfig(), f.name)) for f in dataclasses.fields(RunConfig)}
    if field not in kinds:
        raise SystemExit("ERROR: unknown sweep field {}".format(field))
    return field, [coerce(kinds[field], v.replace("+", ",")) for v in vals.split(",")]
# parse_sweep()

def value_label(v):
    if isinstance(v, list):
        return "+".join(map(str, v))
    return str(v)

def run_dir(cfg, arm, field, value, seed):
    sub = arm if field is None else "{}_{}{}".format(arm, field, value_label(value))
    return os.path.join(cfg.output_dir, sub, "seed{}".format(seed))

def ensure_corpus(cfg):
    if not os.path.exists(os.path.join(cfg.corpus_dir, "manifest.csv")):
        logger.writeln("No corpus in {}; generating with seed {}".format(cfg.corpus_dir, cfg.seed))
        synth.write_corpus(synth.generate(synth.SynthSpec.from_run_config(cfg), cfg.seed), cfg.corpus_dir)
    return synth.read_corpus(cfg.corpus_dir)
# ensure_corpus()

def directional_checks(df):
    """per-seed win counts and mean comparisons between arms; rows for the arms present"""
    rows = []
    table = df.pivot_table(index="seed", columns="arm", values="mAP")
    for better, worse, rule in DIRECTIONAL_CHECKS:
        if better not in table or worse not in table:
            continue
        n = len(table)
        if rule == "wins":
            wins = int((table[better] > table[worse]).sum())
            need = math.ceil(0.8 * n)
            rows.append(dict(check="{} > {}".format(better, worse), result="{}/{} seeds".format(wins, n),
                             passed=wins >= need))
        else:
            mb, mw = table[better].mean(), table[worse].mean()
            rows.append(dict(check="mean {} >= mean {}".format(better, worse),
                             result="{:.4f} vs {:.4f}".format(mb, mw), passed=bool(mb >= mw)))
    return pandas.DataFrame(rows, columns=["check", "result", "passed"])
# directional_checks()

def run_ablation(cfg, clips):
    arms = parse_arms(cfg.arms)
    field, values = parse_sweep(cfg.sweep)
    rows = []
    for value in values:
        for arm in arms:
            for s in range(cfg.ablate_seeds):
                seed = cfg.seed + s
                over = dict(ARMS[arm])
                if field is not None: over[field] = value
                rcfg = cfg.replace(**over).replace(seed=seed, output_dir=run_dir(cfg, arm, field, value, seed))
                if rcfg.train_frames % rcfg.n_learners:
                    # segments need train_frames divisible by N
                    rcfg = rcfg.replace(train_frames=math.ceil(rcfg.train_frames / rcfg.n_learners) * rcfg.n_learners)
                rcfg.validate()
                logger.writeln("\n== arm {}{} seed {} ==".format(arm, "" if field is None else " {}={}".format(field, value_label(value)), seed))
                trainer = Trainer(rcfg, clips)
                report = trainer.run()
                rows.append(dict(arm=arm, sweep=field or "", value=value_label(value) if field else "",
                                 seed=seed, mAP=report.mAP if report else float("nan"),
                                 top1=report.top(1) if report else float("nan"),
                                 top5=report.top(5) if report else float("nan"),
                                 params=count_parameters(trainer.model), config_digest=rcfg.digest()[:12]))
    return pandas.DataFrame(rows)
# run_ablation()

def main(args):
    cfg = config_from_args(args)
    clips = ensure_corpus(cfg)
    fileio.makedirs(cfg.output_dir)
    cfg.write(os.path.join(cfg.output_dir, "config.txt"))
    df = run_ablation(cfg, clips)
    df.to_csv(os.path.join(cfg.output_dir, "ablation.csv"), index=False, float_format="%.6f")
    summary = df.groupby(["sweep", "value", "arm"], sort=False).agg(mAP=("mAP", "mean"), mAP_sd=("mAP", "std"),
                                                                     top1=("top1", "mean"), params=("params", "first"))
    with open(os.path.join(cfg.output_dir, "ablation_summary.txt"), "w") as ofs:
        logger.table(summary, title="\nAblation summary (mean over {} seeds)".format(cfg.ablate_seeds), fs=ofs,
                     float_format="{:.4f}".format)
        for value, sub in df.groupby("value", sort=False):
            checks = directional_checks(sub)
            if len(checks) == 0: continue
            title = "\nDirectional checks{}".format(" ({}={})".format(cfg.sweep.split("=")[0], value) if value else "")
            logger.table(checks, title=title, fs=ofs, index=False)
# main()

if __name__ == "__main__":
    import sys
    args = parse_args(sys.argv[1:])
    main(args)
