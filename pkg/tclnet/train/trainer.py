"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import os
import time
import numpy
import pandas
from tclnet import utils
from tclnet.utils import logger
from tclnet.utils import fileio
from tclnet.autodiff import Tensor
from tclnet.net import pipeline
from tclnet.net.layers import count_parameters
from tclnet.net.dump_maps import dump_clip_maps
from tclnet.reid import evaluation
from tclnet.train.optim import Adam, step_decay

METRICS_COLUMNS = ["epoch", "ce_loss", "triplet_loss", "mAP", "top1", "lr"]

class DivergenceError(RuntimeError):
    pass

def sample_batches(labels, n_ids, n_clips, rng):
    """
    P x K identity-balanced batches covering every identity once per epoch.
    When P does not divide the number of identities, the last batch is topped up
    with identities from the start of the epoch's permutation.
    Clips are drawn with replacement only for identities with fewer than K clips.
    """
    labels = numpy.asarray(labels)
    ids = rng.permutation(numpy.unique(labels))
    n_ids = min(n_ids, len(ids))
    batches = []
    for i in range(0, len(ids), n_ids):
        chosen = ids[i:i+n_ids]
        if len(chosen) < n_ids:
            chosen = numpy.concatenate([chosen, ids[:n_ids - len(chosen)]])
        idxs = []
        for ident in chosen:
            pool = numpy.flatnonzero(labels == ident)
            idxs.extend(rng.choice(pool, size=n_clips, replace=len(pool) < n_clips))
        batches.append(numpy.array(idxs))
    return batches
# sample_batches()

class Trainer(object):
    def __init__(self, cfg, clips):
        self.cfg = cfg
        self.train_clips = [c for c in clips if c.split != "query"]
        self.query = [c for c in clips if c.split == "query"]
        self.gallery = [c for c in clips if c.split == "gallery"]
        if not self.train_clips:
            raise SystemExit("ERROR: no training clips")
        self.identities = sorted(set(c.identity for c in self.train_clips))
        label_of = {ident: i for i, ident in enumerate(self.identities)}
        self.labels = numpy.array([label_of[c.identity] for c in self.train_clips])
        self.model = pipeline.TCLNet.from_config(cfg, len(self.identities), numpy.random.default_rng([cfg.seed, 0]))
        self.rng = numpy.random.default_rng([cfg.seed, 1])
        self.optimizer = Adam(self.model.parameters(), cfg.lr, cfg.beta1, cfg.beta2)
        self.history = []
        self.epoch = 0
    # __init__()

    @property
    def metrics_file(self): return os.path.join(self.cfg.output_dir, "metrics.csv")
    @property
    def checkpoint_file(self): return os.path.join(self.cfg.output_dir, "checkpoint.tclk")

    def make_batch(self, idxs):
        """random run of train_frames consecutive frames per clip, horizontally flipped with p=0.5"""
        tf = self.cfg.train_frames
        xs = []
        for i in idxs:
            frames = self.train_clips[i].frames
            if len(frames) < tf:
                raise SystemExit("ERROR: clip with {} frames, {} needed for training".format(len(frames), tf))
            s = self.rng.integers(0, len(frames) - tf + 1)
            x = frames[s:s+tf]
            if self.cfg.flip and self.rng.random() < 0.5:
                x = x[..., ::-1]
            xs.append(x)
        return numpy.stack(xs), self.labels[idxs]
    # make_batch()

    def train_step(self, x, labels, lr):
        vs, _ = self.model(Tensor(x))
        loss = ce = pipeline.ce_heads_loss(vs, labels, self.model.classifiers)
        tri = float("nan")
        if self.cfg.loss == "ce+triplet":
            tl, _ = pipeline.batch_hard_triplet_loss(pipeline.test_vectors(vs), labels, self.cfg.margin)
            loss = loss + tl
            tri = tl.item()
        if not numpy.isfinite(loss.data).all():
            self.dump_divergence(x, labels)
            raise DivergenceError("non-finite loss at epoch {}; diagnostics in {}".format(
                self.epoch, os.path.join(self.cfg.output_dir, "diverged")))
        self.model.zero_grad()
        loss.backward()
        self.optimizer.step(lr)
        return ce.item(), tri
    # train_step()

    def dump_divergence(self, x, labels):
        out = os.path.join(self.cfg.output_dir, "diverged")
        fileio.makedirs(out)
        logger.error("Loss diverged at epoch {}. Writing the last batch to {}".format(self.epoch, out))
        fileio.save_tensor(x, os.path.join(out, "batch.tclt"))
        pandas.DataFrame(dict(label=labels)).to_csv(os.path.join(out, "labels.csv"), index=False)
        self.cfg.write(os.path.join(out, "config.txt"))
        try:
            dump_clip_maps(self.model, x[0], os.path.join(out, "maps"))
        except Exception as e:
            logger.error("map dump failed: {}".format(e))
    # dump_divergence()

    def evaluate(self):
        if not self.query or not self.gallery:
            return None
        qd = pipeline.extract_descriptors(self.model, self.query, pad=self.cfg.pad)
        gd = pipeline.extract_descriptors(self.model, self.gallery, pad=self.cfg.pad)
        return evaluation.evaluate(qd, gd, [c.identity for c in self.query], [c.identity for c in self.gallery])
    # evaluate()

    def run(self):
        cfg = self.cfg
        fileio.makedirs(cfg.output_dir)
        cfg.write(os.path.join(cfg.output_dir, "config.txt"))
        pipeline.describe_model(self.model)
        logger.writeln(" training clips: {} identities: {} batch: {}x{} clips x {} frames".format(
            len(self.train_clips), len(self.identities), cfg.ids_per_batch, cfg.clips_per_identity, cfg.train_frames))
        pandas.DataFrame(columns=METRICS_COLUMNS).to_csv(self.metrics_file, index=False)
        report = None
        for epoch in range(cfg.epochs):
            self.epoch = epoch
            t0 = time.time()
            lr = step_decay(self.epoch, cfg.lr, cfg.lr_decay, cfg.lr_step)
            self.model.train()
            ces, tris = [], []
            for idxs in sample_batches(self.labels, cfg.ids_per_batch, cfg.clips_per_identity, self.rng):
                ce, tri = self.train_step(*self.make_batch(idxs), lr=lr)
                ces.append(ce)
                tris.append(tri)
            last = self.epoch == cfg.epochs - 1
            report = None
            if last or (cfg.eval_every > 0 and (self.epoch + 1) % cfg.eval_every == 0):
                report = self.evaluate()
            row = dict(epoch=self.epoch, ce_loss=numpy.mean(ces), triplet_loss=numpy.mean(tris),
                       mAP=report.mAP if report else numpy.nan, top1=report.top(1) if report else numpy.nan, lr=lr)
            self.history.append(row)
            pandas.DataFrame([row], columns=METRICS_COLUMNS).to_csv(self.metrics_file, mode="a", header=False,
                                                                    index=False, float_format="%.8g")
            logger.writeln("epoch {:4d} lr= {:.2e} ce= {:.5f} tri= {:.5f} mAP= {:.4f} top1= {:.4f} ({:.1f} s)".format(
                self.epoch, lr, row["ce_loss"], row["triplet_loss"], row["mAP"], row["top1"], time.time() - t0))
        if self.history:
            df = pandas.DataFrame(self.history, columns=METRICS_COLUMNS)
            logger.writeln(utils.make_loggraph_str(df, "Training statistics",
                                                   dict(Losses=["ce_loss", "triplet_loss"], Retrieval=["mAP", "top1"]),
                                                   x_lab="epoch", float_format="{:.4f}".format))
        self.save_checkpoint()
        if report is not None:
            evaluation.log_report(report, "Final retrieval (query vs gallery)")
        return report
    # run()

    def save_checkpoint(self):
        fileio.save_checkpoint(self.checkpoint_file, self.model.state_dict(), self.cfg.to_text(),
                               epoch=self.cfg.epochs, seed=self.cfg.seed,
                               extra=dict(num_classes=len(self.identities), identities=self.identities,
                                          n_params=count_parameters(self.model)))
# class Trainer
