"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import os
import dataclasses
import numpy
import pandas
from tclnet.utils import logger
from tclnet.autodiff import DimensionError, PreconditionError

REPORT_RANKS = (1, 5, 10)

def as_matrix(descs):
    return numpy.stack([d.test_vector if hasattr(d, "test_vector") else numpy.asarray(d, dtype=numpy.float64)
                        for d in descs])

def normalize_rows(x, eps=1e-12):
    return x / numpy.maximum(numpy.linalg.norm(x, axis=-1, keepdims=True), eps)

def similarity_matrix(query, gallery):
    """cosine similarities [Q, G] of descriptor (or vector) lists"""
    if len(gallery) == 0:
        raise PreconditionError("empty gallery")
    qm, gm = as_matrix(query), as_matrix(gallery)
    if qm.shape[1] != gm.shape[1]:
        raise DimensionError("query dimension {} != gallery dimension {}".format(qm.shape[1], gm.shape[1]))
    return normalize_rows(qm) @ normalize_rows(gm).T
# similarity_matrix()

def rank_gallery(query, gallery):
    """gallery indices by descending cosine similarity; equal similarities keep index order"""
    sims = similarity_matrix([query], gallery)[0]
    return numpy.argsort(-sims, kind="stable")

def rank_all(query, gallery):
    sims = similarity_matrix(query, gallery)
    return numpy.argsort(-sims, axis=1, kind="stable")

@dataclasses.dataclass
class MetricsReport:
    mAP: float
    cmc: numpy.ndarray # cmc[r-1] = CMC at rank r
    per_query_ap: numpy.ndarray # NaN for excluded queries
    n_queries: int
    n_excluded: int
    chance_map: float = float("nan")

    def top(self, r):
        return float(self.cmc[min(r, len(self.cmc)) - 1])

    def summary(self):
        ret = dict(mAP=self.mAP)
        for r in REPORT_RANKS:
            ret["top{}".format(r)] = self.top(r)
        ret.update(queries=self.n_queries, excluded=self.n_excluded, chance_mAP=self.chance_map)
        return ret
# class MetricsReport

def compute_map_cmc(rankings, query_labels, gallery_labels):
    """
    rankings: [Q, G] gallery indices per query. Queries without a relevant gallery
    item are excluded from mAP and CMC and counted.
    """
    rankings = numpy.asarray(rankings)
    ql, gl = numpy.asarray(query_labels), numpy.asarray(gallery_labels)
    if rankings.ndim != 2 or rankings.shape[0] != len(ql) or rankings.shape[1] != len(gl):
        raise DimensionError("rankings {} do not match {} queries x {} gallery items".format(rankings.shape, len(ql), len(gl)))
    matches = gl[rankings] == ql[:, None]
    aps = numpy.full(len(ql), numpy.nan)
    cmc = numpy.zeros(len(gl))
    n_valid = 0
    for i, m in enumerate(matches):
        hits = numpy.flatnonzero(m)
        if len(hits) == 0:
            continue
        n_valid += 1
        aps[i] = numpy.mean(numpy.arange(1, len(hits) + 1) / (hits + 1.))
        cmc[hits[0]:] += 1
    n_excluded = len(ql) - n_valid
    if n_excluded:
        logger.warning("{} queries without a relevant gallery item are excluded".format(n_excluded))
    if n_valid == 0:
        raise PreconditionError("no query has a relevant gallery item")
    return MetricsReport(mAP=float(numpy.nanmean(aps)), cmc=cmc / n_valid, per_query_ap=aps,
                         n_queries=len(ql), n_excluded=n_excluded)
# compute_map_cmc()

def chance_map(query_labels, gallery_labels):
    """expected precision of a random ranking: mean fraction of relevant gallery items per query"""
    ql, gl = numpy.asarray(query_labels), numpy.asarray(gallery_labels)
    frac = (gl[None, :] == ql[:, None]).mean(axis=1)
    frac = frac[frac > 0]
    return float(frac.mean()) if len(frac) else float("nan")
# chance_map()

def evaluate(query, gallery, query_labels, gallery_labels):
    report = compute_map_cmc(rank_all(query, gallery), query_labels, gallery_labels)
    report.chance_map = chance_map(query_labels, gallery_labels)
    return report
# evaluate()

def write_metrics(report, query_labels, prefix):
    """<prefix>.csv with per-query rows and <prefix>_summary.txt"""
    df = pandas.DataFrame(dict(query=numpy.arange(len(query_labels)), label=query_labels,
                               ap=report.per_query_ap))
    df.to_csv(prefix + ".csv", index=False, float_format="%.10f")
    with open(prefix + "_summary.txt", "w") as ofs:
        for k, v in report.summary().items():
            ofs.write("{:12s} {}\n".format(k, "{:.6f}".format(v) if isinstance(v, float) else v))
    logger.writeln("Metrics written: {}.csv {}_summary.txt".format(prefix, os.path.basename(prefix)))
# write_metrics()

def log_report(report, title="Retrieval"):
    s = report.summary()
    logger.writeln("{}: mAP= {:.4f} top1= {:.4f} top5= {:.4f} top10= {:.4f} (chance mAP ~ {:.4f})".format(
        title, s["mAP"], s["top1"], s["top5"], s["top10"], s["chance_mAP"]))
    logger.writeln(" queries: {} excluded: {}".format(s["queries"], s["excluded"]))
# log_report()
