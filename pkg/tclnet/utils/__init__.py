"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
from . import logger
from . import fileio
from . import config

def make_loggraph_str(df, main_title, graphs, x_lab=None, float_format=None):
    """
    CCP4 loggraph table of df. graphs maps a graph title to the columns it plots;
    x_lab (default: first column) is the x axis of every graph.
    """
    cols = list(df.columns)
    if x_lab is None: x_lab = cols[0]
    for lab in [x_lab] + [l for labs in graphs.values() for l in labs]:
        if lab not in cols:
            raise RuntimeError("no column {} in table {}".format(lab, main_title))
    out = ["$TABLE: {} :".format(main_title), "$GRAPHS"]
    for title, labs in graphs.items():
        idxs = [cols.index(x_lab) + 1] + [cols.index(l) + 1 for l in labs if l != x_lab]
        out.append(": {} :A:{}:".format(title, ",".join(map(str, idxs))))
    out.append("$$")
    header, *rows = df.to_string(index=False, header=True, float_format=float_format).splitlines()
    out += [header, "$$", "$$"] + rows + ["$$"]
    return "\n".join(out) + "\n"
# make_loggraph_str()
