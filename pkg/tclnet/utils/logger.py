"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import sys
import time
import datetime
import platform
import getpass
import traceback
import shlex
import tclnet

class Logger(object):
    """
    Tees everything to stdout (stderr for errors), the log file and an
    optional extra file object given per call.
    """
    def __init__(self, file_out=None, append=True):
        self.ofs = None
        self.n_warnings = 0
        self.t_start = None
        if file_out:
            self.set_file(file_out, append)
    # __init__()

    def set_file(self, file_out, append=True):
        self.close()
        try:
            self.ofs = open(file_out, "a" if append else "w")
        except OSError as e:
            print("Error: cannot open log file {} to write: {}".format(file_out, e), file=sys.stderr)
    # set_file()

    def write(self, l, end="", flush=True, fs=None, print_fs=None):
        print(l, end=end, file=print_fs if print_fs is not None else sys.stdout, flush=flush)
        for f in (self.ofs, fs):
            if f is None: continue
            f.write(l + end)
            if flush: f.flush()
    # write()

    def writeln(self, l, flush=True, fs=None):
        self.write(l, end="\n", flush=flush, fs=fs)

    def error(self, l, fs=None):
        self.write(l, end="\n", fs=fs, print_fs=sys.stderr)

    def warning(self, l):
        self.n_warnings += 1
        self.writeln("WARNING: {}".format(l))

    def table(self, df, title=None, fs=None, **kwds):
        """pandas object as text; kwds go to to_string()"""
        if title: self.writeln(title, fs=fs)
        self.writeln(df.to_string(**kwds), fs=fs)
    # table()

    def elapsed(self):
        if self.t_start is None: return ""
        return str(datetime.timedelta(seconds=round(time.time() - self.t_start)))

    def close(self):
        if self.ofs is not None:
            self.ofs.close()
            self.ofs = None
    # close()

    def flush(self):
        if self.ofs:
            self.ofs.flush()
# class Logger

_logger = Logger() # singleton
set_file = _logger.set_file
write = _logger.write
writeln = _logger.writeln
error = _logger.error
warning = _logger.warning
table = _logger.table
close = _logger.close
flush = _logger.flush

def dependency_versions():
    import numpy
    import scipy
    import pandas
    return dict(numpy=numpy.version.full_version,
                scipy=scipy.version.full_version,
                pandas=pandas.__version__)
# dependency_versions()

def versions_str():
    deps = ", ".join("{} {}".format(k, v) for k, v in dependency_versions().items())
    return "tclnet {} with Python {} ({})".format(tclnet.__version__, platform.python_version(), deps)

def write_header(command="tclnet", argv=None):
    if argv is None: argv = sys.argv[1:]
    _logger.t_start = time.time()
    _logger.n_warnings = 0
    writeln("# tclnet ver. {} ({}) Python {}".format(tclnet.__version__, tclnet.__date__, platform.python_version()))
    writeln("# Library vers. {}".format(", ".join("{} {}".format(k, v) for k, v in dependency_versions().items())))
    writeln("# Started on {}".format(datetime.datetime.now()))
    try:
        user = getpass.getuser()
    except Exception: # no passwd entry in some containers
        user = "(unknown)"
    writeln("# Host: {} User: {}".format(platform.node(), user))
    writeln("# Command-line:")
    writeln("# {} {}".format(command, " ".join(shlex.quote(x) for x in argv)))
# write_header()

def footer(status):
    s = "\n# {} on {}".format(status, datetime.datetime.now())
    if _logger.t_start is not None:
        s += " (elapsed {})".format(_logger.elapsed())
    if _logger.n_warnings:
        s += "\n# {} warning(s), see above".format(_logger.n_warnings)
    return s + "\n"
# footer()

def exit_success():
    writeln(footer("Finished"))
    close()

def exit_failure(message, code):
    """log message and the footer, close the log and exit with code"""
    error(message)
    writeln(footer("Abnormally finished"))
    close()
    sys.exit(code)
# exit_failure()

def handle_exception(exc_type, exc_value, exc_traceback):
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return
    error("".join(traceback.format_exception(exc_type, exc_value, exc_traceback)))
    writeln(footer("Abnormally finished"))
    close()
# handle_exception()

sys.excepthook = handle_exception
