"""
This software is released under the
Mozilla Public License, version 2.0; see LICENSE.
"""
from __future__ import absolute_import, division, print_function, generators
import os
import json
import struct
import hashlib
import numpy
from tclnet.utils import logger

TENSOR_MAGIC = b"TCLT"
CHECKPOINT_MAGIC = b"TCLK"

def makedirs(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise SystemExit("ERROR: cannot create directory {}: {}".format(path, e))
    if not os.access(path, os.W_OK):
        raise SystemExit("ERROR: directory is not writable: {}".format(path))
# makedirs()

def write_tensor(ofs, arr):
    arr = numpy.ascontiguousarray(arr, dtype="<f8")
    ofs.write(TENSOR_MAGIC)
    ofs.write(struct.pack("<I", arr.ndim))
    for n in arr.shape:
        ofs.write(struct.pack("<Q", n))
    ofs.write(arr.tobytes(order="C"))
# write_tensor()

def read_tensor(ifs):
    magic = ifs.read(4)
    if magic != TENSOR_MAGIC:
        raise RuntimeError("not a tensor record (magic {!r})".format(magic))
    rank, = struct.unpack("<I", ifs.read(4))
    shape = tuple(struct.unpack("<Q", ifs.read(8))[0] for _ in range(rank))
    count = int(numpy.prod(shape)) if rank > 0 else 1
    buf = ifs.read(8 * count)
    if len(buf) != 8 * count:
        raise RuntimeError("truncated tensor record: expected {} values".format(count))
    return numpy.frombuffer(buf, dtype="<f8").astype(numpy.float64).reshape(shape)
# read_tensor()

def save_tensor(arr, filename):
    with open(filename, "wb") as ofs:
        write_tensor(ofs, arr)
# save_tensor()

def load_tensor(filename):
    with open(filename, "rb") as ifs:
        return read_tensor(ifs)
# load_tensor()

def save_checkpoint(filename, state, config_text, epoch, seed, extra=None):
    """
    header (magic, JSON with config digest, epoch, seed and the config text),
    then one named tensor record per entry of state (name order preserved)
    """
    header = dict(config_digest=hashlib.sha256(config_text.encode()).hexdigest(),
                  epoch=int(epoch), seed=int(seed), config=config_text)
    if extra: header.update(extra)
    hbytes = json.dumps(header, sort_keys=True).encode()
    tmp = filename + ".part"
    with open(tmp, "wb") as ofs:
        ofs.write(CHECKPOINT_MAGIC)
        ofs.write(struct.pack("<I", len(hbytes)))
        ofs.write(hbytes)
        ofs.write(struct.pack("<I", len(state)))
        for name, arr in state.items():
            nb = name.encode()
            ofs.write(struct.pack("<I", len(nb)))
            ofs.write(nb)
            write_tensor(ofs, arr)
    os.replace(tmp, filename)
    logger.writeln("Checkpoint saved: {}".format(filename))
# save_checkpoint()

def load_checkpoint(filename):
    logger.writeln("Reading checkpoint: {}".format(filename))
    with open(filename, "rb") as ifs:
        if ifs.read(4) != CHECKPOINT_MAGIC:
            raise SystemExit("ERROR: not a checkpoint file: {}".format(filename))
        hlen, = struct.unpack("<I", ifs.read(4))
        header = json.loads(ifs.read(hlen).decode())
        n, = struct.unpack("<I", ifs.read(4))
        state = {}
        for _ in range(n):
            nlen, = struct.unpack("<I", ifs.read(4))
            name = ifs.read(nlen).decode()
            state[name] = read_tensor(ifs)
    return header, state
# load_checkpoint()

def file_digest(filename):
    with open(filename, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()

def write_pgm(arr, filename):
    """8-bit binary PGM; values are min-max scaled, a constant map becomes mid gray"""
    arr = numpy.asarray(arr, dtype=numpy.float64)
    assert arr.ndim == 2
    lo, hi = arr.min(), arr.max()
    if hi > lo:
        img = numpy.round((arr - lo) / (hi - lo) * 255)
    else:
        img = numpy.full(arr.shape, 128.)
    with open(filename, "wb") as ofs:
        ofs.write("P5\n{} {}\n255\n".format(arr.shape[1], arr.shape[0]).encode())
        ofs.write(img.astype(numpy.uint8).tobytes())
# write_pgm()
