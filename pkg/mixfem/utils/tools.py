from __future__ import absolute_import, division, print_function

import json
import logging
import os
from contextlib import contextmanager

import numpy as np
from threadpoolctl import threadpool_limits

logger = logging.getLogger(__name__)

THREADS_ENV = "MIXFEM_NUM_THREADS"


def create_missing_folders(folders):
    if folders is None:
        return

    for folder in folders:
        if folder is None or folder == "":
            continue

        if not os.path.exists(folder):
            os.makedirs(folder)

        elif not os.path.isdir(folder):
            raise OSError("Path {} exists, but is no directory!".format(folder))


class _NumpyEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super(_NumpyEncoder, self).default(o)


def save_json(payload, filename):
    """ Write `payload` (which may hold numpy scalars and arrays) as indented JSON. """
    create_missing_folders([os.path.dirname(filename)])
    with open(filename, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, cls=_NumpyEncoder)
    logger.debug("Saved %s", filename)


def thread_cap():
    value = os.environ.get(THREADS_ENV)
    if value is None or value == "":
        return None
    try:
        n = int(value)
    except ValueError:
        raise ValueError("{} must be a positive integer, got {!r}".format(THREADS_ENV, value))
    if n < 1:
        raise ValueError("{} must be a positive integer, got {!r}".format(THREADS_ENV, value))
    return n


@contextmanager
def limited_threads():
    """ Cap BLAS/OpenMP pools to the value of MIXFEM_NUM_THREADS, if set. """
    n = thread_cap()
    if n is None:
        yield
        return
    logger.info("  Thread cap:             %s", n)
    with threadpool_limits(limits=n):
        yield
