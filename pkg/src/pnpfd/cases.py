"""Built-in initial data for the zero-Neumann test on the unit square.

Both concentrations have mass 1/6, so the initial charge is neutral.
"""
import numpy as np


def _cubic(s):
    return s ** 2 / 2 - s ** 3 / 3


def example2_p(x, y):
    return _cubic(x) + _cubic(y)


def example2_n(x, y):
    return _cubic(x) * _cubic(y) + 23.0 / 144.0


RELAXATION_MASS = 1.0 / 6.0


def constant(value):
    value = float(value)
    return lambda x, y: np.full(np.broadcast(x, y).shape, value)
