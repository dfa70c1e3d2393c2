"""Variate kernels over a raw stream state (see :mod:`.rng`)."""

import math

from .._jit import njit
from .rng import next_double

_TWO_PI = 2.0 * math.pi


@njit
def uniform(state):
    return next_double(state)


@njit
def bernoulli(state, p):
    return 1 if next_double(state) < p else 0


@njit
def standard_normal(state):
    # Box-Muller, cosine branch only; keeps the stream state a plain buffer.
    u1 = 1.0 - next_double(state)
    u2 = next_double(state)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


@njit
def _gamma_ge1(state, shape):
    # Marsaglia & Tsang squeeze; shape >= 1.
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = standard_normal(state)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = next_double(state)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v
        if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
            return d * v


@njit
def gamma(state, shape):
    if shape >= 1.0:
        return _gamma_ge1(state, shape)
    g = _gamma_ge1(state, shape + 1.0)
    u = 1.0 - next_double(state)
    return g * u ** (1.0 / shape)


@njit
def beta(state, a, b):
    x = gamma(state, a)
    y = gamma(state, b)
    return x / (x + y)


# Entry points taking a one-element stream array (the Python-side handle).


@njit
def uniform_at(streams):
    return uniform(streams[0])


@njit
def bernoulli_at(streams, p):
    return bernoulli(streams[0], p)


@njit
def gamma_at(streams, shape):
    return gamma(streams[0], shape)


@njit
def beta_at(streams, a, b):
    return beta(streams[0], a, b)


@njit
def fill_uniform(streams, out):
    s = streams[0]
    for i in range(out.shape[0]):
        out[i] = uniform(s)


@njit
def fill_gamma(streams, shape, out):
    s = streams[0]
    for i in range(out.shape[0]):
        out[i] = gamma(s, shape)


@njit
def fill_beta(streams, a, b, out):
    s = streams[0]
    for i in range(out.shape[0]):
        out[i] = beta(s, a, b)


@njit
def fill_bernoulli(streams, p, out):
    s = streams[0]
    for i in range(out.shape[0]):
        out[i] = bernoulli(s, p)
