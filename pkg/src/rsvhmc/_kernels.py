"""Compiled range kernels for the leapfrog integrator.

Each function updates (or fills) array entries over the half-open index
range [lo, hi) and is safe to run concurrently on disjoint ranges: writes
are elementwise, reads of neighbouring sites only touch the position array,
which no kernel writes while momenta are updated. All scalars must be
pre-cast to the dtype of the arrays so that single-precision runs stay in
single precision throughout.

Every kernel returns an int divergence flag (0 = fine) so that chunked
execution can combine flags with a plain max, which is independent of
worker count.
"""

import numpy as np
from numba import njit

# |h_t| beyond this signals a diverged trajectory; exp(-h) is still finite
# at the bound so flagged steps cannot fault.
H_BOUND = 50.0


@njit(nogil=True)
def _grad_site(h, y, lrv, i, half, phi, mu, xi, inv_su2, inv_se2, one_m_phi2):
    # d(-ln f)/dh_i for one site; boundaries handled by branch.
    v = h[i]
    g = half - half * y[i] * y[i] * np.exp(-v) + (xi + v - lrv[i]) * inv_su2
    if i == 0:
        g += one_m_phi2 * (v - mu) * inv_se2
    else:
        g += (v - mu - phi * (h[i - 1] - mu)) * inv_se2
    if i < h.shape[0] - 1:
        g -= phi * (h[i + 1] - mu - phi * (v - mu)) * inv_se2
    return g


@njit(nogil=True, cache=True)
def position_update(h, p, c, lo, hi):
    for i in range(lo, hi):
        h[i] += c * p[i]
    return 0


@njit(nogil=True, cache=True)
def momentum_update(h, p, y, lrv, dt, half, phi, mu, xi, inv_su2, inv_se2,
                    one_m_phi2, lo, hi):
    flagged = 0
    for i in range(lo, hi):
        v = h[i]
        if not (-H_BOUND <= v <= H_BOUND):  # also catches NaN
            flagged = 1
        p[i] -= dt * _grad_site(h, y, lrv, i, half, phi, mu, xi,
                                inv_su2, inv_se2, one_m_phi2)
    return flagged


@njit(nogil=True, cache=True)
def gradient_fill(h, y, lrv, out, half, phi, mu, xi, inv_su2, inv_se2,
                  one_m_phi2, lo, hi):
    flagged = 0
    for i in range(lo, hi):
        v = h[i]
        if not (-H_BOUND <= v <= H_BOUND):
            flagged = 1
        out[i] = _grad_site(h, y, lrv, i, half, phi, mu, xi,
                            inv_su2, inv_se2, one_m_phi2)
    return flagged


@njit(nogil=True, cache=True)
def ar1_path(dev0, innovations, phi, out):
    # out[t] = deviation from the mean of a first-order autoregression.
    out[0] = dev0
    for t in range(innovations.shape[0]):
        out[t + 1] = phi * out[t] + innovations[t]
    return 0


def warmup(dtype=np.float64):
    """Trigger compilation of all kernels for the given dtype."""
    h = np.zeros(4, dtype=dtype)
    p = np.ones(4, dtype=dtype)
    y = np.zeros(4, dtype=dtype)
    lrv = np.zeros(4, dtype=dtype)
    out = np.empty(4, dtype=dtype)
    one = np.dtype(dtype).type(1.0)
    half = one / 2
    zero = one * 0
    position_update(h, p, half, 0, 4)
    momentum_update(h, p, y, lrv, zero, half, zero, zero, zero, one, one,
                    one, 0, 4)
    gradient_fill(h, y, lrv, out, half, zero, zero, zero, one, one, one, 0, 4)
    ar1_path(zero, y[:3], zero, out)
