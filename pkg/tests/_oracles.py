"""Independent reference implementations used to check the library.

Everything here is written straight from the model equations, without
calling the library code paths it is meant to verify.
"""

import math

import mpmath
import numpy as np

from rsvhmc import Dataset, Params, make_rng


def blockwise_log_posterior(h, params, returns, log_rv, dps=50):
    """Extended-precision block-by-block log density, via mpmath.

    Returns the three blocks (returns, measurement, autoregression)
    separately; their sum is the reference value for log_posterior.
    """
    with mpmath.workdps(dps):
        phi = mpmath.mpf(params.phi)
        mu = mpmath.mpf(params.mu)
        xi = mpmath.mpf(params.xi)
        se2 = mpmath.mpf(params.sigma_eta_sq)
        su2 = mpmath.mpf(params.sigma_u_sq)
        t_len = len(h)

        ret = mpmath.mpf(0)
        for t in range(t_len):
            ht = mpmath.mpf(float(h[t]))
            yt = mpmath.mpf(float(returns[t]))
            ret += -ht / 2 - yt * yt * mpmath.e ** (-ht) / 2

        meas = mpmath.mpf(0)
        for t in range(t_len):
            r = mpmath.mpf(float(log_rv[t])) - xi - mpmath.mpf(float(h[t]))
            meas += -mpmath.log(su2) / 2 - r * r / (2 * su2)

        ar = -mpmath.log(se2 / (1 - phi * phi)) / 2
        d0 = mpmath.mpf(float(h[0])) - mu
        ar += -(1 - phi * phi) * d0 * d0 / (2 * se2)
        for t in range(t_len - 1):
            r = (mpmath.mpf(float(h[t + 1])) - mu
                 - phi * (mpmath.mpf(float(h[t])) - mu))
            ar += -mpmath.log(se2) / 2 - r * r / (2 * se2)

        return float(ret), float(meas), float(ar)


def fd_gradient(log_posterior_fn, h, params, data, eps=1e-5):
    """Central finite differences of a log density, negated."""
    g = np.empty_like(h)
    for i in range(h.size):
        hp = h.copy()
        hp[i] += eps
        hm = h.copy()
        hm[i] -= eps
        g[i] = -(log_posterior_fn(hp, params, data)
                 - log_posterior_fn(hm, params, data)) / (2 * eps)
    return g


def log_density_2d(h1, h2, params, returns, log_rv):
    """Vectorized joint log density over a (h1, h2) grid, T = 2 only.

    Written straight from the model equations so it is independent of the
    library's log_posterior.
    """
    phi, mu, xi = params.phi, params.mu, params.xi
    se2, su2 = params.sigma_eta_sq, params.sigma_u_sq
    y1, y2 = returns
    l1, l2 = log_rv
    lp = -0.5 * h1 - 0.5 * y1 * y1 * np.exp(-h1)
    lp += -0.5 * h2 - 0.5 * y2 * y2 * np.exp(-h2)
    lp += -((l1 - xi - h1) ** 2) / (2 * su2) - ((l2 - xi - h2) ** 2) / (2 * su2)
    lp += -(1 - phi * phi) * (h1 - mu) ** 2 / (2 * se2)
    lp += -((h2 - mu - phi * (h1 - mu)) ** 2) / (2 * se2)
    return lp


def random_instance(seed, t_len, dyadic=False):
    """A seeded random (h, params, dataset) triple of plausible scale."""
    rng = make_rng(seed)
    params = Params(
        phi=float(rng.uniform(-0.9, 0.98)),
        mu=float(rng.normal(0.0, 1.0)),
        xi=float(rng.normal(0.0, 0.5)),
        sigma_eta_sq=float(rng.uniform(0.02, 0.5)),
        sigma_u_sq=float(rng.uniform(0.05, 0.5)),
    )
    h = params.mu + rng.normal(0.0, 1.0, t_len)
    returns = np.exp(0.5 * h) * rng.standard_normal(t_len)
    log_rv = params.xi + h + math.sqrt(params.sigma_u_sq) * rng.standard_normal(t_len)
    data = Dataset.from_log_rv(returns, log_rv)
    return h, params, data


def tilted_kalman_loglik(z, phi, mu, se2, su2):
    """Exact log marginal of z_t = h_t + u_t with per-step tilt exp(-h_t/2).

    With zero returns the model's return block reduces to exp(-h_t/2), so
    the whole latent integral is Gaussian and this recursion gives the exact
    log likelihood of the innovation variance. The tilt folds into the
    predictive mean (a Gaussian times exp(-h/2) is a shifted Gaussian).
    """
    m = mu
    V = se2 / (1 - phi * phi)
    ll = 0.0
    for zt in z:
        ll += -m / 2 + V / 8
        mt = m - V / 2
        S = V + su2
        ll += -0.5 * math.log(2 * math.pi * S) - (zt - mt) ** 2 / (2 * S)
        gain = V / S
        m_post = mt + gain * (zt - mt)
        v_post = (1 - gain) * V
        m = mu + phi * (m_post - mu)
        V = phi * phi * v_post + se2
    return ll


def ks_distance(draws, grid, log_density):
    """Two-sided KS distance of draws against a gridded density.

    The density is normalized by trapezoid integration and its CDF is
    interpolated at the sorted draws.
    """
    draws = np.sort(np.asarray(draws, dtype=np.float64))
    dens = np.exp(log_density - np.max(log_density))
    cdf = np.concatenate([[0.0], np.cumsum(
        0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    f = np.interp(draws, grid, cdf)
    n = draws.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
