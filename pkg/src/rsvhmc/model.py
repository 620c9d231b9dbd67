"""Realized stochastic volatility model: data, parameters, posterior density.

The observation model couples a daily return ``y_t`` and a daily realized
variance ``RV_t`` to a latent log-variance path ``h_t``:

    y_t      = exp(h_t / 2) * eps_t,          eps_t ~ N(0, 1)
    ln RV_t  = xi + h_t + u_t,                u_t   ~ N(0, sigma_u_sq)
    h_{t+1}  = mu + phi * (h_t - mu) + eta_t, eta_t ~ N(0, sigma_eta_sq)

with ``h_1`` drawn from the stationary law N(mu, sigma_eta_sq / (1 - phi^2)).
The joint log density of the path given the data and parameters is used both
as the Hamiltonian potential for the volatility update and, through its
parameter-dependent normalisation terms, for the conditional parameter draws.
All -ln(2*pi)/2 constants are dropped; they cancel in every ratio this
library forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels


def _as_float_vector(x, name: str, dtype=np.float64) -> np.ndarray:
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass
class Dataset:
    """Observed daily returns and realized variances.

    ``log_rv`` is derived once from ``rv`` at construction, so persisting the
    raw ``rv`` column and re-loading reproduces ``log_rv`` bit for bit.
    """

    returns: np.ndarray
    rv: np.ndarray
    dates: list[str] | None = None
    log_rv: np.ndarray = field(init=False)

    def __post_init__(self):
        self.returns = _as_float_vector(self.returns, "returns")
        self.rv = _as_float_vector(self.rv, "rv")
        if self.returns.shape != self.rv.shape:
            raise ValueError(
                f"returns and rv must have identical length, got "
                f"{self.returns.size} and {self.rv.size}"
            )
        if self.returns.size < 2:
            raise ValueError("dataset needs at least 2 observations")
        if not np.all(np.isfinite(self.returns)):
            raise ValueError("returns contain non-finite values")
        if not np.all(np.isfinite(self.rv)):
            raise ValueError("rv contains non-finite values")
        if np.any(self.rv <= 0.0):
            raise ValueError("rv must be strictly positive (its log is modelled)")
        if self.dates is not None and len(self.dates) != self.returns.size:
            raise ValueError("dates length does not match series length")
        self.log_rv = np.log(self.rv)

    @property
    def length(self) -> int:
        return self.returns.size

    @classmethod
    def from_log_rv(cls, returns, log_rv, dates=None) -> "Dataset":
        """Build from log realized variances (e.g. simulator output)."""
        log_rv = _as_float_vector(log_rv, "log_rv")
        return cls(returns=returns, rv=np.exp(log_rv), dates=dates)


@dataclass(frozen=True)
class Params:
    """The five static model parameters."""

    phi: float
    mu: float
    xi: float
    sigma_eta_sq: float
    sigma_u_sq: float

    def __post_init__(self):
        if not abs(self.phi) < 1.0:
            raise ValueError(f"|phi| must be < 1 for stationarity, got {self.phi}")
        if not self.sigma_eta_sq > 0.0:
            raise ValueError(f"sigma_eta_sq must be positive, got {self.sigma_eta_sq}")
        if not self.sigma_u_sq > 0.0:
            raise ValueError(f"sigma_u_sq must be positive, got {self.sigma_u_sq}")


PARAM_NAMES = ("phi", "mu", "xi", "sigma_eta_sq", "sigma_u_sq")


@dataclass
class PhaseState:
    """Latent path ``h`` and conjugate momenta ``p`` for the dynamics."""

    h: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.h = np.ascontiguousarray(self.h)
        self.p = np.ascontiguousarray(self.p)
        if self.h.ndim != 1 or self.h.shape != self.p.shape:
            raise ValueError(
                f"h and p must be 1-d arrays of identical length, got shapes "
                f"{self.h.shape} and {self.p.shape}"
            )
        if self.h.dtype != self.p.dtype:
            raise ValueError("h and p must share a dtype")

    @property
    def size(self) -> int:
        return self.h.size

    def copy(self) -> "PhaseState":
        return PhaseState(self.h.copy(), self.p.copy())


def _check_lengths(h: np.ndarray, data: Dataset):
    if h.shape[0] != data.length:
        raise ValueError(
            f"latent path length {h.shape[0]} does not match dataset length "
            f"{data.length}"
        )


def log_posterior(h: np.ndarray, params: Params, data: Dataset) -> float:
    """Log conditional density of the latent path, ln f(h, theta).

    Includes every theta-dependent normalisation term (needed by the
    conditional parameter draws) and drops only the -ln(2*pi)/2 constants.
    May return a non-finite value on overflow; callers treat that as a
    diverged state. Summation order is fixed and independent of any worker
    configuration.
    """
    h = np.asarray(h, dtype=np.float64)
    _check_lengths(h, data)
    t_len = data.length
    phi, mu, xi = params.phi, params.mu, params.xi
    se2, su2 = params.sigma_eta_sq, params.sigma_u_sq

    with np.errstate(over="ignore", invalid="ignore"):
        returns_block = -0.5 * np.sum(h) - 0.5 * np.sum(
            data.returns * data.returns * np.exp(-h)
        )
        ru = data.log_rv - xi - h
        rv_block = -0.5 * t_len * np.log(su2) - np.sum(ru * ru) / (2.0 * su2)
        d = h - mu
        trans = d[1:] - phi * d[:-1]
        ar_block = (
            -0.5 * np.log(se2 / (1.0 - phi * phi))
            - (1.0 - phi * phi) * d[0] * d[0] / (2.0 * se2)
            - 0.5 * (t_len - 1) * np.log(se2)
            - np.sum(trans * trans) / (2.0 * se2)
        )
        return float(returns_block + rv_block + ar_block)


def grad_neg_log_posterior(h: np.ndarray, params: Params, data: Dataset) -> np.ndarray:
    """Gradient of -ln f(h, theta) with respect to the latent path."""
    h = np.ascontiguousarray(h)
    _check_lengths(h, data)
    out = np.empty_like(h)
    scal = scalar_pack(params, h.dtype)
    _kernels.gradient_fill(h, data.returns.astype(h.dtype, copy=False),
                           data.log_rv.astype(h.dtype, copy=False), out, *scal,
                           0, h.shape[0])
    return out


def hamiltonian(state: PhaseState, params: Params, data: Dataset) -> float:
    """Kinetic term plus potential: 0.5 * sum(p^2) - ln f(h, theta)."""
    _check_lengths(state.h, data)
    kinetic = 0.5 * float(np.sum(np.asarray(state.p, dtype=np.float64) ** 2))
    return kinetic - log_posterior(state.h, params, data)


def scalar_pack(params: Params, dtype) -> tuple:
    """Parameters pre-cast to the working dtype, in kernel argument order.

    Order: half, phi, mu, xi, 1/sigma_u_sq, 1/sigma_eta_sq, 1-phi^2.
    """
    t = np.dtype(dtype).type
    return (
        t(0.5),
        t(params.phi),
        t(params.mu),
        t(params.xi),
        t(1.0 / params.sigma_u_sq),
        t(1.0 / params.sigma_eta_sq),
        t(1.0 - params.phi * params.phi),
    )
