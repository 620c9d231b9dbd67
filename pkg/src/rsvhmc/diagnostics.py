"""Chain-quality statistics.

Implements the acceptance rate, the exp(-delta H) identity check (its mean
is exactly 1 for a correct chain), integrated autocorrelation time with
self-consistent windowing, effective sample size, and per-parameter
posterior summaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import PARAM_NAMES
from .sampler import Chain

# Window rule: stop at the first lag W with W >= window_factor * tau_int(W).
WINDOW_FACTOR = 5.0

# Below this many points tau_int estimates are meaningless.
MIN_SERIES_LEN = 100


@dataclass
class ParamSummary:
    mean: float
    sd: float
    q05: float
    q95: float
    tau_int: float
    ess: float


@dataclass
class ChainSummary:
    params: dict[str, ParamSummary]
    acceptance_rate: float
    exp_neg_dh_mean: float
    exp_neg_dh_se: float
    n_samples: int
    n_divergent: int

    def render_text(self) -> str:
        lines = [
            f"{'parameter':<14}{'mean':>12}{'sd':>12}{'5%':>12}{'95%':>12}"
            f"{'tau_int':>10}{'ess':>10}"
        ]
        for name, s in self.params.items():
            lines.append(
                f"{name:<14}{s.mean:>12.5g}{s.sd:>12.5g}{s.q05:>12.5g}"
                f"{s.q95:>12.5g}{s.tau_int:>10.3g}{s.ess:>10.4g}"
            )
        lines.append("")
        lines.append(f"samples          {self.n_samples}")
        lines.append(f"divergent        {self.n_divergent}")
        lines.append(f"acceptance rate  {self.acceptance_rate:.4f}")
        lines.append(
            f"mean exp(-dH)    {self.exp_neg_dh_mean:.5f} "
            f"(s.e. {self.exp_neg_dh_se:.5f})"
        )
        return "\n".join(lines)

    def save_csv(self, path) -> None:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write("parameter,mean,sd,q05,q95,tau_int,ess\n")
            for name, s in self.params.items():
                fh.write(
                    f"{name},{s.mean:.17g},{s.sd:.17g},{s.q05:.17g},"
                    f"{s.q95:.17g},{s.tau_int:.17g},{s.ess:.17g}\n"
                )
            fh.write(f"n_samples,{self.n_samples},,,,,\n")
            fh.write(f"n_divergent,{self.n_divergent},,,,,\n")
            fh.write(f"acceptance_rate,{self.acceptance_rate:.17g},,,,,\n")
            fh.write(f"exp_neg_dh_mean,{self.exp_neg_dh_mean:.17g},,,,,\n")
            fh.write(f"exp_neg_dh_se,{self.exp_neg_dh_se:.17g},,,,,\n")


def acceptance_rate(chain: Chain) -> float:
    """Fraction of accepted HMC proposals (divergent ones count as rejects)."""
    if len(chain) == 0:
        raise ValueError("empty chain")
    return float(np.mean(chain.accept))


def mean_exp_neg_dh(chain: Chain) -> tuple[float, float]:
    """Sample mean and standard error of exp(-delta H).

    Divergent proposals carry a +inf sentinel and so contribute exactly 0.
    Needs at least two finite entries for the standard error; at least a
    hundred for the estimate to mean much.
    """
    dh = chain.delta_h
    n_finite = int(np.sum(np.isfinite(dh)))
    if n_finite < 2:
        raise ValueError(
            f"need >= 2 finite delta_h entries for a standard error, "
            f"got {n_finite}"
        )
    with np.errstate(over="ignore"):
        w = np.exp(-dh)
    w[np.isinf(dh)] = 0.0
    mean = float(np.mean(w))
    se = float(np.std(w, ddof=1) / math.sqrt(w.size))
    return mean, se


def _autocorrelation(x: np.ndarray) -> np.ndarray:
    """Normalized autocovariance at all lags, FFT-based."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    x = x - np.mean(x)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n]
    if acov[0] <= 0.0:
        return np.ones(1)
    return acov / acov[0]


def integrated_autocorrelation(series) -> float:
    """Integrated autocorrelation time tau_int, at least 1/2.

    tau_int(W) = 1/2 + sum_{k<=W} rho_k, evaluated at the first window W
    with W >= WINDOW_FACTOR * tau_int(W). A constant series has tau_int 1/2
    by convention.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.size < MIN_SERIES_LEN:
        raise ValueError(f"need >= {MIN_SERIES_LEN} points, got {x.size}")
    if np.all(x == x[0]):
        return 0.5
    rho = _autocorrelation(x)
    if rho.size < 2:
        return 0.5
    taus = 0.5 + np.cumsum(rho[1:])
    windows = np.arange(1, rho.size)
    hits = np.nonzero(windows >= WINDOW_FACTOR * taus)[0]
    tau = taus[hits[0]] if hits.size else taus[-1]
    return max(float(tau), 0.5)


def ess(series) -> float:
    """Effective sample size N / (2 tau_int); N for i.i.d.-like series."""
    x = np.asarray(series, dtype=np.float64).ravel()
    return x.size / (2.0 * integrated_autocorrelation(x))


def summarize(chain: Chain) -> ChainSummary:
    """Aggregate per-parameter statistics and global chain health numbers.

    Chains shorter than MIN_SERIES_LEN get NaN autocorrelation columns;
    everything else is still reported.
    """
    if len(chain) == 0:
        raise ValueError("empty chain")
    params: dict[str, ParamSummary] = {}
    for name in PARAM_NAMES:
        series = chain.param_series(name)
        q05, q95 = np.quantile(series, [0.05, 0.95])
        if len(chain) >= MIN_SERIES_LEN:
            tau = integrated_autocorrelation(series)
            n_eff = series.size / (2.0 * tau)
        else:
            tau, n_eff = math.nan, math.nan
        sd = float(np.std(series, ddof=1)) if series.size > 1 else 0.0
        params[name] = ParamSummary(
            mean=float(np.mean(series)), sd=sd,
            q05=float(q05), q95=float(q95), tau_int=tau, ess=n_eff,
        )
    try:
        dh_mean, dh_se = mean_exp_neg_dh(chain)
    except ValueError:
        dh_mean, dh_se = math.nan, math.nan
    return ChainSummary(
        params=params,
        acceptance_rate=acceptance_rate(chain),
        exp_neg_dh_mean=dh_mean,
        exp_neg_dh_se=dh_se,
        n_samples=len(chain),
        n_divergent=chain.n_divergent,
    )
