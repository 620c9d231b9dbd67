"""Scikit-learn style front end for the volatility sampler."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .diagnostics import summarize
from .integrator import MDConfig
from .model import PARAM_NAMES, Dataset, Params
from .sampler import PriorSpec, SamplerConfig, run_chain


class RSVModel(BaseEstimator):
    """Bayesian realized stochastic volatility estimator.

    Couples daily returns with daily realized variances through a latent
    AR(1) log-variance path and samples the joint posterior: Hamiltonian
    Monte Carlo for the path, conditional draws for the five static
    parameters.

    Parameters
    ----------
    n_samples : int, number of stored post-burn-in sweeps.
    n_burnin : int, number of discarded warm-up sweeps.
    thin : int, keep every thin-th sweep after burn-in.
    step_size : float, leapfrog step size of the volatility update.
    n_steps : int, leapfrog steps per trajectory.
    seed : int, seed of the counter-based generator; fixes the chain.
    store_latent : bool, keep per-sweep latent path snapshots.
    prior : PriorSpec or None, priors for the static parameters.

    Attributes
    ----------
    chain_ : Chain, the stored posterior sample.
    summary_ : ChainSummary, per-parameter statistics and chain health.
    params_ : Params, posterior means of the static parameters.
    latent_mean_ : ndarray or None, posterior mean of the latent path.
    volatility_ : ndarray or None, exp(latent_mean_ / 2), a daily
        volatility estimate on the return scale.
    """

    def __init__(self, n_samples: int = 4000, n_burnin: int = 1000,
                 thin: int = 1, step_size: float = 0.02, n_steps: int = 50,
                 seed: int = 0, store_latent: bool = True,
                 prior: PriorSpec | None = None):
        self.n_samples = n_samples
        self.n_burnin = n_burnin
        self.thin = thin
        self.step_size = step_size
        self.n_steps = n_steps
        self.seed = seed
        self.store_latent = store_latent
        self.prior = prior

    def _validate_input(self, X) -> Dataset:
        if isinstance(X, Dataset):
            return X
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(
                "X must be a (T, 2) array with columns [return, realized "
                f"variance], got shape {arr.shape}"
            )
        if arr.shape[0] < 2:
            raise ValueError(f"need at least 2 rows, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("X contains non-finite values")
        if np.any(arr[:, 1] <= 0.0):
            raise ValueError("realized variances must be strictly positive")
        return Dataset(returns=arr[:, 0], rv=arr[:, 1])

    def fit(self, X, y=None):
        """Sample the posterior for the given series.

        X is a (T, 2) array with columns [daily return, daily realized
        variance], or a Dataset. y is ignored and exists for pipeline
        compatibility.
        """
        data = self._validate_input(X)
        config = SamplerConfig(
            seed=self.seed,
            md=MDConfig(step_size=self.step_size, n_steps=self.n_steps),
            n_burnin=self.n_burnin,
            n_samples=self.n_samples,
            thin=self.thin,
            store_latent=self.store_latent,
        )
        self.chain_ = run_chain(data, config, prior=self.prior)
        self.summary_ = summarize(self.chain_)
        self.params_ = Params(**{
            name: float(np.mean(self.chain_.param_series(name)))
            for name in PARAM_NAMES
        })
        if self.chain_.latent is not None:
            self.latent_mean_ = self.chain_.latent.mean(axis=0)
            self.volatility_ = np.exp(0.5 * self.latent_mean_)
        else:
            self.latent_mean_ = None
            self.volatility_ = None
        return self
