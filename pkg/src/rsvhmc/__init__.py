"""Bayesian inference of the realized stochastic volatility model.

The latent log-variance path is updated globally by Hamiltonian Monte Carlo
with a leapfrog integrator built from three data-parallel kernels; the five
static parameters are updated by conditional draws. A benchmark harness
measures the cost of one integrator step as a function of the series length,
fits the linear cost model f(B) = A + C * B for T = 512 * B, and reports the
speedup curve between a serial and a chunked multi-worker backend.
"""

from .bench import (BenchConfig, NumericError, ScalingStudy, TimingFit,
                    TimingPoint, asymptotic_gain, compute_gain, emit_report,
                    fit_linear, run_scaling_study, time_elementary_step)
from .data import (DataFormatError, IntradayPanel, SyntheticTruth, compute_rv,
                   load_chain, load_dataset, load_intraday, load_truth,
                   save_chain, save_dataset, save_truth, simulate_rsv)
from .diagnostics import (ChainSummary, ParamSummary, acceptance_rate, ess,
                          integrated_autocorrelation, mean_exp_neg_dh,
                          summarize)
from .estimator import RSVModel
from .integrator import (MDConfig, ParallelBackend, SerialBackend,
                         elementary_step, integrate_trajectory,
                         kernel1_half_position, kernel2_momentum,
                         kernel3_half_position)
from .model import (Dataset, Params, PhaseState, grad_neg_log_posterior,
                    hamiltonian, log_posterior)
from .sampler import (Chain, ChainSample, DivergenceStormError, PriorSpec,
                      SamplerConfig, hmc_update_volatility, make_rng,
                      refresh_momenta, run_chain, update_mu, update_phi,
                      update_sigma_eta_sq, update_sigma_u_sq, update_xi)

__version__ = "0.1.0"

__all__ = [
    "BenchConfig", "Chain", "ChainSample", "ChainSummary", "Dataset",
    "DataFormatError", "DivergenceStormError", "IntradayPanel", "MDConfig",
    "NumericError", "ParallelBackend", "ParamSummary", "Params", "PhaseState",
    "PriorSpec", "RSVModel", "SamplerConfig", "ScalingStudy", "SerialBackend",
    "SyntheticTruth", "TimingFit", "TimingPoint", "acceptance_rate",
    "asymptotic_gain", "compute_gain", "compute_rv", "elementary_step",
    "emit_report", "ess", "fit_linear", "grad_neg_log_posterior",
    "hamiltonian", "hmc_update_volatility", "integrate_trajectory",
    "integrated_autocorrelation", "kernel1_half_position", "kernel2_momentum",
    "kernel3_half_position", "load_chain", "load_dataset", "load_intraday",
    "load_truth", "log_posterior", "make_rng", "mean_exp_neg_dh",
    "refresh_momenta", "run_chain", "run_scaling_study", "save_chain",
    "save_dataset", "save_truth", "simulate_rsv", "summarize",
    "time_elementary_step", "update_mu", "update_phi", "update_sigma_eta_sq",
    "update_sigma_u_sq", "update_xi",
]
