"""Scaling study of the elementary leapfrog step.

Protocol: for each series-length factor B (with T = 512 * B sites) and each
execution backend, run a warm-up, then time ``reps`` consecutive elementary
steps with a monotonic wall clock and report total/reps. The latent state
evolves across the repetitions; momenta are refreshed every 100 steps,
outside the timed segments, to keep trajectories stable. The whole
measurement is repeated (default 5 times) for a standard error. Mean step
times are then fit with ordinary least squares to the cost model

    f(B) = A + C * B

and the speedup of a fast backend over a slow one is the ratio of the two
fitted models, with asymptote C_slow / C_fast as B grows.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .data import DataFormatError, _fmt, _read_rows, simulate_rsv
from .integrator import (DEFAULT_CHUNK, MDConfig, ParallelBackend,
                         SerialBackend, elementary_step)
from .model import Dataset, Params, PhaseState
from .sampler import make_rng, refresh_momenta

logger = logging.getLogger(__name__)

SITES_PER_UNIT = 512

BENCH_PARAMS = Params(phi=0.97, mu=-1.0, xi=-0.3,
                      sigma_eta_sq=0.05, sigma_u_sq=0.1)

_REFRESH_EVERY = 100
_MAX_RETRIES = 3


class NumericError(RuntimeError):
    """A numeric procedure failed (degenerate fit, unstable timing run)."""


@dataclass(frozen=True)
class TimingFit:
    """Ordinary-least-squares fit of mean step time against B."""

    intercept_a: float
    slope_c: float
    r_squared: float

    def predict(self, b: float) -> float:
        return self.intercept_a + self.slope_c * b


@dataclass(frozen=True)
class TimingPoint:
    b: int
    mean_seconds: float
    se_seconds: float
    step_size: float


@dataclass(frozen=True)
class BenchConfig:
    b_values: tuple[int, ...] = (1, 2, 4, 8, 16, 32)
    reps: int = 10000
    chunk: int = DEFAULT_CHUNK
    backends: tuple[str, ...] = ("serial", "parallel")
    workers: int = 4
    precision: str = "double"
    repeats: int = 5
    step_size: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not self.b_values or any(b < 1 for b in self.b_values):
            raise ValueError(f"b_values must be positive integers, got {self.b_values}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.precision not in ("single", "double"):
            raise ValueError(f"precision must be 'single' or 'double', "
                             f"got {self.precision!r}")
        unknown = set(self.backends) - {"serial", "parallel"}
        if unknown:
            raise ValueError(f"unknown backends: {sorted(unknown)}")


@dataclass
class ScalingStudy:
    config: BenchConfig
    timings: dict[str, list[TimingPoint]] = field(default_factory=dict)
    fits: dict[str, TimingFit] = field(default_factory=dict)
    gain_points: list[tuple[int, float]] | None = None
    asymptotic: float | None = None


@dataclass
class _SeriesView:
    """Dataset columns cast to the working dtype, without copies per step."""

    returns: np.ndarray
    log_rv: np.ndarray

    @property
    def length(self) -> int:
        return self.returns.size


def _dtype_of(precision: str):
    return np.float32 if precision == "single" else np.float64


def time_elementary_step(b: int, backend, reps: int, params: Params,
                         data: Dataset, *, step_size: float = 0.01,
                         repeats: int = 5, n_warmup: int = 10,
                         precision: str = "double", seed: int = 0) -> TimingPoint:
    """Average wall-clock seconds of one elementary step at T = 512 * b.

    Each of ``repeats`` measurements starts from a fresh state anchored at
    the observed log variances, performs the untimed warm-up, then times
    ``reps`` steps in segments of 100 with untimed momentum refreshes in
    between. Divergence restarts the measurement with half the step size,
    up to three retries.
    """
    t_len = SITES_PER_UNIT * b
    if data.length != t_len:
        raise ValueError(
            f"dataset length {data.length} does not match 512*B = {t_len}"
        )
    dtype = _dtype_of(precision)
    view = _SeriesView(returns=data.returns.astype(dtype),
                       log_rv=data.log_rv.astype(dtype))
    h_start = (data.log_rv - params.xi).astype(dtype)

    dt = step_size
    for attempt in range(_MAX_RETRIES + 1):
        md = MDConfig(step_size=dt, n_steps=1)
        rng = make_rng(seed)
        per_rep: list[float] = []
        diverged = False
        for _ in range(repeats):
            state = PhaseState(h_start.copy(), refresh_momenta(rng, t_len, dtype))
            for _ in range(n_warmup):
                _, diverged = elementary_step(state, md, params, view, backend)
                if diverged:
                    break
            if diverged:
                break
            total = 0.0
            done = 0
            while done < reps:
                seg = min(_REFRESH_EVERY, reps - done)
                t0 = time.perf_counter()
                for _ in range(seg):
                    _, diverged = elementary_step(state, md, params, view, backend)
                    if diverged:
                        break
                total += time.perf_counter() - t0
                if diverged:
                    break
                done += seg
                state.p[:] = refresh_momenta(rng, t_len, dtype)
            if diverged:
                break
            per_rep.append(total / reps)
        if not diverged:
            mean = float(np.mean(per_rep))
            se = (float(np.std(per_rep, ddof=1) / math.sqrt(len(per_rep)))
                  if len(per_rep) > 1 else 0.0)
            if se > 0.1 * mean:
                logger.warning(
                    "unstable timing environment at B=%d: s.e. %.3g is more "
                    "than 10%% of the mean %.3g", b, se, mean,
                )
            return TimingPoint(b=b, mean_seconds=mean, se_seconds=se, step_size=dt)
        logger.warning("divergence while timing B=%d at step size %g; retrying "
                       "with %g", b, dt, dt / 2)
        dt /= 2
    raise NumericError(
        f"timing at B={b} kept diverging after {_MAX_RETRIES} retries "
        f"(last step size {dt * 2})"
    )


def fit_linear(points) -> TimingFit:
    """OLS fit of (B, seconds) pairs to f(B) = A + C * B, with R^2."""
    pts = [(float(b), float(y)) for b, y in points]
    if len(pts) < 2:
        raise NumericError(f"need >= 2 points for a line, got {len(pts)}")
    b = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.all(b == b[0]):
        raise NumericError("degenerate fit: all B values identical")
    slope, intercept = np.polyfit(b, y, 1)
    resid = y - (intercept + slope * b)
    ss_res = float(np.sum(resid * resid))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return TimingFit(intercept_a=float(intercept), slope_c=float(slope),
                     r_squared=r_squared)


def compute_gain(fit_slow: TimingFit, fit_fast: TimingFit, b: float) -> float:
    """Pointwise speedup f_slow(B) / f_fast(B) of the fitted cost models."""
    fast = fit_fast.predict(b)
    if fast <= 0.0:
        raise NumericError(
            f"fast backend has non-positive predicted time {fast} at B={b}"
        )
    return fit_slow.predict(b) / fast


def asymptotic_gain(fit_slow: TimingFit, fit_fast: TimingFit) -> float:
    """Large-B limit of the speedup: the slope ratio C_slow / C_fast."""
    if fit_fast.slope_c <= 0.0:
        raise NumericError(
            f"fast backend has non-positive slope {fit_fast.slope_c}"
        )
    return fit_slow.slope_c / fit_fast.slope_c


def _make_backend(name: str, config: BenchConfig):
    if name == "serial":
        return SerialBackend()
    return ParallelBackend(workers=config.workers, chunk=config.chunk)


def run_scaling_study(config: BenchConfig, params: Params = BENCH_PARAMS) -> ScalingStudy:
    """Measure, fit, and (with two backends) build the gain curve."""
    study = ScalingStudy(config=config)
    for name in config.backends:
        backend = _make_backend(name, config)
        try:
            points = []
            for b in config.b_values:
                data = simulate_rsv(params, SITES_PER_UNIT * b,
                                    seed=config.seed + b).dataset
                point = time_elementary_step(
                    b, backend, config.reps, params, data,
                    step_size=config.step_size, repeats=config.repeats,
                    precision=config.precision, seed=config.seed,
                )
                logger.info("%s B=%d: %.3g s/step (s.e. %.2g)", name, b,
                            point.mean_seconds, point.se_seconds)
                points.append(point)
        finally:
            backend.close()
        study.timings[name] = points
        if len(set(config.b_values)) >= 2:
            study.fits[name] = fit_linear([(p.b, p.mean_seconds) for p in points])
    if "serial" in study.fits and "parallel" in study.fits:
        slow, fast = study.fits["serial"], study.fits["parallel"]
        study.gain_points = [(b, compute_gain(slow, fast, b))
                             for b in config.b_values]
        study.asymptotic = asymptotic_gain(slow, fast)
    return study


def _timestamp_line() -> str:
    return f"# generated={datetime.now(timezone.utc).isoformat()}\n"


def emit_report(study: ScalingStudy, out_dir) -> dict[str, Path]:
    """Write plot-ready CSVs: per-backend timings, fit summary, gain curve."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    for name, points in study.timings.items():
        path = out / f"timings_{name}.csv"
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(_timestamp_line())
            fh.write("B,T,mean_seconds,se_seconds\n")
            for p in points:
                fh.write(f"{p.b},{SITES_PER_UNIT * p.b},"
                         f"{_fmt(p.mean_seconds)},{_fmt(p.se_seconds)}\n")
        paths[f"timings_{name}"] = path

    fits_path = out / "fits.csv"
    with open(fits_path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(_timestamp_line())
        fh.write("backend,intercept_a,slope_c,r_squared\n")
        for name, fit in study.fits.items():
            fh.write(f"{name},{_fmt(fit.intercept_a)},{_fmt(fit.slope_c)},"
                     f"{_fmt(fit.r_squared)}\n")
    paths["fits"] = fits_path

    if study.gain_points is not None:
        gain_path = out / "gain.csv"
        with open(gain_path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(_timestamp_line())
            if study.asymptotic is not None:
                fh.write(f"# asymptotic_gain={_fmt(study.asymptotic)}\n")
            fh.write("B,gain\n")
            for b, g in study.gain_points:
                fh.write(f"{b},{_fmt(g)}\n")
        paths["gain"] = gain_path
    return paths


def load_timings(path) -> list[TimingPoint]:
    """Parse a timings report back into points (step size not recorded)."""
    _, header, rows = _read_rows(path)
    if header != ["B", "T", "mean_seconds", "se_seconds"]:
        raise DataFormatError(f"{path}: not a timings report")
    return [TimingPoint(b=int(f[0]), mean_seconds=float(f[2]),
                        se_seconds=float(f[3]), step_size=math.nan)
            for _, f in rows]


def load_fits(path) -> dict[str, TimingFit]:
    _, header, rows = _read_rows(path)
    if header != ["backend", "intercept_a", "slope_c", "r_squared"]:
        raise DataFormatError(f"{path}: not a fit summary")
    return {f[0]: TimingFit(intercept_a=float(f[1]), slope_c=float(f[2]),
                            r_squared=float(f[3]))
            for _, f in rows}


def load_gain(path) -> tuple[list[tuple[int, float]], float | None]:
    comments, header, rows = _read_rows(path)
    if header != ["B", "gain"]:
        raise DataFormatError(f"{path}: not a gain report")
    asymptotic = None
    for c in comments:
        body = c.lstrip("#").strip()
        if body.startswith("asymptotic_gain="):
            asymptotic = float(body.partition("=")[2])
    return [(int(f[0]), float(f[1])) for _, f in rows], asymptotic
