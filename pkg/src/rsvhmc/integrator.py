"""Second-order leapfrog integrator built from three data-parallel kernels.

One elementary step advances the phase state by a step of size dt:

    kernel 1:  h_i <- h_i + (dt/2) * p_i          (half position step)
    kernel 2:  p_i <- p_i - dt * d(-ln f)/dh_i    (full momentum step)
    kernel 3:  h_i <- h_i + (dt/2) * p_i          (half position step)

The kernels are elementwise over the sites i = 1..T and strictly sequential
relative to one another; a backend decides how the index range of a single
kernel is executed. Results never depend on the backend or its worker count
because every site is written independently and divergence flags combine by
max. Adjacent half steps of consecutive elementary steps are kept separate
so the three-kernel structure is exactly what the benchmark times; a fused
variant exists behind a flag for trajectory integration only.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import _kernels
from .model import Dataset, Params, PhaseState, scalar_pack

DEFAULT_CHUNK = 512

# |delta H| beyond this marks a trajectory divergent even if finite.
DH_DIVERGENCE_THRESHOLD = 1000.0


@dataclass(frozen=True)
class MDConfig:
    """Step size and step count of one molecular-dynamics trajectory."""

    step_size: float
    n_steps: int

    def __post_init__(self):
        if not self.step_size > 0.0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def trajectory_length(self) -> float:
        return self.n_steps * self.step_size


class SerialBackend:
    """Runs each kernel over the full index range in a single call."""

    workers = 1

    def run(self, kernel, n: int, args: tuple) -> int:
        return kernel(*args, 0, n)

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ParallelBackend:
    """Partitions each kernel into contiguous chunks run on a thread pool.

    The chunk grid depends only on the problem size and the chunk length,
    never on the worker count, so results are bitwise identical for any
    number of workers. Each kernel call is a synchronisation barrier.
    """

    def __init__(self, workers: int, chunk: int = DEFAULT_CHUNK):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        if chunk < 1:
            raise ValueError(f"chunk must be >= 1, got {chunk}")
        self.workers = workers
        self.chunk = chunk
        self._pool = ThreadPoolExecutor(max_workers=workers)

    def run(self, kernel, n: int, args: tuple) -> int:
        chunk = self.chunk
        if n <= chunk:
            return kernel(*args, 0, n)
        futures = [
            self._pool.submit(kernel, *args, lo, min(lo + chunk, n))
            for lo in range(0, n, chunk)
        ]
        flag = 0
        for fut in futures:
            flag = max(flag, fut.result())
        return flag

    def close(self):
        self._pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


SERIAL = SerialBackend()


def kernel1_half_position(state: PhaseState, dt: float, backend=SERIAL) -> PhaseState:
    """Advance every position by (dt/2) * p_i in place; momenta unchanged."""
    t = state.h.dtype.type
    backend.run(_kernels.position_update, state.size,
                (state.h, state.p, t(0.5) * t(dt)))
    return state


def kernel2_momentum(state: PhaseState, dt: float, params: Params,
                     data: Dataset, backend=SERIAL) -> tuple[PhaseState, bool]:
    """Kick every momentum by -dt * d(-ln f)/dh_i at the current positions.

    Returns the state and a divergence flag raised when any position left
    the trusted range.
    """
    dtype = state.h.dtype
    y = data.returns if data.returns.dtype == dtype else data.returns.astype(dtype)
    lrv = data.log_rv if data.log_rv.dtype == dtype else data.log_rv.astype(dtype)
    args = (state.h, state.p, y, lrv, dtype.type(dt)) + scalar_pack(params, dtype)
    flag = backend.run(_kernels.momentum_update, state.size, args)
    return state, bool(flag)


def kernel3_half_position(state: PhaseState, dt: float, backend=SERIAL) -> PhaseState:
    """Second half position step; same arithmetic as kernel 1."""
    return kernel1_half_position(state, dt, backend)


def elementary_step(state: PhaseState, config: MDConfig, params: Params,
                    data: Dataset, backend=SERIAL) -> tuple[PhaseState, bool]:
    """One full leapfrog step: kernels 1, 2, 3 in sequence, in place."""
    dt = config.step_size
    kernel1_half_position(state, dt, backend)
    _, diverged = kernel2_momentum(state, dt, params, data, backend)
    kernel3_half_position(state, dt, backend)
    return state, diverged


def integrate_trajectory(state: PhaseState, config: MDConfig, params: Params,
                         data: Dataset, backend=SERIAL,
                         fuse_half_steps: bool = False) -> tuple[PhaseState, bool]:
    """Apply n_steps elementary steps to a copy of ``state``.

    Returns the evolved state and a divergence flag; on divergence the
    integration aborts and the returned state is meaningless to the caller
    (the proposal must be discarded). With ``fuse_half_steps`` the interior
    back-to-back half position steps collapse into full steps; this changes
    nothing but floating-point grouping and stays off in the benchmark.
    """
    work = state.copy()
    if not fuse_half_steps:
        for _ in range(config.n_steps):
            _, diverged = elementary_step(work, config, params, data, backend)
            if diverged:
                return work, True
        return work, False

    dt = config.step_size
    t = work.h.dtype.type
    kernel1_half_position(work, dt, backend)
    for step in range(config.n_steps):
        _, diverged = kernel2_momentum(work, dt, params, data, backend)
        if diverged:
            return work, True
        if step < config.n_steps - 1:
            backend.run(_kernels.position_update, work.size,
                        (work.h, work.p, t(dt)))
    kernel3_half_position(work, dt, backend)
    return work, False
