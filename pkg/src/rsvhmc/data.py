"""Synthetic data generation, realized-variance construction, persistence.

All files are plain comma-separated text with a header row, UTF-8, LF line
endings. Floats are serialized with 17 significant digits so a save/load
round trip is loss-free.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from . import _kernels
from .model import PARAM_NAMES, Dataset, Params
from .sampler import Chain, make_rng

logger = logging.getLogger(__name__)

RV_FLOOR = 1e-12

_DATE_BASE = date(2000, 1, 3)


class DataFormatError(ValueError):
    """A file could not be parsed into the expected shape."""


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class IntradayPanel:
    """Per-day sequences of intraday log-returns."""

    returns_per_day: list[np.ndarray]
    dates: list[str] | None = None

    def __post_init__(self):
        self.returns_per_day = [np.asarray(r, dtype=np.float64)
                                for r in self.returns_per_day]
        if not self.returns_per_day:
            raise ValueError("panel has no days")
        for i, r in enumerate(self.returns_per_day):
            if r.ndim != 1 or r.size < 1:
                raise ValueError(f"day {i} must hold at least one return")
            if not np.all(np.isfinite(r)):
                raise ValueError(f"day {i} contains non-finite returns")
        if self.dates is not None and len(self.dates) != len(self.returns_per_day):
            raise ValueError("dates length does not match number of days")

    @property
    def days(self) -> int:
        return len(self.returns_per_day)


@dataclass
class SyntheticTruth:
    """Ground truth of a simulated dataset: parameters and latent path."""

    params: Params
    latent: np.ndarray
    dataset: Dataset


def simulate_rsv(params: Params, t_len: int, seed: int) -> SyntheticTruth:
    """Simulate the model forward for ``t_len`` days.

    Draw order is fixed: the initial latent deviation, then the latent
    innovations, then the return shocks, then the measurement noise, so a
    given seed always produces the same dataset.
    """
    if t_len < 2:
        raise ValueError(f"need t_len >= 2, got {t_len}")
    rng = make_rng(seed)
    se = math.sqrt(params.sigma_eta_sq)
    dev0 = math.sqrt(params.sigma_eta_sq / (1.0 - params.phi ** 2)) \
        * rng.standard_normal()
    eta = se * rng.standard_normal(t_len - 1)
    eps = rng.standard_normal(t_len)
    u = math.sqrt(params.sigma_u_sq) * rng.standard_normal(t_len)

    dev = np.empty(t_len)
    _kernels.ar1_path(dev0, eta, params.phi, dev)
    h = params.mu + dev
    returns = np.exp(0.5 * h) * eps
    log_rv = params.xi + h + u
    dataset = Dataset.from_log_rv(returns, log_rv)
    return SyntheticTruth(params=params, latent=h, dataset=dataset)


def compute_rv(panel: IntradayPanel) -> np.ndarray:
    """Daily realized variance: the sum of squared intraday returns.

    Days whose returns are all zero would have an undefined log variance;
    they are floored at RV_FLOOR and a warning is logged.
    """
    rv = np.array([float(np.sum(r * r)) for r in panel.returns_per_day])
    floored = rv < RV_FLOOR
    if np.any(floored):
        logger.warning(
            "%d day(s) with zero realized variance floored at %g",
            int(np.sum(floored)), RV_FLOOR,
        )
        rv[floored] = RV_FLOOR
    return rv


def _synth_dates(n: int) -> list[str]:
    return [(_DATE_BASE + timedelta(days=t)).isoformat() for t in range(n)]


def _read_rows(path) -> tuple[list[str], list[str] | None, list[tuple[int, list[str]]]]:
    """Read a CSV file into (comment lines, header, numbered data rows)."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"no such file: {path}")
    comments: list[str] = []
    header: list[str] | None = None
    rows: list[tuple[int, list[str]]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                comments.append(stripped)
                continue
            fields = next(csv.reader([line]))
            if header is None:
                header = [f.strip() for f in fields]
            else:
                rows.append((lineno, fields))
    if header is None:
        raise DataFormatError(f"{path}: file has no header row")
    return comments, header, rows


def _parse_float(raw: str, path, lineno: int, column: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise DataFormatError(
            f"{path}, line {lineno}: cannot parse {column}={raw!r} as a number"
        ) from None


def save_dataset(dataset: Dataset, path) -> None:
    """Write a `date,return,rv` file; dates are synthesized when absent."""
    dates = dataset.dates or _synth_dates(dataset.length)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("date,return,rv\n")
        for d, r, v in zip(dates, dataset.returns, dataset.rv):
            fh.write(f"{d},{_fmt(r)},{_fmt(v)}\n")


def load_dataset(path) -> Dataset:
    """Parse a `date,return,rv` file; errors name the offending line."""
    _, header, rows = _read_rows(path)
    if header != ["date", "return", "rv"]:
        raise DataFormatError(
            f"{path}: expected header 'date,return,rv', got {','.join(header)!r}"
        )
    if not rows:
        raise DataFormatError(f"{path}: empty dataset")
    dates, returns, rvs = [], [], []
    for lineno, fields in rows:
        if len(fields) != 3:
            raise DataFormatError(
                f"{path}, line {lineno}: expected 3 columns, got {len(fields)}"
            )
        ret = _parse_float(fields[1], path, lineno, "return")
        rv = _parse_float(fields[2], path, lineno, "rv")
        if not math.isfinite(ret):
            raise DataFormatError(f"{path}, line {lineno}: non-finite return")
        if not math.isfinite(rv):
            raise DataFormatError(f"{path}, line {lineno}: non-finite rv")
        if rv <= 0.0:
            raise DataFormatError(
                f"{path}, line {lineno}: rv={fields[2]} is not positive "
                f"(its log is undefined)"
            )
        dates.append(fields[0])
        returns.append(ret)
        rvs.append(rv)
    if len(returns) < 2:
        raise DataFormatError(f"{path}: dataset needs at least 2 rows")
    return Dataset(returns=np.array(returns), rv=np.array(rvs), dates=dates)


def load_intraday(path) -> IntradayPanel:
    """Parse a `date,time,return` file, grouping rows by date in file order."""
    _, header, rows = _read_rows(path)
    if header != ["date", "time", "return"]:
        raise DataFormatError(
            f"{path}: expected header 'date,time,return', got {','.join(header)!r}"
        )
    if not rows:
        raise DataFormatError(f"{path}: empty intraday file")
    per_day: dict[str, list[float]] = {}
    for lineno, fields in rows:
        if len(fields) != 3:
            raise DataFormatError(
                f"{path}, line {lineno}: expected 3 columns, got {len(fields)}"
            )
        ret = _parse_float(fields[2], path, lineno, "return")
        if not math.isfinite(ret):
            raise DataFormatError(f"{path}, line {lineno}: non-finite return")
        per_day.setdefault(fields[0], []).append(ret)
    dates = list(per_day)
    return IntradayPanel(returns_per_day=[np.array(per_day[d]) for d in dates],
                         dates=dates)


_CHAIN_HEADER = ["iter", *PARAM_NAMES, "accept", "delta_h"]


def latent_companion(path) -> Path:
    """Path of the latent-snapshot file that accompanies a chain file."""
    p = Path(path)
    return p.with_name(p.stem + ".latent" + (p.suffix or ".csv"))


def save_chain(chain: Chain, path) -> None:
    """Write the chain table; latent snapshots go to a companion file."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(_CHAIN_HEADER) + "\n")
        for i in range(len(chain)):
            fields = [str(int(chain.iters[i]))]
            fields += [_fmt(chain.param_series(n)[i]) for n in PARAM_NAMES]
            fields.append("1" if chain.accept[i] else "0")
            fields.append(_fmt(chain.delta_h[i]))
            fh.write(",".join(fields) + "\n")
    if chain.latent is not None:
        t_len = chain.latent.shape[1]
        with open(latent_companion(path), "w", newline="\n", encoding="utf-8") as fh:
            fh.write("iter," + ",".join(f"h{t + 1}" for t in range(t_len)) + "\n")
            for i in range(len(chain)):
                fh.write(str(int(chain.iters[i])) + ","
                         + ",".join(_fmt(v) for v in chain.latent[i]) + "\n")


def load_chain(path) -> Chain:
    """Parse a chain file, picking up the latent companion when present."""
    _, header, rows = _read_rows(path)
    if header != _CHAIN_HEADER:
        raise DataFormatError(
            f"{path}: expected header {','.join(_CHAIN_HEADER)!r}, "
            f"got {','.join(header)!r}"
        )
    n = len(rows)
    iters = np.empty(n, dtype=np.int64)
    cols = {name: np.empty(n) for name in PARAM_NAMES}
    accept = np.empty(n, dtype=bool)
    delta_h = np.empty(n)
    for i, (lineno, fields) in enumerate(rows):
        if len(fields) != len(_CHAIN_HEADER):
            raise DataFormatError(
                f"{path}, line {lineno}: expected {len(_CHAIN_HEADER)} columns, "
                f"got {len(fields)}"
            )
        try:
            iters[i] = int(fields[0])
        except ValueError:
            raise DataFormatError(
                f"{path}, line {lineno}: bad iteration index {fields[0]!r}"
            ) from None
        for j, name in enumerate(PARAM_NAMES, start=1):
            cols[name][i] = _parse_float(fields[j], path, lineno, name)
        accept[i] = fields[6].strip() == "1"
        delta_h[i] = _parse_float(fields[7], path, lineno, "delta_h")

    latent = None
    companion = latent_companion(path)
    if companion.exists():
        _, lat_header, lat_rows = _read_rows(companion)
        if len(lat_rows) != n:
            raise DataFormatError(
                f"{companion}: {len(lat_rows)} latent rows for {n} chain rows"
            )
        t_len = len(lat_header) - 1
        latent = np.empty((n, t_len))
        for i, (lineno, fields) in enumerate(lat_rows):
            if len(fields) != t_len + 1:
                raise DataFormatError(
                    f"{companion}, line {lineno}: expected {t_len + 1} columns, "
                    f"got {len(fields)}"
                )
            latent[i] = [_parse_float(f, companion, lineno, "h") for f in fields[1:]]
    return Chain(iters=iters, accept=accept, delta_h=delta_h, latent=latent,
                 **cols)


def save_truth(truth: SyntheticTruth, path) -> None:
    """Write the generating parameters and latent path of a simulation."""
    dates = truth.dataset.dates or _synth_dates(truth.dataset.length)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        for name in PARAM_NAMES:
            fh.write(f"# {name}={_fmt(getattr(truth.params, name))}\n")
        fh.write("date,h\n")
        for d, v in zip(dates, truth.latent):
            fh.write(f"{d},{_fmt(v)}\n")


def load_truth(path) -> tuple[Params, np.ndarray]:
    """Parse a truth file back into parameters and latent path."""
    comments, header, rows = _read_rows(path)
    if header != ["date", "h"]:
        raise DataFormatError(f"{path}: expected header 'date,h'")
    values = {}
    for c in comments:
        body = c.lstrip("#").strip()
        if "=" in body:
            key, _, raw = body.partition("=")
            values[key.strip()] = float(raw)
    missing = [n for n in PARAM_NAMES if n not in values]
    if missing:
        raise DataFormatError(f"{path}: missing parameter lines for {missing}")
    latent = np.array([_parse_float(f[1], path, lineno, "h")
                       for lineno, f in rows])
    return Params(**{n: values[n] for n in PARAM_NAMES}), latent
