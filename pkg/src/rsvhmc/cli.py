"""Command line interface: simulate, estimate, diagnose, bench.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Normal output goes to stdout; logs and errors go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import BENCH_PARAMS, BenchConfig, NumericError, emit_report, run_scaling_study
from .data import (DataFormatError, _fmt, latent_companion, load_chain,
                   load_dataset, save_chain, save_dataset, save_truth,
                   simulate_rsv)
from .diagnostics import summarize
from .integrator import MDConfig
from .model import Params
from .sampler import DivergenceStormError, PriorSpec, SamplerConfig, run_chain

_USAGE_EXIT = 1
_DATA_EXIT = 2
_NUMERIC_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(_USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _add_prior_flags(sp):
    sp.add_argument("--prior-mu-mean", type=float, default=None)
    sp.add_argument("--prior-mu-var", type=float, default=None)
    sp.add_argument("--prior-xi-mean", type=float, default=None)
    sp.add_argument("--prior-xi-var", type=float, default=None)
    sp.add_argument("--prior-var-shape", type=float, default=None)
    sp.add_argument("--prior-var-scale", type=float, default=None)
    sp.add_argument("--prior-phi-a", type=float, default=None)
    sp.add_argument("--prior-phi-b", type=float, default=None)


def _prior_from_args(args) -> PriorSpec:
    base = PriorSpec()
    overrides = {
        "mu_mean": args.prior_mu_mean, "mu_var": args.prior_mu_var,
        "xi_mean": args.prior_xi_mean, "xi_var": args.prior_xi_var,
        "var_shape": args.prior_var_shape, "var_scale": args.prior_var_scale,
        "phi_a": args.prior_phi_a, "phi_b": args.prior_phi_b,
    }
    values = {k: (v if v is not None else getattr(base, k))
              for k, v in overrides.items()}
    return PriorSpec(**values)


def build_parser() -> _Parser:
    parser = _Parser(prog="rsvhmc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    sim.add_argument("--T", type=int, required=True, dest="t_len")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--truth-out", default=None)
    sim.add_argument("--phi", type=float, default=BENCH_PARAMS.phi)
    sim.add_argument("--mu", type=float, default=BENCH_PARAMS.mu)
    sim.add_argument("--xi", type=float, default=BENCH_PARAMS.xi)
    sim.add_argument("--sigma-eta-sq", type=float, default=BENCH_PARAMS.sigma_eta_sq)
    sim.add_argument("--sigma-u-sq", type=float, default=BENCH_PARAMS.sigma_u_sq)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="run the sampler on a dataset")
    est.add_argument("--data", required=True)
    est.add_argument("--chain-out", required=True)
    est.add_argument("--summary-out", default=None)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--n-samples", type=int, default=4000)
    est.add_argument("--burnin", type=int, default=1000)
    est.add_argument("--thin", type=int, default=1)
    est.add_argument("--step-size", type=float, default=0.02)
    est.add_argument("--n-steps", type=int, default=50)
    est.add_argument("--store-latent", action="store_true")
    _add_prior_flags(est)
    est.set_defaults(func=cmd_estimate)

    dia = sub.add_parser("diagnose", help="summarize a stored chain")
    dia.add_argument("--chain", required=True)
    dia.add_argument("--csv-out", default=None)
    dia.set_defaults(func=cmd_diagnose)

    ben = sub.add_parser("bench", help="run the step-cost scaling study")
    ben.add_argument("--out-dir", required=True)
    ben.add_argument("--config", default=None,
                     help="key=value file; explicit flags win")
    ben.add_argument("--b-values", default=None,
                     help="comma separated, e.g. 1,2,4,8,16,32")
    ben.add_argument("--reps", type=int, default=None)
    ben.add_argument("--repeats", type=int, default=None)
    ben.add_argument("--backends", default=None,
                     help="comma separated subset of serial,parallel")
    ben.add_argument("--workers", type=int, default=None)
    ben.add_argument("--chunk", type=int, default=None)
    ben.add_argument("--precision", choices=("single", "double"), default=None)
    ben.add_argument("--step-size", type=float, default=None)
    ben.add_argument("--seed", type=int, default=None)
    ben.set_defaults(func=cmd_bench)
    return parser


def cmd_simulate(args) -> int:
    try:
        params = Params(phi=args.phi, mu=args.mu, xi=args.xi,
                        sigma_eta_sq=args.sigma_eta_sq,
                        sigma_u_sq=args.sigma_u_sq)
        if args.t_len < 2:
            raise ValueError("--T must be at least 2")
    except ValueError as exc:
        print(f"rsvhmc simulate: invalid flags: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    truth = simulate_rsv(params, args.t_len, args.seed)
    save_dataset(truth.dataset, args.out)
    print(f"wrote dataset {args.out}")
    if args.truth_out:
        save_truth(truth, args.truth_out)
        print(f"wrote truth {args.truth_out}")
    return 0


def cmd_estimate(args) -> int:
    try:
        prior = _prior_from_args(args)
        config = SamplerConfig(
            seed=args.seed,
            md=MDConfig(step_size=args.step_size, n_steps=args.n_steps),
            n_burnin=args.burnin,
            n_samples=args.n_samples,
            thin=args.thin,
            store_latent=args.store_latent,
        )
    except ValueError as exc:
        print(f"rsvhmc estimate: invalid flags: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    data = load_dataset(args.data)
    chain = run_chain(data, config, prior=prior)
    save_chain(chain, args.chain_out)
    print(f"wrote chain {args.chain_out}")
    if chain.latent is not None:
        print(f"wrote latent snapshots {latent_companion(args.chain_out)}")
    summary = summarize(chain)
    if args.summary_out:
        summary.save_csv(args.summary_out)
        print(f"wrote summary {args.summary_out}")
    print(summary.render_text())
    return 0


def cmd_diagnose(args) -> int:
    chain = load_chain(args.chain)
    if len(chain) == 0:
        raise DataFormatError(f"{args.chain}: chain holds no samples")
    summary = summarize(chain)
    if args.csv_out:
        summary.save_csv(args.csv_out)
        print(f"wrote summary {args.csv_out}")
    print(summary.render_text())
    return 0


def _parse_config_file(path) -> dict:
    values = {}
    p = Path(path)
    if not p.exists():
        raise DataFormatError(f"no such config file: {path}")
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        body = line.strip()
        if not body or body.startswith("#"):
            continue
        if "=" not in body:
            raise DataFormatError(f"{path}, line {lineno}: expected key=value")
        key, _, raw = body.partition("=")
        values[key.strip().replace("-", "_")] = raw.strip()
    return values


def _parse_int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.split(",") if tok.strip())


def _bench_config(raw: dict, args) -> BenchConfig:
    base = BenchConfig()
    fields = {
        "b_values": base.b_values, "reps": base.reps, "chunk": base.chunk,
        "backends": base.backends, "workers": base.workers,
        "precision": base.precision, "repeats": base.repeats,
        "step_size": base.step_size, "seed": base.seed,
    }
    for key, value in raw.items():
        if key == "b_values":
            fields[key] = _parse_int_list(value)
        elif key == "backends":
            fields[key] = tuple(t.strip() for t in value.split(",") if t.strip())
        elif key in ("reps", "chunk", "workers", "repeats", "seed"):
            fields[key] = int(value)
        elif key == "step_size":
            fields[key] = float(value)
        else:
            fields[key] = value
    if args.b_values is not None:
        fields["b_values"] = _parse_int_list(args.b_values)
    if args.backends is not None:
        fields["backends"] = tuple(t.strip() for t in args.backends.split(","))
    for key in ("reps", "repeats", "workers", "chunk", "precision", "seed"):
        flag = getattr(args, key)
        if flag is not None:
            fields[key] = flag
    if args.step_size is not None:
        fields["step_size"] = args.step_size
    return BenchConfig(**fields)


def cmd_bench(args) -> int:
    raw = {}
    if args.config:
        raw = _parse_config_file(args.config)
        known = ("b_values", "reps", "chunk", "backends", "workers",
                 "precision", "repeats", "step_size", "seed")
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise DataFormatError(f"{args.config}: unknown key(s) {unknown}")
    try:
        config = _bench_config(raw, args)
    except ValueError as exc:
        print(f"rsvhmc bench: invalid flags: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    study = run_scaling_study(config)
    paths = emit_report(study, args.out_dir)
    for name, fit in study.fits.items():
        print(f"fit {name}: intercept_a={_fmt(fit.intercept_a)} "
              f"slope_c={_fmt(fit.slope_c)} r_squared={_fmt(fit.r_squared)}")
    if study.gain_points is not None:
        for b, g in study.gain_points:
            print(f"gain B={b}: {_fmt(g)}")
        print(f"asymptotic_gain: {_fmt(study.asymptotic)}")
    for path in paths.values():
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except (DivergenceStormError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _NUMERIC_EXIT


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
