"""Command-line sweeps over (n, SNR) grids with CSV output."""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .bounds import BoundQuery

HEADER = [
    "n", "snr_db", "snr_kind", "pe_target", "method", "rate_bits", "spectral_eff",
    "log10_pe_lower", "gamma_star", "lambda_prime", "certified", "status",
]
EXCESS_HEADER = HEADER + ["excess_db", "rate_offset_bits"]

SUBCOMMANDS = ("rate-vs-snr", "rate-vs-ebn0", "per-vs-snr", "excess-power", "high-snr-asymptote", "validate")
METHODS = ("auto", "oracle", "integral", "series", "closed1", "closed2", "normal-approx", "kappa-beta")
CONVERSE_METHODS = ("auto", "oracle", "integral", "series")
DEFAULT_N = [10, 20, 50, 100, 200, 500, 1000, 10000, 100000, 1000000]
THREADS_ENV = "PPVCONVERSE_THREADS"

PRESETS = {
    "fig-fb2": {"subcommand": "rate-vs-snr", "n_list": DEFAULT_N, "snr": (-2.0, 20.0, 0.25)},
    "fig-fb6": {"subcommand": "rate-vs-ebn0", "n_list": [100, 1000, 10000, 100000, 1000000],
                "snr": (-1.5, 10.0, 0.25)},
    "fig-fb4": {"subcommand": "excess-power", "n_list": DEFAULT_N, "snr": (-2.0, 20.0, 0.5)},
    "fig-fb8": {"subcommand": "per-vs-snr", "n_list": [1, 10, 100, 1000], "snr": (-4.0, 8.0, 0.5),
                "rate": 0.5},
}


@dataclass(frozen=True)
class SweepConfig:
    subcommand: str
    n_list: list = field(default_factory=lambda: list(DEFAULT_N))
    snr_start: float = -2.0
    snr_stop: float = 20.0
    snr_step: float = 0.25
    snr_kind: str = "symbol"
    pe: float = 1e-5
    rate: float = 0.5
    methods: tuple = ("auto",)
    output_path: str | None = None
    threads: int = 1
    level: str = "quick"

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        if not self.snr_step > 0:
            raise ValueError("SNR step must be positive")
        if self.snr_stop < self.snr_start:
            raise ValueError("SNR grid is empty")
        if not 0.0 < self.pe < 0.5:
            raise ValueError("pe must lie in (0, 1/2)")
        if not self.n_list or any(int(n) != n or n < 1 for n in self.n_list):
            raise ValueError("block-lengths must be integers >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")

    def snr_grid(self) -> list[float]:
        count = int(math.floor((self.snr_stop - self.snr_start) / self.snr_step + 1e-9)) + 1
        return [round(self.snr_start + i * self.snr_step, 10) for i in range(count)]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".15g")


def _row(n, snr_db, kind, pe, method, **cols) -> dict:
    row = {"n": n, "snr_db": snr_db, "snr_kind": kind, "pe_target": pe, "method": method}
    row.update(cols)
    return row


# ---------------------------------------------------------------------------
# per-point evaluators (top level so they pickle for worker processes)


def _rate_point(task):
    n, snr_db, pe, method = task
    om = 10.0 ** (snr_db / 10.0)
    q = BoundQuery(n, om, pe=pe)
    base = dict(n=n, snr_db=snr_db, kind="symbol", pe=pe, method=method)
    if method in CONVERSE_METHODS:
        res = bounds.converse_rate(q, method=method)
        return _row(**base, rate_bits=res.value, spectral_eff=res.spectral_efficiency,
                    gamma_star=res.gamma_star, lambda_prime=res.lambda_prime_star,
                    certified=res.certified, status=res.status.value)
    if method in ("closed1", "closed2"):
        r = bounds.closed_form_rate(q, int(method[-1]))
        if r is None:
            return _row(**base, status="out_of_window")
        return _row(**base, rate_bits=r, spectral_eff=2 * r, status="ok")
    if method == "normal-approx":
        r = bounds.normal_approx_rate(q)
        return _row(**base, rate_bits=r, spectral_eff=2 * r, status="ok")
    r = bounds.kappa_beta_rate(q)
    if not math.isfinite(r):
        return _row(**base, status="infeasible")
    return _row(**base, rate_bits=r, spectral_eff=2 * r, status="ok")


def _rate_fn(n, pe, method):
    if method in CONVERSE_METHODS:
        return None
    if method == "normal-approx":
        return lambda om: bounds.normal_approx_rate(BoundQuery(n, om, pe=pe))
    if method == "kappa-beta":
        return lambda om: bounds.kappa_beta_rate(BoundQuery(n, om, pe=pe))
    order = int(method[-1])

    def closed(om):
        r = bounds.closed_form_rate(BoundQuery(n, om, pe=pe), order)
        return math.nan if r is None else r

    return closed


def _ebn0_minimum(task):
    n, pe, method = task
    m = method if method in CONVERSE_METHODS else "auto"
    return bounds.min_ebn0(n, pe, m, rate_fn=_rate_fn(n, pe, method))


def _ebn0_point(task):
    n, ebn0_db, pe, method, minimum = task
    m = method if method in CONVERSE_METHODS else "auto"
    rate, snr_db = bounds.rate_at_ebn0(n, pe, ebn0_db, m, minimum=minimum, rate_fn=_rate_fn(n, pe, method))
    base = dict(n=n, snr_db=ebn0_db, kind="bit", pe=pe, method=method)
    if math.isnan(rate):
        return _row(**base, status="below_minimum_ebn0")
    return _row(**base, rate_bits=rate, spectral_eff=2 * rate, status="ok")


def _per_point(task):
    n, snr_db, rate, method = task
    om = 10.0 ** (snr_db / 10.0)
    base = dict(n=n, snr_db=snr_db, kind="symbol", pe=None, method=method)
    spec = 2.0 * rate
    if n * rate < 1.0:
        # a single symbol carrying half a bit: the binary antipodal reference
        pe = bounds.uncoded_error_n1(om) if n == 1 and rate == 0.5 else math.nan
        if math.isnan(pe):
            return _row(**base, rate_bits=rate, spectral_eff=spec, status="below_floor")
        return _row(**base, rate_bits=rate, spectral_eff=spec, log10_pe_lower=math.log10(pe),
                    status="reference")
    q = BoundQuery(n, om, rate=rate)
    if method in CONVERSE_METHODS:
        res = bounds.converse_error(q, method=method)
        return _row(**base, rate_bits=rate, spectral_eff=spec, log10_pe_lower=res.value.log10,
                    gamma_star=res.gamma_star, lambda_prime=res.lambda_prime_star,
                    certified=res.certified, status=res.status.value)
    if method in ("closed1", "closed2"):
        lp = bounds.closed_form_error(q, int(method[-1]))
        if lp is None:
            return _row(**base, rate_bits=rate, spectral_eff=spec, status="out_of_window")
        if lp == math.inf:
            return _row(**base, rate_bits=rate, spectral_eff=spec, status="vacuous")
        return _row(**base, rate_bits=rate, spectral_eff=spec, log10_pe_lower=lp / math.log(10.0), status="ok")
    if method == "normal-approx":
        pe = bounds.normal_approx_error(n, om, rate)
        return _row(**base, rate_bits=rate, spectral_eff=spec, log10_pe_lower=math.log10(pe), status="ok")
    return _row(**base, rate_bits=rate, spectral_eff=spec, status="unsupported")


def _excess_point(task):
    n, snr_db, pe, method = task
    om = 10.0 ** (snr_db / 10.0)
    m = method if method in CONVERSE_METHODS else "auto"
    res = bounds.converse_rate(BoundQuery(n, om, pe=pe), method=m, certify=False)
    base = dict(n=n, snr_db=snr_db, kind="symbol", pe=pe, method=m)
    if res.status is bounds.Status.BELOW_FLOOR:
        return _row(**base, rate_bits=0.0, spectral_eff=0.0, status=res.status.value)
    excess = 10.0 * math.log10(om) - 10.0 * math.log10(math.expm1(2.0 * res.value * math.log(2.0)))
    return _row(**base, rate_bits=res.value, spectral_eff=res.spectral_efficiency,
                gamma_star=res.gamma_star, lambda_prime=res.lambda_prime_star,
                status=res.status.value, excess_db=excess)


def _high_snr_point(task):
    n, pe = task
    delta, offset, lam = bounds.high_snr_excess(n, pe)
    return [
        _row(n, None, "symbol", pe, "high-snr", lambda_prime=lam, status="ok",
             excess_db=delta, rate_offset_bits=offset),
        _row(n, None, "symbol", pe, "linear-approx", status="ok",
             excess_db=bounds.linear_excess_approx(n, pe)),
    ]


def _guard(fn, task):
    try:
        return fn(task)
    except Exception as exc:  # recorded per point, the sweep goes on
        return {"status": f"error:{type(exc).__name__}"}


def _call(args):
    fn, task = args
    return _guard(fn, task)


def _map(fn, tasks, threads):
    jobs = [(fn, t) for t in tasks]
    if threads <= 1 or len(jobs) <= 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_call, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


def _fill(results, tasks, keys):
    # failed points still get their identifying columns
    out = []
    for res, task in zip(results, tasks):
        if isinstance(res, dict) and "n" not in res:
            res = {**keys(task), **res}
        out.append(res)
    return out


def run_sweep(config: SweepConfig) -> tuple[list[str], list[dict]]:
    """Evaluate the configured grid; rows come back in n, SNR, method order."""
    sub = config.subcommand
    grid = config.snr_grid()
    threads = config.threads
    if sub == "high-snr-asymptote":
        tasks = [(n, config.pe) for n in config.n_list]
        rows = []
        for res, task in zip(_map(_high_snr_point, tasks, threads), tasks):
            if isinstance(res, dict):
                rows.append({**_row(task[0], None, "symbol", task[1], "high-snr"), **res})
            else:
                rows.extend(res)
        return EXCESS_HEADER, rows
    if sub == "rate-vs-ebn0":
        pairs = [(n, m) for n in config.n_list for m in config.methods]
        minima = _map(_ebn0_minimum, [(n, config.pe, m) for n, m in pairs], threads)
        lookup = {p: (mn if isinstance(mn, tuple) else (math.inf, math.nan)) for p, mn in zip(pairs, minima)}
        tasks = [(n, x, config.pe, m, lookup[(n, m)]) for n in config.n_list for x in grid for m in config.methods]
        results = _map(_ebn0_point, tasks, threads)
        keys = lambda t: _row(t[0], t[1], "bit", t[2], t[3])  # noqa: E731
        return HEADER, _fill(results, tasks, keys)
    if sub == "per-vs-snr":
        # below one bit per block only the single-symbol reference is defined
        tasks = [(n, x, config.rate, m) for n in config.n_list for x in grid
                 for m in (config.methods if n * config.rate >= 1.0 else ("reference",))]
        keys = lambda t: _row(t[0], t[1], "symbol", None, t[3], rate_bits=t[2])  # noqa: E731
        return HEADER, _fill(_map(_per_point, tasks, threads), tasks, keys)
    tasks = [(n, x, config.pe, m) for n in config.n_list for x in grid for m in config.methods]
    keys = lambda t: _row(t[0], t[1], "symbol", t[2], t[3])  # noqa: E731
    if sub == "excess-power":
        return EXCESS_HEADER, _fill(_map(_excess_point, tasks, threads), tasks, keys)
    return HEADER, _fill(_map(_rate_point, tasks, threads), tasks, keys)


def write_csv(header, rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(k)) for k in header])


def _parse_n(text: str) -> list[int]:
    out = []
    for part in text.replace(" ", "").split(","):
        if part:
            v = float(part)
            if v != int(v):
                raise argparse.ArgumentTypeError(f"block-length {part!r} is not an integer")
            out.append(int(v))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppvconverse", description=__doc__)
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--n", type=_parse_n, default=None, help="comma-separated block-lengths")
    p.add_argument("--snr-start", type=float, default=None)
    p.add_argument("--snr-stop", type=float, default=None)
    p.add_argument("--snr-step", type=float, default=None)
    p.add_argument("--snr-kind", choices=("symbol", "bit"), default=None,
                   help="per-symbol SNR or per-bit Eb/N0 (rate-vs-ebn0 always uses bit)")
    p.add_argument("--pe", type=float, default=1e-5)
    p.add_argument("--rate", type=float, default=None, help="bits/symbol for per-vs-snr")
    p.add_argument("--methods", default="auto", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--threads", type=int, default=None, help=f"worker processes (env {THREADS_ENV})")
    p.add_argument("--grid-preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--level", choices=("quick", "full"), default="quick", help="validate suite depth")
    return p


def config_from_args(args) -> SweepConfig:
    sub = args.subcommand
    n_list, snr = list(DEFAULT_N), (-2.0, 20.0, 0.25)
    rate = 0.5
    if args.grid_preset:
        preset = PRESETS[args.grid_preset]
        if preset["subcommand"] != sub:
            raise SystemExit(f"preset {args.grid_preset} belongs to {preset['subcommand']}")
        n_list, snr = preset["n_list"], preset["snr"]
        rate = preset.get("rate", rate)
    elif sub == "rate-vs-ebn0":
        snr = (-1.5, 10.0, 0.25)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    kind = "bit" if sub == "rate-vs-ebn0" else (args.snr_kind or "symbol")
    return SweepConfig(
        subcommand=sub,
        n_list=args.n or n_list,
        snr_start=snr[0] if args.snr_start is None else args.snr_start,
        snr_stop=snr[1] if args.snr_stop is None else args.snr_stop,
        snr_step=snr[2] if args.snr_step is None else args.snr_step,
        snr_kind=kind,
        pe=args.pe,
        rate=rate if args.rate is None else args.rate,
        methods=tuple(m for m in args.methods.split(",") if m),
        output_path=args.out,
        threads=max(1, threads),
        level=args.level,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if config.subcommand == "validate":
        from .validate import format_report, validate_suite

        checks = validate_suite(config.level)
        text = format_report(checks)
        _emit(text, config.output_path)
        return 0 if all(c.passed for c in checks) else 1
    if config.snr_kind == "bit" and config.subcommand != "rate-vs-ebn0":
        print("error: per-bit grids are only supported by rate-vs-ebn0", file=sys.stderr)
        return 2
    header, rows = run_sweep(config)
    buf = io.StringIO()
    write_csv(header, rows, buf)
    _emit(buf.getvalue(), config.output_path)
    failed = sum(1 for r in rows if str(r.get("status", "")).startswith("error"))
    print(f"{len(rows)} rows, {failed} failed points", file=sys.stderr)
    return 0


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    sys.exit(main())
