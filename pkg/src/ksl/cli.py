"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a mathematical check fails
(the first failing row goes to stderr), 2 for configuration or input errors.
Error messages are single lines of the form ``error kind=<kind> reason=<text>``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import acceptance
from .curvature import positivity_scan, scalar_curvature
from .flow import FlowSchedule, run_flow, soliton_initial_profile, uniform_window
from .geometry import decay_report, distance_at, InsufficientSpanError
from .io import to_json, write_profile, write_table
from .kernels import MAX_ORDER, kernel_identity_report
from .soliton import SolitonParams, build_profile, flat_profile

SUBCOMMANDS = ("kernels", "build", "verify", "decay", "flow", "all")

DEFAULT_TOLERANCES = {
    "kernel_residual": 1e-5,
    "selfsim": 1e-3,
    "origin_drift": 0.01,
    "volume_degradation": 0.02,
    "flat_rate": 1e-12,
}

SCAN_COLUMNS = ("t", "d", "a", "b", "c", "R", "min_eig", "A", "B", "C", "D")
KERNEL_COLUMNS = ("n", "f", "g", "h", "l", "passed")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 2
    lam: float = 2.0
    phi_min: float = 1e-6
    phi_max: float | None = None
    nodes: int | None = None
    t_min: float = -12.0
    t_max: float = 30.0
    s_end: float = 1.0
    samples: int = 1000
    threads: int = 1
    out: str | None = None
    format: str = "csv"
    flat: bool = False
    soliton: bool = False
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    # JSON config keys use the flag spellings with underscores
    KEY_ALIASES = {"lambda": "lam"}

    def validate(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or not 1 <= self.n < MAX_ORDER:
            raise ConfigError(f"n must be an integer in [1, {MAX_ORDER - 1}]")
        if not (isinstance(self.lam, (int, float)) and self.lam > 1 and math.isfinite(self.lam)):
            raise ConfigError("lambda must be a finite number > 1")
        if not self.phi_min > 0:
            raise ConfigError("phi-min must be positive")
        if self.phi_max is not None and not self.phi_max > self.phi_min:
            raise ConfigError("phi-max must exceed phi-min")
        if self.nodes is not None and self.nodes < 16:
            raise ConfigError("nodes must be >= 16")
        if not self.t_min < self.t_max:
            raise ConfigError("t-min must be below t-max")
        if not self.s_end > 0:
            raise ConfigError("s-end must be positive")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.flat and self.soliton:
            raise ConfigError("--flat and --soliton are exclusive")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
        for key, val in self.tolerances.items():
            if not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"tolerance {key} must be positive")
        return self


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, val in data.items():
        name = RunConfig.KEY_ALIASES.get(key, key.replace("-", "_"))
        if name not in known:
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = val
    if "tolerances" in out:
        if not isinstance(out["tolerances"], dict):
            raise ConfigError("tolerances must be an object")
        out["tolerances"] = {**DEFAULT_TOLERANCES, **out["tolerances"]}
    return out


SUBCOMMAND_HELP = {
    "kernels": "check the kernel identities and signs for orders 1..n",
    "build": "write a soliton (or flat) profile as CSV",
    "verify": "scan the positivity inequalities and curvature-operator eigenvalues",
    "decay": "tabulate volume growth and curvature decay",
    "flow": "run the Ricci flow and compare with the self-similar solution",
    "all": "run the acceptance suite",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="ksl", description="Soliton metrics, curvature checks and Ricci flow")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=SUBCOMMAND_HELP[name], description=SUBCOMMAND_HELP[name])
        p.add_argument("--n", type=int, help="complex dimension (default 2)")
        p.add_argument("--lambda", dest="lam", type=float, help="soliton parameter, > 1 (default 2)")
        p.add_argument("--phi-min", type=float, help="smallest phi of the profile (default 1e-6)")
        p.add_argument("--phi-max", type=float, help="largest phi of the profile")
        p.add_argument("--nodes", type=int, help="profile or flow grid nodes")
        p.add_argument("--t-min", type=float, help="left end of the flat/flow window (default -12)")
        p.add_argument("--t-max", type=float, help="right end of the flat/flow window (default 30)")
        p.add_argument("--s-end", type=float, help="final flow time (default 1)")
        p.add_argument("--samples", type=int, help="radii sampled by verify (default 1000)")
        p.add_argument("--threads", type=int, help="worker threads (also KSL_THREADS)")
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), help="report format (default csv)")
        kind = p.add_mutually_exclusive_group()
        kind.add_argument("--flat", action="store_true", default=None, help="use the flat metric phi = e^t")
        kind.add_argument("--soliton", action="store_true", default=None, help="use the soliton (default)")
    return parser


def resolve_config(args, environ=None):
    """Defaults, then the JSON config file, then explicit flags."""
    environ = os.environ if environ is None else environ
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    if "threads" not in values and environ.get("KSL_THREADS"):
        try:
            values["threads"] = int(environ["KSL_THREADS"])
        except ValueError as exc:
            raise ConfigError("KSL_THREADS must be an integer") from exc
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None and f.name != "tolerances":
            values[f.name] = val
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def _emit(cfg, text):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(cfg, rows, columns, summary=None):
    if cfg.format == "json":
        payload = {"rows": [{c: r[c] for c in columns} for r in rows]}
        if summary is not None:
            payload["summary"] = summary
        return to_json(payload)
    return write_table(rows, columns)


def _fail(row):
    print("check failed: " + json.dumps(row, sort_keys=True, default=float), file=sys.stderr)
    return 1


def _soliton(cfg, phi_max=None):
    return build_profile(
        SolitonParams(cfg.n, float(cfg.lam)),
        phi_min=cfg.phi_min,
        phi_max=cfg.phi_max if cfg.phi_max is not None else phi_max,
        node_count=cfg.nodes or 4096,
    )


def cmd_kernels(cfg):
    grid = np.linspace(0.0, 50.0, 200)
    orders = range(1, cfg.n + 1)
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        reports = list(pool.map(lambda k: kernel_identity_report(k, grid), orders))
    tol = cfg.tolerances["kernel_residual"]
    rows = [{"n": r.n, **r.residuals, "passed": r.passed(tol)} for r in reports]
    _emit(cfg, _table(cfg, rows, KERNEL_COLUMNS))
    bad = [r for r in rows if not r["passed"]]
    return _fail(bad[0]) if bad else 0


def cmd_build(cfg):
    if cfg.flat:
        prof = flat_profile(cfg.n, cfg.t_min, cfg.t_max, cfg.nodes or 2001)
    else:
        prof = _soliton(cfg)
    _emit(cfg, write_profile(prof))
    return 0


def scan_rows(prof, samples, threads=1):
    ts = np.linspace(prof.t_min, prof.t_max, samples)
    chunks = np.array_split(ts, max(1, threads))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: positivity_scan(prof, c), [c for c in chunks if c.size]))
    results = [r for part in parts for r in part]
    R = scalar_curvature(prof, ts)
    d = distance_at(prof, ts)
    rows = []
    for i, res in enumerate(results):
        # a, b, c recovered from the same combinations the verdicts use
        b = res.a_plus_b - res.a
        rows.append({
            "t": ts[i], "d": d[i], "a": res.a, "b": b, "c": res.c_combo - 2 * res.a - 4 * b, "R": R[i],
            "min_eig": res.min_eigenvalue, "A": res.A, "B": res.B, "C": res.C, "D": res.D,
        })
    return rows


def cmd_verify(cfg):
    prof = flat_profile(cfg.n, cfg.t_min, cfg.t_max, cfg.nodes or 2001) if cfg.flat else _soliton(cfg)
    rows = scan_rows(prof, cfg.samples, cfg.threads)
    _emit(cfg, _table(cfg, rows, SCAN_COLUMNS))
    bad = [r for r in rows if not (r["A"] and r["B"] and r["C"] and r["D"] and r["min_eig"] > 0)]
    return _fail(bad[0]) if bad else 0


def cmd_decay(cfg):
    prof = flat_profile(cfg.n, cfg.t_min, cfg.t_max, cfg.nodes or 2001) if cfg.flat else _soliton(cfg, 1e8)
    rep = decay_report(prof)
    rows = list(rep.rows())
    _emit(cfg, _table(cfg, rows, rep.COLUMNS, rep.constants))
    bad = [r for r in rows if not all(math.isfinite(v) for v in r.values())]
    if bad or not rep.constants["c1_hat"] > 0:
        return _fail(bad[0] if bad else rep.constants)
    return 0


def cmd_flow(cfg):
    nodes = cfg.nodes or 2000
    grid = uniform_window(cfg.t_min, cfg.t_max, nodes)
    records = tuple(cfg.s_end * k / 10 for k in range(11))
    sched = FlowSchedule(cfg.s_end, record_times=records)
    if cfg.flat:
        initial = flat_profile(cfg.n, cfg.t_min, cfg.t_max, nodes)
    else:
        params = SolitonParams(cfg.n, float(cfg.lam))
        initial = soliton_initial_profile(params, cfg.t_min, cfg.t_max, cfg.s_end)
    res = run_flow(initial, sched, t=grid)
    rows = list(res.rows())
    _emit(cfg, _table(cfg, rows, res.CSV_COLUMNS, res.summary))
    tol = cfg.tolerances
    summ = res.summary
    if cfg.flat:
        first, last = res.states[0], res.states[-1]
        rate = float(np.max(np.abs(last.w - first.w)) / last.s)
        return _fail({"stationarity_rate": rate}) if not rate < tol["flat_rate"] else 0
    for row in rows:
        if not row["selfsim_err"] < tol["selfsim"]:
            return _fail(row)
    if not summ["R_origin_drift"] < tol["origin_drift"]:
        return _fail({"R_origin_drift": summ["R_origin_drift"]})
    degradation = 1.0 - summ["vol_ratio_min"] / summ["vol_ratio_first"]
    if not degradation < tol["volume_degradation"]:
        return _fail({"volume_degradation": degradation})
    return 0


def cmd_all(cfg):
    results = acceptance.run_suite(threads=cfg.threads)
    if cfg.format == "json":
        payload = [
            {"criterion": r.number, "name": r.name, "passed": r.passed, "elapsed": r.elapsed, "failures": r.failures}
            for r in results
        ]
        _emit(cfg, to_json(payload))
    else:
        _emit(cfg, "".join(r.line() + "\n" for r in results))
    bad = [r for r in results if not r.passed]
    return _fail({"criterion": bad[0].number, "failures": bad[0].failures}) if bad else 0


COMMANDS = {
    "kernels": cmd_kernels,
    "build": cmd_build,
    "verify": cmd_verify,
    "decay": cmd_decay,
    "flow": cmd_flow,
    "all": cmd_all,
}


def _error(kind, reason):
    print(f"error kind={kind} reason={json.dumps(str(reason))}", file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse has already printed usage; normalize its status to 2
        return 0 if exc.code == 0 else 2
    if args.command is None:
        _error("usage", "missing subcommand")
        return 2
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        _error("config", exc)
        return 2
    try:
        return COMMANDS[args.command](cfg)
    except (ValueError, InsufficientSpanError) as exc:
        _error("input", exc)
        return 2
    except BrokenPipeError:
        # the reader went away (e.g. piped into head); nothing left to report
        sys.stderr.close()
        return 0
    except OSError as exc:
        _error("io", exc)
        return 2
    except (RuntimeError, FloatingPointError) as exc:
        _error("numerics", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
