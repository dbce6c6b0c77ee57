"""
Command-line entry point.

Subcommands: ``simulate``, ``moments``, ``negative-result``, ``theorem1``,
``frequency-scan``.  Settings come from built-in defaults, then an
optional ``--config`` JSON file, then command-line flags.

Exit codes: 0 all checks pass, 1 a check failed, 2 a check was
inconclusive, 3 invalid configuration.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from . import __version__
from .experiments import moment_check, negative_result
from .frequency import default_nu_grid, frequency_scan, write_scan_csv
from .kernels import Kernel, TruncationPolicy
from .macro import exact_transformation_check
from .process import InterventionSpec, InvalidParamsError, ModelParams, simulate
from .stats import CheckVerdict, Status, exit_code

EXIT_CONFIG = 3

COMMANDS = ("simulate", "moments", "negative-result", "theorem1", "frequency-scan")

DEFAULTS = {
    "alpha": 0.9, "beta": 0.5, "gamma": 0.5, "noise_std_x": 1.0, "noise_std_y": 1.0,
    "seed": 0, "n": 100_000, "burn_in": None, "tol": 1e-12, "nu_grid": 64,
    "T": [50, 200, 800], "out": None, "kernel": None, "x": 2.0,
}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"invalid config field '{field}': {message}")
        self.field = field


@dataclass
class RunConfig:
    command: str
    params: ModelParams
    seed: int
    n_samples: int
    burn_in: Optional[int]
    tol: float
    nu_grid: List[float]
    T: List[int]
    out: Optional[str]
    kernel: Optional[dict] = None
    x: float = 2.0
    timestamp: bool = field(default=True, repr=False)

    def to_dict(self) -> dict:
        return {
            "command": self.command, "params": self.params.to_dict(), "seed": self.seed,
            "n_samples": self.n_samples, "burn_in": self.burn_in, "tol": self.tol,
            "nu_grid": self.nu_grid, "T": self.T, "out": self.out, "kernel": self.kernel,
            "x": self.x,
        }


def _parse_nu_grid(value) -> List[float]:
    if isinstance(value, (list, tuple)):
        nus = [float(v) for v in value]
    elif isinstance(value, int) and not isinstance(value, bool):
        if value < 1:
            raise ConfigError("nu_grid", f"grid size must be >= 1, got {value}")
        return default_nu_grid(value)
    else:
        text = str(value).strip()
        if "," in text or "." in text:
            nus = [float(v) for v in text.split(",") if v.strip()]
        else:
            return _parse_nu_grid(int(text))
    for nu in nus:
        if not 0 <= nu < 1:
            raise ConfigError("nu_grid", f"frequencies must lie in [0, 1), got {nu}")
    return nus


def _int_field(name, value, minimum):
    if isinstance(value, bool) or int(value) != value:
        raise ConfigError(name, f"must be an integer, got {value!r}")
    if int(value) < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {value}")
    return int(value)


def build_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from exc
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
        for key, value in data.items():
            if key not in DEFAULTS:
                raise ConfigError(key, "unknown key")
            merged[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value

    try:
        params = ModelParams.from_dict({k: merged[k] for k in
                                        ("alpha", "beta", "gamma", "noise_std_x", "noise_std_y")})
    except InvalidParamsError as exc:
        raise ConfigError(exc.field, str(exc).split(": ", 1)[-1]) from exc

    try:
        seed = _int_field("seed", merged["seed"], 0)
        n = _int_field("n", merged["n"], 3)
        burn_in = None if merged["burn_in"] is None else _int_field("burn_in", merged["burn_in"], 0)
        Ts = merged["T"] if isinstance(merged["T"], (list, tuple)) else [merged["T"]]
        Ts = [_int_field("T", t, 1) for t in Ts]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("config", str(exc)) from exc
    tol = float(merged["tol"])
    if not tol > 0:
        raise ConfigError("tol", f"must be > 0, got {tol}")
    try:
        nu_grid = _parse_nu_grid(merged["nu_grid"])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("nu_grid", str(exc)) from exc
    x = float(merged["x"])
    if not math.isfinite(x):
        raise ConfigError("x", f"must be finite, got {x}")

    kernel = merged["kernel"]
    if isinstance(kernel, str):
        try:
            with open(kernel) as fh:
                kernel = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("kernel", str(exc)) from exc
    if kernel is not None:
        try:
            Kernel.from_dict(kernel)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("kernel", f"expected {{offset, re, im}}: {exc}") from exc

    return RunConfig(command=args.command, params=params, seed=seed, n_samples=n, burn_in=burn_in,
                     tol=tol, nu_grid=nu_grid, T=Ts, out=merged["out"], kernel=kernel, x=x,
                     timestamp=not args.no_timestamp)


def _provenance(cfg: RunConfig) -> dict:
    meta = {"version": __version__, "config": cfg.to_dict()}
    if cfg.timestamp:
        meta["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return meta


def _comment_header(cfg: RunConfig) -> str:
    meta = _provenance(cfg)
    lines = [f"# coarsecausal {meta['version']}",
             "# config: " + json.dumps(meta["config"], sort_keys=True)]
    if "generated" in meta:
        lines.append(f"# generated: {meta['generated']}")
    return "\n".join(lines) + "\n"


def _write(cfg: RunConfig, text: str) -> None:
    if cfg.out is None or cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)


def _write_json(cfg: RunConfig, payload: dict) -> None:
    if cfg.out is None:
        return
    doc = _provenance(cfg)
    doc.update(payload)
    with open(cfg.out, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_simulate(cfg: RunConfig) -> int:
    traj = simulate(cfg.params, cfg.n_samples, burn_in=cfg.burn_in, seed=cfg.seed)
    _write(cfg, _comment_header(cfg) + traj.to_csv())
    return 0


def _cmd_moments(cfg: RunConfig) -> int:
    report = moment_check(cfg.params, n=cfg.n_samples, seed=cfg.seed, burn_in=cfg.burn_in)
    print(report.render())
    _write_json(cfg, report.to_dict())
    return report.exit_code


def _cmd_negative_result(cfg: RunConfig) -> int:
    report = negative_result(cfg.params, n=cfg.n_samples, seed=cfg.seed, burn_in=cfg.burn_in)
    print(report.render())
    _write_json(cfg, report.to_dict())
    return report.exit_code


def _cmd_theorem1(cfg: RunConfig) -> int:
    g = Kernel.from_dict(cfg.kernel) if cfg.kernel is not None else Kernel.delta(0)
    if not g.is_real:
        raise ConfigError("kernel", "theorem1 needs a real kernel")
    report = exact_transformation_check(
        cfg.params, g, n=cfg.n_samples, seed=cfg.seed,
        intervention=InterventionSpec.constant(cfg.x), policy=TruncationPolicy(tol=cfg.tol))
    print(report.render())
    _write_json(cfg, report.to_dict())
    return report.exit_code


def _cmd_frequency_scan(cfg: RunConfig) -> int:
    reports = frequency_scan(cfg.nu_grid, cfg.T, cfg.params, TruncationPolicy(tol=cfg.tol))
    buf = io.StringIO()
    write_scan_csv(reports, buf)
    _write(cfg, _comment_header(cfg) + buf.getvalue())
    verdicts = []
    for r in reports:
        ok = r.actual_l1_error <= r.tight_bound * (1 + 1e-9)
        verdicts.append(CheckVerdict(f"partner error nu={r.nu:g} T={r.t_window}", r.actual_l1_error,
                                     r.tight_bound, 0.0, Status.PASS if ok else Status.FAIL))
    bad = [v for v in verdicts if not v.passed]
    for v in bad:
        print(f"bound violated: {v.name}: {v.observed:.6g} > {v.expected:.6g}", file=sys.stderr)
    return exit_code(verdicts)


HANDLERS = {
    "simulate": _cmd_simulate,
    "moments": _cmd_moments,
    "negative-result": _cmd_negative_result,
    "theorem1": _cmd_theorem1,
    "frequency-scan": _cmd_frequency_scan,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--noise-std-x", dest="noise_std_x", type=float)
    common.add_argument("--noise-std-y", dest="noise_std_y", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--n", type=int, help="samples (simulate: retained steps)")
    common.add_argument("--burn-in", dest="burn_in", type=int)
    common.add_argument("--tol", type=float, help="series truncation tolerance")
    common.add_argument("--nu-grid", dest="nu_grid",
                        help="grid size M (nu = k/M) or comma-separated frequencies")
    common.add_argument("--T", type=int, nargs="+", help="window half-widths")
    common.add_argument("--out", help="output file")
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--kernel", help="theorem1: JSON file {offset, re, im} for g")
    common.add_argument("--x", type=float, help="theorem1: intervention level")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the generation timestamp from output files")

    parser = _Parser(prog="coarsecausal", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"coarsecausal: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
