"""Command-line front end: ``eraser-sim {run,sweep,verify,sample}``.

Scenario files are flat ``key = value`` text with ``#`` comments.  Keys:
``scheme``, ``t``, ``t_bs``, ``t1``, ``t2``, ``m``, ``samples``, ``seed``.
For ``sweep`` any numeric key may hold a list, written either as
``0, 0.5, 1`` or as ``start:stop:num`` (inclusive, evenly spaced).

Exit codes: 0 success, 1 usage or IO error, 2 degenerate configuration,
3 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence, TextIO

import numpy as np

from . import experiments, verification
from .correlations import sample_events, visibility_from_counts
from .serialize import dumps, fmt17

EXIT_OK, EXIT_ERROR, EXIT_DEGENERATE, EXIT_VERIFY = 0, 1, 2, 3

FAULT_PERTURBATION = 1e-3

_KEYMAP = {"scheme": "scheme", "t": "t", "t_bs": "t_bs", "t1": "t1", "t2": "t2", "m": "M",
           "samples": "mc_samples", "seed": "seed"}
_INT_KEYS = {"mc_samples", "seed"}


class CliError(Exception):
    """Usage or input problem; reported on stderr with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _parse_values(key: str, raw: str) -> list:
    raw = raw.strip()
    if not raw:
        return []
    try:
        if ":" in raw:
            start, stop, num = raw.split(":")
            if int(num) < 1:
                return []
            values = [float(x) for x in np.linspace(float(start), float(stop), int(num))]
        else:
            values = [float(x) for x in raw.split(",")]
    except ValueError:
        raise CliError(f"bad value for {key!r}: {raw!r}") from None
    if key in _INT_KEYS:
        if any(v != int(v) for v in values):
            raise CliError(f"{key!r} must be an integer")
        values = [int(v) for v in values]
    return values


def parse_scenario(text: str) -> tuple[dict, dict]:
    """Split a scenario file into ``(fixed, grid)`` ScenarioConfig keywords.

    ``fixed`` holds single-valued keys, ``grid`` the keys given as lists.
    """
    fixed, grid = {}, {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"line {n}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in _KEYMAP:
            raise CliError(f"line {n}: unknown key {key!r}")
        field = _KEYMAP[key]
        if field in fixed or field in grid:
            raise CliError(f"line {n}: duplicate key {key!r}")
        if field == "scheme":
            fixed[field] = value
            continue
        values = _parse_values(field, value)
        is_list = ":" in value or "," in value
        if is_list:
            grid[field] = values
        elif values:
            fixed[field] = values[0]
        else:
            raise CliError(f"line {n}: empty value for {key!r}")
    return fixed, grid


def _read_config(path: Optional[str]) -> tuple[dict, dict]:
    if path is None:
        raise CliError("--config is required")
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_scenario(fh.read())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _apply_overrides(kw: dict, args) -> dict:
    kw = dict(kw)
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.samples is not None:
        kw["mc_samples"] = args.samples
    return kw


def _build(kw: dict) -> experiments.ScenarioConfig:
    try:
        return experiments.ScenarioConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc)) from None


def _emit(text: str, out: Optional[str], stdout: TextIO) -> None:
    if out is None:
        stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror or exc}") from None


def _single_config(args) -> experiments.ScenarioConfig:
    fixed, grid = _read_config(args.config)
    if grid:
        raise CliError(f"list values ({', '.join(grid)}) are only allowed with 'sweep'")
    return _build(_apply_overrides(fixed, args))


def cmd_run(args, stdout: TextIO) -> int:
    cfg = _single_config(args)
    report = experiments.run(cfg)
    fmt = args.format or "json"
    text = report.to_json() if fmt == "json" else experiments.sweep_csv([report])
    _emit(text, args.out, stdout)
    return EXIT_DEGENERATE if report.degenerate else EXIT_OK


def cmd_sweep(args, stdout: TextIO) -> int:
    fixed, grid = _read_config(args.config)
    fixed = _apply_overrides(fixed, args)
    for key in ("seed", "mc_samples"):
        if key in fixed:
            grid.pop(key, None)
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise CliError("empty parameter grid")
    base = _build({k: v for k, v in fixed.items() if k != "scheme"} | {"scheme": "conventional"})
    scheme = fixed.get("scheme", "conventional")
    try:
        reports = experiments.sweep(scheme, grid, base)
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc)) from None
    fmt = args.format or "csv"
    if fmt == "csv":
        text = experiments.sweep_csv(reports)
    else:
        text = dumps([r.to_dict() for r in reports])
    _emit(text, args.out, stdout)
    return EXIT_OK


def cmd_verify(args, stdout: TextIO) -> int:
    if args.format == "csv":
        raise CliError("verify writes json only")
    try:
        checks = verification.select(args.only)
    except KeyError as exc:
        raise CliError(exc.args[0]) from None
    perturb = FAULT_PERTURBATION if args.inject_fault else 0.0
    results = [c.run(perturb) for c in checks]
    stdout.write(verification.format_table(results) + "\n")
    if args.out is not None:
        _emit(dumps({"passed": all(r.passed for r in results), "checks": [r.to_dict() for r in results]}),
              args.out, stdout)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_sample(args, stdout: TextIO) -> int:
    cfg = _single_config(args)
    if cfg.mc_samples < 1:
        raise CliError("sample needs samples >= 1 (scenario key 'samples' or --samples)")
    try:
        rho, outcome = experiments.measured_state(cfg)
    except experiments.DegenerateConfiguration as exc:
        sys.stderr.write(f"degenerate configuration: {exc}\n")
        return EXIT_DEGENERATE
    counts = sample_events(rho, cfg.mc_samples, cfg.seed)
    est, se = visibility_from_counts(counts, outcome=outcome)
    fmt = args.format or "csv"
    if fmt == "csv":
        text = counts.to_csv()
    else:
        text = dumps({
            "config": cfg.to_dict(),
            "outcome": outcome or "none",
            "visibility": est,
            "stderr": se,
            "outcomes": list(counts.outcomes),
            "lost": [int(x) for x in counts.lost],
            "total": counts.total,
        })
    _emit(text, args.out, stdout)
    sys.stderr.write(f"fitted visibility {fmt17(est)} +/- {fmt17(se)} ({outcome or 'all events'})\n")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "sample": cmd_sample}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eraser-sim", description="Two-atom quantum eraser simulator.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, helptext in (
        ("run", "run one scenario and write its report"),
        ("sweep", "run a parameter grid and write one row per point"),
        ("verify", "run the built-in grid audits"),
        ("sample", "draw Monte Carlo coincidence events"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", metavar="PATH", help="scenario file")
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--seed", type=int, metavar="N")
        p.add_argument("--samples", type=int, metavar="N")
        if name == "verify":
            p.add_argument("--only", metavar="AUDIT_ID", help="run one check by id")
            p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise CliError("missing subcommand (run, sweep, verify, sample)")
        return COMMANDS[args.command](args, stdout)
    except CliError as exc:
        sys.stderr.write(f"eraser-sim: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
