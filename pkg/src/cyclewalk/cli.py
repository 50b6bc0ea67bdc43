"""
``cyclewalk`` command line: one subcommand per dataset, plus ``verify``.

Exit codes: 0 success, 1 invalid input, 2 runtime or numerical failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cyclewalk import __version__, experiments
from cyclewalk.errors import CycleWalkError, InvalidInputError
from cyclewalk.experiments import Table, parse_values
from cyclewalk.states import FAMILIES

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

# per-subcommand defaults; anything left unset on the command line and in
# the config file falls back to these
DEFAULTS = {
    "evolve": {"n": "200", "sigma0": "10", "family": "gaussian", "center": 0, "times": "0,tau/2,tau"},
    "fig2": {"n": "4:200"},
    "fig3": {"n": "200", "sigma0": "1,5,10", "family": "gaussian", "samples": 2001},
    "fig4a": {"n": "100", "sigma0": "5:10", "family": "gaussian"},
    "fig4b": {"sigma0": "5:10", "family": "gaussian", "ratios": "10:100"},
    "fig5": {"n": "200", "sigma0": "10", "families": ",".join(experiments.FIG5_FAMILIES)},
    "dynamic": {"small_n": 20, "outer_n": 60, "family": "gaussian", "laps": 0,
                "probes_per_stage": 50, "convention": "laplacian"},
    "verify": {},
}
COMMON = {"dt_divisor": 200.0, "full_horizon": False, "jobs": 1}


@dataclass
class ExperimentConfig:
    """Resolved settings for one run: flags over config file over defaults."""

    experiment: str
    params: dict = field(default_factory=dict)
    out: str | None = None

    def get(self, key, default=None):
        value = self.params.get(key)
        return default if value is None else value

    def describe(self) -> str:
        # worker count never changes the rows, so it stays out of the record
        items = " ".join(
            f"{k}={self.params[k]}" for k in sorted(self.params) if k != "jobs" and self.params[k] is not None
        )
        return f"# params experiment={self.experiment} {items} version={__version__}".rstrip()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidInputError(message)


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise InvalidInputError(f"not a boolean: {value!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--n", help="cycle size, list or lo:hi[:step] range")
    common.add_argument("--sigma0", help="standard deviation(s) of the initial profile")
    common.add_argument("--family", choices=FAMILIES)
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--dt-divisor", type=float, help="coarse scan samples per transfer time")
    common.add_argument("--full-horizon", action="store_const", const=True,
                        help="track revivals up to 10^4 tau instead of 10^2 tau")
    common.add_argument("--config", help="flat key = value file; flags win")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")

    parser = _Parser(prog="cyclewalk", description="Continuous-time quantum walks on cycles.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evolve", parents=[common], help="probability profiles at probe times")
    p.add_argument("--center", type=int)
    p.add_argument("--times", help="comma list; tokens like tau, tau/2, 2*tau allowed")

    sub.add_parser("fig2", parents=[common], help="one-vertex transfer versus n")

    p = sub.add_parser("fig3", parents=[common], help="gaussian fidelity traces")
    p.add_argument("--t-max", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("fig4a", parents=[common], help="revival peaks over long times")
    p.add_argument("--max-multiple", type=int, help="explicit horizon in units of tau")

    p = sub.add_parser("fig4b", parents=[common], help="fidelity at tau versus n/sigma0")
    p.add_argument("--ratios", help="n/sigma0 values, list or range")

    p = sub.add_parser("fig5", parents=[common], help="distribution family comparison")
    p.add_argument("--families", help="comma list of families")

    p = sub.add_parser("dynamic", parents=[common], help="three-stage relay between two cycles")
    p.add_argument("--small-n", type=int)
    p.add_argument("--outer-n", type=int)
    p.add_argument("--laps", type=int)
    p.add_argument("--probes-per-stage", type=int)
    p.add_argument("--convention", choices=("laplacian", "adjacency"))
    p.add_argument("--write-stages", help="directory for stage1..stage3 edge lists")

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    p.add_argument("--only", help="comma list of criterion numbers")
    return parser


def resolve(args: argparse.Namespace) -> ExperimentConfig:
    params = dict(COMMON)
    params.update(DEFAULTS[args.command])
    if args.config:
        params.update(read_config(args.config))
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
    params.update(flags)
    return ExperimentConfig(args.command, params, params.pop("out", None))


def _single(value, cast, name):
    values = parse_values(value, cast)
    if len(values) != 1:
        raise InvalidInputError(f"--{name} takes a single value here, got {value!r}")
    return values[0]


def run_experiment(cfg: ExperimentConfig) -> Table:
    g = cfg.get
    dt = float(g("dt_divisor"))
    jobs = int(g("jobs"))
    if dt <= 0 or jobs < 1:
        raise InvalidInputError("--dt-divisor must be positive and --jobs at least 1")
    full = _bool(g("full_horizon"))
    name = cfg.experiment
    if name == "evolve":
        return experiments.evolve(
            _single(g("n"), int, "n"), g("family"), _single(g("sigma0"), float, "sigma0"),
            int(g("center")), g("times"), dt,
        )
    if name == "fig2":
        return experiments.fig2(parse_values(g("n"), int), dt, jobs)
    if name == "fig3":
        t_max = g("t_max")
        return experiments.fig3(
            _single(g("n"), int, "n"), parse_values(g("sigma0")), g("family"),
            None if t_max is None else float(t_max), int(g("samples")), dt,
        )
    if name == "fig4a":
        mm = g("max_multiple")
        return experiments.fig4a(
            _single(g("n"), int, "n"), parse_values(g("sigma0")), g("family"),
            None if mm is None else int(mm), full, dt, jobs,
        )
    if name == "fig4b":
        if g("n") is not None:
            raise InvalidInputError("fig4b derives n from --ratios and --sigma0; drop --n")
        return experiments.fig4b(parse_values(g("ratios"), int), parse_values(g("sigma0")), g("family"), dt, jobs)
    if name == "fig5":
        fams = [f.strip() for f in str(g("families")).split(",") if f.strip()]
        return experiments.fig5(_single(g("n"), int, "n"), _single(g("sigma0"), float, "sigma0"), fams, dt, jobs)
    if name == "dynamic":
        sigma0 = g("sigma0")
        return experiments.dynamic(
            int(g("small_n")), int(g("outer_n")),
            None if sigma0 is None else _single(sigma0, float, "sigma0"),
            g("family"), int(g("laps")), int(g("probes_per_stage")), g("convention"),
            g("write_stages"),
        )
    raise InvalidInputError(f"unknown experiment {name!r}")


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


def render_csv(table: Table, cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    buf.write(cfg.describe() + "\n")
    for note in table.notes:
        buf.write(f"# {note}\n")
    for row in table.rows:
        writer.writerow([_cell(v) for v in row])
    for note in table.trailer:
        buf.write(f"# {note}\n")
    return buf.getvalue()


def write_output(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _verify(cfg: ExperimentConfig) -> int:
    from cyclewalk import acceptance

    only = cfg.get("only")
    numbers = None if only is None else parse_values(only, int)
    lines, failed = [], 0
    for res in acceptance.run_all(numbers, full_horizon=_bool(cfg.get("full_horizon"))):
        lines.append(res.line())
        print(res.line(), flush=True)
        failed += not res.passed
    summary = f"{len(lines) - failed}/{len(lines)} criteria passed"
    print(summary)
    if cfg.out:
        write_output("\n".join(lines + [summary]) + "\n", cfg.out)
    return EXIT_RUNTIME if failed else EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        if cfg.experiment == "verify":
            return _verify(cfg)
        table = run_experiment(cfg)
        write_output(render_csv(table, cfg), cfg.out)
        return EXIT_OK
    except SystemExit as exc:
        # --help and --version
        return int(exc.code or 0)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, TypeError) as exc:
        print(f"error: invalid value: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CycleWalkError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        msg = str(exc)
        if getattr(exc, "filename", None) and str(exc.filename) not in msg:
            msg = f"{exc.filename}: {msg}"
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
