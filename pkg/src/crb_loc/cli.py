"""Command-line entry point: ``crb-loc {validate,bound,sweep,ml-mse}``.

Scenario files are JSON (see :mod:`crb_loc.scenario_file`); the literal path
``default`` selects the bundled four-beacon example. Results are CSV with 12
significant digits. Failures print one line ``error[CODE]: message`` on
stderr; exit status is 2 for unreadable input and 1 for anything else.
"""

import argparse
import csv
import io
import sys

from . import bias_models as bm
from .crb_core import CoeffMode, crb
from .errors import CrbLocError, ScenarioFormatError
from .experiments import DEFAULT_DELTAS, run_bound_sweep, run_ml_mse
from .geometry import validate
from .scenario_file import load

SWEEP_COLUMNS = ["delta", "kappa_over_sigma", "bound_exact", "bound_approx",
                 "bound_discarded", "bound_unbiased"]
ML_COLUMNS = SWEEP_COLUMNS + ["mse_informed", "mse_joint", "trials", "se_informed",
                              "se_joint", "failures"]


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.12g}"


def parse_deltas(text):
    """``0.1:0.1:1.0`` (inclusive range) or ``0.1,0.5,1``."""
    text = text.strip()
    try:
        if ":" in text:
            start, step, end = (float(x) for x in text.split(":"))
            if step <= 0 or end < start:
                raise ValueError
            n = int(round((end - start) / step)) + 1
            values = [round(start + i * step, 12) for i in range(n)]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad delta list {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("deltas must be positive")
    return values


def _write_csv(rows, header, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


class InvalidScenario(CrbLocError):
    code = "E_INVALID_SCENARIO"

    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = problems


def _load_valid(path):
    bundle = load(path)
    problems = validate(bundle.scenario)
    if problems:
        raise InvalidScenario(problems)
    return bundle


def cmd_validate(args):
    bundle = load(args.path)
    problems = validate(bundle.scenario)
    for p in problems:
        print(f"violation: {p}")
    if problems:
        return 1
    print("ok")
    return 0


def cmd_bound(args):
    bundle = _load_valid(args.path)
    scenario = bundle.scenario
    if args.delta is not None:
        scenario = scenario.with_bias_models(
            [bm.table_one_pdf(args.delta)] * scenario.biased_count)
    res = crb(scenario, CoeffMode(args.mode), bundle.quadrature)
    dim = scenario.dim
    header = [f"coeff_{label}" for label in scenario.labels]
    header += [f"crb_{i + 1}{j + 1}" for i in range(dim) for j in range(dim)]
    header.append("mse_bound")
    row = [fmt(a) for a in res.fim.coefficients]
    row += [fmt(v) for v in res.crb.ravel()]
    row.append(fmt(res.mse_bound))
    _write_csv([row], header, args.out)
    print(f"mse_bound {fmt(res.mse_bound)}", file=sys.stdout if args.out else sys.stderr)
    return 0


def _record_rows(records, columns):
    return [[fmt(getattr(r, c)) for c in columns] + [r.status] for r in records]


def cmd_sweep(args):
    bundle = _load_valid(args.path)
    records = run_bound_sweep(bundle.scenario, args.deltas, bundle.quadrature)
    _write_csv(_record_rows(records, SWEEP_COLUMNS), SWEEP_COLUMNS + ["status"], args.out)
    return 0 if all(r.status == "ok" for r in records) else 1


def cmd_mlmse(args):
    bundle = _load_valid(args.path)
    records = run_ml_mse(bundle.scenario, args.deltas, args.trials, args.seed,
                         bundle.estimator, bundle.quadrature)
    _write_csv(_record_rows(records, ML_COLUMNS), ML_COLUMNS + ["status"], args.out)
    return 0 if all(r.status == "ok" for r in records) else 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"error[E_USAGE]: {message}\n")


def build_parser():
    parser = _Parser(
        prog="crb-loc",
        description="Cramer-Rao bounds for range localization with random bias priors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bound", help="compute one CRB")
    p.add_argument("path")
    p.add_argument("--mode", choices=[m.value for m in CoeffMode], default="numeric")
    p.add_argument("--delta", type=float, default=None,
                   help="replace every bias prior by the measured shape with this bin width")
    p.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_bound)

    deltas_help = "bin widths as start:step:end or a comma list (default 0.1:0.1:1.0)"
    p = sub.add_parser("sweep", help="bound sweep over bin widths")
    p.add_argument("path")
    p.add_argument("--deltas", type=parse_deltas, default=list(DEFAULT_DELTAS), help=deltas_help)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ml-mse", help="Monte Carlo MSE of the ML estimators")
    p.add_argument("path")
    p.add_argument("--deltas", type=parse_deltas, default=list(DEFAULT_DELTAS), help=deltas_help)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mlmse)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except ScenarioFormatError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except (CrbLocError, ValueError) as exc:
        code = getattr(exc, "code", "E_VALUE")
        print(f"error[{code}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
