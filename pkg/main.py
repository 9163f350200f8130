"""
REBits Experiment CLI

Runs kernel experiments and the op-count report, writing one record per
(kernel, scheme, parameter point) as CSV or JSON with the run configuration
echoed in the header.

Exit codes: 0 success, 1 usage error, 2 runtime or verification failure.
"""

import argparse
import asyncio
import csv
import io
import json
import sys
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from rebits import config
from rebits.errors import RebitsError, UsageError
from rebits.models import KERNELS, ORDERS, OUTPUT_FORMATS, ResultRecord, RunConfig
from rebits.softfp import FORMATS, RoundingMode
from harness import harness, verification_failed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

CSV_COLUMNS = [
    "kernel",
    "scheme",
    "format",
    "n",
    "seed",
    "policy",
    "order",
    "partitions",
    "value_hex",
    "value_dec",
    "abs_err",
    "rel_err",
    "fpadd",
    "fpmult",
    "fpdiv",
    "fpcomp",
    "move_fperr",
    "error",
    "note",
]

INT_COLUMNS = ["n", "seed", "partitions", "fpadd", "fpmult", "fpdiv", "fpcomp", "move_fperr"]

CONFIG_PREFIX = "# config="


class CliParser(argparse.ArgumentParser):
    """argparse with the usage-error exit code"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _csv_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> CliParser:
    parser = CliParser(prog="rebits", description="REBits accuracy and op-count experiments")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    run = commands.add_parser("run", help="Run one kernel under a list of schemes")
    run.add_argument("--kernel", default="sum", choices=KERNELS)
    run.add_argument("--scheme", default="naive,rebits,oracle", help="comma-separated, e.g. naive,rebits:fold=1000,oracle")
    run.add_argument("--format", default=config.DEFAULT_FORMAT, choices=sorted(FORMATS))
    run.add_argument("--n", type=int, default=None, help="vector length, particle count, DD calls or verification pairs")
    run.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    run.add_argument("--policy", default="none", help="default fold policy for a bare 'rebits' scheme")
    run.add_argument("--orders", default="all", help=f"'all' or comma-separated from {ORDERS}")
    run.add_argument("--partitions", type=int, default=config.DEFAULT_PARTITIONS)
    run.add_argument("--workers", type=int, default=config.DEFAULT_WORKERS, help="threads for parallel-sum partitions")
    run.add_argument("--paths", type=int, default=config.MC_PATHS)
    run.add_argument("--steps", type=int, default=config.INTEGRATION_STEPS)
    run.add_argument("--x-max", dest="x_max", type=float, default=config.INTEGRATION_X_MAX)
    run.add_argument("--samples", type=int, default=config.INTEGRATION_SAMPLES)
    run.add_argument("--rows", type=int, default=config.GRID_ROWS)
    run.add_argument("--cols", type=int, default=config.GRID_COLS)
    run.add_argument("--sweep", type=_int_list, default=config.NBODY_SWEEP)
    run.add_argument("--engine", default=config.REBITS_ENGINE, choices=["softfp", "host"])
    run.add_argument("--mode", default=None, choices=[m.value for m in RoundingMode])
    run.add_argument("--out", default="csv", choices=OUTPUT_FORMATS)
    run.add_argument("--output", default=None, help="output path (default: standard output)")

    table8 = commands.add_parser("table8", help="Measured vs published op counts per scheme")
    table8.add_argument("--format", default="f64", choices=sorted(FORMATS))
    table8.add_argument("--engine", default=config.REBITS_ENGINE, choices=["softfp", "host"])
    table8.add_argument("--out", default="csv", choices=OUTPUT_FORMATS)
    table8.add_argument("--output", default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command == "table8":
        return RunConfig(kernel="table8", schemes=[], format=args.format, engine=args.engine, out=args.out, output=args.output)
    orders = ORDERS if args.orders.strip().lower() == "all" else _csv_list(args.orders)
    return RunConfig(
        kernel=args.kernel,
        schemes=_csv_list(args.scheme),
        format=args.format,
        n=args.n,
        seed=args.seed,
        policy=args.policy,
        orders=orders,
        partitions=args.partitions,
        workers=args.workers,
        paths=args.paths,
        steps=args.steps,
        x_max=args.x_max,
        samples=args.samples,
        rows=args.rows,
        cols=args.cols,
        sweep=args.sweep,
        engine=args.engine,
        mode=args.mode,
        out=args.out,
        output=args.output,
    )


# ===== SERIALIZATION =====


def _num(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def record_row(record: ResultRecord) -> Dict[str, str]:
    """Flat CSV row; value_hex is the bit-exact form, value_dec is advisory"""
    row = {name: str(getattr(record, name)) for name in INT_COLUMNS}
    row.update(
        kernel=record.kernel,
        scheme=record.scheme,
        format=record.format,
        policy=record.policy,
        order=record.order,
        value_hex="" if record.value is None else float(record.value).hex(),
        value_dec=_num(record.value),
        abs_err=_num(record.abs_err),
        rel_err=_num(record.rel_err),
        error=record.error or "",
        note=record.note,
    )
    return row


def row_record(row: Dict[str, str]) -> ResultRecord:
    def optional_float(text: str) -> Optional[float]:
        return float(text) if text else None

    return ResultRecord(
        kernel=row["kernel"],
        scheme=row["scheme"],
        format=row["format"],
        policy=row["policy"],
        order=row["order"],
        value=float.fromhex(row["value_hex"]) if row["value_hex"] else None,
        abs_err=optional_float(row["abs_err"]),
        rel_err=optional_float(row["rel_err"]),
        error=row["error"] or None,
        note=row["note"],
        **{name: int(row[name]) for name in INT_COLUMNS},
    )


def render_csv(cfg: RunConfig, records: List[ResultRecord]) -> str:
    buffer = io.StringIO()
    buffer.write(CONFIG_PREFIX + cfg.model_dump_json() + "\n")
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(record_row(record))
    return buffer.getvalue()


def render_json(cfg: RunConfig, records: List[ResultRecord]) -> str:
    rows = []
    for record in records:
        row = record_row(record)
        for name in INT_COLUMNS:
            row[name] = int(row[name])
        rows.append(row)
    return json.dumps({"config": cfg.model_dump(), "records": rows}, indent=2) + "\n"


def render(cfg: RunConfig, records: List[ResultRecord]) -> str:
    return render_json(cfg, records) if cfg.out == "json" else render_csv(cfg, records)


def load_output(text: str) -> Tuple[RunConfig, List[ResultRecord]]:
    """Parse an emitted CSV or JSON artifact back into its config and records"""
    if text.lstrip().startswith("{"):
        document = json.loads(text)
        rows = [{name: str(value) for name, value in row.items()} for row in document["records"]]
        return RunConfig.model_validate(document["config"]), [row_record(row) for row in rows]

    header, _, body = text.partition("\n")
    if not header.startswith(CONFIG_PREFIX):
        raise ValueError("Missing config header line")
    cfg = RunConfig.model_validate_json(header[len(CONFIG_PREFIX) :])
    return cfg, [row_record(row) for row in csv.DictReader(io.StringIO(body))]


# ===== ENTRY POINT =====


def execute(cfg: RunConfig) -> Tuple[int, str]:
    """Run a validated configuration; returns (exit code, rendered output)"""
    records = asyncio.run(harness.run(cfg))
    output = render(cfg, records)
    if records and all(r.error for r in records):
        return EXIT_FAILURE, output
    if verification_failed(records):
        return EXIT_FAILURE, output
    return EXIT_OK, output


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ValidationError as exc:
        print(f"[CLI] Invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        status, output = execute(cfg)
        if cfg.output:
            with open(cfg.output, "w", encoding="utf-8", newline="") as handle:
                handle.write(output)
            config.trace("CLI", f"Wrote {cfg.out} output to {cfg.output}")
        else:
            sys.stdout.write(output)
    except UsageError as exc:
        print(f"[CLI] Usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RebitsError, OSError, ArithmeticError) as exc:
        print(f"[CLI] Run failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    if status != EXIT_OK:
        print("[CLI] Verification failed or every record carries an error", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
