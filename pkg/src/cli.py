import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from walls.errors import InputError, NumericalFailure

from .runner import COMMAND_PARAMS, Command, OutputFormat, ParamKind, RunConfig, dispatch, resolve_params

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wall-lab", description="Quantum walls on the half line.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug.")
    commands = parser.add_subparsers(dest="command", required=True)
    for command, specs in COMMAND_PARAMS.items():
        sub = commands.add_parser(command.value, allow_abbrev=False)
        for key, spec in specs.items():
            sub.add_argument(f"--{key}", dest=f"param:{key}", metavar="VALUE")
            if spec.sweepable and spec.kind is not ParamKind.FLOATS:
                sub.add_argument(f"--{key}-list", dest=f"list:{key}", metavar="V1,V2,...")
        sub.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.CSV.value)
        sub.add_argument("--out", type=Path, help="Write the table here instead of stdout.")
        sub.add_argument("--hbar", type=float, default=1.0)
        sub.add_argument("--mass", type=float, default=1.0)
        sub.add_argument("--workers", type=int, default=1, help="Threads for sweep points; output order is fixed.")
    return parser


def _raw_params(args: argparse.Namespace) -> dict[str, object]:
    raw: dict[str, object] = {}
    for dest, value in vars(args).items():
        if value is None or ":" not in dest:
            continue
        source, key = dest.split(":", 1)
        if key in raw:
            raise InputError(f"--{key} given both as a value and as a list", operation="run")
        raw[key] = value.split(",") if source == "list" else value
    return raw


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK

    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="[%(module)-12s] %(message)s", stream=sys.stderr)

    try:
        command = Command(args.command)
        config = RunConfig(
            command=command,
            format=OutputFormat(args.format),
            hbar=args.hbar,
            mass=args.mass,
            params=resolve_params(command, _raw_params(args)),
        )
        if args.workers < 1:
            raise InputError(f"--workers must be at least 1, got {args.workers}", operation="run")
        table = dispatch(config, workers=args.workers)
    except (InputError, ValidationError) as e:
        print(f"wall-lab: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as e:
        print(f"wall-lab: {e}", file=sys.stderr)
        return EXIT_NUMERICAL

    text = table.render()
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
        logger.info("wrote %d rows to %s", len(table.rows), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
