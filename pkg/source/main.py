from __future__ import annotations

import logging
import sys
from argparse import ArgumentParser
from pathlib import Path

from modules import argument_parsing as ap
from modules._platform import get_cache_path, get_platform, set_config_override
from modules.enums import CentralValueMethod, CutoffMode, ExitCode
from modules.errors import exit_code_for
from semver import Version

version = Version(0, 1, 0)

_format = "[%(asctime)s:%(levelname)s] %(message)s"
logger = logging.getLogger(__name__)


def setup_logging(debug: bool = False):
    cache_path = Path(get_cache_path())
    if not cache_path.is_dir():
        cache_path.mkdir(parents=True)
    logging.basicConfig(
        format=_format,
        handlers=[
            logging.FileHandler(cache_path.absolute() / "twist-zeros.log"),
            logging.StreamHandler(stream=sys.stdout),
        ],
    )
    logging.root.setLevel(logging.DEBUG if debug else logging.INFO)


# Setup exception handling
def handle_exception(exc_type, exc_value, exc_traceback):
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return

    logger.error(f"{get_platform()} - twist-zeros {version}", exc_info=(exc_type, exc_value, exc_traceback))


sys.excepthook = handle_exception


def add_help(parser: ArgumentParser):
    parser.add_argument(
        parser.prefix_chars + "h",
        parser.prefix_chars * 2 + "help",
        action="store_true",
        help="show this help message and exit",
    )


def add_label(parser: ArgumentParser):
    parser.add_argument("label", help="Newform label, e.g. 11.2.a.a or 3.8.a.a.")
    parser.add_argument("--x-max", "-X", type=float, default=10_000.0, help="Discriminant bound X.")
    parser.add_argument("--coefficients", type=Path, help="CSV file (n,re,im) replacing the coefficient generator.")


def build_parser() -> tuple[ArgumentParser, dict[str, ArgumentParser]]:
    parser = ArgumentParser(description=f"twist-zeros ({version})", add_help=False)
    add_help(parser)

    parser.add_argument("-debug", help="Enable debug logging.", action="store_true")
    parser.add_argument("--config", type=Path, help="Settings file to use instead of the local or user one.")
    parser.add_argument("--jobs", "-j", type=int, help="Worker threads (0 = three quarters of the CPUs).")
    parser.add_argument("--cache-dir", type=Path, help="Directory for coefficient, zero and central value caches.")
    parser.add_argument("--seed", type=int, help="Master seed of the random matrix streams.")
    parser.add_argument("--tolerance", type=float, help="Truncation tolerance of the approximate functional equation.")

    subparsers = parser.add_subparsers(dest="command")
    commands: dict[str, ArgumentParser] = {}

    p = subparsers.add_parser("sample-ensemble", help="Draw Haar random matrices.", add_help=False)
    p.add_argument("group", help="U, SO or USp.")
    p.add_argument("n", type=int, help="Matrix size (even for SO and USp).")
    p.add_argument("--count", type=int, default=1000, help="Number of draws.")
    p.add_argument("--out", type=Path, default=Path("ensemble.csv"))
    p.add_argument("--full-phases", action="store_true", help="Also write every eigenphase of every draw.")
    commands["sample-ensemble"] = p

    p = subparsers.add_parser("compute-zeros", help="Lowest zeros of every twist in a family.", add_help=False)
    add_label(p)
    p.add_argument("--count", type=int, help="Zeros per twist.")
    p.add_argument("--out", type=Path)
    commands["compute-zeros"] = p

    p = subparsers.add_parser("central-values", help="Central values of every twist in a family.", add_help=False)
    add_label(p)
    p.add_argument(
        "--method",
        type=CentralValueMethod,
        choices=list(CentralValueMethod),
        default=CentralValueMethod.DIRECT,
        metavar="{direct,kz,both}",
    )
    p.add_argument("--out", type=Path)
    commands["central-values"] = p

    p = subparsers.add_parser("estimate-cutoff", help="Grid search for the excision constant c_std.", add_help=False)
    add_label(p)
    p.add_argument("--grid", help="Comma separated ascending candidates.")
    p.add_argument("--mode", type=CutoffMode, choices=list(CutoffMode), metavar="{zeros_vs_excised,values_vs_charpoly}")
    p.add_argument("--matrices", type=int, help="Accepted matrices per candidate.")
    p.add_argument("--out", type=Path)
    commands["estimate-cutoff"] = p

    p = subparsers.add_parser("compare", help="Zeros against the random matrix model.", add_help=False)
    add_label(p)
    p.add_argument("--cutoff", type=float, help="Add the excised SO(2N) model with this c_std.")
    p.add_argument("--matrices", type=int, help="Random matrices to draw.")
    p.add_argument("--out-dir", type=Path, default=Path("."))
    commands["compare"] = p

    p = subparsers.add_parser("calibrate", help="Root number and kappa_f of one form.", add_help=False)
    add_label(p)
    commands["calibrate"] = p

    for command_parser in commands.values():
        add_help(command_parser)
    return parser, commands


def run(args) -> None:
    # settings are read only after --config is applied
    from commands import (
        RunConfig,
        cmd_calibrate,
        cmd_central_values,
        cmd_compare,
        cmd_compute_zeros,
        cmd_estimate_cutoff,
        cmd_sample_ensemble,
    )
    from modules import settings

    overrides = {
        "seed": args.seed,
        "jobs": args.jobs,
        "cache_dir": args.cache_dir,
        "afe_tolerance": args.tolerance,
        "zero_count": getattr(args, "count", None) if args.command == "compute-zeros" else None,
        "matrix_count": getattr(args, "matrices", None),
    }
    if getattr(args, "coefficients", None) is not None:
        overrides["coefficient_files"] = {args.label: args.coefficients}
    cfg = RunConfig.from_settings(**overrides)

    if args.command == "sample-ensemble":
        cmd_sample_ensemble(ap.parse_group(args.group), args.n, args.count, args.out, cfg, args.full_phases)
    elif args.command == "compute-zeros":
        cmd_compute_zeros(args.label, args.x_max, args.out or Path(f"{args.label}_zeros.csv"), cfg)
    elif args.command == "central-values":
        cmd_central_values(
            args.label, args.x_max, args.method, args.out or Path(f"{args.label}_central_values.csv"), cfg
        )
    elif args.command == "estimate-cutoff":
        grid = ap.parse_grid(args.grid) if args.grid else settings.get_cutoff_grid()
        mode = args.mode or settings.get_cutoff_mode()
        cmd_estimate_cutoff(
            args.label, args.x_max, grid, mode, args.out or Path(f"{args.label}_cutoff_{mode.value}.csv"), cfg
        )
    elif args.command == "compare":
        cmd_compare(args.label, args.x_max, args.out_dir, cfg, args.cutoff)
    elif args.command == "calibrate":
        cmd_calibrate(args.label, cfg, args.x_max)


def main(argv: list[str] | None = None) -> int:
    parser, commands = build_parser()

    args, unknown = parser.parse_known_args(argv)
    if unknown:
        ap.error(parser, "unrecognized arguments: " + " ".join(unknown))

    if args.help:
        ap.show_help(parser, commands, args)
        return ExitCode.OK
    if args.command is None:
        parser.print_help()
        return ExitCode.USAGE

    set_config_override(args.config)
    setup_logging(args.debug)

    try:
        run(args)
    except Exception as e:
        code = exit_code_for(e)
        if code == ExitCode.FAILURE:
            logger.exception(e)
        else:
            logger.error(f"{args.command}: {e}")
        return code
    return ExitCode.OK


if __name__ == "__main__":
    sys.exit(main())
