from __future__ import annotations

from typing import TYPE_CHECKING

from modules.enums import Group

if TYPE_CHECKING:
    from argparse import ArgumentParser, Namespace

_GROUP_NAMES = {
    "u": Group.U,
    "so": Group.SO_EVEN,
    "so_even": Group.SO_EVEN,
    "usp": Group.USP,
}


def error(parser: ArgumentParser, msg: str):
    # argparse exits with status 2, the usage exit code
    parser.error(msg)


def show_help(parser: ArgumentParser, command_parsers: dict[str, ArgumentParser], args: Namespace):
    if args.command in command_parsers:
        command_parsers[args.command].print_help()
    else:
        parser.print_help()


def parse_group(text: str) -> Group:
    try:
        return _GROUP_NAMES[text.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown group {text!r} (expected U, SO or USp)") from None


def parse_grid(text: str) -> list[float]:
    """Comma separated, strictly ascending positive candidates, e.g. `0.5,1,2,4`."""
    grid = [float(item) for item in text.split(",") if item.strip()]
    if not grid:
        raise ValueError("empty grid")
    if any(c <= 0 for c in grid):
        raise ValueError("grid values must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly ascending")
    return grid
