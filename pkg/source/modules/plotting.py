"""gnuplot scripts that render the CSV tables written by `compare`; nothing is recomputed."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from pathlib import Path

_HEADER = """set datafile separator ','
set key top right
set xlabel '{xlabel}'
set ylabel 'density'
set terminal pngcairo size 900,600
"""


def _plot_block(output: str, title: str, table: str, columns: list[tuple[int, str]]) -> str:
    curves = ", \\\n     ".join(
        f"'{table}' using 1:{col} skip 1 with steps title '{name}'" for col, name in columns
    )
    return f"set output '{output}'\nset title '{title}'\nplot {curves}\n"


def comparison_script(label: str, histogram_csv: Path, split_csv: Path, excised: bool = False) -> str:
    columns = [(2, "zeros"), (3, "SO(2N) lowest phase")]
    if excised:
        columns.append((4, "excised SO(2N)"))
    return (
        _HEADER.format(xlabel="normalized height")
        + _plot_block(f"{label}_zeros_vs_eigenphases.png", f"{label}: lowest zeros", histogram_csv.name, columns)
        + _plot_block(
            f"{label}_small_vs_large.png",
            f"{label}: small vs large conductor",
            split_csv.name,
            [(2, "small D"), (3, "large D")],
        )
    )


def write_script(path: Path, script: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(script, encoding="utf-8")
    return path
