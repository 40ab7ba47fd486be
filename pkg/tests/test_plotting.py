from pathlib import Path

from modules.plotting import comparison_script, write_script


def test_script_reads_the_written_tables(tmp_path):
    script = comparison_script("3.8.a.a", tmp_path / "3.8.a.a_histogram.csv", tmp_path / "3.8.a.a_split.csv")
    assert "set terminal pngcairo" in script
    assert "'3.8.a.a_histogram.csv' using 1:2" in script
    assert "'3.8.a.a_split.csv' using 1:3" in script
    assert "excised" not in script


def test_excised_curve(tmp_path):
    script = comparison_script("11.2.a.a", Path("h.csv"), Path("s.csv"), excised=True)
    assert "using 1:4 skip 1 with steps title 'excised SO(2N)'" in script
    path = write_script(tmp_path / "plots" / "11.2.a.a.gp", script)
    assert path.read_text() == script
