from pathlib import Path

from modules import settings
from modules.enums import CutoffMode


def test_defaults(config_file):
    assert settings.get_seed() == 20240501
    assert settings.get_afe_tolerance() == 1e-12
    assert settings.get_kz_tolerance() == 1e-4
    assert settings.get_derive_coefficients() is True
    assert settings.get_cutoff_grid() == list(settings.DEFAULT_CUTOFF_GRID)
    assert settings.get_cutoff_mode() is CutoffMode.ZEROS_VS_EXCISED
    assert settings.get_coefficient_file("13.2.e.a") is None
    assert settings.get_worker_thread_count() >= 1


def test_values_written_through_qsettings(config_file):
    qs = settings.get_settings()
    qs.setValue("seed", 99)
    qs.setValue("afe_tolerance", 1e-10)
    qs.setValue("cutoff_grid", [1.0, 2.0, 4.0])
    qs.setValue("coefficients/13.2.e.a", " /data/13.2.e.a.csv ")
    qs.sync()

    assert config_file.is_file()
    assert settings.get_seed() == 99
    assert settings.get_afe_tolerance() == 1e-10
    assert settings.get_cutoff_grid() == [1.0, 2.0, 4.0]
    assert settings.get_coefficient_file("13.2.e.a") == Path("/data/13.2.e.a.csv")


def test_hand_written_config_file(config_file):
    config_file.write_text(
        "[General]\nseed=5\ncutoff_grid=0.5, 1, 8\ncutoff_mode=values_vs_charpoly\njobs=3\ncache_dir=/tmp/tz\n"
        "kz_tolerance=0.001\nderive_coefficients=false\n"
    )
    assert settings.get_seed() == 5
    assert settings.get_cutoff_grid() == [0.5, 1.0, 8.0]
    assert settings.get_cutoff_mode() is CutoffMode.VALUES_VS_CHARPOLY
    assert settings.get_worker_thread_count() == 3
    assert settings.get_cache_dir() == Path("/tmp/tz")
    assert settings.get_kz_tolerance() == 0.001
    assert settings.get_derive_coefficients() is False


def test_zero_jobs_means_the_cpu_default(config_file):
    config_file.write_text("[General]\njobs=0\n")
    assert settings.get_worker_thread_count() == settings.get_default_worker_thread_count()
