from __future__ import annotations

import os
from pathlib import Path

from modules._platform import get_cache_path, get_config_file
from modules.enums import CutoffMode
from PyQt5.QtCore import QSettings

DEFAULT_CUTOFF_GRID = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


def get_settings():
    file = get_config_file()
    if not file.parent.is_dir():
        file.parent.mkdir(parents=True)

    return QSettings(file.as_posix(), QSettings.Format.IniFormat)


def _float_list(raw) -> list[float]:
    # QSettings splits unquoted comma separated values into a string list
    if isinstance(raw, (list, tuple)):
        items = raw
    else:
        items = str(raw).split(",")
    return [float(item) for item in items if str(item).strip()]


def get_seed() -> int:
    return get_settings().value("seed", defaultValue=20240501, type=int)


def get_default_worker_thread_count() -> int:
    cpu_count = os.cpu_count()
    if cpu_count is None:
        return 4

    return round(max(cpu_count * 3 / 4, 1))


def get_worker_thread_count() -> int:
    v = get_settings().value("jobs", defaultValue=0, type=int)
    if v <= 0:
        return get_default_worker_thread_count()

    return v


def get_cache_dir() -> Path:
    v = get_settings().value("cache_dir", defaultValue="", type=str).strip()
    if not v:
        return Path(get_cache_path()) / "data"
    return Path(v).expanduser()


def get_afe_tolerance() -> float:
    return get_settings().value("afe_tolerance", defaultValue=1e-12, type=float)


def get_zero_tolerance() -> float:
    return get_settings().value("zero_tolerance", defaultValue=1e-8, type=float)


def get_z_imag_tolerance() -> float:
    return get_settings().value("z_imag_tolerance", defaultValue=1e-6, type=float)


def get_kz_tolerance() -> float:
    return get_settings().value("kz_tolerance", defaultValue=1e-4, type=float)


def get_max_terms() -> int:
    return get_settings().value("max_terms", defaultValue=4_000_000, type=int)


def get_t_max() -> float:
    return get_settings().value("t_max", defaultValue=20.0, type=float)


def get_zero_count() -> int:
    return get_settings().value("zero_count", defaultValue=1, type=int)


def get_matrix_count() -> int:
    return get_settings().value("matrix_count", defaultValue=10_000, type=int)


def get_excised_max_attempts() -> int:
    return get_settings().value("excised_max_attempts", defaultValue=1_000_000, type=int)


def get_eval_point_count() -> int:
    return get_settings().value("eval_point_count", defaultValue=40, type=int)


def get_cutoff_grid() -> list[float]:
    settings = get_settings()
    if settings.contains("cutoff_grid"):
        return _float_list(settings.value("cutoff_grid"))
    return list(DEFAULT_CUTOFF_GRID)


def get_cutoff_mode() -> CutoffMode:
    v = get_settings().value("cutoff_mode", defaultValue=CutoffMode.ZEROS_VS_EXCISED.value, type=str)
    return CutoffMode(v.strip())


def get_heart() -> int:
    return get_settings().value("heart", defaultValue=1, type=int)


def get_diamond() -> int:
    return get_settings().value("diamond", defaultValue=1, type=int)


def get_derive_coefficients() -> bool:
    """False requires a coefficient file for forms whose coefficients are otherwise derived from Eisenstein series."""
    return get_settings().value("derive_coefficients", defaultValue=True, type=bool)


def get_coefficient_file(label: str) -> Path | None:
    key = f"coefficients/{label}"
    v = get_settings().value(key, defaultValue="", type=str).strip()
    if not v:
        return None
    return Path(v).expanduser()

