from __future__ import annotations

import os
import platform
import sys
from functools import cache
from pathlib import Path

APP_NAME = "twist-zeros"

# (environment variable, fallback under the home directory) per platform and kind
_USER_DIRS = {
    "Linux": {"config": ("XDG_CONFIG_HOME", "~/.config"), "cache": ("XDG_CACHE_HOME", "~/.cache")},
    "macOS": {"config": (None, "~/Library/Application Support"), "cache": (None, "~/Library/Caches")},
    "Windows": {"config": ("LOCALAPPDATA", None), "cache": ("LOCALAPPDATA", None)},
}

_config_override: Path | None = None


@cache
def get_platform():
    if sys.platform.startswith("linux"):
        return "Linux"
    return {"darwin": "macOS", "win32": "Windows"}.get(sys.platform, sys.platform)


@cache
def get_platform_full():
    return f"{get_platform()} {platform.release()} (Python {platform.python_version()}, {platform.machine()})"


def _user_dir(kind: str) -> Path:
    """Per-user `kind` directory of the application; the working directory on unknown platforms."""
    variable, fallback = _USER_DIRS.get(get_platform(), {}).get(kind, (None, None))
    base = os.environ.get(variable, "").strip() if variable else ""
    if not base and fallback:
        base = os.path.expanduser(fallback)
    if not base:
        return Path.cwd()
    return Path(base) / APP_NAME


def local_config() -> Path:
    return Path.cwd() / f"{APP_NAME}.ini"


def user_config() -> Path:
    return _user_dir("config") / f"{APP_NAME}.ini"


def set_config_override(path: Path | None):
    global _config_override
    _config_override = path


def get_config_file() -> Path:
    if _config_override is not None:
        return _config_override
    if (local := local_config()).exists():
        return local
    return user_config()


@cache
def get_cache_path() -> Path:
    return _user_dir("cache")
