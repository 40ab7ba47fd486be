from __future__ import annotations

from pathlib import Path

import pytest
from modules._platform import set_config_override
from modules.lfunc import calibrate_epsilon
from modules.newforms import get_newform

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def config_file(tmp_path):
    """Every test reads and writes its own settings file."""
    path = tmp_path / "twist-zeros.ini"
    set_config_override(path)
    yield path
    set_config_override(None)


@pytest.fixture(scope="session")
def calibrated():
    """Newforms with their root number calibrated, shared across the session."""
    forms = {}

    def get(label: str):
        if label not in forms:
            form = get_newform(label)
            calibrate_epsilon(form)
            forms[label] = form
        return forms[label]

    return get


@pytest.fixture
def cfg(tmp_path):
    from commands import RunConfig

    return RunConfig.from_settings(cache_dir=tmp_path / "cache", jobs=1, seed=7)
