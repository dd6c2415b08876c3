import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def charging_config_path() -> Path:
    return CONFIG_DIR / "charging.cfg"


@pytest.fixture(scope="session")
def discharging_config_path() -> Path:
    return CONFIG_DIR / "discharging.cfg"
