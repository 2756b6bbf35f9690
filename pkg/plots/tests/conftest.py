import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from plot_fixtures import synthetic_rows, write_csv  # noqa: E402


@pytest.fixture
def affine_csv(tmp_path):
    path = tmp_path / "affine.csv"
    write_csv(path, synthetic_rows())
    return path
