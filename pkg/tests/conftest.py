import uuid

import numpy as np
import pytest

from bplab.bathymetry import build_bathymetry
from bplab.spectral import Grid


@pytest.fixture(autouse=True)
def _isolate_output_dir(tmp_path, monkeypatch):
    """Isolate scenario outputs per test.

    Sets BPLAB_OUTPUT_DIR to a unique temporary directory for each test.
    Tests that pass an explicit output directory override this.
    """
    unique_dir = tmp_path / f"bplab_out_{uuid.uuid4().hex}"
    unique_dir.mkdir(parents=True, exist_ok=True)
    monkeypatch.setenv("BPLAB_OUTPUT_DIR", str(unique_dir))
    yield


@pytest.fixture
def grid1():
    return Grid(d=1, n=32, L=2 * np.pi)


@pytest.fixture
def grid2():
    return Grid(d=2, n=16, L=2 * np.pi, gamma=0.7)


@pytest.fixture
def bump1(grid1):
    return build_bathymetry({"name": "gaussian_bump", "width": 1.0, "height": 1.0}, 0.5, grid1)


@pytest.fixture
def bump2(grid2):
    return build_bathymetry({"name": "gaussian_bump", "width": 1.0, "height": 1.0}, 0.5, grid2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def smooth_field(grid, rng, components=None, delta=0.05):
    """Random field with a decaying spectrum."""
    shape = grid.shape if components is None else (components,) + grid.shape
    return grid.mollify(rng.standard_normal(shape), delta, -2)
