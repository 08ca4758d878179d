import os

import numpy as np
import pytest

from cadgym import fixtures
from cadgym.env import EnvConfig, TargetContext

# keep test-time reward computation light; correctness suites set their own
FAST_ENV = dict(cd_cloud_size=256, emd_cloud_size=64)


@pytest.fixture(scope="session")
def cube_solid():
    return fixtures.unit_cube()


@pytest.fixture(scope="session")
def cube_ctx(cube_solid):
    return TargetContext(cube_solid, target_id="cube")


@pytest.fixture(scope="session")
def cylinder_ctx():
    return TargetContext(fixtures.full_cylinder(), target_id="cylinder")


@pytest.fixture()
def fast_env_config():
    return EnvConfig(**FAST_ENV)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A small deterministic corpus, generated once per session and cached."""
    from cadgym import dataset as ds
    cache = os.path.join(os.path.dirname(__file__), "_cache")
    os.makedirs(cache, exist_ok=True)
    path = os.path.join(cache, "corpus-seed11-n12.cadset")
    if os.path.exists(path):
        try:
            return ds.load(path)
        except Exception:
            os.remove(path)
    records = ds.generate(12, seed=11)
    ds.save(records, path)
    return records
