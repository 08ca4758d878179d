import os

import pytest


@pytest.fixture(scope="session")
def corpus_path():
    """Small corpus produced through the primary package's CLI surface."""
    cache = os.path.join(os.path.dirname(__file__), "_cache")
    os.makedirs(cache, exist_ok=True)
    path = os.path.join(cache, "bindings-corpus.cadset")
    if not os.path.exists(path):
        from cadgym.cli import main
        code = main(["gen-dataset", "--count", "6", "--out", path,
                     "--bins", "1.0,0.0,0.0", "--seed", "21"])
        assert code == 0
    return path


@pytest.fixture(scope="session")
def target_id(corpus_path):
    from cadgym import dataset as ds
    return ds.load(corpus_path, validate=False)[0].id


@pytest.fixture(scope="session")
def multi_command_target(corpus_path):
    """A target whose ground truth needs >= 2 commands (no one-shot win)."""
    from cadgym import dataset as ds
    records = ds.load(corpus_path, validate=False)
    multi = [r for r in records if len(r.profiles) >= 2]
    if not multi:
        pytest.skip("corpus has no multi-command record")
    return multi[0].id
