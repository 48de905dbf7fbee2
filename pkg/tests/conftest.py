import pytest

from odeen import dataset as ds
from odeen import semantics


@pytest.fixture(scope="session")
def matrix():
    """The full semantic matrix, built once per test session."""
    m = semantics.build_matrix()
    m.classes()  # warm the partition; nearly every consumer needs it
    return m


@pytest.fixture(scope="session")
def matrix_file(matrix, tmp_path_factory):
    path = tmp_path_factory.mktemp("matrix") / "matrix.bin"
    matrix.save(path)
    return path


@pytest.fixture(scope="session")
def small_split(matrix):
    """A miniature but fully-valid split for solver and metrics tests."""
    cfg = ds.SplitConfig(n=60, m=100, s=15, k=32, l=120, seed=11)
    return ds.generate_split(cfg, matrix)
