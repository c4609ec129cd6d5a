import numpy as np

from siegellab import rng


def test_streams_are_reproducible_and_distinct():
    a = rng.generator(7, "x", 3).random(5)
    assert np.array_equal(a, rng.generator(7, "x", 3).random(5))
    assert not np.array_equal(a, rng.generator(7, "y", 3).random(5))
    assert not np.array_equal(a, rng.generator(7, "x", 4).random(5))
    assert not np.array_equal(a, rng.generator(8, "x", 3).random(5))


def test_block_sizes():
    assert rng.block_sizes(10, 4) == [4, 4, 2]
    assert rng.block_sizes(8, 4) == [4, 4]
    assert rng.block_sizes(0, 4) == []


def _square(i):
    return i * i


def test_run_blocks_independent_of_workers():
    assert rng.run_blocks(_square, 6, 1) == rng.run_blocks(_square, 6, 2) == [0, 1, 4, 9, 16, 25]


def test_env_overrides_workers(monkeypatch):
    monkeypatch.setenv("SIEGELLAB_WORKERS", "3")
    assert rng.resolve_workers(1) == 3
    monkeypatch.delenv("SIEGELLAB_WORKERS")
    assert rng.resolve_workers(None) == 1
