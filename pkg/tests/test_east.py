import pytest

from kcmdrop.east import (EastConfig, ResourceError, east_legal_moves, east_min_barrier, east_simulate,
                          is_legal_east_path, log2_barrier)
from oracles import east_barrier_bottleneck


def test_legal_moves_examples():
    assert east_legal_moves(EastConfig.full(5)) == [1]
    assert east_legal_moves(EastConfig((0, 0, 1, 1))) == [1, 2, 3]
    assert east_legal_moves(EastConfig((0,))) == [1]
    assert east_legal_moves(EastConfig((1,))) == [1]


@pytest.mark.parametrize("M,want", [(1, 1), (3, 2), (7, 3)])
def test_barrier_examples(M, want):
    assert east_min_barrier(M) == want


@pytest.mark.parametrize("M", range(1, 10))
def test_barrier_matches_bottleneck_oracle(M):
    assert east_min_barrier(M) == east_barrier_bottleneck(M) == log2_barrier(M)


def test_barrier_witness_path():
    b, path = east_min_barrier(6, with_path=True)
    assert is_legal_east_path(path)
    assert path[0] == EastConfig.full(6) and path[-1].empty(6)
    assert max(c.n_empty for c in path) == b


def test_barrier_cap():
    with pytest.raises(ResourceError):
        east_min_barrier(20)


def test_illegal_path_rejected():
    assert not is_legal_east_path([EastConfig.full(3), EastConfig((1, 0, 1))])


def test_simulation_high_q_hits():
    runs = [east_simulate(4, 0.99, 1e4, seed=s) for s in range(100)]
    assert all(not r.censored and r.hit_time is not None for r in runs)
    assert all(r.max_empties >= 1 for r in runs)


def test_simulation_respects_barrier():
    # the first time site M empties, at least the barrier number of sites were empty on the way
    for s in range(30):
        r = east_simulate(7, 0.4, 1e6, seed=s)
        assert r.max_empties >= east_min_barrier(7)


def test_simulation_reproducible():
    a = east_simulate(5, 0.3, 100.0, seed=7)
    b = east_simulate(5, 0.3, 100.0, seed=7)
    assert a == b
