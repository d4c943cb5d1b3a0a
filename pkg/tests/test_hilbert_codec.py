import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hilbertp2p.errors import ConfigError, DomainError
from hilbertp2p.hilbert_codec import (
    CurveConfig,
    hilbert_decode,
    hilbert_decode_many,
    hilbert_encode,
    hilbert_encode_many,
    morton_decode,
    morton_decode_many,
    morton_encode,
    morton_encode_many,
)
from oracles import hilbert_curve_recursive


def all_cells(cfg):
    return list(itertools.product(range(cfg.side), repeat=cfg.dims))


def test_origin_is_index_zero():
    cfg = CurveConfig(2, 1)
    assert hilbert_encode((0, 0), cfg) == 0
    assert hilbert_decode(0, cfg) == (0, 0)


def test_order1_matches_recursive_oracle():
    cfg = CurveConfig(2, 1)
    walk = [hilbert_decode(i, cfg) for i in range(4)]
    assert walk == hilbert_curve_recursive(1)
    for a, b in zip(walk, walk[1:]):
        assert sum(abs(u - v) for u, v in zip(a, b)) == 1


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_visitation_order_matches_oracle(order):
    cfg = CurveConfig(2, order)
    assert [hilbert_decode(i, cfg) for i in range(cfg.n_cells)] == hilbert_curve_recursive(order)


@pytest.mark.parametrize("dims,order", [(2, 3), (3, 2), (3, 3), (1, 5)])
def test_hilbert_round_trip_exhaustive(dims, order):
    cfg = CurveConfig(dims, order)
    for c in all_cells(cfg):
        assert hilbert_decode(hilbert_encode(c, cfg), cfg) == c


def test_unit_step_adjacency_d2_p2():
    cfg = CurveConfig(2, 2)
    for i in range(15):
        a, b = hilbert_decode(i, cfg), hilbert_decode(i + 1, cfg)
        assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def test_morton_closed_forms():
    cfg = CurveConfig(2, 1)
    assert morton_encode((1, 1), cfg) == 3
    assert morton_encode((1, 0), cfg) == 1
    assert morton_decode(3, cfg) == (1, 1)
    assert morton_decode(0, cfg) == (0, 0)


@pytest.mark.parametrize("dims,order", [(2, 4), (3, 3)])
def test_morton_round_trip_exhaustive(dims, order):
    cfg = CurveConfig(dims, order)
    for c in all_cells(cfg):
        assert morton_decode(morton_encode(c, cfg), cfg) == c


def test_morton_has_long_jumps():
    for order in (2, 3):
        cfg = CurveConfig(2, order)
        jumps = [
            sum(abs(u - v) for u, v in zip(morton_decode(i, cfg), morton_decode(i + 1, cfg)))
            for i in range(cfg.n_cells - 1)
        ]
        assert max(jumps) > 1


def test_nesting_order1_to_order2():
    coarse, fine = CurveConfig(2, 1), CurveConfig(2, 2)
    for c in all_cells(coarse):
        block = [(2 * c[0] + a, 2 * c[1] + b) for a in (0, 1) for b in (0, 1)]
        first = min(hilbert_encode(cell, fine) for cell in block)
        assert first // 4 == hilbert_encode(c, coarse)
        # the block is visited contiguously
        assert sorted(hilbert_encode(cell, fine) for cell in block) == list(range(first, first + 4))


@pytest.mark.parametrize("dims,order", [(2, 5), (3, 3), (3, 21), (2, 32)])
def test_vectorised_matches_scalar(dims, order):
    cfg = CurveConfig(dims, order)
    rng = np.random.default_rng(order)
    cells = rng.integers(0, cfg.side, size=(200, dims), dtype=np.uint64)
    h = hilbert_encode_many(cells, cfg)
    m = morton_encode_many(cells, cfg)
    assert h.dtype == np.uint64
    for cell, hi, mi in zip(cells, h, m):
        assert int(hi) == hilbert_encode(cell.tolist(), cfg)
        assert int(mi) == morton_encode(cell.tolist(), cfg)
    np.testing.assert_array_equal(hilbert_decode_many(h, cfg), cells)
    np.testing.assert_array_equal(morton_decode_many(m, cfg), cells)


def test_wide_index_uses_python_ints():
    cfg = CurveConfig(3, 42)
    cells = np.array([[2**42 - 1, 0, 17], [5, 2**41, 3]], dtype=object)
    h = hilbert_encode_many(cells, cfg)
    assert h.dtype == object
    assert max(int(v) for v in h) < 2**126
    assert [hilbert_encode(c, cfg) for c in cells.tolist()] == [int(v) for v in h]
    assert hilbert_decode_many(h, cfg).tolist() == cells.tolist()


def test_config_and_domain_errors():
    with pytest.raises(ConfigError):
        CurveConfig(3, 43)
    with pytest.raises(ConfigError):
        CurveConfig(0, 4)
    cfg = CurveConfig(2, 3)
    with pytest.raises(DomainError):
        hilbert_encode((8, 0), cfg)
    with pytest.raises(DomainError):
        hilbert_decode(64, cfg)
    with pytest.raises(DomainError):
        morton_encode((0, -1), cfg)
    with pytest.raises(DomainError):
        hilbert_encode_many(np.array([[0, 8]]), cfg)
    with pytest.raises(DomainError):
        hilbert_decode_many(np.array([64]), cfg)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 3), st.integers(1, 20), st.data())
def test_round_trip_property(dims, order, data):
    cfg = CurveConfig(dims, order)
    c = tuple(data.draw(st.integers(0, cfg.side - 1)) for _ in range(dims))
    i = hilbert_encode(c, cfg)
    assert 0 <= i < cfg.n_cells
    assert hilbert_decode(i, cfg) == c
    assert morton_decode(morton_encode(c, cfg), cfg) == c


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 3), st.integers(2, 12), st.data())
def test_consecutive_indices_are_adjacent(dims, order, data):
    cfg = CurveConfig(dims, order)
    i = data.draw(st.integers(0, cfg.n_cells - 2))
    a, b = hilbert_decode(i, cfg), hilbert_decode(i + 1, cfg)
    assert sum(abs(u - v) for u, v in zip(a, b)) == 1


def test_deterministic():
    cfg = CurveConfig(3, 10)
    rng = np.random.default_rng(1)
    cells = rng.integers(0, cfg.side, size=(500, 3))
    np.testing.assert_array_equal(hilbert_encode_many(cells, cfg), hilbert_encode_many(cells.copy(), cfg))
