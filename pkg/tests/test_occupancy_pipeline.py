import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hilbertp2p.errors import DomainError
from hilbertp2p.metrics import chamfer, emd
from hilbertp2p.occupancy_pipeline import (
    Frame,
    clip_range,
    compose_prediction,
    evaluate_prediction,
    make_pair,
    normalize_cardinality,
    preprocess,
    project_xy,
    rasterize,
    remove_ground,
    snap,
)
from oracles import bin_points_scalar, translating_square


def cloud(seed, n=40, d=3, scale=40.0):
    return np.random.default_rng(seed).uniform(-scale, scale, size=(n, d))


def test_project_xy():
    assert project_xy(Frame([[1.0, 2.0, 3.0]])).cloud.tolist() == [[1.0, 2.0]]
    assert project_xy(Frame(np.zeros((0, 3)))).cloud.shape == (0, 2)
    pc = cloud(0)
    assert np.array_equal(project_xy(Frame(pc)).cloud, pc[:, :2])
    with pytest.raises(DomainError):
        project_xy(project_xy(Frame(pc)))


def test_remove_ground():
    pc = cloud(1, scale=3.0)
    assert len(remove_ground(Frame(pc), z_min=10.0)) == 0
    assert np.array_equal(remove_ground(Frame(pc), z_min=-math.inf).cloud, pc)
    expected = [p for p in pc.tolist() if p[2] > -1.5]
    assert remove_ground(Frame(pc)).cloud.tolist() == expected
    custom = remove_ground(Frame(pc), predicate=lambda c: c[:, 0] > 0)
    assert custom.cloud.tolist() == [p for p in pc.tolist() if p[0] > 0]
    with pytest.raises(DomainError):
        remove_ground(Frame(pc), predicate=lambda c: np.ones(3, bool))


def test_clip_range():
    f = Frame([[31.0, 0.0], [30.0, 30.0], [-30.0, 0.5], [0.0, -30.0001]])
    assert clip_range(f).cloud.tolist() == [[30.0, 30.0], [-30.0, 0.5]]
    pc = cloud(2)
    expected = [p for p in pc.tolist() if abs(p[0]) <= 30 and abs(p[1]) <= 30]
    once = clip_range(Frame(pc))
    assert once.cloud.tolist() == expected
    assert np.array_equal(clip_range(once).cloud, once.cloud)
    with pytest.raises(DomainError):
        clip_range(f, 0.0)


def test_normalize_cardinality():
    a, b = Frame(cloud(3, 50), 0), Frame(cloud(4, 70), 1)
    na, nb = normalize_cardinality([a, b], 20, seed=5)
    assert len(na) == len(nb) == 20
    same = normalize_cardinality([Frame(cloud(3, 20))], 20)[0]
    assert sorted(map(tuple, same.cloud)) == sorted(map(tuple, cloud(3, 20)))
    singles = normalize_cardinality([a, b], 1)
    assert [len(f) for f in singles] == [1, 1]
    with pytest.raises(DomainError):
        normalize_cardinality([a, b], 60)


def test_p2d_closed_forms():
    pc = cloud(6, 30, 2)
    static = make_pair([Frame(pc, 0), Frame(pc, 1)], "P2D")
    assert np.array_equal(static.target, np.zeros_like(pc))
    moved = make_pair([Frame(pc, 0), Frame(pc + [1.0, 0.0], 1)], "P2D")
    assert np.array_equal(moved.target, np.tile([1.0, 0.0], (30, 1)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 40), st.sampled_from([2, 3]))
def test_p2d_round_trip_bitwise(seed, n, d):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-30, 30, size=(n + 5, d))
    b = rng.uniform(-30, 30, size=(n + 3, d))
    frames = [Frame(a, 0), Frame(b, 1)]
    p2d = make_pair(frames, "P2D", n=n, seed=seed)
    p2p = make_pair(frames, "P2P", n=n, seed=seed)
    assert np.array_equal(p2p.base, p2d.base)
    assert np.array_equal(compose_prediction(p2d.target, p2d.base), p2p.target)


def test_d2d_matches_p2d():
    frames = [Frame(cloud(s, 60), s) for s in range(3)]
    d2d = make_pair(frames, "D2D", n=25, seed=9)
    p2d = make_pair(frames[1:], "P2D", n=25, seed=9)
    assert np.array_equal(d2d.target, p2d.target)
    assert np.array_equal(d2d.base, p2d.base)
    prev = make_pair(frames[:2], "P2D", n=25, seed=9)
    assert np.array_equal(d2d.input, prev.target)


def test_translating_square():
    shift = (0.5, 0.25)
    raw = translating_square(4, shift)
    frames = [preprocess(Frame(np.array(pc), t)) for t, pc in enumerate(raw)]
    for t in range(3):
        pair = make_pair(frames[t:t + 2], "P2D", n=40, seed=t)
        assert np.array_equal(pair.target, np.tile(shift, (40, 1)))


def test_make_pair_errors():
    a, b = Frame(cloud(0, 10), 0), Frame(cloud(1, 12), 1)
    with pytest.raises(DomainError):
        make_pair([a, b], "P2D")
    with pytest.raises(DomainError):
        make_pair([a, b], "D2D", n=5)
    with pytest.raises(DomainError):
        make_pair([a, b], "X2Y", n=5)
    with pytest.raises(DomainError):
        make_pair([b, Frame(cloud(1, 12), 1)], "P2P")


def test_compose_prediction():
    base = cloud(3, 9, 2)
    assert np.array_equal(compose_prediction(np.zeros_like(base), base), base)
    assert np.array_equal(compose_prediction(-base, base), np.zeros_like(base))
    with pytest.raises(DomainError):
        compose_prediction(np.zeros((3, 2)), base)


def test_snap_is_idempotent_and_close():
    pc = cloud(8)
    s = snap(pc)
    assert np.array_equal(snap(s), s)
    assert np.max(np.abs(s - pc)) <= 2.0**-31


def test_rasterize_basic():
    assert not rasterize(np.zeros((0, 2))).cells.any()
    g = rasterize([[0.0, 0.0]])
    assert g.shape == (120, 120)
    assert g.occupied() == {(60, 60)}
    edge = rasterize([[30.0, 30.0], [-30.0, -30.0], [30.5, 0.0]])
    assert edge.occupied() == {(119, 119), (0, 0)}
    with pytest.raises(DomainError):
        rasterize([[0.0, 0.0]], cell_size=0.0)
    with pytest.raises(DomainError):
        rasterize([[0.0, 0.0]], extent=-1.0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(0, 60), st.just(2)),
              elements=st.floats(-35, 35, allow_nan=False)),
       st.sampled_from([0.25, 0.5, 0.7, 3.0]))
def test_rasterize_matches_scalar_binning(pc, cell):
    assert rasterize(pc, cell).occupied() == bin_points_scalar(pc.tolist(), cell, 30.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rasterize_monotone(seed):
    rng = np.random.default_rng(seed)
    pc = rng.uniform(-32, 32, size=(30, 2))
    more = np.vstack([pc, rng.uniform(-32, 32, size=(10, 2))])
    assert rasterize(pc).occupied() <= rasterize(more).occupied()


def test_pgm_layout():
    g = rasterize([[-1.0, 0.9]], cell_size=1.0, extent=2.0)
    lines = g.to_pgm().splitlines()
    assert lines[:3] == ["P2", "4 4", "255"]
    # x bin 1, y bin 2 sits in column 1 of the second row from the top
    assert lines[3 + 1].split() == ["0", "255", "0", "0"]
    assert g.sidecar()["extent"] == 2.0


def test_evaluate_prediction():
    pc = cloud(10, 8, 2)
    assert evaluate_prediction(pc, pc) == (0.0, 0.0)
    assert evaluate_prediction([[0.0, 0.0]], [[3.0, 4.0]]) == (50.0, 25.0)
    other = cloud(11, 8, 2)
    assert evaluate_prediction(pc, other) == (chamfer(pc, other), emd(pc, other))
    with pytest.raises(DomainError):
        evaluate_prediction(pc, other[:5])
