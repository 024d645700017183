import numpy as np
import pytest

from gibbslab.lattice import (
    ALTERNATING,
    CHECKERBOARD2X2,
    MINUS,
    PLUS,
    Alphabet,
    Configuration,
    Periodic,
    RandomPattern,
    Volume,
    box,
    fill,
    merge,
    parse_pattern,
    pattern_value,
    rect,
    strip,
)


def test_box_sizes_and_order():
    assert box(0, 2).sites.tolist() == [[0, 0]]
    v = box(1, 2)
    assert len(v) == 9
    assert v.bounding_box == ((-1, -1), (1, 1))
    assert [s[0] for s in box(2, 1)] == [-2, -1, 0, 1, 2]
    sites = list(box(2, 3))
    assert sites == sorted(sites)


@pytest.mark.parametrize("d", [0, 4])
def test_box_rejects_dimension(d):
    with pytest.raises(ValueError, match="dimension"):
        box(1, d)


def test_alphabet_contract():
    with pytest.raises(ValueError):
        Alphabet((1,))
    with pytest.raises(ValueError):
        Alphabet((1, 1))
    a = Alphabet((0, 1, 2))
    assert a.index(2) == 2
    assert a.to_symbols(a.indices([2, 0, 1])).tolist() == [2, 0, 1]
    with pytest.raises(ValueError):
        a.indices([3])


def test_pattern_examples():
    assert pattern_value(ALTERNATING, (0, 0)) == 1
    assert pattern_value(ALTERNATING, (1, 0)) == -1
    assert [pattern_value(CHECKERBOARD2X2, (x, 0)) for x in range(3)] == [1, 1, -1]
    assert pattern_value(PLUS, (7, -3)) == 1


def test_fill_examples():
    assert fill(box(1, 1), MINUS).values.tolist() == [-1, -1, -1]
    c = fill(box(1, 2), ALTERNATING)
    assert c[(0, 0)] == 1
    assert c[(1, 0)] == -1 and c[(1, 1)] == 1
    sub = fill(rect((4, 4)), CHECKERBOARD2X2)
    assert sub.values.mean() == 0.0


def test_alternating_antisymmetry_along_axis():
    v = box(4, 3)
    vals = ALTERNATING.values(v.sites)
    shifted = ALTERNATING.values(v.sites + np.array([1, 0, 0]))
    assert np.all(vals * shifted == -1)


def test_fill_read_back_identity():
    p = RandomPattern(0.3, 9)
    c = fill(box(3, 2), p)
    for s in c.volume:
        assert c[s] == pattern_value(p, s)


def test_random_pattern_frequency():
    p = 0.3
    vol = box(50, 1)
    tol = 4 * np.sqrt(p * (1 - p) / 101)
    good = sum(abs((fill(vol, RandomPattern(p, seed)).values == 1).mean() - p) <= tol for seed in range(100))
    assert good >= 95


def test_random_pattern_is_pure():
    a = RandomPattern(0.5, 42).values(box(5, 2).sites)
    b = RandomPattern(0.5, 42).values(box(5, 2).sites)
    assert np.array_equal(a, b)


def test_parse_pattern_names():
    assert parse_pattern("plus") is PLUS
    assert parse_pattern("alternating") is ALTERNATING
    per = parse_pattern("periodic:+-/-+")
    assert isinstance(per, Periodic)
    assert [pattern_value(per, s) for s in [(0, 0), (1, 0), (0, 1), (2, 2)]] == [1, -1, -1, 1]
    assert str(parse_pattern("random:0.25:3")) == "random:0.25:3"
    with pytest.raises(ValueError):
        parse_pattern("stripes")


def test_volume_set_operations():
    inner, outer = box(1, 2), box(2, 2)
    ring = outer.difference(inner)
    assert len(ring) == 16
    assert inner.union(ring) == outer
    assert inner.issubset(outer) and not outer.issubset(inner)
    assert box(0, 1).expand(2) == box(2, 1)
    assert len(strip(2, 4)) == 20


def test_configuration_operations():
    c = fill(box(1, 1), PLUS)
    f = c.flipped((0,))
    assert f.values.tolist() == [1, -1, 1]
    assert c.flipped().values.tolist() == [-1, -1, -1]
    m = merge(fill(box(0, 1), MINUS), fill(Volume([(2,)]), PLUS))
    assert m.as_dict() == {(0,): -1, (2,): 1}
    with pytest.raises(ValueError):
        Configuration(box(1, 1), [1, 0, 1])
