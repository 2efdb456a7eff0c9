from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from moo_kserver.domain import (
    DistanceFunction,
    InvalidDecision,
    NodeSpace,
    ServiceDecision,
    apply_decision,
    distance,
    format_distance_table,
    load_distance_table,
    make_config,
    replay,
)

LINE = NodeSpace.line(9)
GRID = NodeSpace.grid(3)


def d(kind, space, a, b):
    return distance(DistanceFunction(kind), space, a, b)


def test_line_examples():
    # node ids are 0-based, coordinates 1-based
    assert d("line_abs", LINE, 2, 4) == 2
    assert d("line_sq", LINE, 2, 4) == 4
    assert d("line_asym", LINE, 1, 4) == 15
    assert d("line_asym", LINE, 4, 1) == 6


def test_grid_coordinates_are_row_major():
    assert GRID.coords(0) == (1, 1)
    assert GRID.coords(2) == (3, 1)
    assert GRID.coords(3) == (1, 2)
    space = NodeSpace.grid(3, 4)
    # (1,1) -> (3,4)
    assert d("grid_manhattan", space, 0, 11) == 5
    assert d("grid_asym", space, 0, 11) == 2 * 3 + 3 * 4


def test_kind_space_mismatch():
    with pytest.raises(ValueError):
        d("grid_manhattan", LINE, 0, 1)
    with pytest.raises(ValueError):
        d("line_abs", GRID, 0, 1)
    with pytest.raises(ValueError):
        d("line_abs", LINE, 0, 9)


def test_parse_space():
    assert NodeSpace.parse("line:9") == LINE
    assert NodeSpace.parse("grid:3x3") == GRID
    assert str(NodeSpace.parse("grid:4x2")) == "grid:4x2"


@pytest.mark.parametrize("space,kinds", [
    (NodeSpace.line(25), ("line_abs", "line_sq", "line_asym")),
    (NodeSpace.grid(5), ("grid_manhattan", "grid_asym")),
])
def test_builtin_invariants_exhaustive(space, kinds):
    for kind in kinds:
        m = DistanceFunction(kind).matrix(space)
        assert all(m[a][a] == 0 for a in range(space.n))
        assert all(v >= 0 for row in m for v in row)


def test_asymmetry_and_non_metric_are_allowed():
    m = DistanceFunction("line_asym").matrix(LINE)
    assert any(m[a][b] != m[b][a] for a in range(9) for b in range(9))
    sq = DistanceFunction("line_sq").matrix(LINE)
    # (x-x')^2 breaks the triangle inequality: 1->3 costs more than 1->2->3
    assert sq[0][2] > sq[0][1] + sq[1][2]


def test_distance_table_round_trip():
    text = "3\n0 1 2.5\n4 0 1\n# comment\n0 0 0\n"
    fn = load_distance_table(text)
    assert fn.kind == "table"
    assert distance(fn, NodeSpace.line(3), 0, 2) == Fraction(5, 2)
    assert distance(fn, NodeSpace.line(3), 1, 0) == 4
    assert load_distance_table(format_distance_table(fn)).table == fn.table


@pytest.mark.parametrize("text", ["", "3\n0 1\n1 0\n", "2\n0 1\n1\n", "2\n0 -1\n1 0\n"])
def test_distance_table_rejects_bad_files(text):
    with pytest.raises(ValueError):
        load_distance_table(text)


def test_table_size_must_match_space():
    fn = DistanceFunction.from_table([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        distance(fn, NodeSpace.line(3), 0, 1)


def test_make_config():
    assert make_config([3, 1], LINE, 2) == frozenset({1, 3})
    with pytest.raises(ValueError):
        make_config([1, 1])
    with pytest.raises(ValueError):
        make_config([1, 9], LINE)
    with pytest.raises(ValueError):
        make_config([1, 2], LINE, 3)


def test_apply_decision():
    cfg = make_config([1, 8])
    assert apply_decision(cfg, ServiceDecision(4, 1, 3)) == {4, 8}
    assert apply_decision(cfg, ServiceDecision(8, 8, 0)) == cfg
    with pytest.raises(InvalidDecision):
        apply_decision(cfg, ServiceDecision(4, 2, 2))
    with pytest.raises(InvalidDecision):
        apply_decision(cfg, ServiceDecision(8, 1, 7))


def test_replay_checks_costs():
    dist = DistanceFunction("line_abs").matrix(LINE)
    decisions = [ServiceDecision(2, 0, 2), ServiceDecision(2, 2, 0)]
    assert replay(frozenset({0, 5}), decisions, dist) == (frozenset({2, 5}), 2)
    with pytest.raises(InvalidDecision):
        replay(frozenset({0, 5}), [ServiceDecision(2, 0, 1)], dist)


@given(st.data())
def test_apply_keeps_k_distinct_servers(data):
    n = data.draw(st.integers(2, 12))
    k = data.draw(st.integers(1, n - 1))
    cfg = frozenset(data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k, unique=True)))
    request = data.draw(st.integers(0, n - 1))
    source = request if request in cfg else data.draw(st.sampled_from(sorted(cfg)))
    after = apply_decision(cfg, ServiceDecision(request, source, 0))
    assert len(after) == k and request in after
