import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moo_kserver.streamgen import (
    StreamSpec,
    TransitionMatrix,
    format_matrix,
    format_stream,
    gen_matrix,
    gen_stream,
    load_matrix,
    load_stream,
)


def test_reference_matrix_rows(cycle_matrix):
    assert cycle_matrix.n == 9
    assert cycle_matrix.p[3].tolist() == [0, 0, 0, 0, 0, 1.0, 0, 0, 0]
    assert cycle_matrix.p[5][7] == 0.02 and cycle_matrix.p[5][8] == 0.98
    assert cycle_matrix.p[7][2] == 0.35


def test_row_not_summing_to_one_is_rejected():
    with pytest.raises(ValueError, match="row 1"):
        load_matrix("2\n0.5 0.5\n0.4 0.5\n")
    with pytest.raises(ValueError):
        TransitionMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        TransitionMatrix(np.array([[1.5, -0.5], [0.0, 1.0]]))


def test_matrix_file_round_trip(cycle_matrix):
    assert load_matrix(format_matrix(cycle_matrix)) == cycle_matrix
    assert load_matrix("0.2 0.8\n1 0\n") == TransitionMatrix(np.array([[0.2, 0.8], [1.0, 0.0]]))


@pytest.mark.parametrize("seed", range(6))
def test_density_bands(seed):
    sparse = gen_matrix(9, "sparse", seed)
    dense = gen_matrix(9, "dense", seed)
    assert 9 <= np.count_nonzero(sparse.p) <= 16
    assert 65 <= np.count_nonzero(dense.p) <= 72
    for m in (sparse, dense):
        assert (m.p > 0).any(axis=1).all()
        assert np.allclose(m.p.sum(axis=1), 1.0, atol=1e-9)
        assert np.allclose(m.p, np.round(m.p, 2))


def test_gen_matrix_is_deterministic():
    assert gen_matrix(9, "sparse", 11) == gen_matrix(9, "sparse", 11)
    assert gen_matrix(9, "dense", 11) != gen_matrix(9, "dense", 12)


def test_irreducible_matrix_reaches_everything():
    for seed in range(10):
        m = gen_matrix(9, "sparse", seed, irreducible=True)
        reach = (m.p > 0).astype(int)
        closure = np.linalg.matrix_power(reach + np.eye(9, dtype=int), 9) > 0
        assert closure.all()


def test_infeasible_density_is_an_error():
    # 2x2 sparse allows at most 0 nonzero cells but every row needs one
    with pytest.raises(ValueError):
        gen_matrix(2, "sparse", 0)
    with pytest.raises(ValueError):
        gen_matrix(9, "medium", 0)


def test_stream_determinism_and_support(cycle_matrix):
    spec = StreamSpec((cycle_matrix,), 500, seed=7)
    a, b = gen_stream(spec), gen_stream(spec)
    assert a == b
    prev = spec.initial
    for v in a:
        assert cycle_matrix.p[prev][v] > 0
        prev = v
    assert gen_stream(StreamSpec((cycle_matrix,), 500, seed=8)) != a


def test_two_matrix_block_schedule():
    # matrix A always jumps to node 0, matrix B to node 1
    a = TransitionMatrix(np.array([[1.0, 0.0], [1.0, 0.0]]))
    b = TransitionMatrix(np.array([[0.0, 1.0], [0.0, 1.0]]))
    spec = StreamSpec((a, b), 25, seed=0, block=10)
    assert spec.mode == "two_matrix"
    assert gen_stream(spec) == [0] * 10 + [1] * 10 + [0] * 5
    assert [spec.active(t) for t in (1, 10, 11, 20, 21)] == [0, 0, 1, 1, 0]


def test_stream_spec_validation(cycle_matrix):
    with pytest.raises(ValueError):
        StreamSpec((cycle_matrix,), 0, seed=0)
    with pytest.raises(ValueError):
        StreamSpec((cycle_matrix,), 10, seed=0, mode="two_matrix")
    with pytest.raises(ValueError):
        StreamSpec((cycle_matrix, gen_matrix(4, "dense", 0)), 10, seed=0)
    with pytest.raises(ValueError):
        StreamSpec((cycle_matrix,), 10, seed=0, initial=9)


def test_stream_file_round_trip():
    stream = [3, 5, 8, 6, 0]
    assert load_stream(format_stream(stream), 9) == stream
    with pytest.raises(ValueError):
        load_stream("1 2 9", 9)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 12), density=st.sampled_from(["dense"]), seed=st.integers(0, 2**32), length=st.integers(1, 300))
def test_generated_streams_only_follow_positive_transitions(n, density, seed, length):
    m = gen_matrix(n, density, seed)
    stream = gen_stream(StreamSpec((m,), length, seed))
    assert len(stream) == length
    prev = 0
    for v in stream:
        assert 0 <= v < n and m.p[prev][v] > 0
        prev = v
