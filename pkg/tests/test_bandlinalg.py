import numpy as np
import pytest

from bandlinalg import (
    BandedMatrix,
    SingularPivotError,
    band_mul,
    chain_row_blocks,
    condition_growth_diagnostic,
    distributed_product_chain,
    gather_row_blocks,
    lu_factor_no_pivot,
    lu_solve,
    lu_solve_transpose,
    row_ranges,
)


def random_banded(rng, n, bw, dominant=True):
    dense = np.zeros((n, n))
    for d in range(-bw, bw + 1):
        rows = np.arange(max(0, -d), min(n, n - d))
        dense[rows, rows + d] = rng.uniform(-1.0, 1.0, rows.size)
    if dominant:
        dense += np.diag(np.sum(np.abs(dense), axis=1) + 1.0)
    return BandedMatrix.from_dense(dense, bw)


def five_point(rng, nx, ny, scale=0.1):
    # I + scale * (random 5-point operator), half-bandwidth nx
    n = nx * ny
    dense = np.eye(n)
    for d in (-nx, -1, 1, nx):
        rows = np.arange(max(0, -d), min(n, n - d))
        dense[rows, rows + d] = scale * rng.uniform(-1.0, 1.0, rows.size)
    return BandedMatrix.from_dense(dense, nx)


def test_dense_conversion_and_access():
    rng = np.random.default_rng(0)
    a = random_banded(rng, 6, 2)
    dense = a.to_dense()
    assert a.get(0, 2) == dense[0, 2]
    assert a.get(0, 3) == 0.0
    assert np.array_equal(BandedMatrix.from_dense(dense).data, a.data)
    np.testing.assert_allclose(a.matvec(np.arange(6.0)), dense @ np.arange(6.0))
    np.testing.assert_allclose(
        a.matvec_rows(np.arange(6.0), 2, 5), (dense @ np.arange(6.0))[2:5]
    )
    assert a.norm1() == pytest.approx(np.linalg.norm(dense, 1))


def test_invalid_band_storage():
    with pytest.raises(ValueError):
        BandedMatrix(np.zeros((4, 4)), 1)
    with pytest.raises(ValueError):
        BandedMatrix(np.zeros((2, 7)), 3)
    with pytest.raises(ValueError):
        BandedMatrix.from_dense(np.zeros((2, 3)))


@pytest.mark.parametrize("n, bw_a, bw_b", [(8, 1, 2), (9, 3, 3), (5, 3, 4), (6, 0, 1)])
def test_band_product_matches_dense(n, bw_a, bw_b):
    rng = np.random.default_rng(n + bw_a + bw_b)
    a = random_banded(rng, n, bw_a, dominant=False)
    b = random_banded(rng, n, bw_b, dominant=False)
    c = band_mul(a, b)
    assert c.bw == min(n - 1, bw_a + bw_b)
    np.testing.assert_allclose(c.to_dense(), a.to_dense() @ b.to_dense(), atol=1e-14)


def test_lu_solves_match_dense():
    rng = np.random.default_rng(1)
    a = random_banded(rng, 12, 3)
    b = rng.standard_normal(12)
    lu = lu_factor_no_pivot(a)
    np.testing.assert_allclose(lu_solve(lu, b), np.linalg.solve(a.to_dense(), b))
    np.testing.assert_allclose(
        lu_solve_transpose(lu, b), np.linalg.solve(a.to_dense().T, b)
    )
    with pytest.raises(ValueError):
        lu_solve(lu, b[:5])


def test_lu_on_diagonal_matrix():
    a = BandedMatrix(np.array([[2.0], [4.0], [8.0]]), 0)
    x = lu_solve(lu_factor_no_pivot(a), np.ones(3))
    np.testing.assert_allclose(x, [0.5, 0.25, 0.125])


def test_zero_pivot_reports_its_row():
    dense = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 1.0], [0.0, 1.0, 1.0]])
    a = BandedMatrix.from_dense(dense)
    with pytest.raises(SingularPivotError) as info:
        lu_factor_no_pivot(a)
    assert info.value.row == 2
    assert "row 2" in str(info.value)


def test_row_ranges():
    assert row_ranges(10, 3) == [(0, 3), (3, 6), (6, 10)]
    assert row_ranges(4, 1) == [(0, 4)]
    with pytest.raises(ValueError):
        row_ranges(4, 0)


def _dense_chain(a_list, r_list):
    products, tilde = [], []
    product = np.eye(a_list[0].n)
    acc = np.zeros(a_list[0].n)
    for a, r in zip(a_list, r_list):
        acc = product @ r + acc
        product = product @ a.to_dense()
        products.append(product)
        tilde.append(acc)
    return products, tilde


def test_distributed_chain_matches_dense_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        n = int(rng.integers(2, 17))
        levels = int(rng.integers(1, 6))
        cores = int(rng.integers(levels, levels + 3))
        bw = int(rng.integers(0, n))
        a_list = [random_banded(rng, n, bw, dominant=False) for _ in range(levels)]
        r_list = [rng.standard_normal(n) for _ in range(levels)]
        products, tilde = _dense_chain(a_list, r_list)
        chain = distributed_product_chain(a_list, r_list, cores)
        assert len(chain) == levels
        for (blocks, rhs), product, acc in zip(chain, products, tilde):
            assert len(blocks) == cores
            matrix, gathered = gather_row_blocks(blocks)
            scale = max(np.max(np.abs(product)), 1.0)
            assert np.max(np.abs(matrix.to_dense() - product)) <= 1e-12 * scale
            np.testing.assert_allclose(gathered, acc, rtol=1e-12, atol=1e-12 * scale)
            np.testing.assert_array_equal(gathered, rhs)


def test_row_blocks_do_not_depend_on_the_split():
    rng = np.random.default_rng(5)
    a_list = [five_point(rng, 4, 4) for _ in range(3)]
    r_list = [rng.standard_normal(16) for _ in range(3)]
    whole = chain_row_blocks(a_list, r_list, 1, 0, 16)
    for cores in (3, 5, 7):
        chain = distributed_product_chain(a_list, r_list, cores)
        for level, (blocks, rhs) in enumerate(chain):
            matrix, _ = gather_row_blocks(blocks)
            assert np.array_equal(matrix.data, whole[level].rows)
            assert np.array_equal(rhs, whole[level].rhs_rows)


def test_gather_rejects_gaps_and_chain_checks_inputs():
    rng = np.random.default_rng(6)
    a_list = [five_point(rng, 3, 3) for _ in range(2)]
    r_list = [np.ones(9), np.ones(9)]
    blocks = chain_row_blocks(a_list, r_list, 1, 0, 4)
    tail = chain_row_blocks(a_list, r_list, 2, 5, 9)
    with pytest.raises(ValueError, match="tile"):
        gather_row_blocks([blocks[0], tail[0]])
    assert blocks[1].row_range == (1, 4)
    with pytest.raises(ValueError, match="exceeds 1 cores"):
        distributed_product_chain(a_list, r_list, 1)
    with pytest.raises(ValueError):
        distributed_product_chain(a_list, r_list[:1], 2)
    with pytest.raises(ValueError):
        distributed_product_chain([], [], 2)


def test_chain_cost_grows_quadratically_with_length():
    rng = np.random.default_rng(9)
    nx = 20
    n = nx * nx

    def total_ops(levels):
        a_list = [five_point(rng, nx, nx) for _ in range(levels)]
        r_list = [np.zeros(n) for _ in range(levels)]
        blocks = chain_row_blocks(a_list, r_list, 1, 0, n)
        return sum(block.ops for block in blocks)

    short, long = total_ops(4), total_ops(8)
    # five nonzero diagonals times the growing band of the running product
    assert long <= 5 * n * sum(2 * l * nx + 1 for l in range(1, 8))
    assert long / short <= 5.0


def test_condition_growth_diagnostic():
    rng = np.random.default_rng(11)
    a_list = [five_point(rng, 3, 3, scale=0.2) for _ in range(4)]
    estimates = condition_growth_diagnostic(a_list)
    assert len(estimates) == 4
    product = np.eye(9)
    for a, estimate in zip(a_list, estimates):
        product = product @ a.to_dense()
        exact = np.linalg.cond(product, 1)
        assert exact / 10 <= estimate <= exact * (1 + 1e-10)
