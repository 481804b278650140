"""
Banded matrices in row-indexed band storage, LU without pivoting, band products and
the row-distributed prefix-product chain.

Storage: ``data[i, j - i + bw]`` holds a_ij for |i - j| <= bw. Slots that fall
outside the matrix are kept at exact zero.

Every floating-point sum runs in one fixed order (ascending diagonal offset for
products, ascending column for mat-vecs), so the same rows computed in any process
give bit-identical results.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import as_strided, sliding_window_view

log = logging.getLogger(__name__)

PIVOT_FLOOR = 1e-14


class SingularPivotError(ArithmeticError):
    """LU without pivoting hit a pivot below the floor; ``row`` is 1-based."""

    def __init__(self, row: int, pivot: float, floor: float):
        super().__init__(row, pivot, floor)
        self.row = row
        self.pivot = pivot
        self.floor = floor

    def __str__(self):
        return (
            f"pivot {self.pivot:.3e} at row {self.row} is below the floor "
            f"{self.floor:.3e}"
        )


@dataclass
class BandedMatrix:
    data: np.ndarray  # (n, 2 * bw + 1)
    bw: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        n = self.data.shape[0]
        if self.data.ndim != 2 or self.data.shape[1] != 2 * self.bw + 1:
            raise ValueError(
                f"band storage of shape {self.data.shape} does not match bw={self.bw}."
            )
        if not 0 <= self.bw <= max(n - 1, 0):
            raise ValueError(f"bw={self.bw} outside [0, {max(n - 1, 0)}] for n={n}.")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @classmethod
    def zeros(cls, n: int, bw: int) -> "BandedMatrix":
        return cls(np.zeros((n, 2 * bw + 1)), bw)

    @classmethod
    def identity(cls, n: int, bw: int = 0) -> "BandedMatrix":
        matrix = cls.zeros(n, bw)
        matrix.data[:, bw] = 1.0
        return matrix

    @classmethod
    def from_dense(cls, dense, bw: int | None = None) -> "BandedMatrix":
        dense = np.asarray(dense, dtype=float)
        n = dense.shape[0]
        if dense.shape != (n, n):
            raise ValueError(f"expected a square matrix, got shape {dense.shape}.")
        if bw is None:
            rows, cols = np.nonzero(dense)
            bw = int(np.max(np.abs(rows - cols), initial=0))
        matrix = cls.zeros(n, bw)
        for d in range(-bw, bw + 1):
            rows = _diagonal_rows(n, d)
            matrix.data[rows, d + bw] = dense[rows, rows + d]
        return matrix

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n, self.n))
        for d in range(-self.bw, self.bw + 1):
            rows = _diagonal_rows(self.n, d)
            dense[rows, rows + d] = self.data[rows, d + self.bw]
        return dense

    def get(self, i: int, j: int) -> float:
        if abs(i - j) > self.bw:
            return 0.0
        return float(self.data[i, j - i + self.bw])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return matvec_rows(self.data, self.bw, x, 0)

    def matvec_rows(self, x: np.ndarray, lo: int, hi: int) -> np.ndarray:
        return matvec_rows(self.data[lo:hi], self.bw, x, lo)

    def norm1(self) -> float:
        """Max column sum of absolute values."""
        sums = np.zeros(self.n)
        for d in range(-self.bw, self.bw + 1):
            rows = _diagonal_rows(self.n, d)
            sums[rows + d] += np.abs(self.data[rows, d + self.bw])
        return float(np.max(sums, initial=0.0))


def _diagonal_rows(n: int, d: int) -> np.ndarray:
    # rows i with 0 <= i + d < n
    return np.arange(max(0, -d), min(n, n - d))


def matvec_rows(rows: np.ndarray, bw: int, x: np.ndarray, lo: int) -> np.ndarray:
    """Rows ``lo .. lo + len(rows)`` of A @ x, given those rows in band storage."""
    x = np.asarray(x, dtype=float)
    padded = np.concatenate([np.zeros(bw), x, np.zeros(bw)])
    windows = sliding_window_view(padded, 2 * bw + 1)[lo : lo + rows.shape[0]]
    out = np.zeros(rows.shape[0])
    for c in range(2 * bw + 1):
        out += rows[:, c] * windows[:, c]
    return out


def mul_rows(
    a_rows: np.ndarray, bw_a: int, b: BandedMatrix, lo: int
) -> tuple[np.ndarray, int, int]:
    """
    Rows ``lo .. lo + len(a_rows)`` of A @ B.

    Returns
    -------
    tuple
        (rows in band storage, result half-bandwidth, multiply-add count)
    """
    n = b.n
    m = a_rows.shape[0]
    bw_full = bw_a + b.bw
    bw_c = min(max(n - 1, 0), bw_full)
    out = np.zeros((m, 2 * bw_full + 1))
    width = 2 * bw_a + 1
    ops = 0
    for db in range(-b.bw, b.bw + 1):
        column = b.data[:, db + b.bw]
        if not np.any(column):
            continue
        # window[r, da + bw_a] = b[lo + r + da, lo + r + da + db]
        padded = np.concatenate([np.zeros(bw_a), column, np.zeros(bw_a)])
        window = sliding_window_view(padded, width)[lo : lo + m]
        start = db + b.bw
        out[:, start : start + width] += a_rows * window
        ops += m * width
    trim = bw_full - bw_c
    return out[:, trim : trim + 2 * bw_c + 1], bw_c, ops


def band_mul(a: BandedMatrix, b: BandedMatrix) -> BandedMatrix:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}.")
    rows, bw, _ = mul_rows(a.data, a.bw, b, 0)
    return BandedMatrix(rows, bw)


@dataclass
class BandedLU:
    """Unit-lower L and upper U packed in one band storage (L below the diagonal)."""

    data: np.ndarray
    bw: int

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def square_view(self) -> np.ndarray:
        return _square_view(self.data, self.bw)


def _square_view(data: np.ndarray, bw: int) -> np.ndarray:
    # (n, n) view with element (i, j) at flat index i * 2bw + j + bw; only band
    # entries are meaningful, every index stays inside the buffer
    n = data.shape[0]
    flat = data.reshape(-1)
    step = flat.strides[0]
    return as_strided(flat[bw:], shape=(n, n), strides=(2 * bw * step, step))


def lu_factor_no_pivot(a: BandedMatrix) -> BandedLU:
    n, bw = a.n, a.bw
    data = np.ascontiguousarray(a.data, dtype=float).copy()
    floor = PIVOT_FLOOR * float(np.max(np.sum(np.abs(data), axis=1), initial=0.0))
    view = _square_view(data, bw)
    for k in range(n):
        pivot = view[k, k]
        if abs(pivot) < floor or pivot == 0.0:
            raise SingularPivotError(k + 1, float(pivot), floor)
        end = min(n, k + bw + 1)
        if end > k + 1:
            view[k + 1 : end, k] /= pivot
            view[k + 1 : end, k + 1 : end] -= np.outer(
                view[k + 1 : end, k], view[k, k + 1 : end]
            )
    return BandedLU(data, bw)


def lu_solve(lu: BandedLU, b: np.ndarray) -> np.ndarray:
    n, bw = lu.n, lu.bw
    b = np.asarray(b, dtype=float)
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},).")
    view = lu.square_view()
    y = b.copy()
    for i in range(1, n):
        lo = max(0, i - bw)
        y[i] -= view[i, lo:i] @ y[lo:i]
    x = y
    for i in range(n - 1, -1, -1):
        hi = min(n, i + bw + 1)
        x[i] = (x[i] - view[i, i + 1 : hi] @ x[i + 1 : hi]) / view[i, i]
    return x


def lu_solve_transpose(lu: BandedLU, b: np.ndarray) -> np.ndarray:
    """Solve A^T x = b with A = LU, i.e. U^T z = b then L^T x = z."""
    n, bw = lu.n, lu.bw
    view = lu.square_view()
    z = np.asarray(b, dtype=float).copy()
    for i in range(n):
        lo = max(0, i - bw)
        z[i] = (z[i] - view[lo:i, i] @ z[lo:i]) / view[i, i]
    for i in range(n - 2, -1, -1):
        hi = min(n, i + bw + 1)
        z[i] -= view[i + 1 : hi, i] @ z[i + 1 : hi]
    return z


def row_ranges(n: int, cores: int) -> list[tuple[int, int]]:
    """Contiguous 0-based half-open row ranges, the last core takes the remainder."""
    if cores < 1:
        raise ValueError(f"cores must be >= 1, got {cores}.")
    m = n // cores
    ranges = [(s * m, (s + 1) * m) for s in range(cores)]
    ranges[-1] = (ranges[-1][0], n)
    return ranges


@dataclass
class RowBlock:
    """Rows ``lo:hi`` of prefix product P^level and of r~^level, held by ``owner``."""

    owner: int  # 1-based core index
    lo: int
    hi: int
    level: int  # 1-based
    rows: np.ndarray
    bw: int
    rhs_rows: np.ndarray
    ops: int = field(default=0)

    @property
    def row_range(self) -> tuple[int, int]:
        """1-based inclusive row range."""
        return self.lo + 1, self.hi


def chain_row_blocks(
    a_list: list[BandedMatrix],
    r_list: list[np.ndarray],
    owner: int,
    lo: int,
    hi: int,
) -> list[RowBlock]:
    """
    Rows ``lo:hi`` of every prefix product P^l = A_1 ... A_l and accumulated
    right-hand side r~^l = P^{l-1} r_l + r~^{l-1}. Needs no rows held elsewhere.
    """
    n = a_list[0].n
    rows = a_list[0].data[lo:hi].copy()
    bw = a_list[0].bw
    rhs = np.asarray(r_list[0], dtype=float)[lo:hi].copy()
    blocks = [RowBlock(owner, lo, hi, 1, rows, bw, rhs)]
    for level in range(1, len(a_list)):
        rhs = matvec_rows(rows, bw, r_list[level], lo) + rhs
        rows, new_bw, ops = mul_rows(rows, bw, a_list[level], lo)
        if new_bw == n - 1 and bw < n - 1:
            log.debug(f"Prefix product P^{level + 1} saturated to a full band.")
        bw = new_bw
        blocks.append(RowBlock(owner, lo, hi, level + 1, rows, bw, rhs, ops))
    return blocks


def gather_row_blocks(blocks: list[RowBlock]) -> tuple[BandedMatrix, np.ndarray]:
    """Stack the row blocks of one level (any order) into P^l and r~^l."""
    blocks = sorted(blocks, key=lambda block: block.lo)
    expected = 0
    for block in blocks:
        if block.lo != expected:
            raise ValueError(f"row blocks do not tile: gap before row {block.lo + 1}.")
        expected = block.hi
    rows = np.vstack([block.rows for block in blocks])
    rhs = np.concatenate([block.rhs_rows for block in blocks])
    return BandedMatrix(rows, blocks[0].bw), rhs


def distributed_product_chain(
    a_list: list[BandedMatrix], r_list: list[np.ndarray], cores: int
) -> list[tuple[list[RowBlock], np.ndarray]]:
    """
    All prefix products of ``a_list`` split by rows over ``cores`` cores.

    Returns
    -------
    list
        One ``(row blocks of P^l, r~^l)`` pair per level l = 1..L.
    """
    levels = len(a_list)
    if levels == 0 or levels != len(r_list):
        raise ValueError(
            f"need equally many matrices and vectors, got {levels} and {len(r_list)}."
        )
    if levels > cores:
        raise ValueError(f"chain length {levels} exceeds {cores} cores.")
    n = a_list[0].n
    if any(a.n != n for a in a_list):
        raise ValueError("all matrices of a chain must have the same dimension.")
    if levels >= np.sqrt(n):
        log.warning(
            f"Chain length {levels} is not below sqrt(ns)={np.sqrt(n):.1f}; "
            f"prefix products fill their band."
        )
    per_core = [
        chain_row_blocks(a_list, r_list, s + 1, lo, hi)
        for s, (lo, hi) in enumerate(row_ranges(n, cores))
    ]
    result = []
    for level in range(levels):
        blocks = [core_blocks[level] for core_blocks in per_core]
        result.append((blocks, np.concatenate([b.rhs_rows for b in blocks])))
    return result


def _estimate_inverse_norm1(lu: BandedLU, max_steps: int = 5) -> float:
    # Hager's estimator of ||A^-1||_1
    n = lu.n
    x = np.full(n, 1.0 / n)
    estimate = 0.0
    for _ in range(max_steps):
        y = lu_solve(lu, x)
        estimate = float(np.sum(np.abs(y)))
        xi = np.where(y >= 0, 1.0, -1.0)
        z = lu_solve_transpose(lu, xi)
        j = int(np.argmax(np.abs(z)))
        if abs(z[j]) <= z @ x:
            break
        x = np.zeros(n)
        x[j] = 1.0
    return estimate


def condition_growth_diagnostic(a_list: list[BandedMatrix]) -> list[float]:
    """1-norm condition estimate of every prefix product P^1 .. P^L."""
    estimates = []
    product = None
    for a in a_list:
        product = a if product is None else band_mul(product, a)
        lu = lu_factor_no_pivot(product)
        estimates.append(product.norm1() * _estimate_inverse_norm1(lu))
    log.debug(f"Prefix condition estimates: {estimates}")
    return estimates
