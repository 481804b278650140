"""
Time integrators for the backward-Euler discretization of the heat and Burgers
problems, from the sequential reference to the time-parallel Newton variants:

- ``sequential_bdf1``: march level by level, Newton per level;
- ``paradin_solve``: one Newton iteration over all levels at once, its block
  bidiagonal linear system decoupled into prefix-product systems P^n dv^n = r~^n;
- ``block_jacobi_solve``: the same system split into M blocks, each block solved
  as above, blocks coupled through Jacobi sweeps;
- ``parareal_linear_baseline``: classical linear Parareal with a sequential coarse
  sweep and decoupled fine blocks;
- ``paradin_parareal_solve``: Parareal whose coarse propagator is decoupled as
  well, optionally on a spatially coarsened grid.

The parallel methods run on a ``runtime.Runtime`` with one logical worker per fine
time level; block-end workers also own the coarse levels. Every exchange between
workers is an explicit message.

Newton systems are ``A_n dv^n - dv^{n-1} = tau r^n`` with ``A_n = I + tau dF/du``.
"""

import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import partial
from typing import Callable, Iterator, NamedTuple

import numpy as np

from bandlinalg import (
    BandedMatrix,
    SingularPivotError,
    chain_row_blocks,
    gather_row_blocks,
    lu_factor_no_pivot,
    lu_solve,
    row_ranges,
)
from discretize import assemble_jacobian, coarse_rhs, newton_rhs
from mesh import (
    GridSpec,
    SpaceTimeSolution,
    coarsen_grid,
    interpolate_in_time,
    is_nested,
    prolong_cubic_spline,
    restrict_injection,
)
from model import ProblemKind, ProblemSpec, exact_field, exact_solution, initial_field
from runtime import (
    MessageKind,
    Mode,
    Runtime,
    StageResult,
    WorkerContext,
    WorkerError,
    WorkerTopology,
    reduce_norm,
)

log = logging.getLogger(__name__)

# growth factor over three iterations that counts as divergence
DIVERGENCE_FACTOR = 10.0

DEFAULT_BLOCKS = {
    ProblemKind.NONLINEAR_HEAT: {30: 1, 60: 2, 120: 4, 240: 8, 480: 16},
    ProblemKind.BURGERS: {30: 3, 60: 6, 120: 10, 240: 16, 480: 24},
}


class NewtonConvergenceError(RuntimeError):
    pass


class ParallelDivergenceError(RuntimeError):
    pass


class IllConditionedProductError(ArithmeticError):
    pass


class Method(str, Enum):
    SEQUENTIAL = "sequential"
    PARADIN = "paradin"
    BLOCK_JACOBI = "block_jacobi"
    PARAREAL_BASELINE = "parareal_baseline"
    PARADIN_PARAREAL = "paradin_parareal"

    @property
    def uses_blocks(self) -> bool:
        return self in (
            Method.BLOCK_JACOBI,
            Method.PARAREAL_BASELINE,
            Method.PARADIN_PARAREAL,
        )


class NormKind(str, Enum):
    L1 = "L1"
    L2 = "L2"
    LINF = "Linf"


@dataclass(frozen=True)
class NewtonConfig:
    eps_newton: float
    max_newton: int = 20
    safety_factor: float = 1e-2
    max_parareal: int | None = None  # None means M
    norm_kind: NormKind = NormKind.L2

    def __post_init__(self):
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))
        if not self.eps_newton > 0:
            raise ValueError(f"eps_newton must be positive, got {self.eps_newton}.")
        if not 0 < self.safety_factor <= 1:
            raise ValueError(
                f"safety_factor must lie in (0, 1], got {self.safety_factor}."
            )
        if self.max_newton < 1:
            raise ValueError(f"max_newton must be >= 1, got {self.max_newton}.")
        if self.max_parareal is not None and self.max_parareal < 1:
            raise ValueError(f"max_parareal must be >= 1, got {self.max_parareal}.")

    @property
    def eps_parareal(self) -> float:
        return self.safety_factor * self.eps_newton

    @classmethod
    def for_problem(cls, p: ProblemSpec, **overrides) -> "NewtonConfig":
        eps = 1e-8 if p.is_heat else 1e-3
        overrides = {k: v for k, v in overrides.items() if v is not None}
        overrides.setdefault("eps_newton", eps)
        return cls(**overrides)


@dataclass(frozen=True)
class BlockLayout:
    num_blocks: int
    nt: int

    def __post_init__(self):
        if self.num_blocks < 1:
            raise ValueError(f"num_blocks must be >= 1, got {self.num_blocks}.")
        if self.nt % self.num_blocks:
            raise ValueError(
                f"{self.num_blocks} blocks do not divide {self.nt} time levels."
            )

    @property
    def block_len(self) -> int:
        return self.nt // self.num_blocks

    def locate(self, n: int) -> tuple[int, int]:
        """(block m, offset) of fine level n, all 1-based."""
        if not 1 <= n <= self.nt:
            raise ValueError(f"time level {n} outside 1..{self.nt}.")
        m, offset = divmod(n - 1, self.block_len)
        return m + 1, offset + 1

    def levels(self, m: int) -> range:
        """1-based fine levels of block m."""
        return range((m - 1) * self.block_len + 1, m * self.block_len + 1)

    def workers(self, m: int) -> tuple[int, ...]:
        return tuple(n - 1 for n in self.levels(m))

    def end_worker(self, m: int) -> int:
        return m * self.block_len - 1

    def check_constraints(self, ns: int) -> None:
        root = math.sqrt(ns)
        if self.num_blocks >= root:
            log.warning(f"M={self.num_blocks} is not small against sqrt(ns)={root:.1f}")
        if self.block_len >= root:
            log.warning(f"J={self.block_len} is not small against sqrt(ns)={root:.1f}")

    @classmethod
    def default_for(cls, p: ProblemSpec, nt: int) -> "BlockLayout":
        blocks = DEFAULT_BLOCKS[p.kind].get(nt)
        if blocks is None:
            blocks = max(d for d in range(1, math.isqrt(nt) + 1) if nt % d == 0)
        return cls(blocks, nt)


def default_cf(p: ProblemSpec) -> int:
    return 4 if p.is_heat else 3


def guess_factor(nt: int, cf: int) -> int:
    """Largest factor not above ``cf`` that divides ``nt``."""
    return max(d for d in range(1, max(cf, 1) + 1) if nt % d == 0)


@dataclass
class SolveReport:
    solution: SpaceTimeSolution
    method: Method
    newton_iters: int
    parareal_iters_per_newton: list[int] = field(default_factory=list)
    jacobi_sweeps_per_newton: list[int] = field(default_factory=list)
    update_norms: list[float] = field(default_factory=list)
    final_update_norm: float = 0.0
    wall_time: float = 0.0
    mode: Mode = Mode.EMULATED
    max_chain_ops: int = 0
    num_blocks: int = 1
    cs: int = 1

    @property
    def parareal_iters(self) -> int:
        return max(self.parareal_iters_per_newton, default=0)

    @property
    def jacobi_iters(self) -> int:
        return max(self.jacobi_sweeps_per_newton, default=0)


# norms


def norm_contribution(values: np.ndarray, kind: NormKind) -> float:
    values = np.asarray(values, dtype=float)
    if kind is NormKind.L1:
        return float(np.sum(np.abs(values)))
    if kind is NormKind.L2:
        return float(np.sum(values * values))
    return float(np.max(np.abs(values), initial=0.0))


def space_time_norm(
    levels, tau: float, hx: float, hy: float, kind: NormKind = NormKind.L2
) -> float:
    """Volume-weighted norm over time levels, one contribution per level."""
    kind = NormKind(kind)
    contributions = [norm_contribution(level, kind) for level in levels]
    return combine_contributions(contributions, tau, hx, hy, kind)


def combine_contributions(
    contributions, tau: float, hx: float, hy: float, kind: NormKind
) -> float:
    """Per-level contributions, in ascending level order, to the weighted norm."""
    if kind is NormKind.LINF:
        return max(contributions, default=0.0)
    total = tau * hx * hy * reduce_norm(contributions)
    return math.sqrt(total) if kind is NormKind.L2 else total


def grid_norm(levels, grid: GridSpec, kind: NormKind = NormKind.L2) -> float:
    return space_time_norm(levels, grid.tau, grid.hx, grid.hy, kind)


def spatial_norm(values, grid: GridSpec, kind: NormKind = NormKind.L2) -> float:
    return space_time_norm([values], 1.0, grid.hx, grid.hy, kind)


def check_divergence(history: list[float], what: str) -> None:
    """Raise once the newest value exceeds the one three iterations back tenfold."""
    if len(history) >= 4 and history[-1] > DIVERGENCE_FACTOR * history[-4]:
        raise ParallelDivergenceError(
            f"{what} grew from {history[-4]:.3e} to {history[-1]:.3e} over 3 "
            f"iterations; the iteration diverges."
        )


# sequential reference


def _newton_level(
    p: ProblemSpec, grid: GridSpec, u_prev: np.ndarray, n: int, cfg: NewtonConfig
) -> tuple[np.ndarray, int, float]:
    u = u_prev.copy()
    t = grid.time(n)
    for iteration in range(1, cfg.max_newton + 1):
        jac = assemble_jacobian(p, grid, u, t, grid.tau)
        rhs = newton_rhs(p, grid, u, u_prev, t)
        du = lu_solve(lu_factor_no_pivot(jac), rhs)
        u += du
        norm = spatial_norm(du, grid, cfg.norm_kind)
        if norm < cfg.eps_newton:
            return u, iteration, norm
    raise NewtonConvergenceError(
        f"Newton did not converge at time level {n} within {cfg.max_newton} "
        f"iterations (last update norm {norm:.3e})."
    )


def sequential_bdf1(p: ProblemSpec, grid: GridSpec, cfg: NewtonConfig) -> SolveReport:
    start = time.perf_counter()
    initial = initial_field(p, grid)
    levels = np.empty((grid.nt, grid.ns))
    u = initial
    iterations, final = 0, 0.0
    for n in range(1, grid.nt + 1):
        u, used, norm = _newton_level(p, grid, u, n, cfg)
        levels[n - 1] = u
        iterations = max(iterations, used)
        final = max(final, norm)
    wall = time.perf_counter() - start
    log.debug(
        f"Sequential BDF1 on {grid.nt}x{grid.nx}x{grid.ny}: at most {iterations} "
        f"Newton iterations per level."
    )
    return SolveReport(
        SpaceTimeSolution(initial, levels),
        Method.SEQUENTIAL,
        iterations,
        final_update_norm=final,
        wall_time=wall,
    )


# initial guess


def build_initial_guess(
    p: ProblemSpec, grid: GridSpec, cf: int, cfg: NewtonConfig | None = None
) -> SpaceTimeSolution:
    """
    Sequential solution on a coarsened grid, interpolated back with cubic splines
    in space and then in time.

    Parameters
    ----------
    p
        Problem definition.
    grid
        Fine grid.
    cf
        Coarsening factor, must divide nt. Space is coarsened by it only when the
        node sets nest on both axes, otherwise time alone is coarsened.
    cfg
        Newton settings of the coarse solve, the problem defaults when omitted.

    Returns
    -------
    SpaceTimeSolution
        Guess whose initial field is the exact one.
    """
    if cf < 1 or grid.nt % cf:
        raise ValueError(f"cf={cf} does not divide nt={grid.nt}.")
    cfg = cfg or NewtonConfig.for_problem(p)
    if cf == 1:
        return sequential_bdf1(p, grid, cfg).solution

    cs = cf if is_nested(grid.nx, cf) and is_nested(grid.ny, cf) else 1
    if cs == 1:
        log.warning(
            f"{grid.nx}x{grid.ny} nodes do not nest under factor {cf}; "
            f"initial guess coarsened in time only."
        )
    coarse = coarsen_grid(grid, cs, cf)
    coarse_levels = sequential_bdf1(p, coarse, cfg).solution.levels

    prolonged = np.empty((coarse.nt + 1, grid.ns))
    prolonged[0] = initial_field(p, grid)
    for n in range(1, coarse.nt + 1):
        t = coarse.time(n)
        if cs == 1:
            prolonged[n] = coarse_levels[n - 1]
        else:
            prolonged[n] = prolong_cubic_spline(
                coarse_levels[n - 1],
                coarse,
                grid,
                boundary=partial(exact_solution, p, t=t),
            )
    fine = interpolate_in_time(prolonged, coarse.t_levels(), grid.t_levels()[1:])
    return SpaceTimeSolution(prolonged[0].copy(), fine)


# grid transfer between the fine grid and the coarse propagator grid


@dataclass(frozen=True)
class Transfer:
    fine_grid: GridSpec
    coarse_grid: GridSpec
    cs: int = 1

    @classmethod
    def for_layout(cls, grid: GridSpec, layout: BlockLayout, cs: int = 1) -> "Transfer":
        if cs > 1 and not (is_nested(grid.nx, cs) and is_nested(grid.ny, cs)):
            raise ValueError(
                f"spatial coarsening by {cs} needs nx + 1 and ny + 1 divisible by "
                f"{cs}, got nx={grid.nx}, ny={grid.ny}."
            )
        return cls(grid, coarsen_grid(grid, cs, layout.block_len), cs)

    def restrict(self, values: np.ndarray) -> np.ndarray:
        if self.cs == 1:
            return np.array(values, dtype=float)
        return restrict_injection(values, self.fine_grid, self.cs)

    def prolong(self, values: np.ndarray) -> np.ndarray:
        # Newton corrections carry zero Dirichlet data
        if self.cs == 1:
            return np.array(values, dtype=float)
        return prolong_cubic_spline(values, self.coarse_grid, self.fine_grid)


# worker stages


@dataclass
class AssembleTask:
    problem: ProblemSpec
    grid: GridSpec
    level: int
    u: np.ndarray
    u_prev: np.ndarray
    # coarse level owned by this worker: (transfer, u at block end, u at block start)
    coarse: tuple[Transfer, np.ndarray, np.ndarray] | None = None
    coarse_level: int = 0


def _assemble_stage(ctx: WorkerContext, task: AssembleTask | None):
    if task is None:
        return None
    p, grid = task.problem, task.grid
    t = grid.time(task.level)
    fine = (
        assemble_jacobian(p, grid, task.u, t, grid.tau),
        newton_rhs(p, grid, task.u, task.u_prev, t),
    )
    if task.coarse is None:
        return fine, None
    transfer, u_end, u_start = task.coarse
    cgrid = transfer.coarse_grid
    c_end, c_start = transfer.restrict(u_end), transfer.restrict(u_start)
    tc = cgrid.time(task.coarse_level)
    coarse = (
        assemble_jacobian(p, cgrid, c_end, tc, cgrid.tau),
        coarse_rhs(p, cgrid, c_end, c_start, tc, cgrid.tau),
    )
    return fine, coarse


@dataclass
class ChainTask:
    core: int  # 1-based within the group
    lo: int
    hi: int
    owners: tuple[int, ...]
    jacobians: list[BandedMatrix]
    rhs: list[np.ndarray]
    # (level index in the group, source worker) pairs added to the rhs
    couplings: tuple[tuple[int, int], ...] = ()


def _chain_stage(ctx: WorkerContext, task: ChainTask | None) -> int:
    if task is None:
        return 0
    rhs = list(task.rhs)
    for index, source in task.couplings:
        rhs[index] = rhs[index] + ctx.recv(source, MessageKind.COUPLING_VECTOR)
    blocks = chain_row_blocks(task.jacobians, rhs, task.core, task.lo, task.hi)
    for owner, block in zip(task.owners, blocks):
        ctx.send(owner, MessageKind.ROW_BLOCK, block)
    return sum(block.ops for block in blocks)


@dataclass
class SolveTask:
    sources: tuple[int, ...]
    level: int


def _solve_stage(ctx: WorkerContext, task: SolveTask | None):
    if task is None:
        return None
    blocks = [ctx.recv(source, MessageKind.ROW_BLOCK) for source in task.sources]
    product, rhs = gather_row_blocks(blocks)
    try:
        lu = lu_factor_no_pivot(product)
    except SingularPivotError as exc:
        raise IllConditionedProductError(
            f"prefix product of level {task.level} cannot be factored ({exc}); "
            f"split the time interval into more blocks with block_jacobi or "
            f"paradin_parareal."
        ) from exc
    return lu_solve(lu, rhs)


@dataclass
class NormTask:
    values: np.ndarray
    kind: NormKind


def _norm_contribution_stage(ctx: WorkerContext, task: NormTask):
    contribution = norm_contribution(task.values, task.kind)
    ctx.send(0, MessageKind.NORM_CONTRIBUTION, contribution)


def _norm_gather_stage(ctx: WorkerContext, sources: tuple[int, ...] | None):
    if sources is None:
        return None
    return [ctx.recv(source, MessageKind.NORM_CONTRIBUTION) for source in sources]


@dataclass
class CouplingTask:
    dests: tuple[int, ...]
    build: Callable[[], np.ndarray]


def _coupling_stage(ctx: WorkerContext, tasks: list[CouplingTask] | None):
    for task in tasks or ():
        vector = task.build()
        for dest in task.dests:
            ctx.send(dest, MessageKind.COUPLING_VECTOR, vector)


def _forward(vector: np.ndarray) -> np.ndarray:
    return vector


def _start_value(
    transfer: Transfer,
    c_new: np.ndarray,
    v_end: np.ndarray | None = None,
    c_old: np.ndarray | None = None,
) -> np.ndarray:
    # corrected fine-space start of the next block: P c_new + v_end - P c_old
    start = transfer.prolong(c_new)
    if v_end is not None:
        start = start + v_end - transfer.prolong(c_old)
    return start


def _coarse_jump(transfer: Transfer, v_end: np.ndarray, c_old: np.ndarray):
    return transfer.restrict(v_end) - c_old


class PararealIterate(NamedTuple):
    k: int
    v: np.ndarray
    c_new: np.ndarray
    c_old: np.ndarray
    defects: np.ndarray  # start handed to block m + 1 minus v^{mJ}, m = 1..M-1


def _continuity_defects(inbox, layout: BlockLayout, v: np.ndarray) -> np.ndarray:
    """Residual of the all-at-once system left at the block boundaries by one sweep."""
    starts = {msg.source: msg.payload for msg in inbox if msg.dest == msg.source + 1}
    ends = [layout.end_worker(m) for m in range(1, layout.num_blocks)]
    return np.array([starts[w] - v[w] for w in ends]).reshape(len(ends), v.shape[1])


@dataclass
class CoarseSweepTask:
    transfer: Transfer
    jacobians: list[BandedMatrix]
    rhs: list[np.ndarray]
    fine_ends: list[np.ndarray] | None = None  # v^{mJ}, m = 1..M-1
    previous: list[np.ndarray] | None = None  # P c^{k-1}_m, m = 1..M-1


def _coarse_sweep_stage(ctx: WorkerContext, task: CoarseSweepTask | None):
    """Sequential coarse propagation G plus the classical correction, on one worker."""
    if task is None:
        return None
    transfer = task.transfer
    num_blocks = len(task.jacobians)
    coarse, propagated, starts = [], [], []
    start = None
    for m in range(num_blocks):
        rhs = task.rhs[m] if start is None else task.rhs[m] + transfer.restrict(start)
        c = lu_solve(lu_factor_no_pivot(task.jacobians[m]), rhs)
        coarse.append(c)
        if m == num_blocks - 1:
            break
        g = transfer.prolong(c)
        propagated.append(g)
        if task.fine_ends is None:
            start = g
        else:
            start = g + task.fine_ends[m] - task.previous[m]
        starts.append(start)
    return coarse, propagated, starts


# engine


@dataclass
class Group:
    """Workers solving one chain of levels; ``workers[l - 1]`` owns level l."""

    workers: tuple[int, ...]
    jacobians: list[BandedMatrix]
    rhs: list[np.ndarray]
    couplings: tuple[tuple[int, int], ...] = ()


class _Engine:
    def __init__(self, runtime: Runtime):
        self.runtime = runtime
        self.n = runtime.num_workers
        self.max_chain_ops = 0

    def run(self, stage, data, inbox=()) -> StageResult:
        try:
            return self.runtime.run_stage(stage, data, inbox)
        except WorkerError as exc:
            if isinstance(exc.cause, (IllConditionedProductError, SingularPivotError)):
                raise exc.cause from exc
            raise

    def assemble(self, p, grid, state, layout=None, transfer=None):
        """Fine (and with a layout, coarse) Jacobians and right-hand sides."""
        block_len = layout.block_len if layout is not None else None
        topology = replace(self.runtime.topology, block_len=block_len)
        data = []
        for w in range(self.n):
            role = topology.role(w)
            level = role.fine_level
            task = AssembleTask(p, grid, level, state[level], state[level - 1])
            if role.coarse_level is not None:
                m = role.coarse_level
                start = state[(m - 1) * block_len]
                task.coarse = (transfer, state[level], start)
                task.coarse_level = m
            data.append(task)
        outputs = self.run(_assemble_stage, data).outputs
        jacobians = [fine[0] for fine, _ in outputs]
        rhs = [fine[1] for fine, _ in outputs]
        coarse = [c for _, c in outputs if c is not None]
        return jacobians, rhs, [c[0] for c in coarse], [c[1] for c in coarse]

    def paradin(self, groups: list[Group], inbox=()) -> list:
        chain_data = [None] * self.n
        solve_data = [None] * self.n
        for group in groups:
            cores = len(group.workers)
            ns = group.jacobians[0].n
            for s, (w, (lo, hi)) in enumerate(
                zip(group.workers, row_ranges(ns, cores))
            ):
                chain_data[w] = ChainTask(
                    s + 1, lo, hi, group.workers, group.jacobians, group.rhs,
                    group.couplings,
                )
                solve_data[w] = SolveTask(group.workers, s + 1)
        chained = self.run(_chain_stage, chain_data, inbox)
        self.max_chain_ops = max(self.max_chain_ops, max(chained.outputs))
        return self.run(_solve_stage, solve_data, chained.messages).outputs

    def norm(self, levels, grid: GridSpec, kind: NormKind) -> float:
        """Space-time norm of one vector per worker, reduced on worker 0."""
        tasks = [NormTask(levels[w], kind) for w in range(self.n)]
        sent = self.run(_norm_contribution_stage, tasks)
        gather = [tuple(range(self.n))] + [None] * (self.n - 1)
        contributions = self.run(_norm_gather_stage, gather, sent.messages).outputs[0]
        return combine_contributions(contributions, grid.tau, grid.hx, grid.hy, kind)

    def couple(self, tasks: dict[int, list[CouplingTask]]) -> StageResult:
        return self.run(_coupling_stage, [tasks.get(w) for w in range(self.n)])


@contextmanager
def _runtime_for(nt: int, runtime: Runtime | None):
    if runtime is None:
        with Runtime(WorkerTopology(nt)) as owned:
            yield owned
        return
    if runtime.num_workers != nt:
        raise ValueError(
            f"runtime has {runtime.num_workers} workers, the grid has {nt} time levels."
        )
    yield runtime


def _block_groups(layout, jacobians, rhs, coupled: bool) -> list[Group]:
    groups = []
    for m in range(1, layout.num_blocks + 1):
        first = (m - 1) * layout.block_len
        couplings = ((0, layout.end_worker(m - 1)),) if coupled and m > 1 else ()
        groups.append(
            Group(
                layout.workers(m),
                jacobians[first : first + layout.block_len],
                rhs[first : first + layout.block_len],
                couplings,
            )
        )
    return groups


# linear solves and iterates on one all-at-once system


def assemble_linear_system(
    p: ProblemSpec, grid: GridSpec, state: np.ndarray
) -> tuple[list[BandedMatrix], list[np.ndarray]]:
    """A_n and tau r^n for n = 1..nt at the iterate ``state`` (nt + 1 rows)."""
    jacobians, rhs = [], []
    for n in range(1, grid.nt + 1):
        t = grid.time(n)
        jacobians.append(assemble_jacobian(p, grid, state[n], t, grid.tau))
        rhs.append(newton_rhs(p, grid, state[n], state[n - 1], t))
    return jacobians, rhs


def paradin_linear_solve(
    jacobians: list[BandedMatrix], rhs: list[np.ndarray], runtime: Runtime | None = None
) -> np.ndarray:
    """Direct solve of A_n v^n - v^{n-1} = b^n (v^0 = 0) through prefix products."""
    with _runtime_for(len(jacobians), runtime) as rt:
        engine = _Engine(rt)
        outputs = engine.paradin([Group(tuple(range(len(jacobians))), jacobians, rhs)])
    return np.array(outputs)


def _jacobi_sweeps(engine, jacobians, rhs, layout) -> Iterator[tuple[int, np.ndarray]]:
    inbox = ()
    k = 0
    while True:
        k += 1
        outputs = engine.paradin(_block_groups(layout, jacobians, rhs, k > 1), inbox)
        v = np.array(outputs)
        yield k, v
        tasks = {
            layout.end_worker(m): [
                CouplingTask(
                    layout.workers(m + 1),
                    partial(_forward, v[m * layout.block_len - 1]),
                )
            ]
            for m in range(1, layout.num_blocks)
        }
        inbox = engine.couple(tasks).messages


def block_jacobi_iterates(
    jacobians: list[BandedMatrix],
    rhs: list[np.ndarray],
    layout: BlockLayout,
    runtime: Runtime | None = None,
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (sweep k, all-level iterate) for k = 1, 2, ... without stopping."""
    with _runtime_for(len(jacobians), runtime) as rt:
        yield from _jacobi_sweeps(_Engine(rt), jacobians, rhs, layout)


def _coarse_group(layout: BlockLayout, cjacobians, crhs, coupled: bool) -> Group:
    workers = tuple(layout.end_worker(m) for m in range(1, layout.num_blocks + 1))
    couplings = (
        tuple((m, layout.end_worker(m)) for m in range(1, layout.num_blocks))
        if coupled
        else ()
    )
    return Group(workers, cjacobians, crhs, couplings)


def _parareal_sweeps(engine, layout, transfer, jacobians, rhs, cjacobians, crhs):
    M, J = layout.num_blocks, layout.block_len
    coarse_workers = tuple(layout.end_worker(m) for m in range(1, M + 1))

    def coarse_values(outputs):
        return [outputs[w] for w in coarse_workers]

    c_old = coarse_values(
        engine.paradin([_coarse_group(layout, cjacobians, crhs, False)])
    )
    starts = {
        layout.end_worker(m): [
            CouplingTask(
                layout.workers(m + 1), partial(_start_value, transfer, c_old[m - 1])
            )
        ]
        for m in range(1, M)
    }
    k = 0
    while True:
        k += 1
        inbox = engine.couple(starts).messages
        v = np.array(engine.paradin(_block_groups(layout, jacobians, rhs, True), inbox))
        defects = _continuity_defects(inbox, layout, v)
        jumps = {
            layout.end_worker(m): [
                CouplingTask(
                    coarse_workers,
                    partial(_coarse_jump, transfer, v[m * J - 1], c_old[m - 1]),
                )
            ]
            for m in range(1, M)
        }
        inbox = engine.couple(jumps).messages
        c_new = coarse_values(
            engine.paradin([_coarse_group(layout, cjacobians, crhs, True)], inbox)
        )
        yield PararealIterate(k, v, np.array(c_new), np.array(c_old), defects)
        starts = {
            layout.end_worker(m): [
                CouplingTask(
                    layout.workers(m + 1),
                    partial(
                        _start_value, transfer, c_new[m - 1], v[m * J - 1], c_old[m - 1]
                    ),
                )
            ]
            for m in range(1, M)
        }
        c_old = c_new


def _baseline_sweeps(engine, layout, transfer, jacobians, rhs, cjacobians, crhs):
    M, J = layout.num_blocks, layout.block_len
    only_first = [None] * engine.n

    def sweep(fine_ends=None, previous=None):
        data = list(only_first)
        data[0] = CoarseSweepTask(transfer, cjacobians, crhs, fine_ends, previous)
        return engine.run(_coarse_sweep_stage, data).outputs[0]

    c_old, propagated, starts = sweep()
    k = 0
    while True:
        k += 1
        tasks = {
            layout.end_worker(m): [
                CouplingTask(layout.workers(m + 1), partial(_forward, starts[m - 1]))
            ]
            for m in range(1, M)
        }
        inbox = engine.couple(tasks).messages
        v = np.array(engine.paradin(_block_groups(layout, jacobians, rhs, True), inbox))
        defects = _continuity_defects(inbox, layout, v)
        c_new, new_propagated, starts = sweep(
            [v[m * J - 1] for m in range(1, M)], propagated
        )
        yield PararealIterate(k, v, np.array(c_new), np.array(c_old), defects)
        c_old, propagated = c_new, new_propagated


def _parareal_iterates(sweeps, p, grid, state, layout, cs, runtime):
    transfer = Transfer.for_layout(grid, layout, cs)
    with _runtime_for(grid.nt, runtime) as rt:
        engine = _Engine(rt)
        jacobians, rhs, cjacobians, crhs = engine.assemble(
            p, grid, state, layout, transfer
        )
        yield from sweeps(engine, layout, transfer, jacobians, rhs, cjacobians, crhs)


def paradin_parareal_iterates(
    p: ProblemSpec,
    grid: GridSpec,
    state: np.ndarray,
    layout: BlockLayout,
    cs: int = 1,
    runtime: Runtime | None = None,
) -> Iterator[PararealIterate]:
    """Yield a ``PararealIterate`` per sweep of the decoupled-coarse Parareal."""
    yield from _parareal_iterates(_parareal_sweeps, p, grid, state, layout, cs, runtime)


def parareal_baseline_iterates(
    p: ProblemSpec,
    grid: GridSpec,
    state: np.ndarray,
    layout: BlockLayout,
    cs: int = 1,
    runtime: Runtime | None = None,
) -> Iterator[PararealIterate]:
    """Same iterates as ``paradin_parareal_iterates`` with a sequential coarse sweep."""
    yield from _parareal_iterates(_baseline_sweeps, p, grid, state, layout, cs, runtime)


# Newton drivers


@dataclass
class _LinearStats:
    parareal_iters: int | None = None
    jacobi_sweeps: int | None = None


def _newton(
    p: ProblemSpec,
    grid: GridSpec,
    cfg: NewtonConfig,
    guess: SpaceTimeSolution | None,
    method: Method,
    runtime: Runtime | None,
    linear_step: Callable[[_Engine, np.ndarray], tuple[np.ndarray, _LinearStats]],
    layout: BlockLayout | None = None,
    cs: int = 1,
) -> SolveReport:
    start = time.perf_counter()
    if guess is None:
        guess = build_initial_guess(p, grid, guess_factor(grid.nt, default_cf(p)), cfg)
    guess.validate(grid)
    initial = guess.initial.copy()
    levels = guess.levels.copy()
    parareal, jacobi, norms = [], [], []
    with _runtime_for(grid.nt, runtime) as rt:
        engine = _Engine(rt)
        for iteration in range(1, cfg.max_newton + 1):
            state = np.vstack([initial[None, :], levels])
            update, stats = linear_step(engine, state)
            levels += update
            norm = engine.norm(update, grid, cfg.norm_kind)
            norms.append(norm)
            if stats.parareal_iters is not None:
                parareal.append(stats.parareal_iters)
            if stats.jacobi_sweeps is not None:
                jacobi.append(stats.jacobi_sweeps)
            log.debug(f"{method.value}: Newton {iteration}, |du| = {norm:.3e}")
            check_divergence(norms, "Newton update norm")
            if norm < cfg.eps_newton:
                break
        else:
            raise NewtonConvergenceError(
                f"{method.value} did not converge within {cfg.max_newton} Newton "
                f"iterations (last update norm {norms[-1]:.3e})."
            )
        mode = rt.mode
    return SolveReport(
        SpaceTimeSolution(initial, levels),
        method,
        len(norms),
        parareal,
        jacobi,
        norms,
        norms[-1],
        time.perf_counter() - start,
        mode,
        engine.max_chain_ops,
        layout.num_blocks if layout else 1,
        cs,
    )


def paradin_solve(
    p: ProblemSpec,
    grid: GridSpec,
    cfg: NewtonConfig,
    guess: SpaceTimeSolution | None = None,
    runtime: Runtime | None = None,
) -> SolveReport:
    if grid.nt >= math.sqrt(grid.ns):
        log.warning(
            f"nt={grid.nt} is not below sqrt(ns)={math.sqrt(grid.ns):.1f}; prefix "
            f"products fill their band."
        )

    def step(engine, state):
        jacobians, rhs, _, _ = engine.assemble(p, grid, state)
        outputs = engine.paradin([Group(tuple(range(grid.nt)), jacobians, rhs)])
        return np.array(outputs), _LinearStats()

    return _newton(p, grid, cfg, guess, Method.PARADIN, runtime, step)


def block_jacobi_solve(
    p: ProblemSpec,
    grid: GridSpec,
    cfg: NewtonConfig,
    layout: BlockLayout,
    guess: SpaceTimeSolution | None = None,
    runtime: Runtime | None = None,
) -> SolveReport:
    _check_layout(grid, layout)

    def step(engine, state):
        jacobians, rhs, _, _ = engine.assemble(p, grid, state)
        previous = None
        for k, v in _jacobi_sweeps(engine, jacobians, rhs, layout):
            if k == layout.num_blocks:
                break
            if (
                previous is not None
                and grid_norm(v - previous, grid, cfg.norm_kind) < cfg.eps_parareal
            ):
                break
            previous = v
        return v, _LinearStats(jacobi_sweeps=k)

    return _newton(p, grid, cfg, guess, Method.BLOCK_JACOBI, runtime, step, layout)


def _check_layout(grid: GridSpec, layout: BlockLayout) -> None:
    if layout.nt != grid.nt:
        raise ValueError(f"layout covers {layout.nt} levels, the grid has {grid.nt}.")
    layout.check_constraints(grid.ns)


def _parareal_step(sweeps, p, grid, cfg, layout, transfer):
    M = layout.num_blocks
    cap = min(cfg.max_parareal or M, M)
    cgrid = transfer.coarse_grid

    def step(engine, state):
        jacobians, rhs, cjacobians, crhs = engine.assemble(
            p, grid, state, layout, transfer
        )
        increments, residuals, previous = [], [], None
        for k, v, c_new, c_old, defects in sweeps(
            engine, layout, transfer, jacobians, rhs, cjacobians, crhs
        ):
            change = grid_norm(c_new - c_old, cgrid, cfg.norm_kind)
            residuals.append(grid_norm(defects, grid, cfg.norm_kind))
            log.debug(
                f"Parareal iteration {k}: |dc| = {change:.3e}, "
                f"boundary residual = {residuals[-1]:.3e}"
            )
            check_divergence(residuals, "Parareal boundary residual")
            if previous is not None:
                increments.append(grid_norm(v - previous, grid, cfg.norm_kind))
                check_divergence(increments, "Parareal fine-sweep increment")
            if min(change, residuals[-1]) < cfg.eps_parareal:
                break
            if k >= cap:
                if transfer.cs > 1 and M > 1:
                    # exactness after M sweeps comes from propagation alone
                    raise ParallelDivergenceError(
                        f"Parareal with spatial coarsening by {transfer.cs} did not "
                        f"reach eps_P={cfg.eps_parareal:.1e} within {k} of {M} "
                        f"sweeps (boundary residual {residuals[-1]:.3e}); the coarse "
                        f"correction does not converge."
                    )
                break
            previous = v
        return v, _LinearStats(parareal_iters=k)

    return step


def parareal_linear_baseline(
    p: ProblemSpec,
    grid: GridSpec,
    cfg: NewtonConfig,
    layout: BlockLayout,
    guess: SpaceTimeSolution | None = None,
    runtime: Runtime | None = None,
    cs: int = 1,
) -> SolveReport:
    _check_layout(grid, layout)
    transfer = Transfer.for_layout(grid, layout, cs)
    step = _parareal_step(_baseline_sweeps, p, grid, cfg, layout, transfer)
    return _newton(
        p, grid, cfg, guess, Method.PARAREAL_BASELINE, runtime, step, layout, cs
    )


def paradin_parareal_solve(
    p: ProblemSpec,
    grid: GridSpec,
    cfg: NewtonConfig,
    layout: BlockLayout,
    guess: SpaceTimeSolution | None = None,
    cs: int | None = None,
    runtime: Runtime | None = None,
) -> SolveReport:
    cs = cs or 1
    _check_layout(grid, layout)
    transfer = Transfer.for_layout(grid, layout, cs)
    step = _parareal_step(_parareal_sweeps, p, grid, cfg, layout, transfer)
    return _newton(
        p, grid, cfg, guess, Method.PARADIN_PARAREAL, runtime, step, layout, cs
    )


def solve(
    method: Method,
    p: ProblemSpec,
    grid: GridSpec,
    cfg: NewtonConfig,
    layout: BlockLayout | None = None,
    guess: SpaceTimeSolution | None = None,
    cs: int | None = None,
    runtime: Runtime | None = None,
) -> SolveReport:
    """Run one method; parallel methods share ``guess`` and ``runtime``."""
    method = Method(method)
    if method is Method.SEQUENTIAL:
        return sequential_bdf1(p, grid, cfg)
    if method is Method.PARADIN:
        return paradin_solve(p, grid, cfg, guess, runtime)
    layout = layout or BlockLayout.default_for(p, grid.nt)
    if method is Method.BLOCK_JACOBI:
        return block_jacobi_solve(p, grid, cfg, layout, guess, runtime)
    if method is Method.PARAREAL_BASELINE:
        return parareal_linear_baseline(p, grid, cfg, layout, guess, runtime, cs or 1)
    return paradin_parareal_solve(p, grid, cfg, layout, guess, cs, runtime)


def exact_space_time(p: ProblemSpec, grid: GridSpec) -> SpaceTimeSolution:
    levels = np.array(
        [exact_field(p, grid, grid.time(n)) for n in range(1, grid.nt + 1)]
    )
    return SpaceTimeSolution(initial_field(p, grid), levels)
