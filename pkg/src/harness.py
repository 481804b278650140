"""
Experiment driver for the time-parallel solvers: runs grid-refinement studies from a
flat ``key = value`` config, compares methods against the sequential reference,
evaluates the model speedups and checks the published error tables.

Usage:
    python3 src/harness.py solve --config configs/table1.cfg
    python3 src/harness.py solve --config configs/equivalence.cfg --compare
    python3 src/harness.py verify --suite proposition1
    python3 src/harness.py speedup --nt 480 --cf 4 --kp 2 --cs 2
"""

import argparse
import csv
import logging
import math
import sys
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
from tabulate import tabulate

from mesh import GridSpec, SpaceTimeSolution
from model import ProblemSpec, default_grid, exact_field, grid_from_points
from runtime import Mode, Runtime, WorkerTopology
from solvers import (
    BlockLayout,
    Method,
    NewtonConfig,
    NormKind,
    SolveReport,
    assemble_linear_system,
    block_jacobi_iterates,
    build_initial_guess,
    default_cf,
    grid_norm,
    guess_factor,
    paradin_linear_solve,
    solve,
)

log = logging.getLogger(__name__)

CSV_HEADER = [
    "problem", "nt", "nx", "ny", "method", "M", "cf", "cs", "L1", "L2", "Linf",
    "rate", "newton_iters", "parareal_iters", "jacobi_iters", "wall_s",
    "model_speedup", "mode", "status",
]  # fmt: off

CONFIG_KEYS = {
    "problem", "nt", "nx", "ny", "method", "blocks", "cf", "cs", "eps_newton",
    "safety_factor", "max_newton", "max_parareal", "norm", "mode", "workers",
    "out_dir", "seed", "dump", "mu0", "alpha", "shock_speed", "perturb",
}  # fmt: off

# published sequential errors, keyed by (nt, nx, ny)
TABLE1_L2 = {(30, 4, 4): 2.40e-5, (60, 8, 8): 8.50e-6, (120, 16, 16): 2.65e-6}
TABLE1_RATES = (1.50, 1.68)
TABLE4_L1 = {(30, 7, 7): 3.00e-2, (60, 11, 11): 2.12e-2, (120, 21, 21): 1.33e-2}
TABLE4_RATES = (0.50, 0.67)
ERROR_FACTOR = 2.0
RATE_TOLERANCE = 0.15


class SpeedupVariant(str, Enum):
    PARADIN = "paradin"
    COMBINED = "combined"
    COMBINED_COARSENED = "combined_coarsened"


@dataclass(frozen=True)
class SpeedupModel:
    nt: float
    cf: float
    p: float = 3
    k_p: float = 2
    cs: float = 1
    d: float = 2

    def __post_init__(self):
        for name in ("nt", "cf", "p", "k_p", "cs", "d"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}.")


def predict_speedup(m: SpeedupModel, variant: SpeedupVariant) -> float:
    """
    Model speedup over sequential BDF1 with ``nt`` cores and a guess coarsened by
    ``cf`` in space and time.
    """
    guess = m.nt / m.cf**m.p
    variant = SpeedupVariant(variant)
    if variant is SpeedupVariant.PARADIN:
        return m.nt / (guess + 1)
    if variant is SpeedupVariant.COMBINED:
        return m.nt / (guess + 2 * m.k_p + 1)
    return m.nt / (guess + (m.k_p + 1) / m.cs**m.d + m.k_p)


def error_norms(
    sol: SpaceTimeSolution, p: ProblemSpec, grid: GridSpec
) -> tuple[float, float, float]:
    """(L1, L2, Linf) of the error against the exact solution over levels 1..nt."""
    errors = [
        sol.level(n) - exact_field(p, grid, grid.time(n)) for n in range(1, grid.nt + 1)
    ]
    return tuple(grid_norm(errors, grid, kind) for kind in NormKind)


def convergence_rates(errors: list[float]) -> list[float | None]:
    """log2(e_coarse / e_fine) between successive grids; None for the first."""
    rates = [None]
    for coarse, fine in zip(errors, errors[1:]):
        if coarse is None or fine is None or coarse <= 0 or fine <= 0:
            rates.append(None)
        else:
            rates.append(math.log2(coarse / fine))
    return rates


def _size_label(size: tuple[int, int, int]) -> str:
    return "x".join(map(str, size))


@dataclass
class ExperimentConfig:
    problem: ProblemSpec
    grid_sizes: list[tuple[int, int, int]] = field(default_factory=list)
    methods: list[Method] = field(default_factory=lambda: [Method.SEQUENTIAL])
    blocks: list[int | None] = field(default_factory=list)
    cf: int | None = None
    cs: int | None = None
    eps_newton: float | None = None
    safety_factor: float | None = None
    max_newton: int | None = None
    max_parareal: int | None = None
    norm: NormKind = NormKind.L2
    mode: Mode | None = None
    workers: int | None = None
    out_dir: Path = Path("results")
    seed: int = 0
    dump: bool = False
    perturb: float = 0.0

    def grids(self) -> list[GridSpec]:
        """Grid sizes count points per direction with the boundary, like the tables."""
        sizes = self.grid_sizes
        return [grid_from_points(self.problem, nt, nx, ny) for nt, nx, ny in sizes]

    def newton_config(self) -> NewtonConfig:
        return NewtonConfig.for_problem(
            self.problem,
            eps_newton=self.eps_newton,
            safety_factor=self.safety_factor,
            max_newton=self.max_newton,
            max_parareal=self.max_parareal,
            norm_kind=self.norm,
        )

    def layout_for(self, index: int, nt: int) -> BlockLayout:
        blocks = self.blocks[index] if index < len(self.blocks) else None
        if blocks is None:
            return BlockLayout.default_for(self.problem, nt)
        return BlockLayout(blocks, nt)

    def guess_cf(self, nt: int) -> int:
        return guess_factor(nt, self.cf or default_cf(self.problem))

    @property
    def primary_norm(self) -> NormKind:
        # the norm each published table reports
        return NormKind.L2 if self.problem.is_heat else NormKind.L1


def load_config(path) -> dict[str, str]:
    """
    Read a flat ``key = value`` file; ``#`` starts a comment.

    Parameters
    ----------
    path
        Config file path.

    Returns
    -------
    dict
        Raw string values by key.
    """
    values = {}
    with open(path, "r", encoding="utf-8") as file:
        for number, line in enumerate(file, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(
                    f"{path}:{number}: expected 'key = value', got {line!r}."
                )
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{number}: unknown key {key!r}.")
            values[key] = value
    return values


def _int_list(text: str) -> list[int]:
    return [int(item) for item in text.split(",") if item.strip()]


def _optional_int(text: str | None) -> int | None:
    if text is None or text.strip().lower() in ("", "auto", "none"):
        return None
    return int(text)


def config_from_values(values: dict[str, str]) -> ExperimentConfig:
    """Build an ``ExperimentConfig`` from the raw values of ``load_config``."""
    unknown = set(values) - CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}.")
    overrides = {
        key: float(values[key])
        for key in ("mu0", "alpha", "shock_speed")
        if key in values
    }
    problem_name = values.get("problem", "heat")
    if problem_name == "heat":
        overrides.pop("shock_speed", None)
    else:
        overrides.pop("alpha", None)
    problem = ProblemSpec.from_name(problem_name, **overrides)

    columns = [_int_list(values.get(key, "")) for key in ("nt", "nx", "ny")]
    count = max(len(column) for column in columns)
    for key, column in zip(("nt", "nx", "ny"), columns):
        if len(column) not in (1, count):
            raise ValueError(
                f"{key} lists {len(column)} values, expected 1 or {count}."
            )
    grid_sizes = [
        tuple(column[i] if len(column) > 1 else column[0] for column in columns)
        for i in range(count)
    ]

    blocks = [
        _optional_int(item)
        for item in values.get("blocks", "").split(",")
        if item.strip()
    ]
    if len(blocks) == 1 and count > 1:
        blocks = blocks * count

    methods = [
        Method(item.strip()) for item in values.get("method", "sequential").split(",")
    ]
    eps = values.get("eps_newton")
    safety = values.get("safety_factor")
    return ExperimentConfig(
        problem=problem,
        grid_sizes=grid_sizes,
        methods=methods,
        blocks=blocks,
        cf=_optional_int(values.get("cf")),
        cs=_optional_int(values.get("cs")),
        eps_newton=float(eps) if eps else None,
        safety_factor=float(safety) if safety else None,
        max_newton=_optional_int(values.get("max_newton")),
        max_parareal=_optional_int(values.get("max_parareal")),
        norm=NormKind(values.get("norm", "L2")),
        mode=Mode(values["mode"]) if values.get("mode") else None,
        workers=_optional_int(values.get("workers")),
        out_dir=Path(values.get("out_dir", "results")),
        seed=int(values.get("seed", 0)),
        dump=values.get("dump", "false").lower() in ("1", "true", "yes"),
        perturb=float(values.get("perturb", 0.0)),
    )


def apply_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Replace the fields given with a value other than None."""
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


@dataclass
class ExperimentReport:
    rows: list[dict] = field(default_factory=list)
    csv_path: Path | None = None
    reports: dict = field(default_factory=dict)


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Enum):
        return value.value
    return str(value)


def write_csv(rows: list[dict], filename) -> None:
    with open(filename, "w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_format(row.get(key)) for key in CSV_HEADER])


def write_gnuplot(rows: list[dict], cfg: ExperimentConfig) -> list[Path]:
    """One ``h  L2`` file per method, finest grid last."""
    paths = []
    for method in cfg.methods:
        path = cfg.out_dir / f"error_{cfg.problem.kind.value}_{method.value}.dat"
        with open(path, "w", encoding="utf-8") as file:
            file.write("# h L2\n")
            for row in rows:
                if row["method"] is method and row["status"] == "ok":
                    file.write(f"{row['h']!r} {row['L2']!r}\n")
        paths.append(path)
    return paths


def _model_speedup(method: Method, grid: GridSpec, cf: int, report: SolveReport):
    if method is Method.SEQUENTIAL:
        return 1.0
    if method is Method.PARADIN:
        return predict_speedup(SpeedupModel(grid.nt, cf), SpeedupVariant.PARADIN)
    if method is Method.PARADIN_PARAREAL:
        k_p = max(report.parareal_iters, 1)
        if report.cs > 1:
            model = SpeedupModel(grid.nt, cf, k_p=k_p, cs=report.cs)
            return predict_speedup(model, SpeedupVariant.COMBINED_COARSENED)
        model = SpeedupModel(grid.nt, cf, k_p=k_p)
        return predict_speedup(model, SpeedupVariant.COMBINED)
    return None


def _initial_guess(cfg: ExperimentConfig, grid: GridSpec) -> SpaceTimeSolution:
    guess = build_initial_guess(
        cfg.problem, grid, cfg.guess_cf(grid.nt), cfg.newton_config()
    )
    if cfg.perturb:
        rng = np.random.default_rng(cfg.seed)
        guess.levels += cfg.perturb * rng.standard_normal(guess.levels.shape)
    return guess


def _run_one(cfg: ExperimentConfig, method: Method, grid, layout, guess) -> SolveReport:
    topology = WorkerTopology.from_environment(
        grid.nt, cfg.mode.value if cfg.mode else None, cfg.workers
    )
    with Runtime(topology) as runtime:
        start = time.perf_counter()
        report = solve(
            method,
            cfg.problem,
            grid,
            cfg.newton_config(),
            layout=layout,
            guess=guess,
            cs=cfg.cs,
            runtime=runtime,
        )
        report.wall_time = time.perf_counter() - start
    return report


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """
    Solve every grid with every configured method and write the CSV report (plus
    gnuplot files, plus solution dumps when ``dump`` is set).
    """
    experiment = ExperimentReport()
    if not cfg.grid_sizes:
        log.info("No grids configured, nothing to run.")
        return experiment
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    problem = cfg.problem.kind.value

    for index, (size, grid) in enumerate(zip(cfg.grid_sizes, cfg.grids())):
        label = _size_label(size)
        layout = cfg.layout_for(index, grid.nt)
        cf = cfg.guess_cf(grid.nt)
        guess = None
        for method in cfg.methods:
            row = {
                "problem": problem,
                "nt": grid.nt,
                "nx": size[1],
                "ny": size[2],
                "method": method,
                "M": layout.num_blocks if method.uses_blocks else None,
                "cf": cf if method is not Method.SEQUENTIAL else None,
                "cs": (cfg.cs or 1) if method.uses_blocks else None,
                "h": grid.hx,
                "status": "ok",
            }
            try:
                if method is not Method.SEQUENTIAL and guess is None:
                    guess = _initial_guess(cfg, grid)
                report = _run_one(cfg, method, grid, layout, guess)
                row["L1"], row["L2"], row["Linf"] = error_norms(
                    report.solution, cfg.problem, grid
                )
                row.update(
                    newton_iters=report.newton_iters,
                    parareal_iters=report.parareal_iters,
                    jacobi_iters=report.jacobi_iters,
                    wall_s=report.wall_time,
                    model_speedup=_model_speedup(method, grid, cf, report),
                    mode=report.mode,
                )
                experiment.reports[(*size, method)] = report
                log.info(
                    f"{method.value} {label}: "
                    f"{report.newton_iters} Newton iterations, L2 error "
                    f"{row['L2']:.3e}, {report.wall_time:.2f} s"
                )
                if cfg.dump:
                    np.savez(
                        cfg.out_dir / f"solution_{problem}_{label}_{method.value}.npz",
                        initial=report.solution.initial,
                        levels=report.solution.levels,
                    )
            except (ValueError, ArithmeticError, RuntimeError) as exc:
                log.error(f"{method.value} {label} failed: {exc}")
                row["status"] = "failed"
            experiment.rows.append(row)

    key = cfg.primary_norm.value
    for method in cfg.methods:
        rows = [row for row in experiment.rows if row["method"] is method]
        rates = convergence_rates([row.get(key) for row in rows])
        for row, rate in zip(rows, rates):
            row["rate"] = rate

    experiment.csv_path = cfg.out_dir / f"results_{problem}.csv"
    write_csv(experiment.rows, experiment.csv_path)
    write_gnuplot(experiment.rows, cfg)
    log.info(f"Results have been written to {experiment.csv_path}")
    return experiment


@dataclass
class ComparisonRow:
    grid: tuple[int, int, int]
    method: Method
    max_diff: float
    tolerance: float

    @property
    def exceeded(self) -> bool:
        return self.max_diff > self.tolerance


def compare_methods(cfg: ExperimentConfig) -> list[ComparisonRow]:
    """Max pointwise difference of every configured method against sequential BDF1."""
    newton = cfg.newton_config()
    tolerance = 10 * newton.eps_newton
    rows = []
    for index, (size, grid) in enumerate(zip(cfg.grid_sizes, cfg.grids())):
        layout = cfg.layout_for(index, grid.nt)
        reference = _run_one(cfg, Method.SEQUENTIAL, grid, layout, None)
        guess = None
        for method in cfg.methods:
            if method is Method.SEQUENTIAL:
                report = reference
            else:
                guess = guess or _initial_guess(cfg, grid)
                report = _run_one(cfg, method, grid, layout, guess)
            diff = reference.solution.max_abs_diff(report.solution)
            row = ComparisonRow(size, method, diff, tolerance)
            if row.exceeded:
                log.warning(
                    f"{method.value} differs from sequential by {diff:.3e} on "
                    f"{_size_label(size)} (tolerance {tolerance:.1e})."
                )
            rows.append(row)
    return rows


@dataclass
class CheckResult:
    name: str
    value: float
    expected: str
    passed: bool


def _table_checks(problem, golden, rates, norm_index, label) -> list[CheckResult]:
    cfg = ExperimentConfig(problem, grid_sizes=list(golden))
    errors = []
    checks = []
    for size, grid in zip(golden, cfg.grids()):
        report = _run_one(cfg, Method.SEQUENTIAL, grid, None, None)
        error = error_norms(report.solution, problem, grid)[norm_index]
        target = golden[size]
        errors.append(error)
        checks.append(
            CheckResult(
                f"{label} {_size_label(size)}",
                error,
                f"{target:.2e} within x{ERROR_FACTOR:g}",
                target / ERROR_FACTOR <= error <= target * ERROR_FACTOR,
            )
        )
    for i, (rate, target) in enumerate(zip(convergence_rates(errors)[1:], rates)):
        checks.append(
            CheckResult(
                f"{label} rate {i + 1}",
                rate,
                f"{target:.2f} +- {RATE_TOLERANCE}",
                rate is not None and abs(rate - target) <= RATE_TOLERANCE,
            )
        )
    return checks


def _equivalence_checks() -> list[CheckResult]:
    checks = []
    cases = [
        (ProblemSpec.heat(), [(30, 4, 4), (60, 8, 8), (120, 16, 16)]),
        (ProblemSpec.burgers(), [(30, 7, 7), (60, 11, 11)]),
    ]
    for problem, sizes in cases:
        cfg = ExperimentConfig(
            problem,
            grid_sizes=sizes,
            methods=[Method.PARADIN, Method.PARADIN_PARAREAL],
        )
        for row in compare_methods(cfg):
            checks.append(
                CheckResult(
                    f"{problem.kind.value} {row.method.value} "
                    f"{_size_label(row.grid)}",
                    row.max_diff,
                    f"<= {row.tolerance:.1e}",
                    not row.exceeded,
                )
            )
    return checks


def _jacobi_sweep(jacobians, rhs, blocks: int, k: int) -> np.ndarray:
    layout = BlockLayout(blocks, len(jacobians))
    for sweep, v in block_jacobi_iterates(jacobians, rhs, layout):
        if sweep == k:
            return v


def _proposition1_checks() -> list[CheckResult]:
    """Block Jacobi with M blocks is exact after M sweeps and not before."""
    problem = ProblemSpec.heat()
    grid = default_grid(problem, 16, 4, 4)
    state = build_initial_guess(problem, grid, 4).stacked()
    jacobians, rhs = assemble_linear_system(problem, grid, state)
    direct = paradin_linear_solve(jacobians, rhs)
    scale = max(float(np.max(np.abs(direct))), 1e-300)
    checks = []
    for blocks in (2, 4, 8):
        at = np.max(np.abs(_jacobi_sweep(jacobians, rhs, blocks, blocks) - direct))
        before = np.max(
            np.abs(_jacobi_sweep(jacobians, rhs, blocks, blocks - 1) - direct)
        )
        checks.append(
            CheckResult(
                f"M={blocks} sweep {blocks}", at, "<= 1e-10 relative",
                at <= 1e-10 * scale,
            )
        )
        checks.append(
            CheckResult(
                f"M={blocks} sweep {blocks - 1}", before, "> 1e-8 relative",
                before > 1e-8 * scale,
            )
        )
    return checks


def _speedup_checks() -> list[CheckResult]:
    combined = predict_speedup(SpeedupModel(480, 4, k_p=2), SpeedupVariant.COMBINED)
    coarsened = predict_speedup(
        SpeedupModel(480, 4, k_p=2, cs=2), SpeedupVariant.COMBINED_COARSENED
    )
    return [
        CheckResult("combined 480/4", combined, "38.4", abs(combined - 38.4) <= 1e-12),
        CheckResult(
            "coarsened 480/4/2", coarsened, "46.83",
            abs(coarsened - 480 / 10.25) <= 1e-12,
        ),
    ]


SUITES = {
    "table1": lambda: _table_checks(
        ProblemSpec.heat(), TABLE1_L2, TABLE1_RATES, 1, "heat L2"
    ),
    "table4": lambda: _table_checks(
        ProblemSpec.burgers(), TABLE4_L1, TABLE4_RATES, 0, "burgers L1"
    ),
    "equivalence": _equivalence_checks,
    "proposition1": _proposition1_checks,
    "speedup": _speedup_checks,
}


def verify(suite: str) -> list[CheckResult]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}, choose from {', '.join(SUITES)}.")
    return SUITES[suite]()


def _print_rows(rows: list[dict]) -> None:
    columns = ["problem", "nt", "nx", "ny", "method", "M", "L1", "L2", "Linf", "rate",
               "newton_iters", "parareal_iters", "wall_s", "status"]  # fmt: off
    table = [
        [
            f"{row[key]:.3e}" if isinstance(row.get(key), float) and key != "rate"
            else _format(row.get(key))
            for key in columns
        ]
        for row in rows
    ]
    print(tabulate(table, headers=columns, tablefmt="simple"))


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Time-parallel Newton solvers for 2-D heat and Burgers problems."
    )
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
    commands = parser.add_subparsers(dest="command", required=True)

    solve_parser = commands.add_parser("solve", help="Run an experiment config.")
    solve_parser.add_argument("--config", type=Path, required=True, help="Config file")
    solve_parser.add_argument("--method", type=str, help="Comma-separated methods")
    solve_parser.add_argument("--mode", choices=[m.value for m in Mode])
    solve_parser.add_argument("--workers", type=int, help="Physical worker processes")
    solve_parser.add_argument("--out", type=Path, help="Output directory")
    solve_parser.add_argument(
        "--compare", action="store_true", help="Also compare against sequential BDF1."
    )

    verify_parser = commands.add_parser("verify", help="Run golden checks.")
    verify_parser.add_argument("--suite", choices=list(SUITES), required=True)

    speedup_parser = commands.add_parser("speedup", help="Print model speedups.")
    speedup_parser.add_argument("--nt", type=float, required=True)
    speedup_parser.add_argument("--cf", type=float, required=True)
    speedup_parser.add_argument("--kp", type=float, default=2)
    speedup_parser.add_argument("--cs", type=float, default=2)
    speedup_parser.add_argument("--p", type=float, default=3)
    speedup_parser.add_argument("--d", type=float, default=2)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    try:
        if args.command == "solve":
            cfg = config_from_values(load_config(args.config))
            methods = (
                [Method(item.strip()) for item in args.method.split(",")]
                if args.method
                else None
            )
            cfg = apply_overrides(
                cfg,
                methods=methods,
                mode=Mode(args.mode) if args.mode else None,
                workers=args.workers,
                out_dir=args.out,
            )
            experiment = run_experiment(cfg)
            _print_rows(experiment.rows)
            if args.compare:
                comparison = compare_methods(cfg)
                print(
                    tabulate(
                        [
                            [_size_label(r.grid), r.method.value,
                             f"{r.max_diff:.3e}", "yes" if r.exceeded else "no"]
                            for r in comparison
                        ],
                        headers=["grid", "method", "max |diff|", "exceeds 10 eps_N"],
                        tablefmt="simple",
                    )
                )  # fmt: off
            if any(row["status"] == "failed" for row in experiment.rows):
                sys.exit(1)
        elif args.command == "verify":
            checks = verify(args.suite)
            print(
                tabulate(
                    [[c.name, c.value, c.expected, "pass" if c.passed else "FAIL"]
                     for c in checks],
                    headers=["check", "value", "expected", "status"],
                    tablefmt="simple",
                )
            )  # fmt: off
            if not all(c.passed for c in checks):
                sys.exit(1)
        else:
            rows = []
            for variant in SpeedupVariant:
                model = SpeedupModel(args.nt, args.cf, args.p, args.kp, args.cs, args.d)
                rows.append([variant.value, predict_speedup(model, variant)])
            print(tabulate(rows, headers=["model", "speedup"], tablefmt="simple"))
    except (ValueError, ArithmeticError, RuntimeError) as e:
        print(f"Error: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
