"""Solve pipeline and refinement sweeps."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import QuadDegrees, apply_dirichlet, assemble_c0dg, assemble_divform, assemble_rhs
from .linalg import SolveReport, SolverError, solve_sparse
from .mesh import build_rect_mesh
from .norms import ErrorReport, eoc, error_norms
from .problems import PROBLEM_IDS, ProblemSpec, problem
from .space import build_space

logger = logging.getLogger(__name__)

METHODS = ("c0dg", "divform")
SOLVERS = ("direct", "iterative")
DEFAULT_LEVELS = (8, 16, 32, 64)
RATE_KEYS = ("lp", "w1p", "hess", "w2ph")


@dataclass
class RunConfig:
    problem: str = "test1"
    degree: int = 2
    levels: tuple[int, ...] = DEFAULT_LEVELS
    p: float = 2.0
    quad_cell: int | None = None
    quad_edge: int | None = None
    solver: str = "direct"
    tol: float = 1e-10
    method: str = "c0dg"

    def __post_init__(self):
        self.levels = tuple(int(n) for n in self.levels)
        if self.problem not in PROBLEM_IDS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if not 1 <= self.degree <= 4:
            raise ValueError(f"degree must be in 1..4, got {self.degree}")
        if not self.levels or any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be non-empty and strictly increasing")
        if self.levels[0] < 1:
            raise ValueError("levels must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")

    def quad(self) -> QuadDegrees:
        d = QuadDegrees.default(self.degree)
        return QuadDegrees(
            d.cell if self.quad_cell is None else self.quad_cell,
            d.edge if self.quad_edge is None else self.quad_edge,
        )

    def as_dict(self) -> dict:
        d = asdict(self)
        d["levels"] = list(self.levels)
        return d


@dataclass
class LevelResult:
    n: int
    h: float
    ndof: int
    errors: ErrorReport | None
    solve: SolveReport | None
    seconds: float
    error: str | None = None


@dataclass
class ConvergenceTable:
    config: RunConfig
    rows: list[LevelResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.error is None for r in self.rows)

    def series(self, key: str) -> list[float | None]:
        attr = {
            "lp": "err_lp", "w1p": "err_w1p_semi", "hess": "err_hess_broken",
            "jump": "err_jump_term", "w2ph": "err_w2ph",
        }[key]
        return [None if r.errors is None else getattr(r.errors, attr) for r in self.rows]

    def rates(self, key: str) -> list[float | None]:
        """Observed orders aligned with rows; None on the first row."""
        errs = self.series(key)
        out: list[float | None] = [None]
        for i in range(1, len(self.rows)):
            if errs[i - 1] is None or errs[i] is None:
                out.append(None)
            else:
                out.append(eoc(errs[i - 1:i + 1], [self.rows[i - 1].h, self.rows[i].h])[0])
        return out


def solve_once(config: RunConfig, n: int, spec: ProblemSpec | None = None):
    """Assemble, constrain, solve and measure at one level.

    Returns (coefficients, ErrorReport, SolveReport, Space).
    """
    spec = problem(config.problem) if spec is None else spec
    quad = config.quad()
    space = build_space(build_rect_mesh(spec.domain, n), config.degree)
    if config.method == "c0dg":
        K = assemble_c0dg(space, spec.A, quad)
    else:
        K = assemble_divform(space, spec.A, quad)
    b = assemble_rhs(space, spec.f, quad)
    system = apply_dirichlet(K, b, space, spec.boundary_g)
    try:
        report = solve_sparse(system.matrix, system.rhs, tol=config.tol, method=config.solver)
    except SolverError as exc:
        raise SolverError(f"level n={n}: {exc}", residual=exc.residual) from exc
    errors = error_norms(space, report.x, spec, p=config.p, quad=quad)
    return report.x, errors, report, space


def _run_level(config: RunConfig, spec: ProblemSpec, n: int) -> LevelResult:
    t0 = time.perf_counter()
    try:
        _, errors, report, space = solve_once(config, n, spec)
    except (SolverError, ValueError, ArithmeticError) as exc:
        logger.error("%s k=%d n=%d failed: %s", config.problem, config.degree, n, exc)
        mesh = build_rect_mesh(spec.domain, n)
        return LevelResult(n, mesh.h_max, -1, None, None, time.perf_counter() - t0, str(exc))
    dt = time.perf_counter() - t0
    logger.info("%s k=%d n=%d ndof=%d w1p=%.3e hess=%.3e (%.2fs)", config.problem,
                config.degree, n, space.dimension, errors.err_w1p_semi,
                errors.err_hess_broken or np.nan, dt)
    return LevelResult(n, space.mesh.h_max, space.dimension, errors, report, dt)


def thread_count() -> int:
    raw = os.environ.get("NDFORM_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_convergence(config: RunConfig) -> ConvergenceTable:
    """One row per level; failed levels are recorded, not raised."""
    spec = problem(config.problem)
    threads = min(thread_count(), len(config.levels))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda n: _run_level(config, spec, n), config.levels))
    else:
        rows = [_run_level(config, spec, n) for n in config.levels]
    return ConvergenceTable(config, rows)
