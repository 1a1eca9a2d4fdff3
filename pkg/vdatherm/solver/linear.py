# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Linear and nonlinear solution of a step system.

Assumptions:
- Dirichlet dofs are eliminated: A_ff x_f = b_f - A_fd x_d
- CG runs with a Jacobi preconditioner, warm-started from the previous iterate
- Picard iterations stop on the relative change max|dx| / max(max|x|, 1)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from vdatherm.contract.models import SolverModel
from vdatherm.logging_config import get_logger
from vdatherm.solver.assembly import LinearSystem
from vdatherm.solver.fields import SolverError

logger = get_logger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    linear_solver: Literal["cg", "direct"] = "cg"
    cg_rtol: float = 1e-9
    picard_tol: float = 1e-6
    picard_max_iterations: int = 25

    @classmethod
    def from_model(cls, model: SolverModel) -> SolverOptions:
        return cls(model.linear_solver, model.cg_rtol, model.picard_tol, model.picard_max_iterations)


@dataclass(frozen=True)
class LinearSolution:
    x: np.ndarray
    iterations: int


def solve_step(system: LinearSystem, options: SolverOptions, x0: np.ndarray | None = None) -> LinearSolution:
    """Solve one assembled system.

    Raises:
        SolverError: if the matrix is not positive on its diagonal or CG does
            not reach the tolerance within 10 * n iterations.
    """
    n = system.n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    fixed = system.dirichlet_dofs
    x[fixed] = system.dirichlet_values
    free = np.ones(n, dtype=bool)
    free[fixed] = False
    if not free.any():
        return LinearSolution(x, 0)

    A = system.matrix
    A_ff = A[free][:, free].tocsr()
    b_f = system.rhs[free]
    if fixed.size:
        b_f = b_f - A[free][:, fixed] @ system.dirichlet_values
    diag = A_ff.diagonal()
    if np.any(diag <= 0.0) or not np.all(np.isfinite(diag)):
        raise SolverError("system matrix is not positive definite (negative coefficient or property)")

    if options.linear_solver == "direct":
        x[free] = spla.spsolve(A_ff.tocsc(), b_f)
        return LinearSolution(x, 1)

    count = 0

    def _count(_: np.ndarray) -> None:
        nonlocal count
        count += 1

    jacobi = sp.diags(1.0 / diag)
    sol, info = spla.cg(
        A_ff, b_f, x0=x[free], rtol=options.cg_rtol, atol=0.0,
        maxiter=10 * int(free.sum()), M=jacobi, callback=_count,
    )
    if info != 0:
        raise SolverError(f"CG did not converge in {10 * int(free.sum())} iterations (info={info})")
    x[free] = sol
    return LinearSolution(x, count)


@dataclass(frozen=True)
class PicardResult:
    x: np.ndarray
    system: LinearSystem
    iterations: int
    linear_iterations: int


def picard_iterate(
    assemble: Callable[[np.ndarray], LinearSystem],
    x0: np.ndarray,
    options: SolverOptions,
    nonlinear: bool = True,
) -> PicardResult:
    """Successive substitution on temperature-dependent coefficients.

    Args:
        assemble: builds the step system with coefficients at a given iterate
        x0: first iterate (the start-of-step temperatures)
        options: tolerances
        nonlinear: False stops after the first solve

    Raises:
        SolverError: if the change does not fall below `picard_tol`.
    """
    x_star = np.array(x0, dtype=float)
    linear_total = 0
    change = np.inf
    for iteration in range(1, options.picard_max_iterations + 1):
        system = assemble(x_star)
        solution = solve_step(system, options, x_star)
        linear_total += solution.iterations
        if not np.all(np.isfinite(solution.x)):
            raise SolverError("non-finite temperatures")
        change = float(np.max(np.abs(solution.x - x_star)) / max(np.max(np.abs(solution.x)), 1.0))
        x_star = solution.x
        if not nonlinear or change <= options.picard_tol:
            return PicardResult(x_star, system, iteration, linear_total)
    raise SolverError(
        f"Picard iterations did not converge in {options.picard_max_iterations} "
        f"iterations (last relative change {change:.3e})"
    )
