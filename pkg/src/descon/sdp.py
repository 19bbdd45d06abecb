"""Solve assembled matrix-inequality programs.

Strict inequalities are realised with an explicit margin: each block
constraint F0 + sum x_i F_i < 0 is solved as <= -delta*I with
delta = margin_scale * (1 + ||F0||_2), and blocks are pre-scaled by
1 / (1 + ||F0||_2) so mixed-magnitude data is well conditioned.  Margins
are always reported unscaled.

The reference backend maps the blocks directly onto the semidefinite
standard form of the bundled primal-dual interior-point solver (cvxopt).
Any conic solver handling PSD blocks can be swapped in through the same
``SdpBackend`` contract.  Returned certificates are re-checked here by an
independent symmetric eigenvalue computation; a violating point is never
reported as feasible.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS


@dataclass(frozen=True)
class SdpProblem:
    """Blocks (F0_k, [F_i_k]) with semantics F0 + sum x_i F_i <= -delta_k I."""

    nvar: int
    blocks: tuple          # ((F0, coeffs (nvar,d,d)), ...)
    deltas: tuple          # per-block strictness margin
    layout: object = None  # VariableLayout when built from an assembly

    @classmethod
    def from_ami(cls, ami, margin_scale=DEFAULTS.margin_scale):
        """Split an assembled map into its annotated diagonal sub-blocks."""
        blocks = []
        deltas = []
        for _, off, size in ami.blocks:
            f0 = ami.f0[off: off + size, off: off + size].copy()
            coeffs = ami.coeffs[:, off: off + size, off: off + size].copy()
            blocks.append((f0, coeffs))
            deltas.append(margin_scale * (1.0 + _spectral_norm(f0)))
        return cls(nvar=ami.layout.size, blocks=tuple(blocks),
                   deltas=tuple(deltas), layout=ami.layout)

    def objective_selector(self, name):
        """Unit objective vector picking one scalar layout variable."""
        if self.layout is None:
            raise ValueError("problem carries no variable layout")
        block = self.layout.block(name)
        if block.size != 1:
            raise ValueError(f"{name} is not a scalar variable")
        c = np.zeros(self.nvar)
        c[self.layout.offsets[name]] = 1.0
        return c


@dataclass
class SdpSolution:
    status: str                       # feasible | infeasible | marginal | numerical_failure
    x: np.ndarray | None = None
    margin: float | None = None      # -max_k lambda_max(block_k(x)), unscaled
    block_margins: tuple = ()
    objective: float | None = None
    iterations: int = 0
    note: str = ""

    @property
    def feasible(self):
        return self.status == "feasible"


def _spectral_norm(mat):
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


def verify_solution(problem, x):
    """Independent margin check: per-block -lambda_max via a symmetric
    eigen-decomposition, with no reference to any solver output."""
    x = np.zeros(0) if x is None else np.asarray(x, dtype=float)
    margins = []
    for f0, coeffs in problem.blocks:
        if f0.size == 0:
            margins.append(np.inf)
            continue
        mat = f0 if problem.nvar == 0 else f0 + np.tensordot(x, coeffs, axes=(0, 0))
        margins.append(float(-np.max(np.linalg.eigvalsh(mat))))
    return tuple(margins)


class CvxoptBackend:
    """Primal-dual interior-point solve on the PSD standard form."""

    def __init__(self, tol=DEFAULTS.solver_tol, max_iter=DEFAULTS.solver_max_iter):
        self.tol = tol
        self.max_iter = max_iter

    def solve(self, problem, c):
        from cvxopt import matrix, solvers

        gs, hs = [], []
        for (f0, coeffs), delta in zip(problem.blocks, problem.deltas):
            d = f0.shape[0]
            if d == 0:
                continue
            beta = 1.0 / (1.0 + _spectral_norm(f0))
            cols = np.zeros((d * d, problem.nvar))
            for i in range(problem.nvar):
                cols[:, i] = (beta * coeffs[i]).ravel(order="F")
            gs.append(matrix(cols))
            hs.append(matrix(beta * (-f0 - delta * np.eye(d))))
        opts = {
            "show_progress": False,
            "maxiters": self.max_iter,
            "abstol": self.tol,
            "reltol": max(self.tol, 1e-8),
            "feastol": self.tol,
        }
        sol = solvers.sdp(matrix(np.asarray(c, dtype=float)),
                          Gs=gs, hs=hs, options=opts)
        x = None if sol["x"] is None else np.asarray(sol["x"]).ravel()
        return sol["status"], x, int(sol.get("iterations", 0))


def _classify(problem, raw_status, x, iterations, objective=None, note=""):
    if x is not None:
        margins = verify_solution(problem, x)
        margin = float(min(margins))
        half = 0.5 * min(problem.deltas) if problem.deltas else 0.0
        if margin >= half:
            return SdpSolution("feasible", x, margin, margins,
                               objective, iterations, note)
        if raw_status in ("optimal", "unknown") and margin > 0.0:
            return SdpSolution("marginal", x, margin, margins,
                               objective, iterations, note)
    if raw_status == "primal infeasible":
        return SdpSolution("infeasible", None, None, (), None, iterations, note)
    if raw_status == "dual infeasible":
        return SdpSolution("numerical_failure", None, None, (), None,
                           iterations, note or "objective unbounded below")
    return SdpSolution("numerical_failure", x, None, (), None, iterations,
                       note or f"backend status: {raw_status}")


def _live_variables(problem):
    """Mask of variables that actually enter some block (the interior-point
    form rejects all-zero coefficient columns)."""
    live = np.zeros(problem.nvar, dtype=bool)
    for _, coeffs in problem.blocks:
        if coeffs.shape[0]:
            live |= np.abs(coeffs).reshape(problem.nvar, -1).any(axis=1)
    return live


def _reduced(problem, live):
    blocks = tuple((f0, coeffs[live]) for f0, coeffs in problem.blocks)
    return SdpProblem(nvar=int(live.sum()), blocks=blocks,
                      deltas=problem.deltas)


def _solve_constant(problem):
    margins = verify_solution(problem, np.zeros(problem.nvar))
    margin = float(min(margins))
    status = "feasible" if margin >= 0.5 * min(problem.deltas) else "infeasible"
    return SdpSolution(status, np.zeros(problem.nvar), margin, margins, None, 0)


def solve_feasibility(problem, backend=None):
    """Search for a strictly feasible point.  A returned ``feasible`` status
    is certified by the independent margin check (margin >= delta/2); any
    other status means no certificate was found."""
    live = _live_variables(problem)
    if not live.any():
        return _solve_constant(problem)
    backend = backend or CvxoptBackend()
    reduced = _reduced(problem, live)
    try:
        raw, x_red, iters = backend.solve(reduced, np.zeros(reduced.nvar))
    except (ArithmeticError, ValueError) as exc:
        return SdpSolution("numerical_failure", note=str(exc))
    x = None
    if x_red is not None:
        x = np.zeros(problem.nvar)
        x[live] = x_red
    return _classify(problem, raw, x, iters)


def minimize_linear(problem, c, backend=None):
    """Minimise c'x over the margin-feasible set."""
    c = np.asarray(c, dtype=float)
    if c.shape != (problem.nvar,):
        raise ValueError("objective length must match the variable count")
    live = _live_variables(problem)
    if np.any(c[~live] != 0.0):
        return SdpSolution("numerical_failure",
                           note="objective weights an unconstrained variable "
                                "(unbounded below)")
    if not live.any():
        sol = _solve_constant(problem)
        sol.objective = 0.0 if sol.feasible else None
        return sol
    backend = backend or CvxoptBackend()
    reduced = _reduced(problem, live)
    try:
        raw, x_red, iters = backend.solve(reduced, c[live])
    except (ArithmeticError, ValueError) as exc:
        return SdpSolution("numerical_failure", note=str(exc))
    x = None
    if x_red is not None:
        x = np.zeros(problem.nvar)
        x[live] = x_red
    objective = None if x is None else float(c @ x)
    return _classify(problem, raw, x, iters, objective)
