"""End-to-end state-feedback synthesis.

Assemble the synthesis program, solve it (fixed performance level or
minimised t = gamma^2), regularise the algebraic certificate block when it
comes back numerically singular, recover the gain through the triangular
change of variables, and build the closed-loop plant.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS
from .errors import AlphaPathError
from .lmi import assemble_synthesis, assemble_synthesis_alpha
from .model import (DescriptorPlant, UncertainPlant, check_causal_controllability,
                    svd_equivalent_form)
from .sdp import SdpProblem, solve_feasibility, minimize_linear, verify_solution


@dataclass
class SynthesisResult:
    """Outcome of a synthesis attempt.

    ``status`` is 'ok', 'infeasible' (no certificate found; the conditions
    are sufficient only) or 'numerical_failure'.  On success ``gain`` is the
    m x n state-feedback matrix, ``gamma`` the certified level, and
    ``certificate`` the decision-variable blocks that witness it.
    """

    status: str
    gain: np.ndarray | None = None
    gamma: float | None = None
    certificate: dict | None = None
    s_regularized: bool = False
    s_shift: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status == "ok"

    def to_dict(self):
        cert = None
        if self.certificate is not None:
            cert = {
                k: (v if np.isscalar(v) else np.asarray(v).tolist())
                for k, v in self.certificate.items()
            }
        return {
            "status": self.status,
            "gain": None if self.gain is None else self.gain.tolist(),
            "gamma": self.gamma,
            "certificate": cert,
            "s_regularized": self.s_regularized,
            "s_shift": self.s_shift,
            "diagnostics": self.diagnostics,
        }


def recover_gain(q_mat, r_mat, s_mat, z_mat, v_mat, cond_limit=DEFAULTS.cond_limit):
    """Invert the change of variables [Q R; 0 S] Fd' = Z and undo the state
    transform: F = Z' [[Q^-T, 0], [-S^-T R' Q^-T, S^-T]] V^-1.

    Q must be invertible (guaranteed by the feasibility of the program);
    a singular S should be regularised before calling this.
    """
    q_mat = np.atleast_2d(q_mat)
    s_mat = np.atleast_2d(s_mat)
    r = q_mat.shape[0]
    nr = s_mat.shape[0]
    if r and np.linalg.cond(q_mat) > cond_limit:
        raise np.linalg.LinAlgError("Q block is numerically singular")
    if nr and np.linalg.cond(s_mat) > cond_limit:
        raise np.linalg.LinAlgError("S block is numerically singular")
    tri = np.block([[q_mat, np.atleast_2d(r_mat).reshape(r, nr)],
                    [np.zeros((nr, r)), s_mat]])
    return np.linalg.solve(v_mat.T, np.linalg.solve(tri, z_mat)).T


def closed_loop(plant, gain):
    """Apply u = F x: the state matrix becomes A + Bu F; uncertainty factors
    and the input maps are unchanged."""
    gain = np.atleast_2d(np.asarray(gain, dtype=float))
    if isinstance(plant, UncertainPlant):
        inner = closed_loop(plant.plant, gain)
        return UncertainPlant(inner, s=plant.s,
                              **{k: getattr(plant, k) for k in
                                 ("MA", "NA", "MB", "NB", "MC", "NC", "MD", "ND")})
    return DescriptorPlant(
        E=plant.E, A=plant.A + plant.Bu @ gain, Bw=plant.Bw, Bu=plant.Bu,
        C=plant.C, Dw=plant.Dw, rank_tol=plant.rank_tol)


def regularize_S(x, problem, cond_limit=DEFAULTS.cond_limit):
    """Shift a numerically singular S block to S + shift*I while preserving
    the certificate margin (>= delta/4 on every block).

    The shift ladder 2^-k * ||S||_2, k = 4..40 is tried largest-first, so
    the search is deterministic.  Returns (x, 0.0) unchanged when S is
    already well conditioned; raises ArithmeticError on exhaustion.
    """
    layout = problem.layout
    vals = layout.unpack(x)
    s_mat = np.atleast_2d(vals["S"])
    nr = s_mat.shape[0]
    if nr == 0 or np.linalg.cond(s_mat) <= cond_limit:
        return x, 0.0
    scale = np.linalg.norm(s_mat, 2)
    if scale == 0.0:
        scale = 1.0  # ladder base for an all-zero S
    quarter = 0.25 * min(problem.deltas)
    for k in range(4, 41):
        shift = 2.0 ** (-k) * scale
        trial = dict(vals)
        trial["S"] = s_mat + shift * np.eye(nr)
        x_try = layout.pack(trial)
        if min(verify_solution(problem, x_try)) >= quarter:
            if np.linalg.cond(trial["S"]) > cond_limit:
                continue
            return x_try, shift
    raise ArithmeticError("no shift preserves the certificate margin")


def _assemble(form, gamma, alpha):
    if alpha == 0.0:
        return assemble_synthesis(form, gamma)
    return assemble_synthesis_alpha(form, gamma, alpha)


def _finish(uplant, form, problem, sol, gamma, alpha, config, extra_diag):
    layout = problem.layout
    x = sol.x
    diag = dict(extra_diag)
    diag.update({
        "solver_status": sol.status,
        "iterations": sol.iterations,
        "margin": sol.margin,
    })
    try:
        x, shift = regularize_S(x, problem, config.cond_limit)
    except ArithmeticError as exc:
        return SynthesisResult("numerical_failure",
                               diagnostics={**diag, "note": str(exc)})
    vals = layout.unpack(x)
    q_mat, s_mat = np.atleast_2d(vals["Q"]), np.atleast_2d(vals["S"])
    diag["cond_Q"] = float(np.linalg.cond(q_mat)) if q_mat.size else 1.0
    diag["cond_S"] = float(np.linalg.cond(s_mat)) if s_mat.size else 1.0
    margins = verify_solution(problem, x)
    diag["block_margins"] = [float(m) for m in margins]
    if min(margins) < 0.25 * min(problem.deltas):
        return SynthesisResult("numerical_failure",
                               diagnostics={**diag, "note": "certificate margin lost"})
    try:
        gain = recover_gain(vals["Q"], vals["R"], vals["S"], vals["Z"],
                            form.V, config.cond_limit)
    except np.linalg.LinAlgError as exc:
        return SynthesisResult("numerical_failure",
                               diagnostics={**diag, "note": str(exc)})
    cert = {k: vals[k] for k in ("L", "Q", "R", "S", "Z", "eps") if k in vals}
    if "t" in vals:
        cert["t"] = vals["t"]
    return SynthesisResult("ok", gain=gain, gamma=float(gamma),
                           certificate=cert, s_regularized=shift > 0.0,
                           s_shift=float(shift), diagnostics=diag)


def _prepare(uplant, alpha):
    if isinstance(uplant, DescriptorPlant):
        uplant = UncertainPlant.certain(uplant)
    if alpha > 0.0 and not uplant.uncertainty_only_in_a:
        raise AlphaPathError("alpha > 0 requires uncertainty confined to the "
                             "state matrix")
    pl = uplant.plant
    if not check_causal_controllability(pl.E, pl.A, pl.Bu, pl.rank_tol):
        warnings.warn("plant fails the causal-controllability rank test; "
                      "synthesis may be infeasible", stacklevel=3)
    return uplant


def synthesize(uplant, gamma, alpha=0.0, config=DEFAULTS):
    """Attempt a state-feedback design at a fixed performance level.

    Success certifies that the closed loop is admissible with worst-case
    peak gain below gamma for every admissible Delta (sufficient
    certificate).  Infeasibility means no certificate was found.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    uplant = _prepare(uplant, alpha)
    form = svd_equivalent_form(uplant, config.rank_tol)
    ami = _assemble(form, gamma, alpha)
    problem = SdpProblem.from_ami(ami, config.margin_scale)
    sol = solve_feasibility(problem)
    if sol.status == "infeasible":
        return SynthesisResult("infeasible", diagnostics={"gamma": gamma})
    if not sol.feasible:
        return SynthesisResult("numerical_failure",
                               diagnostics={"solver_status": sol.status,
                                            "note": sol.note})
    return _finish(uplant, form, problem, sol, gamma, alpha, config, {})


def synthesize_optimal(uplant, alpha=0.0, config=DEFAULTS):
    """Minimise t = gamma^2 subject to the synthesis program and report
    gamma = sqrt(t*)."""
    uplant = _prepare(uplant, alpha)
    form = svd_equivalent_form(uplant, config.rank_tol)
    ami = _assemble(form, None, alpha)
    problem = SdpProblem.from_ami(ami, config.margin_scale)
    sol = minimize_linear(problem, problem.objective_selector("t"))
    if sol.status == "infeasible":
        return SynthesisResult("infeasible")
    extra = {"t_star": sol.objective}
    if sol.feasible:
        gamma = float(np.sqrt(sol.objective))
        return _finish(uplant, form, problem, sol, gamma, alpha, config, extra)
    if sol.objective is None:
        return SynthesisResult("numerical_failure",
                               diagnostics={"solver_status": sol.status,
                                            "note": sol.note})
    # minimiser stopped short of the margin: re-certify at a nudged level
    for bump in (1e-6, 1e-4, 1e-2):
        gamma = float(np.sqrt(sol.objective * (1.0 + bump)))
        retry = synthesize(uplant, gamma, alpha, config)
        if retry.ok:
            retry.diagnostics.update(extra)
            retry.diagnostics["gamma_bump"] = bump
            return retry
    return SynthesisResult("numerical_failure",
                           diagnostics={**extra, "note": "could not re-certify "
                                        "near the minimised level"})
