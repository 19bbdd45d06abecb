import numpy as np
import pytest

from descon import assemble_synthesis, svd_equivalent_form
from descon.sdp import (SdpProblem, SdpSolution, minimize_linear,
                        solve_feasibility, verify_solution)


def block(f0, *coeffs):
    f0 = np.atleast_2d(np.asarray(f0, dtype=float))
    cs = np.stack([np.atleast_2d(np.asarray(c, dtype=float)) for c in coeffs]) \
        if coeffs else np.zeros((0,) + f0.shape)
    return f0, cs


def problem(blocks, nvar, margin_scale=1e-7):
    deltas = tuple(margin_scale * (1 + (np.linalg.norm(b[0], 2) if b[0].size else 0))
                   for b in blocks)
    return SdpProblem(nvar=nvar, blocks=tuple(blocks), deltas=deltas)


class TestFeasibility:
    def test_trivially_feasible(self):
        p = problem([block(-np.eye(2), np.zeros((2, 2)))], nvar=1)
        sol = solve_feasibility(p)
        assert sol.feasible
        assert abs(sol.margin - 1.0) < 1e-5

    def test_trivially_infeasible(self):
        p = problem([block(np.eye(2), np.zeros((2, 2)))], nvar=1)
        assert solve_feasibility(p).status == "infeasible"

    def test_demo_synthesis_level(self, demo):
        form = svd_equivalent_form(demo)
        p = SdpProblem.from_ami(assemble_synthesis(form, 2.1))
        assert solve_feasibility(p).feasible

    def test_returned_point_verifies(self, demo):
        form = svd_equivalent_form(demo)
        p = SdpProblem.from_ami(assemble_synthesis(form, 2.1))
        sol = solve_feasibility(p)
        margins = verify_solution(p, sol.x)
        assert min(margins) >= 0.5 * min(p.deltas)


class TestMinimize:
    def test_lower_bounded_scalar(self):
        # minimise t subject to [-t] <= 0 and t >= t0
        t0 = 3.0
        p = problem([block([[0.0]], [[-1.0]]), block([[t0]], [[-1.0]])], nvar=1)
        sol = minimize_linear(p, np.array([1.0]))
        assert sol.feasible
        assert abs(sol.objective - t0) <= 1e-6 * t0

    def test_demo_optimum(self, demo):
        form = svd_equivalent_form(demo)
        p = SdpProblem.from_ami(assemble_synthesis(form, None))
        sol = minimize_linear(p, p.objective_selector("t"))
        assert sol.feasible
        assert abs(np.sqrt(sol.objective) - 2.0269) < 5e-3

    def test_reorder_stability(self, demo):
        form = svd_equivalent_form(demo)
        p = SdpProblem.from_ami(assemble_synthesis(form, None))
        c = p.objective_selector("t")
        base = minimize_linear(p, c).objective

        rng = np.random.default_rng(4)
        perm = rng.permutation(p.nvar)
        blocks = tuple((f0, coeffs[perm]) for f0, coeffs in p.blocks)
        shuffled = SdpProblem(nvar=p.nvar, blocks=blocks, deltas=p.deltas)
        sol = minimize_linear(shuffled, c[perm])
        assert abs(sol.objective - base) <= 1e-6 * abs(base)

    def test_bisection_brackets_optimum(self, demo):
        form = svd_equivalent_form(demo)
        p = SdpProblem.from_ami(assemble_synthesis(form, None))
        star = float(np.sqrt(minimize_linear(p, p.objective_selector("t")).objective))

        lo, hi = 1.0, 4.0
        while hi - lo > 2e-4:
            mid = 0.5 * (lo + hi)
            ami = assemble_synthesis(form, mid)
            if solve_feasibility(SdpProblem.from_ami(ami)).feasible:
                hi = mid
            else:
                lo = mid
        assert abs(hi - star) < 1e-3


class TestVerifySolution:
    def test_perturbed_point_detected(self, demo):
        form = svd_equivalent_form(demo)
        p = SdpProblem.from_ami(assemble_synthesis(form, 2.1))
        sol = solve_feasibility(p)
        noisy = sol.x + 10.0 * np.ones_like(sol.x)
        assert min(verify_solution(p, noisy)) < 0.0

    def test_no_variable_problem(self):
        p = problem([block(-np.eye(3))], nvar=0)
        sol = solve_feasibility(p)
        assert sol.feasible
        assert abs(sol.margin - 1.0) < 1e-12

    def test_solution_flags(self):
        assert SdpSolution("feasible").feasible
        assert not SdpSolution("marginal").feasible
