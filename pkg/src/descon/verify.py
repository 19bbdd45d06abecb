"""Solver-independent verification.

Peak transfer gain by frequency sweep over the unit circle, sampled
robustness reports over the uncertainty set, and the performance-versus-
alpha sweep.  Everything here goes through the raw transfer function, never
through a certificate, so it can cross-check solver output.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .config import DEFAULTS
from .model import DescriptorPlant, UncertainPlant, check_admissibility
from .synth import closed_loop, synthesize_optimal

log = logging.getLogger(__name__)


def _as_realization(realization):
    if isinstance(realization, DescriptorPlant):
        realization = realization.realization()
    return tuple(np.asarray(x, dtype=float) for x in realization)


def _gains_on_circle(E, A, B, C, D, omegas):
    """Largest singular value of the transfer matrix at each e^{i omega};
    near-singular pencil points are nudged and logged."""
    zs = np.exp(1j * omegas)
    pencils = zs[:, None, None] * E - A
    rhs = np.broadcast_to(B.astype(complex), (len(zs),) + B.shape)
    with np.errstate(all="ignore"):
        try:
            sols = np.linalg.solve(pencils, rhs)
        except np.linalg.LinAlgError:
            sols = np.full((len(zs),) + B.shape, np.nan, dtype=complex)
    vals = np.linalg.svd(C[None] @ sols + D[None], compute_uv=False)[..., 0]
    bad = ~np.isfinite(vals)
    if bad.any():
        log.debug("perturbing %d singular sweep points", int(bad.sum()))
        step = (omegas[1] - omegas[0]) if len(omegas) > 1 else 1e-3
        for i in np.flatnonzero(bad):
            w = omegas[i] + 0.37 * step
            z = np.exp(1j * w)
            vals[i] = np.linalg.svd(
                C @ np.linalg.solve(z * E - A, B.astype(complex)) + D,
                compute_uv=False)[0]
    return vals


def hinf_norm(realization, grid_points=DEFAULTS.grid_points,
              refine_tol=DEFAULTS.refine_tol, assume_admissible=False):
    """(peak gain, peak frequency) of C (zE - A)^{-1} B + D over |z| = 1.

    Uniform grid plus a bounded scalar refinement around the grid argmax.
    A realization that is not admissible has no finite worst-case gain and
    is reported as (inf, 0.0) unless ``assume_admissible`` is set.
    """
    E, A, B, C, D = _as_realization(realization)
    if not assume_admissible and not check_admissibility(E, A).admissible:
        return math.inf, 0.0
    if B.shape[1] == 0 or C.shape[0] == 0:
        return 0.0, 0.0
    omegas = np.linspace(0.0, 2.0 * math.pi, grid_points, endpoint=False)
    vals = _gains_on_circle(E, A, B, C, D, omegas)
    k = int(np.argmax(vals))
    best, w_best = float(vals[k]), float(omegas[k])
    step = 2.0 * math.pi / grid_points

    def neg_gain(w):
        return -float(_gains_on_circle(E, A, B, C, D, np.array([w]))[0])

    res = minimize_scalar(neg_gain, bounds=(w_best - step, w_best + step),
                          method="bounded", options={"xatol": refine_tol})
    if -res.fun > best:
        best, w_best = float(-res.fun), float(res.x)
    return best, w_best % (2.0 * math.pi)


def sample_uncertainty(s, count, mode="grid", seed=0):
    """Draw Delta samples with spectral norm at most one.

    ``grid`` (s = 1 only): uniform points in [-1, 1]; ``random``: dense
    matrices scaled onto the unit spectral sphere; ``vertices``: every
    diagonal +/-1 sign pattern (count is ignored).
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if mode == "grid":
        if s != 1:
            raise ValueError("grid sampling is defined for scalar Delta only")
        return [np.array([[d]]) for d in np.linspace(-1.0, 1.0, count)]
    if mode == "vertices":
        out = []
        for bits in range(2 ** s):
            signs = [1.0 if bits & (1 << k) else -1.0 for k in range(s)]
            out.append(np.diag(signs))
        return out
    if mode == "random":
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            x = rng.standard_normal((s, s))
            out.append(x / np.linalg.norm(x, 2))
        return out
    raise ValueError(f"unknown sampling mode: {mode}")


@dataclass
class RobustSample:
    index: int
    delta: np.ndarray
    admissible: bool
    rho: float | None
    norm: float
    peak_omega: float

    def to_dict(self):
        return {
            "index": self.index,
            "delta": self.delta.tolist(),
            "admissible": self.admissible,
            "rho": self.rho,
            "norm": None if math.isinf(self.norm) else self.norm,
            "peak_omega": self.peak_omega,
        }


@dataclass
class RobustnessReport:
    """Per-sample admissibility and peak gain over an uncertainty sample set,
    with min/max spectral radius and the sampled worst-case gain.  The worst
    case over a sample set is a lower bound on the true worst case."""

    entries: list
    rho_min: float | None
    rho_max: float | None
    worst_norm: float
    worst_omega: float
    worst_index: int
    gamma_target: float | None
    all_admissible: bool
    passed: bool

    def to_dict(self):
        return {
            "samples": len(self.entries),
            "entries": [e.to_dict() for e in self.entries],
            "rho_min": self.rho_min,
            "rho_max": self.rho_max,
            "worst_norm": None if math.isinf(self.worst_norm) else self.worst_norm,
            "worst_omega": self.worst_omega,
            "worst_index": self.worst_index,
            "gamma_target": self.gamma_target,
            "all_admissible": self.all_admissible,
            "passed": self.passed,
        }

    def to_text(self):
        lines = [
            f"{'idx':>4} {'admissible':>10} {'rho':>12} {'norm':>12}",
        ]
        for e in self.entries:
            rho = "-" if e.rho is None else f"{e.rho:.6f}"
            nrm = "inf" if math.isinf(e.norm) else f"{e.norm:.6f}"
            lines.append(f"{e.index:>4} {str(e.admissible):>10} {rho:>12} {nrm:>12}")
        lines.append(f"rho range: [{self.rho_min}, {self.rho_max}]")
        lines.append(f"sampled worst-case norm: {self.worst_norm} "
                     f"at omega = {self.worst_omega}")
        if self.gamma_target is not None:
            lines.append(f"target gamma: {self.gamma_target}")
        lines.append(f"all admissible: {self.all_admissible}")
        lines.append(f"passed: {self.passed}")
        return "\n".join(lines)


def robust_verify(uplant, gain=None, samples=None, gamma_target=None,
                  grid_points=DEFAULTS.grid_points,
                  refine_tol=DEFAULTS.refine_tol, seed=0):
    """Realise the plant at each Delta sample (closing the loop with ``gain``
    when given), test admissibility, and sweep the peak gain.

    Passes when every sample is admissible and, if a target is given, the
    sampled worst-case gain stays below it.
    """
    if isinstance(uplant, DescriptorPlant):
        uplant = UncertainPlant.certain(uplant)
    if samples is None:
        samples = (sample_uncertainty(1, DEFAULTS.delta_grid, "grid")
                   if uplant.s == 1
                   else sample_uncertainty(uplant.s, DEFAULTS.samples,
                                           "random", seed))
    if not samples:
        raise ValueError("at least one Delta sample is required")
    entries = []
    for idx, delta in enumerate(samples):
        realized = uplant.realize(delta)
        if gain is not None:
            realized = closed_loop(realized, gain)
        report = check_admissibility(realized.E, realized.A,
                                     tol=realized.rank_tol)
        rho = report.spectral_radius
        if report.admissible:
            norm, omega = hinf_norm(realized, grid_points, refine_tol,
                                    assume_admissible=True)
        else:
            norm, omega = math.inf, 0.0
        entries.append(RobustSample(idx, np.asarray(delta, dtype=float),
                                    report.admissible, rho, norm, omega))
    rhos = [e.rho for e in entries if e.rho is not None]
    worst = max(entries, key=lambda e: e.norm)
    all_adm = all(e.admissible for e in entries)
    passed = all_adm and (gamma_target is None or worst.norm < gamma_target)
    return RobustnessReport(
        entries=entries,
        rho_min=min(rhos) if rhos else None,
        rho_max=max(rhos) if rhos else None,
        worst_norm=worst.norm,
        worst_omega=worst.peak_omega,
        worst_index=worst.index,
        gamma_target=gamma_target,
        all_admissible=all_adm,
        passed=passed,
    )


@dataclass
class AlphaSweepPoint:
    alpha: float
    gamma_min: float | None
    status: str

    def to_dict(self):
        return {"alpha": self.alpha, "gamma_min": self.gamma_min,
                "status": self.status}


@dataclass
class AlphaSweepCurve:
    """Minimised performance level per requested alpha, sorted by alpha."""

    points: list = field(default_factory=list)

    def to_dict(self):
        return {"points": [p.to_dict() for p in self.points]}

    def to_csv(self):
        lines = ["alpha,gamma_min,status"]
        for p in self.points:
            gamma = "" if p.gamma_min is None else repr(p.gamma_min)
            lines.append(f"{p.alpha!r},{gamma},{p.status}")
        return "\n".join(lines) + "\n"


def alpha_sweep(uplant, alphas, config=DEFAULTS):
    """Run the minimised synthesis once per alpha value.

    Requires uncertainty confined to the state matrix (checked by the
    alpha-weighted assembly for alpha > 0); infeasible or failed entries
    carry their status instead of a level.
    """
    points = []
    for alpha in sorted(alphas):
        result = synthesize_optimal(uplant, alpha=float(alpha), config=config)
        points.append(AlphaSweepPoint(float(alpha),
                                      result.gamma if result.ok else None,
                                      result.status if not result.ok else "ok"))
    return AlphaSweepCurve(points)
