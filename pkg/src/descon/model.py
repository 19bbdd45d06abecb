"""Discrete-time descriptor plants, uncertainty structure and structural tests.

A descriptor plant couples difference equations with algebraic constraints
through a (possibly singular) matrix E:

    E x(k+1) = A x(k) + Bw w(k) + Bu u(k)
        y(k) = C x(k) + Dw w(k)

Norm-bounded uncertainty enters as A + MA @ Delta @ NA (and analogously for
Bw, C, Dw) with ||Delta||_2 <= 1.  All operations here are pure functions of
their inputs plus an explicit seed; instances are frozen after construction.
"""

import cmath
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .config import DEFAULTS
from .errors import PlantFormatError, SingularPencilError


def _as_matrix(value, name):
    m = np.asarray(value, dtype=float)
    if m.ndim != 2:
        raise PlantFormatError(f"{name} must be a 2-d matrix, got shape {m.shape}")
    return m


def numerical_rank(mat, tol=DEFAULTS.rank_tol):
    """Number of singular values above ``tol`` times the largest one.

    The zero matrix has rank 0; ``tol`` must be positive.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


@dataclass(frozen=True)
class DescriptorPlant:
    """The quintuple (E, A, Bw, Bu, C, Dw) with E allowed to be singular.

    Dimensions: E, A are n x n, Bw is n x q, Bu is n x m, C is p x n and
    Dw is p x q.  ``r`` is the numerical rank of E under ``rank_tol``.
    """

    E: np.ndarray
    A: np.ndarray
    Bw: np.ndarray
    Bu: np.ndarray
    C: np.ndarray
    Dw: np.ndarray
    rank_tol: float = DEFAULTS.rank_tol
    r: int = field(init=False)

    def __post_init__(self):
        for name in ("E", "A", "Bw", "Bu", "C", "Dw"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name), name))
        n = self.E.shape[0]
        if self.E.shape != (n, n) or self.A.shape != (n, n):
            raise PlantFormatError("E and A must be square and equally sized")
        if self.Bw.shape[0] != n or self.Bu.shape[0] != n:
            raise PlantFormatError("Bw and Bu must have n rows")
        if self.C.shape[1] != n:
            raise PlantFormatError("C must have n columns")
        if self.Dw.shape != (self.C.shape[0], self.Bw.shape[1]):
            raise PlantFormatError("Dw must be p x q")
        object.__setattr__(self, "r", numerical_rank(self.E, self.rank_tol))

    @property
    def n(self):
        return self.E.shape[0]

    @property
    def q(self):
        return self.Bw.shape[1]

    @property
    def m(self):
        return self.Bu.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    def realization(self):
        """(E, A, Bw, C, Dw) tuple for transfer-function evaluation."""
        return (self.E, self.A, self.Bw, self.C, self.Dw)


def _zero_factors(plant, s):
    n, q, p = plant.n, plant.q, plant.p
    return {
        "MA": np.zeros((n, s)), "NA": np.zeros((s, n)),
        "MB": np.zeros((n, s)), "NB": np.zeros((s, q)),
        "MC": np.zeros((p, s)), "NC": np.zeros((s, n)),
        "MD": np.zeros((p, s)), "ND": np.zeros((s, q)),
    }


@dataclass(frozen=True)
class UncertainPlant:
    """A descriptor plant plus norm-bounded factor pairs (MX, NX).

    Any factor pair may be all-zero, meaning that matrix carries no
    uncertainty.  ``s`` is the common inner dimension of the Delta block.
    """

    plant: DescriptorPlant
    MA: np.ndarray
    NA: np.ndarray
    MB: np.ndarray
    NB: np.ndarray
    MC: np.ndarray
    NC: np.ndarray
    MD: np.ndarray
    ND: np.ndarray
    s: int = 1

    def __post_init__(self):
        n, q, p, s = self.plant.n, self.plant.q, self.plant.p, self.s
        if s < 1:
            raise PlantFormatError("uncertainty dimension s must be >= 1")
        shapes = {
            "MA": (n, s), "NA": (s, n), "MB": (n, s), "NB": (s, q),
            "MC": (p, s), "NC": (s, n), "MD": (p, s), "ND": (s, q),
        }
        for name, shape in shapes.items():
            m = _as_matrix(getattr(self, name), name)
            if m.shape != shape:
                raise PlantFormatError(f"{name} must have shape {shape}, got {m.shape}")
            object.__setattr__(self, name, m)

    @classmethod
    def from_factors(cls, plant, s=None, **factors):
        """Build with any subset of MA..ND given; missing factors are zero."""
        given = {k: _as_matrix(v, k) for k, v in factors.items() if v is not None}
        if s is None:
            s = 1
            for name, m in given.items():
                s = max(s, m.shape[1] if name.startswith("M") else m.shape[0])
        full = _zero_factors(plant, s)
        full.update(given)
        return cls(plant, s=s, **full)

    @classmethod
    def certain(cls, plant):
        """Wrap a plant with all-zero uncertainty factors."""
        return cls(plant, s=1, **_zero_factors(plant, 1))

    @property
    def has_uncertainty(self):
        return any(
            np.any(getattr(self, name))
            for name in ("MA", "NA", "MB", "NB", "MC", "NC", "MD", "ND")
        )

    @property
    def uncertainty_only_in_a(self):
        """True when every factor pair outside the state matrix is zero."""
        return not any(
            np.any(getattr(self, name))
            for name in ("MB", "NB", "MC", "NC", "MD", "ND")
        )

    def realize(self, delta):
        """The certain plant obtained by fixing Delta (s x s, ||Delta|| <= 1)."""
        delta = np.atleast_2d(np.asarray(delta, dtype=float))
        if delta.shape != (self.s, self.s):
            raise PlantFormatError(f"Delta must be {self.s} x {self.s}")
        pl = self.plant
        return DescriptorPlant(
            E=pl.E,
            A=pl.A + self.MA @ delta @ self.NA,
            Bw=pl.Bw + self.MB @ delta @ self.NB,
            Bu=pl.Bu,
            C=pl.C + self.MC @ delta @ self.NC,
            Dw=pl.Dw + self.MD @ delta @ self.ND,
            rank_tol=pl.rank_tol,
        )


@dataclass(frozen=True)
class SvdEquivalentForm:
    """Coordinates in which E becomes diag(I_r, 0).

    W and V are the nonsingular transforms, Ad = W A V etc.; the uncertainty
    factors transform as MAd = W MA, NAd = NA V, MBd = W MB, NCd = NC V while
    NB, MC, MD, ND are unchanged.
    """

    W: np.ndarray
    V: np.ndarray
    r: int
    Ad: np.ndarray
    Bwd: np.ndarray
    Bud: np.ndarray
    Cd: np.ndarray
    Dwd: np.ndarray
    MAd: np.ndarray
    NAd: np.ndarray
    MBd: np.ndarray
    NBd: np.ndarray
    MCd: np.ndarray
    NCd: np.ndarray
    MDd: np.ndarray
    NDd: np.ndarray
    s: int

    @property
    def n(self):
        return self.Ad.shape[0]

    @property
    def q(self):
        return self.Bwd.shape[1]

    @property
    def m(self):
        return self.Bud.shape[1]

    @property
    def p(self):
        return self.Cd.shape[0]

    @property
    def A11(self):
        return self.Ad[: self.r, : self.r]

    @property
    def A12(self):
        return self.Ad[: self.r, self.r:]

    @property
    def A21(self):
        return self.Ad[self.r:, : self.r]

    @property
    def A22(self):
        return self.Ad[self.r:, self.r:]

    @property
    def B1(self):
        return self.Bwd[: self.r, :]

    @property
    def B2(self):
        return self.Bwd[self.r:, :]

    @property
    def C1(self):
        return self.Cd[:, : self.r]

    @property
    def C2(self):
        return self.Cd[:, self.r:]

    def e_d(self):
        """diag(I_r, 0) of size n."""
        return np.diag(np.concatenate([np.ones(self.r), np.zeros(self.n - self.r)]))

    def realization(self):
        return (self.e_d(), self.Ad, self.Bwd, self.Cd, self.Dwd)


def svd_equivalent_form(plant, tol=None, flip_sign=None):
    """Transform a plant (certain or uncertain) so that W E V = diag(I_r, 0).

    The pair is built from E = U diag(S, 0) H^T as W = diag(S^-1, I) U^T and
    V = H.  ``flip_sign`` optionally negates one singular-vector pair (an
    equally valid transform, useful for invariance checks).  Full-rank E is
    accepted: r = n and all algebraic blocks are empty.
    """
    uplant = plant if isinstance(plant, UncertainPlant) else UncertainPlant.certain(plant)
    pl = uplant.plant
    tol = pl.rank_tol if tol is None else tol
    n = pl.n
    U, sv, Vh = np.linalg.svd(pl.E)
    r = numerical_rank(pl.E, tol)
    H = Vh.T.copy()
    U = U.copy()
    if flip_sign is not None:
        k = int(flip_sign)
        if not 0 <= k < n:
            raise ValueError("flip_sign must index a column of E")
        U[:, k] *= -1.0
        H[:, k] *= -1.0
    if r > 0:
        w_left = sla.block_diag(np.diag(1.0 / sv[:r]), np.eye(n - r))
    else:
        w_left = np.eye(n)
    W = w_left @ U.T
    V = H
    return SvdEquivalentForm(
        W=W, V=V, r=r,
        Ad=W @ pl.A @ V,
        Bwd=W @ pl.Bw,
        Bud=W @ pl.Bu,
        Cd=pl.C @ V,
        Dwd=pl.Dw.copy(),
        MAd=W @ uplant.MA,
        NAd=uplant.NA @ V,
        MBd=W @ uplant.MB,
        NBd=uplant.NB.copy(),
        MCd=uplant.MC.copy(),
        NCd=uplant.NC @ V,
        MDd=uplant.MD.copy(),
        NDd=uplant.ND.copy(),
        s=uplant.s,
    )


def transfer_value(realization, z):
    """Evaluate C (z E - A)^{-1} B + D at a complex point z.

    ``realization`` is a DescriptorPlant or an (E, A, B, C, D) tuple.
    Raises SingularPencilError when z E - A is numerically singular; the
    caller is expected to perturb z.
    """
    if isinstance(realization, DescriptorPlant):
        realization = realization.realization()
    E, A, B, C, D = (np.asarray(x) for x in realization)
    pencil = z * E - A
    sv = np.linalg.svd(pencil, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1.0):
        raise SingularPencilError(f"pencil is singular at z = {z}")
    return C @ np.linalg.solve(pencil, B.astype(complex)) + D


def check_regularity(E, A, trials=1, seed=0, tol=DEFAULTS.rank_tol):
    """Decide regularity of the pencil (E, A): does det(lambda E - A) != 0 hold
    for some lambda?

    Samples n + 2 deterministic points lambda_k = 1.37 exp(2 pi i k / (n+2))
    plus ``trials`` seeded pseudo-random points.  One numerically nonsingular
    sample certifies regularity (the determinant is a polynomial of degree at
    most n); if every sample is singular the pencil is reported irregular.

    Returns (regular, witness) where witness is a certifying lambda or None.
    """
    E = np.asarray(E, dtype=float)
    A = np.asarray(A, dtype=float)
    n = E.shape[0]
    if E.shape != A.shape or E.shape != (n, n):
        raise PlantFormatError("E and A must be square and equally sized")
    if n == 0:
        return True, 0.0 + 0.0j
    points = [1.37 * cmath.exp(2j * cmath.pi * k / (n + 2)) for k in range(n + 2)]
    rng = np.random.default_rng(seed)
    for _ in range(max(0, trials)):
        points.append(complex(rng.uniform(0.5, 2.0) * cmath.exp(2j * cmath.pi * rng.uniform())))
    for lam in points:
        # the real embedding of lam*E - A is nonsingular iff the complex
        # matrix is, and doubles the rank
        if numerical_rank(_stack_complex(lam * E - A), tol) == 2 * n:
            return True, lam
    return False, None


def _stack_complex(mat):
    return np.vstack([np.hstack([mat.real, -mat.imag]), np.hstack([mat.imag, mat.real])])


def check_causality(form, tol=DEFAULTS.rank_tol):
    """Causality test on the equivalent form: the algebraic block A22 must be
    invertible (trivially true when r = n)."""
    nr = form.n - form.r
    if nr == 0:
        return True
    return numerical_rank(form.A22, tol) == nr


def spectral_radius(form, tol=DEFAULTS.rank_tol):
    """Largest modulus over the finite generalized eigenvalues of (E, A).

    For a causal form this is the spectral radius of the dynamic part
    A11 - A12 A22^{-1} A21; otherwise a generalized-eigenvalue fallback on
    the full pencil is used.  Returns 0 when no finite eigenvalue exists.
    """
    if isinstance(form, tuple):
        E, A = (np.asarray(x, dtype=float) for x in form)
        return _pencil_spectral_radius(E, A, tol)
    if form.r == 0:
        return 0.0
    if check_causality(form, tol):
        atil = form.A11 - form.A12 @ np.linalg.solve(form.A22, form.A21) \
            if form.n > form.r else form.A11
        if atil.size == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(atil))))
    return _pencil_spectral_radius(form.e_d(), form.Ad, tol)


def _pencil_spectral_radius(E, A, tol):
    w, _ = sla.eig(A, E, homogeneous_eigvals=True)
    alpha, beta = w
    finite = np.abs(beta) > tol * (np.abs(alpha) + np.abs(beta))
    if not finite.any():
        return 0.0
    return float(np.max(np.abs(alpha[finite] / beta[finite])))


@dataclass(frozen=True)
class AdmissibilityReport:
    """Regularity, causality and stability of a pencil, plus the witness
    point and spectral radius.  ``causal``/``stable`` are None when the
    pencil is irregular (indeterminate)."""

    regular: bool
    witness: complex | None
    causal: bool | None
    stable: bool | None
    spectral_radius: float | None

    @property
    def admissible(self):
        return bool(self.regular and self.causal and self.stable)

    def to_dict(self):
        return {
            "regular": self.regular,
            "witness": None if self.witness is None
            else [self.witness.real, self.witness.imag],
            "causal": self.causal,
            "stable": self.stable,
            "spectral_radius": self.spectral_radius,
            "admissible": self.admissible,
        }


def check_admissibility(E, A, tol=DEFAULTS.rank_tol, seed=0):
    """Full admissibility report for the pencil (E, A): regular, causal and
    stable (all finite generalized eigenvalues strictly inside the unit
    circle)."""
    E = np.asarray(E, dtype=float)
    A = np.asarray(A, dtype=float)
    regular, witness = check_regularity(E, A, seed=seed, tol=tol)
    if not regular:
        return AdmissibilityReport(False, None, None, None, None)
    n = E.shape[0]
    plant = DescriptorPlant(E, A, np.zeros((n, 0)), np.zeros((n, 0)),
                            np.zeros((0, n)), np.zeros((0, 0)), rank_tol=tol)
    form = svd_equivalent_form(plant, tol)
    causal = check_causality(form, tol)
    rho = spectral_radius(form, tol) if causal else _pencil_spectral_radius(E, A, tol)
    stable = bool(rho < 1.0)
    return AdmissibilityReport(True, witness, causal, stable, rho)


def check_causal_controllability(E, A, Bu, tol=DEFAULTS.rank_tol):
    """Block rank test: rank [E 0 0; A E Bu] == rank E + n."""
    E = np.asarray(E, dtype=float)
    A = np.asarray(A, dtype=float)
    Bu = np.asarray(Bu, dtype=float)
    n = E.shape[0]
    stacked = np.block([
        [E, np.zeros((n, n)), np.zeros((n, Bu.shape[1]))],
        [A, E, Bu],
    ])
    return numerical_rank(stacked, tol) == numerical_rank(E, tol) + n
