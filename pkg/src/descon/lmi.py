"""Affine matrix-inequality assembly.

Every condition is represented as an affine map from named decision
variables to one symmetric block-diagonal matrix:

    F(x) = F0 + sum_i x_i F_i  constrained to  F(x) < 0

The positive-definiteness requirement on L rides along as a trailing
diagonal sub-block holding -L.  Coefficient matrices are extracted by
evaluating the (exactly symmetric) block assembly on unit vectors, so the
assembled maps are deterministic and bit-reproducible.

Assemblies provided:
  * nominal performance test (5x5 block form with the alpha-weighted
    output rows),
  * its robust counterpart for norm-bounded uncertainty (multiplier
    absorption, outer dimension grows by 4s),
  * the state-feedback synthesis program built on the dual system with the
    triangular change of variables Z = [Q R; 0 S] Fd^T,
  * the alpha-weighted synthesis variant for uncertainty confined to the
    state matrix.
"""

import json
from dataclasses import dataclass

import numpy as np

from .config import DEFAULTS
from .errors import AlphaPathError
from .model import numerical_rank


@dataclass(frozen=True)
class VarBlock:
    name: str
    rows: int
    cols: int
    kind: str  # 'sym' | 'full' | 'scalar'

    @property
    def size(self):
        if self.kind == "scalar":
            return 1
        if self.kind == "sym":
            return self.rows * (self.rows + 1) // 2
        return self.rows * self.cols


class VariableLayout:
    """Flat index map from scalar decision variables to named matrix blocks.

    Symmetric blocks materialise only their upper triangle.
    """

    def __init__(self, blocks):
        self.blocks = tuple(blocks)
        self.offsets = {}
        off = 0
        for b in self.blocks:
            self.offsets[b.name] = off
            off += b.size
        self.size = off

    def names(self):
        return [b.name for b in self.blocks]

    def block(self, name):
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def zeros(self):
        vals = {}
        for b in self.blocks:
            vals[b.name] = 0.0 if b.kind == "scalar" else np.zeros((b.rows, b.cols))
        return vals

    def unpack(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValueError(f"expected vector of length {self.size}, got {x.shape}")
        vals = {}
        for b in self.blocks:
            seg = x[self.offsets[b.name]: self.offsets[b.name] + b.size]
            if b.kind == "scalar":
                vals[b.name] = float(seg[0])
            elif b.kind == "sym":
                mat = np.zeros((b.rows, b.rows))
                iu = np.triu_indices(b.rows)
                mat[iu] = seg
                mat.T[iu] = seg
                vals[b.name] = mat
            else:
                vals[b.name] = seg.reshape(b.rows, b.cols)
        return vals

    def pack(self, vals):
        x = np.zeros(self.size)
        for b in self.blocks:
            v = vals[b.name]
            off = self.offsets[b.name]
            if b.kind == "scalar":
                x[off] = float(v)
            elif b.kind == "sym":
                v = np.asarray(v, dtype=float)
                x[off: off + b.size] = v[np.triu_indices(b.rows)]
            else:
                x[off: off + b.size] = np.asarray(v, dtype=float).ravel()
        return x

    def to_dict(self):
        return [
            {"name": b.name, "rows": b.rows, "cols": b.cols, "kind": b.kind}
            for b in self.blocks
        ]


@dataclass(frozen=True)
class AffineMatrixInequality:
    """F0 + sum x_i F_i < 0 with a diagonal sub-block annotation."""

    layout: VariableLayout
    f0: np.ndarray
    coeffs: np.ndarray  # (nvar, dim, dim)
    blocks: tuple  # ((name, offset, size), ...)

    @property
    def dim(self):
        return self.f0.shape[0]

    def value(self, x):
        """Evaluate the map at a packed vector or a dict of block values."""
        if isinstance(x, dict):
            x = self.layout.pack(x)
        x = np.asarray(x, dtype=float)
        if self.coeffs.shape[0] == 0:
            return self.f0.copy()
        return self.f0 + np.tensordot(x, self.coeffs, axes=(0, 0))

    def to_dict(self):
        """Dense debug dump for cross-checking against other implementations."""
        return {
            "dim": self.dim,
            "layout": self.layout.to_dict(),
            "blocks": [list(b) for b in self.blocks],
            "f0": self.f0.tolist(),
            "coeffs": [c.tolist() for c in self.coeffs],
        }

    def dump_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def _extract(layout, build):
    """Turn an affine block builder (dict of values -> symmetric matrix)
    into explicit coefficient matrices by unit-vector evaluation."""
    f0 = build(layout.zeros())
    coeffs = np.zeros((layout.size, f0.shape[0], f0.shape[1]))
    for i in range(layout.size):
        e = np.zeros(layout.size)
        e[i] = 1.0
        coeffs[i] = build(layout.unpack(e)) - f0
    return f0, coeffs


def _sym(x):
    return x + x.T


def _pi_of(s_mat, r, n):
    pi = np.zeros((n, n))
    pi[r:, r:] = s_mat
    return pi


def _theta_of(l_mat, r, n):
    th = np.zeros((n, n))
    th[:r, :r] = l_mat
    return th


def _block_offsets(sizes):
    off = [0]
    for s in sizes:
        off.append(off[-1] + s)
    return off


class _Grid:
    """Helper writing rectangular blocks into a symmetric matrix, mirroring
    each off-diagonal block with its exact transpose."""

    def __init__(self, sizes):
        self.off = _block_offsets(sizes)
        self.mat = np.zeros((self.off[-1], self.off[-1]))

    def diag(self, i, block):
        o = self.off[i]
        self.mat[o: o + block.shape[0], o: o + block.shape[1]] = block

    def lower(self, i, j, block):
        # block sits at block-row i, block-col j (i > j); transpose mirrored
        ro, co = self.off[i], self.off[j]
        self.mat[ro: ro + block.shape[0], co: co + block.shape[1]] = block
        self.mat[co: co + block.shape[1], ro: ro + block.shape[0]] = block.T


def _append_l_block(mat, l_mat):
    d, r = mat.shape[0], l_mat.shape[0]
    out = np.zeros((d + r, d + r))
    out[:d, :d] = mat
    out[d:, d:] = -l_mat
    return out


def _analysis_core(form, vals, gamma, alpha):
    """5x5 block row sizes (r, n, q, r, p); returns the matrix without the
    trailing L block."""
    r, n, q, p = form.r, form.n, form.q, form.p
    L, Q, R, S = vals["L"], vals["Q"], vals["R"], vals["S"]
    t = vals["t"] if gamma is None else float(gamma) ** 2
    gam = np.hstack([Q, R])
    pi = _pi_of(S, r, n)
    theta = _theta_of(L, r, n)
    Ad, Bd, Cd, Dd = form.Ad, form.Bwd, form.Cd, form.Dwd

    g = _Grid([r, n, q, r, p])
    half_q = -0.5 * Q
    g.diag(0, half_q + half_q.T)
    g.lower(1, 0, (gam @ Ad).T)
    g.lower(2, 0, (gam @ Bd).T)
    g.lower(3, 0, L - Q - 0.5 * Q.T)
    g.diag(1, _sym(pi @ Ad) - theta)
    g.lower(2, 1, (pi @ Bd).T)
    g.lower(3, 1, gam @ Ad)
    g.diag(2, -t * np.eye(q))
    g.lower(3, 2, gam @ Bd)
    g.diag(3, -_sym(Q))
    if alpha == 0.0:
        p52, p53 = Cd, Dd
    else:
        p52 = Cd + alpha * (Cd @ pi @ Ad)
        p53 = Dd + alpha * (Cd @ pi @ Bd)
    g.lower(4, 1, p52)
    g.lower(4, 2, p53)
    g.diag(4, -np.eye(p))
    return g.mat


def _analysis_factors(form, vals):
    """Multiplier factors (M1, N1) of the robust performance condition.

    M1 stacks the transformed left factors through Gamma/Pi; N1 is constant.
    Column/row blocks follow the (A, B, C, D) uncertainty slots.
    """
    r, n, q, p, s = form.r, form.n, form.q, form.p, form.s
    Q, R, S = vals["Q"], vals["R"], vals["S"]
    gam = np.hstack([Q, R])
    pi = _pi_of(S, r, n)
    off = _block_offsets([r, n, q, r, p])
    dim = off[-1]

    m1 = np.zeros((dim, 4 * s))
    m1[off[0]: off[1], 0:s] = gam @ form.MAd
    m1[off[1]: off[2], 0:s] = pi @ form.MAd
    m1[off[3]: off[4], 0:s] = gam @ form.MAd
    m1[off[0]: off[1], s: 2 * s] = gam @ form.MBd
    m1[off[1]: off[2], s: 2 * s] = pi @ form.MBd
    m1[off[3]: off[4], s: 2 * s] = gam @ form.MBd
    m1[off[4]: off[5], 2 * s: 3 * s] = form.MCd
    m1[off[4]: off[5], 3 * s: 4 * s] = form.MDd

    n1 = np.zeros((4 * s, dim))
    n1[0:s, off[1]: off[2]] = form.NAd
    n1[s: 2 * s, off[2]: off[3]] = form.NBd
    n1[2 * s: 3 * s, off[1]: off[2]] = form.NCd
    n1[3 * s: 4 * s, off[2]: off[3]] = form.NDd
    return m1, n1


def _synthesis_core(form, vals, gamma, alpha):
    """Dual-system 5x5 block with row sizes (r, n, p, r, q) and the change
    of variables Z in place of the gain."""
    r, n, q, p = form.r, form.n, form.q, form.p
    L, Q, R, S, Z = vals["L"], vals["Q"], vals["R"], vals["S"], vals["Z"]
    t = vals["t"] if gamma is None else float(gamma) ** 2
    gam = np.hstack([Q, R])
    pi = _pi_of(S, r, n)
    theta = _theta_of(L, r, n)
    phi_z = np.vstack([np.zeros((r, Z.shape[1])), Z[r:, :]])  # Phi @ Z
    Ad, Bwd, Bud, Cd, Dd = form.Ad, form.Bwd, form.Bud, form.Cd, form.Dwd

    l21 = Ad @ gam.T + Bud @ Z[:r, :].T  # Omega @ Z selects the top r rows
    l31 = Cd @ gam.T
    l41 = L - Q - 0.5 * Q.T
    l22 = _sym(pi @ Ad.T) + _sym(phi_z @ Bud.T) - theta
    l32 = Cd @ pi.T
    if alpha == 0.0:
        l52, l53 = Bwd.T, Dd.T
    else:
        l52 = Bwd.T + alpha * (Bwd.T @ pi @ Ad.T) + alpha * (Bwd.T @ phi_z @ Bud.T)
        l53 = Dd.T + alpha * (Bwd.T @ pi @ Cd.T)

    g = _Grid([r, n, p, r, q])
    half_q = -0.5 * Q
    g.diag(0, half_q + half_q.T)
    g.lower(1, 0, l21)
    g.lower(2, 0, l31)
    g.lower(3, 0, l41)
    g.diag(1, l22)
    g.lower(2, 1, l32)
    g.lower(3, 1, l21.T)
    g.diag(2, -t * np.eye(p))
    g.lower(3, 2, l31.T)
    g.diag(3, -_sym(Q))
    g.lower(4, 1, l52)
    g.lower(4, 2, l53)
    g.diag(4, -np.eye(q))
    return g.mat


def _synthesis_factors(form, vals, alpha=None):
    """(M2, N2) of the synthesis condition.  With ``alpha=None`` the general
    pattern covering all four uncertainty slots is produced; with a numeric
    alpha the state-matrix-only pattern (including the alpha-weighted output
    row) is produced instead."""
    r, n, q, p, s = form.r, form.n, form.q, form.p, form.s
    Q, R, S = vals["Q"], vals["R"], vals["S"]
    gam = np.hstack([Q, R])
    pi = _pi_of(S, r, n)
    off = _block_offsets([r, n, p, r, q])
    dim = off[-1]

    m2 = np.zeros((4 * s, dim))
    n2 = np.zeros((dim, 4 * s))
    if alpha is None:
        m2[0:s, off[1]: off[2]] = form.MAd.T
        m2[s: 2 * s, off[2]: off[3]] = form.MCd.T
        m2[2 * s: 3 * s, off[1]: off[2]] = form.MBd.T
        m2[3 * s: 4 * s, off[2]: off[3]] = form.MDd.T
        n2[off[0]: off[1], 0:s] = gam @ form.NAd.T
        n2[off[1]: off[2], 0:s] = pi @ form.NAd.T
        n2[off[3]: off[4], 0:s] = gam @ form.NAd.T
        n2[off[0]: off[1], s: 2 * s] = gam @ form.NCd.T
        n2[off[1]: off[2], s: 2 * s] = pi @ form.NCd.T
        n2[off[3]: off[4], s: 2 * s] = gam @ form.NCd.T
        n2[off[4]: off[5], 2 * s: 3 * s] = form.NBd.T
        n2[off[4]: off[5], 3 * s: 4 * s] = form.NDd.T
    else:
        m2[0:s, off[1]: off[2]] = form.MAd.T
        m2[2 * s: 3 * s, off[1]: off[2]] = form.MAd.T
        n2[off[0]: off[1], 0:s] = gam @ form.NAd.T
        n2[off[1]: off[2], 0:s] = pi @ form.NAd.T
        n2[off[3]: off[4], 0:s] = gam @ form.NAd.T
        n2[off[4]: off[5], 2 * s: 3 * s] = alpha * (form.Bwd.T @ pi @ form.NAd.T)
    return m2, n2


def _absorbed(core, left, right, eps, s4):
    """[[core + eps*right, left], [left.T, -eps*I]] written exactly
    symmetric; ``right`` must already be symmetric."""
    dim = core.shape[0]
    out = np.zeros((dim + s4, dim + s4))
    out[:dim, :dim] = core + eps * right
    out[:dim, dim:] = left
    out[dim:, :dim] = left.T
    out[dim:, dim:] = -eps * np.eye(s4)
    return out


def _std_layout(r, n, m=None, with_eps=False, with_t=False):
    blocks = [
        VarBlock("L", r, r, "sym"),
        VarBlock("Q", r, r, "full"),
        VarBlock("R", r, n - r, "full"),
        VarBlock("S", n - r, n - r, "full"),
    ]
    if m is not None:
        blocks.append(VarBlock("Z", n, m, "full"))
    if with_eps:
        blocks.append(VarBlock("eps", 1, 1, "scalar"))
    if with_t:
        blocks.append(VarBlock("t", 1, 1, "scalar"))
    return VariableLayout(blocks)


def _with_l_block(layout, core_dim, r, build_core):
    def build(vals):
        return _append_l_block(build_core(vals), vals["L"])

    f0, coeffs = _extract(layout, build)
    blocks = (("main", 0, core_dim), ("L_pos", core_dim, r))
    if r == 0:
        blocks = (("main", 0, core_dim),)
    return AffineMatrixInequality(layout, f0, coeffs, blocks)


def assemble_nominal_brl(form, gamma, alpha=0.0):
    """Performance-test map for a certain plant: feasibility certifies
    admissibility together with a peak transfer gain below gamma.

    ``gamma=None`` makes t = gamma^2 a decision variable (for minimisation).
    Block row sizes are (r, n, q, r, p); the quadratic-cost identity block
    takes the disturbance dimension q, the output block dimension p.
    """
    if gamma is not None and gamma <= 0:
        raise ValueError("gamma must be positive")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    layout = _std_layout(form.r, form.n, with_t=gamma is None)
    dim = 2 * form.r + form.n + form.q + form.p
    return _with_l_block(
        layout, dim, form.r,
        lambda vals: _analysis_core(form, vals, gamma, alpha),
    )


def assemble_robust_brl(form, gamma):
    """Robust performance map: the nominal condition with the uncertainty
    multiplier absorbed, adding the scalar eps and 4s extra rows.

    Missing (all-zero) factor pairs contribute zero blocks.  The control
    input channel plays no role here.
    """
    if gamma is not None and gamma <= 0:
        raise ValueError("gamma must be positive")
    layout = _std_layout(form.r, form.n, with_eps=True, with_t=gamma is None)
    dim = 2 * form.r + form.n + form.q + form.p

    def core(vals):
        sig = _analysis_core(form, vals, gamma, 0.0)
        m1, n1 = _analysis_factors(form, vals)
        return _absorbed(sig, m1, n1.T @ n1, vals["eps"], 4 * form.s)

    return _with_l_block(layout, dim + 4 * form.s, form.r, core)


def assemble_synthesis(form, gamma):
    """State-feedback synthesis map in (L, Q, R, S, Z, eps).

    Built on the dual system, so the quadratic-cost block takes the primal
    output dimension p and the final identity block the primal disturbance
    dimension q; dimensions come from operand shapes throughout.
    """
    if gamma is not None and gamma <= 0:
        raise ValueError("gamma must be positive")
    layout = _std_layout(form.r, form.n, m=form.m, with_eps=True,
                         with_t=gamma is None)
    dim = 2 * form.r + form.n + form.p + form.q

    def core(vals):
        lam = _synthesis_core(form, vals, gamma, 0.0)
        m2, n2 = _synthesis_factors(form, vals, alpha=None)
        return _absorbed(lam, n2, m2.T @ m2, vals["eps"], 4 * form.s)

    return _with_l_block(layout, dim + 4 * form.s, form.r, core)


def assemble_synthesis_alpha(form, gamma, alpha):
    """Alpha-weighted synthesis map for plants whose uncertainty lives only
    in the state matrix.  At alpha = 0 this is exactly assemble_synthesis."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    for name in ("MBd", "NBd", "MCd", "NCd", "MDd", "NDd"):
        if np.any(getattr(form, name)):
            raise AlphaPathError(
                "alpha-weighted synthesis requires uncertainty confined to "
                "the state matrix")
    if alpha == 0.0:
        return assemble_synthesis(form, gamma)
    if gamma is not None and gamma <= 0:
        raise ValueError("gamma must be positive")
    layout = _std_layout(form.r, form.n, m=form.m, with_eps=True,
                         with_t=gamma is None)
    dim = 2 * form.r + form.n + form.p + form.q

    def core(vals):
        lam = _synthesis_core(form, vals, gamma, alpha)
        m2, n2 = _synthesis_factors(form, vals, alpha=alpha)
        return _absorbed(lam, n2, m2.T @ m2, vals["eps"], 4 * form.s)

    return _with_l_block(layout, dim + 4 * form.s, form.r, core)


def petersen_absorb(g_mat, m_fac, n_fac):
    """Absorb the norm-bounded term of  G + M Delta N + N' Delta' M' <= 0
    into a single map affine in the scalar multiplier:

        [[G + eps N'N, M], [M', -eps I]] <= 0

    M and N must be nonzero (the absorption is meaningless otherwise).
    """
    g_mat = np.asarray(g_mat, dtype=float)
    m_fac = np.asarray(m_fac, dtype=float)
    n_fac = np.asarray(n_fac, dtype=float)
    if not np.any(m_fac) or not np.any(n_fac):
        raise ValueError("M and N must be nonzero")
    if g_mat.shape[0] != g_mat.shape[1] or not np.array_equal(g_mat, g_mat.T):
        raise ValueError("G must be symmetric")
    d = g_mat.shape[0]
    k = m_fac.shape[1]
    layout = VariableLayout([VarBlock("eps", 1, 1, "scalar")])
    f0 = np.zeros((d + k, d + k))
    f0[:d, :d] = g_mat
    f0[:d, d:] = m_fac
    f0[d:, :d] = m_fac.T
    c_eps = np.zeros((1, d + k, d + k))
    c_eps[0, :d, :d] = n_fac.T @ n_fac
    c_eps[0, d:, d:] = -np.eye(k)
    return AffineMatrixInequality(layout, f0, c_eps, (("main", 0, d + k),))


def check_nonconservative_ranks(uplant, tol=DEFAULTS.rank_tol):
    """Rank conditions under which the alpha-weighted output-row terms vanish
    identically, making the synthesis condition non-conservative."""
    pl = uplant.plant
    first = numerical_rank(
        np.hstack([pl.E.T, pl.C.T, uplant.NC.T]), tol) == pl.r
    second = numerical_rank(
        np.hstack([pl.E, pl.Bw, uplant.MB]), tol) == pl.r
    return bool(first and second)
