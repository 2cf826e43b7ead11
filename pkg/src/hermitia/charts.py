"""Pointwise differential geometry on a polydisc chart.

A :class:`ChartField` is a smooth Hermitian-matrix-valued function of a
point z in C^m.  Derivatives are either supplied analytically or taken by
central finite differences in Wirtinger form:

    d_a    = (F(z+h) - F(z-h) - i F(z+ih) + i F(z-ih)) / (4h)
    dbar_a = (F(z+h) - F(z-h) + i F(z+ih) - i F(z-ih)) / (4h)

Connections solve G @ A_a = d_a G in the minimum-norm (pseudoinverse)
sense, which requires the rank of G to be constant across the stencil; a
rank change is a first-class error, not a warning.

Curvature is stored as a 4-index tensor R[a][b][s][t] = R(d_a, dbar_b,
e_s, conj(e_t)).  The sign and normalization are pinned by a calibration
invariant: the standard projective-line metric has holomorphic sectional
curvature identically 2.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    HermitiaError,
    NotHolomorphic,
    NotPositiveAtPoint,
    OutOfDomain,
    RankJump,
    SolverResidual,
    ZeroVector,
)
from .forms import HermitianForm, Subspace, hermitize

DEFAULT_SOLVER_TOL = 1e-7


def _as_point(z, m):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape != (m,):
        raise ValueError("point has dimension %s, chart has %d" % (z.shape, m))
    return z


class ChartField:
    """Hermitian Gram-matrix field on a polydisc chart.

    Parameters
    ----------
    m : complex dimension of the chart.
    shape : size of the square Gram matrix.
    eval_fn : z -> (shape, shape) complex matrix.
    center, radius : polydisc domain; radius may be per-coordinate.
    d_fn : optional analytic first derivatives, z -> (m, shape, shape)
        with d_fn(z)[a] = d_a G.
    dd_fn : optional analytic mixed second derivatives, z -> (m, m,
        shape, shape) with dd_fn(z)[a][b] = d_a dbar_b G.
    self_check : compare analytic derivatives against finite differences
        at a few deterministic points on construction.
    """

    def __init__(
        self,
        m,
        shape,
        eval_fn,
        center=None,
        radius=1.0,
        d_fn=None,
        dd_fn=None,
        fd_step=1e-4,
        fd_outer_step=1e-3,
        rank_tol=1e-8,
        solver_tol=DEFAULT_SOLVER_TOL,
        hermitize_reads=True,
        name="",
        self_check=True,
    ):
        self.m = int(m)
        self.shape = int(shape)
        self.eval_fn = eval_fn
        self.center = (
            np.zeros(self.m, dtype=complex)
            if center is None
            else _as_point(center, self.m)
        )
        self.radius = np.broadcast_to(np.asarray(radius, dtype=float), (self.m,)).copy()
        self.d_fn = d_fn
        self.dd_fn = dd_fn
        self.fd_step = float(fd_step)
        self.fd_outer_step = float(fd_outer_step)
        self.rank_tol = float(rank_tol)
        self.solver_tol = float(solver_tol)
        self.hermitize_reads = bool(hermitize_reads)
        self.name = name
        if self_check and self.d_fn is not None:
            self._self_check()

    # -- evaluation ---------------------------------------------------------

    def gram(self, z):
        g = np.asarray(self.eval_fn(_as_point(z, self.m)), dtype=complex)
        if g.shape != (self.shape, self.shape):
            raise HermitiaError("field evaluator returned shape %s" % (g.shape,))
        return hermitize(g) if self.hermitize_reads else g

    def form_at(self, z):
        return HermitianForm(self.gram(z), rank_tol=self.rank_tol)

    def in_domain(self, z, margin=0.0):
        z = _as_point(z, self.m)
        return bool(np.all(np.abs(z - self.center) <= self.radius - margin))

    def _require_domain(self, z, margin):
        if not self.in_domain(z, margin):
            raise OutOfDomain(
                "point %s (with stencil margin %g) leaves the chart polydisc"
                % (np.array2string(_as_point(z, self.m), precision=3), margin)
            )

    def rank_at(self, z):
        s = np.linalg.svd(self.gram(z), compute_uv=False)
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > self.rank_tol * s[0]))

    # -- derivatives --------------------------------------------------------

    @property
    def analytic(self):
        return self.d_fn is not None

    def _fd_dir(self, fn, z, a, step, conjugate):
        e = np.zeros(self.m, dtype=complex)
        e[a] = 1.0
        h = step
        fp, fm = fn(z + h * e), fn(z - h * e)
        fip, fim = fn(z + 1j * h * e), fn(z - 1j * h * e)
        if conjugate:
            return (fp - fm + 1j * fip - 1j * fim) / (4.0 * h)
        return (fp - fm - 1j * fip + 1j * fim) / (4.0 * h)

    def d(self, z):
        """All holomorphic first derivatives, shape (m, shape, shape)."""
        z = _as_point(z, self.m)
        if self.d_fn is not None:
            return np.asarray(self.d_fn(z), dtype=complex)
        self._require_domain(z, self.fd_step)
        return np.stack(
            [self._fd_dir(self.gram, z, a, self.fd_step, False) for a in range(self.m)]
        )

    def dbar(self, z):
        """All antiholomorphic first derivatives, shape (m, shape, shape)."""
        if self.d_fn is not None and self.hermitize_reads:
            d = self.d(z)
            return np.stack([d[a].conj().T for a in range(self.m)])
        z = _as_point(z, self.m)
        self._require_domain(z, self.fd_step)
        return np.stack(
            [self._fd_dir(self.gram, z, a, self.fd_step, True) for a in range(self.m)]
        )

    def dd(self, z):
        """Mixed second derivatives d_a dbar_b G, shape (m, m, shape, shape)."""
        z = _as_point(z, self.m)
        if self.dd_fn is not None:
            return np.asarray(self.dd_fn(z), dtype=complex)
        self._require_domain(z, self.fd_outer_step + self.fd_step)
        out = np.empty((self.m, self.m, self.shape, self.shape), dtype=complex)
        for b in range(self.m):
            def dbar_b(w, b=b):
                if self.d_fn is not None and self.hermitize_reads:
                    return np.asarray(self.d_fn(w), dtype=complex)[b].conj().T
                return self._fd_dir(self.gram, w, b, self.fd_step, True)

            for a in range(self.m):
                out[a, b] = self._fd_dir(dbar_b, z, a, self.fd_outer_step, False)
        return out

    def finite_difference_copy(self):
        """The same field with analytic evaluators dropped."""
        return ChartField(
            self.m,
            self.shape,
            self.eval_fn,
            center=self.center,
            radius=self.radius,
            fd_step=self.fd_step,
            fd_outer_step=self.fd_outer_step,
            rank_tol=self.rank_tol,
            solver_tol=self.solver_tol,
            hermitize_reads=self.hermitize_reads,
            name=self.name,
            self_check=False,
        )

    def _self_check(self):
        rng = np.random.default_rng(np.random.SeedSequence([7, self.m, self.shape]))
        worst_d = 0.0
        for _ in range(10):
            z = self.center + 0.5 * self.radius * (
                rng.uniform(-1, 1, self.m) + 1j * rng.uniform(-1, 1, self.m)
            ) / np.sqrt(2.0)
            ana = np.asarray(self.d_fn(z), dtype=complex)
            for a in range(self.m):
                fd = self._fd_dir(self.gram, z, a, self.fd_step, False)
                err = np.linalg.norm(ana[a] - fd) / (1.0 + np.linalg.norm(fd))
                worst_d = max(worst_d, err)
        if worst_d > 1e-6:
            raise HermitiaError(
                "analytic first derivatives disagree with finite differences "
                "(relative error %.2e)" % worst_d
            )
        if self.dd_fn is not None:
            worst = 0.0
            for _ in range(3):
                z = self.center + 0.4 * self.radius * (
                    rng.uniform(-1, 1, self.m) + 1j * rng.uniform(-1, 1, self.m)
                ) / np.sqrt(2.0)
                ana = np.asarray(self.dd_fn(z), dtype=complex)
                for a in range(self.m):
                    for b in range(self.m):
                        def dbar_b(w, b=b):
                            return np.asarray(self.d_fn(w), dtype=complex)[b].conj().T

                        fd = self._fd_dir(dbar_b, z, a, self.fd_outer_step, False)
                        err = np.linalg.norm(ana[a, b] - fd) / (1.0 + np.linalg.norm(fd))
                        worst = max(worst, err)
            if worst > 1e-5:
                raise HermitiaError(
                    "analytic second derivatives disagree with finite differences "
                    "(relative error %.2e)" % worst
                )

    def __repr__(self):
        mode = "analytic" if self.analytic else "fd"
        label = " %r" % self.name if self.name else ""
        return "ChartField(m=%d, shape=%d, %s%s)" % (self.m, self.shape, mode, label)


@dataclass
class ConnectionAt:
    point: np.ndarray
    a: np.ndarray  # (m, shape, shape), a[alpha] in the frame
    residual: float
    kernel_basis: Subspace


@dataclass
class CurvatureAt:
    point: np.ndarray
    tensor: np.ndarray  # (m, m, shape, shape), R[a][b][s][t]
    form_at_point: HermitianForm

    def pair_symmetry_residual(self):
        r = self.tensor
        sym = r - np.conj(np.transpose(r, (1, 0, 3, 2)))
        return float(np.linalg.norm(sym) / (1.0 + np.linalg.norm(r)))


def wirtinger(field: ChartField, z, direction, conjugate=False, step=None):
    """Single Wirtinger derivative of the Gram field at z."""
    z = _as_point(z, field.m)
    if step is None and field.d_fn is not None:
        return (field.dbar(z) if conjugate else field.d(z))[direction]
    h = field.fd_step if step is None else float(step)
    field._require_domain(z, h)
    return field._fd_dir(field.gram, z, direction, h, conjugate)


def _check_constant_rank(field: ChartField, z):
    z = _as_point(z, field.m)
    s = field.fd_outer_step
    field._require_domain(z, s + field.fd_step)
    r0 = field.rank_at(z)
    for a in range(field.m):
        e = np.zeros(field.m, dtype=complex)
        e[a] = 1.0
        for w in (z + s * e, z - s * e, z + 1j * s * e, z - 1j * s * e):
            r = field.rank_at(w)
            if r != r0:
                raise RankJump(
                    "rank %d at the point but %d at a stencil neighbor" % (r0, r)
                )
    return r0


def chern_connection(field: ChartField, z, solver_tol=None) -> ConnectionAt:
    """Minimum-norm solution A of G @ A_a = d_a G at a point.

    For nondegenerate G this is the usual G^-1 dG; in general A is unique
    only modulo matrices with columns in Ker G.
    """
    z = _as_point(z, field.m)
    _check_constant_rank(field, z)
    tol = field.solver_tol if solver_tol is None else float(solver_tol)
    g = field.gram(z)
    dg = field.d(z)
    gp = np.linalg.pinv(g, rcond=field.rank_tol, hermitian=True)
    a = np.stack([gp @ dg[i] for i in range(field.m)])
    residual = 0.0
    for i in range(field.m):
        r = np.linalg.norm(g @ a[i] - dg[i]) / (1.0 + np.linalg.norm(dg[i]))
        residual = max(residual, r)
    if residual > tol:
        raise SolverResidual(
            "G A = dG has no solution to %.1e (residual %.2e); "
            "the field is not admissible here" % (tol, residual)
        )
    kernel_basis = Subspace(
        field.shape,
        np.linalg.svd(g)[2][field.rank_at(z):].conj().T,
        rank_tol=field.rank_tol,
    )
    return ConnectionAt(point=z, a=a, residual=residual, kernel_basis=kernel_basis)


def curvature_tensor(field: ChartField, z) -> CurvatureAt:
    """Contracted curvature tensor R[a][b][s][t] at a point.

    Computed from M_ab = (dbar_b G) G^+ (d_a G) - d_a dbar_b G, which on
    admissible constant-rank fields equals -G dbar_b A_a for any choice of
    compatible connection; the tensor entry is R[a][b][s][t] = M_ab[t, s].
    """
    z = _as_point(z, field.m)
    _check_constant_rank(field, z)
    g = field.gram(z)
    dg = field.d(z)
    dbg = field.dbar(z)
    ddg = field.dd(z)
    gp = np.linalg.pinv(g, rcond=field.rank_tol, hermitian=True)
    residual = max(
        np.linalg.norm(g @ (gp @ dg[i]) - dg[i]) / (1.0 + np.linalg.norm(dg[i]))
        for i in range(field.m)
    )
    if residual > field.solver_tol:
        raise SolverResidual(
            "field is not admissible at this point (residual %.2e)" % residual
        )
    m, r = field.m, field.shape
    tensor = np.empty((m, m, r, r), dtype=complex)
    for a in range(m):
        for b in range(m):
            mab = dbg[b] @ gp @ dg[a] - ddg[a, b]
            tensor[a, b] = mab.T
    return CurvatureAt(
        point=z,
        tensor=tensor,
        form_at_point=HermitianForm(g, rank_tol=field.rank_tol),
    )


def curvature_from_connection(field: ChartField, z, a_fn, step=1e-4) -> np.ndarray:
    """R[a][b][s][t] = -(G dbar_b A_a)[t][s] for a supplied connection map.

    ``a_fn`` maps a chart point to the full (m, shape, shape) stack of
    connection matrices; its dbar derivative is taken by finite
    differences, so gauge comparisons run both candidates through an
    identical pipeline.
    """
    z = _as_point(z, field.m)
    g = field.gram(z)
    m, r = field.m, field.shape
    tensor = np.empty((m, m, r, r), dtype=complex)
    for b in range(m):
        dbar_a = field._fd_dir(lambda w: np.asarray(a_fn(w), dtype=complex), z, b, step, True)
        for a in range(m):
            tensor[a, b] = -(g @ dbar_a[a]).T
    return tensor


def smooth_kernel_perturbation(field: ChartField, z, seed=0):
    """A smooth matrix function K with columns in Ker G, for gauge tests.

    Built as (projector onto Ker G(w)) @ K0 @ Phi(w) with K0 the kernel
    basis at z and Phi a fixed seeded polynomial in (w, conj(w)); returns
    the zero function for nondegenerate fields.
    """
    z0 = _as_point(z, field.m)
    g0 = field.gram(z0)
    s = np.linalg.svd(g0, compute_uv=False)
    rank0 = int(np.sum(s > field.rank_tol * s[0])) if s[0] > 0 else 0
    jk = field.shape - rank0
    if jk == 0:
        return lambda w: np.zeros((field.shape, field.shape), dtype=complex)
    k0 = np.linalg.svd(g0)[2][rank0:].conj().T
    rng = np.random.default_rng(np.random.SeedSequence([seed, field.shape, field.m]))
    c0 = rng.standard_normal((jk, field.shape)) + 1j * rng.standard_normal((jk, field.shape))
    c1 = rng.standard_normal((field.m, jk, field.shape)) + 1j * rng.standard_normal(
        (field.m, jk, field.shape)
    )
    c2 = rng.standard_normal((field.m, jk, field.shape)) + 1j * rng.standard_normal(
        (field.m, jk, field.shape)
    )

    def k(w):
        w = _as_point(w, field.m)
        g = field.gram(w)
        gp = np.linalg.pinv(g, rcond=field.rank_tol, hermitian=True)
        p_ker = np.eye(field.shape, dtype=complex) - gp @ g
        dw = w - z0
        phi = c0 + np.tensordot(dw, c1, axes=1) + np.tensordot(dw.conj(), c2, axes=1)
        return p_ker @ k0 @ phi

    return k


def gauge_independence_residual(field: ChartField, z, seed=0, perturbation=None, step=1e-4):
    """Relative change of the curvature tensor under a kernel-valued
    perturbation of the connection; expected at finite-difference noise
    level (<= 1e-6)."""
    z = _as_point(z, field.m)
    _check_constant_rank(field, z)
    if perturbation is None:
        perturbation = smooth_kernel_perturbation(field, z, seed=seed)

    def a_fn(w):
        return chern_connection(field, w).a

    def a_pert(w):
        return a_fn(w) + perturbation(w)

    r0 = curvature_from_connection(field, z, a_fn, step=step)
    r1 = curvature_from_connection(field, z, a_pert, step=step)
    return float(np.linalg.norm(r0 - r1) / (1.0 + np.linalg.norm(r0)))


def hsc(field: ChartField, z, v):
    """Holomorphic sectional curvature H(v) = R(v, conj(v), v, conj(v)) / b(v, conj(v))^2.

    Only defined for metric (tangent-bundle, positive-definite) fields,
    where chart and bundle indices coincide.
    """
    if field.shape != field.m:
        raise HermitiaError("sectional curvature needs a tangent-bundle field")
    z = _as_point(z, field.m)
    v = np.asarray(v, dtype=complex).reshape(field.m)
    if np.linalg.norm(v) == 0.0:
        raise ZeroVector("direction must be nonzero")
    g = field.gram(z)
    w = np.linalg.eigvalsh(g)
    if w[0] <= field.rank_tol * max(abs(w[-1]), 1e-300):
        raise NotPositiveAtPoint("metric is not positive-definite at this point")
    curv = curvature_tensor(field, z)
    return hsc_of_tensor(curv.tensor, g, v)


def hsc_of_tensor(tensor, g, v):
    """H(v) from a precomputed curvature tensor and Gram matrix."""
    v = np.asarray(v, dtype=complex)
    num = np.einsum("abst,a,b,s,t->", tensor, v, v.conj(), v, v.conj())
    den = np.real(v.conj() @ g @ v) ** 2
    return float(np.real(num) / den)


def torsion_defect(field: ChartField, z):
    """max |b(tau(d_a, d_b), conj(e_c))| over a < b and c, for coordinate frames.

    The value is the antisymmetrized first derivative dG[a][c, b] -
    dG[b][c, a]; it is cross-checked against the connection route
    G(A_a e_b - A_b e_a).
    """
    if field.shape != field.m:
        raise HermitiaError("torsion needs a tangent-bundle field")
    z = _as_point(z, field.m)
    conn = chern_connection(field, z)
    g = field.gram(z)
    dg = field.d(z)
    defect = 0.0
    cross = 0.0
    for a in range(field.m):
        for b in range(a + 1, field.m):
            direct = dg[a][:, b] - dg[b][:, a]
            via_conn = g @ (conn.a[a][:, b] - conn.a[b][:, a])
            defect = max(defect, float(np.max(np.abs(direct))))
            cross = max(cross, float(np.max(np.abs(direct - via_conn))))
    if cross > 1e-5 * (1.0 + defect):
        raise HermitiaError(
            "torsion routes disagree (%.2e); connection solve is suspect" % cross
        )
    return defect


def curvature_20_defect(field: ChartField, z, step=1e-4):
    """Norm of the (2,0)-type curvature after contraction with G.

    G (d_a A_b - d_b A_a + [A_a, A_b]) vanishes identically for admissible
    fields; the returned defect is finite-difference noise.
    """
    z = _as_point(z, field.m)
    _check_constant_rank(field, z)
    g = field.gram(z)

    def a_fn(w):
        return chern_connection(field, w).a

    a0 = a_fn(z)
    da = np.stack(
        [field._fd_dir(lambda w: np.asarray(a_fn(w)), z, c, step, False) for c in range(field.m)]
    )  # da[c][a] = d_c A_a
    defect = 0.0
    scale = 1.0 + max(np.linalg.norm(g @ da[c][a]) for c in range(field.m) for a in range(field.m))
    for a in range(field.m):
        for b in range(a + 1, field.m):
            f20 = da[a][b] - da[b][a] + a0[a] @ a0[b] - a0[b] @ a0[a]
            defect = max(defect, float(np.linalg.norm(g @ f20)))
    return defect / scale


class HolomorphicMap:
    """A holomorphic chart map f: C^m_in -> C^m_out with a Jacobian.

    The Jacobian J[i][j] = d f_i / d z_j is analytic when supplied,
    otherwise a Wirtinger finite difference of ``func``.
    """

    def __init__(self, func, m_in, m_out, jacobian=None, fd_step=1e-5):
        self.func = func
        self.m_in = int(m_in)
        self.m_out = int(m_out)
        self._jacobian = jacobian
        self.fd_step = float(fd_step)

    def __call__(self, z):
        w = np.atleast_1d(np.asarray(self.func(_as_point(z, self.m_in)), dtype=complex))
        if w.shape != (self.m_out,):
            raise HermitiaError("map returned shape %s" % (w.shape,))
        return w

    def _fd_column(self, z, j, conjugate):
        h = self.fd_step
        e = np.zeros(self.m_in, dtype=complex)
        e[j] = 1.0
        fp, fm = self(z + h * e), self(z - h * e)
        fip, fim = self(z + 1j * h * e), self(z - 1j * h * e)
        if conjugate:
            return (fp - fm + 1j * fip - 1j * fim) / (4.0 * h)
        return (fp - fm - 1j * fip + 1j * fim) / (4.0 * h)

    def jacobian(self, z):
        z = _as_point(z, self.m_in)
        if self._jacobian is not None:
            j = np.asarray(self._jacobian(z), dtype=complex)
            if j.shape != (self.m_out, self.m_in):
                raise HermitiaError("jacobian returned shape %s" % (j.shape,))
            return j
        return np.stack([self._fd_column(z, j, False) for j in range(self.m_in)], axis=1)

    def holomorphy_defect(self, z):
        z = _as_point(z, self.m_in)
        dbar = np.stack([self._fd_column(z, j, True) for j in range(self.m_in)], axis=1)
        return float(np.linalg.norm(dbar))


def pullback_consistency(map_obj: HolomorphicMap, field: ChartField, z, tol_holo=1e-8):
    """Residual between the pullback of the connection and the connection
    of the pulled-back form field, measured after contracting with G.

    When the Jacobian at z is square and invertible, a second check
    compares the frame-transported metric J^H G(f) J against the gauge-
    transformed connection J^-1 (sum_i J[i][j] A_i) J + J^-1 dJ[j]; the
    returned value is the worst applicable residual.
    """
    from .fields import pullback_field

    z = _as_point(z, map_obj.m_in)
    defect = map_obj.holomorphy_defect(z)
    jac = map_obj.jacobian(z)
    if defect > tol_holo * (1.0 + np.linalg.norm(jac)):
        raise NotHolomorphic("map has antiholomorphic derivative %.2e" % defect)

    w = map_obj(z)
    amb_conn = chern_connection(field, w)
    g_at = field.gram(w)
    pulled_a = np.stack(
        [
            sum(jac[i, j] * amb_conn.a[i] for i in range(map_obj.m_out))
            for j in range(map_obj.m_in)
        ]
    )

    pb = pullback_field(field, map_obj, radius=0.05, center=z)
    pb_conn = chern_connection(pb, z)
    scale = 1.0 + max(np.linalg.norm(g_at @ pulled_a[j]) for j in range(map_obj.m_in))
    residual = max(
        np.linalg.norm(g_at @ (pb_conn.a[j] - pulled_a[j])) for j in range(map_obj.m_in)
    ) / scale

    if map_obj.m_in == map_obj.m_out:
        sv = np.linalg.svd(jac, compute_uv=False)
        if sv[-1] > 1e-8 * max(sv[0], 1.0):
            def transported(u):
                ju = map_obj.jacobian(u)
                return ju.conj().T @ field.gram(map_obj(u)) @ ju

            tfield = ChartField(
                map_obj.m_in,
                map_obj.m_out,
                transported,
                center=z,
                radius=0.05,
                rank_tol=field.rank_tol,
                self_check=False,
            )
            t_conn = chern_connection(tfield, z)
            jinv = np.linalg.inv(jac)
            h = 1e-4
            djac = []
            for j in range(map_obj.m_in):
                e = np.zeros(map_obj.m_in, dtype=complex)
                e[j] = 1.0
                jp, jm = map_obj.jacobian(z + h * e), map_obj.jacobian(z - h * e)
                jip, jim = map_obj.jacobian(z + 1j * h * e), map_obj.jacobian(z - 1j * h * e)
                djac.append((jp - jm - 1j * jip + 1j * jim) / (4.0 * h))
            g_t = tfield.gram(z)
            scale_t = 1.0 + np.linalg.norm(g_t) * (1.0 + np.linalg.norm(t_conn.a))
            for j in range(map_obj.m_in):
                target = jinv @ pulled_a[j] @ jac + jinv @ djac[j]
                residual = max(
                    residual,
                    np.linalg.norm(g_t @ (t_conn.a[j] - target)) / scale_t,
                )
    return float(residual)
