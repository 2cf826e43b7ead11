"""Subbundle / quotient curvature calculus over a chart.

An :class:`ExactSeqChart` packages an ambient Gram field with a
holomorphic full-column-rank inclusion j(z) and derives everything the
splitting theory needs: a holomorphic quotient frame q(z), the induced
sub and quotient form fields, pointwise adjoints, and the second
fundamental form.  The identities implemented here are only claimed
modulo form kernels, so every residual is measured after contracting
with the Gram matrix of the relevant bundle.

Frame choices: S is framed by the columns of j; Q is framed by
holomorphic continuation of an orthonormal complement N0 of the column
space at the chart center,

    q(z) = N0^H (I - j(z) (w0 j(z))^-1 w0),        w0 = pinv(j(z0)),

which satisfies q j = 0, q(z0) = N0^H, and dbar q = 0 by construction.
"""

from dataclasses import dataclass

import numpy as np

from .charts import ChartField, CurvatureAt, chern_connection, curvature_tensor
from .errors import HermitiaError, NotHolomorphic
from .forms import HermitianForm, LinearMap, adjoint, admits_adjoint, quotient_form, sum_quotient_form

SIGMA_DBAR_TOL = 1e-6
HOLOMORPHY_TOL = 1e-8


def _wirt_fd(fn, z, a, step, conjugate=False):
    """Central Wirtinger stencil for an arbitrary array-valued function."""
    e = np.zeros(len(z), dtype=complex)
    e[a] = 1.0
    h = step
    fp, fm = fn(z + h * e), fn(z - h * e)
    fip, fim = fn(z + 1j * h * e), fn(z - 1j * h * e)
    if conjugate:
        return (fp - fm + 1j * fip - 1j * fim) / (4.0 * h)
    return (fp - fm - 1j * fip + 1j * fim) / (4.0 * h)


class ExactSeqChart:
    """Ambient field with a holomorphic subbundle inclusion.

    Parameters
    ----------
    ambient_field : the Gram field of the ambient bundle (rank r fiber).
    j : constant (r, k) matrix, or callable z -> (r, k) matrix.
    dj : optional callable z -> (m, r, k) of holomorphic derivatives;
        finite differences are used when omitted for a callable j.
    """

    def __init__(self, ambient_field: ChartField, j, dj=None, name=""):
        self.ambient = ambient_field
        self.m = ambient_field.m
        self.r = ambient_field.shape
        self.name = name
        if callable(j):
            self._j_fn = j
            self._dj_fn = dj
        else:
            j0 = np.asarray(j, dtype=complex)
            self._j_fn = lambda z, j0=j0: j0
            self._dj_fn = lambda z, j0=j0: np.zeros((self.m,) + j0.shape, dtype=complex)
        self.center = ambient_field.center
        j0 = self.j_at(self.center)
        if j0.ndim != 2 or j0.shape[0] != self.r:
            raise HermitiaError("inclusion has shape %s, ambient rank is %d" % (j0.shape, self.r))
        self.k = j0.shape[1]
        if self.k >= self.r:
            raise HermitiaError("inclusion must be a proper subbundle")
        sv = np.linalg.svd(j0, compute_uv=False)
        if sv[-1] <= 1e-8 * sv[0]:
            raise HermitiaError("inclusion is not full column rank at the chart center")
        self._check_holomorphic()

        # holomorphic quotient frame by continuation from the center
        u, _, _ = np.linalg.svd(j0)
        self._n0h = u[:, self.k:].conj().T  # (r-k, r), orthonormal rows
        self._w0 = np.linalg.pinv(j0)  # (k, r)

        self.sub_field = self._build_sub_field()
        self.quot_field = self._build_quot_field()

    # -- frames ---------------------------------------------------------

    def j_at(self, z):
        return np.asarray(self._j_fn(np.asarray(z, dtype=complex)), dtype=complex)

    def dj_at(self, z):
        z = np.asarray(z, dtype=complex)
        if self._dj_fn is not None:
            return np.asarray(self._dj_fn(z), dtype=complex)
        return np.stack(
            [_wirt_fd(self.j_at, z, a, self.ambient.fd_step) for a in range(self.m)]
        )

    def q_at(self, z):
        j = self.j_at(z)
        core = np.linalg.inv(self._w0 @ j)
        return self._n0h @ (np.eye(self.r) - j @ core @ self._w0)

    def dq_at(self, z):
        j = self.j_at(z)
        dj = self.dj_at(z)
        core = np.linalg.inv(self._w0 @ j)
        out = np.empty((self.m, self.r - self.k, self.r), dtype=complex)
        for a in range(self.m):
            inner = dj[a] @ core @ self._w0 - j @ core @ (self._w0 @ dj[a]) @ core @ self._w0
            out[a] = -self._n0h @ inner
        return out

    def _check_holomorphic(self):
        rng = np.random.default_rng(np.random.SeedSequence([13, self.r, self.m]))
        pts = [self.center]
        for _ in range(2):
            pts.append(
                self.center
                + 0.3
                * np.min(self.ambient.radius)
                * (rng.uniform(-1, 1, self.m) + 1j * rng.uniform(-1, 1, self.m))
            )
        for z in pts:
            for a in range(self.m):
                db = _wirt_fd(self.j_at, z, a, self.ambient.fd_step, conjugate=True)
                if np.linalg.norm(db) > HOLOMORPHY_TOL * (1.0 + np.linalg.norm(self.j_at(z))):
                    raise NotHolomorphic(
                        "inclusion has antiholomorphic derivative %.2e" % np.linalg.norm(db)
                    )

    # -- induced fields --------------------------------------------------

    def _build_sub_field(self):
        amb = self.ambient

        def ev(z):
            j = self.j_at(z)
            return j.conj().T @ amb.gram(z) @ j

        d_fn = None
        dd_fn = None
        if amb.analytic and self._dj_fn is not None:
            def d_fn(z):
                j, dj = self.j_at(z), self.dj_at(z)
                g, dg = amb.gram(z), amb.d(z)
                return np.stack(
                    [j.conj().T @ (dg[a] @ j + g @ dj[a]) for a in range(self.m)]
                )

            if amb.dd_fn is not None:
                def dd_fn(z):
                    j, dj = self.j_at(z), self.dj_at(z)
                    g, dg, dbg, ddg = amb.gram(z), amb.d(z), amb.dbar(z), amb.dd(z)
                    out = np.empty((self.m, self.m, self.k, self.k), dtype=complex)
                    for a in range(self.m):
                        for b in range(self.m):
                            out[a, b] = (
                                dj[b].conj().T @ (dg[a] @ j + g @ dj[a])
                                + j.conj().T @ (ddg[a, b] @ j + dbg[b] @ dj[a])
                            )
                    return out

        return ChartField(
            self.m,
            self.k,
            ev,
            center=amb.center,
            radius=amb.radius,
            d_fn=d_fn,
            dd_fn=dd_fn,
            rank_tol=amb.rank_tol,
            solver_tol=amb.solver_tol,
            name=self.name + ".sub",
            self_check=False,
        )

    def _build_quot_field(self):
        amb = self.ambient

        def ev(z):
            bq = quotient_form(
                LinearMap(self.q_at(z)), HermitianForm(amb.gram(z), rank_tol=amb.rank_tol)
            )
            return bq.gram

        return ChartField(
            self.m,
            self.r - self.k,
            ev,
            center=amb.center,
            radius=amb.radius,
            rank_tol=amb.rank_tol,
            solver_tol=amb.solver_tol,
            name=self.name + ".quot",
            self_check=False,
        )

    def at(self, z):
        return _SeqAt(self, np.asarray(z, dtype=complex))


class _SeqAt:
    """All pointwise sequence data at one chart point."""

    def __init__(self, seq: ExactSeqChart, z):
        self.seq = seq
        self.z = z
        self.j = seq.j_at(z)
        self.dj = seq.dj_at(z)
        self.q = seq.q_at(z)
        self.dq = seq.dq_at(z)
        self.g_e = seq.ambient.gram(z)
        self.g_s = seq.sub_field.gram(z)
        self.g_q = seq.quot_field.gram(z)
        self.a_e = chern_connection(seq.ambient, z).a
        self.a_s = chern_connection(seq.sub_field, z).a
        self.a_q = chern_connection(seq.quot_field, z).a
        self.b_s = HermitianForm(self.g_s, rank_tol=seq.sub_field.rank_tol)
        self.b_q = HermitianForm(self.g_q, rank_tol=seq.quot_field.rank_tol)
        self.b_e = HermitianForm(self.g_e, rank_tol=seq.ambient.rank_tol)
        self.jdag = adjoint(LinearMap(self.j), self.b_s, self.b_e).matrix
        self.qdag = adjoint(LinearMap(self.q), self.b_e, self.b_q).matrix
        self.sigma = np.stack(
            [self.q @ (self.dj[a] + self.a_e[a] @ self.j - self.j @ self.a_s[a]) for a in range(seq.m)]
        )
        self.sigma_dagger = np.stack(
            [adjoint(LinearMap(self.sigma[a]), self.b_s, self.b_q).matrix for a in range(seq.m)]
        )


@dataclass
class SecondFundamentalFormAt:
    point: np.ndarray
    sigma: np.ndarray  # (m, r-k, k)
    sigma_dagger: np.ndarray  # (m, k, r-k)
    dbar_part_residual: float


def second_fundamental_form(seq: ExactSeqChart, z) -> SecondFundamentalFormAt:
    """sigma(d_alpha) = q (d_alpha j + A_E j - j A_S) with its form adjoint.

    The antiholomorphic analogue q dbar_alpha j must vanish (the form has
    pure (1,0) type); its residual is reported and gated at 1e-6.
    """
    at = seq.at(z)
    worst = 0.0
    for a in range(seq.m):
        db = _wirt_fd(seq.j_at, at.z, a, seq.ambient.fd_step, conjugate=True)
        worst = max(worst, float(np.linalg.norm(at.q @ db)))
    scale = 1.0 + float(np.linalg.norm(at.sigma))
    if worst > SIGMA_DBAR_TOL * scale:
        raise HermitiaError(
            "second fundamental form has a (0,1)-part of size %.2e" % worst
        )
    for a in range(seq.m):
        if not admits_adjoint(LinearMap(at.sigma[a]), at.b_s, at.b_q):
            raise HermitiaError("second fundamental form does not admit an adjoint")
    return SecondFundamentalFormAt(
        point=at.z,
        sigma=at.sigma,
        sigma_dagger=at.sigma_dagger,
        dbar_part_residual=worst / scale,
    )


# ---------------------------------------------------------------------------
# the identity table


def _rel(contracted, *scales):
    s = 1.0 + max((float(np.linalg.norm(x)) for x in scales), default=0.0)
    return float(np.linalg.norm(contracted)) / s


def demailly_residuals(seq: ExactSeqChart, z, step=1e-4):
    """Residuals of the five derivative identities, contracted with Grams.

    Lines: (1) D'j ~ qdag sigma; (2) D'q ~ -sigma jdag; (3) D'jdag ~ 0 and
    dbar jdag ~ sigdag q; (4) D'qdag ~ 0 and dbar qdag ~ -j sigdag;
    (5) antisymmetrized D'sigma ~ 0 and antisymmetrized dbar sigdag ~ 0.
    """
    at = seq.at(z)
    m = seq.m

    def jdag_at(w):
        a = seq.at(w)
        return a.jdag

    def qdag_at(w):
        a = seq.at(w)
        return a.qdag

    def sigma_at(w):
        a = seq.at(w)
        return a.sigma

    def sigdag_at(w):
        a = seq.at(w)
        return a.sigma_dagger

    out = {}

    r1 = 0.0
    for a in range(m):
        dpj = at.dj[a] + at.a_e[a] @ at.j - at.j @ at.a_s[a]
        lhs = at.g_e @ dpj
        rhs = at.g_e @ (at.qdag @ at.sigma[a])
        r1 = max(r1, _rel(lhs - rhs, lhs, rhs))
    out["inclusion"] = r1

    r2 = 0.0
    for a in range(m):
        dpq = at.dq[a] + at.a_q[a] @ at.q - at.q @ at.a_e[a]
        lhs = at.g_q @ dpq
        rhs = -at.g_q @ (at.sigma[a] @ at.jdag)
        r2 = max(r2, _rel(lhs - rhs, lhs, rhs))
    out["projection"] = r2

    r3 = 0.0
    for a in range(m):
        djdag = _wirt_fd(jdag_at, at.z, a, step)
        dpjdag = djdag + at.a_s[a] @ at.jdag - at.jdag @ at.a_e[a]
        r3 = max(r3, _rel(at.g_s @ dpjdag, at.g_s @ djdag))
        dbjdag = _wirt_fd(jdag_at, at.z, a, step, conjugate=True)
        rhs = at.sigma_dagger[a] @ at.q
        r3 = max(r3, _rel(at.g_s @ (dbjdag - rhs), at.g_s @ dbjdag, at.g_s @ rhs))
    out["inclusion_adjoint"] = r3

    r4 = 0.0
    for a in range(m):
        dqdag = _wirt_fd(qdag_at, at.z, a, step)
        dpqdag = dqdag + at.a_e[a] @ at.qdag - at.qdag @ at.a_q[a]
        r4 = max(r4, _rel(at.g_e @ dpqdag, at.g_e @ dqdag))
        dbqdag = _wirt_fd(qdag_at, at.z, a, step, conjugate=True)
        rhs = -at.j @ at.sigma_dagger[a]
        r4 = max(r4, _rel(at.g_e @ (dbqdag - rhs), at.g_e @ dbqdag, at.g_e @ rhs))
    out["projection_adjoint"] = r4

    r5 = 0.0
    if m > 1:
        dsig = np.stack([_wirt_fd(sigma_at, at.z, a, step) for a in range(m)])
        dbsigdag = np.stack(
            [_wirt_fd(sigdag_at, at.z, a, step, conjugate=True) for a in range(m)]
        )
        for a in range(m):
            for b in range(a + 1, m):
                dpsab = dsig[a][b] + at.a_q[a] @ at.sigma[b] - at.sigma[b] @ at.a_s[a]
                dpsba = dsig[b][a] + at.a_q[b] @ at.sigma[a] - at.sigma[a] @ at.a_s[b]
                r5 = max(r5, _rel(at.g_q @ (dpsab - dpsba), at.g_q @ dpsab, at.g_q @ dpsba))
                dbsab = dbsigdag[a][b]
                dbsba = dbsigdag[b][a]
                r5 = max(r5, _rel(at.g_s @ (dbsab - dbsba), at.g_s @ dbsab, at.g_s @ dbsba))
    out["second_form_closed"] = r5
    return out


# ---------------------------------------------------------------------------
# Codazzi-type corollaries


def _contract(block, s, t):
    return complex(np.einsum("st,s,t->", block, s, np.conj(t)))


def codazzi_sub(seq: ExactSeqChart, z, alpha, beta, s, t):
    """Ambient curvature on js, jt minus the quotient square of sigma.

    Equals the intrinsic curvature of the induced sub form (the oracle
    the tests compare against).
    """
    at = seq.at(z)
    s = np.asarray(s, dtype=complex)
    t = np.asarray(t, dtype=complex)
    r_e = curvature_tensor(seq.ambient, z).tensor
    ambient_term = _contract(r_e[alpha, beta], at.j @ s, at.j @ t)
    sq = np.vdot(at.sigma[beta] @ t, at.g_q @ (at.sigma[alpha] @ s))
    return ambient_term - complex(sq)


def codazzi_quot(seq: ExactSeqChart, z, alpha, beta, u, v):
    """Ambient curvature on qdag u, qdag v plus the sub square of sigma dagger."""
    at = seq.at(z)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    r_e = curvature_tensor(seq.ambient, z).tensor
    ambient_term = _contract(r_e[alpha, beta], at.qdag @ u, at.qdag @ v)
    sq = np.vdot(at.sigma_dagger[alpha] @ v, at.g_s @ (at.sigma_dagger[beta] @ u))
    return ambient_term + complex(sq)


# ---------------------------------------------------------------------------
# block splitting of the contracted curvature


@dataclass
class SplittingBlocks:
    point: np.ndarray
    ss: np.ndarray  # (m, m, k, k): contracted sub curvature
    sq: np.ndarray  # (m, m, k, r-k): G_S D' sigma_dagger
    qs: np.ndarray  # (m, m, r-k, k): G_Q dbar sigma
    qq: np.ndarray  # (m, m, r-k, r-k): contracted quotient curvature
    reassembly_residual: float


def splitting_curvature_blocks(seq: ExactSeqChart, z, step=1e-4) -> SplittingBlocks:
    """Contracted ambient curvature in the smooth splitting e -> (jdag e, q e).

    The diagonal blocks are the intrinsic contracted curvatures of sub
    and quotient; the off-diagonal blocks are derivative forms of the
    second fundamental form.  Conjugating the blocks back must reproduce
    the ambient contracted curvature (mod ambient kernel), and the
    relative residual of that reassembly is returned.
    """
    at = seq.at(z)
    m, k, rk = seq.m, seq.k, seq.r - seq.k

    r_e = curvature_tensor(seq.ambient, z).tensor
    r_s = curvature_tensor(seq.sub_field, z).tensor
    r_q = curvature_tensor(seq.quot_field, z).tensor

    def sigma_at(w):
        return seq.at(w).sigma

    def sigdag_at(w):
        return seq.at(w).sigma_dagger

    dsig = np.stack([_wirt_fd(sigma_at, at.z, a, step, conjugate=True) for a in range(m)])
    dpsigdag = np.stack([_wirt_fd(sigdag_at, at.z, a, step) for a in range(m)])

    ss = np.empty((m, m, k, k), dtype=complex)
    sq = np.empty((m, m, k, rk), dtype=complex)
    qs = np.empty((m, m, rk, k), dtype=complex)
    qq = np.empty((m, m, rk, rk), dtype=complex)
    worst = 0.0
    for a in range(m):
        for b in range(m):
            m_e = r_e[a, b].T
            m_s = r_s[a, b].T
            m_q = r_q[a, b].T
            ss[a, b] = m_s
            qq[a, b] = m_q
            dps = dpsigdag[a][b] + at.a_s[a] @ at.sigma_dagger[b] - at.sigma_dagger[b] @ at.a_q[a]
            sq[a, b] = at.g_s @ dps
            qs[a, b] = at.g_q @ dsig[b][a]
            sig_sq = at.sigma[b].conj().T @ at.g_q @ at.sigma[a]
            sigdag_sq = at.sigma_dagger[a].conj().T @ at.g_s @ at.sigma_dagger[b]
            rebuilt = (
                at.jdag.conj().T @ (m_s + sig_sq) @ at.jdag
                - at.jdag.conj().T @ sq[a, b] @ at.q
                - at.q.conj().T @ qs[a, b] @ at.jdag
                + at.q.conj().T @ (m_q - sigdag_sq) @ at.q
            )
            worst = max(worst, _rel(rebuilt - m_e, m_e, rebuilt))
    return SplittingBlocks(
        point=at.z, ss=ss, sq=sq, qs=qs, qq=qq, reassembly_residual=worst
    )


# ---------------------------------------------------------------------------
# curvature of a sum of two forms


def sum_curvature(
    b1_field: ChartField, b2_field: ChartField, z, perturb1=None, perturb2=None
) -> CurvatureAt:
    """Contracted curvature of b1 + b2 assembled from the summands.

    M^h_ab = M^1_ab + M^2_ab - sigma_b^H G_q sigma_a with sigma_a =
    A_1(d_a) - A_2(d_a) and G_q the Gram matrix of the induced sum
    quotient form.  Kernel-valued changes of either connection leave the
    result unchanged because G_q annihilates both kernels; optional
    ``perturb1``/``perturb2`` (z -> (m, r, r) stacks) exist to let tests
    exercise exactly that.
    """
    z = np.asarray(z, dtype=complex)
    t1 = curvature_tensor(b1_field, z)
    t2 = curvature_tensor(b2_field, z)
    a1 = chern_connection(b1_field, z).a
    a2 = chern_connection(b2_field, z).a
    if perturb1 is not None:
        a1 = a1 + np.asarray(perturb1(z), dtype=complex)
    if perturb2 is not None:
        a2 = a2 + np.asarray(perturb2(z), dtype=complex)
    g1 = b1_field.gram(z)
    g2 = b2_field.gram(z)
    gq = sum_quotient_form(
        HermitianForm(g1, rank_tol=b1_field.rank_tol),
        HermitianForm(g2, rank_tol=b2_field.rank_tol),
    ).gram
    m, r = b1_field.m, b1_field.shape
    tensor = np.empty((m, m, r, r), dtype=complex)
    for a in range(m):
        for b in range(m):
            sig_a = a1[a] - a2[a]
            sig_b = a1[b] - a2[b]
            m_h = t1.tensor[a, b].T + t2.tensor[a, b].T - sig_b.conj().T @ gq @ sig_a
            tensor[a, b] = m_h.T
    return CurvatureAt(
        point=z,
        tensor=tensor,
        form_at_point=HermitianForm(g1 + g2, rank_tol=min(b1_field.rank_tol, b2_field.rank_tol)),
    )
