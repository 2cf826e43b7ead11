"""Linear algebra of possibly degenerate Hermitian forms.

Conventions
-----------
A form b on C^n is stored through its Gram matrix with ``gram[j, k] =
b(e_k, conj(e_j))``, so that for coordinate columns ``s``, ``t``

    b(s, conj(t)) = t^H @ gram @ s.

With this index order the compatibility equation of a Chern connection
reads ``dG = G @ A`` with no transposes (see :mod:`hermitia.charts`).

All rank decisions use a relative singular-value cutoff ``rank_tol``:
singular values below ``rank_tol * smax`` count as zero.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NoAdjoint, NotPositive, NotSurjective, HermitiaError

DEFAULT_RANK_TOL = 1e-10


def hermitize(m):
    """Average a square matrix with its conjugate transpose."""
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + m.conj().T)


def _phase_fix(columns):
    """Rotate each column so its largest entry is real and positive.

    Makes SVD-derived bases deterministic up to the usual degeneracies.
    """
    out = np.array(columns, dtype=complex)
    for j in range(out.shape[1]):
        col = out[:, j]
        i = int(np.argmax(np.abs(col)))
        piv = col[i]
        if abs(piv) > 0:
            out[:, j] = col * (piv.conj() / abs(piv))
    return out


def _nullspace(m, rank_tol):
    """Orthonormal basis (columns) of the null space of a matrix."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[1]
    if m.shape[0] == 0 or not np.any(m):
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(m)
    cutoff = rank_tol * s[0] if s.size else 0.0
    r = int(np.sum(s > cutoff))
    return _phase_fix(vh[r:].conj().T)


def _rangespace(m, rank_tol):
    """Orthonormal basis (columns) of the row space; for Hermitian m this
    is also the column space."""
    m = np.asarray(m, dtype=complex)
    if not np.any(m):
        return np.zeros((m.shape[1], 0), dtype=complex)
    _, s, vh = np.linalg.svd(m)
    cutoff = rank_tol * s[0]
    r = int(np.sum(s > cutoff))
    return _phase_fix(vh[:r].conj().T)


class HermitianForm:
    """A Hermitian form given by its Gram matrix in a fixed frame.

    The matrix is Hermitian-averaged on construction to absorb
    floating-point asymmetry.
    """

    def __init__(self, gram, rank_tol=DEFAULT_RANK_TOL):
        gram = np.asarray(gram, dtype=complex)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise ValueError("gram must be a square matrix")
        self.gram = hermitize(gram)
        self.rank_tol = float(rank_tol)

    @property
    def dim(self):
        return self.gram.shape[0]

    @property
    def rank(self):
        s = np.linalg.svd(self.gram, compute_uv=False)
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > self.rank_tol * s[0]))

    @property
    def kernel_dim(self):
        return self.dim - self.rank

    def value(self, s, t):
        """b(s, conj(t)) for coordinate columns s and t."""
        s = np.asarray(s, dtype=complex)
        t = np.asarray(t, dtype=complex)
        return complex(t.conj() @ self.gram @ s)

    def scaled(self, c):
        return HermitianForm(c * self.gram, rank_tol=self.rank_tol)

    def is_positive_definite(self):
        w = np.linalg.eigvalsh(self.gram)
        return bool(w[0] > self.rank_tol * max(abs(w[-1]), 1e-300))

    def is_positive_semidefinite(self, slack=100.0):
        w = np.linalg.eigvalsh(self.gram)
        scale = max(abs(w[0]), abs(w[-1]), 1.0)
        return bool(w[0] > -slack * self.rank_tol * scale)

    def __repr__(self):
        return "HermitianForm(dim=%d, rank=%d)" % (self.dim, self.rank)


class Subspace:
    """A subspace of C^n spanned by the columns of ``basis``."""

    def __init__(self, ambient_dim, basis, rank_tol=DEFAULT_RANK_TOL):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 2 or basis.shape[0] != ambient_dim:
            raise ValueError("basis must be ambient_dim x d")
        if basis.shape[1] > 0:
            s = np.linalg.svd(basis, compute_uv=False)
            if s[-1] <= rank_tol * s[0]:
                raise ValueError("basis columns are not linearly independent")
        self.ambient_dim = ambient_dim
        self.basis = basis

    @property
    def dim(self):
        return self.basis.shape[1]

    def projector(self):
        """Orthogonal projector (standard inner product) onto the subspace."""
        if self.dim == 0:
            return np.zeros((self.ambient_dim, self.ambient_dim), dtype=complex)
        b = self.basis
        return b @ np.linalg.solve(b.conj().T @ b, b.conj().T)

    def contains(self, v, tol=1e-9):
        v = np.asarray(v, dtype=complex)
        resid = v - self.projector() @ v
        return bool(np.linalg.norm(resid) <= tol * (1.0 + np.linalg.norm(v)))

    def __repr__(self):
        return "Subspace(ambient=%d, dim=%d)" % (self.ambient_dim, self.dim)


class LinearMap:
    """A linear map between coordinate spaces, optionally with attached
    domain/codomain forms."""

    def __init__(self, matrix, domain_form=None, codomain_form=None):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if domain_form is not None and matrix.shape[1] != domain_form.dim:
            raise ValueError("matrix columns do not match domain form")
        if codomain_form is not None and matrix.shape[0] != codomain_form.dim:
            raise ValueError("matrix rows do not match codomain form")
        self.matrix = matrix
        self.domain_form = domain_form
        self.codomain_form = codomain_form

    @property
    def rows(self):
        return self.matrix.shape[0]

    @property
    def cols(self):
        return self.matrix.shape[1]

    def __repr__(self):
        return "LinearMap(%d x %d)" % self.matrix.shape


@dataclass
class PurgeResult:
    quotient_map: LinearMap
    purged_form: HermitianForm


def kernel(b: HermitianForm) -> Subspace:
    """Orthonormal basis of Ker b = {x : b(x, conj(y)) = 0 for all y}."""
    return Subspace(b.dim, _nullspace(b.gram, b.rank_tol), rank_tol=b.rank_tol)


def purge(b: HermitianForm) -> PurgeResult:
    """Quotient by the kernel, with the induced nondegenerate form.

    The quotient basis is the singular-vector complement of the kernel,
    so the quotient map is q = C^H for an orthonormal injection C and the
    purged Gram matrix is C^H G C.
    """
    c = _rangespace(b.gram, b.rank_tol)
    q = c.conj().T
    purged = HermitianForm(q @ b.gram @ c, rank_tol=b.rank_tol)
    if purged.rank != purged.dim:
        raise HermitiaError("purged form is degenerate; rank_tol too loose?")
    qmap = LinearMap(q, domain_form=b, codomain_form=purged)
    return PurgeResult(quotient_map=qmap, purged_form=purged)


def _adjoint_tol(f_matrix, bV, bW):
    scale = 1.0 + np.linalg.norm(f_matrix)
    return max(bV.rank_tol, bW.rank_tol) * scale


def admits_adjoint(f: LinearMap, bV: HermitianForm, bW: HermitianForm) -> bool:
    """True iff f maps Ker bV into Ker bW (so an adjoint exists)."""
    kv = kernel(bV).basis
    if kv.shape[1] == 0:
        return True
    kw = kernel(bW).basis
    image = f.matrix @ kv
    resid = image - kw @ (kw.conj().T @ image)
    return bool(np.linalg.norm(resid) <= _adjoint_tol(f.matrix, bV, bW))


def adjoint(f: LinearMap, bV: HermitianForm, bW: HermitianForm) -> LinearMap:
    """Canonical adjoint f_dag with b_V(f_dag x, conj(y)) = b_W(x, conj(f y)).

    The defining identity reads G_V @ f_dag = f^H @ G_W; the returned
    solution is the minimum-norm one (columns orthogonal to Ker b_V).
    Any other valid adjoint differs by a map into Ker b_V.
    """
    if not admits_adjoint(f, bV, bW):
        raise NoAdjoint("f does not map Ker b_V into Ker b_W")
    gv_pinv = np.linalg.pinv(bV.gram, rcond=bV.rank_tol, hermitian=True)
    fdag = gv_pinv @ f.matrix.conj().T @ bW.gram
    return LinearMap(fdag, domain_form=bW, codomain_form=bV)


def adjoint_freedom_dims(f: LinearMap, bV: HermitianForm, bW: HermitianForm):
    """Dimension bookkeeping for the adjoint solution set.

    Returns (torsor_dim, adjointable_codim): the solution set of adjoints,
    when nonempty, is a torsor under Hom(W, Ker b_V) of complex dimension
    dim W * dim Ker b_V (None when f admits no adjoint); the adjointability
    constraint "f maps Ker b_V into Ker b_W" cuts Hom(V, W) down by
    codimension dim Ker b_V * (dim W - dim Ker b_W).

    The codimension is verified against an explicit rank computation of the
    constraint system before being returned.
    """
    jv = bV.kernel_dim
    jw = bW.kernel_dim
    dim_w = bW.dim
    torsor_dim = dim_w * jv if admits_adjoint(f, bV, bW) else None
    codim = jv * (dim_w - jw)

    # Constraint on F in Hom(V, W): P F K_V = 0, with P the projector onto
    # the orthogonal complement of Ker b_W.  Row-major vec gives the system
    # kron(P, K_V^T) vec(F) = 0, whose rank is the codimension.
    kv = kernel(bV).basis
    kw = kernel(bW).basis
    p = np.eye(dim_w, dtype=complex) - kw @ kw.conj().T
    system = np.kron(p, kv.T)
    if system.size:
        s = np.linalg.svd(system, compute_uv=False)
        rank = int(np.sum(s > max(bV.rank_tol, bW.rank_tol) * s[0])) if s[0] > 0 else 0
    else:
        rank = 0
    if rank != codim:
        raise HermitiaError(
            "adjointability codimension mismatch: formula %d, rank %d" % (codim, rank)
        )
    return torsor_dim, codim


def orthogonal_complement(s: Subspace, b: HermitianForm) -> Subspace:
    """S_perp = {v : b(v, conj(w)) = 0 for all w in S}.

    Computed as the null space of S.basis^H @ gram.  Contains Ker b, and
    together with S spans the ambient space.
    """
    if s.ambient_dim != b.dim:
        raise ValueError("subspace and form live in different spaces")
    basis = _nullspace(s.basis.conj().T @ b.gram, b.rank_tol)
    return Subspace(b.dim, basis, rank_tol=b.rank_tol)


def _mixing_unitary(d, tag):
    """A fixed, reproducible unitary used to build an independent lift."""
    rng = np.random.default_rng(np.random.SeedSequence([d, tag]))
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, _ = np.linalg.qr(m)
    return q


def quotient_form(qmap: LinearMap, bV: HermitianForm) -> HermitianForm:
    """Form induced on the target of a surjection q, b_Q(qx, conj(qy)) = b_V(x, conj(y)).

    Representatives are taken in the b-orthogonal complement of Ker q;
    two representatives of the same class then differ by an element of
    Ker q intersected with Ker b_V, so the value is well defined.  The
    construction is re-run with a second, independently mixed lift and the
    two Gram matrices must agree to 1e-10.
    """
    q = qmap.matrix
    dim_q, dim_v = q.shape
    if dim_v != bV.dim:
        raise ValueError("quotient map does not match the form's space")
    s = np.linalg.svd(q, compute_uv=False)
    if s.size == 0 or s[0] == 0 or int(np.sum(s > bV.rank_tol * s[0])) < dim_q:
        raise NotSurjective("quotient map does not have full row rank")

    ker_q = Subspace(dim_v, _nullspace(q, bV.rank_tol), rank_tol=bV.rank_tol)
    perp = orthogonal_complement(ker_q, bV).basis

    def compressed(lift_basis):
        qx = q @ lift_basis
        lift = lift_basis @ np.linalg.pinv(qx, rcond=bV.rank_tol)
        return hermitize(lift.conj().T @ bV.gram @ lift)

    gram_a = compressed(perp)
    gram_b = compressed(perp @ _mixing_unitary(perp.shape[1], 23))
    if np.linalg.norm(gram_a - gram_b) > 1e-10 * (1.0 + np.linalg.norm(gram_a)):
        raise HermitiaError("quotient form depends on the complement lift")
    return HermitianForm(gram_a, rank_tol=bV.rank_tol)


def _purged_map(f: LinearMap, pv: PurgeResult, pw: PurgeResult):
    """Map induced on purged spaces by an adjointable f."""
    cv = pv.quotient_map.matrix.conj().T
    return pw.quotient_map.matrix @ f.matrix @ cv


def hom_form(f: LinearMap, g: LinearMap, bV: HermitianForm, bW: HermitianForm) -> complex:
    """Induced pairing trace(adjoint(g_hat) @ f_hat) on purged spaces.

    Both maps must be adjointable; the pairing is Hermitian in (f, g).
    """
    if not admits_adjoint(f, bV, bW) or not admits_adjoint(g, bV, bW):
        raise NoAdjoint("hom_form needs both maps adjointable")
    pv = purge(bV)
    pw = purge(bW)
    fhat = _purged_map(f, pv, pw)
    ghat = _purged_map(g, pv, pw)
    ghat_dag = adjoint(
        LinearMap(ghat), pv.purged_form, pw.purged_form
    ).matrix
    return complex(np.trace(ghat_dag @ fhat))


def sum_quotient_form(b1: HermitianForm, b2: HermitianForm) -> HermitianForm:
    """The induced form of the two-summand construction.

    With h = b1 + b2 (required positive-definite),

        q(s, conj(t)) = b1(h^-1 b2 s, conj(h^-1 b2 t)) + b2(h^-1 b1 s, conj(h^-1 b1 t)).

    q is positive-semidefinite and kills both kernels.
    """
    if b1.dim != b2.dim:
        raise ValueError("forms must share a space")
    h = b1.gram + b2.gram
    w = np.linalg.eigvalsh(h)
    tol = max(b1.rank_tol, b2.rank_tol)
    if w[0] <= tol * max(abs(w[-1]), 1e-300):
        raise NotPositive("b1 + b2 is not positive-definite")
    m1 = np.linalg.solve(h, b1.gram)
    m2 = np.linalg.solve(h, b2.gram)
    gram = m2.conj().T @ b1.gram @ m2 + m1.conj().T @ b2.gram @ m1
    return HermitianForm(gram, rank_tol=tol)


def projection_limit_gram(b1: HermitianForm, b2: HermitianForm) -> np.ndarray:
    """Gram of b1 pulled back through the h0-orthogonal projection onto
    a complement of Ker b2, where h0 = b1 + b2.

    This is the closed-form target the scaled quotient family converges
    to; limit_form cross-checks against it, and callers can recompute it
    for an independent residual.
    """
    tol = max(b1.rank_tol, b2.rank_tol)
    h0 = b1.gram + b2.gram
    k2 = kernel(b2).basis
    j = _nullspace(k2.conj().T @ h0, tol)
    if j.shape[1] == 0:
        return np.zeros_like(h0)
    jdag = np.linalg.solve(j.conj().T @ h0 @ j, j.conj().T @ h0)
    p = j @ jdag
    return hermitize(p.conj().T @ b1.gram @ p)


def limit_form(b1: HermitianForm, b2: HermitianForm, lambda_grid):
    """Family q_lambda = sum_quotient_form(b1, e^lambda b2) and its limit.

    Simultaneous diagonalization against h0 = b1 + b2 gives eigenpairs
    (x_j, y_j = 1 - x_j); the family has coefficients
    e^lambda x y / (x + e^lambda y), whose limit is x_j when y_j != 0 and
    0 otherwise.  The limit is cross-checked against the projection form
    (j j_dag)^* b1, where j includes the h0-orthogonal complement of
    Ker b2 and j_dag is its h0-adjoint, to 1e-8.

    Both forms must be positive-semidefinite with h0 positive-definite
    (then b1 + e^lambda b2 stays positive-definite for all lambda >= 0).
    """
    if b1.dim != b2.dim:
        raise ValueError("forms must share a space")
    tol = max(b1.rank_tol, b2.rank_tol)
    for name, b in (("b1", b1), ("b2", b2)):
        if not b.is_positive_semidefinite():
            raise NotPositive("%s is not positive-semidefinite" % name)
    h0 = b1.gram + b2.gram
    w = np.linalg.eigvalsh(h0)
    if w[0] <= tol * max(abs(w[-1]), 1e-300):
        raise NotPositive("b1 + b2 is not positive-definite")

    q_values = [
        sum_quotient_form(b1, b2.scaled(float(np.exp(lam)))) for lam in lambda_grid
    ]

    x, v = scipy.linalg.eigh(b1.gram, h0)
    y = 1.0 - x
    coeff = np.where(np.abs(y) > 1e-8, x, 0.0)
    hv = h0 @ v
    gram_inf = hermitize(hv @ np.diag(coeff) @ hv.conj().T)
    q_inf = HermitianForm(gram_inf, rank_tol=tol)

    gram_check = projection_limit_gram(b1, b2)
    if np.linalg.norm(gram_check - gram_inf) > 1e-8 * (1.0 + np.linalg.norm(gram_inf)):
        raise HermitiaError("limit form disagrees with its projection formula")

    return q_values, q_inf


def equiv_mod_kernel(s, t, b: HermitianForm) -> bool:
    """True iff s - t lies in Ker b up to a relative tolerance of 1e-9."""
    d = np.asarray(s, dtype=complex) - np.asarray(t, dtype=complex)
    k = kernel(b).basis
    resid = d - k @ (k.conj().T @ d)
    return bool(np.linalg.norm(resid) <= 1e-9 * (1.0 + np.linalg.norm(d)))
