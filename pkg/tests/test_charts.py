import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hermitia import HermitiaError, NotHolomorphic, OutOfDomain, RankJump, SolverResidual, ZeroVector
from hermitia.charts import (
    ChartField,
    HolomorphicMap,
    chern_connection,
    curvature_20_defect,
    curvature_from_connection,
    curvature_tensor,
    gauge_independence_residual,
    hsc,
    hsc_of_tensor,
    pullback_consistency,
    smooth_kernel_perturbation,
    torsion_defect,
    wirtinger,
)
from hermitia.errors import NotPositiveAtPoint
from hermitia.fields import (
    MatrixPolynomial,
    MonomialMap,
    constant_field,
    embedded_factor_field,
    from_factor,
    from_potential_map,
    fs_monomials,
    pullback_field,
    sum_field,
    twisted_fiber_monomials,
)


def fs_line(radius=3.0):
    return from_potential_map(fs_monomials(1), radius=radius, name="fs1")


def fs_plane(radius=3.0):
    return from_potential_map(fs_monomials(2), radius=radius, name="fs2")


def tautological_line(radius=2.0):
    """G = 1 + |z|^2, the restriction of the flat metric to the line (1, z)."""
    poly = MatrixPolynomial(np.array([[1.0], [0.0]]), c1=np.array([[[0.0], [1.0]]]))
    return from_factor(poly, 1, radius=radius, name="taut")


def degenerate_factor(m=2, seed=5, radius=1.0):
    """Curved constant-rank-2 field with a 3-dimensional fiber.

    L(z) = D(z) K with D tall (3x2, affine in z) and K a constant 2x3
    matrix, so rank G = 2 < 3 everywhere near 0 and the range of L is a
    moving plane (a wide full-row-rank factor would be flat).
    """
    rng = np.random.default_rng(seed)
    d0 = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    d1 = 0.3 * (rng.standard_normal((m, 3, 2)) + 1j * rng.standard_normal((m, 3, 2)))
    k = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    poly = MatrixPolynomial(d0 @ k, c1=np.stack([d1[a] @ k for a in range(m)]))
    return from_factor(poly, m, radius=radius, name="deg")


def product_of_lines(radius=2.0):
    f = fs_line()
    e0 = embedded_factor_field(f, 2, 0, radius=radius)
    e1 = embedded_factor_field(f, 2, 1, radius=radius)
    return sum_field(e0, e1, name="p1xp1")


# ---------------------------------------------------------------------------
# chart fields and Wirtinger derivatives


def test_gram_is_hermitized_on_read():
    f = ChartField(1, 2, lambda z: np.array([[1.0, z[0]], [0.0, 1.0]]), self_check=False)
    g = f.gram([0.4j])
    assert abs(g[0, 1] - 0.2j) < 1e-14
    assert abs(g[1, 0] + 0.2j) < 1e-14


def test_eval_shape_mismatch_is_an_error():
    f = ChartField(1, 2, lambda z: np.eye(3), self_check=False)
    with pytest.raises(HermitiaError):
        f.gram([0.0])


def test_wirtinger_holomorphic_and_conjugate_directions():
    f = ChartField(1, 1, lambda z: np.array([[1.0 + abs(z[0]) ** 2]]), self_check=False)
    z = [0.3 - 0.2j]
    assert abs(wirtinger(f, z, 0)[0, 0] - (0.3 + 0.2j)) < 1e-9
    assert abs(wirtinger(f, z, 0, conjugate=True)[0, 0] - (0.3 - 0.2j)) < 1e-9


def test_fd_derivatives_require_stencil_room():
    f = ChartField(1, 1, lambda z: np.eye(1), radius=1.0, self_check=False)
    with pytest.raises(OutOfDomain):
        wirtinger(f, [0.9999], 0, step=1e-2)


def test_self_check_rejects_wrong_analytic_derivative():
    with pytest.raises(HermitiaError, match="finite differences"):
        ChartField(
            1,
            1,
            lambda z: np.array([[1.0 + abs(z[0]) ** 2]]),
            d_fn=lambda z: 2.0 * np.array([[[np.conj(z[0])]]]),
        )


def test_rank_at_counts_significant_singular_values():
    f = ChartField(1, 2, lambda z: np.diag([1.0, abs(z[0]) ** 2]), self_check=False)
    assert f.rank_at([0.0]) == 1
    assert f.rank_at([0.5]) == 2


# ---------------------------------------------------------------------------
# monomial maps and potential fields


def test_monomial_map_value_jacobian_hessian_are_exact():
    # w = (z1^2 z2, 3 z2^3 + z1)
    mm = MonomialMap(2, [[(1.0, (2, 1))], [(3.0, (0, 3)), (1.0, (1, 0))]])
    z = np.array([0.4 + 0.1j, -0.3 + 0.2j])
    assert abs(mm.value(z)[0] - z[0] ** 2 * z[1]) < 1e-14
    assert abs(mm.value(z)[1] - (3 * z[1] ** 3 + z[0])) < 1e-14
    jac = mm.jac(z)
    assert abs(jac[0, 0] - 2 * z[0] * z[1]) < 1e-14
    assert abs(jac[1, 1] - 9 * z[1] ** 2) < 1e-14
    hess = mm.hess(z)
    assert abs(hess[0, 0, 0] - 2 * z[1]) < 1e-14
    assert abs(hess[0, 0, 1] - 2 * z[0]) < 1e-14
    assert abs(hess[0, 1, 0] - 2 * z[0]) < 1e-14
    assert abs(hess[1, 1, 1] - 18 * z[1]) < 1e-14


def test_matrix_polynomial_derivative():
    rng = np.random.default_rng(0)
    c0 = rng.standard_normal((2, 2)) + 0j
    c1 = rng.standard_normal((2, 2, 2)) + 0j
    c2 = rng.standard_normal((2, 2, 2, 2)) + 0j
    poly = MatrixPolynomial(c0, c1=c1, c2=c2)
    z = np.array([0.3 + 0.1j, -0.2j])
    h = 1e-6
    for a in range(2):
        e = np.zeros(2, dtype=complex)
        e[a] = 1.0
        fd = (poly.value(z + h * e) - poly.value(z - h * e)) / (2 * h)
        assert np.linalg.norm(poly.d(z)[a] - fd) < 1e-7


def test_fs_line_gram_matches_closed_form():
    f = fs_line()
    for z in [0.0, 0.3 - 0.2j, 0.8j]:
        expect = 1.0 / (1.0 + abs(z) ** 2) ** 2
        assert abs(f.gram([z])[0, 0] - expect) < 1e-13


def test_potential_fields_carry_analytic_derivatives():
    f = fs_plane()
    assert f.analytic
    assert f.dd_fn is not None
    # construction already cross-checked them against finite differences


def test_twisted_potential_norm_identity():
    mm = twisted_fiber_monomials(3)
    z = np.array([0.4 + 0.1j, -0.3 + 0.25j])
    lhs = float(np.sum(np.abs(mm.value(z)) ** 2))
    rhs = 1.0 + (1.0 + abs(z[0]) ** 2) ** 3 * abs(z[1]) ** 2
    assert abs(lhs - rhs) < 1e-12


def test_tautological_line_gram():
    f = tautological_line()
    assert abs(f.gram([0.5])[0, 0] - 1.25) < 1e-14
    assert f.analytic


# ---------------------------------------------------------------------------
# connections


def test_connection_of_constant_field_vanishes():
    f = constant_field(np.diag([2.0, 3.0]), 2)
    conn = chern_connection(f, [0.1, -0.2j])
    assert np.linalg.norm(conn.a) < 1e-12
    assert conn.kernel_basis.dim == 0


def test_connection_fs_line_value():
    # G^-1 dG = -2 conj(z) / (1 + |z|^2); at z = 1 this is -1
    conn = chern_connection(fs_line(), [1.0])
    assert abs(conn.a[0, 0, 0] + 1.0) < 1e-12
    assert conn.residual < 1e-12


def test_connection_degenerate_min_norm():
    def ev(z):
        return np.diag([np.exp(abs(z[0]) ** 2), 0.0])

    f = ChartField(1, 2, ev, radius=1.0, self_check=False)
    z = [0.3 + 0.2j]
    conn = chern_connection(f, z)
    assert abs(conn.a[0][0, 0] - (0.3 - 0.2j)) < 1e-6
    assert abs(conn.a[0][1, 1]) < 1e-10  # min-norm puts nothing in the kernel slot
    assert conn.kernel_basis.dim == 1


def test_connection_rejects_non_admissible_field():
    # G = v v^H with holomorphic v: dG = (dv) v^H leaves the range of G,
    # so G A = dG has no solution (the factor sits on the wrong side)
    def ev(z):
        v = np.array([1.0, z[0]])
        return np.outer(v, v.conj())

    f = ChartField(1, 2, ev, radius=1.0, self_check=False)
    with pytest.raises(SolverResidual):
        chern_connection(f, [0.5])


def test_constant_rank_gate():
    f = ChartField(1, 2, lambda z: np.diag([1.0, abs(z[0]) ** 2]), self_check=False)
    with pytest.raises(RankJump):
        chern_connection(f, [0.0])
    # away from the degeneracy line the same field is fine
    conn = chern_connection(f, [0.5])
    assert conn.residual < 1e-6


def test_curvature_needs_stencil_room_near_boundary():
    f = fs_line(radius=1.0)
    with pytest.raises(OutOfDomain):
        curvature_tensor(f.finite_difference_copy(), [0.9995])


# ---------------------------------------------------------------------------
# curvature


def test_curvature_of_constant_field_vanishes():
    f = constant_field(np.diag([1.0, 2.0]), 2)
    r = curvature_tensor(f, [0.2, 0.1j])
    assert np.linalg.norm(r.tensor) < 1e-12


def test_curvature_fs_line_at_origin():
    r = curvature_tensor(fs_line(), [0.0])
    assert abs(r.tensor[0, 0, 0, 0] - 2.0) < 1e-12


def test_curvature_tautological_line_at_origin():
    r = curvature_tensor(tautological_line(), [0.0])
    assert abs(r.tensor[0, 0, 0, 0] + 1.0) < 1e-12


def test_wide_full_row_rank_factors_are_flat():
    # with L of full row rank, L G^+ L^H is the identity and the curvature
    # M_ab = (d_b L)^H (L G^+ L^H - I)(d_a L) collapses to zero
    rng = np.random.default_rng(2)
    c0 = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    c1 = 0.3 * (rng.standard_normal((2, 2, 3)) + 1j * rng.standard_normal((2, 2, 3)))
    f = from_factor(MatrixPolynomial(c0, c1=c1), 2, radius=1.0)
    r = curvature_tensor(f, [0.1, -0.2j])
    assert np.linalg.norm(r.tensor) < 1e-12


def test_degenerate_factor_is_curved():
    r = curvature_tensor(degenerate_factor(), [0.1 + 0.05j, -0.2j])
    assert np.linalg.norm(r.tensor) > 1e-2


def test_pair_symmetry_analytic():
    r = curvature_tensor(fs_plane(), [0.25, -0.3j])
    assert r.pair_symmetry_residual() < 1e-14


def test_curvature_matches_connection_route():
    z = [0.2, -0.15 + 0.1j]
    f = fs_plane()
    direct = curvature_tensor(f, z).tensor

    def a_fn(w):
        return chern_connection(f, w).a

    via_conn = curvature_from_connection(f, z, a_fn)
    assert np.linalg.norm(direct - via_conn) / np.linalg.norm(direct) < 1e-6


def test_curvature_matches_connection_route_degenerate():
    f = degenerate_factor()
    z = [0.1 + 0.05j, -0.2j]
    direct = curvature_tensor(f, z).tensor

    def a_fn(w):
        return chern_connection(f, w).a

    via_conn = curvature_from_connection(f, z, a_fn)
    assert np.linalg.norm(direct - via_conn) / np.linalg.norm(direct) < 1e-6


def test_fd_curvature_converges_at_second_order():
    exact = curvature_tensor(fs_line(), [0.4]).tensor

    def err(h):
        f = ChartField(
            1, 1, fs_line().eval_fn, radius=3.0, fd_step=h, fd_outer_step=h, self_check=False
        )
        return np.linalg.norm(curvature_tensor(f, [0.4]).tensor - exact)

    ratio = err(1e-2) / err(5e-3)
    assert 3.0 < ratio < 5.0


# ---------------------------------------------------------------------------
# holomorphic sectional curvature


def test_hsc_fs_line_is_constant_two():
    f = fs_line()
    for z in [0.0, 0.5, 0.3 - 0.6j]:
        assert abs(hsc(f, [z], [1.0]) - 2.0) < 1e-12


def test_hsc_fs_plane_is_constant_two():
    f = fs_plane()
    rng = np.random.default_rng(11)
    for _ in range(8):
        z = 0.6 * (rng.standard_normal(2) + 1j * rng.standard_normal(2)) / np.sqrt(2)
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert abs(hsc(f, z, v) - 2.0) < 1e-10


def test_hsc_flat_field_is_zero():
    f = constant_field(np.eye(2), 2)
    assert abs(hsc(f, [0.1, 0.2], [1.0, 1.0j])) < 1e-12


def test_hsc_product_of_lines():
    prod = product_of_lines()
    z = [0.0, 0.0]
    assert abs(hsc(prod, z, [1.0, 0.0]) - 2.0) < 1e-10
    assert abs(hsc(prod, z, [0.0, 1.0]) - 2.0) < 1e-10
    # diagonal direction averages the two factors
    assert abs(hsc(prod, z, [1.0, 1.0]) - 1.0) < 1e-10


def test_hsc_scales_inversely_with_the_metric():
    f = fs_line()
    tripled = sum_field(f, f, c1=2.0, c2=1.0)
    assert abs(hsc(tripled, [0.2], [1.0]) - 2.0 / 3.0) < 1e-10


def test_hsc_rejects_zero_vector_and_nonmetric_input():
    with pytest.raises(ZeroVector):
        hsc(fs_line(), [0.0], [0.0])
    with pytest.raises(NotPositiveAtPoint):
        hsc(constant_field(np.diag([1.0, -1.0]), 2), [0.0, 0.0], [1.0, 0.0])
    with pytest.raises(HermitiaError):
        hsc(degenerate_factor(), [0.0, 0.0], [1.0, 0.0])


def test_hsc_of_tensor_matches_direct_contraction():
    f = fs_plane()
    z = [0.2, 0.3j]
    r = curvature_tensor(f, z)
    v = np.array([1.0, 0.5 - 0.25j])
    assert abs(hsc_of_tensor(r.tensor, f.gram(z), v) - hsc(f, z, v)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(
    re=st.floats(-0.6, 0.6),
    im=st.floats(-0.6, 0.6),
)
def test_hsc_fs_line_constant_everywhere(re, im):
    assert abs(hsc(fs_line(), [re + 1j * im], [1.0]) - 2.0) < 1e-10


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(0.1, 10.0))
def test_hsc_inverse_scaling_law(scale):
    f = fs_line()
    scaled = sum_field(f, f, c1=scale, c2=0.0)
    assert abs(hsc(scaled, [0.3], [1.0]) - 2.0 / scale) < 1e-8


# ---------------------------------------------------------------------------
# torsion and the vanishing (2,0) part


def test_torsion_vanishes_for_potential_fields():
    assert torsion_defect(fs_plane(), [0.1, 0.2]) < 1e-12


def test_torsion_detects_asymmetric_first_derivatives():
    def ev(z):
        return np.array([[1.0, z[0] / 4.0], [np.conj(z[0]) / 4.0, 1.0]])

    def dv(z):
        d = np.zeros((2, 2, 2), dtype=complex)
        d[0, 0, 1] = 0.25
        return d

    def ddv(z):
        return np.zeros((2, 2, 2, 2), dtype=complex)

    f = ChartField(2, 2, ev, d_fn=dv, dd_fn=ddv)
    assert abs(torsion_defect(f, [0.1, -0.2j]) - 0.25) < 1e-12


def test_torsion_zero_for_transposed_variant():
    def ev(z):
        return np.array([[1.0, np.conj(z[0]) / 4.0], [z[0] / 4.0, 1.0]])

    def dv(z):
        d = np.zeros((2, 2, 2), dtype=complex)
        d[0, 1, 0] = 0.25
        return d

    def ddv(z):
        return np.zeros((2, 2, 2, 2), dtype=complex)

    f = ChartField(2, 2, ev, d_fn=dv, dd_fn=ddv)
    assert torsion_defect(f, [0.1, -0.2j]) < 1e-12


def test_curvature_20_part_vanishes():
    assert curvature_20_defect(fs_plane(), [0.2, 0.1j]) < 1e-6
    assert curvature_20_defect(degenerate_factor(), [0.1, -0.05 + 0.1j]) < 1e-6


# ---------------------------------------------------------------------------
# gauge independence on degenerate fields


def test_kernel_perturbation_is_kernel_valued_nearby():
    f = degenerate_factor()
    z = np.array([0.1 + 0.05j, -0.2j])
    k = smooth_kernel_perturbation(f, z, seed=3)
    assert np.linalg.norm(k(z)) > 1e-3  # genuinely nonzero
    for dz in [0.0, 0.02, -0.03j]:
        w = z + dz
        assert np.linalg.norm(f.gram(w) @ k(w)) < 1e-10


def test_kernel_perturbation_trivial_for_nondegenerate_field():
    f = fs_plane()
    k = smooth_kernel_perturbation(f, [0.1, 0.2], seed=1)
    assert np.linalg.norm(k([0.14, 0.2 - 0.01j])) == 0.0


def test_gauge_independence_degenerate():
    f = degenerate_factor()
    res = gauge_independence_residual(f, [0.1 + 0.05j, -0.2j], seed=3)
    assert res < 1e-6


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gauge_independence_more_seeds(seed):
    f = degenerate_factor(seed=7)
    res = gauge_independence_residual(f, [0.05 - 0.1j, 0.12j], seed=seed)
    assert res < 1e-6


# ---------------------------------------------------------------------------
# pullbacks along holomorphic maps


def test_pullback_field_chain_rule():
    amb = fs_plane()
    mp = HolomorphicMap(
        lambda t: np.array([t[0] ** 2, 0.3 * t[0]]),
        1,
        2,
        jacobian=lambda t: np.array([[2.0 * t[0]], [0.3]]),
    )
    pb = pullback_field(amb, mp, center=[0.2], radius=0.3)
    assert pb.analytic
    z = np.array([0.25 + 0.05j])
    fd = pb._fd_dir(pb.gram, z, 0, 1e-5, False)
    assert np.linalg.norm(pb.d(z)[0] - fd) < 1e-8
    fd2 = pb._fd_dir(lambda w: pb.d(w)[0].conj().T, z, 0, 1e-4, False)
    assert np.linalg.norm(pb.dd(z)[0, 0] - fd2) < 1e-6


def test_pullback_consistency_identity_map():
    ident = HolomorphicMap(lambda t: t.copy(), 1, 1, jacobian=lambda t: np.eye(1, dtype=complex))
    assert pullback_consistency(ident, fs_line(), [0.35]) < 1e-6


def test_pullback_consistency_linear_embedding():
    mp = HolomorphicMap(
        lambda t: np.array([t[0], 0.0], dtype=complex),
        1,
        2,
        jacobian=lambda t: np.array([[1.0], [0.0]], dtype=complex),
    )
    assert pullback_consistency(mp, fs_plane(), [0.3 + 0.1j]) < 1e-6


def test_pullback_consistency_moebius():
    a = 0.3 - 0.2j

    def mob(t):
        return np.array([(t[0] + a) / (1.0 - np.conj(a) * t[0])])

    def jac(t):
        return np.array([[(1.0 + abs(a) ** 2) / (1.0 - np.conj(a) * t[0]) ** 2]])

    mp = HolomorphicMap(mob, 1, 1, jacobian=jac)
    assert pullback_consistency(mp, fs_line(), [0.2 + 0.1j]) < 1e-6


def test_pullback_consistency_rejects_antiholomorphic_maps():
    mp = HolomorphicMap(lambda t: t.conj(), 1, 1)
    with pytest.raises(NotHolomorphic):
        pullback_consistency(mp, fs_line(), [0.2])


def test_holomorphy_defect_values():
    good = HolomorphicMap(lambda t: np.array([t[0] ** 3]), 1, 1)
    bad = HolomorphicMap(lambda t: np.array([t[0] + 0.5 * t[0].conj()]), 1, 1)
    assert good.holomorphy_defect([0.4]) < 1e-9
    assert abs(bad.holomorphy_defect([0.4]) - 0.5) < 1e-9


# ---------------------------------------------------------------------------
# product assembly helpers


def test_embedded_factor_blocks():
    f = fs_line()
    emb = embedded_factor_field(f, 3, 1, radius=2.0)
    z = np.array([0.5, 0.2 - 0.1j, -0.3])
    g = emb.gram(z)
    assert abs(g[1, 1] - f.gram([z[1]])[0, 0]) < 1e-14
    assert np.linalg.norm(g[0]) < 1e-14 and np.linalg.norm(g[2]) < 1e-14
    d = emb.d(z)
    assert np.linalg.norm(d[0]) == 0.0 and np.linalg.norm(d[2]) == 0.0
    assert abs(d[1][1, 1] - f.d([z[1]])[0, 0, 0]) < 1e-14


def test_sum_field_is_analytic_when_both_are():
    prod = product_of_lines()
    assert prod.analytic
    g = prod.gram([0.2, 0.3j])
    f = fs_line()
    assert abs(g[0, 0] - f.gram([0.2])[0, 0]) < 1e-14
    assert abs(g[1, 1] - f.gram([0.3j])[0, 0]) < 1e-14
    assert abs(g[0, 1]) < 1e-14


def test_sum_field_requires_matching_charts():
    with pytest.raises(ValueError):
        sum_field(fs_line(), fs_plane())
