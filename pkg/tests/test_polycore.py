"""Root finding, exact polynomials, interpolation, and resultants."""

import math

import numpy as np
import pytest
from gmpy2 import mpq, mpz
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from qes_sextic import polycore, spectrum
from qes_sextic.errors import ConvergenceError, IntegrityError
from qes_sextic.polycore import (
    ExactBivariatePoly,
    ExactUnivariatePoly,
    RootSet,
    aberth_roots,
    interpolate_exact,
    resultant,
    resultant_direct,
)


def match_multisets(a, b):
    """Greatest distance in an optimal pairing of two complex multisets."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    assert len(a) == len(b)
    cost = np.abs(a[:, None] - b[None, :])
    ri, ci = linear_sum_assignment(cost)
    return float(cost[ri, ci].max()) if len(a) else 0.0


# ---------------------------------------------------------------------------
# double-precision root finding
# ---------------------------------------------------------------------------


def test_roots_of_unit_quadratic():
    rs = aberth_roots([1, 0, 1])
    assert match_multisets(rs.roots, [1j, -1j]) < 1e-12


def test_roots_of_shifted_quadratic():
    # quadratic formula: x^2 - 8 has roots +-2*sqrt(2)
    r = math.sqrt(8.0)
    rs = aberth_roots([-8, 0, 1])
    assert match_multisets(rs.roots, [r, -r]) < 1e-12


def test_roots_of_odd_cubic():
    # x^3 - 64x = x (x-8) (x+8)
    rs = aberth_roots([0, -64, 0, 1])
    assert match_multisets(rs.roots, [0.0, 8.0, -8.0]) < 1e-11


def test_rootset_residuals_meet_tolerance():
    rs = aberth_roots([3, -2, 0, 5, 1], tol=1e-12)
    assert isinstance(rs, RootSet)
    assert len(rs.roots) == 4 and len(rs.residuals) == 4
    assert float(np.max(rs.residuals)) <= 1e-12


def test_root_finding_is_deterministic():
    c = [2.0, -1.5, 0.25j, 1.0, -3.0, 1.0]
    a = aberth_roots(c)
    b = aberth_roots(c)
    assert np.array_equal(a.roots, b.roots)
    assert np.array_equal(a.residuals, b.residuals)


def test_trailing_zero_leading_coefficients_are_trimmed():
    full = aberth_roots([-8, 0, 1])
    padded = aberth_roots([-8, 0, 1, 0, 0])
    assert len(padded.roots) == 2
    assert match_multisets(full.roots, padded.roots) == 0.0


def test_nonconvergence_carries_best_iterates():
    with pytest.raises(ConvergenceError) as info:
        aberth_roots([24, -50, 35, -10, 1], max_iter=1)
    err = info.value
    assert err.best is not None and len(err.best) == 4
    assert err.residuals is not None and len(err.residuals) == 4
    assert float(np.max(err.residuals)) > 1e-12


@given(
    st.lists(st.integers(-9, 9), min_size=3, max_size=8).filter(
        lambda c: c[-1] != 0
    )
)
def test_real_coefficients_give_conjugate_closed_roots(coeffs):
    try:
        rs = aberth_roots(coeffs, tol=1e-10)
    except ConvergenceError:
        assume(False)
    scale = max(1.0, float(np.max(np.abs(rs.roots))))
    assert match_multisets(rs.roots, np.conj(rs.roots)) < 1e-6 * scale


@given(
    st.lists(st.integers(-6, 6), min_size=2, max_size=6, unique=True)
)
def test_monic_reconstruction_from_roots(int_roots):
    coeffs = [1]
    for r in int_roots:
        coeffs = [0] + coeffs
        for i in range(len(coeffs) - 1):
            coeffs[i] -= r * coeffs[i + 1]
    rs = aberth_roots(coeffs, tol=1e-12)
    rec = np.array([1.0 + 0j])
    for r in rs.roots:
        rec = np.convolve(rec, [-r, 1.0])
    want = np.asarray(coeffs, dtype=np.complex128)
    assert np.max(np.abs(rec - want)) <= 100 * 1e-12 * np.max(np.abs(want))


def test_newton_polygon_spreads_moduli():
    # roots at 1, 10, ..., 1e5: a single bounding circle starts every point
    # at the top scale, the polygon spreads starts across the decades
    init = polycore.polygon_initial_points(
        np.log(np.abs(np.poly(10.0 ** np.arange(6))[::-1]))
    )
    mags = np.sort(np.abs(init))
    assert mags[0] < 10 and mags[-1] > 1e4


# ---------------------------------------------------------------------------
# exact polynomial values
# ---------------------------------------------------------------------------


def test_univariate_normalization_and_degree():
    p = ExactUnivariatePoly((1, 2, 0, 0), "b")
    assert p.coeffs == (mpz(1), mpz(2))
    assert p.degree == 1 and not p.is_zero
    z = ExactUnivariatePoly((0, 0), "b")
    assert z.is_zero and z.degree == -1 and z.coeffs == ()


def test_univariate_evaluation_and_derivative():
    p = ExactUnivariatePoly((32, 0, 16), "b")
    assert p(0) == 32 and p(2) == 96 and p(-3) == 176
    assert p(mpq(1, 2)) == 36
    assert p.deriv().coeffs == (mpz(0), mpz(32))


def test_univariate_rejects_floats_and_unknown_tags():
    with pytest.raises(TypeError):
        ExactUnivariatePoly((1.5, 2), "b")
    with pytest.raises(ValueError):
        ExactUnivariatePoly((1,), "mu")


def test_univariate_equality_ignores_representation():
    assert ExactUnivariatePoly((1, 2), "b") == ExactUnivariatePoly(
        (mpz(1), mpq(4, 2), 0), "b"
    )


def test_bivariate_normalization():
    p = ExactBivariatePoly(((1, 2, 0), (0, 0, 0)))
    assert p.rows == ((mpz(1), mpz(2)),)
    assert p.deg_lambda == 0 and p.deg_b == 1
    assert ExactBivariatePoly(((0, 0), (0, 0))).is_zero
    ragged = ExactBivariatePoly(((1,), (0, 3)))
    assert ragged.rows == ((mpz(1), mpz(0)), (mpz(0), mpz(3)))


def test_bivariate_specializations_agree():
    p = ExactBivariatePoly(((-8, 0, 5), (0, -6, 0), (1, 0, 0)))
    for lam, b in ((2, 3), (-1, 7), (0, 0), (5, -4)):
        direct = p(lam, b)
        via_b = p.eval_b(b)(lam)
        via_lam = p.eval_lambda(lam)(b)
        assert direct == via_b == via_lam
    assert p.eval_b(2).var == "lambda" and p.eval_lambda(2).var == "b"


def test_bivariate_lambda_derivative():
    p = ExactBivariatePoly(((-8, 0, 5), (0, -6, 0), (1, 0, 0)))
    dp = p.deriv_lambda()
    for b in (-3, 0, 4):
        assert dp.eval_b(b) == p.eval_b(b).deriv()


# ---------------------------------------------------------------------------
# exact interpolation
# ---------------------------------------------------------------------------


def test_interpolation_constant():
    p = interpolate_exact((0, 1), (1, 1), 1)
    assert p.coeffs == (mpz(1),)


def test_interpolation_even_quadratic():
    p = interpolate_exact((0, 1, 2), (32, 48, 96), 2)
    assert p.coeffs == (mpz(32), mpz(0), mpz(16))


def test_interpolation_odd_identity():
    p = interpolate_exact((-1, 0, 1), (-1, 0, 1), 2)
    assert p.coeffs == (mpz(0), mpz(1))


def test_interpolation_on_scattered_nodes():
    p = interpolate_exact((-3, 0, 2), (176, 32, 96), 2)
    assert p.coeffs == (mpz(32), mpz(0), mpz(16))


def test_interpolation_validates_inputs():
    with pytest.raises(ValueError):
        interpolate_exact((0, 1, 2), (1, 1, 1), 1)
    with pytest.raises(ValueError):
        interpolate_exact((0, 0), (1, 1), 1)
    with pytest.raises(ValueError):
        interpolate_exact((0, 1), (1,), 1)


def test_interpolation_rejects_non_integer_result():
    with pytest.raises(IntegrityError):
        interpolate_exact((0, 2), (0, 1), 1)
    with pytest.raises(IntegrityError):
        interpolate_exact((0, 2, 5), (0, 1, 7), 2)


@given(
    st.lists(st.integers(-50, 50), min_size=1, max_size=7),
    st.lists(st.integers(-40, 40), min_size=8, max_size=8, unique=True),
)
def test_interpolation_roundtrip(coeffs, nodes):
    p = ExactUnivariatePoly(tuple(coeffs), "b")
    bound = len(nodes) - 1
    assume(p.degree <= bound)
    vals = [p(t) for t in nodes]
    assert interpolate_exact(nodes, vals, bound) == p


# ---------------------------------------------------------------------------
# resultants, both routes
# ---------------------------------------------------------------------------


def test_resultant_of_polynomials_with_shared_root_vanishes():
    p = ExactUnivariatePoly((-1, 0, 1), "lambda")
    q = ExactUnivariatePoly((-1, 1), "lambda")
    assert resultant(p, q).is_zero
    assert resultant_direct(p, q).is_zero


def test_resultant_square_against_linear():
    p = ExactUnivariatePoly((0, 0, 1), "lambda")
    q = ExactBivariatePoly(((0, -1), (1,)))  # lambda - b
    for route in (resultant, resultant_direct):
        r = route(p, q)
        assert r.var == "b" and r.coeffs == (mpz(0), mpz(0), mpz(1))


def test_resultant_pins_discriminant_sign():
    # det of the 3x3 Sylvester block for x^2-6bx+(5b^2-8) against its
    # derivative, expanded by hand, is -16b^2 - 32
    D = spectrum.charpoly_bivariate(1)
    want = (mpz(-32), mpz(0), mpz(-16))
    assert resultant(D, D.deriv_lambda()).coeffs == want
    assert resultant_direct(D, D.deriv_lambda()).coeffs == want


@pytest.mark.parametrize("m", range(7))
def test_resultant_routes_agree_on_characteristic_family(m):
    D = spectrum.charpoly_bivariate(m)
    dD = D.deriv_lambda()
    via_nodes = resultant(D, dD)
    via_determinant = resultant_direct(D, dD)
    assert via_nodes == via_determinant
    assert via_nodes.degree == m * (m + 1)
    rng = np.random.default_rng(101 + m)
    for b0 in rng.integers(-5, 6, size=3):
        A = polycore.charpoly_exact(m, int(b0))
        direct_value = polycore.resultant_int(A, polycore.poly_deriv_int(A))
        assert via_nodes(int(b0)) == direct_value


def test_resultant_matches_dedicated_discriminant_path():
    for m in (2, 3, 4):
        D = spectrum.charpoly_bivariate(m)
        via_general = resultant(D, D.deriv_lambda())
        assert list(via_general.coeffs) == polycore.discriminant_coeffs(m)


def test_resultant_can_eliminate_the_other_variable():
    p = ExactBivariatePoly(((0, 0, 1), (0,), (-1,)))  # b^2 - lambda^2
    q = ExactBivariatePoly(((-1, 1),))  # b - 1
    r = resultant(p, q, eliminated_var="b")
    assert r.var == "lambda"
    # against the monic linear factor this is p at b = 1, i.e. 1 - lambda^2
    assert r == resultant_direct(p, q, eliminated_var="b")
    assert r.coeffs == (mpz(1), mpz(0), mpz(-1))


def test_resultant_skips_nodes_where_leading_coefficient_vanishes():
    # leading lambda-coefficient b(b-1)(b+1)(b-2) kills the first several
    # candidate nodes; both routes must still agree
    g = ExactUnivariatePoly((0, 2, -1, -2, 1), "b")  # b(b-1)(b+1)(b-2)
    p = ExactBivariatePoly(((1,), (1,), tuple(g.coeffs)))
    q = ExactBivariatePoly(((0, -1), (1,)))  # lambda - b
    r = resultant(p, q)
    assert r == resultant_direct(p, q)
    # against a monic linear factor the resultant is p evaluated at lambda=b
    for b0 in (-2, 3, 5, 8):
        want = g(b0) * b0 * b0 + b0 + 1
        assert r(b0) == want


def _bipoly_mul(p, q):
    rp, rq = p.rows, q.rows
    out = [
        [mpz(0)] * (len(rp[0]) + len(rq[0]) - 1)
        for _ in range(len(rp) + len(rq) - 1)
    ]
    for i, row in enumerate(rp):
        for j, c in enumerate(row):
            if c:
                for k, qrow in enumerate(rq):
                    for l, d in enumerate(qrow):
                        out[i + k][j + l] += c * d
    return ExactBivariatePoly(tuple(map(tuple, out)))


def test_resultant_of_polynomials_with_common_factor_vanishes():
    # (lambda - b) divides both inputs
    common = ExactBivariatePoly(((0, -1), (1,)))
    p = ExactBivariatePoly(((0, 0, 1), (0,), (1,)))  # lambda^2 + b^2
    a = _bipoly_mul(common, p)
    q = ExactBivariatePoly(((5,), (2,)))  # 2 lambda + 5
    b = _bipoly_mul(common, q)
    assert resultant(a, b).is_zero
    assert resultant_direct(a, b).is_zero


@st.composite
def small_bivariate(draw):
    nl = draw(st.integers(1, 3))
    nb = draw(st.integers(1, 3))
    rows = tuple(
        tuple(draw(st.integers(-5, 5)) for _ in range(nb)) for _ in range(nl)
    )
    return ExactBivariatePoly(rows)


@given(small_bivariate(), small_bivariate())
def test_resultant_routes_agree_on_random_inputs(p, q):
    assert resultant(p, q) == resultant_direct(p, q)


@given(small_bivariate(), small_bivariate())
def test_resultant_swap_symmetry(p, q):
    assume(not p.is_zero and not q.is_zero)
    r_pq = resultant(p, q)
    r_qp = resultant(q, p)
    if (p.deg_lambda * q.deg_lambda) % 2 == 1:
        r_qp = ExactUnivariatePoly(tuple(-c for c in r_qp.coeffs), r_qp.var)
    assert r_pq == r_qp


@given(
    st.lists(st.integers(-4, 4), min_size=2, max_size=4),
    st.lists(st.integers(-4, 4), min_size=2, max_size=4),
    st.lists(st.integers(-4, 4), min_size=2, max_size=4),
)
def test_resultant_is_multiplicative(pc, qc, rc):
    p = ExactUnivariatePoly(tuple(pc), "lambda")
    q = ExactUnivariatePoly(tuple(qc), "lambda")
    r = ExactUnivariatePoly(tuple(rc), "lambda")
    assume(p.degree >= 1 and q.degree >= 1 and r.degree >= 1)
    prod = [mpz(0)] * (len(p.coeffs) + len(q.coeffs) - 1)
    for i, a in enumerate(p.coeffs):
        for j, c in enumerate(q.coeffs):
            prod[i + j] += a * c
    pq = ExactUnivariatePoly(tuple(prod), "lambda")
    assume(pq.degree == p.degree + q.degree)
    lhs = resultant(pq, r)
    rhs_p = resultant(p, r)
    rhs_q = resultant(q, r)
    assert lhs.degree <= 0 and rhs_p.degree <= 0 and rhs_q.degree <= 0
    lv = lhs.coeffs[0] if lhs.coeffs else mpz(0)
    pv = rhs_p.coeffs[0] if rhs_p.coeffs else mpz(0)
    qv = rhs_q.coeffs[0] if rhs_q.coeffs else mpz(0)
    assert lv == pv * qv


def test_inconsistent_samples_fail_integrity(monkeypatch):
    D = spectrum.charpoly_bivariate(1)
    calls = {"n": 0}
    real = polycore.resultant_int

    def liar(A, B):
        calls["n"] += 1
        return real(A, B) + (1 if calls["n"] == 1 else 0)

    monkeypatch.setattr(polycore, "resultant_int", liar)
    with pytest.raises(IntegrityError):
        resultant(D, D.deriv_lambda())


def test_exact_division_guards_against_corruption():
    # x + 1 does not divide x^2 + 1
    with pytest.raises(IntegrityError):
        polycore._pdivexact([mpz(1), mpz(0), mpz(1)], [mpz(1), mpz(1)])
    quot = polycore._pdivexact([mpz(-1), mpz(0), mpz(1)], [mpz(1), mpz(1)])
    assert quot == [mpz(-1), mpz(1)]


@given(
    st.lists(st.integers(-9, 9), min_size=1, max_size=5),
    st.lists(st.integers(-9, 9), min_size=1, max_size=5),
)
def test_subresultant_matches_fraction_free_determinant(ac, bc):
    A = polycore._strip([mpz(v) for v in ac])
    B = polycore._strip([mpz(v) for v in bc])
    assume(len(A) >= 2 and len(B) >= 2)
    assert polycore.resultant_int(A, B) == polycore.resultant_int_bareiss(A, B)


# ---------------------------------------------------------------------------
# multiprecision root finding
# ---------------------------------------------------------------------------


def test_integer_roots_across_decades():
    coeffs = [mpz(1)]
    for k in range(6):
        r = mpz(10) ** k
        coeffs = [0] + coeffs
        for i in range(len(coeffs) - 1):
            coeffs[i] -= r * coeffs[i + 1]
    roots, info = polycore.mp_roots_int(coeffs, rel_tol=1e-13)
    want = 10.0 ** np.arange(6)
    assert match_multisets(roots, want) < 1e-7  # relative to the 1e5 scale
    assert float(np.max(info["rel_err"])) <= 1e-13


def test_huge_coefficient_polynomial_roots_satisfy_it():
    import gmpy2
    from gmpy2 import mpc

    coeffs = polycore.charpoly_exact(10, 3)
    roots, _ = polycore.mp_roots_int(coeffs, rel_tol=1e-13)
    assert len(roots) == 11
    scale = float(np.max(np.abs(roots)))
    with gmpy2.context(precision=512):
        for z in roots:
            p = mpc(0)
            dp = mpc(0)
            zz = mpc(z)
            for c in reversed(coeffs):
                dp = dp * zz + p
                p = p * zz + c
            # Newton correction bounds the distance to the true root
            assert abs(complex(p / dp)) < 1e-11 * scale
