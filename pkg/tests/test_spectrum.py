"""Matrix family, spectra, exact characteristic polynomials, eigenpolynomials."""

import math

import numpy as np
import numpy.polynomial.polynomial as npp
import pytest
from gmpy2 import mpz
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from qes_sextic import polycore, spectrum
from qes_sextic.errors import QesError
from qes_sextic.spectrum import (
    build_matrix,
    build_scaled_matrix,
    charpoly,
    charpoly_bivariate,
    charpoly_exact,
    eigenpolynomial,
    eigenvalues,
    empirical_cauchy,
    scaled_eigenvalues,
)


def match_multisets(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    assert len(a) == len(b)
    cost = np.abs(a[:, None] - b[None, :])
    ri, ci = linear_sum_assignment(cost)
    return float(cost[ri, ci].max()) if len(a) else 0.0


moderate_b = st.builds(
    complex,
    st.floats(-4, 4, allow_nan=False),
    st.floats(-4, 4, allow_nan=False),
)


# ---------------------------------------------------------------------------
# the matrix family and its characteristic polynomials
# ---------------------------------------------------------------------------


def test_smallest_matrix_entries():
    M = build_matrix(1, 2 + 1j).dense()
    want = np.array([[2 + 1j, -4.0], [-2.0, 5 * (2 + 1j)]])
    assert np.array_equal(M, want)


def test_second_matrix_entries():
    M = build_matrix(2, 3.0)
    assert M.diag == (3.0, 15.0, 27.0)
    assert M.super == (-8.0, -4.0)
    assert M.sub == (-2.0, -12.0)


def test_scaled_matrix_is_rescaled_entrywise():
    m, b = 7, 1.3 - 0.4j
    A = build_matrix(m, b * math.sqrt(m)).dense() / m**1.5
    B = build_scaled_matrix(m, b).dense()
    assert np.max(np.abs(A - B)) < 1e-15 * np.max(np.abs(A))


@given(moderate_b)
def test_quadratic_level_characteristic_polynomial(b):
    # det(x I - M_1(b)) = x^2 - 6bx + 5b^2 - 8 by direct 2x2 expansion
    got = charpoly(1, b)
    want = np.array([5 * b * b - 8, -6 * b, 1.0])
    assert np.max(np.abs(got - want)) <= 1e-13 * max(1.0, abs(b) ** 2)


def test_cubic_level_characteristic_polynomial_at_origin():
    got = charpoly(2, 0.0)
    assert np.allclose(got, [0.0, -64.0, 0.0, 1.0], rtol=0, atol=1e-12)


@given(st.integers(1, 12), moderate_b)
def test_characteristic_polynomial_matches_dense_determinant(m, b):
    got = charpoly(m, b)
    dense = build_matrix(m, b).dense()
    want = np.poly(dense)[::-1]  # ascending
    scale = np.max(np.abs(want))
    assert np.max(np.abs(got - want)) <= 1e-9 * scale


@given(st.integers(1, 10), moderate_b)
def test_scaled_and_unscaled_polynomials_are_consistent(m, b):
    # same spectrum after the substitution x -> x * m^1.5, b -> b * sqrt(m)
    s = m**1.5
    unscaled = charpoly(m, complex(b) * math.sqrt(m))
    scaled = charpoly(m, b, scaled=True)
    powers = s ** (m + 1 - np.arange(m + 2, dtype=float))
    assert np.max(np.abs(unscaled / powers - scaled)) <= 1e-11 * np.max(
        np.abs(scaled)
    )


def test_unscaled_coefficients_refused_when_they_overflow_doubles():
    with pytest.raises(QesError):
        charpoly(200, 1.0)
    assert charpoly(200, 1.0, scaled=True).shape == (202,)


def test_exact_polynomial_matches_float_kernel():
    for m, b in ((1, 3), (4, -2), (9, 5)):
        exact = charpoly_exact(m, b)
        assert exact.var == "lambda" and exact.degree == m + 1
        got = charpoly(m, float(b))
        want = exact.float_coeffs()
        assert np.max(np.abs(got - want)) <= 1e-12 * np.max(np.abs(want))


def test_bivariate_specializes_to_exact_univariate():
    for m in range(7):
        D = charpoly_bivariate(m)
        assert D.deg_lambda == m + 1 and D.deg_b == m + 1
        for b0 in (-4, -1, 0, 2, 5):
            assert D.eval_b(b0) == charpoly_exact(m, b0)


def test_minor_degrees_climb_one_per_step():
    minors = charpoly_bivariate(5, with_minors=True)
    assert len(minors) == 7
    for i, p in enumerate(minors):
        assert p.deg_lambda == i and p.deg_b == i
    assert minors[-1] == charpoly_bivariate(5)


def test_minors_satisfy_three_term_recurrence():
    m = 4
    minors = charpoly_bivariate(m, with_minors=True)
    lam, b = 3, -2
    vals = [p(lam, b) for p in minors]
    for i in range(2, m + 2):
        a = (4 * i - 3) * b
        c = 4 * (2 * i - 2) * (2 * i - 3) * (m + 2 - i)
        assert vals[i] == (lam - a) * vals[i - 1] - c * vals[i - 2]


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


def test_cubic_level_spectrum_at_origin():
    spec = eigenvalues(2, 0.0)
    assert match_multisets(spec.eigenvalues, [-8.0, 0.0, 8.0]) < 1e-10
    assert spec.simple and spec.m == 2 and spec.b == 0.0


def test_eigenvalues_are_sorted_and_bookkept():
    spec = eigenvalues(6, 1.5 + 0.5j)
    key = np.lexsort((spec.eigenvalues.imag, spec.eigenvalues.real))
    assert np.array_equal(key, np.arange(7))
    assert spec.scale == pytest.approx(float(np.max(np.abs(spec.eigenvalues))))
    gaps = np.abs(spec.eigenvalues[:, None] - spec.eigenvalues[None, :])
    np.fill_diagonal(gaps, np.inf)
    assert spec.min_gap == pytest.approx(float(gaps.min()))


@given(st.integers(1, 20), moderate_b)
def test_eigenvalue_sum_equals_trace(m, b):
    spec = eigenvalues(m, b)
    trace = (m + 1) * (2 * m + 1) * complex(b)
    budget = 1e-9 * max(1.0, abs(trace), spec.scale * (m + 1))
    assert abs(np.sum(spec.eigenvalues) - trace) <= budget


def test_real_parameter_gives_real_spectrum():
    rng = np.random.default_rng(7)
    for _ in range(100):
        m = int(rng.integers(1, 26))
        b = float(rng.uniform(-6, 6))
        spec = eigenvalues(m, b)
        assert np.max(np.abs(spec.eigenvalues.imag)) <= 1e-9 * max(
            1.0, spec.scale
        )


@given(st.integers(1, 14), moderate_b)
def test_spectrum_negation_symmetry(m, b):
    plus = eigenvalues(m, b).eigenvalues
    minus = eigenvalues(m, -b).eigenvalues
    scale = max(1.0, float(np.max(np.abs(plus))))
    assert match_multisets(minus, -plus) <= 1e-9 * scale


@given(st.integers(1, 14), moderate_b)
def test_spectrum_conjugation_symmetry(m, b):
    here = eigenvalues(m, b).eigenvalues
    there = eigenvalues(m, np.conj(b)).eigenvalues
    scale = max(1.0, float(np.max(np.abs(here))))
    assert match_multisets(there, np.conj(here)) <= 1e-9 * scale


def test_numeric_spectrum_agrees_with_exact_polynomial_roots():
    m, b = 25, 3
    roots, _ = polycore.mp_roots_int(
        list(charpoly_exact(m, b).coeffs), rel_tol=1e-13
    )
    spec = eigenvalues(m, float(b))
    assert match_multisets(spec.eigenvalues, roots) <= 1e-10 * spec.scale


def test_scaled_spectrum_is_the_rescaled_spectrum():
    m, b = 10, 2 + 1j
    raw = eigenvalues(m, b).eigenvalues
    scaled = scaled_eigenvalues(m, b / math.sqrt(m)).eigenvalues
    assert match_multisets(raw / m**1.5, scaled) <= 1e-12 * np.max(np.abs(scaled))


def test_warm_started_spectrum_matches_cold():
    m, b = 8, 1 + 2j
    cold = eigenvalues(m, b)
    warm = eigenvalues(m, b, init=cold.eigenvalues)
    assert match_multisets(cold.eigenvalues, warm.eigenvalues) <= 1e-10 * cold.scale


def test_severely_nonnormal_spectrum_is_still_accurate():
    # far from the real axis the family is badly non-normal and plain double
    # precision root finding loses the spectrum entirely; the refinement path
    # must still deliver eigenvalues that satisfy the exact recurrence
    m, u = 100, 0.75 + 1.0j
    spec = scaled_eigenvalues(m, u)
    assert len(spec.eigenvalues) == 101
    assert float(np.max(np.abs(spec.eigenvalues))) == pytest.approx(
        5.9583, abs=2e-3
    )
    trace = (m + 1) * (2 * m + 1) * u / m
    assert abs(np.sum(spec.eigenvalues) - trace) <= 1e-9 * spec.scale * m


def test_cluster_bookkeeping_flags_coincident_values():
    vals = np.array([1.0, 1.0 + 1e-12, 5.0, -2.0])
    groups = spectrum._cluster_indices(vals, 5.0)
    sizes = sorted(len(g) for g in groups)
    assert sizes == [1, 1, 2]
    singleton = spectrum._cluster_indices(vals[2:], 5.0)
    assert all(len(g) == 1 for g in singleton)


# ---------------------------------------------------------------------------
# eigenpolynomials
# ---------------------------------------------------------------------------


def test_ground_pair_coefficient_ratio():
    lam = 2 * math.sqrt(2.0)
    ep = eigenpolynomial(1, 0.0, lam)
    assert ep.residual <= 1e-8
    ratio = ep.coeffs[1] / ep.coeffs[0]
    assert abs(ratio - (-math.sqrt(2.0))) < 1e-10
    top = int(np.argmax(np.abs(ep.coeffs)))
    assert ep.coeffs[top] == 1.0 + 0.0j


def operator_apply(c, m, b):
    """Apply Q -> -4t Q'' + (4t^2+4bt-2) Q' - (4mt - b) Q on coefficients."""
    Qp = npp.polyder(c)
    Qpp = npp.polyder(c, 2)
    out = npp.polyadd(-4.0 * npp.polymulx(Qpp), npp.polymul([-2.0, 4.0 * b, 4.0], Qp))
    out = npp.polyadd(out, npp.polymul([b, -4.0 * m], c))
    return out


@given(st.integers(1, 8), moderate_b, st.data())
def test_eigenpolynomial_solves_the_differential_recurrence(m, b, data):
    spec = eigenvalues(m, b)
    idx = data.draw(st.integers(0, m), label="which eigenvalue")
    lam = complex(spec.eigenvalues[idx])
    ep = eigenpolynomial(m, b, lam)
    assert len(ep.coeffs) == m + 1
    lhs = operator_apply(ep.coeffs, m, complex(b))
    rhs = lam * ep.coeffs
    n = max(len(lhs), len(rhs))
    lhs = np.pad(lhs, (0, n - len(lhs)))
    rhs = np.pad(np.asarray(rhs, dtype=np.complex128), (0, n - len(rhs)))
    opscale = max(abs(lam), 4.0 * m + abs(b) * (4 * m + 1), (2 * m + 2) ** 2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-7 * opscale


def test_eigenpolynomial_rejects_values_off_the_spectrum():
    with pytest.raises(QesError, match="not an eigenvalue"):
        eigenpolynomial(3, 1.0, 123.0 + 4j)


def test_eigenpolynomial_rejects_collided_eigenvalues(monkeypatch):
    # a genuine collision leaves no one-dimensional eigenspace to return;
    # forge the bookkeeping of a collision to exercise the rejection
    base = eigenvalues(1, 0.0)
    fake = spectrum.Spectrum(
        m=1,
        b=0.0,
        eigenvalues=base.eigenvalues,
        min_gap=0.0,
        scale=base.scale,
        clusters=((0, 1),),
    )
    monkeypatch.setattr(spectrum, "eigenvalues", lambda *a, **k: fake)
    with pytest.raises(QesError, match="collision"):
        eigenpolynomial(1, 0.0, float(base.eigenvalues[0].real))


# ---------------------------------------------------------------------------
# empirical transforms
# ---------------------------------------------------------------------------


def test_empirical_cauchy_of_two_points():
    assert empirical_cauchy([1.0, -1.0], 3.0) == pytest.approx(0.375)


def test_empirical_cauchy_rejects_coincident_evaluation():
    with pytest.raises(QesError):
        empirical_cauchy([1.0, 2.0], 2.0)


@given(st.integers(1, 10), moderate_b)
def test_empirical_cauchy_far_field_decay(m, b):
    spec = eigenvalues(m, b)
    z = 100.0 * max(1.0, spec.scale) * (1 + 1j)
    got = empirical_cauchy(spec.eigenvalues, z)
    assert abs(got - 1.0 / z) <= 2.0 * max(1.0, spec.scale) / abs(z) ** 2
