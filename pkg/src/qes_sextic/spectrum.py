"""The tridiagonal family: matrices, characteristic polynomials, spectra,
eigenpolynomials.

The operator -d^2/dx^2 + 2(x^3+bx) d/dx - (4m x^2 - b) preserves even
polynomials of degree <= 2m.  In the monomial basis (1, t, ..., t^m) with
t = x^2 its action is the tridiagonal matrix built here, and the algebraic
spectrum of the sextic oscillator is that matrix's spectrum.  Everything
downstream (crossings, monodromy, asymptotics) consumes these functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr, mpz

from . import polycore
from .backend import charpoly_scaled as _kernel_charpoly_scaled
from .backend import charpoly_unscaled as _kernel_charpoly_unscaled
from .errors import QesError

CLUSTER_RTOL = 1e-8  # eigenvalues closer than this times the scale coalesce

# unscaled double-precision coefficients overflow beyond roughly this m
_UNSCALED_M_LIMIT = 60


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Tridiagonal matrix with diag[i] on (i,i), super[i] on (i,i+1),
    sub[i] on (i+1,i)."""

    diag: tuple
    super: tuple
    sub: tuple

    def dense(self) -> np.ndarray:
        n = len(self.diag)
        out = np.zeros((n, n), dtype=np.complex128)
        out[np.arange(n), np.arange(n)] = self.diag
        idx = np.arange(n - 1)
        out[idx, idx + 1] = self.super
        out[idx + 1, idx] = self.sub
        return out


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by (real, imaginary), with collision bookkeeping.

    clusters groups indices of eigenvalues lying within CLUSTER_RTOL * scale
    of each other; entries are singletons away from level crossings.
    """

    m: int
    b: complex
    eigenvalues: np.ndarray
    min_gap: float
    scale: float
    clusters: tuple

    @property
    def simple(self) -> bool:
        return all(len(c) == 1 for c in self.clusters)


@dataclass(frozen=True)
class EigenPolynomial:
    """Coefficients of the polynomial factor Q(t) for one eigenvalue.

    Q solves -4t Q'' + (4t^2+4bt-2) Q' - (4mt-b) Q = lambda Q; coefficients
    are normalized so the largest-magnitude one equals 1.
    """

    m: int
    b: complex
    eigenvalue: complex
    coeffs: np.ndarray
    residual: float


def build_matrix(m: int, b: complex) -> TridiagonalMatrix:
    """M_m(b): diag (4i+1)b, super 4i-4m, sub -(2i+1)(2i+2)."""
    b = complex(b)
    return TridiagonalMatrix(
        diag=tuple((4 * i + 1) * b for i in range(m + 1)),
        super=tuple(complex(4 * i - 4 * m) for i in range(m)),
        sub=tuple(complex(-(2 * i + 1) * (2 * i + 2)) for i in range(m)),
    )


def build_scaled_matrix(m: int, b: complex) -> TridiagonalMatrix:
    """The rescaled family: M_m(b sqrt(m)) / m^(3/2) entrywise."""
    b = complex(b)
    s = float(m) ** 1.5
    return TridiagonalMatrix(
        diag=tuple((4 * i + 1) * b / m for i in range(m + 1)),
        super=tuple((4 * i - 4 * m) / s for i in range(m)),
        sub=tuple(-(2 * i + 1) * (2 * i + 2) / s for i in range(m)),
    )


def charpoly(m: int, b: complex, scaled: bool = False) -> np.ndarray:
    """Ascending complex coefficients of the characteristic polynomial.

    scaled=True gives det(x I - Mtilde_m(b)).  The unscaled variant keeps all
    coefficients in double range only up to moderate m; past that the scaled
    route plus root rescaling is the supported path.
    """
    if scaled:
        return _kernel_charpoly_scaled(m, complex(b))
    if m > _UNSCALED_M_LIMIT:
        raise QesError(
            f"unscaled coefficients overflow doubles for m = {m}; "
            "use scaled=True and rescale roots by m**1.5"
        )
    return _kernel_charpoly_unscaled(m, complex(b))


def charpoly_exact(m: int, b) -> polycore.ExactUnivariatePoly:
    """Exact characteristic polynomial at integer b, a polynomial in lambda."""
    return polycore.ExactUnivariatePoly(
        tuple(polycore.charpoly_exact(m, b)), "lambda"
    )


def charpoly_bivariate(m: int, with_minors: bool = False):
    """Exact characteristic polynomial as a polynomial in (lambda, b).

    With with_minors=True, returns the list of all leading-principal-minor
    characteristic polynomials (index i = minor size, 0..m+1), the last entry
    being the full one.
    """
    zero = mpz(0)

    def blank():
        return [[zero] * (m + 2) for _ in range(m + 2)]

    prev2 = blank()
    prev = blank()
    prev[0][0] = mpz(1)
    minors = [[[mpz(1)]]] if with_minors else None
    cur = None
    for i in range(1, m + 2):
        a = 4 * i - 3  # multiplies b
        c = 4 * (2 * i - 2) * (2 * i - 3) * (m + 2 - i)
        cur = blank()
        for k in range(i - 1, -1, -1):
            row_p = prev[k]
            row_c = cur[k]
            for j in range(i):
                cur[k + 1][j] += row_p[j]
                row_c[j + 1] -= a * row_p[j]
            if c:
                row_2 = prev2[k]
                for j in range(i - 1):
                    row_c[j] -= c * row_2[j]
        prev2, prev = prev, cur
        if with_minors:
            minors.append([row[: i + 1] for row in cur[: i + 1]])
    if with_minors:
        return [polycore.ExactBivariatePoly(tuple(map(tuple, rows))) for rows in minors]
    return polycore.ExactBivariatePoly(tuple(map(tuple, cur)))


def _cluster_indices(vals: np.ndarray, scale: float) -> tuple:
    """Group indices whose values sit within CLUSTER_RTOL * scale (union-find
    via sorted sweep on a threshold graph; n is small)."""
    n = len(vals)
    tol = CLUSTER_RTOL * max(scale, 1e-300)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= tol:
                ra, rb = find(i), find(j)
                if ra != rb:
                    parent[rb] = ra
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return tuple(tuple(g) for g in groups.values())


def _finish_spectrum(m: int, b: complex, roots: np.ndarray) -> Spectrum:
    order = np.lexsort((roots.imag, roots.real))
    roots = roots[order]
    scale = float(np.max(np.abs(roots))) if len(roots) else 0.0
    if len(roots) > 1:
        diff = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(diff, np.inf)
        min_gap = float(diff.min())
    else:
        min_gap = np.inf
    return Spectrum(
        m=m,
        b=complex(b),
        eigenvalues=roots,
        min_gap=min_gap,
        scale=scale,
        clusters=_cluster_indices(roots, scale),
    )


def _scaled_charpoly_mpc(m: int, u: complex, prec: int) -> list:
    """Scaled-recurrence coefficients in gmpy2 mpc at the ambient precision.

    Must be called inside a gmpy2 context; mirrors the double kernel exactly
    (same recurrence, higher precision) so the two agree to double rounding.
    """
    um = mpc(u)
    m3 = mpfr(m) ** 3
    size = m + 2
    prev2 = [mpc(0)] * size
    prev = [mpc(0)] * size
    prev[0] = mpc(1)
    cur = prev
    for i in range(1, m + 2):
        a = um * (4 * i - 3) / m
        c = mpfr(4 * (2 * i - 2) * (2 * i - 3) * (m + 2 - i)) / m3
        cur = [mpc(0)] * size
        for k in range(i, 0, -1):
            cur[k] = prev[k - 1]
        for k in range(i):
            cur[k] -= a * prev[k]
        if i >= 2:
            for k in range(i - 1):
                cur[k] -= c * prev2[k]
        prev2, prev = prev, cur
    return cur[: m + 2]


def _root_error_estimate(coeffs, roots) -> np.ndarray:
    """First-order absolute error bound for computed roots of a double-
    precision polynomial: coefficient rounding of relative size ~2^-48 moves
    each simple root by about (sum |c_k||z|^k) * 2^-48 / |p'(z)|."""
    c = np.asarray(coeffs, dtype=np.complex128)
    z = np.asarray(roots, dtype=np.complex128)
    n = len(c) - 1
    p = np.full(len(z), c[-1], dtype=np.complex128)
    dp = np.zeros(len(z), dtype=np.complex128)
    s = np.full(len(z), abs(c[-1]))
    az = np.abs(z)
    for k in range(n - 1, -1, -1):
        dp = dp * z + p
        p = p * z + c[k]
        s = s * az + abs(c[k])
    adp = np.abs(dp)
    out = np.full(len(z), np.inf)
    ok = adp > 0
    out[ok] = s[ok] * 2.0**-48 / adp[ok]
    return out


def _balanced_eig_warm(m: int, u: complex) -> np.ndarray:
    """Eigenvalue estimates for the scaled matrix via diagonal balancing.

    The sub/super product is positive and b-free, so the family is similar
    to a tridiagonal matrix with real symmetric off-diagonal part; LAPACK on
    that form gives far better starting points than polynomial iteration
    alone when the degree is large.
    """
    i = np.arange(m)
    g = np.sqrt(4.0 * (2 * i + 1) * (2 * i + 2) * (m - i)) / float(m) ** 1.5
    d = (4 * np.arange(m + 1) + 1) * (complex(u) / m)
    if complex(u).imag == 0.0:
        T = np.diag(d.real) + np.diag(g, 1) + np.diag(g, -1)
        return np.linalg.eigvalsh(T).astype(np.complex128)
    T = np.diag(d) + np.diag(g.astype(np.complex128), 1) + np.diag(
        g.astype(np.complex128), -1
    )
    return np.linalg.eigvals(T)


def _scaled_roots(m: int, u: complex, tol: float, init=None) -> np.ndarray:
    """Roots of the scaled characteristic polynomial at parameter u, accurate
    to ``tol`` times the spectral radius.

    Double-precision Aberth first; if the a-posteriori error estimate misses
    the target (high degree, or a near-collision), the same recurrence is
    rerun in multiprecision and the roots polished there, warm-started from
    a balanced matrix eigensolve.
    """
    coeffs = _kernel_charpoly_scaled(m, complex(u))
    warm = polycore.aberth_roots_lenient(coeffs, init=init, tol=tol)
    est = _root_error_estimate(coeffs, warm)
    scale = float(np.max(np.abs(warm))) if len(warm) else 0.0
    if np.max(est) <= tol * max(scale, 1e-300):
        return warm
    if m >= 12:
        warm = _balanced_eig_warm(m, u)
    roots, _ = polycore.mp_roots(
        lambda prec: _scaled_charpoly_mpc(m, complex(u), prec),
        m + 1,
        warm=warm,
        rel_tol=max(tol, 1e-14),
        start_prec=192,
    )
    return roots


def eigenvalues(m: int, b: complex, tol: float = 1e-12, init=None) -> Spectrum:
    """Spectrum of M_m(b), accurate to ``tol`` times the spectral radius.

    Always solved through the scaled recurrence (coefficients stay bounded,
    so large m is safe) and rescaled back.  Double-precision root finding is
    used when its error estimate meets the target, multiprecision polishing
    otherwise.  ``init`` warm-starts the iteration with eigenvalue guesses in
    the unscaled frame.
    """
    s = float(m) ** 1.5
    warm = None if init is None else np.asarray(init, dtype=np.complex128) / s
    roots = _scaled_roots(m, complex(b) / m**0.5, tol, init=warm)
    return _finish_spectrum(m, b, roots * s)


def scaled_eigenvalues(m: int, b: complex, tol: float = 1e-12) -> Spectrum:
    """Spectrum of the rescaled family: eigenvalues(m, b*sqrt(m)) / m^(3/2)."""
    return _finish_spectrum(m, b, _scaled_roots(m, complex(b), tol))


def _mp_newton_lambda(m: int, b: complex, lam0: complex):
    """One eigenvalue of M_m(b) polished by Newton iteration on the leading
    principal minor recurrence.  Must run inside a gmpy2 context; minor
    growth is harmless there because the exponent range is unbounded."""
    bb = mpc(b)
    z = mpc(lam0)
    prec = gmpy2.get_context().precision
    stop = mpfr(2) ** (8 - prec)
    for _ in range(20):
        d2, d1 = mpc(1), bb - z
        e2, e1 = mpc(0), mpc(-1)
        for k in range(2, m + 2):
            i = k - 1
            diag = (4 * i + 1) * bb - z
            off = (4 * (i - 1) - 4 * m) * (-(2 * i - 1) * (2 * i))
            d2, d1 = d1, diag * d1 - off * d2
            e2, e1 = e1, -d2 + diag * e1 - off * e2
        if e1 == 0:
            break
        step = d1 / e1
        z = z - step
        if abs(step) <= stop * max(abs(z), mpfr(1)):
            break
    return z


def _mp_shoot(m: int, b: complex, lam) -> list:
    """Null vector of (M_m(b) - lam I) transposed — the Q(t) coefficients.

    Forward and backward three-term recurrences joined where both are
    largest, peak component normalized to exactly 1.  Must run inside a
    gmpy2 context; returns mpc values carrying the full working precision.
    """
    # transpose entries: row j couples c[j-1] via 4(j-1-m), c[j] via (4j+1)b,
    # c[j+1] via -(2j+1)(2j+2)
    bb = mpc(b)
    z = mpc(lam)
    n = m + 1
    f = [mpc(0)] * n
    f[0] = mpc(1)
    for j in range(m):
        t = ((4 * j + 1) * bb - z) * f[j]
        if j > 0:
            t += 4 * (j - 1 - m) * f[j - 1]
        f[j + 1] = t / ((2 * j + 1) * (2 * j + 2))
    g = [mpc(0)] * n
    g[m] = mpc(1)
    for j in range(m, 0, -1):
        t = ((4 * j + 1) * bb - z) * g[j]
        if j < m:
            t -= (2 * j + 1) * (2 * j + 2) * g[j + 1]
        g[j - 1] = t / (4 * (m + 1 - j))
    pivot = 0
    best = mpfr(-1)
    for j in range(n):
        w = abs(f[j]) * abs(g[j])
        if w > best:
            best, pivot = w, j
    v = [f[j] * g[pivot] if j <= pivot else f[pivot] * g[j] for j in range(n)]
    top = 0
    best = mpfr(-1)
    for j in range(n):
        w = abs(v[j])
        if w > best:
            best, top = w, j
    vt = v[top]
    return [vj / vt for vj in v]


def _mp_vector(m: int, b: complex, lam) -> np.ndarray:
    """Shooting vector materialized to doubles.  Relative accuracy of each
    coefficient survives down to the double underflow floor."""
    return np.array(
        [complex(vj) for vj in _mp_shoot(m, b, lam)], dtype=np.complex128
    )


def eigenpolynomial_coeffs_mp(m: int, b: complex, lam_seed: complex, prec: int = 0) -> list:
    """Q(t) coefficients as mpc values at the ambient working precision.

    The eigenvalue is re-polished from ``lam_seed`` first, so the seed only
    needs to be closer to its eigenvalue than to any neighbor.  Intended as
    a coefficient supplier for multiprecision root finding: the coefficient
    magnitudes span so many decades for large m that roots computed from
    double-rounded coefficients go macroscopically wrong, even though each
    double coefficient is correctly rounded.  ``prec`` is accepted for
    supplier-signature compatibility; the gmpy2 context in force decides the
    actual precision.
    """
    return _mp_shoot(m, b, _mp_newton_lambda(m, b, lam_seed))


def _action_residual(m: int, b: complex, lam: complex, v: np.ndarray) -> float:
    """Max-norm defect of (M^T - lam I) v relative to the operator scale."""
    n = m + 1
    j = np.arange(n)
    act = (4 * j + 1) * b * v
    act[:-1] += -(2 * j[:-1] + 1) * (2 * j[:-1] + 2) * v[1:]
    act[1:] += 4 * (j[1:] - 1 - m) * v[:-1]
    opscale = max(abs(lam), 4.0 * m + abs(b) * (4 * m + 1), (2 * m + 2) ** 2)
    return float(np.max(np.abs(act - lam * v)) / opscale)


def eigenpolynomial(m: int, b: complex, eigenvalue: complex) -> EigenPolynomial:
    """Coefficient vector of Q(t) for an eigenvalue of M_m(b).

    The eigenvalue must match the actual spectrum to within the cluster
    tolerance; a multiple eigenvalue is rejected as defective (the geometric
    eigenspace of this tridiagonal family is one-dimensional, so an actual
    collision leaves no clean eigenvector).  The returned vector is
    normalized so its largest-magnitude coefficient is exactly 1, and its
    residual in the defining differential recurrence is enforced <= 1e-8.
    """
    b = complex(b)
    lam = complex(eigenvalue)
    spec = eigenvalues(m, b)
    dist = np.abs(spec.eigenvalues - lam)
    k = int(np.argmin(dist))
    tol = max(spec.scale, 1.0) * 1e-6
    if dist[k] > tol:
        raise QesError(
            f"{lam} is not an eigenvalue of the m={m} matrix at b={b} "
            f"(nearest is {spec.eigenvalues[k]})"
        )
    cluster = next(c for c in spec.clusters if k in c)
    if len(cluster) > 1:
        raise QesError(
            f"eigenvalue {lam} is defective at b={b}: it sits in a "
            f"multiplicity-{len(cluster)} collision, no eigenvector basis"
        )
    lam = complex(spec.eigenvalues[k])
    # the family is far from normal for large m: eigenvector sensitivity
    # outruns double precision long before the eigenvalues do, and the small
    # coefficients need full relative accuracy because downstream consumers
    # locate polynomial roots with them.  Polish the eigenvalue and run the
    # shooting recurrences in multiprecision, doubling the working precision
    # until two consecutive materializations agree coefficient by
    # coefficient.
    v = None
    prev = None
    for prec in (128, 256, 512, 1024, 2048):
        with gmpy2.context(precision=prec):
            lam_mp = _mp_newton_lambda(m, b, lam)
            cand = _mp_vector(m, b, lam_mp)
        if prev is not None:
            gap = np.abs(cand - prev)
            amax = np.maximum(np.abs(cand), np.abs(prev))
            # the absolute floor settles components near the double
            # underflow boundary, where one rounding keeps a subnormal
            # crumb and the other flushes to zero
            if bool(np.all((gap <= 1e-12 * amax) | (amax < 1e-280))):
                v = cand
                lam = complex(lam_mp)
                break
        prev = cand
    if v is None:
        raise QesError(
            f"eigenvector did not stabilize under precision doubling at "
            f"m={m}, b={b}"
        )
    resid = _action_residual(m, b, lam, v)
    if resid > 1e-8:
        raise QesError(
            f"eigenvector residual {resid:.2e} exceeds 1e-8 at m={m}, b={b}"
        )
    return EigenPolynomial(m=m, b=b, eigenvalue=lam, coeffs=v, residual=resid)


def empirical_cauchy(points, z: complex) -> complex:
    """Cauchy transform of the uniform measure on ``points`` at z."""
    pts = np.asarray(points, dtype=np.complex128)
    d = complex(z) - pts
    if np.any(d == 0):
        raise QesError(f"evaluation point {z} coincides with a sample point")
    return complex(np.mean(1.0 / d))
