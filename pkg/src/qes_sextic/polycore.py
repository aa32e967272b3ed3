"""Exact polynomial layer and root finding.

Integer-exact pieces (characteristic polynomials over Z, resultants via the
subresultant remainder sequence, Newton interpolation on consecutive integer
nodes) plus the two root finders everything else uses: a double-precision
Aberth solver built on the kernel backend, and an adaptive multiprecision
Aberth solver (gmpy2) for integer polynomials whose coefficients are far too
large for doubles.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr, mpq, mpz

from .backend import aberth_iterate, horner_with_deriv
from .errors import ConvergenceError, IntegrityError

# ---------------------------------------------------------------------------
# double-precision root finding
# ---------------------------------------------------------------------------

_TWIST = 0.4242484  # irrational-ish rotation so the start circle shares no
# symmetry axis with conjugate-symmetric polynomials


def fujiwara_radius(abs_coeffs) -> float:
    """Fujiwara root bound from coefficient magnitudes (ascending order)."""
    a = list(abs_coeffs)
    n = len(a) - 1
    lead = math.log(a[-1])
    best = -math.inf
    for k in range(1, n + 1):
        ak = a[n - k]
        if ak == 0.0:
            continue
        t = (math.log(ak) - lead - (math.log(2.0) if k == n else 0.0)) / k
        best = max(best, t)
    if best == -math.inf:
        return 0.0
    return 2.0 * math.exp(best)


def initial_circle(n: int, radius: float) -> np.ndarray:
    angles = 2.0 * np.pi * (np.arange(n) + 0.5) / n + _TWIST
    return radius * np.exp(1j * angles)


def polygon_initial_points(log_mags) -> np.ndarray:
    """Aberth starting points from the Newton polygon of the coefficients.

    ``log_mags[k]`` is the natural log of |c_k| (-inf where c_k = 0, leading
    entry finite).  Each upper-hull edge spanning exponents k1 < k2
    contributes k2 - k1 starting points of modulus |c_k1/c_k2|^(1/(k2-k1)),
    which tracks the actual root moduli far better than a single bounding
    circle when they spread over decades.
    """
    pts = [(k, v) for k, v in enumerate(log_mags) if v != -math.inf]
    n = len(log_mags) - 1
    if pts[-1][0] != n:
        raise ValueError("leading coefficient must be nonzero")
    hull = []
    for k, v in pts:
        while len(hull) >= 2 and (hull[-1][1] - hull[-2][1]) * (k - hull[-2][0]) <= (
            v - hull[-2][1]
        ) * (hull[-1][0] - hull[-2][0]):
            hull.pop()
        hull.append((k, v))
    log_r = np.empty(n)
    kmin = hull[0][0]
    pos = kmin
    for (k1, v1), (k2, v2) in zip(hull, hull[1:]):
        log_r[pos : pos + (k2 - k1)] = (v1 - v2) / (k2 - k1)
        pos += k2 - k1
    if kmin:
        # exact zero roots: start them well inside the smallest radius
        inner = log_r[kmin] - 14.0 if n > kmin else -34.0
        log_r[:kmin] = inner
    out = np.empty(n, dtype=np.complex128)
    i, edge = 0, 0
    while i < n:
        j = i
        while j < n and log_r[j] == log_r[i]:
            j += 1
        mu = j - i
        ang = 2.0 * np.pi * (np.arange(mu) + 0.5) / mu + _TWIST + 0.77 * edge
        out[i:j] = np.exp(log_r[i]) * np.exp(1j * ang)
        i, edge = j, edge + 1
    return out


@dataclass(frozen=True)
class RootSet:
    """All roots of one polynomial plus their relative residuals
    |p(root)| / sum_k |c_k||root|^k."""

    roots: np.ndarray
    residuals: np.ndarray


def _newton_polish(c, roots, tol):
    """Guarded per-root Newton corrections after the simultaneous sweep.

    The sweep stops on small residuals; where |p'| sits far below the
    coefficient scale that still lets a root be off by much more than tol, so
    each root is pushed until its own Newton correction is below tol relative.
    Corrections are applied only while small against the distance to the
    nearest other root, which keeps multiplicity clusters untouched (their
    members already sit symmetrically about the true multiple root, which is
    what reconstruction accuracy needs).
    """
    roots = roots.copy()
    n = len(roots)
    for _ in range(4):
        p, dp, _ = horner_with_deriv(c, roots)
        adp = np.abs(dp)
        safe = np.where(adp > 0, dp, 1.0)
        step = np.where(adp > 0, p / safe, 0.0)
        astep = np.abs(step)
        if n > 1:
            diff = np.abs(roots[:, None] - roots[None, :])
            np.fill_diagonal(diff, np.inf)
            gap = diff.min(axis=1)
        else:
            gap = np.full(1, np.inf)
        move = (astep > tol * (1.0 + np.abs(roots))) & (astep <= 0.25 * gap)
        if not move.any():
            break
        roots[move] -= step[move]
    return roots


def aberth_roots(coeffs, tol: float = 1e-12, init=None, max_iter: int = 200) -> RootSet:
    """All roots of a complex polynomial (ascending coefficients), doubles.

    Simultaneous Newton-with-repulsion iteration started from Newton-polygon
    points unless ``init`` gives warm-start positions, then a guarded Newton
    polish on each root.  Deterministic for a given input.  Raises
    ConvergenceError, carrying the best iterates and their residuals, when
    some relative residual fails to reach ``tol``.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
    n = len(c) - 1
    if n <= 0:
        return RootSet(np.zeros(0, dtype=np.complex128), np.zeros(0))
    if init is None:
        a = np.abs(c)
        with np.errstate(divide="ignore"):
            logs = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), -np.inf)
        init = polygon_initial_points(logs)
    roots, resid, iterations, ok = aberth_iterate(c, init, tol, max_iter)
    if not ok:
        raise ConvergenceError(
            f"root iteration stalled after {iterations} sweeps "
            f"(worst relative residual {float(np.max(resid)):.3e}, degree {n})",
            best=roots,
            residuals=resid,
        )
    polished = _newton_polish(c, roots, tol)
    p, _, scale = horner_with_deriv(c, polished)
    newres = np.abs(p) / np.maximum(scale, np.finfo(np.float64).tiny)
    worse = newres > resid
    polished[worse] = roots[worse]
    newres[worse] = resid[worse]
    return RootSet(polished, newres)


def aberth_roots_lenient(
    coeffs, init=None, tol: float = 1e-12, max_iter: int = 200
) -> np.ndarray:
    """Root array of aberth_roots, returning best iterates instead of raising
    on a stall; for callers that gauge accuracy themselves afterwards."""
    try:
        return aberth_roots(coeffs, tol=tol, init=init, max_iter=max_iter).roots
    except ConvergenceError as exc:
        return exc.best


# ---------------------------------------------------------------------------
# exact integer polynomials
# ---------------------------------------------------------------------------


def _strip(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def charpoly_exact(m: int, b) -> list:
    """det(x I - M_m(b)) with exact integer arithmetic; b must be an integer.

    Ascending mpz coefficients, monic of degree m+1.  Same three-term minor
    recurrence as the floating kernels, run over Z.
    """
    b = mpz(b)
    size = m + 2
    prev2 = [mpz(0)] * size
    prev = [mpz(0)] * size
    prev[0] = mpz(1)
    for i in range(1, m + 2):
        a = (4 * i - 3) * b
        c = 4 * (2 * i - 2) * (2 * i - 3) * (m + 2 - i)
        cur = [mpz(0)] * size
        for k in range(i, 0, -1):
            cur[k] = prev[k - 1]
        for k in range(i):
            cur[k] -= a * prev[k]
        if i >= 2:
            for k in range(i - 1):
                cur[k] -= c * prev2[k]
        prev2, prev = prev, cur
    return prev


def poly_deriv_int(p: list) -> list:
    return [k * p[k] for k in range(1, len(p))]


def poly_eval_int(p: list, t) -> "mpz":
    t = mpz(t)
    acc = mpz(0)
    for c in reversed(p):
        acc = acc * t + c
    return acc


def _content(p: list) -> "mpz":
    g = mpz(0)
    for c in p:
        g = gmpy2.gcd(g, c)
        if g == 1:
            break
    return g if g else mpz(1)


def _prem(A: list, B: list) -> list:
    """Pseudo-remainder: lc(B)^(degA-degB+1) * A mod B, over Z."""
    dA, dB = len(A) - 1, len(B) - 1
    lb = B[-1]
    R = list(A)
    e = dA - dB + 1
    while R and len(R) - 1 >= dB:
        dR = len(R) - 1
        top = R[-1]
        off = dR - dB
        newR = [lb * r for r in R[:-1]]
        for j in range(dB):
            newR[off + j] -= top * B[j]
        R = _strip(newR)
        e -= 1
    if e > 0:
        f = lb**e
        R = [f * r for r in R]
    return R


def resultant_int(A, B) -> "mpz":
    """Signed resultant of two integer polynomials, subresultant PRS.

    Ascending coefficients.  The sign convention matches the Sylvester
    determinant with deg(B) rows of A on top; the suite pins this against a
    fraction-free determinant on small inputs.
    """
    A = _strip([mpz(c) for c in A])
    B = _strip([mpz(c) for c in B])
    if not A or not B:
        return mpz(0)
    s = 1
    if len(A) < len(B):
        if (len(A) - 1) % 2 == 1 and (len(B) - 1) % 2 == 1:
            s = -1
        A, B = B, A
    dA, dB = len(A) - 1, len(B) - 1
    if dA == 0:
        return mpz(1)  # two constants
    ca, cb = _content(A), _content(B)
    A = [c // ca for c in A]
    B = [c // cb for c in B]
    t = ca**dB * cb**dA
    g = mpz(1)
    h = mpz(1)
    while dB > 0:
        delta = dA - dB
        if dA % 2 == 1 and dB % 2 == 1:
            s = -s
        R = _prem(A, B)
        if not R:
            return mpz(0)
        denom = g * h**delta
        A = B
        B = [c // denom for c in R]
        dA = dB
        dB = len(B) - 1
        g = A[-1]
        if delta == 1:
            h = g
        elif delta > 1:
            h = g**delta // h ** (delta - 1)
    lB = B[0]
    if dA == 1:
        res = lB
    else:
        res = lB**dA // h ** (dA - 1)
    return s * t * res


def sylvester_matrix_int(A, B) -> list:
    """Sylvester matrix (descending layout, deg(B) rows of A first)."""
    A = _strip([mpz(c) for c in A])
    B = _strip([mpz(c) for c in B])
    dA, dB = len(A) - 1, len(B) - 1
    n = dA + dB
    rows = []
    ad = list(reversed(A))
    bd = list(reversed(B))
    for i in range(dB):
        rows.append([mpz(0)] * i + ad + [mpz(0)] * (n - dA - 1 - i))
    for i in range(dA):
        rows.append([mpz(0)] * i + bd + [mpz(0)] * (n - dB - 1 - i))
    return rows


def bareiss_det_int(M: list) -> "mpz":
    """Exact determinant of a square integer matrix, fraction-free elimination."""
    M = [list(row) for row in M]
    n = len(M)
    if n == 0:
        return mpz(1)
    sign = 1
    prev = mpz(1)
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return mpz(0)
        pk = M[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * pk - M[i][k] * M[k][j]) // prev
            M[i][k] = mpz(0)
        prev = pk
    return sign * M[n - 1][n - 1]


def resultant_int_bareiss(A, B) -> "mpz":
    return bareiss_det_int(sylvester_matrix_int(A, B))


# ---------------------------------------------------------------------------
# exact interpolation on consecutive integer nodes
# ---------------------------------------------------------------------------


def taylor_shift_int(p: list, c) -> list:
    """Coefficients of p(x + c), integer arithmetic."""
    q = [mpz(v) for v in p]
    c = mpz(c)
    n = len(q)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            q[j] += c * q[j + 1]
    return q


def interp_consecutive_int(t0: int, values) -> list:
    """Integer polynomial through (t0 + j, values[j]), j = 0..K.

    Uses forward differences and a falling-factorial Horner scheme scaled by
    K!, so every intermediate is an integer; the final division by K! must be
    exact and raises otherwise (which would mean the data has no integer
    interpolant of degree K).
    """
    vals = [mpz(v) for v in values]
    K = len(vals) - 1
    fd = [vals[0]]
    work = vals
    for _ in range(K):
        work = [work[i + 1] - work[i] for i in range(len(work) - 1)]
        fd.append(work[0])
    # a_k = fd[k] * K!/k!, built from k = K downwards
    a = [mpz(0)] * (K + 1)
    mult = mpz(1)
    a[K] = fd[K]
    for k in range(K - 1, -1, -1):
        mult *= k + 1
        a[k] = fd[k] * mult
    kfact = mult  # == K!
    # sum_k a_k * s(s-1)...(s-k+1) via nested Horner
    G = [a[K]]
    for k in range(K - 1, -1, -1):
        nxt = [mpz(0)] * (len(G) + 1)
        for i, gi in enumerate(G):
            nxt[i] -= k * gi
            nxt[i + 1] += gi
        nxt[0] += a[k]
        G = nxt
    F = []
    for c in G:
        q, r = divmod(c, kfact)
        if r != 0:
            raise IntegrityError("interpolation data is not an integer polynomial")
        F.append(q)
    return taylor_shift_int(F, -t0)


def _disc_node(args):
    m, t = args
    D = charpoly_exact(m, t)
    r = resultant_int(D, poly_deriv_int(D))
    return int(r)


def discriminant_coeffs(m: int, jobs: int | None = None) -> list:
    """Exact coefficients (ascending in b) of Res_lambda(D_m, dD_m/dlambda).

    Evaluation-interpolation: the resultant is computed exactly at K+3
    consecutive integer values of b, where K = m(m+1) bounds the b-degree;
    K+1 nodes feed the interpolation and the two outermost act as validation
    nodes that must reproduce exactly.
    """
    K = m * (m + 1)
    t0 = -(K // 2)
    nodes = list(range(t0 - 1, t0 + K + 2))
    if jobs is None:
        jobs = min(os.cpu_count() or 1, 8) if m >= 16 else 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_disc_node, [(m, t) for t in nodes], chunksize=4))
    else:
        values = [_disc_node((m, t)) for t in nodes]
    coeffs = interp_consecutive_int(t0, values[1:-1])
    for t, v in ((nodes[0], values[0]), (nodes[-1], values[-1])):
        if poly_eval_int(coeffs, t) != v:
            raise IntegrityError(
                f"discriminant interpolation failed validation at b = {t}"
            )
    return coeffs


# ---------------------------------------------------------------------------
# exact polynomial values
# ---------------------------------------------------------------------------

_VARS = ("lambda", "b")


def _exact_scalar(c):
    """Coerce to mpz, falling back to mpq for genuine rationals.

    Floats are refused: everything in this layer is exact, and a float that
    looks like an integer still carries no promise about where it came from.
    """
    if isinstance(c, (float, complex)):
        raise TypeError("exact polynomials take integer or rational coefficients")
    q = mpq(c)
    return mpz(q) if q.denominator == 1 else q


@dataclass(frozen=True)
class ExactUnivariatePoly:
    """Dense exact polynomial in a single tagged variable.

    Coefficients ascend from the constant term, each an mpz (or mpq when a
    rational genuinely appears).  No trailing zeros are stored, so the zero
    polynomial is the empty tuple and reports degree -1.
    """

    coeffs: tuple
    var: str = "b"

    def __post_init__(self):
        if self.var not in _VARS:
            raise ValueError(f"unknown variable tag {self.var!r}")
        cs = [_exact_scalar(c) for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, t):
        t = _exact_scalar(t)
        acc = mpq(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return mpz(acc) if acc.denominator == 1 else acc

    def deriv(self) -> "ExactUnivariatePoly":
        cs = self.coeffs
        return ExactUnivariatePoly(
            tuple(k * cs[k] for k in range(1, len(cs))), self.var
        )

    def float_coeffs(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs], dtype=np.float64)


@dataclass(frozen=True)
class ExactBivariatePoly:
    """Dense exact polynomial in lambda and b.

    rows[i][j] multiplies lambda**i * b**j.  The storage is rectangular with
    no all-zero trailing row or column; the zero polynomial is the empty
    tuple.
    """

    rows: tuple

    def __post_init__(self):
        rws = [[_exact_scalar(c) for c in row] for row in self.rows]
        width = max((len(r) for r in rws), default=0)
        for r in rws:
            r.extend(mpz(0) for _ in range(width - len(r)))
        while rws and all(c == 0 for c in rws[-1]):
            rws.pop()
        while rws and rws[0] and all(r[-1] == 0 for r in rws):
            for r in rws:
                r.pop()
        if rws and not rws[0]:
            rws = []
        object.__setattr__(self, "rows", tuple(tuple(r) for r in rws))

    @property
    def deg_lambda(self) -> int:
        return len(self.rows) - 1

    @property
    def deg_b(self) -> int:
        return len(self.rows[0]) - 1 if self.rows else -1

    @property
    def is_zero(self) -> bool:
        return not self.rows

    def eval_b(self, t) -> ExactUnivariatePoly:
        """Specialize b = t, leaving an exact polynomial in lambda."""
        t = _exact_scalar(t)
        cs = []
        for row in self.rows:
            acc = mpq(0)
            for c in reversed(row):
                acc = acc * t + c
            cs.append(acc)
        return ExactUnivariatePoly(tuple(cs), "lambda")

    def eval_lambda(self, t) -> ExactUnivariatePoly:
        """Specialize lambda = t, leaving an exact polynomial in b."""
        t = _exact_scalar(t)
        if not self.rows:
            return ExactUnivariatePoly((), "b")
        acc = [mpq(0)] * len(self.rows[0])
        for row in reversed(self.rows):
            acc = [a * t + c for a, c in zip(acc, row)]
        return ExactUnivariatePoly(tuple(acc), "b")

    def deriv_lambda(self) -> "ExactBivariatePoly":
        rws = self.rows
        return ExactBivariatePoly(
            tuple(tuple(i * c for c in rws[i]) for i in range(1, len(rws)))
        )

    def __call__(self, lam, b):
        return self.eval_b(b)(lam)


def interpolate_exact(nodes, values, degree_bound: int, var: str = "b") -> ExactUnivariatePoly:
    """Unique exact polynomial of degree <= degree_bound through the samples.

    Takes exactly degree_bound + 1 distinct nodes.  Internals run in rational
    arithmetic; the result must come out with integer coefficients and
    IntegrityError is raised if it does not (the callers all interpolate
    quantities that are provably integral, so a rational here means the
    samples were wrong).
    """
    ts = [_exact_scalar(t) for t in nodes]
    vs = [_exact_scalar(v) for v in values]
    if len(ts) != degree_bound + 1:
        raise ValueError("need exactly degree_bound + 1 nodes")
    if len(vs) != len(ts):
        raise ValueError("nodes and values differ in length")
    if len({mpq(t) for t in ts}) != len(ts):
        raise ValueError("interpolation nodes must be distinct")
    integral = all(t.denominator == 1 for t in ts) and all(
        v.denominator == 1 for v in vs
    )
    if integral and all(ts[i + 1] - ts[i] == 1 for i in range(len(ts) - 1)):
        coeffs = interp_consecutive_int(int(ts[0]), vs)
        return ExactUnivariatePoly(tuple(coeffs), var)
    xs = [mpq(t) for t in ts]
    coef = [mpq(v) for v in vs]
    n = len(xs)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j])
    # Horner in the Newton basis, expanding to monomial coefficients
    poly = [coef[n - 1]]
    for k in range(n - 2, -1, -1):
        nxt = [mpq(0)] * (len(poly) + 1)
        for i, ci in enumerate(poly):
            nxt[i + 1] += ci
            nxt[i] -= xs[k] * ci
        nxt[0] += coef[k]
        poly = nxt
    out = []
    for c in poly:
        if c.denominator != 1:
            raise IntegrityError("interpolant has a non-integer coefficient")
        out.append(mpz(c))
    return ExactUnivariatePoly(tuple(out), var)


# ---------------------------------------------------------------------------
# resultants of exact bivariate polynomials, two independent routes
# ---------------------------------------------------------------------------


def _as_bivariate(p) -> ExactBivariatePoly:
    if isinstance(p, ExactBivariatePoly):
        return p
    if isinstance(p, ExactUnivariatePoly):
        if p.var == "lambda":
            return ExactBivariatePoly(tuple((c,) for c in p.coeffs))
        return ExactBivariatePoly((tuple(p.coeffs),))
    raise TypeError("expected ExactUnivariatePoly or ExactBivariatePoly")


def _transposed(p: ExactBivariatePoly) -> ExactBivariatePoly:
    if not p.rows:
        return p
    return ExactBivariatePoly(tuple(zip(*p.rows)))


def _prepare_resultant(p, q, eliminated_var):
    if eliminated_var not in _VARS:
        raise ValueError(f"unknown variable tag {eliminated_var!r}")
    P, Q = _as_bivariate(p), _as_bivariate(q)
    if eliminated_var == "b":
        P, Q = _transposed(P), _transposed(Q)
        survivor = "lambda"
    else:
        survivor = "b"
    for name, poly in (("p", P), ("q", Q)):
        for row in poly.rows:
            for c in row:
                if c.denominator != 1:
                    raise TypeError(f"resultant needs integer coefficients in {name}")
    return P, Q, survivor


def resultant(p, q, eliminated_var: str = "lambda") -> ExactUnivariatePoly:
    """Sylvester resultant of two exact polynomials, one variable eliminated.

    Evaluation-interpolation: both inputs are specialized at consecutive
    integers in the surviving variable (centered at 0), the resultant of each
    specialization is computed exactly, and the values are interpolated back
    to a polynomial.  Nodes where either leading coefficient vanishes are
    skipped, since the Sylvester matrix changes shape there.  Two extra nodes
    beyond the degree bound validate the interpolant; a mismatch means the
    samples are inconsistent and raises IntegrityError.

    Sign convention: determinant of the Sylvester matrix laid out descending
    in the eliminated variable with the deg(q) rows of p's coefficients on
    top.  The suite pins this on small hand-expanded cases.
    """
    P, Q, survivor = _prepare_resultant(p, q, eliminated_var)
    if P.is_zero or Q.is_zero:
        return ExactUnivariatePoly((), survivor)
    dp, dq = P.deg_lambda, Q.deg_lambda
    if dp == 0 and dq == 0:
        return ExactUnivariatePoly((1,), survivor)
    bound = dp * Q.deg_b + dq * P.deg_b
    lead_p = list(P.rows[dp])
    lead_q = list(Q.rows[dq])
    prows = [list(row) for row in P.rows]
    qrows = [list(row) for row in Q.rows]
    need = bound + 3  # interpolation nodes plus two validation nodes
    ts, vals = [], []
    t = -(need // 2)
    while len(ts) < need:
        if poly_eval_int(lead_p, t) != 0 and poly_eval_int(lead_q, t) != 0:
            A = [poly_eval_int(row, t) for row in prows]
            B = [poly_eval_int(row, t) for row in qrows]
            ts.append(t)
            vals.append(resultant_int(A, B))
        t += 1
    interp = interpolate_exact(ts[1:-1], vals[1:-1], bound, var=survivor)
    for tt, vv in ((ts[0], vals[0]), (ts[-1], vals[-1])):
        if interp(tt) != vv:
            raise IntegrityError(
                "resultant samples are inconsistent with the degree bound"
            )
    return interp


def _pstrip(u: list) -> list:
    while u and u[-1] == 0:
        u.pop()
    return u


def _psub(u: list, v: list) -> list:
    n = max(len(u), len(v))
    out = [
        (u[i] if i < len(u) else mpz(0)) - (v[i] if i < len(v) else mpz(0))
        for i in range(n)
    ]
    return _pstrip(out)


def _pmul(u: list, v: list) -> list:
    if not u or not v:
        return []
    out = [mpz(0)] * (len(u) + len(v) - 1)
    for i, a in enumerate(u):
        if a:
            for j, c in enumerate(v):
                out[i + j] += a * c
    return _pstrip(out)


def _pdivexact(u: list, v: list) -> list:
    """Quotient u / v over Z[x] when v divides u; IntegrityError otherwise."""
    if not v:
        raise ZeroDivisionError("exact polynomial division by zero")
    if not u:
        return []
    if len(u) < len(v):
        raise IntegrityError("fraction-free elimination left an inexact division")
    lead = v[-1]
    rem = list(u)
    qdeg = len(u) - len(v)
    quo = [mpz(0)] * (qdeg + 1)
    for k in range(qdeg, -1, -1):
        top = rem[k + len(v) - 1]
        qk, r = divmod(top, lead)
        if r != 0:
            raise IntegrityError("fraction-free elimination left an inexact division")
        if qk:
            quo[k] = qk
            for j, c in enumerate(v):
                rem[k + j] -= qk * c
    if any(c != 0 for c in rem[: len(v) - 1]):
        raise IntegrityError("fraction-free elimination left an inexact division")
    return _pstrip(quo)


def _bareiss_det_poly(M: list) -> list:
    """Determinant of a matrix of integer polynomials, fraction-free.

    Every division in the Bareiss recurrence is exact over Z[x] (entries stay
    minors of the original matrix), so a remainder anywhere is corruption and
    surfaces as IntegrityError from _pdivexact.
    """
    n = len(M)
    if n == 0:
        return [mpz(1)]
    sign = 1
    prev = [mpz(1)]
    for k in range(n - 1):
        if not M[k][k]:
            pivot = next((i for i in range(k + 1, n) if M[i][k]), None)
            if pivot is None:
                return []
            M[k], M[pivot] = M[pivot], M[k]
            sign = -sign
        pk = M[k][k]
        for i in range(k + 1, n):
            row = M[i]
            rik = row[k]
            for j in range(k + 1, n):
                row[j] = _pdivexact(_psub(_pmul(row[j], pk), _pmul(rik, M[k][j])), prev)
            row[k] = []
        prev = pk
    out = list(M[n - 1][n - 1])
    return [-c for c in out] if sign < 0 else out


def resultant_direct(p, q, eliminated_var: str = "lambda") -> ExactUnivariatePoly:
    """Same resultant as :func:`resultant`, expanded symbolically.

    Builds the Sylvester matrix whose entries are polynomials in the
    surviving variable and takes its determinant by fraction-free
    elimination.  Far slower than evaluation-interpolation; it exists so the
    two routes can be checked against each other.
    """
    P, Q, survivor = _prepare_resultant(p, q, eliminated_var)
    if P.is_zero or Q.is_zero:
        return ExactUnivariatePoly((), survivor)
    dp, dq = P.deg_lambda, Q.deg_lambda
    if dp == 0 and dq == 0:
        return ExactUnivariatePoly((1,), survivor)
    ad = [_pstrip([mpz(c) for c in P.rows[i]]) for i in range(dp, -1, -1)]
    bd = [_pstrip([mpz(c) for c in Q.rows[i]]) for i in range(dq, -1, -1)]
    n = dp + dq
    M = []
    for i in range(dq):
        M.append(
            [[] for _ in range(i)]
            + [list(e) for e in ad]
            + [[] for _ in range(n - dp - 1 - i)]
        )
    for i in range(dp):
        M.append(
            [[] for _ in range(i)]
            + [list(e) for e in bd]
            + [[] for _ in range(n - dq - 1 - i)]
        )
    return ExactUnivariatePoly(tuple(_bareiss_det_poly(M)), survivor)


# ---------------------------------------------------------------------------
# multiprecision root finding for integer polynomials
# ---------------------------------------------------------------------------


def mp_roots(
    supplier,
    degree: int,
    warm=None,
    rel_tol: float = 1e-12,
    start_prec: int = 256,
    max_prec: int = 1 << 16,
    max_iter: int = 600,
):
    """All roots of a polynomial given by a precision-aware coefficient source.

    ``supplier(prec)`` must return ascending coefficients, each convertible to
    gmpy2 mpc, accurate to roughly the working precision; it is called inside
    a context of that precision.  Ehrlich-Aberth runs at increasing precision
    with warm restarts, seeded by ``warm`` double-precision guesses when
    given, otherwise by Newton-polygon starting points.  The Aberth repulsion
    sums run in complex doubles (near convergence the correction they enter
    is second order), while values and Newton steps stay in multiprecision.
    Returns (roots, info) where roots is a complex128 array and info records
    the final precision and a per-root error estimate relative to the largest
    root magnitude.
    """
    deg = degree
    if deg <= 0:
        return np.zeros(0, dtype=np.complex128), {"precision": 0, "rel_err": np.zeros(0)}
    start = None
    if warm is not None:
        start = np.asarray(warm, dtype=np.complex128)
        if len(start) != deg:
            raise ValueError(f"warm start has {len(start)} points for degree {deg}")
        # collapse-proof: nudge exactly coincident warm points apart
        for i in range(deg):
            for j in range(i):
                if start[i] == start[j]:
                    start[i] += (1e-9 + 1e-9j) * (abs(start[i]) + 1.0) * (i + 1)
    prec = start_prec
    z = None

    while True:
        with gmpy2.context(precision=prec):
            cround = [mpc(c) for c in supplier(prec)]
            if len(cround) != deg + 1 or cround[-1] == 0:
                raise ValueError("coefficient supplier degree mismatch")
            if z is None:
                if start is None:
                    logs = [
                        float(gmpy2.log2(abs(c))) * math.log(2.0) if c != 0 else -math.inf
                        for c in cround
                    ]
                    start = polygon_initial_points(logs)
                z = [mpc(complex(v)) for v in start]
            else:
                z = [mpc(v) for v in z]
            done = [False] * deg

            def audit(floor_only=False):
                # per-root accuracy check at this precision; errors measured
                # relative to the largest root magnitude, so exact zero roots
                # in a spread-out set do not demand infinite precision.
                # floor_only looks solely at the coefficient-rounding limit
                # scale * 2^-prec / |p'|: the precision-bound part of the
                # error, meaningful even before the iteration has converged.
                need = 0
                err = np.empty(deg)
                ref = max(abs(v) for v in z)
                denom = float(gmpy2.log2(ref + mpfr(2) ** (-prec)))
                for i in range(deg):
                    zi = z[i]
                    p = cround[-1]
                    dp = mpc(0)
                    scale = mpfr(abs(cround[-1]))
                    azi = abs(zi)
                    for c in reversed(cround[:-1]):
                        dp = dp * zi + p
                        p = p * zi + c
                        scale = scale * azi + abs(c)
                    adp = abs(dp)
                    if adp == 0:
                        err[i] = np.inf
                        need = max_prec + 1
                        continue
                    floor = scale / adp * mpfr(2) ** (-prec + 6)
                    resid_err = abs(p) / adp
                    worst = floor if floor_only else max(floor, resid_err)
                    tot = float(gmpy2.log2(worst + mpfr(2) ** (-max_prec)))
                    err[i] = 2.0 ** (tot - denom)
                    want = tot - denom - math.log2(rel_tol)
                    if err[i] > rel_tol:
                        need = max(need, prec + int(max(want, prec * 0.5)) + 16)
                return err, need

            step_gate = mpfr(2) ** (-(prec - 24))
            # Once every step is already below the target accuracy, a residual
            # audit can certify convergence long before the step gate fires;
            # clustered roots never reach the gate (they bounce at the noise
            # floor), so this is what actually terminates those.  And when
            # steps stay large past the global-untangling phase, a floor-only
            # audit detects iterates wandering inside a region where the
            # polynomial sits below coefficient noise: no amount of iteration
            # helps there, only precision, so escalate at once.
            early_gate = rel_tol * 2.0**-6
            audit_due = 2
            stagnation_due = 24
            err = None
            need = -1
            escalate = 0
            for it in range(max_iter):
                zc = np.array([complex(v) for v in z], dtype=np.complex128)
                diff = zc[:, None] - zc[None, :]
                np.fill_diagonal(diff, np.inf)
                diff[diff == 0] = np.inf
                ssum = (1.0 / diff).sum(axis=1)
                ref_d = float(np.max(np.abs(zc))) + 1e-300
                moved = False
                wmax = 0.0
                for i in range(deg):
                    if done[i]:
                        continue
                    zi = z[i]
                    p = cround[-1]
                    dp = mpc(0)
                    for c in reversed(cround[:-1]):
                        dp = dp * zi + p
                        p = p * zi + c
                    if p == 0:
                        done[i] = True
                        continue
                    if dp == 0:
                        z[i] = zi * (1 + mpfr(2) ** (-prec // 2)) + mpfr(2) ** (-prec // 2)
                        moved = True
                        wmax = np.inf
                        continue
                    nstep = p / dp
                    w = nstep / (1 - nstep * mpc(complex(ssum[i])))
                    z[i] = zi - w
                    moved = True
                    wmax = max(wmax, float(abs(w)))
                    if abs(w) <= step_gate * (abs(z[i]) + mpfr(2) ** (-prec)):
                        done[i] = True
                if not moved or all(done):
                    err, need = audit()
                    break
                if it >= audit_due and wmax <= early_gate * ref_d:
                    err, need = audit()
                    if need == 0:
                        break
                    audit_due = it + 16
                    err, need = None, -1
                elif it >= stagnation_due and wmax > 1e-6 * ref_d:
                    _, fneed = audit(floor_only=True)
                    if fneed:
                        escalate = fneed
                        break
                    stagnation_due = it + 16
            if escalate:
                need = escalate
            else:
                if err is None:
                    err, need = audit()
                if need == 0:
                    roots = np.array([complex(v) for v in z], dtype=np.complex128)
                    return roots, {"precision": prec, "rel_err": err}
        if prec >= max_prec:
            raise ConvergenceError(
                f"multiprecision root refinement still above tolerance at {prec} bits"
            )
        prec = min(max(2 * prec, need), max_prec)


def mp_roots_int(
    coeffs,
    rel_tol: float = 1e-12,
    start_prec: int = 256,
    max_prec: int = 1 << 16,
    max_iter: int = 600,
):
    """All roots of an integer polynomial whose coefficients dwarf doubles.

    Zero roots are split off exactly, the rest go through mp_roots with the
    integer coefficients re-rounded at every working precision.
    """
    cs = [mpz(c) for c in coeffs]
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    n = len(cs) - 1
    if n <= 0:
        return np.zeros(0, dtype=np.complex128), {"precision": 0, "rel_err": np.zeros(0)}
    nzero = 0
    while cs[0] == 0:
        cs.pop(0)
        nzero += 1
    deg = len(cs) - 1
    if deg == 0:
        return np.zeros(nzero, dtype=np.complex128), {
            "precision": 0,
            "rel_err": np.zeros(nzero),
        }
    roots, info = mp_roots(
        lambda prec: cs,
        deg,
        rel_tol=rel_tol,
        start_prec=start_prec,
        max_prec=max_prec,
        max_iter=max_iter,
    )
    if nzero:
        roots = np.concatenate([roots, np.zeros(nzero, dtype=np.complex128)])
    return roots, info
