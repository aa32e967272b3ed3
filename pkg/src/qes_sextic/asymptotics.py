"""Limit geometry of the scaled spectra.

As m grows, the eigenvalues of the scaled family concentrate on a compact
set: for real parameter b an explicit interval, for non-real b a union of
analytic legs inside a cubic oval.  This module computes the pieces of that
picture: the branch-point endpoints of the segment family, the cubic and its
foci, the Cauchy transform of the limit measure, the critical values of the
associated quadratic differential, and a ray tracer that classifies a value
as inside or outside the limit support by counting critical horizontal
trajectories.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend, polycore, spectrum
from .errors import BracketingError, QesError, RefinementError

__all__ = [
    "CubicOval",
    "LimitMeasureProbe",
    "SegmentFamily",
    "TrajectoryTopology",
    "cauchy_transform",
    "critical_lambdas",
    "density_real",
    "foci",
    "gamma_oval",
    "limit_measure_probe",
    "omega_quadratic_residual",
    "segment_endpoints",
    "segment_family",
    "support_interval_real",
    "support_scan",
    "trace_horizontal_trajectories",
]


# ---------------------------------------------------------------------------
# the segment family swept by the branch points


def segment_endpoints(b: complex, tau: float) -> tuple[complex, complex]:
    """Branch points 4*tau*b +/- 8*sqrt(tau^2*(1-tau)) of the scaled symbol.

    The square root is the non-negative real root; the "+" endpoint comes
    first.  At tau=0 both endpoints sit at the origin, at tau=1 they merge
    at 4b.
    """
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    b = complex(b)
    s = 8.0 * math.sqrt(tau * tau * (1.0 - tau))
    return 4.0 * tau * b + s, 4.0 * tau * b - s


@dataclass(frozen=True)
class SegmentFamily:
    """Sampled family of segments joining the two branch points.

    samples holds (tau, endpoint_plus, endpoint_minus) triples; the union of
    the segments over tau in [0, 1] is the region a Cauchy-transform
    evaluation point must avoid.
    """

    b: complex
    samples: tuple

    @property
    def points(self) -> np.ndarray:
        """All sampled endpoints as a flat complex array."""
        flat = [e for _, e1, e2 in self.samples for e in (e1, e2)]
        return np.asarray(flat, dtype=np.complex128)

    def min_distance(self, z: complex) -> float:
        """Distance from z to the union of the sampled segments."""
        z = complex(z)
        a = np.array([e1 for _, e1, _ in self.samples], dtype=np.complex128)
        c = np.array([e2 for _, _, e2 in self.samples], dtype=np.complex128)
        d = c - a
        dd = np.abs(d) ** 2
        t = np.real((z - a) * np.conj(d))
        t = np.divide(t, dd, out=np.zeros_like(t), where=dd > 0.0)
        proj = a + np.clip(t, 0.0, 1.0) * d
        return float(np.min(np.abs(z - proj)))


def segment_family(b: complex, n_samples: int = 129) -> SegmentFamily:
    """Sample the branch-point segments on a uniform tau grid."""
    if n_samples < 2:
        raise ValueError("need at least two tau samples")
    b = complex(b)
    samples = []
    for tau in np.linspace(0.0, 1.0, n_samples):
        e1, e2 = segment_endpoints(b, float(tau))
        samples.append((float(tau), e1, e2))
    return SegmentFamily(b=b, samples=tuple(samples))


def support_interval_real(b: float) -> tuple[float, float]:
    """Support of the limit eigenvalue measure for real parameter b.

    For |b| <= 2 this is (2/27)*(36b - b^3 -/+ sqrt((12+b^2)^3)) as an
    ordered pair; the same two numbers reappear as the nonzero foci of the
    cubic when the parameter is pushed off the real axis.  Past |b| = 2 the
    focus that crossed the origin leaves the support (the branch-point sweep
    attains its extreme at the endpoint tau = 0 instead of at an interior
    critical point), so the corresponding end of the interval pins at 0.
    """
    b = float(b)
    d = math.sqrt((12.0 + b * b) ** 3)
    core = 36.0 * b - b**3
    lo = (2.0 / 27.0) * (core - d)
    hi = (2.0 / 27.0) * (core + d)
    if b > 2.0:
        lo = 0.0
    elif b < -2.0:
        hi = 0.0
    return lo, hi


def density_real(b: float, x: float, n: int = 160) -> float:
    """Limit eigenvalue density at x for real parameter b.

    Integrates 1/sqrt(-w) over the part of [0, 1] where the radicand
    w(tau) = (x - 4*tau*b)^2 - 64*tau^2*(1-tau) is negative, divided by pi.
    The negative set is bounded by roots of a real cubic in tau; each stretch
    is integrated with the cosine substitution that absorbs the inverse
    square-root endpoints, so the quadrature sees a smooth integrand.

    Returns 0.0 outside the support.  At points where a segment endpoint
    degenerates (x = 0 when b = 0) the true density blows up and the
    returned value is a large finite approximation.
    """
    b = float(b)
    x = float(x)
    # w as a cubic in tau, ascending coefficients
    w_asc = (x * x, -8.0 * b * x, 16.0 * b * b - 64.0, 64.0)

    def w(t):
        return ((w_asc[3] * t + w_asc[2]) * t + w_asc[1]) * t + w_asc[0]

    rts = np.roots(w_asc[::-1])
    cuts = [0.0, 1.0]
    for r in rts:
        if abs(r.imag) <= 1e-10 * (1.0 + abs(r)) and 0.0 < r.real < 1.0:
            cuts.append(float(r.real))
    cuts = sorted(set(cuts))

    theta = (np.arange(n) + 0.5) * (math.pi / n)
    cos_t = np.cos(theta)
    total = 0.0
    for a, c in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + c)
        if w(mid) >= 0.0:
            continue
        half = 0.5 * (c - a)
        t = mid + half * cos_t
        g = -w(t) / ((t - a) * (c - t))
        g = np.maximum(g, 1e-300)
        total += float(np.sum(1.0 / np.sqrt(g))) / n
    return total


# ---------------------------------------------------------------------------
# the cubic oval and its foci


def foci(b: complex) -> tuple[complex, complex, complex]:
    """The three foci (0, f1, f2) of the cubic containing the spectral legs.

    f_{1,2} = (2/27)*(36b - b^3 +/- sqrt((12+b^2)^3)) with the principal
    square root; f1 carries the plus sign.  For real b the pair (f2, f1)
    reproduces support_interval_real(b) exactly.
    """
    b = complex(b)
    d = cmath.sqrt((12.0 + b * b) ** 3)
    core = 36.0 * b - b**3
    f1 = (2.0 / 27.0) * (core + d)
    f2 = (2.0 / 27.0) * (core - d)
    return 0.0 + 0.0j, f1, f2


@dataclass(frozen=True)
class CubicOval:
    """Sampled oval branch of the real cubic carrying the spectral legs.

    points traces the oval for z = x + iy; every point satisfies
    (x - u*y/v)^2 = (4v - y)*y^2/v^3 where b = u + iv.  foci holds
    (0, f1, f2); the oval starts and ends at the node at the origin.
    """

    b: complex
    points: np.ndarray
    foci: tuple


def _inside_unit_root(a2: float, a1: float, a0: float) -> float:
    """The root of a2*nu^2 + a1*nu + a0 lying strictly inside (-1, 1).

    The factors handled here always have root product -1 (a0 = -a2), so
    exactly one root is inside the unit interval; a degenerate leading
    coefficient leaves a linear equation whose root is 0.
    """
    if abs(a2) <= 1e-14 * (abs(a1) + abs(a0)):
        if a1 == 0.0:
            raise BracketingError("factor of the oval parameterization vanished")
        cands = [-a0 / a1]
    else:
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc < 0.0:
            raise BracketingError("oval factor has no real roots")
        sq = math.sqrt(disc)
        q = -0.5 * (a1 + math.copysign(sq, a1 if a1 != 0.0 else 1.0))
        cands = [q / a2] if q == 0.0 else [q / a2, a0 / q]
    inside = [r for r in cands if abs(r) < 1.0]
    if len(inside) != 1:
        raise BracketingError(
            f"expected exactly one parameter root in (-1, 1), found {len(inside)}"
        )
    return inside[0]


def gamma_oval(b: complex, n_samples: int = 256) -> CubicOval:
    """Parameterize the oval of the spectral cubic for non-real b.

    With b = u + iv the rational parameterization reads

        x = 2*v*nu/(1-nu^2)^3 * G(nu),   y = v/(1-nu^2)^2 * G(nu),

    where G(nu) = 4*(1-nu^2)^2 - (2*v*nu - u*(1-nu^2))^2 factors into two
    quadratics, each contributing exactly one root inside (-1, 1).  The oval
    is swept for nu between those two roots; at either root both coordinates
    vanish and the curve passes through its node at the origin.
    """
    b = complex(b)
    u, v = b.real, b.imag
    if v == 0.0:
        raise ValueError("the oval degenerates for real b; use support_interval_real")
    if n_samples < 8:
        raise ValueError("need at least 8 samples")

    # G = [(2+u)(1-nu^2) - 2v*nu] * [(2-u)(1-nu^2) + 2v*nu]
    nu_a = _inside_unit_root(-(2.0 + u), -2.0 * v, 2.0 + u)
    nu_b = _inside_unit_root(-(2.0 - u), 2.0 * v, 2.0 - u)
    lo, hi = sorted((nu_a, nu_b))

    nu = np.linspace(lo, hi, n_samples)
    one = 1.0 - nu * nu
    g = 4.0 * one * one - (2.0 * v * nu - u * one) ** 2
    x = 2.0 * v * nu / one**3 * g
    y = v / one**2 * g
    return CubicOval(b=b, points=x + 1j * y, foci=foci(b))


# ---------------------------------------------------------------------------
# Cauchy transform of the limit measure


@lru_cache(maxsize=None)
def _gauss_rule(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def _thread_branch(r: np.ndarray, ref: complex) -> np.ndarray:
    """Pick signs for an array of square roots so they vary continuously.

    r holds sqrt values sampled densely along a path; consecutive entries
    are flipped whenever that keeps them aligned, and the first entry is
    aligned with ref.  Returns the signed array.
    """
    dots = np.real(r[1:] * np.conj(r[:-1]))
    signs = np.ones(len(r))
    signs[1:] = np.where(dots < 0.0, -1.0, 1.0)
    signs = np.cumprod(signs)
    if abs(r[0] - ref) > abs(r[0] + ref):
        signs = -signs
    return r * signs


def cauchy_transform(
    b: complex,
    z: complex,
    rel_tol: float = 1e-9,
    order: int = 12,
    max_panels: int = 1 << 15,
) -> complex:
    """Cauchy transform of the limit measure at z, for z off the segments.

    Evaluates the integral of 1/sqrt((z - 4*tau*b)^2 - 64*tau^2*(1-tau))
    over tau in [0, 1].  The square-root branch is carried by continuity
    along tau starting from the value z at tau = 0, which pins the
    normalization C(z) -> 1/z for large z.  Composite Gauss panels are
    doubled until two consecutive refinements agree to rel_tol.

    Raises RefinementError when the radicand passes within 1e-10 of a branch
    point (the branch can no longer be tracked) or when doubling exhausts
    max_panels, which happens when z is taken inside or too close to the
    region swept by the segments.
    """
    b = complex(b)
    z = complex(z)
    nodes, weights = _gauss_rule(order)

    def attempt(n_panels: int):
        edges = np.linspace(0.0, 1.0, n_panels + 1)
        half = 0.5 / n_panels
        mids = edges[:-1] + half
        t = (mids[:, None] + half * nodes[None, :]).ravel()
        zz = z - 4.0 * t * b
        w = zz * zz - 64.0 * t * t * (1.0 - t)
        dw = -8.0 * b * zz - 128.0 * t + 192.0 * t * t
        # distance (in tau) to the nearest branch point, first order
        prox = np.abs(w) / np.maximum(np.abs(dw), 1e-300)
        k = int(np.argmin(prox))
        if prox[k] < 1e-10:
            raise RefinementError(
                f"integrand passes within {prox[k]:.2e} of a branch point "
                f"near tau={t[k]:.6f}; z is too close to the segment family"
            )
        r = np.sqrt(w)
        # consecutive samples rotated near 90 degrees mean the branch can no
        # longer be followed at this resolution
        dots = r[1:] * np.conj(r[:-1])
        mags = np.abs(dots)
        if np.any(np.abs(np.real(dots)) < 0.3 * np.maximum(mags, 1e-300)):
            return None, False
        s = _thread_branch(r, z)
        vals = (1.0 / s).reshape(n_panels, order)
        return complex(np.sum(vals @ weights) * half), True

    prev = None
    n = 16
    while n <= max_panels:
        val, ok = attempt(n)
        if ok:
            if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-30):
                return val
            prev = val
        n *= 2
    raise RefinementError(
        f"Cauchy-transform quadrature did not stabilize at {max_panels} panels "
        f"for z={z}; the evaluation point is likely inside the segment region"
    )


# ---------------------------------------------------------------------------
# the quadratic differential -P(Theta)/Theta dTheta^2


def _p_ascending(b: complex, lam: complex) -> np.ndarray:
    """Ascending coefficients of P(Theta) = Theta*(Theta+b)^2 - 4*Theta - lam."""
    b = complex(b)
    lam = complex(lam)
    return np.array([-lam, b * b - 4.0, 2.0 * b, 1.0], dtype=np.complex128)


def _zeros_of_p(b: complex, lam: complex) -> np.ndarray:
    roots = np.roots(_p_ascending(b, lam)[::-1])
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def critical_lambdas(b: complex) -> set:
    """Values of lambda for which P(Theta) acquires a double root.

    Computed through the discriminant of P with respect to Theta: the 5x5
    Sylvester determinant of (P, P') is a quadratic polynomial in lambda,
    recovered from three evaluations and then solved.  The two roots agree
    with the nonzero foci of the spectral cubic.
    """
    b = complex(b)

    def syl_det(lam):
        p = np.array([1.0, 2.0 * b, b * b - 4.0, -lam], dtype=np.complex128)
        dp = np.array([3.0, 4.0 * b, b * b - 4.0], dtype=np.complex128)
        s = np.zeros((5, 5), dtype=np.complex128)
        s[0, 0:4] = p
        s[1, 1:5] = p
        s[2, 0:3] = dp
        s[3, 1:4] = dp
        s[4, 2:5] = dp
        return complex(np.linalg.det(s))

    h = max(1.0, abs(b) ** 2)
    d0 = syl_det(0.0)
    dp_ = syl_det(h)
    dm_ = syl_det(-h)
    a = (dp_ + dm_ - 2.0 * d0) / (2.0 * h * h)
    c = (dp_ - dm_) / (2.0 * h)
    if a == 0:
        raise QesError("resultant unexpectedly degenerated to a linear polynomial")
    sq = cmath.sqrt(c * c - 4.0 * a * d0)
    if (c.conjugate() * sq).real < 0.0:
        sq = -sq
    q = -0.5 * (c + sq)
    r1 = q / a
    r2 = d0 / q if q != 0.0 else -c / a - r1
    return {r1, r2}


@dataclass(frozen=True)
class TrajectoryTopology:
    """Critical-trajectory graph of the spectral quadratic differential.

    zeros are the three roots of P, pole is the origin; connections lists
    distinct saddle links as index pairs into (zeros..., pole), the pole
    being index 3.  arc_masses holds the measure carried by the zero-zero
    and zero-pole arcs when the conjectured two-link pattern was found.
    in_support records whether that pattern was found and its arcs carry
    unit total mass, ambiguous whether some ray had an unresolved near
    miss, degenerate whether lambda sat at a critical value and the verdict
    came from perturbed re-runs.
    """

    b: complex
    lam: complex
    zeros: tuple
    pole: complex
    connections: tuple
    arc_masses: tuple
    in_support: bool
    ambiguous: bool
    degenerate: bool


_POLE = 3  # index of the origin among the ray-capture targets


def _chord_integral(b: complex, lam: complex, za: complex, zb: complex, n: int) -> complex:
    """Integral of sqrt(P(Theta)/Theta) along the straight chord from za to zb.

    The branch is threaded by continuity from the za end; endpoint
    square-root vanishing is absorbed by a cosine substitution.  The overall
    sign is that of the first node's branch choice, so only quantities
    invariant under a global sign flip are meaningful to callers.
    """
    theta = (np.arange(n) + 0.5) * (math.pi / n)
    s = 0.5 * (1.0 - np.cos(theta))
    z = za + (zb - za) * s
    p = ((z + b) ** 2) * z - 4.0 * z - lam
    r = np.sqrt(p / z)
    r = _thread_branch(r, r[0])
    dz = (zb - za) * 0.5 * np.sin(theta) * (math.pi / n)
    return complex(np.sum(r * dz))


def _arc_mass(b: complex, lam: complex, za: complex, zb: complex, n: int) -> float:
    """Mass the limit root measure places on an arc between critical points.

    The two branches of the limit quadratic differ by sqrt(P(Theta)/Theta);
    on a horizontal-trajectory arc that quantity times dTheta is purely
    imaginary, so by the jump formula the arc carries density
    |sqrt(P/Theta)|/(2 pi) per unit length.  The chord is homotopic to the
    arc for the configurations the tracer accepts.
    """
    return abs(_chord_integral(b, lam, za, zb, n)) / (2.0 * math.pi)


def _ray_plan(b: complex, lam: complex, opts: dict):
    """Launch points, directions and radii for the ten trajectory rays."""
    zeros = _zeros_of_p(b, lam)
    targets = np.append(zeros, 0.0 + 0.0j)
    pair = np.abs(targets[:, None] - targets[None, :])
    span = float(pair.max())
    np.fill_diagonal(pair, np.inf)
    closest = float(pair.min())
    span = max(span, 1e-12 * (1.0 + abs(b) + abs(lam)))

    if closest < 1e-6 * span:
        return None, zeros, span  # collided critical points: degenerate

    step = opts["step_factor"] * span
    # keep captures unambiguous when two critical points sit close together
    cap_gap = closest / (3.0 * opts["capture_factor"])
    step = min(step, cap_gap)
    capture = opts["capture_factor"] * step
    if opts["capture_radius"] is not None:
        # scans raise the capture radius to the grid pitch so that a support
        # leg passing between grid points is still detected
        capture = min(max(capture, float(opts["capture_radius"])), closest / 3.0)
    offset = 2.0 * step

    launches = []  # (start, direction, source)
    dp = 3.0 * zeros * zeros + 4.0 * b * zeros + (b * b - 4.0)
    for i, z0 in enumerate(zeros):
        base = -np.angle(-dp[i] / z0) if z0 != 0 else 0.0
        for k in range(3):
            alpha = (base + 2.0 * math.pi * k) / 3.0
            launches.append((z0, cmath.exp(1j * alpha), i))
    alpha = -cmath.phase(lam) if lam != 0 else 0.0
    launches.append((0.0 + 0.0j, cmath.exp(1j * alpha), _POLE))

    n = len(launches)
    plan = {
        "pc": np.tile(_p_ascending(b, lam), (n, 1)),
        "z0": np.array([z + offset * d for z, d, _ in launches]),
        "d0": np.array([d for _, d, _ in launches]),
        "step": np.full(n, step),
        "targets": np.tile(targets, (n, 1)),
        "capture_r": np.full(n, capture),
        "escape_r": np.full(n, opts["escape_factor"] * (np.abs(targets).max() + span)),
        "source": np.array([s for _, _, s in launches], dtype=np.int64),
        "min_arc": np.full(n, 3.0 * capture + offset),
        "max_steps": min(
            int(math.ceil(opts["arclength_factor"] * span / step)),
            opts["max_steps_cap"],
        ),
        # the near-miss corridor keeps its intrinsic (step-scale) width even
        # when a scan inflates the capture radius, otherwise rays sweeping
        # well clear of a target would mark grid points ambiguous
        "nearmiss_r": capture
        + (opts["nearmiss_factor"] - 1.0) * opts["capture_factor"] * step,
    }
    return plan, zeros, span


def _classify_rays(status, hit, min_dist, source, nearmiss_r):
    """Reduce traced rays to (links, ambiguous).

    The pole column is ignored for rays launched from zeros, both for
    captures (the kernel already lets such rays pass through the pole's
    capture disc) and for near-miss accounting: only the pole's own ray can
    certify the single trajectory that terminates there.
    """
    links = set()
    for r in range(len(status)):
        if status[r] == backend.RAY_CAPTURED:
            i, j = int(source[r]), int(hit[r])
            if i == j:
                # a ray stopping on its own source is either a separatrix
                # loop or the continuation of a pole-terminated trajectory
                # after passing through the masked pole disc; neither is a
                # saddle connection, and every genuine connection is also
                # certified from its other endpoint
                continue
            links.add((min(i, j), max(i, j)))
    ambiguous = False
    for r in range(len(status)):
        for t in range(4):
            if t == int(source[r]):
                continue
            if t == _POLE and int(source[r]) != _POLE:
                continue
            if status[r] == backend.RAY_CAPTURED and int(hit[r]) == t:
                continue
            if min_dist[r, t] <= nearmiss_r:
                ambiguous = True
    return links, ambiguous


def _support_verdict(b, lam, zeros, links, cfg):
    """Apply the two-trajectory support criterion to a set of saddle links.

    The pattern requires exactly two links: one joining two distinct zeros
    and one joining the pole to the remaining zero.  On top of the pattern,
    the arcs must together carry unit mass: the same two-trajectory graph
    also appears for parameter values where the branch jump changes sign
    between the arcs, and there the unsigned masses add up to 1 plus twice
    the smaller one instead of 1, so no probability measure lives on the
    configuration and the value lies outside the limit support.
    """
    zz = [(i, j) for i, j in links if j < _POLE and i != j]
    zp = [(i, j) for i, j in links if j == _POLE]
    if len(links) != 2 or len(zz) != 1 or len(zp) != 1:
        return (), False
    (i, j), (k, _) = zz[0], zp[0]
    if k in (i, j):
        return (), False
    m_zz = float(_arc_mass(b, lam, zeros[i], zeros[j], cfg["mass_nodes"]))
    m_zp = float(_arc_mass(b, lam, 0.0 + 0.0j, zeros[k], cfg["mass_nodes"]))
    ok = abs(m_zz + m_zp - 1.0) <= cfg["mass_tol"]
    return (m_zz, m_zp), ok


def _links_to_connections(links) -> tuple:
    conns = tuple(sorted(links))
    return conns[:2] if len(conns) > 2 else conns


_TRACE_DEFAULTS = {
    "step_factor": 1e-3,
    "capture_factor": 5.0,
    "nearmiss_factor": 2.0,
    "arclength_factor": 6.0,
    "escape_factor": 2.5,
    "max_steps_cap": 200_000,
    "mass_tol": 0.02,
    "mass_nodes": 800,
    "capture_radius": None,
}


def _run_plan(plan):
    return backend.trace_rays(
        plan["pc"], plan["z0"], plan["d0"], plan["step"], plan["max_steps"],
        plan["targets"], plan["capture_r"], plan["escape_r"], plan["source"],
        plan["min_arc"], mask_target=_POLE,
    )


def _topology_once(b, lam, cfg):
    """Trace one lambda and return (zeros, links, masses, in_support, ambiguous).

    Returns None when the critical points collide and the value must be
    settled by perturbation.
    """
    plan, zeros, _ = _ray_plan(b, lam, cfg)
    if plan is None:
        return None
    status, hit, min_dist, _, _ = _run_plan(plan)
    links, ambiguous = _classify_rays(
        status, hit, min_dist, plan["source"], plan["nearmiss_r"]
    )
    masses, in_support = _support_verdict(b, lam, zeros, links, cfg)
    return zeros, links, masses, in_support, ambiguous


def trace_horizontal_trajectories(b: complex, lam: complex, **opts) -> TrajectoryTopology:
    """Trace the critical horizontal trajectories of -P(Theta)/Theta dTheta^2.

    Three rays leave each simple zero of P along the directions where the
    differential is real and positive, one ray leaves the simple pole at the
    origin.  Rays advance by fourth-order arclength steps (step 1e-3 of the
    critical-point span by default) and stop when captured within 5 steps of
    another critical point, when they leave the escape radius, or when the
    arclength budget runs out.  Rays missing a target by less than twice the
    capture radius mark the result ambiguous instead of contributing a link.

    A value lambda belongs to the limit support when exactly two saddle
    links appear, one joining two zeros and one joining the pole to the
    remaining zero, and the two arcs together carry unit measure
    (arc_masses summing to 1 within mass_tol).  The mass check matters: the
    bare two-link pattern also shows up along symmetry lines outside the
    support, where the unsigned arc masses add up to more than 1 and no
    probability measure fits the configuration.

    At a critical lambda the zeros of P collide; the verdict is then taken
    by majority over four small perturbations of lambda and the result is
    flagged degenerate.  Tolerances are exposed as keyword options
    (step_factor, capture_factor, nearmiss_factor, arclength_factor,
    escape_factor, max_steps_cap, mass_tol, mass_nodes, capture_radius;
    the last is an absolute floor for the capture radius, used by grid
    scans to match their pitch).
    """
    cfg = dict(_TRACE_DEFAULTS)
    unknown = set(opts) - set(cfg)
    if unknown:
        raise TypeError(f"unknown trace options: {sorted(unknown)}")
    cfg.update(opts)
    b = complex(b)
    lam = complex(lam)

    got = _topology_once(b, lam, cfg)
    if got is None:
        return _settle_degenerate(b, lam, cfg)
    zeros, links, masses, in_support, ambiguous = got
    return TrajectoryTopology(
        b=b, lam=lam, zeros=tuple(zeros), pole=0.0 + 0.0j,
        connections=_links_to_connections(links), arc_masses=tuple(masses),
        in_support=in_support, ambiguous=ambiguous or len(links) > 2,
        degenerate=False,
    )


def _settle_degenerate(b, lam, cfg) -> TrajectoryTopology:
    """Classify a critical lambda by voting over four perturbed directions."""
    zeros = _zeros_of_p(b, lam)
    span = max(np.abs(zeros)) + 1.0
    eps = 1e-4 * max(1.0, abs(lam), float(span))
    votes = []
    rep = ((), ())
    for direction in (1.0, 1.0j, -1.0, -1.0j):
        got = _topology_once(b, lam + eps * direction, cfg)
        if got is None:
            votes.append(False)
            continue
        _, links, masses, ins, _ = got
        votes.append(ins)
        if ins and rep == ((), ()):
            rep = (_links_to_connections(links), tuple(masses))
    in_support = sum(votes) >= 2
    return TrajectoryTopology(
        b=b, lam=lam, zeros=tuple(zeros), pole=0.0 + 0.0j,
        connections=rep[0] if in_support else (),
        arc_masses=rep[1] if in_support else (),
        in_support=in_support,
        ambiguous=len(set(votes)) > 1,
        degenerate=True,
    )


_PHASE_NODES = 320  # chord nodes for the scan's phase functions
_PAIRS = ((0, 1), (0, 2), (1, 2))


def _best_perm(zeros: np.ndarray, ref: np.ndarray) -> tuple:
    """Permutation placing each zero next to its reference counterpart."""
    best, best_cost = (0, 1, 2), math.inf
    for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        cost = float(np.sum(np.abs(zeros[list(perm)] - ref)))
        if cost < best_cost:
            best, best_cost = perm, cost
    return best


def _match_zeros(zeros: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Reorder zeros to follow the labelling of a nearby reference triple."""
    return zeros[list(_best_perm(zeros, ref))]


def _pair_phase(b, lam, pair, ref_zeros=None):
    """(Re S, |S|) for the chord integral between one labelled zero pair.

    On a support leg the arc joining the connected zero pair is a horizontal
    trajectory, so S there is purely imaginary: Re S changes sign across the
    leg and is a locally smooth level function whose zero set contains the
    support.  Which pair is connected varies from leg to leg, hence one
    channel per pair.  The sign of S is normalised to Im S >= 0, which is
    continuous wherever S stays away from the real axis; spurious flips at
    Im S = 0 crossings are weeded out by the residual check after bisection.
    Returns None when zeros collide or one lands on the pole.
    """
    zeros = _zeros_of_p(b, lam)
    if ref_zeros is not None:
        zeros = _match_zeros(zeros, ref_zeros)
    scale = max(1.0, float(np.abs(zeros).max()))
    gaps = np.abs(zeros[:, None] - zeros[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() < 1e-9 * scale or np.abs(zeros).min() < 1e-12 * scale:
        return None
    i, j = pair
    s = _chord_integral(b, lam, zeros[i], zeros[j], _PHASE_NODES)
    if s.imag < 0.0:
        s = -s
    return s.real, abs(s), zeros


def _bisect_phase_root(b, za, zb, pair, ref_zeros, ga, iters=36):
    """Bisect Re S = 0 for one pair channel along the segment za..zb."""
    ta, tb = 0.0, 1.0
    for _ in range(iters):
        tm = 0.5 * (ta + tb)
        got = _pair_phase(b, za + (zb - za) * tm, pair, ref_zeros)
        if got is None:
            return None
        gm = got[0]
        if gm == 0.0:
            ta = tb = tm
            break
        if (gm < 0.0) == (ga < 0.0):
            ta = tm
        else:
            tb = tm
    lam = za + (zb - za) * 0.5 * (ta + tb)
    got = _pair_phase(b, lam, pair, ref_zeros)
    if got is None or abs(got[0]) > 1e-6 * max(got[1], 1e-30):
        return None  # converged onto a jump of the level function, not a root
    return complex(lam)


def _march_to_critical(b, c, start, opts, box, t_stop=0.04):
    """Follow a phase-root locus from start toward the critical value c.

    Support legs terminate at critical values of the limit quadratic, where
    two zeros of P collide and the tracer loses resolution.  Marching the
    level set Re S = 0 along shrinking circles around c, keeping only
    trajectory-verified points, pins the leg end down to radius ~t_stop.
    The channel followed is the pair most nearly imaginary at the start,
    with zero labels carried along by nearest matching.  Returns the
    closest verified point, or None.
    """
    t = abs(start - c)
    if t <= t_stop:
        return None
    probes = [(_pair_phase(b, start, pair), pair) for pair in _PAIRS]
    probes = [(got, pair) for got, pair in probes if got is not None]
    if not probes:
        return None
    (g0, s0, ref), pair = min(probes, key=lambda e: abs(e[0][0]) / max(e[0][1], 1e-30))
    if abs(g0) > 0.05 * max(s0, 1e-30):
        return None  # start does not sit on any pair's level set
    phi = cmath.phase(start - c)
    re0, re1, im0, im1 = box
    best = None
    while t > t_stop + 1e-12:
        t = max(0.72 * t, t_stop)
        angles = phi + np.linspace(-0.45, 0.45, 10)
        vals = []
        for a in angles:
            got = _pair_phase(b, c + t * cmath.exp(1j * a), pair, ref)
            vals.append(math.nan if got is None else got[0])
        root = None
        for k in range(len(angles) - 1):
            ga, gb = vals[k], vals[k + 1]
            if math.isnan(ga) or math.isnan(gb) or (ga < 0.0) == (gb < 0.0):
                continue
            za = c + t * cmath.exp(1j * angles[k])
            zb = c + t * cmath.exp(1j * angles[k + 1])
            root = _bisect_phase_root(b, za, zb, pair, ref, ga)
            if root is not None:
                break
        if root is None:
            break
        if not (re0 <= root.real <= re1 and im0 <= root.imag <= im1):
            break
        topo = trace_horizontal_trajectories(b, root, **opts)
        if not (topo.in_support and not topo.ambiguous):
            break
        best = root
        phi = cmath.phase(root - c)
        got = _pair_phase(b, root, pair, ref)
        if got is None:
            break
        ref = got[2]
    return best


def support_scan(b: complex, region, grid, **opts) -> np.ndarray:
    """Points of the limit-measure support inside a rectangle.

    region is (re_min, re_max, im_min, im_max) and grid an integer or an
    (nx, ny) pair.  The support is a union of analytic arcs, so instead of
    classifying grid points (which almost never lie on a measure-zero set)
    the scan treats the grid as cells: the level function Re S from
    _chord_phase is evaluated at every corner, each edge with a sign change
    is bisected onto the level set, and every candidate root is verified
    with the full trajectory tracer, which at on-locus points runs at its
    sharpest.  Leg ends sit at critical values of the limit quadratic where
    the tracer degrades, so verified arcs are extended toward each critical
    value by a circle-marching refinement.  Grid corners that land exactly
    on collided critical points go through the perturbed classification of
    trace_horizontal_trajectories.  Returns verified support points sorted
    by (real, imaginary); ambiguous points are excluded.
    """
    cfg = dict(_TRACE_DEFAULTS)
    unknown = set(opts) - set(cfg)
    if unknown:
        raise TypeError(f"unknown trace options: {sorted(unknown)}")
    b = complex(b)
    re0, re1, im0, im1 = (float(v) for v in region)
    if isinstance(grid, int):
        nx = ny = grid
    else:
        nx, ny = (int(v) for v in grid)
    if nx < 1 or ny < 1:
        raise ValueError("grid must be at least 1x1")
    res = np.linspace(re0, re1, nx)
    ims = np.linspace(im0, im1, ny)
    corners = res[:, None] + 1j * ims[None, :]

    g = np.full((nx, ny, 3), np.nan)
    zs = np.zeros((nx, ny, 3), dtype=np.complex128)
    alive = np.zeros((nx, ny), dtype=bool)
    degenerate = []
    for ix in range(nx):
        for iy in range(ny):
            lam = complex(corners[ix, iy])
            got = None
            for ch, pair in enumerate(_PAIRS):
                got = _pair_phase(b, lam, pair)
                if got is None:
                    break
                g[ix, iy, ch] = got[0]
            if got is None:
                degenerate.append(lam)
            else:
                zs[ix, iy] = got[2]
                alive[ix, iy] = True

    candidates = []
    for ix, iy, ch in zip(*np.nonzero(alive[:, :, None] & (g == 0.0))):
        candidates.append(complex(corners[ix, iy]))
    for axis in (0, 1):
        da, db = ((1, 0) if axis == 0 else (0, 1))
        for ix in range(nx - da):
            for iy in range(ny - db):
                jx, jy = ix + da, iy + db
                if not (alive[ix, iy] and alive[jx, jy]):
                    continue
                perm = _best_perm(zs[jx, jy], zs[ix, iy])
                za, zb = complex(corners[ix, iy]), complex(corners[jx, jy])
                for ch, (i, j) in enumerate(_PAIRS):
                    mapped = _PAIRS.index(tuple(sorted((perm[i], perm[j]))))
                    ga, gb = float(g[ix, iy, ch]), float(g[jx, jy, mapped])
                    if ga == 0.0 or gb == 0.0 or (ga < 0.0) == (gb < 0.0):
                        continue
                    root = _bisect_phase_root(b, za, zb, (i, j), zs[ix, iy], ga)
                    if root is not None:
                        candidates.append(root)

    hits = []
    for lam in candidates:
        topo = trace_horizontal_trajectories(b, lam, **opts)
        if topo.in_support and not topo.ambiguous:
            hits.append(lam)
    for lam in degenerate:
        topo = trace_horizontal_trajectories(b, lam, **opts)
        if topo.in_support and not topo.ambiguous:
            hits.append(lam)

    if hits:
        box = (re0, re1, im0, im1)
        pts = np.asarray(hits)
        for c in foci(b):
            if not (re0 - 0.5 <= c.real <= re1 + 0.5 and im0 - 0.5 <= c.imag <= im1 + 0.5):
                continue
            dist = np.abs(pts - c)
            near = int(np.argmin(dist))
            if dist[near] < 0.05 or dist[near] > 1.0:
                continue
            refined = _march_to_critical(b, complex(c), complex(pts[near]), opts, box)
            if refined is not None:
                hits.append(refined)

    out = np.asarray(sorted(set(hits), key=lambda z: (z.real, z.imag)), dtype=np.complex128)
    return out


# ---------------------------------------------------------------------------
# empirical check of the limit quadratic for eigenpolynomial root measures


@dataclass(frozen=True)
class LimitMeasureProbe:
    """Root cloud of one eigenpolynomial in the scaled variable.

    scaled_roots holds the m roots of p_m(sqrt(m)*Theta), i.e. each root of
    the eigenpolynomial divided by sqrt(m); lam is the scaled eigenvalue the
    branch was built from.  residual_stats is filled by
    omega_quadratic_residual when requested.
    """

    lam: complex
    scaled_roots: np.ndarray
    residual_stats: dict | None = None


def limit_measure_probe(m: int, b: complex, scaled_eigenvalue: complex) -> LimitMeasureProbe:
    """Build the scaled root cloud of the eigenpolynomial for one branch.

    b is the scaled parameter; scaled_eigenvalue must match an eigenvalue of
    the scaled family to the eigenpolynomial validation tolerance.
    """
    if m < 1:
        raise ValueError("need m >= 1 for a nonempty root cloud")
    b = complex(b)
    lam_scaled = complex(scaled_eigenvalue)
    root_m = math.sqrt(m)
    bu = b * root_m
    poly = spectrum.eigenpolynomial(m, bu, lam_scaled * float(m) ** 1.5)
    # root finding stays in multiprecision end to end: the coefficient
    # magnitudes span enough decades at large m that double rounding,
    # correct though it is per coefficient, moves the outer roots
    # macroscopically.  The double picture still serves as a warm start.
    warm = polycore.aberth_roots_lenient(poly.coeffs)
    if len(warm) != m:
        warm = None
    lam_best = poly.eigenvalue
    roots, _ = polycore.mp_roots(
        lambda prec: spectrum.eigenpolynomial_coeffs_mp(m, bu, lam_best, prec),
        m,
        warm=warm,
        rel_tol=1e-12,
    )
    return LimitMeasureProbe(lam=lam_scaled, scaled_roots=roots / root_m)


def omega_quadratic_residual(b: complex, lam: complex, probe: LimitMeasureProbe,
                             test_points) -> dict:
    """Residual of the limit quadratic on an empirical root measure.

    With C the Cauchy transform of the uniform measure on the probe's scaled
    roots, evaluates |Theta*C^2 - Theta*(Theta+b)*C + Theta + lam/4| at the
    given test points, which the caller keeps away from the root cloud.
    Returns the residual array together with median, mean and max.
    """
    b = complex(b)
    lam = complex(lam)
    pts = np.asarray(test_points, dtype=np.complex128).ravel()
    if pts.size == 0:
        raise ValueError("need at least one test point")
    vals = np.empty(pts.size, dtype=np.float64)
    for i, z in enumerate(pts):
        cz = spectrum.empirical_cauchy(probe.scaled_roots, z)
        vals[i] = abs(z * cz * cz - z * (z + b) * cz + z + 0.25 * lam)
    return {
        "values": vals,
        "median": float(np.median(vals)),
        "mean": float(np.mean(vals)),
        "max": float(np.max(vals)),
    }
