"""NumPy implementations of the numerical hot kernels.

This module is the reference backend: the compiled extension in
``_kernels.pyx`` implements the same contracts loop-for-loop.  Everything here
is deterministic, allocation-light and vectorised where the batch dimension
allows it.  See ``backend.py`` for how one of the two gets selected at import.
"""

from __future__ import annotations

import numpy as np

IMPL = "python"

# Ray tracer status codes (shared with the compiled backend).
RAY_MAXED = 0
RAY_CAPTURED = 1
RAY_ESCAPED = 2


def horner_with_deriv(coeffs: np.ndarray, z: np.ndarray):
    """Evaluate p, p' and the error scale sum_k |c_k||z|^k at each z.

    ``coeffs`` ascending.  Returns (p, dp, scale) arrays.
    """
    z = np.asarray(z, dtype=np.complex128)
    p = np.full_like(z, coeffs[-1])
    dp = np.zeros_like(z)
    scale = np.full(z.shape, abs(coeffs[-1]), dtype=np.float64)
    az = np.abs(z)
    for k in range(len(coeffs) - 2, -1, -1):
        dp = dp * z + p
        p = p * z + coeffs[k]
        scale = scale * az + abs(coeffs[k])
    return p, dp, scale


def aberth_iterate(coeffs, roots0, tol: float, max_iter: int):
    """Ehrlich-Aberth simultaneous root iteration, double precision.

    coeffs: ascending complex coefficients, leading entry nonzero, degree >= 1.
    roots0: initial root estimates (length = degree).
    Returns (roots, rel_residuals, iterations, converged) where
    rel_residuals[i] = |p(z_i)| / sum_k |c_k||z_i|^k.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    z = np.array(roots0, dtype=np.complex128, copy=True)
    n = z.size
    if n == 0:
        return z, np.zeros(0), 0, True
    done = np.zeros(n, dtype=bool)
    iterations = 0
    tiny = np.finfo(np.float64).tiny
    for iterations in range(1, max_iter + 1):
        p, dp, scale = horner_with_deriv(coeffs, z)
        resid = np.abs(p) / np.maximum(scale, tiny)
        done |= resid <= tol
        if done.all():
            break
        act = ~done
        dpa = dp[act]
        # dead derivative: nudge off the stationary point instead of dividing by 0
        bad = dpa == 0
        if bad.any():
            dpa = dpa.copy()
            dpa[bad] = 1e-30
        newton = p[act] / dpa
        diff = z[act, None] - z[None, :]
        # exclude self-terms: positions of active rows within the full set
        idx = np.flatnonzero(act)
        diff[np.arange(idx.size), idx] = np.inf
        diff[diff == 0] = np.inf  # coincident estimates: drop the repulsion term
        ssum = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - newton * ssum
        small = np.abs(denom) < 1e-12
        denom = np.where(small, 1.0, denom)
        w = newton / denom
        z[act] -= w
        done[idx] |= np.abs(w) <= 4e-16 * (np.abs(z[idx]) + 1e-300)
        if done.all():
            break
    p, _, scale = horner_with_deriv(coeffs, z)
    resid = np.abs(p) / np.maximum(scale, tiny)
    return z, resid, iterations, bool(np.all(resid <= tol * 64) or done.all())


def charpoly_scaled(m: int, b: complex) -> np.ndarray:
    """Ascending coefficients of det(x I - Mtilde_m(b)), the scaled matrix.

    Three-term recurrence over the principal minors; monic of degree m+1.
    Coefficient magnitudes stay within double range because the scaled matrix
    has O(1) entries.
    """
    b = complex(b)
    fm = float(m)
    prev2 = np.zeros(m + 2, dtype=np.complex128)  # minor i-2
    prev = np.zeros(m + 2, dtype=np.complex128)  # minor i-1
    prev[0] = 1.0
    cur = np.zeros(m + 2, dtype=np.complex128)
    for i in range(1, m + 2):
        a = (4 * i - 3) * b / fm
        c = 4.0 * (2 * i - 2) * (2 * i - 3) * (m + 2 - i) / fm**3
        cur[:] = 0.0
        cur[1 : i + 1] = prev[:i]
        cur[:i] -= a * prev[:i]
        if i >= 2:
            cur[: i - 1] -= c * prev2[: i - 1]
        prev2, prev = prev, prev2
        prev[:] = cur
    return cur.copy()


def charpoly_unscaled(m: int, b: complex) -> np.ndarray:
    """Ascending coefficients of det(x I - M_m(b)).

    Raw recurrence in doubles; coefficients overflow for m beyond ~60, which
    is why eigenvalue routines go through ``charpoly_scaled`` instead.
    """
    b = complex(b)
    prev2 = np.zeros(m + 2, dtype=np.complex128)
    prev = np.zeros(m + 2, dtype=np.complex128)
    prev[0] = 1.0
    cur = np.zeros(m + 2, dtype=np.complex128)
    for i in range(1, m + 2):
        a = (4 * i - 3) * b
        c = 4.0 * (2 * i - 2) * (2 * i - 3) * (m + 2 - i)
        cur[:] = 0.0
        cur[1 : i + 1] = prev[:i]
        cur[:i] -= a * prev[:i]
        if i >= 2:
            cur[: i - 1] -= c * prev2[: i - 1]
        prev2, prev = prev, prev2
        prev[:] = cur
    return cur.copy()


def _direction(pc: np.ndarray, z: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Unit direction of the horizontal line field of -P/theta dTheta^2.

    pc: (N,4) ascending cubic coefficients of P; z, ref: (N,) complex.
    The branch (+/-) is chosen to align with ref.
    """
    p = ((pc[:, 3] * z + pc[:, 2]) * z + pc[:, 1]) * z + pc[:, 0]
    q = -p / z
    s = np.sqrt(q)
    mag = np.abs(s)
    mag = np.where(mag == 0.0, 1.0, mag)
    u = np.conj(s) / mag
    flip = np.real(u * np.conj(ref)) < 0.0
    return np.where(flip, -u, u)


def trace_rays(pc, z0, d0, step, max_steps, targets, capture_r, escape_r, source, min_arc,
               mask_target=-1):
    """Trace horizontal-trajectory rays of Psi = -(P/Theta) dTheta^2 in batch.

    pc:        (N,4) ascending coefficients of the cubic P per ray
    z0, d0:    (N,) launch points and unit launch directions
    step:      (N,) arclength step
    targets:   (N,4) critical points to watch (3 zeros + the pole at 0)
    capture_r: (N,) capture radius per ray
    escape_r:  (N,) give-up radius
    source:    (N,) int index of the originating target (self-capture is
               ignored until the arclength exceeds min_arc)
    mask_target: optional target index whose capture disc is transparent to
               every ray not launched from it.  A simple pole terminates
               exactly one trajectory, so rays from other critical points
               that graze it must pass through rather than stop.
    Returns (status, hit, min_dist, arclen, z_end) with status in
    {RAY_MAXED, RAY_CAPTURED, RAY_ESCAPED}.
    """
    pc = np.ascontiguousarray(pc, dtype=np.complex128)
    z = np.array(z0, dtype=np.complex128, copy=True)
    d = np.array(d0, dtype=np.complex128, copy=True)
    step = np.asarray(step, dtype=np.float64)
    targets = np.ascontiguousarray(targets, dtype=np.complex128)
    capture_r = np.asarray(capture_r, dtype=np.float64)
    escape_r = np.asarray(escape_r, dtype=np.float64)
    source = np.asarray(source, dtype=np.int64)
    min_arc = np.asarray(min_arc, dtype=np.float64)

    n = z.size
    status = np.full(n, RAY_MAXED, dtype=np.int8)
    hit = np.full(n, -1, dtype=np.int64)
    min_dist = np.full((n, 4), np.inf, dtype=np.float64)
    arclen = np.zeros(n, dtype=np.float64)
    alive = np.ones(n, dtype=bool)

    for _ in range(max_steps):
        ia = np.flatnonzero(alive)
        if ia.size == 0:
            break
        za, da, h = z[ia], d[ia], step[ia]
        pca = pc[ia]
        k1 = _direction(pca, za, da)
        k2 = _direction(pca, za + 0.5 * h * k1, k1)
        k3 = _direction(pca, za + 0.5 * h * k2, k2)
        k4 = _direction(pca, za + h * k3, k3)
        dn = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        mag = np.abs(dn)
        mag = np.where(mag == 0.0, 1.0, mag)
        dn /= mag
        za = za + h * dn
        z[ia] = za
        d[ia] = dn
        arclen[ia] += h

        dist = np.abs(za[:, None] - targets[ia])
        min_dist[ia] = np.minimum(min_dist[ia], dist)
        allow = np.ones_like(dist, dtype=bool)
        early = arclen[ia] < min_arc[ia]
        allow[np.arange(ia.size), source[ia]] = ~early
        if mask_target >= 0:
            allow[source[ia] != mask_target, mask_target] = False
        captured = (dist <= capture_r[ia, None]) & allow
        cap_any = captured.any(axis=1)
        if cap_any.any():
            rows = np.flatnonzero(cap_any)
            which = np.argmax(captured[rows], axis=1)
            gi = ia[rows]
            status[gi] = RAY_CAPTURED
            hit[gi] = which
            alive[gi] = False
        esc = np.abs(za) > escape_r[ia]
        esc &= ~cap_any
        if esc.any():
            gi = ia[np.flatnonzero(esc)]
            status[gi] = RAY_ESCAPED
            alive[gi] = False
    return status, hit, min_dist, arclen, z
