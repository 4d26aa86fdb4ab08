"""Hot numeric loops, jitted with numba when available.

Everything here is written as plain loops over ndarrays so the functions run
(slowly) without numba as well. Units are cells; angles are degrees.
"""
from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


# 8-neighborhood ring in counter-clockwise order; consecutive entries form
# the triangles used by the two-point travel-time update.
_RING = np.array(
    [(0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1)],
    dtype=np.int64,
)


@njit(cache=True)
def _heap_less(t1, r1, c1, t2, r2, c2):
    if t1 != t2:
        return t1 < t2
    if r1 != r2:
        return r1 < r2
    return c1 < c2


@njit(cache=True)
def _heap_push(ht, hr, hc, n, t, r, c):
    i = n
    ht[i] = t
    hr[i] = r
    hc[i] = c
    while i > 0:
        p = (i - 1) // 2
        if _heap_less(ht[i], hr[i], hc[i], ht[p], hr[p], hc[p]):
            ht[i], ht[p] = ht[p], ht[i]
            hr[i], hr[p] = hr[p], hr[i]
            hc[i], hc[p] = hc[p], hc[i]
            i = p
        else:
            break
    return n + 1


@njit(cache=True)
def _heap_pop(ht, hr, hc, n):
    t, r, c = ht[0], hr[0], hc[0]
    n -= 1
    ht[0], hr[0], hc[0] = ht[n], hr[n], hc[n]
    i = 0
    while True:
        l = 2 * i + 1
        rgt = l + 1
        small = i
        if l < n and _heap_less(ht[l], hr[l], hc[l], ht[small], hr[small], hc[small]):
            small = l
        if rgt < n and _heap_less(ht[rgt], hr[rgt], hc[rgt], ht[small], hr[small], hc[small]):
            small = rgt
        if small == i:
            break
        ht[i], ht[small] = ht[small], ht[i]
        hr[i], hr[small] = hr[small], hr[i]
        hc[i], hc[small] = hc[small], hc[i]
        i = small
    return t, r, c, n


@njit(cache=True)
def _two_point(t1, p1r, p1c, t2, p2r, p2c, xr, xc, f):
    """Planar-front update from two support points (Godunov, first order).

    Minimizes (1-lam)*t1 + lam*t2 + |x - P(lam)| / f over lam in [0, 1] for
    P(lam) on the segment p1->p2, rejecting non-causal interior minima.
    """
    d1 = math.hypot(xr - p1r, xc - p1c)
    d2 = math.hypot(xr - p2r, xc - p2c)
    best = t1 + d1 / f
    alt = t2 + d2 / f
    if alt < best:
        best = alt
    u = t2 - t1
    er = p2r - p1r
    ec = p2c - p1c
    mr = xr - p1r
    mc = xc - p1c
    ee = er * er + ec * ec
    em = er * mr + ec * mc
    mm = mr * mr + mc * mc
    fu2 = f * f * u * u
    a = ee * (ee - fu2)
    b = -2.0 * em * (ee - fu2)
    cc = em * em - fu2 * mm
    if abs(a) > 1e-14:
        disc = b * b - 4.0 * a * cc
        if disc >= 0.0:
            sq = math.sqrt(disc)
            for sgn in (-1.0, 1.0):
                lam = (-b + sgn * sq) / (2.0 * a)
                if 0.0 < lam < 1.0:
                    g2 = mm - 2.0 * lam * em + lam * lam * ee
                    if g2 > 0.0:
                        cand = t1 + lam * u + math.sqrt(g2) / f
                        lo = t1 if t1 > t2 else t2
                        if cand >= lo - 1e-12 and cand < best:
                            best = cand
    return best


@njit(cache=True)
def fmm_solve(speed, seed_r, seed_c):
    """First-order upwind fast-marching solve of |grad T| * speed = 1.

    speed <= 0 marks cells outside the domain. Returns (T, order) where
    order[r, c] is the finalization index (-1 when never reached). Heap ties
    break on (time, row, col) so results are bit-reproducible.
    """
    h, w = speed.shape
    T = np.full((h, w), np.inf)
    order = np.full((h, w), -1, dtype=np.int64)
    state = np.zeros((h, w), dtype=np.int8)  # 0 far, 1 narrow, 2 known
    cap = h * w * 8 + seed_r.shape[0] + 1
    ht = np.empty(cap, dtype=np.float64)
    hr = np.empty(cap, dtype=np.int64)
    hc = np.empty(cap, dtype=np.int64)
    n = 0
    for i in range(seed_r.shape[0]):
        r, c = seed_r[i], seed_c[i]
        if T[r, c] > 0.0:
            T[r, c] = 0.0
            state[r, c] = 1
            n = _heap_push(ht, hr, hc, n, 0.0, r, c)
    count = 0
    while n > 0:
        t, r, c, n = _heap_pop(ht, hr, hc, n)
        if state[r, c] == 2:
            continue
        state[r, c] = 2
        order[r, c] = count
        count += 1
        for k in range(8):
            nr = r + _RING[k, 0]
            nc = c + _RING[k, 1]
            if nr < 0 or nr >= h or nc < 0 or nc >= w:
                continue
            if state[nr, nc] == 2 or speed[nr, nc] <= 0.0:
                continue
            f = speed[nr, nc]
            best = T[nr, nc]
            for j in range(8):
                a1r = nr + _RING[j, 0]
                a1c = nc + _RING[j, 1]
                j2 = (j + 1) % 8
                a2r = nr + _RING[j2, 0]
                a2c = nc + _RING[j2, 1]
                ok1 = 0 <= a1r < h and 0 <= a1c < w and state[a1r, a1c] == 2
                ok2 = 0 <= a2r < h and 0 <= a2c < w and state[a2r, a2c] == 2
                if ok1 and ok2:
                    cand = _two_point(
                        T[a1r, a1c], a1r, a1c, T[a2r, a2c], a2r, a2c, nr, nc, f
                    )
                elif ok1:
                    cand = T[a1r, a1c] + math.hypot(nr - a1r, nc - a1c) / f
                elif ok2:
                    cand = T[a2r, a2c] + math.hypot(nr - a2r, nc - a2c) / f
                else:
                    continue
                if cand < best:
                    best = cand
            if best < T[nr, nc] - 1e-12:
                T[nr, nc] = best
                state[nr, nc] = 1
                n = _heap_push(ht, hr, hc, n, best, nr, nc)
    return T, order


@njit(cache=True)
def _sample_tt(T, r, c):
    """Bilinear sample of T; infinite corners are bent steeply uphill so the
    descent direction always points back into the solved domain."""
    h, w = T.shape
    if r < 0.0:
        r = 0.0
    if r > h - 1.0:
        r = h - 1.0
    if c < 0.0:
        c = 0.0
    if c > w - 1.0:
        c = w - 1.0
    r0 = int(math.floor(r))
    c0 = int(math.floor(c))
    r1 = r0 + 1 if r0 + 1 < h else r0
    c1 = c0 + 1 if c0 + 1 < w else c0
    fr = r - r0
    fc = c - c0
    v00, v01, v10, v11 = T[r0, c0], T[r0, c1], T[r1, c0], T[r1, c1]
    vmin = np.inf
    for v in (v00, v01, v10, v11):
        if v < vmin:
            vmin = v
    if not np.isfinite(vmin):
        return np.inf
    # Infinite corners clamp to the lowest finite corner: descent through
    # one-cell pinches then stays monotone instead of bumping over a cap.
    cap = vmin
    if not np.isfinite(v00):
        v00 = cap
    if not np.isfinite(v01):
        v01 = cap
    if not np.isfinite(v10):
        v10 = cap
    if not np.isfinite(v11):
        v11 = cap
    top = v00 * (1.0 - fc) + v01 * fc
    bot = v10 * (1.0 - fc) + v11 * fc
    return top * (1.0 - fr) + bot * fr


@njit(cache=True)
def backtrack_path(T, start_r, start_c, step, seed_r, seed_c, max_iters):
    """Descend -grad T from the start point until within one cell of a seed.

    Moves only to points whose interpolated T strictly decreases: first a
    gradient step, then probe steps toward neighboring cells in ascending
    cell-time order. The returned samples therefore have strictly decreasing
    travel time. Stalls are reported, never silently truncated.

    Returns (path, length, status); status 0 = reached the seed set,
    1 = stagnated before reaching it, 2 = start outside the solved domain.
    """
    h, w = T.shape
    path = np.empty((max_iters + 1, 2), dtype=np.float64)
    pr, pc = start_r, start_c
    path[0, 0] = pr
    path[0, 1] = pc
    npts = 1
    if not np.isfinite(_sample_tt(T, pr, pc)):
        return path, npts, 2
    for _ in range(max_iters):
        # Termination: within 1 cell of any seed.
        for i in range(seed_r.shape[0]):
            if math.hypot(pr - seed_r[i], pc - seed_c[i]) <= 1.0:
                return path, npts, 0
        tcur = _sample_tt(T, pr, pc)
        gr = (_sample_tt(T, pr + 1.0, pc) - _sample_tt(T, pr - 1.0, pc)) * 0.5
        gc = (_sample_tt(T, pr, pc + 1.0) - _sample_tt(T, pr, pc - 1.0)) * 0.5
        gnorm = math.hypot(gr, gc)
        moved = False
        if gnorm >= 1e-6:
            nr = pr - step * gr / gnorm
            nc = pc - step * gc / gnorm
            if nr < 0.0:
                nr = 0.0
            if nr > h - 1.0:
                nr = h - 1.0
            if nc < 0.0:
                nc = 0.0
            if nc > w - 1.0:
                nc = w - 1.0
            if _sample_tt(T, nr, nc) < tcur - 1e-12:
                pr, pc = nr, nc
                moved = True
        if not moved:
            # Probe steps toward neighbor cells, nearest arrival time first;
            # accept the first that still decreases the interpolated time.
            cr = int(round(pr))
            cc_ = int(round(pc))
            cand_t = np.empty(8, dtype=np.float64)
            cand_r = np.empty(8, dtype=np.int64)
            cand_c = np.empty(8, dtype=np.int64)
            n_cand = 0
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    qr, qc = cr + dr, cc_ + dc
                    if 0 <= qr < h and 0 <= qc < w and np.isfinite(T[qr, qc]):
                        cand_t[n_cand] = T[qr, qc]
                        cand_r[n_cand] = qr
                        cand_c[n_cand] = qc
                        n_cand += 1
            for i in range(1, n_cand):  # insertion sort by cell time
                kt, kr, kc = cand_t[i], cand_r[i], cand_c[i]
                j = i - 1
                while j >= 0 and cand_t[j] > kt:
                    cand_t[j + 1] = cand_t[j]
                    cand_r[j + 1] = cand_r[j]
                    cand_c[j + 1] = cand_c[j]
                    j -= 1
                cand_t[j + 1] = kt
                cand_r[j + 1] = kr
                cand_c[j + 1] = kc
            for i in range(n_cand):
                dr_ = cand_r[i] - pr
                dc_ = cand_c[i] - pc
                dn = math.hypot(dr_, dc_)
                if dn < 1e-9:
                    continue
                frac = step / dn if dn > step else 1.0
                nr = pr + dr_ * frac
                nc = pc + dc_ * frac
                if _sample_tt(T, nr, nc) < tcur - 1e-12:
                    pr, pc = nr, nc
                    moved = True
                    break
            if not moved:
                return path, npts, 1
        path[npts, 0] = pr
        path[npts, 1] = pc
        npts += 1
    return path, npts, 1


@njit(cache=True)
def visible_mask(labels, pos_r, pos_c, heading_deg, fov_deg, range_cells, obstacle_label):
    """Cells whose centers lie in the forward sector and are not occluded.

    A cell is visible when its center is within `range_cells`, its bearing is
    within +-fov/2 of the heading, and no obstacle cell other than the target
    itself lies on the line of sight. Obstacle cells themselves are visible.
    """
    h, w = labels.shape
    out = np.zeros((h, w), dtype=np.bool_)
    half = fov_deg / 2.0
    rmin = max(0, int(math.floor(pos_r - range_cells)))
    rmax = min(h - 1, int(math.ceil(pos_r + range_cells)))
    cmin = max(0, int(math.floor(pos_c - range_cells)))
    cmax = min(w - 1, int(math.ceil(pos_c + range_cells)))
    for r in range(rmin, rmax + 1):
        for c in range(cmin, cmax + 1):
            dr = r - pos_r
            dc = c - pos_c
            d = math.hypot(dr, dc)
            if d > range_cells:
                continue
            if d > 1e-9:
                ang = math.degrees(math.atan2(dr, dc)) % 360.0
                adiff = abs(ang - heading_deg % 360.0)
                if adiff > 180.0:
                    adiff = 360.0 - adiff
                if adiff > half:
                    continue
                # Line-of-sight sampling; the target cell never occludes itself.
                blocked = False
                nsteps = int(d / 0.25) + 1
                for s in range(1, nsteps):
                    t = s * 0.25
                    if t >= d - 0.5:
                        break
                    sr = int(round(pos_r + dr * t / d))
                    sc = int(round(pos_c + dc * t / d))
                    if (sr != r or sc != c) and labels[sr, sc] == obstacle_label:
                        blocked = True
                        break
                if blocked:
                    continue
            out[r, c] = True
    return out


@njit(cache=True)
def _point_blocked(labels, sr, sc, obstacle_label):
    """A point is blocked when every cell containing it (boundary tolerance
    0.05) is an obstacle or out of bounds; touching a free-cell corner or
    sliding along a wall face is passable for a point robot."""
    h, w = labels.shape
    tau = 0.05
    rlo = int(round(sr - tau))
    rhi = int(round(sr + tau))
    clo = int(round(sc - tau))
    chi = int(round(sc + tau))
    for r in range(rlo, rhi + 1):
        for c in range(clo, chi + 1):
            if 0 <= r < h and 0 <= c < w and labels[r, c] != obstacle_label:
                return False
    return True


@njit(cache=True)
def segment_blocked(labels, r0, c0, r1, c1, obstacle_label):
    """True when the straight segment crosses obstacle interiors or would end
    in a cell the robot cannot occupy. Diagonal corner contacts between two
    free cells are passable, matching the planner's 8-connectivity."""
    h, w = labels.shape
    ir = int(round(r1))
    ic = int(round(c1))
    if ir < 0 or ir >= h or ic < 0 or ic >= w:
        return True
    if labels[ir, ic] == obstacle_label:
        return True
    d = math.hypot(r1 - r0, c1 - c0)
    nsteps = int(d / 0.2) + 2
    for s in range(nsteps + 1):
        t = min(1.0, s / nsteps)
        sr = r0 + (r1 - r0) * t
        sc = c0 + (c1 - c0) * t
        if _point_blocked(labels, sr, sc, obstacle_label):
            return True
    return False
