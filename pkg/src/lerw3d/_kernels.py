"""Compiled inner loops.

Everything here works in integer lattice units. Domains are passed as a small
integer descriptor plus an optional dense mask (see ``lattice.Domain.kernel_spec``):

    dint = [kind, a0, a1, a2, b0, b1, b2, r2max]
    kind -1: unbounded, 0: ball (center a, |x-a|^2 <= r2max),
    kind  1: box (lo a, hi b, closed), 2: mask (origin a, mask[x-a] != 0)

Point sets are open-addressed hash tables keyed on packed coordinates
(21 bits per axis, two's complement); -1 marks an empty slot.
"""
import numpy as np
from numba import njit

MASK21 = (1 << 21) - 1
COORD_LIMIT = 1 << 20
EMPTY = -1
PAD = -(1 << 40)

DX = np.array([1, -1, 0, 0, 0, 0], dtype=np.int64)
DY = np.array([0, 0, 1, -1, 0, 0], dtype=np.int64)
DZ = np.array([0, 0, 0, 0, 1, -1], dtype=np.int64)


@njit(cache=True, inline="always")
def pack(x, y, z):
    return (x & MASK21) | ((y & MASK21) << 21) | ((z & MASK21) << 42)


@njit(cache=True, inline="always")
def _slot(key, mask):
    h = np.uint64(key)
    h = (h ^ (h >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    h = (h ^ (h >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    h = h ^ (h >> np.uint64(31))
    return np.int64(h & np.uint64(mask))


@njit(cache=True, inline="always")
def inside(dint, mask, x, y, z):
    kind = dint[0]
    if kind == 0:
        dx = x - dint[1]
        dy = y - dint[2]
        dz = z - dint[3]
        return dx * dx + dy * dy + dz * dz <= dint[7]
    if kind == 1:
        return (dint[1] <= x <= dint[4]) and (dint[2] <= y <= dint[5]) and (dint[3] <= z <= dint[6])
    if kind == 2:
        i = x - dint[1]
        j = y - dint[2]
        k = z - dint[3]
        if i < 0 or j < 0 or k < 0:
            return False
        if i >= mask.shape[0] or j >= mask.shape[1] or k >= mask.shape[2]:
            return False
        return mask[i, j, k] != 0
    return True


@njit(cache=True)
def _table_size(n):
    size = 1024
    while size < 4 * n:
        size *= 2
    return size


@njit(cache=True)
def table_get(keys, vals, key):
    mask = keys.size - 1
    h = _slot(key, mask)
    while True:
        k = keys[h]
        if k == key:
            return vals[h]
        if k == EMPTY:
            return -1
        h = (h + 1) & mask


@njit(cache=True)
def build_index(points):
    """Hash table mapping each point to its row index (last row wins)."""
    n = points.shape[0]
    size = _table_size(n)
    keys = np.full(size, EMPTY, dtype=np.int64)
    vals = np.zeros(size, dtype=np.int64)
    mask = size - 1
    for i in range(n):
        key = pack(points[i, 0], points[i, 1], points[i, 2])
        h = _slot(key, mask)
        while keys[h] != EMPTY and keys[h] != key:
            h = (h + 1) & mask
        keys[h] = key
        vals[h] = i
    return keys, vals


# ---------------------------------------------------------------------------
# streaming loop erasure: one step of the forward eraser
# ---------------------------------------------------------------------------

@njit(cache=True)
def le_init(x, y, z):
    """State of the forward eraser holding the single point (x, y, z).

    The table interleaves keys and path indices (slot h at 2h, 2h + 1), which
    keeps each probe to one cache line.
    """
    path = np.empty((256, 3), dtype=np.int64)
    pkeys = np.empty(256, dtype=np.int64)
    tab = np.full(2 * 512, EMPTY, dtype=np.int64)
    key = pack(x, y, z)
    path[0, 0] = x
    path[0, 1] = y
    path[0, 2] = z
    pkeys[0] = key
    h = _slot(key, 511)
    tab[2 * h] = key
    tab[2 * h + 1] = 0
    return path, pkeys, 1, tab, 1


@njit(cache=True)
def _rehash(pkeys, length):
    size = _table_size(length)
    tab = np.full(2 * size, EMPTY, dtype=np.int64)
    mask = size - 1
    for i in range(length):
        key = pkeys[i]
        h = _slot(key, mask)
        while tab[2 * h] != EMPTY:
            h = (h + 1) & mask
        tab[2 * h] = key
        tab[2 * h + 1] = i
    return tab, length


@njit(cache=True)
def le_step(x, y, z, path, pkeys, length, tab):
    """Append (x, y, z) to the erased path, cutting the loop if it is a revisit.

    Returns the new length, negated when a fresh table slot was taken (the
    caller counts those and must call ``_rehash`` once ``4 * used > tab.size``).
    A single int return keeps the call cheap inside hot loops. The caller
    guarantees spare capacity in ``path``. Table entries are never deleted;
    an entry is live iff its stored index is below ``length`` and the path key
    at that index matches.
    """
    key = pack(x, y, z)
    mask = tab.size // 2 - 1
    h = _slot(key, mask)
    found = -1
    while True:
        k = tab[2 * h]
        if k == key:
            idx = tab[2 * h + 1]
            if idx < length and pkeys[idx] == key:
                found = idx
            break
        if k == EMPTY:
            break
        h = (h + 1) & mask
    if found >= 0:
        return found + 1
    path[length, 0] = x
    path[length, 1] = y
    path[length, 2] = z
    pkeys[length] = key
    fresh = tab[2 * h] != key
    tab[2 * h] = key
    tab[2 * h + 1] = length
    return -(length + 1) if fresh else length + 1


@njit(cache=True)
def _grow(path, pkeys, length):
    newp = np.empty((2 * path.shape[0], 3), dtype=np.int64)
    newp[:length] = path[:length]
    newk = np.empty(2 * path.shape[0], dtype=np.int64)
    newk[:length] = pkeys[:length]
    return newp, newk


@njit(cache=True)
def le_push(x, y, z, path, pkeys, length, tab, used):
    """``le_step`` with capacity management, for callers outside hot loops."""
    if length == path.shape[0]:
        path, pkeys = _grow(path, pkeys, length)
    length = le_step(x, y, z, path, pkeys, length, tab)
    if length < 0:
        length = -length
        used += 1
    if 4 * used > tab.size:
        tab, used = _rehash(pkeys, length)
    return path, pkeys, length, tab, used


@njit(cache=True)
def loop_erase_array(points):
    n = points.shape[0]
    size = 512
    while size < 2 * n:
        size *= 2
    # sized for n distinct points at load 1/2, so no growth or rehash
    tab = np.full(2 * size, EMPTY, dtype=np.int64)
    path = np.empty((n, 3), dtype=np.int64)
    pkeys = np.empty(n, dtype=np.int64)
    length = 0
    for i in range(n):
        length = le_step(points[i, 0], points[i, 1], points[i, 2], path, pkeys, length, tab)
        if length < 0:
            length = -length
    return path[:length].copy()


# ---------------------------------------------------------------------------
# walks
# ---------------------------------------------------------------------------

@njit(cache=True)
def srw_walk(sx, sy, sz, dint, mask, hkeys, use_hit, max_steps, gen):
    """Simple random walk; returns (points, status) with status 1 if the budget ran out."""
    cap = 1024
    out = np.empty((cap, 3), dtype=np.int64)
    out[0, 0] = sx
    out[0, 1] = sy
    out[0, 2] = sz
    n = 1
    x, y, z = sx, sy, sz
    use_domain = dint[0] >= 0
    hmask = hkeys.size - 1
    while True:
        if max_steps >= 0 and n - 1 >= max_steps:
            # MaxSteps alone is a normal stop
            status = 1 if (use_domain or use_hit) else 0
            return out[:n].copy(), status
        d = int(gen.random() * 6.0)
        x += DX[d]
        y += DY[d]
        z += DZ[d]
        if n == cap:
            cap *= 2
            new = np.empty((cap, 3), dtype=np.int64)
            new[:n] = out[:n]
            out = new
        out[n, 0] = x
        out[n, 1] = y
        out[n, 2] = z
        n += 1
        if use_domain and not inside(dint, mask, x, y, z):
            return out[:n].copy(), 0
        if use_hit:
            key = pack(x, y, z)
            h = _slot(key, hmask)
            while True:
                k = hkeys[h]
                if k == key:
                    return out[:n].copy(), 0
                if k == EMPTY:
                    break
                h = (h + 1) & hmask


@njit(cache=True)
def lerw_walk(sx, sy, sz, dint, mask, max_steps, gen):
    """Loop-erased walk from (sx, sy, sz) to the first exit of the domain.

    Returns (erased path including the exit point, SRW step count, status).
    """
    path, pkeys, length, tab, used = le_init(sx, sy, sz)
    x, y, z = sx, sy, sz
    steps = 0
    while True:
        if max_steps >= 0 and steps >= max_steps:
            return path[:length].copy(), steps, 1
        d = int(gen.random() * 6.0)
        x += DX[d]
        y += DY[d]
        z += DZ[d]
        steps += 1
        if length == path.shape[0]:
            path, pkeys = _grow(path, pkeys, length)
        length = le_step(x, y, z, path, pkeys, length, tab)
        if length < 0:
            length = -length
            used += 1
        if 4 * used > tab.size:
            tab, used = _rehash(pkeys, length)
        if not inside(dint, mask, x, y, z):
            return path[:length].copy(), steps, 0


@njit(cache=True)
def lerw_lengths(r2max, n_trials, gen):
    """Lengths of LERWs from 0 to the exit of the ball |x|^2 <= r2max (one shared stream)."""
    dint = np.array([0, 0, 0, 0, 0, 0, 0, r2max], dtype=np.int64)
    mask = np.zeros((1, 1, 1), dtype=np.uint8)
    out = np.empty(n_trials, dtype=np.int64)
    for t in range(n_trials):
        p, s, st = lerw_walk(0, 0, 0, dint, mask, -1, gen)
        out[t] = p.shape[0] - 1
    return out


@njit(cache=True)
def lerw_prefix_batch(sx, sy, sz, dint, mask, n_samples, horizon, gen):
    out = np.full((n_samples, horizon + 1, 3), PAD, dtype=np.int64)
    for t in range(n_samples):
        p, s, st = lerw_walk(sx, sy, sz, dint, mask, -1, gen)
        m = min(p.shape[0], horizon + 1)
        out[t, :m] = p[:m]
    return out


@njit(cache=True)
def escape_trial(r2max_n, r2max_m, full, gen):
    """One draw of the non-intersection event between LE(S1) and S2[1, T2]."""
    dint = np.array([0, 0, 0, 0, 0, 0, 0, r2max_n], dtype=np.int64)
    mask = np.zeros((1, 1, 1), dtype=np.uint8)
    path, pkeys, length, tab, used = le_init(0, 0, 0)
    x, y, z = 0, 0, 0
    while True:
        d = int(gen.random() * 6.0)
        x += DX[d]
        y += DY[d]
        z += DZ[d]
        if length == path.shape[0]:
            path, pkeys = _grow(path, pkeys, length)
        length = le_step(x, y, z, path, pkeys, length, tab)
        if length < 0:
            length = -length
            used += 1
        if 4 * used > tab.size:
            tab, used = _rehash(pkeys, length)
        if not inside(dint, mask, x, y, z):
            break
    s = 0
    if not full:
        for k in range(length - 1, -1, -1):
            px = path[k, 0]
            py = path[k, 1]
            pz = path[k, 2]
            if px * px + py * py + pz * pz <= r2max_m:
                s = k
                break
    x, y, z = 0, 0, 0
    tmask = tab.size // 2 - 1
    while True:
        d = int(gen.random() * 6.0)
        x += DX[d]
        y += DY[d]
        z += DZ[d]
        key = pack(x, y, z)
        h = _slot(key, tmask)
        while True:
            k = tab[2 * h]
            if k == key:
                idx = tab[2 * h + 1]
                if idx < length and pkeys[idx] == key and idx >= s:
                    return 0
                break
            if k == EMPTY:
                break
            h = (h + 1) & tmask
        if not inside(dint, mask, x, y, z):
            return 1


@njit(cache=True)
def visit_counts(sx, sy, sz, dint, mask, tkeys, tvals, n_targets, n_walks, gen):
    """Per-target sums and sums of squares of visit counts before exit."""
    sums = np.zeros(n_targets, dtype=np.float64)
    sq = np.zeros(n_targets, dtype=np.float64)
    cnt = np.zeros(n_targets, dtype=np.int64)
    for w in range(n_walks):
        cnt[:] = 0
        x, y, z = sx, sy, sz
        while inside(dint, mask, x, y, z):
            j = table_get(tkeys, tvals, pack(x, y, z))
            if j >= 0:
                cnt[j] += 1
            d = int(gen.random() * 6.0)
            x += DX[d]
            y += DY[d]
            z += DZ[d]
        for j in range(n_targets):
            sums[j] += cnt[j]
            sq[j] += cnt[j] * cnt[j]
    return sums, sq


@njit(cache=True)
def exit_times(sx, sy, sz, dint, mask, n_walks, gen):
    out = np.empty(n_walks, dtype=np.int64)
    for w in range(n_walks):
        x, y, z = sx, sy, sz
        steps = 0
        while inside(dint, mask, x, y, z):
            d = int(gen.random() * 6.0)
            x += DX[d]
            y += DY[d]
            z += DZ[d]
            steps += 1
        out[w] = steps
    return out


@njit(cache=True)
def probe_escapes(cx, cy, cz, r2max, gkeys, probes, gen):
    """Number of walks from c leaving {|x-c|^2 <= r2max} without touching the set."""
    gmask = gkeys.size - 1
    ok = 0
    for p in range(probes):
        x, y, z = cx, cy, cz
        hit = False
        while True:
            key = pack(x, y, z)
            h = _slot(key, gmask)
            while True:
                k = gkeys[h]
                if k == key:
                    hit = True
                    break
                if k == EMPTY:
                    break
                h = (h + 1) & gmask
            if hit:
                break
            dx = x - cx
            dy = y - cy
            dz = z - cz
            if dx * dx + dy * dy + dz * dz > r2max:
                break
            d = int(gen.random() * 6.0)
            x += DX[d]
            y += DY[d]
            z += DZ[d]
        if not hit:
            ok += 1
    return ok


# ---------------------------------------------------------------------------
# Wilson's algorithm
# ---------------------------------------------------------------------------

@njit(cache=True)
def wilson_fill(points, order, ikeys, ivals, parent, ppt, gen):
    """Complete a partial wired tree. parent[i] == -2 marks vertices not yet in the tree,
    -1 means the parent is a boundary point (recorded in ppt)."""
    for o in order:
        if parent[o] != -2:
            continue
        x = points[o, 0]
        y = points[o, 1]
        z = points[o, 2]
        path, pkeys, length, tab, used = le_init(x, y, z)
        while True:
            d = int(gen.random() * 6.0)
            x += DX[d]
            y += DY[d]
            z += DZ[d]
            if length == path.shape[0]:
                path, pkeys = _grow(path, pkeys, length)
            length = le_step(x, y, z, path, pkeys, length, tab)
            if length < 0:
                length = -length
                used += 1
            if 4 * used > tab.size:
                tab, used = _rehash(pkeys, length)
            j = table_get(ikeys, ivals, pack(x, y, z))
            if j < 0 or parent[j] != -2:
                break
        for t in range(length - 1):
            i = table_get(ikeys, ivals, pkeys[t])
            nxt = table_get(ikeys, ivals, pkeys[t + 1])
            parent[i] = nxt if nxt >= 0 else -1
            ppt[i, 0] = path[t + 1, 0]
            ppt[i, 1] = path[t + 1, 1]
            ppt[i, 2] = path[t + 1, 2]
    return parent, ppt


# ---------------------------------------------------------------------------
# geometry scans
# ---------------------------------------------------------------------------

@njit(cache=True)
def escape_indices(pts, bound2):
    """e[k] = first j > k with |p_j - p_k|^2 > bound2, or len(pts) if none."""
    n = pts.shape[0]
    e = np.full(n, n, dtype=np.int64)
    for k in range(n):
        for j in range(k + 1, n):
            dx = pts[j, 0] - pts[k, 0]
            dy = pts[j, 1] - pts[k, 1]
            dz = pts[j, 2] - pts[k, 2]
            if dx * dx + dy * dy + dz * dz > bound2:
                e[k] = j
                break
    return e


@njit(cache=True)
def quasi_loop_scan(pts, pairs, offsets, s2, r2, rps2, first_only):
    """Lattice points x with two path points (a pair) strictly within s of x and the
    path between them reaching distance >= r from x. ``rps2`` = (r + s)^2."""
    out_keys = np.full(1024, EMPTY, dtype=np.int64)
    out = np.empty((64, 3), dtype=np.int64)
    n_out = 0
    for p in range(pairs.shape[0]):
        k = pairs[p, 0]
        l = pairs[p, 1]
        far = False
        for j in range(k, l + 1):
            dx = pts[j, 0] - pts[k, 0]
            dy = pts[j, 1] - pts[k, 1]
            dz = pts[j, 2] - pts[k, 2]
            if dx * dx + dy * dy + dz * dz >= rps2:
                far = True
                break
        for o in range(offsets.shape[0]):
            x = pts[k, 0] + offsets[o, 0]
            y = pts[k, 1] + offsets[o, 1]
            z = pts[k, 2] + offsets[o, 2]
            dx = x - pts[l, 0]
            dy = y - pts[l, 1]
            dz = z - pts[l, 2]
            if dx * dx + dy * dy + dz * dz >= s2:
                continue
            ok = far
            if not ok:
                for j in range(k, l + 1):
                    dx = pts[j, 0] - x
                    dy = pts[j, 1] - y
                    dz = pts[j, 2] - z
                    if dx * dx + dy * dy + dz * dz >= r2:
                        ok = True
                        break
            if not ok:
                continue
            key = pack(x, y, z)
            mask = out_keys.size - 1
            h = _slot(key, mask)
            seen = False
            while out_keys[h] != EMPTY:
                if out_keys[h] == key:
                    seen = True
                    break
                h = (h + 1) & mask
            if seen:
                continue
            out_keys[h] = key
            if n_out == out.shape[0]:
                new = np.empty((2 * n_out, 3), dtype=np.int64)
                new[:n_out] = out[:n_out]
                out = new
            out[n_out, 0] = x
            out[n_out, 1] = y
            out[n_out, 2] = z
            n_out += 1
            if 2 * n_out > out_keys.size:
                nk = np.full(2 * out_keys.size, EMPTY, dtype=np.int64)
                nmask = nk.size - 1
                for i in range(n_out):
                    kk = pack(out[i, 0], out[i, 1], out[i, 2])
                    hh = _slot(kk, nmask)
                    while nk[hh] != EMPTY:
                        hh = (hh + 1) & nmask
                    nk[hh] = kk
                out_keys = nk
            if first_only:
                return out[:n_out].copy()
    return out[:n_out].copy()


@njit(cache=True)
def _eval_at(times, pos, t, out):
    n = times.shape[0]
    if t <= times[0]:
        out[:] = pos[0]
        return
    if t >= times[n - 1]:
        out[:] = pos[n - 1]
        return
    j = np.searchsorted(times, t, side="right") - 1
    w = (t - times[j]) / (times[j + 1] - times[j])
    for a in range(3):
        out[a] = pos[j, a] + w * (pos[j + 1, a] - pos[j, a])


@njit(cache=True)
def modulus_scan(times, pos, delta):
    n = times.shape[0]
    T = times[n - 1]
    best = 0.0
    q = np.empty(3, dtype=np.float64)
    for i in range(n):
        j = i + 1
        while j < n and times[j] - times[i] <= delta:
            d = 0.0
            for a in range(3):
                d += (pos[j, a] - pos[i, a]) ** 2
            if d > best:
                best = d
            j += 1
        # window edges that fall between breakpoints
        if times[i] + delta <= T:
            _eval_at(times, pos, times[i] + delta, q)
            d = 0.0
            for a in range(3):
                d += (q[a] - pos[i, a]) ** 2
            if d > best:
                best = d
        if times[i] - delta >= 0.0:
            _eval_at(times, pos, times[i] - delta, q)
            d = 0.0
            for a in range(3):
                d += (q[a] - pos[i, a]) ** 2
            if d > best:
                best = d
    return np.sqrt(best)


@njit(cache=True)
def mark_boxes(ranges, Y):
    """Set Y[i0:i1, j0:j1, k0:k1] = 1 for each row (i0, i1, j0, j1, k0, k1) of ``ranges``."""
    for r in range(ranges.shape[0]):
        for i in range(ranges[r, 0], ranges[r, 1]):
            for j in range(ranges[r, 2], ranges[r, 3]):
                for k in range(ranges[r, 4], ranges[r, 5]):
                    Y[i, j, k] = 1


# ---------------------------------------------------------------------------
# distances to polylines
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _seg_d(x0, x1, x2, Ba, Bb, s):
    a0, a1, a2 = Ba[s, 0], Ba[s, 1], Ba[s, 2]
    d0, d1, d2 = Bb[s, 0] - a0, Bb[s, 1] - a1, Bb[s, 2] - a2
    L2 = d0 * d0 + d1 * d1 + d2 * d2
    w = 0.0
    if L2 > 0.0:
        w = ((x0 - a0) * d0 + (x1 - a1) * d1 + (x2 - a2) * d2) / L2
        w = min(max(w, 0.0), 1.0)
    e0 = a0 + w * d0 - x0
    e1 = a1 + w * d1 - x1
    e2 = a2 + w * d2 - x2
    return np.sqrt(e0 * e0 + e1 * e1 + e2 * e2)


@njit(cache=True)
def points_to_segments(X, Ba, Bb):
    """Distance from each row of X to the union of segments [Ba_s, Bb_s]."""
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        best = np.inf
        for s in range(Ba.shape[0]):
            d = _seg_d(X[i, 0], X[i, 1], X[i, 2], Ba, Bb, s)
            if d < best:
                best = d
        out[i] = best
    return out


@njit(cache=True)
def directed_polyline(A, Ba, Bb, tol):
    """sup over the polyline through A of the distance to the segments [Ba_s, Bb_s].

    Branch and bound on segments of A. A segment [p, q] is bounded by the
    smaller of (f(p) + f(q) + |q - p|) / 2 (f is 1-Lipschitz) and
    min_s max(d_s(p), d_s(q)) (each d_s is convex along [p, q]); the result is
    within tol below the supremum.
    """
    fv = points_to_segments(A, Ba, Bb)
    best = fv.max()
    if A.shape[0] < 2:
        return best
    cap = max(64, 2 * A.shape[0])
    P = np.empty((cap, 3))
    Q = np.empty((cap, 3))
    top = 0
    for i in range(A.shape[0] - 1):
        P[top] = A[i]
        Q[top] = A[i + 1]
        top += 1
    nB = Ba.shape[0]
    while top > 0:
        top -= 1
        p = P[top].copy()
        q = Q[top].copy()
        fp = np.inf
        fq = np.inf
        conv = np.inf
        for s in range(nB):
            dp = _seg_d(p[0], p[1], p[2], Ba, Bb, s)
            dq = _seg_d(q[0], q[1], q[2], Ba, Bb, s)
            fp = min(fp, dp)
            fq = min(fq, dq)
            conv = min(conv, max(dp, dq))
        L = np.sqrt(((q - p) ** 2).sum())
        ub = min(conv, 0.5 * (fp + fq + L))
        if ub <= best + tol:
            continue
        m = 0.5 * (p + q)
        fm = np.inf
        for s in range(nB):
            fm = min(fm, _seg_d(m[0], m[1], m[2], Ba, Bb, s))
        best = max(best, fm)
        if top + 2 > cap:
            cap *= 2
            P2 = np.empty((cap, 3))
            Q2 = np.empty((cap, 3))
            P2[:top] = P[:top]
            Q2[:top] = Q[:top]
            P, Q = P2, Q2
        P[top] = p
        Q[top] = m
        P[top + 1] = m
        Q[top + 1] = q
        top += 2
    return best
