"""Exact area of a union of double cones inside a horizontal strip.

The strip is cut at every apex height.  Inside one slab every cone meets each
horizontal line in a single interval whose endpoints move linearly with the
height ``t``, so the union length is piecewise linear in ``t``.  Tracking every
endpoint crossing is hopeless for deep forests (billions of swaps), so the
sweep only tracks connected components of the union.  A component stores

* its left and right boundary as piecewise-linear envelopes of member lines,
  valid until the end of the slab, and
* a chain of member intervals running from the leftmost to the rightmost one
  in which consecutive intervals overlap.  The chain proves the union of the
  members is the single interval between the two envelopes.

Every stored fact is a sign condition on a linear function of ``t``, so the
time it can first fail is an exact root.  Between such events the total union
length is an explicit linear function and is integrated exactly.  A broken
chain link is usually repaired by finding one member interval that overlaps
both ends of the link; only when none exists is the component regrouped from
scratch, which is also how genuine splits are detected.  Ties at an event are
resolved by looking a hair (``h``) above the event height.

The kernel is compiled with numba; component records live in the integer
table ``cp`` and per-line chain data in ``nd``.
"""
from __future__ import annotations

import heapq

import numpy as np
from numba import njit

_INF = np.inf
_GAP, _ENV, _LINK = 0, 1, 2

# per-line fields of ``nd``
NXT, PRV, INCH, LVER, PAR, MNXT = 0, 1, 2, 3, 4, 5
# per-component fields of ``cp``
HEAD, TAIL, MHEAD, MTAIL, SIZE, CPREV, CNEXT, VER, ALIVE, ROOT = 0, 1, 2, 3, 4, 5, 6, 7, 8, 9
EOFF0, ELEN0, EPOS0, EOFF1, ELEN1, EPOS1 = 10, 11, 12, 13, 14, 15
# fields of ``meta``
USED, FREE, SEQ, EVENTS, REGROUPS = 0, 1, 2, 3, 4


@njit(cache=True)
def _find(nd, i):
    r = i
    while nd[PAR, r] != r:
        r = nd[PAR, r]
    while nd[PAR, i] != r:
        nx = nd[PAR, i]
        nd[PAR, i] = r
        i = nx
    return r


@njit(cache=True)
def _env_line(cp, eid, k, side):
    if side == 0:
        return eid[cp[EOFF0, k] + cp[EPOS0, k]]
    return eid[cp[EOFF1, k] + cp[EPOS1, k]]


@njit(cache=True)
def _add(cp, eid, a, b, c, d, fs, k, sign):
    L = _env_line(cp, eid, k, 0)
    R = _env_line(cp, eid, k, 1)
    fs[0] += sign * (c[R] - a[L])
    fs[1] += sign * (d[R] - b[L])


@njit(cache=True)
def _integrate_to(fs, t, t1, bounds, out):
    if t > t1:
        t = t1
    lo = fs[2]
    if t <= lo:
        return
    A = fs[0]
    B = fs[1]
    k = np.searchsorted(bounds, lo, side="right") - 1
    nb = bounds.size
    while lo < t and k < nb - 1:
        hi = min(t, bounds[k + 1])
        if hi > lo and k >= 0:
            out[k] += 0.5 * ((A + B * lo) + (A + B * hi)) * (hi - lo)
        lo = max(lo, hi)
        k += 1
    fs[2] = t


@njit(cache=True)
def _push(heap, meta, t1, time, kind, x, xv, y, yv):
    if time >= t1:
        return
    meta[SEQ] += 1
    heapq.heappush(heap, (time, meta[SEQ], kind, x, xv, y, yv))


@njit(cache=True)
def _overlap_expiry(a, b, c, d, i, j, t, h):
    """(overlapping just above t, time until which intervals i and j keep overlapping)."""
    tp = t + h
    best = _INF
    for swap in range(2):
        p, q = (i, j) if swap == 0 else (j, i)
        f0 = c[p] - a[q]
        f1 = d[p] - b[q]
        if f0 + f1 * tp < 0.0:
            return False, tp
        if f1 < 0.0:
            best = min(best, -f0 / f1)
    return True, max(best, tp)


# ---------------------------------------------------------------- envelopes
@njit(cache=True)
def _reserve(cp, ebk, eid, meta, need):
    """Make room for ``need`` envelope pieces, compacting live envelopes if necessary."""
    if meta[USED] + need <= ebk.size:
        return
    ncomp = cp.shape[1]
    cnt = 0
    for k in range(ncomp):
        if cp[ALIVE, k] == 1:
            cnt += 2
    offs = np.empty(cnt, dtype=np.int64)
    who = np.empty(cnt, dtype=np.int64)
    q = 0
    for k in range(ncomp):
        if cp[ALIVE, k] == 1:
            offs[q] = cp[EOFF0, k]
            who[q] = 2 * k
            offs[q + 1] = cp[EOFF1, k]
            who[q + 1] = 2 * k + 1
            q += 2
    order = np.argsort(offs)
    used = 0
    for q in range(cnt):
        k = who[order[q]] // 2
        side = who[order[q]] % 2
        fo = EOFF0 if side == 0 else EOFF1
        off = cp[fo, k]
        pos = cp[fo + 2, k]
        n = cp[fo + 1, k] - pos
        for r in range(n):
            ebk[used + r] = ebk[off + pos + r]
            eid[used + r] = eid[off + pos + r]
        cp[fo, k] = used
        cp[fo + 1, k] = n
        cp[fo + 2, k] = 0
        used += n
    meta[USED] = used
    if used + need > ebk.size:
        raise RuntimeError("envelope arena exhausted")


@njit(cache=True)
def _env_build(a, b, c, d, ebk, eid, meta, ids, t, t1, h, side):
    """Write the lower (side 0) or upper (side 1) envelope of lines ``ids`` on [t, t1]."""
    A = a if side == 0 else c
    B = b if side == 0 else d
    s = 1.0 if side == 0 else -1.0
    tp = t + h
    off = meta[USED]
    m = ids.size
    if m == 1:
        ebk[off] = t
        eid[off] = ids[0]
        meta[USED] += 1
        return off, 1
    vals = np.empty(m)
    slopes = np.empty(m)
    for q in range(m):
        i = ids[q]
        vals[q] = s * (A[i] + B[i] * tp)
    o1 = np.argsort(vals)
    for q in range(m):
        slopes[q] = -s * B[ids[o1[q]]]
    o2 = np.argsort(slopes, kind="mergesort")
    hull = np.empty(m, dtype=np.int64)
    xs = np.empty(m)
    hn = 0
    xn = 0
    for q in range(m):
        i = ids[o1[o2[q]]]
        ai = s * A[i]
        bi = s * B[i]
        if hn > 0 and s * B[hull[hn - 1]] == bi:
            continue
        while hn > 0:
            j = hull[hn - 1]
            x = (ai - s * A[j]) / (s * B[j] - bi)
            if xn > 0 and x <= xs[xn - 1]:
                hn -= 1
                xn -= 1
                continue
            break
        if hn > 0:
            j = hull[hn - 1]
            xs[xn] = (ai - s * A[j]) / (s * B[j] - bi)
            xn += 1
        hull[hn] = i
        hn += 1
    start = np.searchsorted(xs[:xn], tp, side="right")
    ebk[off] = t
    eid[off] = hull[start]
    n = 1
    for q in range(start, xn):
        if xs[q] >= t1:
            break
        ebk[off + n] = xs[q]
        eid[off + n] = hull[q + 1]
        n += 1
    meta[USED] += n
    return off, n


@njit(cache=True)
def _env_merge(a, b, c, d, ebk, eid, meta, o1, n1, p1, o2, n2, p2, t, t1, side):
    A = a if side == 0 else c
    B = b if side == 0 else d
    s = 1.0 if side == 0 else -1.0
    off = meta[USED]
    n = 0
    cur = t
    while True:
        while p1 + 1 < n1 and ebk[o1 + p1 + 1] <= cur:
            p1 += 1
        while p2 + 1 < n2 and ebk[o2 + p2 + 1] <= cur:
            p2 += 1
        u = eid[o1 + p1]
        v = eid[o2 + p2]
        e = t1
        if p1 + 1 < n1:
            e = min(e, ebk[o1 + p1 + 1])
        if p2 + 1 < n2:
            e = min(e, ebk[o2 + p2 + 1])
        da = s * (A[u] - A[v])
        db = s * (B[u] - B[v])
        cuts = np.empty(3)
        cuts[0] = cur
        nc = 1
        if db != 0.0:
            root = -da / db
            if cur < root < e:
                cuts[nc] = root
                nc += 1
        cuts[nc] = e
        for q in range(nc):
            q0 = cuts[q]
            mid = q0 + 0.5 * (cuts[q + 1] - q0)
            w = u if da + db * mid <= 0.0 else v
            if n == 0 or eid[off + n - 1] != w:
                ebk[off + n] = q0
                eid[off + n] = w
                n += 1
        if e >= t1:
            break
        cur = e
    meta[USED] += n
    return off, n


# ------------------------------------------------------------------- chains
@njit(cache=True)
def _link(nd, heap, meta, a, b, c, d, i, j, t, h, t1):
    nd[NXT, i] = j
    nd[PRV, j] = i
    nd[LVER, i] += 1
    ok, exp = _overlap_expiry(a, b, c, d, i, j, t, h)
    if not ok:
        exp = t + h
    _push(heap, meta, t1, exp, _LINK, i, nd[LVER, i], -1, 0)


@njit(cache=True)
def _drop(nd, i):
    nd[INCH, i] = 0
    nd[NXT, i] = -1
    nd[PRV, i] = -1
    nd[LVER, i] += 1


@njit(cache=True)
def _fix_ends(nd, cp, eid, heap, meta, a, b, c, d, k, t, h, t1):
    """Make the chain start at the left envelope line and end at the right one."""
    L = _env_line(cp, eid, k, 0)
    R = _env_line(cp, eid, k, 1)
    if cp[HEAD, k] != L:
        if nd[INCH, L] == 1:
            x = cp[HEAD, k]
            while x != L:
                nx = nd[NXT, x]
                _drop(nd, x)
                x = nx
            nd[PRV, L] = -1
        else:
            nd[INCH, L] = 1
            nd[PRV, L] = -1
            _link(nd, heap, meta, a, b, c, d, L, cp[HEAD, k], t, h, t1)
        cp[HEAD, k] = L
    if cp[TAIL, k] != R:
        if nd[INCH, R] == 1:
            x = cp[TAIL, k]
            while x != R:
                px = nd[PRV, x]
                _drop(nd, x)
                x = px
            nd[NXT, R] = -1
            nd[LVER, R] += 1
        else:
            nd[INCH, R] = 1
            nd[NXT, R] = -1
            _link(nd, heap, meta, a, b, c, d, cp[TAIL, k], R, t, h, t1)
        cp[TAIL, k] = R


# --------------------------------------------------------------- components
@njit(cache=True)
def _alloc(cp, free, meta):
    meta[FREE] -= 1
    k = free[meta[FREE]]
    cp[VER, k] += 1
    cp[ALIVE, k] = 1
    cp[CPREV, k] = -1
    cp[CNEXT, k] = -1
    for f in range(EOFF0, EPOS1 + 1):
        cp[f, k] = 0
    return k


@njit(cache=True)
def _kill(cp, eid, free, meta, cof, a, b, c, d, fs, k):
    _add(cp, eid, a, b, c, d, fs, k, -1.0)
    cp[ALIVE, k] = 0
    cp[VER, k] += 1
    if cof[cp[ROOT, k]] == k:
        cof[cp[ROOT, k]] = -1
    free[meta[FREE]] = k
    meta[FREE] += 1


@njit(cache=True)
def _members(nd, cp, k):
    out = np.empty(cp[SIZE, k], dtype=np.int64)
    x = cp[MHEAD, k]
    for q in range(out.size):
        out[q] = x
        x = nd[MNXT, x]
    return out


@njit(cache=True)
def _schedule(cp, ebk, heap, meta, t1, k):
    when = _INF
    for side in range(2):
        fo = EOFF0 if side == 0 else EOFF1
        if cp[fo + 2, k] + 1 < cp[fo + 1, k]:
            when = min(when, ebk[cp[fo, k] + cp[fo + 2, k] + 1])
    _push(heap, meta, t1, when, _ENV, k, cp[VER, k], -1, 0)


@njit(cache=True)
def _schedule_gap(cp, eid, heap, meta, a, b, c, d, fs, h, t1, left):
    if left < 0:
        return
    right = cp[CNEXT, left]
    if right < 0:
        return
    Ln = _env_line(cp, eid, right, 0)
    Rc = _env_line(cp, eid, left, 1)
    g0 = a[Ln] - c[Rc]
    g1 = b[Ln] - d[Rc]
    if g1 >= 0.0:
        return
    when = max(-g0 / g1, fs[2] + h)
    _push(heap, meta, t1, when, _GAP, left, cp[VER, left], right, cp[VER, right])


@njit(cache=True)
def _group(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, members, t, h, t1):
    """Split ``members`` into connected components just above ``t``; returns their ids."""
    tp = t + h
    m = members.size
    sl = np.empty(m)
    for q in range(m):
        sl[q] = b[members[q]]
    o1 = np.argsort(sl)
    lv = np.empty(m)
    for q in range(m):
        i = members[o1[q]]
        lv[q] = a[i] + b[i] * tp
    o2 = np.argsort(lv, kind="mergesort")
    ms = np.empty(m, dtype=np.int64)
    lvs = np.empty(m)
    rvs = np.empty(m)
    for q in range(m):
        i = members[o1[o2[q]]]
        ms[q] = i
        lvs[q] = a[i] + b[i] * tp
        rvs[q] = c[i] + d[i] * tp
    comps = np.empty(m, dtype=np.int64)
    ncomp = 0
    start = 0
    best = -_INF
    for q in range(m + 1):
        if q < m and (q == start or lvs[q] <= best):
            best = max(best, rvs[q])
            continue
        # members ms[start:q] form one component
        k = _alloc(cp, free, meta)
        root = ms[start]
        cp[ROOT, k] = root
        cof[root] = k
        cp[SIZE, k] = q - start
        cp[MHEAD, k] = root
        cp[MTAIL, k] = ms[q - 1]
        for r in range(start, q):
            i = ms[r]
            nd[PAR, i] = root
            nd[MNXT, i] = ms[r + 1] if r + 1 < q else -1
        # record holders of the running maximum of right ends form an overlapping chain
        run = -_INF
        prev = -1
        for r in range(start, q):
            i = ms[r]
            if rvs[r] > run or r == start:
                run = rvs[r]
                nd[INCH, i] = 1
                nd[PRV, i] = prev
                nd[NXT, i] = -1
                if prev >= 0:
                    _link(nd, heap, meta, a, b, c, d, prev, i, t, h, t1)
                else:
                    cp[HEAD, k] = i
                prev = i
        cp[TAIL, k] = prev
        _reserve(cp, ebk, eid, meta, 2 * (q - start) + 2)
        ids = ms[start:q].copy()
        off, n = _env_build(a, b, c, d, ebk, eid, meta, ids, t, t1, h, 0)
        cp[EOFF0, k] = off
        cp[ELEN0, k] = n
        cp[EPOS0, k] = 0
        off, n = _env_build(a, b, c, d, ebk, eid, meta, ids, t, t1, h, 1)
        cp[EOFF1, k] = off
        cp[ELEN1, k] = n
        cp[EPOS1, k] = 0
        _fix_ends(nd, cp, eid, heap, meta, a, b, c, d, k, t, h, t1)
        comps[ncomp] = k
        ncomp += 1
        if q < m:
            start = q
            best = rvs[q]
    return comps[:ncomp]


@njit(cache=True)
def _install(cp, ebk, eid, heap, meta, a, b, c, d, fs, h, t1, comps, prev, nxt):
    for k in comps:
        _add(cp, eid, a, b, c, d, fs, k, 1.0)
    last = prev
    for k in comps:
        cp[CPREV, k] = last
        if last >= 0:
            cp[CNEXT, last] = k
        last = k
    cp[CNEXT, last] = nxt
    if nxt >= 0:
        cp[CPREV, nxt] = last
    for k in comps:
        _schedule(cp, ebk, heap, meta, t1, k)
    _schedule_gap(cp, eid, heap, meta, a, b, c, d, fs, h, t1, prev)
    for k in comps:
        _schedule_gap(cp, eid, heap, meta, a, b, c, d, fs, h, t1, k)


@njit(cache=True)
def _regroup(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, fs, k, t, h, t1):
    meta[REGROUPS] += 1
    prev = cp[CPREV, k]
    nxt = cp[CNEXT, k]
    members = _members(nd, cp, k)
    _kill(cp, eid, free, meta, cof, a, b, c, d, fs, k)
    for i in members:
        if nd[INCH, i] == 1:
            _drop(nd, i)
    comps = _group(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, members, t, h, t1)
    _install(cp, ebk, eid, heap, meta, a, b, c, d, fs, h, t1, comps, prev, nxt)


@njit(cache=True)
def _merge(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, fs, left, right, t, h, t1):
    _reserve(cp, ebk, eid, meta, 2 * (cp[ELEN0, left] + cp[ELEN0, right] + cp[ELEN1, left] + cp[ELEN1, right]) + 8)
    prev = cp[CPREV, left]
    nxt = cp[CNEXT, right]
    _link(nd, heap, meta, a, b, c, d, cp[TAIL, left], cp[HEAD, right], t, h, t1)
    off0, n0 = _env_merge(a, b, c, d, ebk, eid, meta,
                          cp[EOFF0, left], cp[ELEN0, left], cp[EPOS0, left],
                          cp[EOFF0, right], cp[ELEN0, right], cp[EPOS0, right], t, t1, 0)
    off1, n1 = _env_merge(a, b, c, d, ebk, eid, meta,
                          cp[EOFF1, left], cp[ELEN1, left], cp[EPOS1, left],
                          cp[EOFF1, right], cp[ELEN1, right], cp[EPOS1, right], t, t1, 1)
    rl, rr = cp[ROOT, left], cp[ROOT, right]
    if cp[SIZE, left] >= cp[SIZE, right]:
        root = rl
        nd[PAR, rr] = rl
    else:
        root = rr
        nd[PAR, rl] = rr
    head, tail = cp[HEAD, left], cp[TAIL, right]
    mhead, mtail = cp[MHEAD, left], cp[MTAIL, right]
    nd[MNXT, cp[MTAIL, left]] = cp[MHEAD, right]
    size = cp[SIZE, left] + cp[SIZE, right]
    _kill(cp, eid, free, meta, cof, a, b, c, d, fs, left)
    _kill(cp, eid, free, meta, cof, a, b, c, d, fs, right)
    k = _alloc(cp, free, meta)
    cp[ROOT, k] = root
    cof[root] = k
    cp[HEAD, k] = head
    cp[TAIL, k] = tail
    cp[MHEAD, k] = mhead
    cp[MTAIL, k] = mtail
    cp[SIZE, k] = size
    cp[EOFF0, k] = off0
    cp[ELEN0, k] = n0
    cp[EPOS0, k] = 0
    cp[EOFF1, k] = off1
    cp[ELEN1, k] = n1
    cp[EPOS1, k] = 0
    _fix_ends(nd, cp, eid, heap, meta, a, b, c, d, k, t, h, t1)
    comps = np.empty(1, dtype=np.int64)
    comps[0] = k
    _install(cp, ebk, eid, heap, meta, a, b, c, d, fs, h, t1, comps, prev, nxt)


@njit(cache=True)
def _advance_env(nd, cp, ebk, eid, heap, meta, a, b, c, d, fs, k, t, h, t1):
    _add(cp, eid, a, b, c, d, fs, k, -1.0)
    cp[VER, k] += 1
    for side in range(2):
        fo = EOFF0 if side == 0 else EOFF1
        while cp[fo + 2, k] + 1 < cp[fo + 1, k] and ebk[cp[fo, k] + cp[fo + 2, k] + 1] <= t:
            cp[fo + 2, k] += 1
    _fix_ends(nd, cp, eid, heap, meta, a, b, c, d, k, t, h, t1)
    _add(cp, eid, a, b, c, d, fs, k, 1.0)
    _schedule(cp, ebk, heap, meta, t1, k)
    _schedule_gap(cp, eid, heap, meta, a, b, c, d, fs, h, t1, cp[CPREV, k])
    _schedule_gap(cp, eid, heap, meta, a, b, c, d, fs, h, t1, k)


# ---------------------------------------------------------- gap stabbing rows
@njit(cache=True)
def _build_row(a, b, c, d, s0, s1):
    lo = np.minimum(a + b * s0, a + b * s1)
    hi = np.maximum(c + d * s0, c + d * s1)
    order = np.argsort(lo, kind="mergesort")
    return lo[order], hi[order], order, (hi - lo).max()


@njit(cache=True)
def _repair(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, fs, rows_lo, rows_hi,
            rows_ord, rows_w, built, t0, dt, i, t, h, t1):
    j = nd[NXT, i]
    k = cof[_find(nd, i)]
    ok, exp = _overlap_expiry(a, b, c, d, i, j, t, h)
    if ok:
        nd[LVER, i] += 1
        _push(heap, meta, t1, exp, _LINK, i, nd[LVER, i], -1, 0)
        return
    tp = t + h
    li = a[i] + b[i] * tp
    ri = c[i] + d[i] * tp
    lj = a[j] + b[j] * tp
    rj = c[j] + d[j] * tp
    if ri < lj:
        g_lo, g_hi = ri, lj
    else:
        g_lo, g_hi = rj, li
    nrows = built.size
    r = min(max(int((tp - t0) / dt), 0), nrows - 1)
    if not built[r]:
        lo_, hi_, ord_, w_ = _build_row(a, b, c, d, t0 + r * dt, t0 + (r + 1) * dt)
        rows_lo[r] = lo_
        rows_hi[r] = hi_
        rows_ord[r] = ord_
        rows_w[r] = w_
        built[r] = True
    lo = rows_lo[r]
    hi = rows_hi[r]
    order = rows_ord[r]
    i0 = np.searchsorted(lo, g_hi - rows_w[r] - 1e-12, side="left")
    i1 = np.searchsorted(lo, g_lo + 1e-12, side="right")
    best = -1
    best_exp = -_INF
    for q in range(i0, i1):
        if hi[q] < g_hi - 1e-12:
            continue
        kk = order[q]
        if kk == i or kk == j:
            continue
        e = _INF
        good = True
        for p in (i, j):
            for swap in range(2):
                u, v = (kk, p) if swap == 0 else (p, kk)
                f0 = c[u] - a[v]
                f1 = d[u] - b[v]
                if f0 + f1 * tp < 0.0:
                    good = False
                    break
                if f1 < 0.0:
                    e = min(e, -f0 / f1)
            if not good:
                break
        if good and e > best_exp:
            best = kk
            best_exp = e
    if best < 0:
        _regroup(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, fs, k, t, h, t1)
        return
    kk = best
    if nd[INCH, kk] == 0:
        nd[INCH, kk] = 1
        _link(nd, heap, meta, a, b, c, d, i, kk, t, h, t1)
        _link(nd, heap, meta, a, b, c, d, kk, j, t, h, t1)
        return
    # kk already sits in the chain: shortcut to it, walking both ways from the break
    back = i
    fwd = j
    while True:
        if back == kk:
            x = i
            while x != kk:
                px = nd[PRV, x]
                _drop(nd, x)
                x = px
            _link(nd, heap, meta, a, b, c, d, kk, j, t, h, t1)
            return
        if fwd == kk:
            x = j
            while x != kk:
                nx = nd[NXT, x]
                _drop(nd, x)
                x = nx
            _link(nd, heap, meta, a, b, c, d, i, kk, t, h, t1)
            return
        if back >= 0:
            back = nd[PRV, back]
        if fwd >= 0:
            fwd = nd[NXT, fwd]
        if back < 0 and fwd < 0:
            _regroup(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, fs, k, t, h, t1)
            return


@njit(cache=True)
def _sweep_slab(a, b, c, d, t0, t1, bounds, out, nrows):
    n = a.size
    h = 1e-12 * max(1.0, abs(t0), abs(t1))
    nd = np.full((6, n), -1, dtype=np.int64)
    nd[INCH, :] = 0
    nd[LVER, :] = 0
    for i in range(n):
        nd[PAR, i] = i
    cap = n + 2
    cp = np.zeros((16, cap), dtype=np.int64)
    free = np.empty(cap, dtype=np.int64)
    for q in range(cap):
        free[q] = cap - 1 - q
    meta = np.zeros(5, dtype=np.int64)
    meta[FREE] = cap
    cof = np.full(n, -1, dtype=np.int64)
    ebk = np.empty(8 * n + 64)
    eid = np.empty(8 * n + 64, dtype=np.int64)
    fs = np.zeros(3)
    fs[2] = t0
    heap = [(0.0, 0, 0, 0, 0, 0, 0)]
    heap.pop()
    dt = (t1 - t0) / nrows
    rows_lo = [np.empty(0) for _ in range(nrows)]
    rows_hi = [np.empty(0) for _ in range(nrows)]
    rows_ord = [np.empty(0, dtype=np.int64) for _ in range(nrows)]
    rows_w = np.zeros(nrows)
    built = np.zeros(nrows, dtype=np.bool_)

    members = np.arange(n)
    comps = _group(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, members, t0, h, t1)
    _install(cp, ebk, eid, heap, meta, a, b, c, d, fs, h, t1, comps, -1, -1)
    while len(heap) > 0:
        time, _, kind, x, xv, y, yv = heapq.heappop(heap)
        if time >= t1:
            break
        if kind == _LINK:
            if nd[INCH, x] == 0 or nd[LVER, x] != xv or nd[NXT, x] < 0:
                continue
            _integrate_to(fs, time, t1, bounds, out)
            meta[EVENTS] += 1
            _repair(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, fs, rows_lo, rows_hi,
                    rows_ord, rows_w, built, t0, dt, x, time, h, t1)
            continue
        if cp[ALIVE, x] == 0 or cp[VER, x] != xv:
            continue
        if kind == _GAP:
            if cp[ALIVE, y] == 0 or cp[VER, y] != yv or cp[CNEXT, x] != y:
                continue
        _integrate_to(fs, time, t1, bounds, out)
        meta[EVENTS] += 1
        if kind == _GAP:
            _merge(nd, cp, ebk, eid, free, meta, cof, heap, a, b, c, d, fs, x, y, time, h, t1)
        else:
            _advance_env(nd, cp, ebk, eid, heap, meta, a, b, c, d, fs, x, time, h, t1)
    _integrate_to(fs, t1, t1, bounds, out)
    return meta[EVENTS], meta[REGROUPS]


def cone_union_areas(vx, vy, phi1, phi2, bounds):
    """Area of the union of double cones between consecutive heights in ``bounds``.

    ``vx, vy, phi1, phi2`` describe the cones and ``bounds`` is an increasing
    sequence of heights.  Returns ``(areas, n_events)``.
    """
    bounds = np.asarray(bounds, dtype=float)
    out = np.zeros(bounds.size - 1)
    vx = np.ascontiguousarray(vx, dtype=float)
    vy = np.ascontiguousarray(vy, dtype=float)
    if vx.size == 0 or bounds.size < 2:
        return out, 0
    t1 = np.tan(np.asarray(phi1, dtype=float))
    t2 = np.tan(np.asarray(phi2, dtype=float))
    y_lo, y_hi = float(bounds[0]), float(bounds[-1])
    scale = max(1.0, abs(y_lo), abs(y_hi))
    inner = np.unique(vy[(vy > y_lo) & (vy < y_hi)])
    edges = [y_lo]
    for y in inner.tolist():
        # apex heights closer than the merge tolerance share one slab boundary
        if y - edges[-1] > 1e-12 * scale:
            edges.append(y)
    if y_hi - edges[-1] <= 1e-12 * scale and len(edges) > 1:
        edges.pop()
    edges.append(y_hi)
    # stabbing rows cost one sort of all cones each; bound their total memory
    nrows = int(min(64, max(4, 4_000_000 // max(vx.size, 1))))
    events = 0
    for s0, s1 in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (s0 + s1)
        upper = vy <= mid
        sl = np.where(upper, t1, t2)
        sr = np.where(upper, t2, t1)
        ev, _ = _sweep_slab(vx - vy * sl, sl, vx - vy * sr, sr, s0, s1, bounds, out, nrows)
        events += int(ev)
    return out, events
