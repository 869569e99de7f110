"""Compiled interval kernels: outward-rounded arithmetic, HC4 revise on
expression tapes, constraint propagation and depth-first branch-and-prune.

A tape is a topologically ordered array of nodes.  Each constraint owns a
contiguous slice ``[start, end)`` whose last node is the root.  Node fields:

    op      opcode (see ``OP_*``)
    a, b    child node indices (absolute), -1 when unused
    arg     variable index for VAR, exponent for POWI
    clo/chi constant bounds for CONST
"""

import numpy as np
from numba import njit

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_NEG = 5
OP_POWI = 6
OP_EXP = 7
OP_LOG = 8
OP_SIN = 9
OP_COS = 10
OP_SQRT = 11

INF = np.inf
PI_LO = 3.141592653589793
PI_HI = 3.1415926535897936


@njit(cache=True)
def down(x):
    return np.nextafter(x, -INF)


@njit(cache=True)
def up(x):
    return np.nextafter(x, INF)


@njit(cache=True)
def down2(x):
    return np.nextafter(np.nextafter(x, -INF), -INF)


@njit(cache=True)
def up2(x):
    return np.nextafter(np.nextafter(x, INF), INF)


@njit(cache=True)
def _prod(x, y):
    # 0 * inf is taken as 0: the bounds involved are limits, not values
    if x == 0.0 or y == 0.0:
        return 0.0
    return x * y


@njit(cache=True)
def imul(alo, ahi, blo, bhi):
    p1 = _prod(alo, blo)
    p2 = _prod(alo, bhi)
    p3 = _prod(ahi, blo)
    p4 = _prod(ahi, bhi)
    lo = min(min(p1, p2), min(p3, p4))
    hi = max(max(p1, p2), max(p3, p4))
    return down(lo), up(hi)


@njit(cache=True)
def iadd(alo, ahi, blo, bhi):
    return down(alo + blo), up(ahi + bhi)


@njit(cache=True)
def isub(alo, ahi, blo, bhi):
    return down(alo - bhi), up(ahi - blo)


@njit(cache=True)
def _rpow(x, n):
    return x**n


@njit(cache=True)
def ipowi(lo, hi, n):
    if n == 0:
        return 1.0, 1.0
    if n == 1:
        return lo, hi
    if n % 2 == 1:
        return down2(_rpow(lo, n)), up2(_rpow(hi, n))
    if lo >= 0.0:
        return max(0.0, down2(_rpow(lo, n))), up2(_rpow(hi, n))
    if hi <= 0.0:
        return max(0.0, down2(_rpow(hi, n))), up2(_rpow(lo, n))
    return 0.0, up2(max(_rpow(lo, n), _rpow(hi, n)))


@njit(cache=True)
def _root_lo(z, n):
    # lower bound on the real n-th root of z >= 0
    if z <= 0.0:
        return 0.0
    if z == INF:
        return INF
    return max(0.0, down2(z ** (1.0 / n)))


@njit(cache=True)
def _root_hi(z, n):
    if z <= 0.0:
        return 0.0
    if z == INF:
        return INF
    return up2(z ** (1.0 / n))


@njit(cache=True)
def _signed_root_lo(z, n):
    if z >= 0.0:
        return _root_lo(z, n)
    return -_root_hi(-z, n)


@njit(cache=True)
def _signed_root_hi(z, n):
    if z >= 0.0:
        return _root_hi(z, n)
    return -_root_lo(-z, n)


@njit(cache=True)
def iexp(lo, hi):
    elo = 0.0 if lo == -INF else max(0.0, down2(np.exp(lo)))
    ehi = INF if hi == INF else up2(np.exp(hi))
    return elo, ehi


@njit(cache=True)
def ilog(lo, hi):
    # caller guarantees hi > 0
    llo = -INF if lo <= 0.0 else down2(np.log(lo))
    lhi = INF if hi == INF else up2(np.log(hi))
    return llo, lhi


@njit(cache=True)
def isqrt(lo, hi):
    slo = 0.0 if lo <= 0.0 else max(0.0, down2(np.sqrt(lo)))
    shi = INF if hi == INF else up2(np.sqrt(hi))
    return slo, shi


@njit(cache=True)
def icos(lo, hi):
    if hi - lo >= 2.0 * PI_LO or lo == -INF or hi == INF:
        return -1.0, 1.0
    # count extrema of cos (multiples of pi) inside [lo, hi]
    k_lo = np.ceil(lo / PI_HI - 1e-12)
    k_hi = np.floor(hi / PI_LO + 1e-12)
    c1 = np.cos(lo)
    c2 = np.cos(hi)
    rlo = down2(min(c1, c2))
    rhi = up2(max(c1, c2))
    k = k_lo
    while k <= k_hi:
        if int(k) % 2 == 0:
            rhi = 1.0
        else:
            rlo = -1.0
        k += 1.0
    return max(-1.0, rlo), min(1.0, rhi)


@njit(cache=True)
def isin(lo, hi):
    # sin(x) = cos(x - pi/2)
    half = 1.5707963267948966
    return icos(down(lo - half), up(hi - half))


@njit(cache=True)
def ediv_hull(xlo, xhi, zlo, zhi, ylo, yhi):
    """Hull of {x in [xlo, xhi] : exists y in Y with x*y in Z}.

    Returns (lo, hi, empty)."""
    if ylo > 0.0 or yhi < 0.0:
        # plain division z / y
        if ylo > 0.0:
            inv_lo = down(1.0 / yhi) if yhi != INF else 0.0
            inv_hi = up(1.0 / ylo)
        else:
            inv_lo = down(1.0 / yhi)
            inv_hi = up(1.0 / ylo) if ylo != -INF else 0.0
        qlo, qhi = imul(zlo, zhi, inv_lo, inv_hi)
        nlo = max(xlo, qlo)
        nhi = min(xhi, qhi)
        return nlo, nhi, nlo > nhi
    if zlo <= 0.0 and zhi >= 0.0:
        return xlo, xhi, False
    if ylo == 0.0 and yhi == 0.0:
        return xlo, xhi, True
    # z excludes 0 while y straddles or touches 0: two rays
    found = False
    rlo = INF
    rhi = -INF
    if zlo > 0.0:
        if yhi > 0.0:
            b = down(zlo / yhi) if yhi != INF else 0.0
            plo = max(xlo, b)
            if plo <= xhi:
                found = True
                rlo = min(rlo, plo)
                rhi = max(rhi, xhi)
        if ylo < 0.0:
            b = up(zlo / ylo) if ylo != -INF else 0.0
            phi = min(xhi, b)
            if xlo <= phi:
                found = True
                rlo = min(rlo, xlo)
                rhi = max(rhi, phi)
    else:
        if yhi > 0.0:
            b = up(zhi / yhi) if yhi != INF else 0.0
            phi = min(xhi, b)
            if xlo <= phi:
                found = True
                rlo = min(rlo, xlo)
                rhi = max(rhi, phi)
        if ylo < 0.0:
            b = down(zhi / ylo) if ylo != -INF else 0.0
            plo = max(xlo, b)
            if plo <= xhi:
                found = True
                rlo = min(rlo, plo)
                rhi = max(rhi, xhi)
    if not found:
        return xlo, xhi, True
    return rlo, rhi, False


@njit(cache=True)
def forward(op, ca, cb, arg, clo, chi, start, end, box_lo, box_hi, vlo, vhi):
    """Evaluate nodes ``start..end-1``; returns False on an empty/NaN result."""
    for i in range(start, end):
        o = op[i]
        if o == OP_CONST:
            lo, hi = clo[i], chi[i]
        elif o == OP_VAR:
            lo, hi = box_lo[arg[i]], box_hi[arg[i]]
        elif o == OP_ADD:
            lo, hi = iadd(vlo[ca[i]], vhi[ca[i]], vlo[cb[i]], vhi[cb[i]])
        elif o == OP_SUB:
            lo, hi = isub(vlo[ca[i]], vhi[ca[i]], vlo[cb[i]], vhi[cb[i]])
        elif o == OP_MUL:
            lo, hi = imul(vlo[ca[i]], vhi[ca[i]], vlo[cb[i]], vhi[cb[i]])
        elif o == OP_NEG:
            lo, hi = -vhi[ca[i]], -vlo[ca[i]]
        elif o == OP_POWI:
            lo, hi = ipowi(vlo[ca[i]], vhi[ca[i]], arg[i])
        elif o == OP_EXP:
            lo, hi = iexp(vlo[ca[i]], vhi[ca[i]])
        elif o == OP_LOG:
            if vhi[ca[i]] <= 0.0:
                return False
            lo, hi = ilog(vlo[ca[i]], vhi[ca[i]])
        elif o == OP_SIN:
            lo, hi = isin(vlo[ca[i]], vhi[ca[i]])
        elif o == OP_COS:
            lo, hi = icos(vlo[ca[i]], vhi[ca[i]])
        else:
            if vhi[ca[i]] < 0.0:
                return False
            lo, hi = isqrt(vlo[ca[i]], vhi[ca[i]])
        if not (lo <= hi):
            return False
        vlo[i] = lo
        vhi[i] = hi
    return True


@njit(cache=True)
def _narrow(vlo, vhi, j, lo, hi):
    nlo = max(vlo[j], lo)
    nhi = min(vhi[j], hi)
    if nlo > nhi:
        return False
    vlo[j] = nlo
    vhi[j] = nhi
    return True


@njit(cache=True)
def revise(op, ca, cb, arg, clo, chi, start, end, rlo, rhi, box_lo, box_hi, vlo, vhi):
    """HC4-revise of ``rlo <= f <= rhi`` on the tape slice; narrows the box in place.

    Returns False when the constraint has no solution in the box."""
    if not forward(op, ca, cb, arg, clo, chi, start, end, box_lo, box_hi, vlo, vhi):
        return False
    root = end - 1
    if not _narrow(vlo, vhi, root, rlo, rhi):
        return False
    for i in range(root, start - 1, -1):
        o = op[i]
        zlo = vlo[i]
        zhi = vhi[i]
        if o == OP_CONST:
            continue
        elif o == OP_VAR:
            j = arg[i]
            nlo = max(box_lo[j], zlo)
            nhi = min(box_hi[j], zhi)
            if nlo > nhi:
                return False
            box_lo[j] = nlo
            box_hi[j] = nhi
        elif o == OP_ADD:
            a = ca[i]
            b = cb[i]
            lo, hi = isub(zlo, zhi, vlo[b], vhi[b])
            if not _narrow(vlo, vhi, a, lo, hi):
                return False
            lo, hi = isub(zlo, zhi, vlo[a], vhi[a])
            if not _narrow(vlo, vhi, b, lo, hi):
                return False
        elif o == OP_SUB:
            a = ca[i]
            b = cb[i]
            lo, hi = iadd(zlo, zhi, vlo[b], vhi[b])
            if not _narrow(vlo, vhi, a, lo, hi):
                return False
            lo, hi = isub(vlo[a], vhi[a], zlo, zhi)
            if not _narrow(vlo, vhi, b, lo, hi):
                return False
        elif o == OP_MUL:
            a = ca[i]
            b = cb[i]
            lo, hi, empty = ediv_hull(vlo[a], vhi[a], zlo, zhi, vlo[b], vhi[b])
            if empty:
                return False
            vlo[a] = lo
            vhi[a] = hi
            lo, hi, empty = ediv_hull(vlo[b], vhi[b], zlo, zhi, vlo[a], vhi[a])
            if empty:
                return False
            vlo[b] = lo
            vhi[b] = hi
        elif o == OP_NEG:
            if not _narrow(vlo, vhi, ca[i], -zhi, -zlo):
                return False
        elif o == OP_POWI:
            a = ca[i]
            n = arg[i]
            if n == 0:
                continue
            if n == 1:
                if not _narrow(vlo, vhi, a, zlo, zhi):
                    return False
            elif n % 2 == 1:
                if not _narrow(vlo, vhi, a, _signed_root_lo(zlo, n), _signed_root_hi(zhi, n)):
                    return False
            else:
                if zhi < 0.0:
                    return False
                r_lo = _root_lo(max(zlo, 0.0), n)
                r_hi = _root_hi(zhi, n)
                xlo = vlo[a]
                xhi = vhi[a]
                # union of [-r_hi, -r_lo] and [r_lo, r_hi], intersected with x
                found = False
                nlo = INF
                nhi = -INF
                plo = max(xlo, r_lo)
                phi = min(xhi, r_hi)
                if plo <= phi:
                    found = True
                    nlo = plo
                    nhi = phi
                plo = max(xlo, -r_hi)
                phi = min(xhi, -r_lo)
                if plo <= phi:
                    found = True
                    nlo = min(nlo, plo)
                    nhi = max(nhi, phi)
                if not found:
                    return False
                vlo[a] = nlo
                vhi[a] = nhi
        elif o == OP_EXP:
            if zhi <= 0.0:
                return False
            lo, hi = ilog(max(zlo, 0.0), zhi)
            if not _narrow(vlo, vhi, ca[i], lo, hi):
                return False
        elif o == OP_LOG:
            lo, hi = iexp(zlo, zhi)
            if not _narrow(vlo, vhi, ca[i], lo, hi):
                return False
        elif o == OP_SQRT:
            if zhi < 0.0:
                return False
            lo, hi = imul(max(zlo, 0.0), zhi, max(zlo, 0.0), zhi)
            if not _narrow(vlo, vhi, ca[i], lo, hi):
                return False
        # SIN / COS: no backward projection
    return True


@njit(cache=True)
def propagate(op, ca, cb, arg, clo, chi, c_start, c_end, c_lo, c_hi,
              v_ptr, v_cons, box_lo, box_hi, vlo, vhi, ratio, max_revisions):
    """AC3-style fixpoint of HC4-revise over all constraints.

    Returns (feasible, revisions)."""
    n_cons = c_start.shape[0]
    n_vars = box_lo.shape[0]
    queue = np.empty(n_cons, dtype=np.int64)
    queued = np.ones(n_cons, dtype=np.bool_)
    for k in range(n_cons):
        queue[k] = k
    head = 0
    size = n_cons
    revisions = 0
    old_lo = np.empty(n_vars)
    old_hi = np.empty(n_vars)
    while size > 0 and revisions < max_revisions:
        c = queue[head]
        head = (head + 1) % n_cons
        size -= 1
        queued[c] = False
        for j in range(n_vars):
            old_lo[j] = box_lo[j]
            old_hi[j] = box_hi[j]
        revisions += 1
        if not revise(op, ca, cb, arg, clo, chi, c_start[c], c_end[c], c_lo[c], c_hi[c],
                      box_lo, box_hi, vlo, vhi):
            return False, revisions
        for j in range(n_vars):
            w_old = old_hi[j] - old_lo[j]
            w_new = box_hi[j] - box_lo[j]
            if w_new < w_old and (w_old == INF or (w_old - w_new) > ratio * w_old):
                for t in range(v_ptr[j], v_ptr[j + 1]):
                    d = v_cons[t]
                    if not queued[d] and d != c:
                        queued[d] = True
                        queue[(head + size) % n_cons] = d
                        size += 1
    return True, revisions


@njit(cache=True)
def certify(op, ca, cb, arg, clo, chi, c_start, c_end, c_lo, c_hi, c_weak,
            box_lo, box_hi, vlo, vhi, delta):
    """Classify a box against every constraint.

    Returns 2 if every point of the box delta-satisfies all constraints,
    1 if each constraint is delta-consistent (its range meets the weakened
    target), 0 otherwise."""
    inside = True
    for c in range(c_start.shape[0]):
        if not forward(op, ca, cb, arg, clo, chi, c_start[c], c_end[c], box_lo, box_hi, vlo, vhi):
            return 0
        r = c_end[c] - 1
        lo = vlo[r]
        hi = vhi[r]
        if c_weak[c]:
            tlo = c_lo[c] - delta
            thi = c_hi[c] + delta
        else:
            tlo = c_lo[c]
            thi = c_hi[c]
        if hi < tlo or lo > thi:
            return 0
        if lo < tlo or hi > thi:
            inside = False
    return 2 if inside else 1


@njit(cache=True)
def split_point(lo, hi):
    if lo == -np.inf and hi == np.inf:
        return 0.0
    if lo == -np.inf:
        return min(hi - 1.0, 2.0 * hi)
    if hi == np.inf:
        return max(lo + 1.0, 2.0 * lo)
    return 0.5 * lo + 0.5 * hi


@njit(cache=True)
def _split_var(box_lo, box_hi, init_w):
    best = -1
    best_r = -1.0
    for j in range(box_lo.shape[0]):
        w = box_hi[j] - box_lo[j]
        mid = split_point(box_lo[j], box_hi[j])
        # a domain at floating point resolution cannot be split any further
        if init_w[j] > 0.0 and w > 0.0 and box_lo[j] < mid < box_hi[j]:
            r = w / init_w[j]
            if r > best_r:
                best_r = r
                best = j
    return best


@njit(cache=True)
def dfs(op, ca, cb, arg, clo, chi, c_start, c_end, c_lo, c_hi, c_weak,
        v_ptr, v_cons, init_w, stack_lo, stack_hi, depth, delta, width_target,
        ratio, max_revisions, max_nodes, out_lo, out_hi):
    """Depth-first branch and prune from a stack of boxes.

    Returns (status, depth, nodes, revisions) where status is
    0 = stack exhausted, 1 = delta-sat box written to out_lo/out_hi,
    2 = node budget spent, 3 = stack full."""
    n_vars = stack_lo.shape[1]
    n_nodes = op.shape[0]
    vlo = np.empty(n_nodes)
    vhi = np.empty(n_nodes)
    box_lo = np.empty(n_vars)
    box_hi = np.empty(n_vars)
    nodes = 0
    revisions = 0
    cap = stack_lo.shape[0]
    while depth > 0:
        if nodes >= max_nodes:
            return 2, depth, nodes, revisions
        depth -= 1
        for j in range(n_vars):
            box_lo[j] = stack_lo[depth, j]
            box_hi[j] = stack_hi[depth, j]
        nodes += 1
        ok, rev = propagate(op, ca, cb, arg, clo, chi, c_start, c_end, c_lo, c_hi,
                            v_ptr, v_cons, box_lo, box_hi, vlo, vhi, ratio, max_revisions)
        revisions += rev
        if not ok:
            continue
        cert = certify(op, ca, cb, arg, clo, chi, c_start, c_end, c_lo, c_hi, c_weak,
                       box_lo, box_hi, vlo, vhi, delta)
        if cert == 0:
            continue
        w = 0.0
        for j in range(n_vars):
            w = max(w, box_hi[j] - box_lo[j])
        j = _split_var(box_lo, box_hi, init_w)
        if cert == 2 or w <= width_target or j < 0:
            for t in range(n_vars):
                out_lo[t] = box_lo[t]
                out_hi[t] = box_hi[t]
            return 1, depth, nodes, revisions
        if depth + 2 > cap:
            # put the box back so the caller can grow the stack
            for t in range(n_vars):
                stack_lo[depth, t] = box_lo[t]
                stack_hi[depth, t] = box_hi[t]
            return 3, depth + 1, nodes, revisions
        mid = split_point(box_lo[j], box_hi[j])
        # upper half pushed first so the lower half is explored first
        for t in range(n_vars):
            stack_lo[depth, t] = box_lo[t]
            stack_hi[depth, t] = box_hi[t]
            stack_lo[depth + 1, t] = box_lo[t]
            stack_hi[depth + 1, t] = box_hi[t]
        stack_lo[depth, j] = mid
        stack_hi[depth + 1, j] = mid
        depth += 2
    return 0, depth, nodes, revisions
