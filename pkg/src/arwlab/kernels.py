"""Compiled hot loops (numba).  Pure-Python reference paths exist for
everything here and the two are checked bit-identical in the test suite;
if numba is unavailable the package silently falls back to Python.

All randomness is the same splitmix64 stream arithmetic as `rng`, done in
uint64 so the compiled and interpreted paths agree exactly.
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return deco


U_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
U_M1 = np.uint64(0xBF58476D1CE4E5B9)
U_M2 = np.uint64(0x94D049BB133111EB)
U30 = np.uint64(30)
U27 = np.uint64(27)
U31 = np.uint64(31)
U1 = np.uint64(1)

STATUS_STABILIZED = 0
STATUS_TIMEOUT = 1
STATUS_CAP = 2


@njit(cache=True, inline="always")
def _fin(z):
    z = (z ^ (z >> U30)) * U_M1
    z = (z ^ (z >> U27)) * U_M2
    return z ^ (z >> U31)


@njit(cache=True, inline="always")
def _word(stream, j):
    # j-th instruction word of a site stream; j is the odometer value
    return _fin(stream + (np.uint64(j) + U1) * U_GOLDEN)


@njit(cache=True)
def stabilize_fifo(state, odometer, nbrs, mask, streams, thresholds, ndirs, cap):
    """FIFO stabilization; mutates state and odometer in place.

    Returns (topplings, killed, stabilized).  Discipline: pop a site,
    topple once, enqueue a newly destabilized jump target first, then
    re-enqueue the toppled site if it is still unstable.
    """
    n = state.shape[0]
    qcap = n + 1
    queue = np.empty(qcap, np.int64)
    inq = np.zeros(n, np.bool_)
    head = 0
    tail = 0
    for x in range(n):
        if mask[x] and state[x] >= 1:
            queue[tail] = x
            tail = (tail + 1) % qcap
            inq[x] = True
    undirs = np.uint64(ndirs)
    topplings = 0
    killed = 0
    while head != tail:
        if topplings >= cap:
            return topplings, killed, False
        x = queue[head]
        head = (head + 1) % qcap
        inq[x] = False
        u = _word(streams[x], odometer[x])
        odometer[x] += 1
        topplings += 1
        t = thresholds[x]
        if u < t:
            if state[x] == 1:
                state[x] = -1
        else:
            d = np.int64((u - t) % undirs)
            y = nbrs[x, d]
            state[x] = state[x] - 1
            if y < 0:
                killed += 1
            else:
                if state[y] == -1:
                    state[y] = 2
                else:
                    state[y] += 1
                if mask[y] and state[y] >= 1 and not inq[y]:
                    queue[tail] = y
                    tail = (tail + 1) % qcap
                    inq[y] = True
        if mask[x] and state[x] >= 1 and not inq[x]:
            queue[tail] = x
            tail = (tail + 1) % qcap
            inq[x] = True
    return topplings, killed, True


@njit(cache=True, inline="always")
def _fenwick_add(tree, i, delta):
    j = i + 1
    n = tree.shape[0] - 1
    while j <= n:
        tree[j] += delta
        j += j & (-j)


@njit(cache=True)
def _fenwick_search(tree, target, top_bit):
    # smallest index whose prefix sum exceeds target
    pos = 0
    rem = target
    bit = top_bit
    n = tree.shape[0] - 1
    while bit > 0:
        nxt = pos + bit
        if nxt <= n and tree[nxt] <= rem:
            rem -= tree[nxt]
            pos = nxt
        bit >>= 1
    return pos


@njit(cache=True)
def simulate_continuous_kernel(
    state,
    odometer,
    nbrs,
    streams,
    thresholds,
    ndirs,
    clock_a,
    clock_b,
    lam,
    t_max,
    cap,
):
    """Event-driven continuous-time run; mutates state and odometer.

    Each particle (sleeping included) rings at rate 1 + lam; an event
    picks a site with probability proportional to its particle count and
    topples it only if it holds an active particle.  Returns
    (elapsed_time, topplings, killed, events, status).
    """
    n = state.shape[0]
    tree = np.zeros(n + 1, np.int64)
    total = 0
    unstable = 0
    for x in range(n):
        w = 1 if state[x] == -1 else state[x]
        if w > 0:
            _fenwick_add(tree, x, w)
            total += w
        if state[x] >= 1:
            unstable += 1
    top_bit = 1
    while top_bit * 2 <= n:
        top_bit *= 2
    undirs = np.uint64(ndirs)
    t = 0.0
    events = 0
    topplings = 0
    killed = 0
    while unstable > 0:
        if topplings >= cap:
            return t, topplings, killed, events, STATUS_CAP
        u1 = _word(clock_a, events)
        u2 = _word(clock_b, events)
        events += 1
        rate = (1.0 + lam) * total
        dt = -np.log((np.float64(u1) + 0.5) * 2.0**-64) / rate
        if t + dt > t_max:
            return t_max, topplings, killed, events, STATUS_TIMEOUT
        t = t + dt
        x = _fenwick_search(tree, np.int64(u2 % np.uint64(total)), top_bit)
        if state[x] < 1:
            continue
        u = _word(streams[x], odometer[x])
        odometer[x] += 1
        topplings += 1
        thr = thresholds[x]
        if u < thr:
            if state[x] == 1:
                state[x] = -1
                unstable -= 1
        else:
            d = np.int64((u - thr) % undirs)
            y = nbrs[x, d]
            state[x] = state[x] - 1
            if state[x] == 0:
                unstable -= 1
            _fenwick_add(tree, x, -1)
            if y < 0:
                killed += 1
                total -= 1
            else:
                _fenwick_add(tree, y, 1)
                if state[y] == -1:
                    state[y] = 2
                    unstable += 1
                else:
                    state[y] += 1
                    if state[y] == 1:
                        unstable += 1
    return t, topplings, killed, events, STATUS_STABILIZED
