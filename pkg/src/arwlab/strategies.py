"""Toppling strategies: greedy orderings, the loop-return exploration that
realizes the reduced chain, IDLA spreading, and the staged stabilization
of a torus that keeps a boundary ring untouched.

All procedures consume instructions through the engine, so their runs
compose with plain stabilization (shared odometer, shared stacks) and the
abelian property applies to whatever legal prefix they perform.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .engine import (
    SLEEP,
    Configuration,
    JumpOnlyField,
    SleepFreeOutsideField,
    StabilizeOutcome,
    _topple_idx,
)
from .lattice import BoxFamily, Topology


@dataclass(frozen=True)
class OrderedSet:
    """Sites in greedy order with their consecutive gaps.

    gaps[j] is the lattice distance from sites[j] to sites[j+1], and by
    construction also the distance from sites[j] to the nearest site
    appearing after it.
    """

    sites: tuple
    gaps: tuple


def greedy_order(sites, topology: Topology) -> OrderedSet:
    """Order a nonempty site set greedily by nearest-neighbor hops.

    Starts at the lexicographically smallest site; each successive site is
    the closest remaining one to the last chosen, ties broken
    lexicographically (row-major index order).
    """
    idx = sorted(topology.index(s) for s in sites)
    if not idx:
        raise ValueError("site set must be nonempty")
    if len(idx) != len(set(idx)):
        raise ValueError("site set has repeats")
    remaining = np.array(idx[1:], dtype=np.int64)
    order = [idx[0]]
    gaps = []
    while remaining.size:
        dist = topology.distance_from(order[-1])[remaining]
        best = np.flatnonzero(dist == dist.min())[0]  # remaining is sorted
        gaps.append(int(dist[best]))
        order.append(int(remaining[best]))
        remaining = np.delete(remaining, best)
    return OrderedSet(
        sites=tuple(topology.site(i) for i in order), gaps=tuple(gaps)
    )


@dataclass(frozen=True)
class BoundCheck:
    sum_log_gaps: float
    budget_log: float  # n^d * ln kappa_d
    satisfied: bool


def product_bound_check(ordered: OrderedSet, topology: Topology) -> BoundCheck:
    """Compare sum of log gaps against the geometric budget n^d ln kappa_d."""
    from .bounds import kappa

    s = float(np.log(np.asarray(ordered.gaps, dtype=np.float64)).sum()) if ordered.gaps else 0.0
    budget = topology.n_sites * kappa(topology.d).log
    return BoundCheck(sum_log_gaps=s, budget_log=budget, satisfied=s <= budget)


def spread_to_singles(topology, config, sites, field, cap=10**8):
    """Drive |A| active particles to one active particle on each site of A.

    Topples any site of A holding two or more particles and any occupied
    site off A, under a field with no sleep instructions outside A.  No
    particle ever falls asleep along the way.  Returns the final
    configuration (the indicator of A) and the odometer.
    """
    if not isinstance(field, SleepFreeOutsideField):
        raise ValueError("needs a sleep-free-outside field")
    aset = frozenset(topology.index(s) for s in sites)
    if aset != field.allowed:
        raise ValueError("field's sleep-allowed set must equal the target set")
    if np.any(config.state == -1):
        raise ValueError("initial particles must all be active")
    if config.particle_count() != len(aset):
        raise ValueError("particle count must equal the target set size")
    out = config.copy()
    odometer = np.zeros(topology.n_sites, dtype=np.int64)

    def bad(x):
        v = out.state[x]
        return v >= 2 if x in aset else v >= 1

    queue = deque(int(x) for x in np.flatnonzero(out.state) if bad(int(x)))
    inq = np.zeros(topology.n_sites, dtype=bool)
    inq[list(queue)] = True
    topplings = 0
    while queue:
        if topplings >= cap:
            raise RuntimeError(f"spread cap {cap} exceeded")
        x = queue.popleft()
        inq[x] = False
        ins = _topple_idx(topology, out, odometer, field, x, mode="legal")
        topplings += 1
        if ins != SLEEP:
            y = int(topology.neighbor_table[x, ins])
            if y >= 0 and bad(y) and not inq[y]:
                queue.append(y)
                inq[y] = True
        if bad(x) and not inq[x]:
            queue.append(x)
            inq[x] = True
    expected = np.zeros(topology.n_sites, dtype=np.int64)
    expected[list(aset)] = 1
    if not np.array_equal(out.state, expected):
        raise RuntimeError("spread finished off the target configuration")
    return out, odometer


@dataclass
class LoopRunRecord:
    """One loop-return run: steps until absorption, topplings landing on
    the ordered set, total topplings, and the J-counter trajectory."""

    steps: int
    topplings_on_set: int
    total_topplings: int
    j_trajectory: list


def loop_return_procedure(topology, ordered: OrderedSet, field, cap=10**7) -> LoopRunRecord:
    """Topple through an ordered set, following each ejected particle's
    loop until it returns.

    Starting from one active particle per site, step t topples the
    J(t)-th site; a sleep advances J, a jump sends the particle on a walk
    (toppling wherever it stands) until it loops back, and J drops by one
    exactly when the walk touched the previous site.  Stops at J = k+1.
    Every step topples the ordered set at least once, so topplings on the
    set dominate the step count.
    """
    if topology.kind != "torus":
        raise ValueError("loop returns need a torus")
    if not isinstance(field, SleepFreeOutsideField):
        raise ValueError("needs a sleep-free-outside field")
    idx = [topology.index(s) for s in ordered.sites]
    if frozenset(idx) != field.allowed:
        raise ValueError("field's sleep-allowed set must equal the ordered set")
    k = len(idx)
    state = np.zeros(topology.n_sites, dtype=np.int64)
    state[idx] = 1
    config = Configuration(state)
    odometer = np.zeros(topology.n_sites, dtype=np.int64)
    aset = frozenset(idx)
    nbrs = topology.neighbor_table

    j = 1
    trajectory = [1]
    steps = 0
    on_set = 0
    total = 0
    while j <= k:
        x = idx[j - 1]
        ins = _topple_idx(topology, config, odometer, field, x, mode="legal")
        total += 1
        on_set += 1
        if ins == SLEEP:
            j += 1
        else:
            prev = idx[j - 2] if j >= 2 else -1
            pos = int(nbrs[x, ins])
            visited_prev = False
            while pos != x:
                if pos == prev:
                    visited_prev = True
                if total >= cap:
                    raise RuntimeError(f"loop-return cap {cap} exceeded")
                ins2 = _topple_idx(topology, config, odometer, field, pos, mode="legal")
                total += 1
                if pos in aset:
                    on_set += 1
                if ins2 != SLEEP:
                    pos = int(nbrs[pos, ins2])
            if visited_prev:
                j -= 1
        steps += 1
        trajectory.append(j)
        if total >= cap:
            raise RuntimeError(f"loop-return cap {cap} exceeded")
    return LoopRunRecord(
        steps=steps, topplings_on_set=on_set, total_topplings=total, j_trajectory=trajectory
    )


def idla_stabilize(topology, config, seed, cap=10**9) -> StabilizeOutcome:
    """Stabilize under jump-only stacks: topple while some site holds two
    or more particles, then let every remaining lone particle sleep.

    The final sleep costs no instruction and no odometer increment, so
    `topplings` counts jumps.  A single particle therefore settles where
    it stands with zero jumps.
    """
    field = JumpOnlyField(topology, seed)
    out = config.copy()
    killed_before = out.killed
    odometer = np.zeros(topology.n_sites, dtype=np.int64)
    queue = deque(int(x) for x in np.flatnonzero(out.state >= 2))
    inq = np.zeros(topology.n_sites, dtype=bool)
    inq[list(queue)] = True
    jumps = 0
    while queue:
        if jumps >= cap:
            return StabilizeOutcome(out, odometer, jumps, out.killed - killed_before, False)
        x = queue.popleft()
        inq[x] = False
        ins = _topple_idx(topology, out, odometer, field, x, mode="legal")
        jumps += 1
        y = int(topology.neighbor_table[x, ins])
        if y >= 0 and out.state[y] >= 2 and not inq[y]:
            queue.append(y)
            inq[y] = True
        if out.state[x] >= 2 and not inq[x]:
            queue.append(x)
            inq[x] = True
    out.state[out.state == 1] = -1
    return StabilizeOutcome(out, odometer, jumps, out.killed - killed_before, True)


@dataclass
class StageStep:
    name: str
    success: bool | None  # None = not attempted
    topplings: int

    def to_json(self):
        return {"name": self.name, "success": self.success, "topplings": self.topplings}


@dataclass
class StageReport:
    """Outcome of the staged stabilization of a torus.

    success requires every stage to succeed; boundary_untouched records
    whether the outer ring of the whole torus (internal boundary of box 0)
    was ever toppled, read off the final odometer.
    """

    steps: list
    escaped: int | None
    boundary_untouched: bool
    success: bool
    config: Configuration
    odometer: np.ndarray
    total_topplings: int

    def to_json(self):
        return {
            "steps": [s.to_json() for s in self.steps],
            "escaped": self.escaped,
            "boundary_untouched": self.boundary_untouched,
            "success": self.success,
            "total_topplings": self.total_topplings,
        }


def staged_torus_procedure(
    topology, config, field, boxes: BoxFamily, epsilon, cap=10**8
) -> StageReport:
    """Stabilize a torus in stages that protect the outer boundary ring.

    Stage 0 checks the initial particles all sit in the small box B2.
    Stage 1 stabilizes B2, letting escapers pile up just outside; it
    succeeds if at most epsilon * n^d escaped.  Stage 2 walks each
    escaper (re-toppling through its own sleeps, which is acceptable
    rather than legal) until it reaches the inner ring of the middle box
    B1, failing if any walk touches the tiny box B3.  Stage 3 spreads
    piles IDLA-style, toppling only multiply-occupied sites, failing if a
    particle lands on the torus' outer ring or back on B2's outer ring.
    Stage 4 topples each remaining active site once and succeeds when
    every draw is a sleep.  On full success the configuration is stable
    and the outer ring was never toppled, so the run's odometer equals
    the unconstrained stabilization odometer.
    """
    from . import engine

    if topology.kind != "torus":
        raise ValueError("staged procedure runs on a torus")
    if boxes.topology != topology:
        raise ValueError("box family belongs to a different topology")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")

    n_sites = topology.n_sites
    odometer = np.zeros(n_sites, dtype=np.int64)
    out = config.copy()
    steps = [StageStep(f"stage{i}", None, 0) for i in range(5)]
    b2 = boxes.boxes[2]
    b3 = boxes.boxes[3]
    ring_b1 = boxes.internal[1]
    forbidden3 = boxes.internal[0] | boxes.external[2]
    outside_b2 = np.array(
        [i for i in range(n_sites) if i not in b2], dtype=np.int64
    )

    def finish():
        untouched = bool(np.all(odometer[list(boxes.internal[0])] == 0))
        total = int(sum(s.topplings for s in steps))
        success = all(s.success for s in steps)
        return StageReport(
            steps=steps,
            escaped=escaped,
            boundary_untouched=untouched,
            success=success,
            config=out,
            odometer=odometer,
            total_topplings=total,
        )

    escaped = None
    steps[0].success = bool(
        outside_b2.size == 0 or np.all(out.state[outside_b2] == 0)
    )
    steps[0].topplings = 0
    if not steps[0].success:
        return finish()

    outcome = engine.stabilize(
        topology, out, field, region=b2, cap=cap, odometer=odometer
    )
    out = outcome.config
    steps[1].topplings = outcome.topplings
    escaped = out.particle_count(outside_b2) if outside_b2.size else 0
    steps[1].success = bool(outcome.stabilized and escaped <= epsilon * n_sites)
    if not steps[1].success:
        return finish()

    nbrs = topology.neighbor_table
    step2_topplings = 0
    failed2 = False
    starts = sorted(boxes.external[2])
    counts = {s: (1 if out.state[s] == -1 else int(out.state[s])) for s in starts}
    for s in starts:
        if failed2:
            break
        for _ in range(counts[s]):
            cur = s
            while cur not in ring_b1:
                if step2_topplings >= cap:
                    failed2 = True
                    break
                ins = _topple_idx(topology, out, odometer, field, cur, mode="acceptable")
                step2_topplings += 1
                if ins != SLEEP:
                    cur = int(nbrs[cur, ins])
                    if cur in b3:
                        failed2 = True
                        break
            if failed2:
                break
    steps[2].topplings = step2_topplings
    steps[2].success = not failed2
    if failed2:
        return finish()

    step3_topplings = 0
    failed3 = False
    queue = deque(int(x) for x in np.flatnonzero(out.state >= 2))
    inq = np.zeros(n_sites, dtype=bool)
    inq[list(queue)] = True
    while queue:
        if step3_topplings >= cap:
            failed3 = True
            break
        x = queue.popleft()
        inq[x] = False
        ins = _topple_idx(topology, out, odometer, field, x, mode="legal")
        step3_topplings += 1
        if ins != SLEEP:
            y = int(nbrs[x, ins])
            if y in forbidden3:
                failed3 = True
                break
            if out.state[y] >= 2 and not inq[y]:
                queue.append(y)
                inq[y] = True
        if out.state[x] >= 2 and not inq[x]:
            queue.append(x)
            inq[x] = True
    steps[3].topplings = step3_topplings
    steps[3].success = not failed3
    if failed3:
        return finish()

    step4_topplings = 0
    failed4 = False
    for x in np.flatnonzero(out.state >= 1):
        ins = _topple_idx(topology, out, odometer, field, int(x), mode="legal")
        step4_topplings += 1
        if ins != SLEEP:
            failed4 = True
            break
    steps[4].topplings = step4_topplings
    steps[4].success = not failed4
    return finish()
