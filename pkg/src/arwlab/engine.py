"""Configurations, instruction stacks, topplings, and stabilization.

State encoding: a configuration is an int64 vector over sites with
0 = empty, -1 = one sleeping particle, k >= 1 = k active particles.
The site ordering 0 < s < 1 < 2 < ... becomes a total order on codes via
rank(-1) = 1/2.  A sleeping particle counts as one particle.

Instructions are integers: SLEEP (= -1) or a jump direction in
{0 .. 2d-1}, in the lattice's fixed direction order.  The instruction at
(site x, stack index j) is a pure function of the field's seed, so any
two computations of it agree; stacks are never stored.

Toppling a site consumes the instruction at the site's current odometer
value and increments the odometer, whether or not the instruction moved
anything.  A legal toppling requires at least one active particle; an
acceptable toppling also allows a sleeping particle (never an empty
site).  Sleep at a site with a single active particle puts it to sleep;
sleep anywhere else changes nothing.  A jump moves one particle (waking
the source if it was sleeping, i.e. s - 1 = 0) and wakes a sleeping
particle at the destination (s + 1 = 2).  On a box, jumping outside
kills the particle and bumps the configuration's `killed` counter.
"""

import math
import random as _random
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import rng
from .lattice import Topology

SLEEP = -1
SLEEPING = -1

DEFAULT_CAP = 10**9


class Configuration:
    """Particle configuration over a topology's sites.

    Wraps the int64 code vector and a `killed` counter (particles absorbed
    by a box exterior).  `entries` constructors/accessors speak the JSON
    form: 0, "s", or a positive count per site.
    """

    def __init__(self, state, killed: int = 0):
        self.state = np.asarray(state, dtype=np.int64).copy()
        if self.state.ndim != 1:
            raise ValueError("configuration state must be a flat vector")
        if np.any(self.state < -1):
            raise ValueError("invalid site code below -1")
        self.killed = int(killed)

    @classmethod
    def empty(cls, topology: Topology):
        return cls(np.zeros(topology.n_sites, dtype=np.int64))

    @classmethod
    def from_entries(cls, entries):
        state = np.zeros(len(entries), dtype=np.int64)
        for i, e in enumerate(entries):
            if e == "s":
                state[i] = SLEEPING
            else:
                v = int(e)
                if v < 0:
                    raise ValueError(f"negative particle count at site {i}")
                state[i] = v
        return cls(state)

    def to_entries(self):
        return ["s" if v == SLEEPING else int(v) for v in self.state]

    def copy(self):
        return Configuration(self.state, self.killed)

    @property
    def n_sites(self):
        return self.state.shape[0]

    def particle_count(self, region=None) -> int:
        """Number of particles (sleeping ones count once) in `region`."""
        s = self.state if region is None else self.state[np.asarray(region)]
        return int(np.where(s == SLEEPING, 1, s).sum())

    def rank(self) -> np.ndarray:
        """Total-order rank per site: 0, 1/2 for s, then the count."""
        return np.where(self.state == SLEEPING, 0.5, self.state.astype(np.float64))

    def le(self, other) -> bool:
        """Pointwise comparison in the order 0 < s < 1 < 2 < ..."""
        return bool(np.all(self.rank() <= other.rank()))

    def unstable_sites(self, region=None) -> np.ndarray:
        mask = self.state >= 1
        if region is not None:
            keep = np.zeros_like(mask)
            keep[np.asarray(region)] = True
            mask &= keep
        return np.flatnonzero(mask)

    def is_stable(self, region=None) -> bool:
        return self.unstable_sites(region).size == 0

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.state.shape == other.state.shape
            and bool(np.all(self.state == other.state))
        )

    def __repr__(self):
        return f"Configuration({self.to_entries()}, killed={self.killed})"


def particle_count(config: Configuration, region=None) -> int:
    return config.particle_count(region)


def is_stable(config: Configuration, region=None) -> bool:
    return config.is_stable(region)


# -- instruction fields


def sleep_threshold(lam: float) -> int:
    """64-bit threshold: a word u encodes Sleep iff u < threshold.

    threshold/2**64 approximates lambda/(1+lambda); the comparison itself
    is exact integer arithmetic, identical on every execution path.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if math.isinf(lam):
        return rng.MASK64
    p = lam / (1.0 + lam)
    return min(int(p * 2.0**64), rng.MASK64)


def decode(u: int, t_sleep: int, ndirs: int) -> int:
    """Map a 64-bit word to SLEEP or a direction given a sleep threshold."""
    if u < t_sleep:
        return SLEEP
    return ((u - t_sleep) & rng.MASK64) % ndirs


class _MixedField:
    """Shared machinery for fields whose stacks come from the 64-bit mixer."""

    kernel_ready = True

    def __init__(self, topology: Topology, seed: int):
        self.topology = topology
        self.seed = int(seed) & rng.MASK64
        self._streams = rng.derive_array(self.seed, np.arange(topology.n_sites))

    def site_stream(self, x: int) -> int:
        return int(self._streams[x])

    def word(self, x: int, j: int) -> int:
        return rng.stream_value(self.site_stream(x), j)

    def instruction(self, x: int, j: int) -> int:
        return decode(self.word(x, j), int(self.thresholds[x]), 2 * self.topology.d)

    def kernel_params(self):
        """(site streams, per-site sleep thresholds) as uint64 arrays."""
        return self._streams, self.thresholds


class StandardField(_MixedField):
    """i.i.d. stacks, Sleep with weight lambda against 2d unit jump weights."""

    law = "standard"

    def __init__(self, topology: Topology, lam: float, seed: int):
        if not lam >= 0 or math.isinf(lam):
            raise ValueError("standard law needs finite lambda >= 0")
        super().__init__(topology, seed)
        self.lam = float(lam)
        t = sleep_threshold(self.lam)
        self.thresholds = np.full(topology.n_sites, t, dtype=np.uint64)


class SleepFreeOutsideField(_MixedField):
    """Standard law on a marked site set, jump-only everywhere else."""

    law = "sleep-free-outside"

    def __init__(self, topology: Topology, lam: float, allowed, seed: int):
        if not lam >= 0 or math.isinf(lam):
            raise ValueError("needs finite lambda >= 0")
        super().__init__(topology, seed)
        self.lam = float(lam)
        self.allowed = frozenset(int(topology.index(s)) for s in allowed)
        t = sleep_threshold(self.lam)
        thr = np.zeros(topology.n_sites, dtype=np.uint64)
        thr[list(self.allowed)] = t
        self.thresholds = thr


class JumpOnlyField(_MixedField):
    """Jump instructions only (the lambda = infinity regime).

    Plain stabilization under this field cannot finish on a torus; use
    `strategies.idla_stabilize`, whose stopping rule supplies the
    convention that a lone active particle falls asleep on its own.
    """

    law = "jump-only"
    lam = math.inf

    def __init__(self, topology: Topology, seed: int):
        super().__init__(topology, seed)
        self.thresholds = np.zeros(topology.n_sites, dtype=np.uint64)


class ScriptedField:
    """Explicit finite stacks for worked examples and tests.

    stacks: site -> instruction list; JSON form uses "S" and "J<dir>".
    Reading past the end of a stack is an error.
    """

    kernel_ready = False
    law = "scripted"
    lam = None

    def __init__(self, topology: Topology, stacks: dict):
        self.topology = topology
        self.stacks = {}
        for site, instrs in stacks.items():
            x = topology.index(site)
            parsed = []
            for ins in instrs:
                parsed.append(parse_instruction(ins, 2 * topology.d))
            self.stacks[x] = parsed

    @classmethod
    def from_json(cls, topology: Topology, obj: dict):
        return cls(topology, {int(k): v for k, v in obj.items()})

    def to_json(self) -> dict:
        return {
            str(x): [format_instruction(i) for i in instrs]
            for x, instrs in sorted(self.stacks.items())
        }

    def instruction(self, x: int, j: int) -> int:
        stack = self.stacks.get(x, [])
        if j >= len(stack):
            raise ValueError(f"scripted stack exhausted at site {x}, index {j}")
        return stack[j]


def parse_instruction(ins, ndirs: int) -> int:
    """Accept SLEEP/direction ints or the JSON strings "S" / "J<dir>"."""
    if isinstance(ins, str):
        if ins == "S":
            return SLEEP
        if ins.startswith("J"):
            ins = int(ins[1:])
        else:
            raise ValueError(f"bad instruction string {ins!r}")
    ins = int(ins)
    if ins != SLEEP and not 0 <= ins < ndirs:
        raise ValueError(f"direction {ins} out of range")
    return ins


def format_instruction(ins: int) -> str:
    return "S" if ins == SLEEP else f"J{int(ins)}"


def sample_instruction(field, x: int, j: int) -> int:
    """Instruction at stack position (x, j); pure in (field.seed, x, j)."""
    return field.instruction(x, j)


class CoupledSleepInsertionField:
    """Standard(lambda) field coupled to a sleep-free-outside base field.

    On the base's allowed set the two fields agree exactly.  Elsewhere each
    base jump is preceded by an independent Geometric(lambda/(1+lambda))
    number of sleeps, so the marginal law is Standard(lambda) and deleting
    sleeps outside the allowed set recovers the base stacks.
    """

    kernel_ready = False
    law = "coupled-sleep-insertion"

    def __init__(self, base: SleepFreeOutsideField, salt: int = 0x5EE9):
        self.base = base
        self.topology = base.topology
        self.lam = base.lam
        self.p_sleep = base.lam / (1.0 + base.lam)
        self.insert_seed = rng.derive(base.seed, salt)
        # per site: cumulative start position of each base block; block m
        # spans [starts[m], starts[m+1]) and ends with base jump m
        self._starts = {}

    def run_length(self, x: int, m: int) -> int:
        """Sleeps inserted before base jump m at site x (Geometric, mean lambda)."""
        if self.p_sleep == 0.0:
            return 0
        u = rng.uniform01(rng.stream_value(rng.derive(self.insert_seed, x), m))
        return int(math.floor(math.log(u) / math.log(self.p_sleep)))

    def _starts_for(self, x: int, j: int):
        starts = self._starts.setdefault(x, [0])
        while starts[-1] <= j:
            m = len(starts) - 1
            starts.append(starts[-1] + self.run_length(x, m) + 1)
        return starts

    def instruction(self, x: int, j: int) -> int:
        if x in self.base.allowed:
            return self.base.instruction(x, j)
        starts = self._starts_for(x, j)
        import bisect

        m = bisect.bisect_right(starts, j) - 1
        if j < starts[m + 1] - 1:
            return SLEEP
        return self.base.instruction(x, m)


def couple_insert_sleeps(base: SleepFreeOutsideField) -> CoupledSleepInsertionField:
    """Couple a sleep-free-outside field to a full Standard(lambda) field."""
    if not isinstance(base, SleepFreeOutsideField):
        raise ValueError("coupling starts from a sleep-free-outside field")
    return CoupledSleepInsertionField(base)


# -- toppling


def topple(topology, config, odometer, field, x, mode="legal"):
    """Consume one instruction at site x, mutating config and odometer.

    mode "legal" requires an active particle at x; "acceptable" also
    allows a sleeping one.  Returns the consumed instruction.
    """
    return _topple_idx(topology, config, odometer, field, topology.index(x), mode)


def _topple_idx(topology, config, odometer, field, x, mode="legal"):
    # x is a flat index here; public callers go through topple()
    v = config.state[x]
    if mode == "legal":
        if v < 1:
            raise ValueError(f"illegal toppling at site {x}: state {v}")
    elif mode == "acceptable":
        if v == 0:
            raise ValueError(f"unacceptable toppling of empty site {x}")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ins = field.instruction(x, int(odometer[x]))
    odometer[x] += 1
    if ins == SLEEP:
        if config.state[x] == 1:
            config.state[x] = SLEEPING
        # on s (acceptable) or on >= 2 active: nothing changes
    else:
        y = topology.neighbor_table[x, ins]
        config.state[x] = 0 if config.state[x] == SLEEPING else config.state[x] - 1
        if y < 0:
            config.killed += 1
        elif config.state[y] == SLEEPING:
            config.state[y] = 2
        else:
            config.state[y] += 1
    return ins


@dataclass
class StabilizeOutcome:
    """Result of a stabilization run.

    config : final configuration (input is never mutated)
    odometer : per-site toppling counts (cumulative if one was passed in)
    topplings : topplings performed during this run
    killed : particles absorbed by a box exterior during this run
    stabilized : False when the toppling cap cut the run short
    """

    config: Configuration
    odometer: np.ndarray
    topplings: int
    killed: int
    stabilized: bool

    def to_json(self):
        return {
            "config": self.config.to_entries(),
            "odometer": [int(v) for v in self.odometer],
            "topplings": int(self.topplings),
            "killed": int(self.killed),
            "stabilized": bool(self.stabilized),
        }


def _region_mask(topology, region):
    mask = np.zeros(topology.n_sites, dtype=bool)
    if region is None:
        mask[:] = True
    else:
        for s in region:
            mask[topology.index(s)] = True
    return mask


def stabilize(
    topology,
    config,
    field,
    region=None,
    policy="fifo",
    cap=DEFAULT_CAP,
    policy_seed=0,
    use_kernel=None,
    odometer=None,
):
    """Topple sites of `region` until none is unstable, or a cap is hit.

    policy: "fifo" (queue discipline, the default), "lowest" (always the
    smallest-index unstable site), "random" (uniform unstable site, own
    policy_seed stream), or a callable (state, odometer, unstable) -> site
    index.  All policies yield the same final configuration and odometer
    on the same field.  Particles outside `region` are never toppled.

    Passing an existing odometer continues consuming each site's stack
    where a previous run stopped (it is mutated in place).  `topplings`
    in the outcome counts this run only.

    The fifo policy runs through a compiled kernel when the field supports
    it; the kernel is bit-identical to the pure-Python path.
    """
    out = config.copy()
    if odometer is None:
        odometer = np.zeros(topology.n_sites, dtype=np.int64)
    else:
        odometer = np.asarray(odometer)
        if odometer.dtype != np.int64 or odometer.shape != (topology.n_sites,):
            raise ValueError("odometer must be an int64 vector over sites")
    mask = _region_mask(topology, region)
    killed_before = out.killed

    if (
        policy == "fifo"
        and getattr(field, "kernel_ready", False)
        and use_kernel is not False
    ):
        from . import kernels

        if kernels.HAVE_NUMBA:
            streams, thresholds = field.kernel_params()
            topplings, killed, done = kernels.stabilize_fifo(
                out.state,
                odometer,
                topology.neighbor_table,
                mask,
                streams,
                thresholds,
                2 * topology.d,
                int(cap),
            )
            out.killed += int(killed)
            return StabilizeOutcome(out, odometer, int(topplings), int(killed), bool(done))

    topplings = 0
    if policy == "fifo":
        queue, inq = _fifo_init(out.state, mask)
        while queue:
            if topplings >= cap:
                return StabilizeOutcome(
                    out, odometer, topplings, out.killed - killed_before, False
                )
            x = queue.popleft()
            inq[x] = False
            ins = _topple_idx(topology, out, odometer, field, x, mode="legal")
            topplings += 1
            if ins != SLEEP:
                y = topology.neighbor_table[x, ins]
                if y >= 0 and mask[y] and out.state[y] >= 1 and not inq[y]:
                    queue.append(y)
                    inq[y] = True
            if mask[x] and out.state[x] >= 1 and not inq[x]:
                queue.append(x)
                inq[x] = True
        return StabilizeOutcome(
            out, odometer, topplings, out.killed - killed_before, True
        )

    chooser = None
    if policy == "lowest":
        chooser = lambda unstable: unstable[0]
    elif policy == "random":
        rnd = _random.Random(policy_seed)
        chooser = lambda unstable: unstable[rnd.randrange(len(unstable))]
    elif callable(policy):
        pass
    else:
        raise ValueError(f"unknown policy {policy!r}")

    while True:
        unstable = np.flatnonzero((out.state >= 1) & mask)
        if unstable.size == 0:
            return StabilizeOutcome(
                out, odometer, topplings, out.killed - killed_before, True
            )
        if topplings >= cap:
            return StabilizeOutcome(
                out, odometer, topplings, out.killed - killed_before, False
            )
        if chooser is not None:
            x = int(chooser(unstable))
        else:
            x = int(policy(out.state, odometer, unstable))
            if not (mask[x] and out.state[x] >= 1):
                raise ValueError(f"policy chose a non-topplable site {x}")
        _topple_idx(topology, out, odometer, field, x, mode="legal")
        topplings += 1


def _fifo_init(state, mask):
    start = [int(x) for x in np.flatnonzero((state >= 1) & mask)]
    inq = np.zeros(state.shape[0], dtype=bool)
    inq[start] = True
    return deque(start), inq
