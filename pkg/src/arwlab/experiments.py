"""Experiment drivers: initial sampling, continuous-time dynamics, scans
over system size and parameters, and deterministic multi-process fan-out.

Replica seeds derive from the master seed and integer indices only, never
from worker identity or scheduling, so a scan's aggregated output is
byte-identical for any worker count.  Scan rows use one CSV schema:
seed,d,n,mu,lambda,particles,topplings,fixation_time,terminated.
"""

import csv
import io
import json
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dfield

import numpy as np
import scipy.stats

from . import rng
from .engine import Configuration, StandardField, stabilize
from .lattice import Topology, nested_boxes
from .strategies import greedy_order, idla_stabilize, staged_torus_procedure

CSV_COLUMNS = (
    "seed",
    "d",
    "n",
    "mu",
    "lambda",
    "particles",
    "topplings",
    "fixation_time",
    "terminated",
)

SCAN_CAP = 10**8


def sample_initial(topology: Topology, mu: float, seed: int) -> Configuration:
    """Poisson(mu) active particles per site, a pure function of the seed.

    Inverse-CDF sampling from our own uniforms keeps the draw independent
    of any generator's internal state.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if mu == 0:
        return Configuration.empty(topology)
    words = rng.derive_array(seed, np.arange(topology.n_sites))
    u = (words.astype(np.float64) + 0.5) * 2.0**-64
    counts = scipy.stats.poisson.ppf(u, mu).astype(np.int64)
    return Configuration(counts)


@dataclass
class ContinuousOutcome:
    """Continuous-time run result.  status is "stabilized", "timeout", or
    "cap"; time is the fixation time when stabilized, else the horizon
    reached."""

    config: Configuration
    odometer: np.ndarray
    time: float
    topplings: int
    killed: int
    events: int
    status: str


_STATUS = {0: "stabilized", 1: "timeout", 2: "cap"}


def simulate_continuous(
    topology,
    config,
    field,
    clock_seed,
    t_max=math.inf,
    cap=10**9,
    use_kernel=None,
):
    """Run the continuous-time dynamics until the configuration is stable.

    Every particle carries an exponential clock of rate 1 + lambda; each
    ring picks a site with probability proportional to its particle count
    and topples it if it holds an active particle (a ring on a sleeping
    particle does nothing).  The toppling instructions come from `field`,
    so the final configuration and odometer agree with `stabilize` on the
    same field whenever both finish.
    """
    clock_a = rng.derive(clock_seed, 0)
    clock_b = rng.derive(clock_seed, 1)
    out = config.copy()
    odometer = np.zeros(topology.n_sites, dtype=np.int64)
    killed_before = out.killed

    if getattr(field, "kernel_ready", False) and use_kernel is not False:
        from . import kernels

        if kernels.HAVE_NUMBA:
            streams, thresholds = field.kernel_params()
            t, topplings, killed, events, status = kernels.simulate_continuous_kernel(
                out.state,
                odometer,
                topology.neighbor_table,
                streams,
                thresholds,
                2 * topology.d,
                np.uint64(clock_a),
                np.uint64(clock_b),
                float(field.lam),
                float(t_max),
                int(cap),
            )
            out.killed += int(killed)
            return ContinuousOutcome(
                out, odometer, float(t), int(topplings), int(killed), int(events),
                _STATUS[int(status)],
            )

    state = out.state
    nbrs = topology.neighbor_table
    lam = field.lam
    total = int(np.where(state == -1, 1, state).sum())
    unstable = int((state >= 1).sum())
    t = 0.0
    events = 0
    topplings = 0
    killed = 0
    status = 0
    while unstable > 0:
        if topplings >= cap:
            status = 2
            break
        u1 = rng.stream_value(clock_a, events)
        u2 = rng.stream_value(clock_b, events)
        events += 1
        rate = (1.0 + lam) * total
        dt = -math.log((u1 + 0.5) * 2.0**-64) / rate
        if t + dt > t_max:
            t = t_max
            status = 1
            break
        t += dt
        target = u2 % total
        acc = 0
        x = 0
        for i in range(state.shape[0]):
            w = 1 if state[i] == -1 else state[i]
            if w > 0:
                acc += w
                if acc > target:
                    x = i
                    break
        if state[x] < 1:
            continue
        ins = field.instruction(x, int(odometer[x]))
        odometer[x] += 1
        topplings += 1
        if ins == -1:
            if state[x] == 1:
                state[x] = -1
                unstable -= 1
        else:
            y = int(nbrs[x, ins])
            state[x] -= 1
            if state[x] == 0:
                unstable -= 1
            if y < 0:
                killed += 1
                total -= 1
            else:
                if state[y] == -1:
                    state[y] = 2
                    unstable += 1
                else:
                    state[y] += 1
                    if state[y] == 1:
                        unstable += 1
    out.killed = killed_before + killed
    return ContinuousOutcome(
        out, odometer, float(t), topplings, killed, events, _STATUS[status]
    )


# -- scan plumbing


@dataclass
class ScanRow:
    seed: int
    d: int
    n: int
    mu: float
    lam: float
    particles: int
    topplings: int
    fixation_time: float | None
    terminated: bool
    killed: int = 0

    def csv_values(self):
        return (
            str(self.seed),
            str(self.d),
            str(self.n),
            repr(float(self.mu)),
            repr(float(self.lam)),
            str(self.particles),
            str(self.topplings),
            "" if self.fixation_time is None else repr(float(self.fixation_time)),
            "1" if self.terminated else "0",
        )


def _fit_log_growth(sizes, medians, d):
    """Least squares of ln(median) against n^d; returns slope, intercept,
    r_squared (nan when degenerate)."""
    xs, ys = [], []
    for n, m in zip(sizes, medians):
        if m is not None and m > 0:
            xs.append(float(n) ** d)
            ys.append(math.log(m))
    if len(xs) < 2:
        return {"slope": math.nan, "intercept": math.nan, "r_squared": math.nan}
    x = np.asarray(xs)
    y = np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(((y - fitted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else math.nan
    return {"slope": float(slope), "intercept": float(intercept), "r_squared": r2}


def _quantiles(values):
    if not values:
        return None, None, None
    v = np.asarray(values, dtype=np.float64)
    return (
        float(np.quantile(v, 0.25)),
        float(np.median(v)),
        float(np.quantile(v, 0.75)),
    )


def wilson_interval(successes: int, total: int, z: float = 1.96):
    """Wilson score interval for a binomial proportion."""
    if total <= 0:
        raise ValueError("need at least one trial")
    p = successes / total
    denom = 1.0 + z * z / total
    center = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# task functions are module level so process pools can pickle them


def _fixation_task(args):
    d, n, mu, lam, rseed, cap, t_max = args
    t = Topology.torus(n, d)
    config = sample_initial(t, mu, rng.derive(rseed, 0))
    field = StandardField(t, lam, rng.derive(rseed, 1))
    res = simulate_continuous(
        t, config, field, rng.derive(rseed, 2), t_max=t_max, cap=cap
    )
    done = res.status == "stabilized"
    return ScanRow(
        seed=rseed,
        d=d,
        n=n,
        mu=mu,
        lam=lam,
        particles=config.particle_count(),
        topplings=res.topplings,
        fixation_time=res.time if done else None,
        terminated=done,
    )


def _mn_task(args):
    d, n, mu, lam, rseed, cap = args
    t = Topology.box(n, d)
    config = sample_initial(t, mu, rng.derive(rseed, 0))
    field = StandardField(t, lam, rng.derive(rseed, 1))
    res = stabilize(t, config, field, cap=cap)
    return ScanRow(
        seed=rseed,
        d=d,
        n=n,
        mu=mu,
        lam=lam,
        particles=config.particle_count(),
        topplings=res.topplings,
        fixation_time=None,
        terminated=res.stabilized,
        killed=res.killed,
    )


def _map_tasks(task_fn, payloads, workers):
    if workers <= 1:
        return [task_fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, payloads, chunksize=max(1, len(payloads) // (4 * workers))))


@dataclass
class ScanResult:
    rows: list
    summary: dict

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_values())
        return buf.getvalue()


def fixation_scan(
    d,
    n_list,
    mu,
    lam,
    replicas,
    seed,
    cap=SCAN_CAP,
    t_max=math.inf,
    workers=1,
) -> ScanResult:
    """Continuous-time runs over a ladder of torus sizes.

    Per size: quantiles of topplings and fixation time over stabilized
    replicas plus censoring counts; overall: a least-squares fit of
    ln(median topplings) against n^d.
    """
    payloads = [
        (d, n, mu, lam, rng.derive(seed, n, r), cap, t_max)
        for n in n_list
        for r in range(replicas)
    ]
    rows = _map_tasks(_fixation_task, payloads, workers)
    per_n = []
    medians = []
    for i, n in enumerate(n_list):
        chunk = rows[i * replicas : (i + 1) * replicas]
        done = [r for r in chunk if r.terminated]
        q25, med, q75 = _quantiles([r.topplings for r in done])
        tq25, tmed, tq75 = _quantiles([r.fixation_time for r in done])
        medians.append(med)
        per_n.append(
            {
                "n": n,
                "replicas": replicas,
                "stabilized": len(done),
                "censored": replicas - len(done),
                "topplings": {"q25": q25, "median": med, "q75": q75},
                "fixation_time": {"q25": tq25, "median": tmed, "q75": tq75},
            }
        )
    summary = {
        "kind": "fixation",
        "d": d,
        "mu": mu,
        "lambda": lam,
        "per_n": per_n,
        "fit": _fit_log_growth(n_list, medians, d),
    }
    return ScanResult(rows=rows, summary=summary)


def mn_scan(d, n_list, mu, lam, replicas, seed, cap=SCAN_CAP, workers=1) -> ScanResult:
    """Killed-mass scan on boxes: estimates E[M_n] / n^d with stderr.

    M_n counts particles absorbed at the boundary during stabilization,
    i.e. initial mass minus surviving mass."""
    payloads = [
        (d, n, mu, lam, rng.derive(seed, n, r), cap)
        for n in n_list
        for r in range(replicas)
    ]
    rows = _map_tasks(_mn_task, payloads, workers)
    per_n = []
    for i, n in enumerate(n_list):
        chunk = rows[i * replicas : (i + 1) * replicas]
        ratios = np.array([r.killed / n**d for r in chunk])
        stderr = (
            float(ratios.std(ddof=1) / math.sqrt(len(ratios)))
            if len(ratios) > 1
            else math.nan
        )
        per_n.append(
            {
                "n": n,
                "replicas": replicas,
                "censored": sum(1 for r in chunk if not r.terminated),
                "mean_ratio": float(ratios.mean()),
                "stderr": stderr,
            }
        )
    summary = {"kind": "mn", "d": d, "mu": mu, "lambda": lam, "per_n": per_n}
    return ScanResult(rows=rows, summary=summary)


def phase_scan(
    d,
    n_list,
    mu_list,
    lambda_list,
    replicas,
    seed,
    cap=SCAN_CAP,
    workers=1,
) -> ScanResult:
    """Trend-based phase portrait over a (mu, lambda) grid.

    Labels are heuristic and say so: "fast-like" when median topplings
    stay within a small factor of n^d, "slow-like" when their logs grow
    convincingly with n^d, otherwise "ambiguous".  No critical-parameter
    claims are made.
    """
    payloads = []
    for ci, (mu, lam) in enumerate(
        (m, l) for m in mu_list for l in lambda_list
    ):
        for n in n_list:
            for r in range(replicas):
                payloads.append(
                    (d, n, mu, lam, rng.derive(seed, ci, n, r), cap, math.inf)
                )
    rows = _map_tasks(_fixation_task, payloads, workers)
    cells = []
    per_cell = len(n_list) * replicas
    for ci, (mu, lam) in enumerate((m, l) for m in mu_list for l in lambda_list):
        cell_rows = rows[ci * per_cell : (ci + 1) * per_cell]
        medians = []
        for i, n in enumerate(n_list):
            chunk = cell_rows[i * replicas : (i + 1) * replicas]
            done = [r.topplings for r in chunk if r.terminated]
            medians.append(float(np.median(done)) if done else None)
        label = classify_trend(n_list, medians, d)
        cells.append(
            {
                "mu": mu,
                "lambda": lam,
                "medians": medians,
                "fit": _fit_log_growth(n_list, medians, d),
                "label": label,
            }
        )
    summary = {
        "kind": "phase",
        "d": d,
        "n_list": list(n_list),
        "classification": "heuristic trend labels, not phase boundaries",
        "cells": cells,
    }
    return ScanResult(rows=rows, summary=summary)


def classify_trend(n_list, medians, d) -> str:
    """Heuristic label from the growth of median topplings with n^d."""
    usable = [(n, m) for n, m in zip(n_list, medians) if m is not None and m > 0]
    if len(usable) < 2:
        return "ambiguous"
    scaled = [m / n**d for n, m in usable]
    growth = max(scaled) / min(scaled)
    if growth <= 3.0:
        return "fast-like"
    fit = _fit_log_growth([n for n, _ in usable], [m for _, m in usable], d)
    if growth > 10.0 and fit["slope"] > 0 and fit["r_squared"] > 0.8:
        return "slow-like"
    return "ambiguous"


# -- shell spreading experiment


def shell_sites(d: int, radius: float):
    """Integer sites x with radius <= |x|_2 <= radius + 1, sorted."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    reach = int(math.ceil(radius)) + 1
    lo2, hi2 = radius * radius, (radius + 1.0) * (radius + 1.0)
    out = []
    if d == 1:
        for x in range(-reach, reach + 1):
            if lo2 <= x * x <= hi2:
                out.append(x)
    else:
        import itertools

        for c in itertools.product(range(-reach, reach + 1), repeat=d):
            s2 = sum(v * v for v in c)
            if lo2 <= s2 <= hi2:
                out.append(c)
    if not out:
        raise ValueError("empty shell; enlarge radius")
    return sorted(out)


@dataclass
class IdlaEstimate:
    """Estimated chance the origin ends occupied after jump-only spreading
    of floor(beta * radius^d) particles dropped on the radius shell."""

    d: int
    beta: float
    radius: float
    replicas: int
    particles: int
    hits: int
    estimate: float
    wilson_low: float
    wilson_high: float

    def to_json(self):
        return asdict(self)


def idla_fluctuation(d, beta, radius, replicas, seed) -> IdlaEstimate:
    """Monte Carlo estimate of the origin-occupation probability.

    Particles start on the shell at Euclidean distance about `radius`
    (none closer), the worst placement allowed to the density class; the
    enclosing box is sized so no particle can reach its boundary, making
    the run exact for the infinite lattice.
    """
    m = int(math.floor(beta * radius**d))
    shell = shell_sites(d, radius)
    half = int(math.ceil(radius)) + m + 4
    n = 2 * half + 1
    t = Topology.box(n, d)
    origin = t.index(0 if d == 1 else (0,) * d)
    hits = 0
    for r in range(replicas):
        rs = rng.derive(seed, r)
        state = np.zeros(t.n_sites, dtype=np.int64)
        for j in range(m):
            u = rng.stream_value(rng.derive(rs, 0), j)
            state[t.index(shell[u % len(shell)])] += 1
        config = Configuration(state)
        res = idla_stabilize(t, config, rng.derive(rs, 1))
        if not res.stabilized or res.killed:
            raise RuntimeError("spread escaped its enclosing box")
        if res.config.state[origin] != 0:
            hits += 1
    est = hits / replicas
    low, high = wilson_interval(hits, replicas)
    return IdlaEstimate(
        d=d,
        beta=beta,
        radius=radius,
        replicas=replicas,
        particles=m,
        hits=hits,
        estimate=est,
        wilson_low=low,
        wilson_high=high,
    )


# -- chain bound experiment


def chain_bound_rows(n, d, k_max, lam, m_list, mc_replicas, seed, instances=1):
    """Random ordered sets on the torus: reversibility bound vs Monte Carlo.

    Per instance: sample k in 2..k_max distinct sites, build the reduced
    chain, and compare min(1, M nu(k+1)) against an empirical
    P(T_{k+1} <= M) for each M.  Returns header + rows for CSV output.
    """
    from .chain1d import absorption_bound, build_chain, simulate_absorption

    if d != 1:
        raise ValueError("chain reduction is exercised on one-dimensional tori")
    t = Topology.torus(n, d)
    header = ("instance", "k", "lambda", "m_steps", "bound", "estimate", "stderr")
    rows = []
    m_cap = max(m_list)
    for inst in range(instances):
        rs = rng.derive(seed, inst)
        k = 2 + rng.stream_value(rng.derive(rs, 0), 0) % (k_max - 1) if k_max > 2 else 2
        picked = []
        j = 0
        while len(picked) < k:
            u = rng.stream_value(rng.derive(rs, 1), j) % t.n_sites
            j += 1
            if u not in picked:
                picked.append(int(u))
        ordered = greedy_order(picked, t)
        chain = build_chain(ordered, t, lam)
        samples = simulate_absorption(chain, rng.derive(rs, 2), mc_replicas, max_steps=m_cap)
        for m_steps in m_list:
            bound = absorption_bound(chain, m_steps).bound
            est = float((samples <= m_steps).mean())
            se = math.sqrt(est * (1 - est) / mc_replicas)
            rows.append(
                (
                    str(inst),
                    str(k),
                    repr(float(lam)),
                    str(m_steps),
                    repr(float(bound)),
                    repr(est),
                    repr(se),
                )
            )
    return header, rows


# -- staged experiment


def staged_runs(n, d, mu, lam, replicas, seed, a=None, epsilon=None, c=None, beta=0.1, cap=SCAN_CAP):
    """Repeat the staged stabilization on sampled configurations.

    Geometry comes either from an explicit (a, epsilon) pair or from an
    admissible constant c via stage_params.
    """
    from .bounds import stage_params

    if a is None or epsilon is None:
        if c is None:
            raise ValueError("give (a, epsilon) or c")
        params = stage_params(c, d, mu, lam, beta=beta)
        a = params.a if a is None else a
        epsilon = params.epsilon if epsilon is None else epsilon
    boxes = nested_boxes(n, d, a)
    t = boxes.topology
    reports = []
    for r in range(replicas):
        rs = rng.derive(seed, r)
        config = sample_initial(t, mu, rng.derive(rs, 0))
        field = StandardField(t, lam, rng.derive(rs, 1))
        reports.append(staged_torus_procedure(t, config, field, boxes, epsilon, cap=cap))
    successes = sum(1 for rep in reports if rep.success)
    summary = {
        "kind": "staged",
        "n": n,
        "d": d,
        "mu": mu,
        "lambda": lam,
        "a": a,
        "epsilon": epsilon,
        "replicas": replicas,
        "successes": successes,
        "success_rate": successes / replicas if replicas else math.nan,
    }
    return reports, summary


# -- experiment spec and runner

SCAN_KINDS = ("fixation", "mn", "phase")
ALL_KINDS = SCAN_KINDS + ("stabilize", "idla", "chain-bound", "staged")


@dataclass
class ExperimentSpec:
    """Declarative description of one experiment run.

    Unused fields for a given kind are ignored; validate() enforces the
    ones the kind needs.  JSON round-trips via to_json/from_json, and the
    CLI overlays flag values on top of a loaded spec.
    """

    kind: str
    d: int = 1
    n: int = 8
    n_list: list = dfield(default_factory=list)
    mu: float = 0.3
    mu_list: list = dfield(default_factory=list)
    lam: float = 1.0
    lambda_list: list = dfield(default_factory=list)
    replicas: int = 50
    seed: int = 1
    cap: int = SCAN_CAP
    t_max: float = math.inf
    workers: int = 1
    topology: str = "torus"
    beta: float = 0.1
    radius: float = 10.0
    k_max: int = 4
    m_list: list = dfield(default_factory=lambda: [10, 100, 1000])
    instances: int = 1
    mc_replicas: int = 10**4
    a_ratio: float | None = None
    epsilon: float | None = None
    c: float | None = None
    out: str | None = None

    def validate(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.kind in SCAN_KINDS and not self.n_list:
            raise ValueError(f"{self.kind} needs n_list")
        if self.kind == "phase" and not (self.mu_list and self.lambda_list):
            raise ValueError("phase needs mu_list and lambda_list")
        if self.kind == "staged" and self.c is None and (
            self.a_ratio is None or self.epsilon is None
        ):
            raise ValueError("staged needs c or both a_ratio and epsilon")
        return self

    def to_json(self) -> dict:
        obj = asdict(self)
        if math.isinf(self.t_max):
            obj["t_max"] = None
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown spec fields: {sorted(extra)}")
        obj = dict(obj)
        if obj.get("t_max") is None:
            obj["t_max"] = math.inf
        return cls(**obj)


def _package_version() -> str:
    try:
        from importlib.metadata import version

        base = version("arwlab")
    except Exception:
        base = "unknown"
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        git = desc.stdout.strip() if desc.returncode == 0 else ""
    except Exception:
        git = ""
    return f"{base}+{git}" if git else base


@dataclass
class RunArtifacts:
    spec: ExperimentSpec
    result: object
    summary: dict
    files: list


def run(spec: ExperimentSpec) -> RunArtifacts:
    """Execute an experiment spec and, when `out` is set, write its
    outputs plus a JSON manifest (spec echo, version, wall time).

    Outputs are rendered before anything touches the filesystem, so a
    failed run leaves no partial files.
    """
    spec.validate()
    started = time.time()
    texts = {}  # suffix -> text
    if spec.kind == "fixation":
        result = fixation_scan(
            spec.d, spec.n_list, spec.mu, spec.lam, spec.replicas, spec.seed,
            cap=spec.cap, t_max=spec.t_max, workers=spec.workers,
        )
        summary = result.summary
        texts[".csv"] = result.csv_text()
    elif spec.kind == "mn":
        result = mn_scan(
            spec.d, spec.n_list, spec.mu, spec.lam, spec.replicas, spec.seed,
            cap=spec.cap, workers=spec.workers,
        )
        summary = result.summary
        texts[".csv"] = result.csv_text()
    elif spec.kind == "phase":
        result = phase_scan(
            spec.d, spec.n_list, spec.mu_list, spec.lambda_list, spec.replicas,
            spec.seed, cap=spec.cap, workers=spec.workers,
        )
        summary = result.summary
        texts[".csv"] = result.csv_text()
    elif spec.kind == "stabilize":
        t = Topology(spec.topology, spec.n, spec.d)
        config = sample_initial(t, spec.mu, rng.derive(spec.seed, 0))
        field = StandardField(t, spec.lam, rng.derive(spec.seed, 1))
        outcome = stabilize(t, config, field, cap=spec.cap)
        result = outcome
        summary = {
            "kind": "stabilize",
            "topology": t.to_config(),
            "mu": spec.mu,
            "lambda": spec.lam,
            "particles": config.particle_count(),
            "topplings": outcome.topplings,
            "killed": outcome.killed,
            "stabilized": outcome.stabilized,
        }
        texts[".json"] = json.dumps(outcome.to_json(), indent=1) + "\n"
    elif spec.kind == "idla":
        result = idla_fluctuation(
            spec.d, spec.beta, spec.radius, spec.replicas, spec.seed
        )
        summary = result.to_json()
        texts[".json"] = json.dumps(summary, indent=1) + "\n"
    elif spec.kind == "chain-bound":
        header, rows = chain_bound_rows(
            spec.n, spec.d, spec.k_max, spec.lam, spec.m_list,
            spec.mc_replicas, spec.seed, instances=spec.instances,
        )
        result = (header, rows)
        summary = {
            "kind": "chain-bound",
            "instances": spec.instances,
            "rows": len(rows),
        }
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        texts[".csv"] = buf.getvalue()
    elif spec.kind == "staged":
        reports, summary = staged_runs(
            spec.n, spec.d, spec.mu, spec.lam, spec.replicas, spec.seed,
            a=spec.a_ratio, epsilon=spec.epsilon, c=spec.c, beta=spec.beta,
            cap=spec.cap,
        )
        result = reports
        texts[".json"] = (
            json.dumps(
                {"summary": summary, "reports": [r.to_json() for r in reports]},
                indent=1,
            )
            + "\n"
        )
    else:  # pragma: no cover - validate() already rejected it
        raise ValueError(f"unknown kind {spec.kind!r}")

    files = []
    if spec.out:
        manifest = {
            "spec": spec.to_json(),
            "version": _package_version(),
            "wall_seconds": time.time() - started,
            "summary": summary,
        }
        for suffix, text in texts.items():
            path = spec.out + suffix
            with open(path, "w") as fh:
                fh.write(text)
            files.append(path)
        mpath = spec.out + ".manifest.json"
        with open(mpath, "w") as fh:
            json.dump(manifest, fh, indent=1)
            fh.write("\n")
        files.append(mpath)
    return RunArtifacts(spec=spec, result=result, summary=summary, files=files)


