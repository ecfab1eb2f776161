"""Acceptance gate: one test per criterion, with the stated budgets.

Each test pins its instance generation to fixed seeds so a pass is
reproducible, and asserts its own wall-clock budget.

Criterion 9's slow arm fails by design.  Its growth fit is defined over
stabilized replicas only, and in the slow regime stabilization within any
affordable toppling cap is a lottery on the initial draw: the survivor
fraction at n=8 is ~12% at caps 1e6 and 1e7 alike, survivor medians are
capped from above, and the measured fit over the three sizes with any
survivors has R^2 ~ 0.25.  The test runs the mandated parameters at the
largest feasible cap and fails with the censoring numbers rather than
weakening the check (a two-point fit would "pass" with a vacuous R^2 of
1.0, which the support-count guard rejects).
"""

import math
import time

import numpy as np
import pytest

from arwlab import (
    Configuration,
    ReducedChain,
    SleepFreeOutsideField,
    StandardField,
    Topology,
    absorption_bound,
    active_phase_condition,
    build_chain,
    greedy_order,
    hitting_prob_exact,
    idla_fluctuation,
    kappa,
    log_binomial_bound,
    log_nu_top_closed_form,
    loop_return_procedure,
    nested_boxes,
    nu_measure,
    product_bound_check,
    simulate_absorption,
    stabilize,
    stage_params,
    staged_torus_procedure,
)
from arwlab.experiments import fixation_scan, sample_initial


def _random_instance(master, max_particles=8, n_hi=5, sleepers=True):
    """Small torus with a stabilizable particle placement (stacks allowed)."""
    d = int(master.integers(1, 3))
    n = int(master.integers(2, n_hi + 1))
    topo = Topology.torus(n, d)
    cap = min(max_particles, topo.n_sites)
    p = int(master.integers(1, cap + 1))
    state = np.bincount(
        master.integers(0, topo.n_sites, size=p), minlength=topo.n_sites
    ).astype(np.int64)
    if sleepers:
        singles = np.flatnonzero(state == 1)
        for x in singles:
            if master.random() < 0.3:
                state[x] = -1
    return topo, Configuration(state)


def test_criterion_01_abelian_policy_independence():
    t0 = time.monotonic()
    master = np.random.default_rng(77)
    for i in range(200):
        topo, cfg = _random_instance(master)
        lam = float(master.choice([0.5, 1.0]))
        field = StandardField(topo, lam, seed=1000 + i)
        runs = [
            stabilize(topo, cfg, field, policy="fifo"),
            stabilize(topo, cfg, field, policy="lowest"),
            stabilize(topo, cfg, field, policy="random", policy_seed=i),
        ]
        assert all(r.stabilized for r in runs)
        for r in runs[1:]:
            assert r.config == runs[0].config
            assert np.array_equal(r.odometer, runs[0].odometer)
    assert time.monotonic() - t0 < 10


def test_criterion_02_monotone_odometers():
    t0 = time.monotonic()
    master = np.random.default_rng(88)
    for i in range(100):
        topo, hi = _random_instance(master, max_particles=10, n_hi=6)
        lo_state = hi.state.copy()
        for x in range(topo.n_sites):
            v = int(lo_state[x])
            if v == 0:
                continue
            options = [0, -1] if v == -1 else [0, -1] + list(range(1, v + 1))
            lo_state[x] = options[int(master.integers(0, len(options)))]
        lo = Configuration(lo_state)
        field = StandardField(topo, 1.0, seed=2000 + i)
        small = stabilize(topo, lo, field)
        big = stabilize(topo, hi, field)
        assert small.stabilized and big.stabilized
        assert (small.odometer <= big.odometer).all()
    assert time.monotonic() - t0 < 10


def test_criterion_03_acceptable_sequence_dominates_legal():
    t0 = time.monotonic()
    fam = nested_boxes(15, 1, 0.28)
    topo = fam.topology
    successes = 0
    with_escapes = 0
    seed = 0
    while successes < 50:
        assert seed < 400, "staged success rate collapsed"
        eta = sample_initial(topo, 0.15, seed)
        field = StandardField(topo, 2.0, 10_000 + seed)
        rep = staged_torus_procedure(topo, eta, field, fam, epsilon=0.5)
        seed += 1
        if not rep.success:
            continue
        successes += 1
        assert rep.config.is_stable()
        if rep.escaped:
            with_escapes += 1
        for policy in ("fifo", "lowest", "random"):
            legal = stabilize(topo, eta, field, policy=policy, policy_seed=seed)
            assert legal.stabilized
            assert (legal.odometer <= rep.odometer).all()
    # the batch exercises runs where stage 2 toppled sleeping particles
    assert with_escapes >= 1
    assert time.monotonic() - t0 < 30


def test_criterion_04_hitting_probability_bound():
    t0 = time.monotonic()
    for d in (1, 2):
        for n in range(2, 11):
            topo = Topology.torus(n, d)
            for xi in range(topo.n_sites):
                for yi in range(topo.n_sites):
                    if xi == yi:
                        continue
                    x, y = topo.site(xi), topo.site(yi)
                    p, res = hitting_prob_exact(topo, x, y, with_residual=True)
                    assert res <= 1e-10
                    assert p >= 1.0 / (2 * d * topo.distance(x, y)) - 1e-12
    for n in range(2, 65):
        cyc = Topology.torus(n, 1)
        want = n / (2.0 * (n - 1))
        assert abs(hitting_prob_exact(cyc, 0, 1) - want) <= 1e-12
    assert time.monotonic() - t0 < 60


def test_criterion_05_reversibility_and_product_form():
    t0 = time.monotonic()
    master = np.random.default_rng(555)
    for _ in range(100):
        k = int(master.integers(1, 21))
        q = master.uniform(1e-6, 1.0, size=k - 1)
        lam = float(np.exp(master.uniform(math.log(0.01), math.log(100.0))))
        chain = ReducedChain(k=k, lam=lam, q=q)
        meas = nu_measure(chain)
        assert meas.detailed_balance_residual() <= 1e-12
        assert abs(log_nu_top_closed_form(chain) - meas.log_nu_top()) <= 1e-9
    assert time.monotonic() - t0 < 5


def test_criterion_06_absorption_time_bound():
    t0 = time.monotonic()
    master = np.random.default_rng(606)
    topo = Topology.torus(8, 1)
    for inst in range(20):
        k = int(master.integers(2, 7))
        sites = sorted(int(s) for s in master.choice(8, size=k, replace=False))
        lam = float(np.exp(master.uniform(math.log(0.05), math.log(2.0))))
        chain = build_chain(greedy_order(sites, topo), topo, lam)
        samples = simulate_absorption(chain, seed=7000 + inst, replicas=10**5,
                                      max_steps=1000)
        for m in (10, 100, 1000):
            est = float((samples <= m).mean())
            se = math.sqrt(est * (1 - est) / 10**5)
            assert est <= absorption_bound(chain, m).bound + 3 * se
    assert time.monotonic() - t0 < 120


def test_criterion_07_loop_runs_match_reduced_chain():
    t0 = time.monotonic()
    topo = Topology.torus(12, 1)
    sites = [0, 2, 5, 9]
    ordered = greedy_order(sites, topo)
    chain = build_chain(ordered, topo, 1.0)
    counts = {}
    visits = {}
    for r in range(10_000):
        field = SleepFreeOutsideField(topo, 1.0, sites, seed=900_000 + r)
        rec = loop_return_procedure(topo, ordered, field)
        assert rec.topplings_on_set >= rec.steps
        traj = rec.j_trajectory
        for a, b in zip(traj, traj[1:]):
            visits[a] = visits.get(a, 0) + 1
            counts[(a, b - a)] = counts.get((a, b - a), 0) + 1
    for j in range(1, chain.k + 1):
        nj = visits[j]
        moves = {1: chain.p_up, 0: chain.p_stay(j)}
        moves[-1] = chain.p_down(j) if j >= 2 else 0.0
        for move, p in moves.items():
            got = counts.get((j, move), 0)
            if p == 0.0:
                assert got == 0
                continue
            sigma = math.sqrt(p * (1 - p) / nj)
            assert abs(got / nj - p) <= 3 * sigma, (j, move, got / nj, p)
    assert time.monotonic() - t0 < 120


def test_criterion_08_gap_product_within_geometric_budget():
    t0 = time.monotonic()
    master = np.random.default_rng(888)
    for _ in range(100):
        n = int(master.integers(2, 17))
        topo = Topology.torus(n, 2)
        k = int(master.integers(1, min(topo.n_sites, 50) + 1))
        picks = master.choice(topo.n_sites, size=k, replace=False)
        ordered = greedy_order([topo.site(int(i)) for i in picks], topo)
        check = product_bound_check(ordered, topo)
        assert check.sum_log_gaps <= check.budget_log
        assert check.satisfied
    assert time.monotonic() - t0 < 10


def test_criterion_09_slow_fast_growth_dichotomy():
    t0 = time.monotonic()
    sizes = [8, 12, 16, 20, 24]

    fast = fixation_scan(1, sizes, mu=0.2, lam=1.0, replicas=50, seed=4243)
    per_n = fast.summary["per_n"]
    assert all(p["censored"] == 0 for p in per_n)
    ratios = [p["topplings"]["median"] / p["n"] for p in per_n]
    assert max(ratios) / min(ratios) <= 10

    # slow arm: mandated parameters under the largest cap a single core
    # affords; survivor medians are lower bounds once censoring appears,
    # and a fit needs at least 3 supported sizes to mean anything
    cap = 10**6
    slow = fixation_scan(1, sizes, mu=0.9, lam=0.01, replicas=500, seed=4242,
                         cap=cap)
    assert time.monotonic() - t0 < 600
    censored = {
        p["n"]: f"{p['censored']}/{p['replicas']}" for p in slow.summary["per_n"]
    }
    supports = sum(
        1 for p in slow.summary["per_n"] if p["topplings"]["median"] is not None
    )
    fit = slow.summary["fit"]
    assert supports >= 3 and fit["slope"] > 0 and fit["r_squared"] > 0.9, (
        "slow-regime growth fit fails at desk scale: survivor medians are "
        f"cap-bounded lower bounds (censored {censored} at toppling cap {cap:.0e}), "
        f"so the fit over {supports} supported sizes gives {fit}; the survivor "
        "fraction is cap-insensitive (lucky initial draws), so no feasible cap "
        "changes this"
    )


def test_criterion_10_staged_runs_match_unconstrained():
    t0 = time.monotonic()
    params = stage_params(6.0, 1, mu=0.5, lam=0.5)
    fam = nested_boxes(20, 1, params.a)
    topo = fam.topology
    ring = sorted(topo.index(s) for s in fam.internal[0])
    successes = 0
    attempt = 0
    while successes < 50:
        assert attempt < 2000, "staged success rate collapsed"
        eta = sample_initial(topo, 0.5, attempt)
        field = StandardField(topo, 0.5, 50_000 + attempt)
        rep = staged_torus_procedure(topo, eta, field, fam, epsilon=params.epsilon)
        attempt += 1
        if not rep.success:
            continue
        successes += 1
        assert rep.boundary_untouched
        assert all(rep.odometer[i] == 0 for i in ring)
        ref = stabilize(topo, eta, field)
        assert rep.config == ref.config
        assert np.array_equal(rep.odometer, ref.odometer)
    assert time.monotonic() - t0 < 120


def test_criterion_11_jump_only_origin_occupation():
    t0 = time.monotonic()
    est2 = idla_fluctuation(2, beta=0.05, radius=10.0, replicas=1000, seed=11)
    assert est2.estimate <= 0.05
    est1 = idla_fluctuation(1, beta=0.05, radius=10.0, replicas=1000, seed=12)
    assert est1.estimate == 0.0
    assert time.monotonic() - t0 < 120


def test_criterion_12_bounds_arithmetic():
    t0 = time.monotonic()
    assert kappa(1).value == pytest.approx(2 * math.exp(4), rel=1e-9)

    good = active_phase_condition(1, 0.5, 1e-5)
    bad = active_phase_condition(1, 0.5, 2e-5)
    assert good.satisfied and good.log_margin == pytest.approx(
        0.023594781085250927, abs=1e-12
    )
    assert not bad.satisfied and bad.log_margin == pytest.approx(
        -0.32297880919472177, abs=1e-12
    )

    ms = [1, 2, 3, 7, 10, 31, 100, 316, 1000, 3162, 10000, 31623, 100000, 316227, 10**6]
    for mu in [round(0.05 * i, 2) for i in range(1, 20)]:
        for m in ms:
            exact, bound = log_binomial_bound(m, mu)
            assert exact <= bound
    assert time.monotonic() - t0 < 5


def test_criterion_13_worker_count_determinism():
    t0 = time.monotonic()
    kw = dict(mu=0.3, lam=1.0, replicas=16, seed=99)
    one = fixation_scan(1, [4, 6, 8], workers=1, **kw)
    eight = fixation_scan(1, [4, 6, 8], workers=8, **kw)
    assert one.csv_text().encode() == eight.csv_text().encode()
    assert one.summary == eight.summary
    assert time.monotonic() - t0 < 60
