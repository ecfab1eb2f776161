"""
The reduced chain and its absorption bound
==========================================

Order a site set greedily, reduce the walk dynamics on it to a birth-death
chain, and compare the closed-form absorption bound against Monte Carlo.
"""

import math

from arwlab import Topology, greedy_order
from arwlab.chain1d import (
    absorption_bound,
    build_chain,
    nu_measure,
    simulate_absorption,
)

topo = Topology.torus(16, 1)
ordered = greedy_order([0, 3, 7, 12], topo)
print("ordered sites:", ordered.sites, "gaps:", ordered.gaps)

# small lambda: the chain drifts down, absorption is rare, the bound bites
chain = build_chain(ordered, topo, lam=0.02)
print("up probability:", chain.p_up)
print("down probabilities:", [round(chain.p_down(j), 4) for j in range(2, chain.k + 1)])

meas = nu_measure(chain)
print("detailed balance residual:", meas.detailed_balance_residual())
print("log nu(k+1):", meas.log_nu_top())

samples = simulate_absorption(chain, seed=3, replicas=50_000, max_steps=2000)
for m in (50, 200, 1000):
    est = float((samples <= m).mean())
    se = math.sqrt(est * (1 - est) / 50_000)
    b = absorption_bound(chain, m)
    print(f"M={m:>4}: P(T <= M) ~ {est:.4f} (+-{2*se:.4f})  bound {b.bound:.4f}")
