"""
Jump-only spreading from a shell
================================

Drop floor(beta * R^d) particles on the shell at distance R and let them
spread under jump-only stacks (the lambda = infinity dynamics: a lone
particle freezes where it stands).  The question is how often the origin
ends up occupied; for small beta the answer is basically never.
"""

from arwlab.experiments import idla_fluctuation

for d, beta, radius in ((2, 0.05, 10.0), (2, 0.5, 6.0), (1, 0.05, 10.0)):
    est = idla_fluctuation(d, beta, radius, replicas=400, seed=9)
    print(f"d={d} beta={beta} R={radius}: {est.particles} particles, "
          f"origin occupied {est.hits}/400 "
          f"(wilson [{est.wilson_low:.4f}, {est.wilson_high:.4f}])")
