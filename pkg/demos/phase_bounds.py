"""Closed-form constants: the gap-product budget, the sleepy-phase
condition, and derived stage parameters, printed for a few parameter
points.  Everything here is arithmetic, no simulation."""

from arwlab.bounds import (
    active_phase_condition,
    admissible_c,
    kappa,
    log_binomial_bound,
    stage_params,
)

for d in (1, 2, 3):
    k = kappa(d)
    print(f"kappa({d}): log = {k.log:.6f}"
          + (f", value = {k.value:.6g}" if k.value != float("inf") else " (value overflows)"))

print()
print("phase condition at mu=0.5, d=1:")
for lam in (1e-5, 2e-5, 0.5):
    cond = active_phase_condition(1, 0.5, lam)
    cc = admissible_c(1, 0.5, lam)
    print(f"  lambda={lam:g}: margin={cond.log_margin:+.4f} satisfied={cond.satisfied}"
          + (f" -> admissible c={cc:.4f}" if cc is not None else ""))

print()
p = stage_params(c=6.0, d=1, mu=0.5, lam=0.5)
print(f"stage_params(c=6, d=1, mu=0.5, lambda=0.5): a={p.a:.6f} epsilon={p.epsilon:.8f}")

print()
print("binomial bound tightness (log scale), mu=0.3:")
for m in (10, 100, 1000, 10**6):
    exact, bound = log_binomial_bound(m, 0.3)
    print(f"  m={m:>7}: exact={exact:12.4f} bound={bound:12.4f} slack={bound - exact:.4f}")
