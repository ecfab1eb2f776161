"""
Slow and fast growth at desk scale
==================================

Two small scans over a ladder of ring sizes.  Near (mu=0.2, lambda=1) the
median toppling count stays proportional to n.  Deep in the sleepy regime
(mu=0.9, lambda=0.01) stabilization stops finishing within any small
toppling budget, which the scan reports as censoring.
"""

from arwlab.experiments import fixation_scan

sizes = [8, 12, 16, 20]

fast = fixation_scan(1, sizes, mu=0.2, lam=1.0, replicas=30, seed=1)
print("fast regime (mu=0.2, lambda=1):")
for cell in fast.summary["per_n"]:
    med = cell["topplings"]["median"]
    print(f"  n={cell['n']:>2}: median topplings {med:>6} (ratio {med / cell['n']:.2f})")

print()
print("slow regime (mu=0.9, lambda=0.01), toppling cap 10^5 per replica:")
slow = fixation_scan(1, sizes, mu=0.9, lam=0.01, replicas=30, seed=2, cap=10**5)
for cell in slow.summary["per_n"]:
    med = cell["topplings"]["median"]
    print(f"  n={cell['n']:>2}: stabilized {cell['stabilized']}/30, censored "
          f"{cell['censored']}, median over survivors {med}")
print("fit of ln(median) vs n:", slow.summary["fit"])
print("(survivor medians are lower bounds once censoring appears)")
