"""
Convergence on a disc
=====================

Solve (-Delta)^s u = 1 on a disc of radius 0.45 with zero exterior values and
compare against the explicit solution. The fitted rate approaches
min(1, s + 1/2) as N grows.
"""

import time

from sincfraclap.solver import convergence_study, study_csv

t0 = time.perf_counter()
rows = convergence_study(d=2, s_list=[0.25, 0.5, 0.75], n_list=[16, 32, 64, 128, 256])
print(study_csv(rows, f"total={time.perf_counter() - t0:.1f}s"))

for s in (0.25, 0.5, 0.75):
    r = next(r for r in rows if r.s == s)
    print(f"s = {s}: fitted rate {r.rate:.3f}, asymptotic rate {min(1.0, s + 0.5):.3f}")

# Up to N = 256 the larger exponents are still short of their asymptotic rate;
# extending the list to N = 512 moves them closer.

# The same study is available from the shell:
#   sincfraclap bench --dim 2 --s-list 1/4,1/2,3/4 --n-list 16,32,64,128,256
