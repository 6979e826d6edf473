"""Why plain linear codes cannot hide: the warden's threshold test.

Averaging the centred likelihood ratio over one representative position per
distinct generator column gives a statistic with mean 0 under silence and
mean chi2/2 under uniformly coded transmission, independent of the code.
The script runs the test against codes of growing dimension and prints the
empirical separation next to the analytic bounds, then evaluates the
square-root-law ceiling the detection argument imposes.
"""

import numpy as np

from covertppm import bsc, detect_linear_code, divergence_stats, srl_bound
from covertppm.adversary import identity_prefix_code, random_linear_code

willie = bsc(0.1)
st = divergence_stats(willie.row1, willie.row0)
rng = np.random.default_rng(3)

print(f"Warden channel BSC(0.1): chi2 = {st.chi2:.4f}, threshold "
      f"gamma = {st.chi2 / 4:.4f}, H1 mean target = {st.chi2 / 2:.4f}\n")

print("Unit-weight systematic codes [I_k | 0] (distinct columns = k):")
print(f"  {'k':>4} {'mean T|H0':>10} {'mean T|H1':>10} {'alpha_hat':>10} "
      f"{'alpha bound':>11} {'beta bound':>11}")
for k in (32, 64, 128, 256):
    r = detect_linear_code(identity_prefix_code(1024, k), willie, 20_000, rng)
    print(f"  {k:4d} {r.mean_t_h0:+10.4f} {r.mean_t_h1:10.4f} "
          f"{r.alpha_hat:10.4f} {r.alpha_bound_s:11.4f} {r.beta_bound_s:11.4f}")
print("  the bound is O(1/k): doubling the dimension halves it; the test")
print("  separation itself is many standard deviations at these sizes\n")

r = detect_linear_code(random_linear_code(512, 64, rng), willie, 20_000, rng)
print(f"Random (512, 64) code: |S| = {r.s_size} distinct columns, "
      f"mean T|H1 = {r.mean_t_h1:.4f} (same chi2/2 separation)\n")

print("Square-root-law ceiling for covert linear codes, delta = 1:")
for n in (10_000, 40_000, 160_000):
    mu, m = srl_bound(1.0, n, st.tv)
    print(f"  n = {n:6d}: non-innocent fraction <= {mu:.5f}, "
          f"nonzero columns <= {m:.0f}")
