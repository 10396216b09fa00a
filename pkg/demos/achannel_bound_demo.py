"""Theorem-1 achievability bound for the noisy A-channel, paper scale.

Walks through the two cardinality laws, evaluates the PUPE bound at a
paper-scale operating point, and shows the headline effect of insertion
noise: the largest message size B the bound certifies shrinks once the
front end starts inserting false positives.
"""

import numpy as np

from comma.achannel import (
    AChannelParams,
    input_cardinality_law,
    output_cardinality_law,
    theorem1_bound,
)

q, n, eps = 256, 117, 0.05

# --- 1. cardinality laws ---------------------------------------------------
# With K_a users sending i.i.d. uniform symbols, slot-output cardinality
# concentrates well below K_a because of collisions; insertion noise then
# pads each slot with extra symbols.
params = AChannelParams(K_a=50, q=q, n=n, B=200, p_fa=0.05)
p_in = input_cardinality_law(params)
p_out = output_cardinality_law(params)
mean_in = np.arange(1, len(p_in) + 1) @ p_in
mean_out = np.arange(1, len(p_out) + 1) @ p_out
print(f"K_a = {params.K_a}, q = {q}, p_fa = {params.p_fa}")
print(f"  mean slot cardinality before noise: {mean_in:.2f}")
print(f"  mean slot cardinality after noise:  {mean_out:.2f} "
      f"(~{q * params.p_fa:.1f} insertions/slot)")
print()

# --- 2. the bound at a fixed operating point -------------------------------
for p_fa in (0.0, 0.05):
    res = theorem1_bound(AChannelParams(K_a=50, q=q, n=n, B=270, p_fa=p_fa))
    print(f"PUPE bound, B = 270, p_fa = {p_fa}: "
          f"{res.value:.4f} +- {res.half_width:.4f}")
print()

# --- 3. largest certified B vs K_a -----------------------------------------
# Scan B upward until the bound crosses eps.  The noiseless channel supports
# visibly larger messages at every load.
print(f"largest B with bound <= {eps}:")
print(f"{'K_a':>5} {'p_fa=0':>8} {'p_fa=0.05':>10}")
for K_a in (10, 50, 90):
    row = []
    for p_fa in (0.0, 0.05):
        best = None
        for B in range(10, 700, 10):
            r = theorem1_bound(AChannelParams(K_a=K_a, q=q, n=n, B=B, p_fa=p_fa),
                               mc_samples=2_000)
            if r.value <= eps:
                best = B
        row.append(best)
    print(f"{K_a:>5} {str(row[0]):>8} {str(row[1]):>10}")
