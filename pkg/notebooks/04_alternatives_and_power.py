"""
Alternatives and a small power study
====================================

Theoretical moments of the alternative families, then empirical size and power
with a reduced number of replicates (the full tables use 1000 reps).
"""

from bpgof.alts import theoretical_moments
from bpgof.harness import simulate_power, simulate_size

families = ["BB(2;0.61,0.01,0.01)", "BPP(0.40;(0.2,0.2,0.1);(1.0,0.9,0.1))", "BLS(3d/7,2d/7,2d/7)",
            "BNTA(0.42;0.01,0.01,0.98)", "BNB(4;0.93,0.01,0.01)"]
for fam in families:
    m = theoretical_moments(fam)
    print(f"{fam:<40} var/mean={m.dispersion[0]:.3f},{m.dispersion[1]:.3f} rho={m.rho:.3f}")

size = simulate_size((1.0, 1.0, 0.25), ns=(50,), statistics=("T", "W"), reps=100, B=200, seed=1,
                     keep_pvalues=False)
for row in size:
    print("size ", row["statistic"], f"f05={row['f05']:.3f} f10={row['f10']:.3f} ks_p={row['ks_p']:.3f}")

for fam in families[:3]:
    for row in simulate_power(fam, ns=(50,), statistics=("T", "W", "IB"), reps=100, B=200, seed=1,
                              keep_pvalues=False):
        print("power", fam, row["statistic"], f"f05={row['f05']:.3f} undefined={row['failures']}")
