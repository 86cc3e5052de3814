"""
Watching a concentration bound
==============================

Label every point of a ground set uniformly with one of q labels and sum a
tuple weight over the tuples whose labels spell a fixed pattern.  The sum
concentrates around its mean and the lab compares the empirical tails with
the analytic bound.
"""

from nibble.oracle import concentration_lab, shipped_configs

for cfg in shipped_configs():
    res = concentration_lab(cfg)
    print(f"{cfg.name}: mean {res.empirical_mean:.2f} vs {res.analytic_mean:.2f}  "
          f"(std {res.empirical_std:.2f}, g ok: {res.g_ok})")
    for lam, tail, bound in zip(res.lambdas, res.tails, res.bounds):
        if bound < 1:
            print(f"    lambda {lam:9.2f}  tail {tail:.4f}  bound {bound:.4f}")
    for note in res.notes:
        print("    note:", note)
